//! The non-homogeneous chain that shows how a fast-decaying exploration
//! rate starves the far end of a line: at step `t` the walker moves one
//! state right with probability `t^-alpha` and is sent back to the first
//! state otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub k: u64,
    /// Fraction of runs sitting in the last state at step `k`.
    pub frequency: f64,
    /// `eps_{k-S+1}^{S-1}`.
    pub bound: f64,
    /// Frequency within three binomial standard errors of the bound.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarvationReport {
    pub num_states: usize,
    pub alpha: f64,
    pub horizon: u64,
    pub n_runs: u64,
    pub reached: u64,
    pub reach_fraction: f64,
    pub checks: Vec<BoundCheck>,
}

fn rate(alpha: f64, t: u64) -> f64 {
    (t.max(1) as f64).powf(-alpha)
}

/// Checkpoints `1, 2, 5 x 10^j` at or beyond `S`, up to the horizon.
fn checkpoints(num_states: usize, horizon: u64) -> Vec<u64> {
    let mut ks = Vec::new();
    let mut scale = 1u64;
    while scale <= horizon {
        for f in [1, 2, 5] {
            let k = f * scale;
            if k >= num_states as u64 && k <= horizon {
                ks.push(k);
            }
        }
        scale = scale.saturating_mul(10);
    }
    ks
}

pub fn starvation_demo(
    num_states: usize,
    alpha: f64,
    horizon: u64,
    n_runs: u64,
    seed: u64,
) -> Result<StarvationReport> {
    if num_states < 2 || !(alpha > 0.0) || horizon == 0 || n_runs == 0 {
        return Err(Error::Validation(
            "starvation demo needs S >= 2, alpha > 0, horizon >= 1 and n_runs >= 1".into(),
        ));
    }
    let last = num_states - 1;
    let ks = checkpoints(num_states, horizon);
    let mut at_last = vec![0u64; ks.len()];
    let mut reached = 0;
    for run in 0..n_runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ run);
        let mut state = 0usize;
        let mut hit = false;
        let mut next_check = 0;
        for t in 1..=horizon {
            state = if rng.gen::<f64>() < rate(alpha, t) {
                (state + 1).min(last)
            } else {
                0
            };
            hit |= state == last;
            if next_check < ks.len() && ks[next_check] == t {
                at_last[next_check] += u64::from(state == last);
                next_check += 1;
            }
        }
        reached += u64::from(hit);
    }
    let n = n_runs as f64;
    let checks = ks
        .iter()
        .zip(&at_last)
        .map(|(&k, &count)| {
            let bound = rate(alpha, k + 1 - last as u64).powi(last as i32);
            let frequency = count as f64 / n;
            let slack = 3.0 * (bound * (1.0 - bound) / n).sqrt();
            BoundCheck {
                k,
                frequency,
                bound,
                holds: frequency <= bound + slack,
            }
        })
        .collect();
    Ok(StarvationReport {
        num_states,
        alpha,
        horizon,
        n_runs,
        reached,
        reach_fraction: reached as f64 / n,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_states_are_always_reached() {
        let r = starvation_demo(2, 1.0, 1000, 50, 1).unwrap();
        assert_eq!(r.reach_fraction, 1.0);
    }

    #[test]
    fn tiny_alpha_explores_fully() {
        let r = starvation_demo(6, 1e-6, 1000, 50, 1).unwrap();
        assert_eq!(r.reach_fraction, 1.0);
    }

    #[test]
    fn bound_checks_hold() {
        let r = starvation_demo(4, 0.5, 10_000, 200, 7).unwrap();
        assert!(r.checks.iter().all(|c| c.holds), "{:?}", r.checks);
        assert_eq!(r.checks.first().unwrap().k, 5);
    }

    #[test]
    fn fast_decay_starves() {
        let slow = starvation_demo(6, 0.2, 100_000, 100, 3).unwrap();
        let fast = starvation_demo(6, 1.0, 100_000, 100, 3).unwrap();
        assert!(fast.reach_fraction * 2.0 <= slow.reach_fraction);
    }

    #[test]
    fn invalid_inputs() {
        assert!(starvation_demo(1, 1.0, 10, 1, 0).is_err());
        assert!(starvation_demo(3, 0.0, 10, 1, 0).is_err());
    }
}
