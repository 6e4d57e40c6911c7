//! GLR-proxy stopping rule: stop once `t / U(M_hat, N/t)` exceeds the sum of
//! the reward and transition deviation thresholds at confidence `delta / 2`
//! each.

use serde::Serialize;

use crate::allocation::{hardness_profile, upper_bound_u};
use crate::error::{Error, Result};
use crate::mdp::{solve_optimal_from, TabularMdp, ValueSolution, DEFAULT_SOLVE_TOL};

/// `sum 1/n^2`.
const BASEL_SUM: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Bernoulli KL divergence `kl(p, q)` in nats, with `0 log 0 = 0`.
/// Infinite when `q` is degenerate and `p` puts mass where `q` does not.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    fn term(x: f64, y: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    }
    (term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0)
}

/// KL divergence between two categorical distributions.
pub fn kl_categorical(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&x, &y)| {
            if x == 0.0 {
                0.0
            } else if y == 0.0 {
                f64::INFINITY
            } else {
                x * (x / y).ln()
            }
        })
        .sum::<f64>()
        .max(0.0)
}

fn h(x: f64) -> f64 {
    x - x.ln()
}

/// Inverse of `h(x) = x - ln x` on `[1, inf)`, by bisection.
pub fn h_inverse(y: f64) -> Result<f64> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(Error::Domain(format!("h_inverse needs y >= 1, got {y}")));
    }
    if y == 1.0 {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = y + y.ln() + 1.0;
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The calibration function of the reward deviation threshold.
pub fn varphi(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("varphi needs x >= 0, got {x}")));
    }
    let y = (h_inverse(1.0 + x)? + (2.0 * BASEL_SUM).ln()) / 2.0;
    let branch = h_inverse(1.0 / 1.5f64.ln())?;
    let tilde = if y >= branch {
        let inv = h_inverse(y)?;
        inv * (1.0 / inv).exp()
    } else {
        1.5 * (y - 1.5f64.ln().ln())
    };
    Ok(2.0 * tilde)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdConfig {
    pub delta: f64,
    pub num_states: usize,
    pub num_actions: usize,
    /// `SA varphi(ln(1/delta) / SA)`, fixed for a given configuration.
    reward_base: f64,
}

impl ThresholdConfig {
    pub fn new(delta: f64, num_states: usize, num_actions: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Validation(format!(
                "delta = {delta} must lie in (0, 1)"
            )));
        }
        let sa = (num_states * num_actions) as f64;
        let reward_base = sa * varphi((1.0 / delta).ln() / sa)?;
        Ok(Self {
            delta,
            num_states,
            num_actions,
            reward_base,
        })
    }
}

fn transition_term(n: u64, dof: f64) -> f64 {
    1.0 + (1.0 + n as f64 / dof).ln()
}

fn reward_term(n: u64) -> f64 {
    if n > 1 {
        (1.0 + (n as f64).ln()).ln()
    } else {
        0.0
    }
}

/// `ln(1/delta) + (S-1) sum ln(e (1 + N/(S-1)))`; just `ln(1/delta)` when `S = 1`.
pub fn beta_transitions(counts: &[u64], config: &ThresholdConfig) -> f64 {
    let base = (1.0 / config.delta).ln();
    if config.num_states < 2 {
        return base;
    }
    let dof = (config.num_states - 1) as f64;
    let sum: f64 = counts.iter().map(|&n| transition_term(n, dof)).sum();
    base + dof * sum
}

/// `SA varphi(ln(1/delta)/SA) + 3 sum ln(1 + ln N)`; pairs with `N <= 1`
/// contribute nothing.
pub fn beta_rewards(counts: &[u64], config: &ThresholdConfig) -> f64 {
    let sum: f64 = counts.iter().map(|&n| reward_term(n)).sum();
    config.reward_base + 3.0 * sum
}

/// Running form of [`StoppingRule::threshold`]. Per-pair terms are cached so
/// a step that touches one pair costs two logarithms; the value is bitwise
/// equal to a full evaluation.
#[derive(Debug, Clone)]
pub struct ThresholdTracker {
    config: ThresholdConfig,
    transition_terms: Vec<f64>,
    reward_terms: Vec<f64>,
}

impl ThresholdTracker {
    /// All counts start at zero.
    pub fn new(rule: &StoppingRule) -> Self {
        let config = rule.half.clone();
        let pairs = config.num_states * config.num_actions;
        let dof = (config.num_states.max(2) - 1) as f64;
        Self {
            transition_terms: vec![transition_term(0, dof); pairs],
            reward_terms: vec![0.0; pairs],
            config,
        }
    }

    pub fn update(&mut self, pair: usize, count: u64) {
        let dof = (self.config.num_states.max(2) - 1) as f64;
        self.transition_terms[pair] = transition_term(count, dof);
        self.reward_terms[pair] = reward_term(count);
    }

    pub fn threshold(&self) -> f64 {
        let rewards = self.config.reward_base + 3.0 * self.reward_terms.iter().sum::<f64>();
        let base = (1.0 / self.config.delta).ln();
        let transitions = if self.config.num_states < 2 {
            base
        } else {
            let dof = (self.config.num_states - 1) as f64;
            base + dof * self.transition_terms.iter().sum::<f64>()
        };
        rewards + transitions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopDecision {
    pub stop: bool,
    pub statistic: f64,
    pub threshold: f64,
    /// Solution of the empirical model, reusable as the answer.
    pub solution: ValueSolution,
}

/// Holds the `delta / 2` threshold configuration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    half: ThresholdConfig,
}

impl StoppingRule {
    pub fn new(delta: f64, num_states: usize, num_actions: usize) -> Result<Self> {
        ThresholdConfig::new(delta, num_states, num_actions)?;
        Ok(Self {
            half: ThresholdConfig::new(delta / 2.0, num_states, num_actions)?,
        })
    }

    pub fn delta(&self) -> f64 {
        self.half.delta * 2.0
    }

    /// `beta_r(t, delta/2) + beta_p(t, delta/2)`.
    pub fn threshold(&self, counts: &[u64]) -> f64 {
        beta_rewards(counts, &self.half) + beta_transitions(counts, &self.half)
    }

    pub fn decide(
        &self,
        empirical: &TabularMdp,
        counts: &[u64],
        t: u64,
        warm_policy: Option<&[usize]>,
    ) -> Result<StopDecision> {
        self.decide_with_threshold(empirical, counts, t, warm_policy, self.threshold(counts))
    }

    /// [`Self::decide`] with a threshold computed by the caller, usually
    /// from a [`ThresholdTracker`].
    pub fn decide_with_threshold(
        &self,
        empirical: &TabularMdp,
        counts: &[u64],
        t: u64,
        warm_policy: Option<&[usize]>,
        threshold: f64,
    ) -> Result<StopDecision> {
        if t == 0 {
            return Err(Error::Domain("stopping needs t >= 1".into()));
        }
        if counts.len() != empirical.num_pairs() {
            return Err(Error::Validation("counts do not match the model".into()));
        }
        let solution = solve_optimal_from(empirical, DEFAULT_SOLVE_TOL, warm_policy)?;
        if !solution.unique_optimum {
            return Ok(StopDecision {
                stop: false,
                statistic: 0.0,
                threshold,
                solution,
            });
        }
        let profile = hardness_profile(&solution, empirical.gamma())?;
        let frequencies: Vec<f64> = counts.iter().map(|&n| n as f64 / t as f64).collect();
        let u = upper_bound_u(&profile, &frequencies);
        let statistic = if u.is_finite() { t as f64 / u } else { 0.0 };
        Ok(StopDecision {
            stop: statistic >= threshold,
            statistic,
            threshold,
            solution,
        })
    }
}

/// One-shot form of [`StoppingRule::decide`]; `config.delta` is the overall
/// confidence, split evenly between rewards and transitions.
pub fn stopping_decision(
    empirical: &TabularMdp,
    counts: &[u64],
    t: u64,
    config: &ThresholdConfig,
    warm_policy: Option<&[usize]>,
) -> Result<StopDecision> {
    StoppingRule::new(config.delta, config.num_states, config.num_actions)?.decide(
        empirical,
        counts,
        t,
        warm_policy,
    )
}
