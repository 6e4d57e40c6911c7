use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::ValueSolution;

/// Per-pair hardness `H(s,a)` and the optimal-pair term `H*` of the convex
/// upper bound on the characteristic time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardnessProfile {
    pub num_states: usize,
    pub num_actions: usize,
    /// `H(s,a)` at sub-optimal pairs, 0 at optimal ones. Indexed `s * A + a`.
    pub h: Vec<f64>,
    pub optimal_policy: Vec<usize>,
    pub h_star: f64,
    pub t3: f64,
    pub t4: f64,
}

impl HardnessProfile {
    pub fn is_suboptimal(&self, z: usize) -> bool {
        self.optimal_policy[z / self.num_actions] != z % self.num_actions
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            h: self.h.iter().map(|x| x * factor).collect(),
            h_star: self.h_star * factor,
            t3: self.t3 * factor,
            t4: self.t4 * factor,
            ..self.clone()
        }
    }
}

fn pow_four_thirds(x: f64) -> f64 {
    x * x.cbrt()
}

pub fn hardness_profile(solution: &ValueSolution, gamma: f64) -> Result<HardnessProfile> {
    if !solution.unique_optimum {
        return Err(Error::NonUniqueOptimum);
    }
    let n_s = solution.num_states();
    let n_a = solution.num_actions();
    let span = solution.span;
    let span_43 = pow_four_thirds(span);

    let mut h = vec![0.0; n_s * n_a];
    for s in 0..n_s {
        for a in 0..n_a {
            if solution.is_optimal_pair(s, a) {
                continue;
            }
            let z = s * n_a + a;
            let gap = solution.gaps[z];
            let gap2 = gap * gap;
            let variance_term = 16.0 * solution.value_variance[z] / gap2;
            let span_term = 6.0 * span_43 / pow_four_thirds(gap);
            h[z] = 2.0 / gap2 + variance_term.max(span_term);
        }
    }

    let dmin = solution.min_gap;
    let dmin2 = dmin * dmin;
    let horizon = 1.0 - gamma;
    let var_max = (0..n_s)
        .map(|s| solution.value_variance[s * n_a + solution.optimal_policy[s]])
        .fold(0.0, f64::max);

    let t3 = 2.0 / (dmin2 * horizon * horizon);
    let t4 = (27.0 / (dmin2 * horizon.powi(3))).min(
        (16.0 * var_max / (dmin2 * horizon * horizon))
            .max(6.0 * span_43 / pow_four_thirds(dmin * horizon)),
    );

    Ok(HardnessProfile {
        num_states: n_s,
        num_actions: n_a,
        h,
        optimal_policy: solution.optimal_policy.clone(),
        h_star: n_s as f64 * (t3 + t4),
        t3,
        t4,
    })
}

/// `U(omega) = max_{a != pi*(s)} H(s,a)/omega(s,a) + H*/(S min_s omega(s,pi*(s)))`.
/// Infinite when a needed weight is zero.
pub fn upper_bound_u(profile: &HardnessProfile, omega: &[f64]) -> f64 {
    let n_a = profile.num_actions;
    let mut worst: f64 = 0.0;
    for (z, &h) in profile.h.iter().enumerate() {
        if profile.is_suboptimal(z) {
            if omega[z] <= 0.0 {
                return f64::INFINITY;
            }
            worst = worst.max(h / omega[z]);
        }
    }
    let min_opt = profile
        .optimal_policy
        .iter()
        .enumerate()
        .map(|(s, &a)| omega[s * n_a + a])
        .fold(f64::INFINITY, f64::min);
    if min_opt <= 0.0 {
        return f64::INFINITY;
    }
    worst + profile.h_star / (profile.num_states as f64 * min_opt)
}
