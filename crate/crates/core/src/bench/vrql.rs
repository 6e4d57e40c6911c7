//! Sample-complexity formula of variance-reduced Q-learning under a fixed
//! behavior policy, for comparison tables. The algorithm itself is not run.

use serde::Serialize;

use crate::chain::ergodicity_report;
use crate::error::{Error, Result};
use crate::mdp::{solve_optimal, TabularMdp, DEFAULT_SOLVE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VrqlParams {
    /// Smallest state-action occupancy of the behavior policy.
    pub mu_min: f64,
    pub t_mix: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub num_states: usize,
    pub num_actions: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VrqlReport {
    pub params: VrqlParams,
    pub epochs: f64,
    pub epoch_length: f64,
    pub inner_samples: f64,
    pub total: f64,
    pub log_base: &'static str,
    pub mixing_time_definition: &'static str,
}

fn checked_ln(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x.ln())
    } else {
        Err(Error::Domain(format!(
            "log argument {what} = {x} is not positive"
        )))
    }
}

pub fn vrql_complexity(p: &VrqlParams) -> Result<VrqlReport> {
    let positive = [p.mu_min, p.t_mix, p.epsilon, p.delta, p.c1, p.c2, p.c3]
        .iter()
        .all(|x| *x > 0.0 && x.is_finite());
    if !positive || p.num_states == 0 || p.num_actions == 0 {
        return Err(Error::Domain("VRQL inputs must be positive".into()));
    }
    if !(0.0..1.0).contains(&p.gamma) {
        return Err(Error::Domain(format!(
            "gamma {} must lie in [0, 1)",
            p.gamma
        )));
    }
    let horizon = 1.0 - p.gamma;
    let pairs = (p.num_states * p.num_actions) as f64;

    let epochs = p.c3
        * checked_ln(
            1.0 / (p.epsilon.powi(2) * horizon.powi(2)),
            "1/(eps^2 (1-gamma)^2)",
        )?;
    let epoch_length = (p.c2 / p.mu_min)
        * (1.0 / horizon.powi(3) + p.t_mix / horizon)
        * checked_ln(1.0 / (horizon.powi(2) * p.epsilon), "1/((1-gamma)^2 eps)")?
        * checked_ln(pairs / p.delta, "SA/delta")?;
    let inner_samples = (p.c1 / p.mu_min)
        * (1.0 / (horizon.powi(3) * p.epsilon.powi(2).min(1.0)) + p.t_mix)
        * checked_ln(pairs * epoch_length / p.delta, "SA t_epoch/delta")?;
    Ok(VrqlReport {
        params: *p,
        epochs,
        epoch_length,
        inner_samples,
        total: epochs * (inner_samples + epoch_length),
        log_base: "e",
        mixing_time_definition: "1/4 total variation, worst initial pair, uniform behavior",
    })
}

/// Uses the uniform behavior policy: `mu_min` is the smallest entry of its
/// stationary distribution, `t_mix` its mixing time and `epsilon` the
/// smallest sub-optimality gap.
pub fn vrql_for_instance(mdp: &TabularMdp, delta: f64, constants: [f64; 3]) -> Result<VrqlReport> {
    let report = ergodicity_report(mdp, 1e-12)?;
    let solution = solve_optimal(mdp, DEFAULT_SOLVE_TOL)?;
    if !(solution.min_gap > 0.0 && solution.min_gap.is_finite()) {
        return Err(Error::NonUniqueOptimum);
    }
    let mu_min = report.omega_u.iter().copied().fold(f64::INFINITY, f64::min);
    vrql_complexity(&VrqlParams {
        mu_min,
        t_mix: report.t_mix as f64,
        gamma: mdp.gamma(),
        epsilon: solution.min_gap,
        delta,
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
        c1: constants[0],
        c2: constants[1],
        c3: constants[2],
    })
}
