//! Oracle allocation: minimizes the convex upper bound `U(M, w)` over the
//! navigation-constrained polytope by projected subgradient descent.

mod hardness;
mod projection;

use nalgebra::DVector;
use serde::Serialize;

pub use hardness::{hardness_profile, upper_bound_u, HardnessProfile};
pub use projection::{
    max_navigation_residual, navigation_residual, project_simplex, FlowProjector,
};

use crate::chain::{stationary_distribution, StateActionChain, STATIONARY_TOL};
use crate::error::{Error, Result};
use crate::mdp::{StochasticPolicy, TabularMdp, ValueSolution};

/// Weights below this are lifted before forming the ratios of `U` during
/// descent.
const RATIO_FLOOR: f64 = 1e-12;
/// Relative tolerance for a term to count as attaining a max or min.
const ACTIVE_TOL: f64 = 1e-12;
const MAX_RESTARTS: usize = 8;
const RESTART_SHRINK: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub num_states: usize,
    pub num_actions: usize,
    /// Indexed `s * A + a`.
    pub weights: Vec<f64>,
    pub feasibility_residual: f64,
    pub objective: Option<f64>,
}

impl Allocation {
    pub fn new(mdp: &TabularMdp, weights: Vec<f64>) -> Self {
        let feasibility_residual = max_navigation_residual(mdp, &weights);
        Self {
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            weights,
            feasibility_residual,
            objective: None,
        }
    }

    pub fn state_mass(&self, s: usize) -> f64 {
        self.weights[s * self.num_actions..(s + 1) * self.num_actions]
            .iter()
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// `c` in the step `c / sqrt(k)`, a Euclidean length in weight space.
    /// Defaults to `1/sqrt(SA)` from a cold start and to the smallest
    /// starting weight from a warm start, which is assumed to be close.
    pub step_scale: Option<f64>,
    pub projection_tol: f64,
    pub projection_max_sweeps: usize,
    pub warm_start: Option<Vec<f64>>,
    /// Stop when the best value improved by less than `min_improvement`
    /// (relative) over this many iterations.
    pub patience: usize,
    pub min_improvement: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step_scale: None,
            projection_tol: 1e-10,
            projection_max_sweeps: 10_000,
            warm_start: None,
            patience: 500,
            min_improvement: 1e-8,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let positive = self.max_iters > 0
            && self.projection_tol > 0.0
            && self.projection_max_sweeps > 0
            && self.patience > 0
            && self.step_scale.map_or(true, |c| c > 0.0);
        if positive {
            Ok(())
        } else {
            Err(Error::Validation("solver options must be positive".into()))
        }
    }
}

/// Euclidean projection of an arbitrary vector onto `Omega(M)`.
pub fn project_feasible(
    mdp: &TabularMdp,
    x: &[f64],
    options: &SolverOptions,
) -> Result<Allocation> {
    if x.len() != mdp.num_pairs() {
        return Err(Error::Validation(format!(
            "weight vector has {} entries, expected {}",
            x.len(),
            mdp.num_pairs()
        )));
    }
    let projector = FlowProjector::new(mdp);
    let weights = projection::dykstra(
        mdp,
        &projector,
        x,
        options.projection_tol,
        options.projection_max_sweeps,
    )?;
    Ok(Allocation::new(mdp, weights))
}

/// A subgradient of `U` at `omega` (floored), averaging over every term
/// that attains the max and every optimal pair attaining the min.
fn subgradient(profile: &HardnessProfile, omega: &[f64]) -> Vec<f64> {
    let n_a = profile.num_actions;
    let floored: Vec<f64> = omega.iter().map(|w| w.max(RATIO_FLOOR)).collect();
    let mut grad = vec![0.0; omega.len()];

    let worst = (0..omega.len())
        .filter(|&z| profile.is_suboptimal(z))
        .map(|z| profile.h[z] / floored[z])
        .fold(f64::NEG_INFINITY, f64::max);
    if worst.is_finite() {
        let active: Vec<usize> = (0..omega.len())
            .filter(|&z| profile.is_suboptimal(z))
            .filter(|&z| profile.h[z] / floored[z] >= worst * (1.0 - ACTIVE_TOL))
            .collect();
        let share = 1.0 / active.len() as f64;
        for z in active {
            grad[z] -= share * profile.h[z] / (floored[z] * floored[z]);
        }
    }

    let optimal: Vec<usize> = profile
        .optimal_policy
        .iter()
        .enumerate()
        .map(|(s, &a)| s * n_a + a)
        .collect();
    let smallest = optimal
        .iter()
        .map(|&z| floored[z])
        .fold(f64::INFINITY, f64::min);
    let active: Vec<usize> = optimal
        .into_iter()
        .filter(|&z| floored[z] <= smallest * (1.0 + ACTIVE_TOL))
        .collect();
    let share = 1.0 / active.len() as f64;
    let scale = profile.h_star / (profile.num_states as f64 * smallest * smallest);
    for z in active {
        grad[z] -= share * scale;
    }
    grad
}

/// Minimizes `U` over `Omega(M)`. Returns the best iterate seen and its value.
pub fn solve_oracle_allocation(
    mdp: &TabularMdp,
    solution: &ValueSolution,
    options: &SolverOptions,
) -> Result<(Allocation, f64)> {
    options.validate()?;
    let profile = hardness_profile(solution, mdp.gamma())?;
    let projector = FlowProjector::new(mdp);
    let project = |x: &[f64]| {
        projection::dykstra(
            mdp,
            &projector,
            x,
            options.projection_tol,
            options.projection_max_sweeps,
        )
    };

    let start = match &options.warm_start {
        Some(w) if w.len() == mdp.num_pairs() => project(w)?,
        Some(w) => {
            return Err(Error::Validation(format!(
                "warm start has {} entries, expected {}",
                w.len(),
                mdp.num_pairs()
            )))
        }
        None => {
            let uniform = StateActionChain::uniform(mdp);
            project(&stationary_distribution(&uniform, STATIONARY_TOL)?)?
        }
    };

    let mut current = start;
    let mut best = current.clone();
    let mut best_value = upper_bound_u(&profile, &best);
    let cold = 1.0 / (current.len() as f64).sqrt();
    let mut step_scale = options.step_scale.unwrap_or_else(|| {
        let smallest = current.iter().copied().fold(f64::INFINITY, f64::min);
        match options.warm_start {
            Some(_) if smallest > 0.0 => smallest,
            _ => cold,
        }
    });

    // On a stalled window the descent restarts from the best point with a
    // shorter step, until the step is negligible.
    let mut restarts = 0;
    let mut k = 0usize;
    let mut checkpoint = best_value;
    for iter in 1..=options.max_iters {
        k += 1;
        let grad = DVector::from_vec(subgradient(&profile, &current));
        let direction = projector.tangent(&grad);
        let norm = direction.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        let step = step_scale / (k as f64).sqrt();
        let trial: Vec<f64> = current
            .iter()
            .zip(direction.iter())
            .map(|(w, d)| w - step * d / norm)
            .collect();
        current = project(&trial)?;

        let value = upper_bound_u(&profile, &current);
        if value < best_value {
            best_value = value;
            best.clone_from(&current);
        }
        if iter % options.patience == 0 {
            let stalled = checkpoint.is_finite()
                && checkpoint - best_value <= options.min_improvement * best_value;
            checkpoint = best_value;
            if stalled {
                if restarts == MAX_RESTARTS {
                    break;
                }
                restarts += 1;
                step_scale *= RESTART_SHRINK;
                current.clone_from(&best);
                k = 0;
            }
        }
    }

    let mut allocation = Allocation::new(mdp, best);
    allocation.objective = Some(best_value);
    Ok((allocation, best_value))
}

/// `pi(a|s) = w(s,a) / sum_b w(s,b)`.
pub fn oracle_policy(allocation: &Allocation) -> Result<StochasticPolicy> {
    let n_a = allocation.num_actions;
    let mut probs = Vec::with_capacity(allocation.weights.len());
    for s in 0..allocation.num_states {
        let mass = allocation.state_mass(s);
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("state {s} has no allocation mass")));
        }
        probs.extend(
            allocation.weights[s * n_a..(s + 1) * n_a]
                .iter()
                .map(|w| w / mass),
        );
    }
    Ok(StochasticPolicy::from_raw(
        allocation.num_states,
        n_a,
        probs,
    ))
}
