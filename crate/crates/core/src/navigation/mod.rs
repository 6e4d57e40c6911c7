//! Sampling along a single trajectory: forced exploration mixed with a
//! navigation rule that tracks the oracle allocation of the empirical model.

mod rules;
mod schedule;

use rand::Rng;
use serde::Serialize;

pub use rules::{
    build_rule, canonical_rule_name, rules, CesaroNavigation, DirectNavigation, RuleEntry,
    SamplingRule,
};
pub use schedule::{ExplorationSchedule, ScheduleKind};

use crate::allocation::{oracle_policy, solve_oracle_allocation, SolverOptions};
use crate::error::{Error, Result};
use crate::mdp::{solve_optimal_from, StochasticPolicy, TabularMdp, DEFAULT_SOLVE_TOL};

/// Reward mean assumed for a pair that was never played.
pub const UNVISITED_REWARD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TransitionRecord {
    pub state: usize,
    pub action: usize,
    pub reward: u8,
    pub next_state: usize,
}

/// Sufficient statistics of a trajectory together with the navigation rule.
pub struct NavigatorState {
    num_states: usize,
    num_actions: usize,
    t: u64,
    counts: Vec<u64>,
    transition_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    model: TabularMdp,
    current_state: usize,
    rule: Box<dyn SamplingRule>,
    recompute_period: u64,
    solver: SolverOptions,
    oracle_weights: Option<Vec<f64>>,
    greedy: Option<Vec<usize>>,
    skipped_recomputes: u64,
}

impl NavigatorState {
    pub fn new(
        mdp: &TabularMdp,
        rule: &str,
        recompute_period: u64,
        initial_state: usize,
    ) -> Result<Self> {
        if recompute_period == 0 {
            return Err(Error::Validation("recompute period must be >= 1".into()));
        }
        let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
        if initial_state >= n_s {
            return Err(Error::Validation(format!(
                "initial state {initial_state} out of range for {n_s} states"
            )));
        }
        let model = TabularMdp::new(
            n_s,
            n_a,
            mdp.gamma(),
            vec![1.0 / n_s as f64; n_s * n_a * n_s],
            vec![UNVISITED_REWARD; n_s * n_a],
        )?;
        Ok(Self {
            num_states: n_s,
            num_actions: n_a,
            t: 0,
            counts: vec![0; n_s * n_a],
            transition_counts: vec![0; n_s * n_a * n_s],
            reward_sums: vec![0.0; n_s * n_a],
            model,
            current_state: initial_state,
            rule: build_rule(rule, n_s, n_a)?,
            recompute_period,
            solver: SolverOptions::default(),
            oracle_weights: None,
            greedy: None,
            skipped_recomputes: 0,
        })
    }

    /// Options for the allocation solves done at each recompute. The warm
    /// start is always overwritten with the previous solution.
    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn transition_counts(&self) -> &[u64] {
        &self.transition_counts
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn current_state(&self) -> usize {
        self.current_state
    }

    pub fn rule_name(&self) -> &'static str {
        self.rule.name()
    }

    /// Last oracle allocation computed from the empirical model.
    pub fn oracle_weights(&self) -> Option<&[f64]> {
        self.oracle_weights.as_deref()
    }

    pub fn target_policy(&self) -> &StochasticPolicy {
        self.rule.target()
    }

    /// Greedy policy of the empirical model at the last recompute.
    pub fn greedy_policy(&self) -> Option<&[usize]> {
        self.greedy.as_deref()
    }

    pub fn skipped_recomputes(&self) -> u64 {
        self.skipped_recomputes
    }

    /// Visit frequencies `N_t(s,a) / t`.
    pub fn visit_frequencies(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.counts.iter().map(|&n| n as f64 / t).collect()
    }

    /// The policy the next action is drawn from.
    pub fn behavior_policy(&self, schedule: &ExplorationSchedule) -> StochasticPolicy {
        if self.t == 0 {
            return StochasticPolicy::uniform(self.num_states, self.num_actions);
        }
        let eps = schedule.rate(self.t);
        let uniform = StochasticPolicy::uniform(self.num_states, self.num_actions);
        uniform.mix(eps, self.rule.target())
    }

    /// Estimated model: empirical frequencies, uniform rows and reward
    /// [`UNVISITED_REWARD`] for pairs never played.
    pub fn empirical_mdp(&self) -> &TabularMdp {
        &self.model
    }

    /// Recomputes the oracle policy from the empirical model. Returns false
    /// (and keeps the previous one) when the estimate has tied optimal
    /// actions or the solver fails.
    pub fn recompute_oracle(&mut self) -> bool {
        let updated = self.try_recompute().unwrap_or(false);
        if !updated {
            self.skipped_recomputes += 1;
        }
        updated
    }

    fn try_recompute(&mut self) -> Result<bool> {
        let empirical = &self.model;
        let solution = solve_optimal_from(empirical, DEFAULT_SOLVE_TOL, self.greedy.as_deref())?;
        self.greedy = Some(solution.optimal_policy.clone());
        if !solution.unique_optimum {
            return Ok(false);
        }
        let options = SolverOptions {
            warm_start: self.oracle_weights.clone(),
            ..self.solver.clone()
        };
        let (allocation, _) = solve_oracle_allocation(empirical, &solution, &options)?;
        let policy = oracle_policy(&allocation)?;
        self.rule.update_oracle(&policy);
        self.oracle_weights = Some(allocation.weights);
        Ok(true)
    }

    /// One step of the trajectory in the true model `mdp`.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        mdp: &TabularMdp,
        schedule: &ExplorationSchedule,
        rng: &mut R,
    ) -> TransitionRecord {
        debug_assert_eq!(mdp.num_states(), self.num_states);
        debug_assert_eq!(mdp.num_actions(), self.num_actions);
        if self.t % self.recompute_period == 0 {
            self.recompute_oracle();
        }
        let s = self.current_state;
        let n_a = self.num_actions;
        let action = if self.t == 0 {
            rng.gen_range(0..n_a)
        } else {
            self.rule.tick(self.t);
            let eps = schedule.rate(self.t);
            let target = self.rule.target().row(s);
            let weights = target.iter().map(|p| eps / n_a as f64 + (1.0 - eps) * p);
            sample_index(weights, rng.gen::<f64>(), n_a)
        };
        let reward = u8::from(rng.gen::<f64>() < mdp.reward(s, action));
        let next_state = sample_index(
            mdp.next_state_probs(s, action).iter().copied(),
            rng.gen::<f64>(),
            self.num_states,
        );

        let z = s * n_a + action;
        self.counts[z] += 1;
        self.transition_counts[z * self.num_states + next_state] += 1;
        self.reward_sums[z] += f64::from(reward);
        let row = z * self.num_states..(z + 1) * self.num_states;
        self.model.set_empirical_pair(
            z,
            &self.transition_counts[row],
            self.counts[z],
            self.reward_sums[z],
        );
        self.current_state = next_state;
        self.t += 1;
        TransitionRecord {
            state: s,
            action,
            reward,
            next_state,
        }
    }
}

/// Inverse-CDF draw; rounding slack at the top falls on the last index with
/// positive weight.
fn sample_index(weights: impl Iterator<Item = f64>, u: f64, len: usize) -> usize {
    let mut acc = 0.0;
    let mut last_positive = len - 1;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}
