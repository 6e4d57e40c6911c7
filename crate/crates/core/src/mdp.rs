//! Tabular discounted MDPs with Bernoulli rewards, and exact planning.
//!
//! Transitions are stored flat, row-major over `(s, a, s')`, so the
//! next-state distribution of a pair is a contiguous slice.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance shared by every probability container in the crate.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Two actions whose Q-values differ by at most this much are tied.
pub const TIE_TOL: f64 = 1e-9;

pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RewardFamily {
    #[default]
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    transitions: Vec<f64>,
    reward_means: Vec<f64>,
}

impl TabularMdp {
    /// Builds and validates an MDP. `transitions[(s * A + a) * S + s']` is
    /// `p(s'|s,a)` and `reward_means[s * A + a]` is `r(s,a)`.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        gamma: f64,
        transitions: Vec<f64>,
        reward_means: Vec<f64>,
    ) -> Result<Self> {
        let mdp = Self {
            num_states,
            num_actions,
            gamma,
            transitions,
            reward_means,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        let (s_n, a_n) = (self.num_states, self.num_actions);
        if s_n == 0 || a_n == 0 {
            return Err(Error::Validation(
                "num_states and num_actions must be positive".into(),
            ));
        }
        if !(self.gamma.is_finite() && (0.0..1.0).contains(&self.gamma)) {
            return Err(Error::Validation(format!(
                "gamma = {} must lie in [0, 1)",
                self.gamma
            )));
        }
        if self.transitions.len() != s_n * a_n * s_n {
            return Err(Error::Validation(format!(
                "transitions has {} entries, expected {}",
                self.transitions.len(),
                s_n * a_n * s_n
            )));
        }
        if self.reward_means.len() != s_n * a_n {
            return Err(Error::Validation(format!(
                "reward_means has {} entries, expected {}",
                self.reward_means.len(),
                s_n * a_n
            )));
        }
        for s in 0..s_n {
            for a in 0..a_n {
                let row = self.next_state_probs(s, a);
                if let Some(bad) = row.iter().position(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::Validation(format!(
                        "transitions[{s}][{a}][{bad}] = {} is not a probability",
                        row[bad]
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::Validation(format!(
                        "transitions[{s}][{a}] sums to {sum}, not 1"
                    )));
                }
                let r = self.reward(s, a);
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::Validation(format!(
                        "reward_means[{s}][{a}] = {r} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `S * A`, the size of the state-action space.
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward_family(&self) -> RewardFamily {
        RewardFamily::Bernoulli
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.num_actions + a
    }

    #[inline]
    pub fn next_state_probs(&self, s: usize, a: usize) -> &[f64] {
        let start = self.pair(s, a) * self.num_states;
        &self.transitions[start..start + self.num_states]
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions[self.pair(s, a) * self.num_states + next]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward_means[self.pair(s, a)]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn reward_means(&self) -> &[f64] {
        &self.reward_means
    }

    /// Same dynamics and discount with one reward mean replaced.
    pub fn with_reward(&self, s: usize, a: usize, value: f64) -> Result<Self> {
        let mut rewards = self.reward_means.clone();
        rewards[self.pair(s, a)] = value;
        Self::new(
            self.num_states,
            self.num_actions,
            self.gamma,
            self.transitions.clone(),
            rewards,
        )
    }

    fn q_from_values(&self, values: &[f64]) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.num_pairs());
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let ev: f64 = self
                    .next_state_probs(s, a)
                    .iter()
                    .zip(values)
                    .map(|(p, v)| p * v)
                    .sum();
                q.push(self.reward(s, a) + self.gamma * ev);
            }
        }
        q
    }

    /// Overwrites the row of pair `z` with empirical frequencies
    /// `counts / n` and its reward with `reward_sum / n`.
    pub(crate) fn set_empirical_pair(&mut self, z: usize, counts: &[u64], n: u64, reward_sum: f64) {
        let n_s = self.num_states;
        let n_f = n as f64;
        for (p, &c) in self.transitions[z * n_s..(z + 1) * n_s]
            .iter_mut()
            .zip(counts)
        {
            *p = c as f64 / n_f;
        }
        self.reward_means[z] = reward_sum / n_f;
    }

    #[cfg(test)]
    fn bellman_residual(&self, values: &[f64]) -> f64 {
        self.residual_from_q(values, &self.q_from_values(values))
    }

    fn residual_from_q(&self, values: &[f64], q: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(s, v)| {
                let best = q[s * self.num_actions..(s + 1) * self.num_actions]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                (v - best).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl StochasticPolicy {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != num_states * num_actions {
            return Err(Error::Validation(format!(
                "policy has {} entries, expected {}",
                probs.len(),
                num_states * num_actions
            )));
        }
        for s in 0..num_states {
            let row = &probs[s * num_actions..(s + 1) * num_actions];
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Validation(format!(
                    "policy[{s}] has a negative entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!("policy[{s}] sums to {sum}")));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            probs,
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * num_actions + a] = 1.0;
        }
        Self {
            num_states: actions.len(),
            num_actions,
            probs,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `weight * self + (1 - weight) * other`, entrywise.
    pub fn mix(&self, weight: f64, other: &StochasticPolicy) -> StochasticPolicy {
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| weight * p + (1.0 - weight) * q)
            .collect();
        StochasticPolicy {
            num_states: self.num_states,
            num_actions: self.num_actions,
            probs,
        }
    }

    pub(crate) fn from_raw(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Self {
        Self {
            num_states,
            num_actions,
            probs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    pub optimal_value: Vec<f64>,
    /// Indexed by `s * A + a`.
    pub optimal_q: Vec<f64>,
    pub optimal_policy: Vec<usize>,
    /// `V*(s) - Q*(s,a)`, indexed by `s * A + a`.
    pub gaps: Vec<f64>,
    /// Smallest gap over sub-optimal pairs. Zero when the optimum is not
    /// unique, infinite when there is a single action.
    pub min_gap: f64,
    pub span: f64,
    /// `Var_{s' ~ p(.|s,a)}[V*(s')]`, indexed by `s * A + a`.
    pub value_variance: Vec<f64>,
    pub unique_optimum: bool,
    pub solve_tolerance: f64,
}

impl ValueSolution {
    pub fn num_states(&self) -> usize {
        self.optimal_value.len()
    }

    pub fn num_actions(&self) -> usize {
        self.optimal_q.len() / self.optimal_value.len()
    }

    pub fn gap(&self, s: usize, a: usize) -> f64 {
        self.gaps[s * self.num_actions() + a]
    }

    pub fn is_optimal_pair(&self, s: usize, a: usize) -> bool {
        self.optimal_policy[s] == a
    }

    pub fn policy(&self) -> StochasticPolicy {
        StochasticPolicy::deterministic(self.num_actions(), &self.optimal_policy)
    }
}

/// Exact value of a deterministic policy: solves `(I - gamma P_pi) V = r_pi`.
fn evaluate_deterministic(mdp: &TabularMdp, policy: &[usize]) -> Result<Vec<f64>> {
    let n = mdp.num_states();
    let mut lhs = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for s in 0..n {
        let a = policy[s];
        let row = &mut lhs[s * n..(s + 1) * n];
        for (entry, p) in row.iter_mut().zip(mdp.next_state_probs(s, a)) {
            *entry = -mdp.gamma() * p;
        }
        row[s] += 1.0;
        rhs[s] = mdp.reward(s, a);
    }
    solve_dense(n, &mut lhs, &mut rhs)?;
    Ok(rhs)
}

/// Gaussian elimination with partial pivoting on a row-major `n x n`
/// system; the solution overwrites `rhs`. Evaluation systems are small and
/// solved once per step, so this avoids the general matrix machinery.
fn solve_dense(n: usize, lhs: &mut [f64], rhs: &mut [f64]) -> Result<()> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lhs[i * n + col].abs().total_cmp(&lhs[j * n + col].abs()))
            .expect("non-empty range");
        let scale = lhs[pivot * n + col];
        if !(scale.abs() > f64::MIN_POSITIVE) || !scale.is_finite() {
            return Err(Error::Singular("policy evaluation"));
        }
        if pivot != col {
            for k in 0..n {
                lhs.swap(col * n + k, pivot * n + k);
            }
            rhs.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = lhs[row * n + col] / scale;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                lhs[row * n + k] -= factor * lhs[col * n + k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for k in col + 1..n {
            acc -= lhs[col * n + k] * rhs[k];
        }
        rhs[col] = acc / lhs[col * n + col];
    }
    Ok(())
}

pub fn solve_optimal(mdp: &TabularMdp, tol: f64) -> Result<ValueSolution> {
    solve_optimal_from(mdp, tol, None)
}

/// Policy iteration, optionally started from a known policy. A previous
/// solution of a nearby model usually converges after one evaluation.
pub fn solve_optimal_from(
    mdp: &TabularMdp,
    tol: f64,
    initial_policy: Option<&[usize]>,
) -> Result<ValueSolution> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    let mut policy = match initial_policy {
        Some(p) if p.len() == n_s && p.iter().all(|&a| a < n_a) => p.to_vec(),
        _ => vec![0; n_s],
    };

    // Policy iteration terminates in at most A^S improvements; the cap only
    // guards against floating-point cycling.
    let max_rounds = 100 + 10 * n_s * n_a;
    let mut values = evaluate_deterministic(mdp, &policy)?;
    let mut q = mdp.q_from_values(&values);
    for _ in 0..max_rounds {
        let mut improved = false;
        for s in 0..n_s {
            let row = &q[s * n_a..(s + 1) * n_a];
            let (best, best_q) = argmax_first(row);
            let current = row[policy[s]];
            if best_q > current + 1e-13 * (1.0 + current.abs()) {
                policy[s] = best;
                improved = true;
            }
        }
        if !improved {
            break;
        }
        values = evaluate_deterministic(mdp, &policy)?;
        q = mdp.q_from_values(&values);
    }

    // Polish with Bellman backups if the linear solve left a residual.
    let mut residual = mdp.residual_from_q(&values, &q);
    let mut backups = 0;
    while residual > tol && backups < 10_000 {
        for (s, v) in values.iter_mut().enumerate() {
            *v = argmax_first(&q[s * n_a..(s + 1) * n_a]).1;
        }
        q = mdp.q_from_values(&values);
        residual = mdp.residual_from_q(&values, &q);
        backups += 1;
    }
    if residual > tol {
        return Err(Error::NonConvergence {
            what: "policy iteration",
            residual,
        });
    }

    let optimal_q = q;
    let mut optimal_value = Vec::with_capacity(n_s);
    let mut optimal_policy = Vec::with_capacity(n_s);
    let mut gaps = Vec::with_capacity(n_s * n_a);
    let mut unique_optimum = true;
    let mut min_gap = f64::INFINITY;
    for s in 0..n_s {
        let row = &optimal_q[s * n_a..(s + 1) * n_a];
        let v = argmax_first(row).1;
        let chosen = row
            .iter()
            .position(|&q| q >= v - TIE_TOL)
            .expect("row has a maximum");
        optimal_value.push(v);
        optimal_policy.push(chosen);
        for (a, &q) in row.iter().enumerate() {
            if a == chosen {
                gaps.push(0.0);
            } else {
                let gap = v - q;
                if gap <= TIE_TOL {
                    unique_optimum = false;
                }
                min_gap = min_gap.min(gap);
                gaps.push(gap);
            }
        }
    }
    if !unique_optimum {
        min_gap = 0.0;
    }

    let max_v = optimal_value
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let min_v = optimal_value.iter().copied().fold(f64::INFINITY, f64::min);

    let mut value_variance = Vec::with_capacity(n_s * n_a);
    for s in 0..n_s {
        for a in 0..n_a {
            let row = mdp.next_state_probs(s, a);
            let mean: f64 = row.iter().zip(&optimal_value).map(|(p, v)| p * v).sum();
            let second: f64 = row.iter().zip(&optimal_value).map(|(p, v)| p * v * v).sum();
            value_variance.push((second - mean * mean).max(0.0));
        }
    }

    Ok(ValueSolution {
        optimal_value,
        optimal_q,
        optimal_policy,
        gaps,
        min_gap,
        span: max_v - min_v,
        value_variance,
        unique_optimum,
        solve_tolerance: tol,
    })
}

/// Value of an arbitrary stochastic policy by direct linear solve.
pub fn policy_value(mdp: &TabularMdp, policy: &StochasticPolicy, tol: f64) -> Result<Vec<f64>> {
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    if policy.num_states() != n_s || policy.num_actions() != n_a {
        return Err(Error::Validation(format!(
            "policy shape {}x{} does not match MDP {}x{}",
            policy.num_states(),
            policy.num_actions(),
            n_s,
            n_a
        )));
    }
    let mut lhs = DMatrix::<f64>::identity(n_s, n_s);
    let mut rhs = DVector::<f64>::zeros(n_s);
    for s in 0..n_s {
        for a in 0..n_a {
            let w = policy.prob(s, a);
            if w == 0.0 {
                continue;
            }
            rhs[s] += w * mdp.reward(s, a);
            for (next, p) in mdp.next_state_probs(s, a).iter().enumerate() {
                lhs[(s, next)] -= mdp.gamma() * w * p;
            }
        }
    }
    let v = lhs
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("policy evaluation"))?;
    let residual = (&lhs * &v - &rhs).amax();
    if residual > tol {
        return Err(Error::NonConvergence {
            what: "policy evaluation",
            residual,
        });
    }
    Ok(v.iter().copied().collect())
}

/// First index attaining the maximum, and the maximum.
fn argmax_first(row: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    (best, row[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_state(gamma: f64, rewards: &[f64]) -> TabularMdp {
        TabularMdp::new(
            1,
            rewards.len(),
            gamma,
            vec![1.0; rewards.len()],
            rewards.to_vec(),
        )
        .unwrap()
    }

    fn random_mdp(rng: &mut ChaCha8Rng, s_n: usize, a_n: usize, gamma: f64) -> TabularMdp {
        let mut p = Vec::new();
        for _ in 0..s_n * a_n {
            let row: Vec<f64> = (0..s_n).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let sum: f64 = row.iter().sum();
            p.extend(row.iter().map(|x| x / sum));
        }
        let r = (0..s_n * a_n).map(|_| rng.gen()).collect();
        TabularMdp::new(s_n, a_n, gamma, p, r).unwrap()
    }

    #[test]
    fn one_state_geometric_series() {
        let sol = solve_optimal(&one_state(0.5, &[0.8, 0.3]), 1e-10).unwrap();
        assert_abs_diff_eq!(sol.optimal_value[0], 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.optimal_q[0], 1.6, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.optimal_q[1], 1.1, epsilon = 1e-12);
        assert_eq!(sol.gaps[0], 0.0);
        assert_abs_diff_eq!(sol.gaps[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.min_gap, 0.5, epsilon = 1e-12);
        assert_eq!(sol.span, 0.0);
        assert!(sol.value_variance.iter().all(|&v| v == 0.0));
        assert!(sol.unique_optimum);
    }

    #[test]
    fn zero_discount_is_greedy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mdp = random_mdp(&mut rng, 4, 3, 0.0);
        let sol = solve_optimal(&mdp, 1e-10).unwrap();
        for s in 0..4 {
            let best = (0..3).map(|a| mdp.reward(s, a)).fold(0.0, f64::max);
            assert_abs_diff_eq!(sol.optimal_value[s], best, epsilon = 1e-14);
            for a in 0..3 {
                assert_abs_diff_eq!(sol.gap(s, a), best - mdp.reward(s, a), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn fully_tied_instance() {
        // 0 -> 1 -> 0 deterministically, zero rewards
        let p = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0];
        let mdp = TabularMdp::new(2, 2, 0.9, p, vec![0.0; 4]).unwrap();
        let sol = solve_optimal(&mdp, 1e-10).unwrap();
        assert_eq!(sol.optimal_value, vec![0.0, 0.0]);
        assert!(!sol.unique_optimum);
        assert_eq!(sol.min_gap, 0.0);
        assert_eq!(sol.optimal_policy, vec![0, 0]);
    }

    #[test]
    fn rejects_bad_rows() {
        let err = TabularMdp::new(2, 1, 0.5, vec![0.5, 0.5, 0.9, 0.0], vec![0.1, 0.2]).unwrap_err();
        assert!(err.to_string().contains("transitions[1][0]"), "{err}");
        assert!(TabularMdp::new(1, 1, 1.0, vec![1.0], vec![0.5]).is_err());
        assert!(TabularMdp::new(1, 1, 0.5, vec![1.0], vec![1.5]).is_err());
        assert!(TabularMdp::new(2, 1, 0.5, vec![1.5, -0.5, 0.5, 0.5], vec![0.0; 2]).is_err());
    }

    #[test]
    fn policy_value_examples() {
        let mdp = one_state(0.5, &[0.8, 0.3]);
        let pi = StochasticPolicy::deterministic(2, &[0]);
        assert_abs_diff_eq!(
            policy_value(&mdp, &pi, 1e-10).unwrap()[0],
            1.6,
            epsilon = 1e-12
        );

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mdp = random_mdp(&mut rng, 3, 2, 0.0);
        let pi = StochasticPolicy::new(3, 2, vec![0.3, 0.7, 0.5, 0.5, 1.0, 0.0]).unwrap();
        let v = policy_value(&mdp, &pi, 1e-10).unwrap();
        for s in 0..3 {
            let expect = pi.prob(s, 0) * mdp.reward(s, 0) + pi.prob(s, 1) * mdp.reward(s, 1);
            assert_abs_diff_eq!(v[s], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn solution_invariants_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for i in 0..20 {
            let s_n = 1 + i % 5;
            let a_n = 1 + (i / 2) % 5;
            let gamma = [0.0, 0.5, 0.9, 0.99][i % 4];
            let mdp = random_mdp(&mut rng, s_n, a_n, gamma);
            let tol = DEFAULT_SOLVE_TOL;
            let sol = solve_optimal(&mdp, tol).unwrap();

            assert!(mdp.bellman_residual(&sol.optimal_value) <= tol);
            let v_pi = policy_value(&mdp, &sol.policy(), tol).unwrap();
            for s in 0..s_n {
                assert!((v_pi[s] - sol.optimal_value[s]).abs() <= 2.0 * tol);
                assert_eq!(sol.gap(s, sol.optimal_policy[s]), 0.0);
                for a in 0..a_n {
                    let k = s * a_n + a;
                    assert!(sol.gaps[k] >= 0.0);
                    if a != sol.optimal_policy[s] {
                        assert_eq!(sol.gaps[k], sol.optimal_value[s] - sol.optimal_q[k]);
                    }
                    // brute-force second moment over next states
                    let probs = mdp.next_state_probs(s, a);
                    let mean: f64 = (0..s_n).map(|n| probs[n] * sol.optimal_value[n]).sum();
                    let var: f64 = (0..s_n)
                        .map(|n| probs[n] * (sol.optimal_value[n] - mean).powi(2))
                        .sum();
                    assert!((sol.value_variance[k] - var).abs() <= 1e-10);
                }
            }
            let max = sol.optimal_value.iter().cloned().fold(f64::MIN, f64::max);
            let min = sol.optimal_value.iter().cloned().fold(f64::MAX, f64::min);
            assert_eq!(sol.span, max - min);
            assert_eq!(sol.unique_optimum, sol.min_gap > 0.0);
        }
    }

    #[test]
    fn raising_a_reward_never_lowers_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let mdp = random_mdp(&mut rng, 4, 3, 0.9);
            let base = solve_optimal(&mdp, 1e-10).unwrap();
            let (s, a) = (rng.gen_range(0..4), rng.gen_range(0..3));
            let bumped = mdp
                .with_reward(s, a, (mdp.reward(s, a) + 0.05).min(1.0))
                .unwrap();
            let after = solve_optimal(&bumped, 1e-10).unwrap();
            for st in 0..4 {
                assert!(after.optimal_value[st] >= base.optimal_value[st] - 1e-10);
            }
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mdp = random_mdp(&mut rng, 5, 4, 0.95);
        let cold = solve_optimal(&mdp, 1e-10).unwrap();
        let warm = solve_optimal_from(&mdp, 1e-10, Some(&[3, 2, 1, 0, 3])).unwrap();
        assert_eq!(cold.optimal_policy, warm.optimal_policy);
        for (a, b) in cold.optimal_value.iter().zip(&warm.optimal_value) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
