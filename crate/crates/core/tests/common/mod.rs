#![allow(dead_code)]

use mdp_nas::chain::{stationary_distribution, StateActionChain};
use mdp_nas::instances::gen_random_ergodic;
use mdp_nas::mdp::{StochasticPolicy, TabularMdp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with `S, A` drawn from `2..=max`.
pub fn random_instance(seed: u64, max: usize) -> TabularMdp {
    let mut r = rng(seed.wrapping_mul(7919));
    let s = r.gen_range(2..=max);
    let a = r.gen_range(2..=max);
    let gamma = r.gen_range(0.5..0.95);
    gen_random_ergodic(s, a, gamma, seed).unwrap()
}

pub fn random_policy(
    num_states: usize,
    num_actions: usize,
    r: &mut ChaCha8Rng,
) -> StochasticPolicy {
    let mut probs = Vec::with_capacity(num_states * num_actions);
    for _ in 0..num_states {
        let row: Vec<f64> = (0..num_actions).map(|_| r.gen_range(0.05..1.0)).collect();
        let total: f64 = row.iter().sum();
        probs.extend(row.iter().map(|x| x / total));
    }
    StochasticPolicy::new(num_states, num_actions, probs).unwrap()
}

/// A strictly positive point of the navigation polytope: the stationary
/// distribution of a random fully supported policy.
pub fn random_feasible(mdp: &TabularMdp, r: &mut ChaCha8Rng) -> Vec<f64> {
    let policy = random_policy(mdp.num_states(), mdp.num_actions(), r);
    let chain = StateActionChain::from_policy(mdp, &policy).unwrap();
    stationary_distribution(&chain, 1e-12).unwrap()
}

/// Inverse-CDF draw written independently of the library's sampler.
pub fn draw(weights: &[f64], r: &mut ChaCha8Rng) -> usize {
    let u: f64 = r.gen();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap()
}

/// Visit frequencies of `T` steps of a fixed policy started in state 0.
pub fn fixed_policy_frequencies(
    mdp: &TabularMdp,
    policy: &StochasticPolicy,
    horizon: u64,
    seed: u64,
) -> Vec<f64> {
    let mut r = rng(seed);
    let n_a = mdp.num_actions();
    let mut counts = vec![0u64; mdp.num_pairs()];
    let mut s = 0;
    for _ in 0..horizon {
        let a = draw(policy.row(s), &mut r);
        counts[s * n_a + a] += 1;
        s = draw(mdp.next_state_probs(s, a), &mut r);
    }
    counts.iter().map(|&n| n as f64 / horizon as f64).collect()
}

fn xlogx_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Number of trajectories (uniform policy, 2x2 random instance) on which the
/// transition and reward deviation sums ever exceed their thresholds.
pub fn coverage_violations(trajectories: u64, horizon: u64, delta: f64, seed: u64) -> (u64, u64) {
    use mdp_nas::stopping::{beta_rewards, beta_transitions, ThresholdConfig};
    let mdp = gen_random_ergodic(2, 2, 0.9, seed).unwrap();
    let config = ThresholdConfig::new(delta, 2, 2).unwrap();
    let (n_s, n_a) = (2, 2);
    let mut p_viol = 0;
    let mut r_viol = 0;
    for k in 0..trajectories {
        let mut r = rng(seed ^ (k + 1).wrapping_mul(0x9e37_79b9));
        let mut counts = vec![0u64; 4];
        let mut next_counts = vec![0u64; 8];
        let mut reward_counts = vec![0u64; 4];
        let mut p_terms = [0.0f64; 4];
        let mut r_terms = [0.0f64; 4];
        let (mut p_hit, mut r_hit) = (false, false);
        let mut s = 0;
        for _ in 0..horizon {
            let a = r.gen_range(0..n_a);
            let z = s * n_a + a;
            let reward = r.gen::<f64>() < mdp.reward(s, a);
            let next = draw(mdp.next_state_probs(s, a), &mut r);
            counts[z] += 1;
            next_counts[z * n_s + next] += 1;
            reward_counts[z] += u64::from(reward);
            let n = counts[z] as f64;
            p_terms[z] = (0..n_s)
                .map(|j| n * xlogx_ratio(next_counts[z * n_s + j] as f64 / n, mdp.prob(s, a, j)))
                .sum();
            let mean = reward_counts[z] as f64 / n;
            let q = mdp.reward(s, a);
            r_terms[z] = n * (xlogx_ratio(mean, q) + xlogx_ratio(1.0 - mean, 1.0 - q));
            if !p_hit && p_terms.iter().sum::<f64>() > beta_transitions(&counts, &config) {
                p_hit = true;
            }
            if !r_hit && r_terms.iter().sum::<f64>() > beta_rewards(&counts, &config) {
                r_hit = true;
            }
            s = next;
        }
        p_viol += u64::from(p_hit);
        r_viol += u64::from(r_hit);
    }
    (p_viol, r_viol)
}

/// `max_i sum_j |m_ij|`.
pub fn inf_norm_rows(rows: &[Vec<f64>]) -> f64 {
    rows.iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Random MDP whose rows have random supports; may fail to communicate.
pub fn sparse_instance(seed: u64) -> TabularMdp {
    let mut r = rng(seed);
    let n_s = r.gen_range(2..=4);
    let n_a = r.gen_range(1..=3);
    let mut p = Vec::new();
    for _ in 0..n_s * n_a {
        let mut row: Vec<f64> = (0..n_s)
            .map(|_| {
                if r.gen_bool(0.4) {
                    r.gen_range(0.1..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        if row.iter().all(|x| *x == 0.0) {
            row[r.gen_range(0..n_s)] = 1.0;
        }
        let total: f64 = row.iter().sum();
        p.extend(row.iter().map(|x| x / total));
    }
    let rewards = (0..n_s * n_a).map(|_| r.gen::<f64>()).collect();
    TabularMdp::new(n_s, n_a, 0.9, p, rewards).unwrap()
}

/// Instances whose uniform chain is primitive, half dense and half sparse.
pub fn ergodic_probes(count: usize) -> Vec<TabularMdp> {
    use mdp_nas::chain::ergodicity_report;
    let mut out: Vec<TabularMdp> = (0..count as u64 / 2)
        .map(|k| random_instance(k, 4))
        .collect();
    let mut seed = 1000;
    while out.len() < count {
        let mdp = sparse_instance(seed);
        if ergodicity_report(&mdp, 1e-12).is_ok() {
            out.push(mdp);
        }
        seed += 1;
    }
    out
}

/// `(violations, checks)` of `|K^n - W|_inf <= 2 theta^(n/r - 1)` for
/// `n = 1..=50` on the uniform chain of each probe.
pub fn geometric_violations(probes: &[TabularMdp]) -> (usize, usize) {
    use mdp_nas::chain::{ergodicity_report, geometric_constants, inf_norm};
    use nalgebra::DMatrix;
    let (mut bad, mut checks) = (0, 0);
    for mdp in probes {
        let report = ergodicity_report(mdp, 1e-12).unwrap();
        let chain = StateActionChain::uniform(mdp);
        let floor = 1.0 / mdp.num_actions() as f64;
        let constants = geometric_constants(1.0, floor, &report.omega_u, &report).unwrap();
        let n = chain.len();
        let w = DMatrix::from_fn(n, n, |_, j| report.omega_u[j]);
        let mut power = chain.kernel().clone();
        for step in 1..=50 {
            let gap = inf_norm(&(&power - &w));
            let bound = 2.0 * constants.theta.powf(step as f64 / report.r as f64 - 1.0);
            checks += 1;
            bad += usize::from(gap > bound + 1e-12);
            power = &power * chain.kernel();
        }
    }
    (bad, checks)
}

/// `(violations, checks)` of `|w1 - w2|_1 <= kappa(K1) |K2 - K1|_inf` over
/// random perturbations of random policy chains.
pub fn schweitzer_violations(probes: u64, seed: u64) -> (usize, usize) {
    use mdp_nas::chain::{condition_number, inf_norm};
    let mut r = rng(seed);
    let mut bad = 0;
    for k in 0..probes {
        let mdp = random_instance(100 + k, 4);
        let policy = random_policy(mdp.num_states(), mdp.num_actions(), &mut r);
        let first = StateActionChain::from_policy(&mdp, &policy).unwrap();
        let n = first.len();
        let size = r.gen_range(0.001..0.2);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let row: Vec<f64> = (0..n)
                    .map(|j| first.kernel()[(i, j)] + size * r.gen::<f64>())
                    .collect();
                let total: f64 = row.iter().sum();
                row.iter().map(|x| x / total).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let second = StateActionChain::from_rows(&refs).unwrap();
        let w1 = stationary_distribution(&first, 1e-12).unwrap();
        let w2 = stationary_distribution(&second, 1e-12).unwrap();
        let kappa = condition_number(&first, &w1).unwrap();
        let lhs: f64 = w1.iter().zip(&w2).map(|(a, b)| (a - b).abs()).sum();
        let rhs = kappa * inf_norm(&(second.kernel() - first.kernel()));
        bad += usize::from(kappa < 1.0 - 1e-12 || lhs > rhs + 1e-9);
    }
    (bad, probes as usize)
}
