//! Policy-induced Markov chains on state-action pairs and the diagnostics
//! used to reason about them: stationary distributions, connectivity,
//! minorization and mixing constants, and the fundamental-matrix condition
//! number.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{StochasticPolicy, TabularMdp, ROW_SUM_TOL};

pub const STATIONARY_TOL: f64 = 1e-12;
const POWER_ITERATION_BUDGET: usize = 1_000_000;
const MIXING_TIME_CAP: usize = 1_000_000;

/// Kernel over `Z = S x A`, pair `(s, a)` at index `s * A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateActionChain {
    kernel: DMatrix<f64>,
}

impl StateActionChain {
    /// `K((s,a),(s',a')) = p(s'|s,a) pi(a'|s')`.
    pub fn from_policy(mdp: &TabularMdp, policy: &StochasticPolicy) -> Result<Self> {
        let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
        if policy.num_states() != n_s || policy.num_actions() != n_a {
            return Err(Error::Validation("policy shape does not match MDP".into()));
        }
        let n = n_s * n_a;
        let mut kernel = DMatrix::zeros(n, n);
        for s in 0..n_s {
            for a in 0..n_a {
                let z = s * n_a + a;
                for (next, p) in mdp.next_state_probs(s, a).iter().enumerate() {
                    if *p == 0.0 {
                        continue;
                    }
                    for (b, w) in policy.row(next).iter().enumerate() {
                        kernel[(z, next * n_a + b)] = p * w;
                    }
                }
            }
        }
        Ok(Self { kernel })
    }

    pub fn uniform(mdp: &TabularMdp) -> Self {
        let policy = StochasticPolicy::uniform(mdp.num_states(), mdp.num_actions());
        Self::from_policy(mdp, &policy).expect("uniform policy matches MDP shape")
    }

    /// Wraps an arbitrary row-stochastic matrix.
    pub fn from_kernel(kernel: DMatrix<f64>) -> Result<Self> {
        if !kernel.is_square() || kernel.nrows() == 0 {
            return Err(Error::Validation(
                "kernel must be a non-empty square matrix".into(),
            ));
        }
        for (i, row) in kernel.row_iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Validation(format!(
                    "kernel row {i} has a negative entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!("kernel row {i} sums to {sum}")));
            }
        }
        Ok(Self { kernel })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        Self::from_kernel(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.nrows() == 0
    }
}

/// `sum_z |(omega K)(z) - omega(z)|`.
pub fn stationarity_residual(chain: &StateActionChain, omega: &[f64]) -> f64 {
    let w = DVector::from_column_slice(omega);
    let moved = chain.kernel.tr_mul(&w);
    (moved - w).lp_norm(1)
}

/// Linear solve with one balance equation replaced by normalization, then
/// power iteration if the system is singular or the answer is unusable.
pub fn stationary_distribution(chain: &StateActionChain, tol: f64) -> Result<Vec<f64>> {
    let n = chain.len();
    let mut system = chain.kernel.transpose() - DMatrix::identity(n, n);
    system.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;

    if let Some(sol) = system.lu().solve(&rhs) {
        if sol.iter().all(|x| x.is_finite() && *x > -tol) {
            let mut omega: Vec<f64> = sol.iter().map(|x| x.max(0.0)).collect();
            let total: f64 = omega.iter().sum();
            omega.iter_mut().for_each(|x| *x /= total);
            if stationarity_residual(chain, &omega) <= tol {
                return Ok(omega);
            }
        }
    }

    let mut omega = DVector::from_element(n, 1.0 / n as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_ITERATION_BUDGET {
        let next = chain.kernel.tr_mul(&omega);
        residual = (&next - &omega).lp_norm(1);
        omega = next;
        if residual <= tol {
            let total = omega.sum();
            return Ok(omega.iter().map(|x| x / total).collect());
        }
    }
    Err(Error::NonConvergence {
        what: "stationary distribution",
        residual,
    })
}

/// Directed state graph: `s -> s''` iff some action reaches `s''` from `s`.
fn state_graph(mdp: &TabularMdp) -> Vec<Vec<usize>> {
    (0..mdp.num_states())
        .map(|s| {
            (0..mdp.num_states())
                .filter(|&next| (0..mdp.num_actions()).any(|a| mdp.prob(s, a, next) > 0.0))
                .collect()
        })
        .collect()
}

/// Shortest path lengths (at least one step) from `source` to every state;
/// `None` when unreachable. The entry for `source` is its shortest return.
fn bfs_lengths(graph: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; graph.len()];
    let mut queue = VecDeque::new();
    for &next in &graph[source] {
        if dist[next].is_none() {
            dist[next] = Some(1);
            queue.push_back(next);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for &next in &graph[u] {
            if dist[next].is_none() {
                dist[next] = Some(d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

/// Longest shortest path between distinct states. One-state MDPs have `m = 1`.
pub fn connectivity_m(mdp: &TabularMdp) -> Result<usize> {
    let graph = state_graph(mdp);
    let mut m = 1;
    for s in 0..graph.len() {
        let dist = bfs_lengths(&graph, s);
        for (target, d) in dist.iter().enumerate() {
            if target == s {
                continue;
            }
            match d {
                Some(d) => m = m.max(*d),
                None => {
                    return Err(Error::NonCommunicating {
                        from: s,
                        to: target,
                    })
                }
            }
        }
    }
    Ok(m)
}

/// Same as [`connectivity_m`] but also counting each state's shortest
/// return to itself. Differs from `connectivity_m` only on graphs where a
/// return trip is longer than every crossing.
pub fn connectivity_m_with_returns(mdp: &TabularMdp) -> Result<usize> {
    let m = connectivity_m(mdp)?;
    let graph = state_graph(mdp);
    let longest_return = (0..graph.len())
        .filter_map(|s| bfs_lengths(&graph, s)[s])
        .max()
        .unwrap_or(1);
    Ok(m.max(longest_return))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub num_states: usize,
    pub num_actions: usize,
    pub m: usize,
    pub r: usize,
    pub sigma_u: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta: f64,
    pub omega_u: Vec<f64>,
    pub t_mix: usize,
    pub aperiodic_uniform: bool,
}

fn min_positive(matrix: &DMatrix<f64>) -> f64 {
    matrix
        .iter()
        .copied()
        .filter(|x| *x > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Smallest `l >= 1` with `K^l` entrywise positive, and that power. The
/// search stops at Wielandt's bound `(n-1)^2 + 1`; beyond it the chain is
/// not primitive.
pub fn primitivity_power(chain: &StateActionChain) -> Result<(usize, DMatrix<f64>)> {
    let n = chain.len();
    let cap = (n - 1) * (n - 1) + 1;
    let mut power = chain.kernel.clone();
    for l in 1..=cap {
        if power.iter().all(|x| *x > 0.0) {
            return Ok((l, power));
        }
        if l < cap {
            power = &power * &chain.kernel;
        }
    }
    let (z, z_next) = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .find(|&(i, j)| power[(i, j)] <= 0.0)
        .expect("some entry is zero");
    Err(Error::NonErgodic {
        from: z,
        to: z_next,
        steps: cap,
    })
}

/// First `n >= 1` with `max_z TV(K^n(z, .), omega) <= 1/4`.
pub fn mixing_time(chain: &StateActionChain, omega: &[f64]) -> Result<usize> {
    let n = chain.len();
    let mut power = chain.kernel.clone();
    let mut worst = f64::INFINITY;
    for step in 1..=MIXING_TIME_CAP {
        worst = (0..n)
            .map(|z| {
                0.5 * (0..n)
                    .map(|j| (power[(z, j)] - omega[j]).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if worst <= 0.25 {
            return Ok(step);
        }
        power = &power * &chain.kernel;
    }
    Err(Error::NonConvergence {
        what: "mixing time",
        residual: worst,
    })
}

/// Diagnostics of the uniform-policy chain of `mdp`.
pub fn ergodicity_report(mdp: &TabularMdp, tol: f64) -> Result<ErgodicityReport> {
    let m = connectivity_m(mdp)?;
    let chain = StateActionChain::uniform(mdp);
    let (r, power_r) = primitivity_power(&chain)?;
    let omega_u = stationary_distribution(&chain, tol)?;

    let n = chain.len();
    let mut sigma_u = f64::INFINITY;
    for z in 0..n {
        for z_next in 0..n {
            sigma_u = sigma_u.min(power_r[(z, z_next)] / omega_u[z_next]);
        }
    }
    // P^r(z,.) averages to omega_u under omega_u, so the ratio cannot exceed 1
    // except by rounding.
    let sigma_u = sigma_u.min(1.0);

    let eta1 = min_positive(&chain.kernel);
    let mut eta2 = f64::INFINITY;
    let mut power = chain.kernel.clone();
    for step in 1..=m + 1 {
        eta2 = eta2.min(min_positive(&power));
        if step <= m {
            power = &power * &chain.kernel;
        }
    }
    let t_mix = mixing_time(&chain, &omega_u)?;

    Ok(ErgodicityReport {
        num_states: mdp.num_states(),
        num_actions: mdp.num_actions(),
        m,
        r,
        sigma_u,
        eta1,
        eta2,
        eta: eta1 * eta2,
        omega_u,
        t_mix,
        aperiodic_uniform: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricConstants {
    pub sigma: f64,
    pub theta: f64,
    pub c: f64,
    pub rho: f64,
    pub l: f64,
}

/// Geometric-ergodicity constants of the kernel of
/// `epsilon * pi_u + (1 - epsilon) * pi` whose stationary law is `omega`:
/// `||P^n - W|| <= C rho^n` and `L = C / (1 - rho)`.
pub fn geometric_constants(
    epsilon: f64,
    policy_floor: f64,
    omega: &[f64],
    report: &ErgodicityReport,
) -> Result<GeometricConstants> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if omega.len() != report.omega_u.len() || omega.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::Domain("omega must be strictly positive on Z".into()));
    }
    let r = report.r as i32;
    let ratio = report
        .omega_u
        .iter()
        .zip(omega)
        .map(|(u, w)| u / w)
        .fold(f64::INFINITY, f64::min);
    let mixture =
        epsilon.powi(r) + ((1.0 - epsilon) * report.num_actions as f64 * policy_floor).powi(r);
    let sigma = mixture * report.sigma_u * ratio;
    let theta = 1.0 - sigma;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!(
            "theta = {theta} is outside (0, 1); sigma = {sigma}"
        )));
    }
    let c = 2.0 / theta;
    let rho = theta.powf(1.0 / report.r as f64);
    Ok(GeometricConstants {
        sigma,
        theta,
        c,
        rho,
        l: c / (1.0 - rho),
    })
}

/// `lambda_alpha = (m+1)^2 / eta^2 * ln^2(1 + SA / alpha)`.
pub fn forced_exploration_lambda(alpha: f64, report: &ErgodicityReport, num_pairs: usize) -> f64 {
    let m1 = (report.m + 1) as f64;
    let log = (1.0 + num_pairs as f64 / alpha).ln();
    m1 * m1 / (report.eta * report.eta) * log * log
}

/// `|| (I - K + 1 omega^T)^{-1} ||_inf`.
pub fn condition_number(chain: &StateActionChain, omega: &[f64]) -> Result<f64> {
    let n = chain.len();
    if omega.len() != n {
        return Err(Error::Validation(
            "omega length does not match chain".into(),
        ));
    }
    let w = DVector::from_column_slice(omega);
    let ones = DVector::from_element(n, 1.0);
    let fundamental = DMatrix::identity(n, n) - &chain.kernel + ones * w.transpose();
    let inverse = fundamental
        .try_inverse()
        .ok_or(Error::Singular("fundamental matrix"))?;
    Ok(inf_norm(&inverse))
}

/// Maximum absolute row sum.
pub fn inf_norm(matrix: &DMatrix<f64>) -> f64 {
    matrix
        .row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
