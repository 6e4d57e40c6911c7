use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// `|sum_a w(s,a) - sum_{s',a'} p(s|s',a') w(s',a')|` for every state.
pub fn navigation_residual(mdp: &TabularMdp, omega: &[f64]) -> Vec<f64> {
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    let mut inflow = vec![0.0; n_s];
    let mut outflow = vec![0.0; n_s];
    for s in 0..n_s {
        for a in 0..n_a {
            let w = omega[s * n_a + a];
            outflow[s] += w;
            if w != 0.0 {
                for (next, p) in mdp.next_state_probs(s, a).iter().enumerate() {
                    inflow[next] += p * w;
                }
            }
        }
    }
    inflow
        .iter()
        .zip(&outflow)
        .map(|(i, o)| (o - i).abs())
        .collect()
}

pub fn max_navigation_residual(mdp: &TabularMdp, omega: &[f64]) -> f64 {
    navigation_residual(mdp, omega)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    x.iter().map(|v| (v - threshold).max(0.0)).collect()
}

/// Orthogonal projection onto the affine set `{w : C w = d}` of flow-balance
/// equations plus total mass one. `C (C C^T)^+` is factored once per MDP.
#[derive(Debug, Clone)]
pub struct FlowProjector {
    constraints: DMatrix<f64>,
    target: DVector<f64>,
    correction: DMatrix<f64>,
}

impl FlowProjector {
    pub fn new(mdp: &TabularMdp) -> Self {
        let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
        let n = n_s * n_a;
        let mut constraints = DMatrix::zeros(n_s + 1, n);
        for s in 0..n_s {
            for a in 0..n_a {
                let z = s * n_a + a;
                constraints[(s, z)] += 1.0;
                for (next, p) in mdp.next_state_probs(s, a).iter().enumerate() {
                    constraints[(next, z)] -= p;
                }
                constraints[(n_s, z)] = 1.0;
            }
        }
        let mut target = DVector::zeros(n_s + 1);
        target[n_s] = 1.0;
        // Flow rows always sum to zero, so the Gram matrix is singular.
        let gram = &constraints * constraints.transpose();
        let gram_pinv = gram
            .pseudo_inverse(1e-12)
            .expect("pseudo-inverse with non-negative epsilon");
        let correction = constraints.transpose() * gram_pinv;
        Self {
            constraints,
            target,
            correction,
        }
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let violation = &self.constraints * x - &self.target;
        x - &self.correction * violation
    }

    /// Component of `direction` tangent to the affine set.
    pub fn tangent(&self, direction: &DVector<f64>) -> DVector<f64> {
        direction - &self.correction * (&self.constraints * direction)
    }
}

/// Dykstra's alternating projections between the flow subspace and the
/// simplex.
pub(crate) fn dykstra(
    mdp: &TabularMdp,
    projector: &FlowProjector,
    x: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<Vec<f64>> {
    let n = x.len();
    let mut current = DVector::from_column_slice(x);
    let mut p = DVector::zeros(n);
    let mut q = DVector::zeros(n);
    let mut residual = f64::INFINITY;
    for _ in 0..max_sweeps {
        let y = projector.project(&(&current + &p));
        p = &current + &p - &y;
        let shifted = &y + &q;
        let next = DVector::from_vec(project_simplex(shifted.as_slice()));
        q = shifted - &next;
        let moved = (&next - &current).amax();
        current = next;
        if moved < tol {
            residual = max_navigation_residual(mdp, current.as_slice());
            if residual <= 10.0 * tol {
                return Ok(current.as_slice().to_vec());
            }
        }
    }
    if residual.is_infinite() {
        residual = max_navigation_residual(mdp, current.as_slice());
    }
    Err(Error::NonConvergence {
        what: "flow-polytope projection",
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        for x in p {
            assert_abs_diff_eq!(x, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        let p = project_simplex(&[-1.0, 3.0, 0.1]);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn residual_examples() {
        let one = TabularMdp::new(1, 3, 0.5, vec![1.0; 3], vec![0.0; 3]).unwrap();
        assert!(navigation_residual(&one, &[0.2, 0.5, 0.3])
            .iter()
            .all(|r| *r == 0.0));

        // pair (0,0) moves to state 1 with certainty
        let p = vec![0.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        let mdp = TabularMdp::new(2, 2, 0.5, p, vec![0.0; 4]).unwrap();
        let r = navigation_residual(&mdp, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(r[0], 1.0);
    }

    #[test]
    fn affine_projection_satisfies_constraints() {
        let p = vec![0.7, 0.3, 0.2, 0.8, 0.5, 0.5, 0.1, 0.9];
        let mdp = TabularMdp::new(2, 2, 0.5, p, vec![0.0; 4]).unwrap();
        let proj = FlowProjector::new(&mdp);
        let y = proj.project(&DVector::from_vec(vec![0.9, -0.2, 0.4, 0.3]));
        assert_abs_diff_eq!(y.sum(), 1.0, epsilon = 1e-12);
        assert!(max_navigation_residual(&mdp, y.as_slice()) < 1e-12);
    }
}
