mod common;

use common::{
    ergodic_probes, geometric_violations, random_instance, random_policy, rng,
    schweitzer_violations, sparse_instance,
};
use mdp_nas::chain::{
    condition_number, connectivity_m, stationarity_residual, stationary_distribution,
    StateActionChain,
};

#[test]
fn geometric_ergodicity_bound_holds() {
    let probes = ergodic_probes(10);
    assert_eq!(geometric_violations(&probes), (0, 500));
}

#[test]
fn schweitzer_inequality_holds() {
    assert_eq!(schweitzer_violations(20, 5), (0, 20));
}

#[test]
fn connectivity_bounds_reachability() {
    let mut checked = 0;
    for seed in 0..300 {
        let mdp = sparse_instance(seed);
        let Ok(m) = connectivity_m(&mdp) else {
            continue;
        };
        checked += 1;
        let n = mdp.num_states();
        // one-step OR graph
        let step: Vec<Vec<bool>> = (0..n)
            .map(|s| {
                (0..n)
                    .map(|t| (0..mdp.num_actions()).any(|a| mdp.prob(s, a, t) > 0.0))
                    .collect()
            })
            .collect();
        // reach[s][t]: t reachable from s within the number of steps so far
        let mut frontier = step.clone();
        let mut reach = step.clone();
        let mut within_m_minus_one = step.clone();
        for len in 2..=m {
            let next: Vec<Vec<bool>> = (0..n)
                .map(|s| {
                    (0..n)
                        .map(|t| (0..n).any(|u| frontier[s][u] && step[u][t]))
                        .collect()
                })
                .collect();
            for s in 0..n {
                for t in 0..n {
                    reach[s][t] |= next[s][t];
                }
            }
            if len < m {
                within_m_minus_one = reach.clone();
            }
            frontier = next;
        }
        for s in 0..n {
            for t in 0..n {
                if s != t {
                    assert!(
                        reach[s][t],
                        "seed {seed}: {t} not reachable from {s} in {m}"
                    );
                }
            }
        }
        if m > 1 {
            let all_shorter = (0..n).all(|s| (0..n).all(|t| s == t || within_m_minus_one[s][t]));
            assert!(!all_shorter, "seed {seed}: m = {m} is not tight");
        }
    }
    assert!(checked >= 20, "only {checked} communicating probes");
}

#[test]
fn stationary_outputs_are_distributions() {
    let mut r = rng(9);
    for k in 0..20 {
        let mdp = random_instance(200 + k, 5);
        let policy = random_policy(mdp.num_states(), mdp.num_actions(), &mut r);
        let chain = StateActionChain::from_policy(&mdp, &policy).unwrap();
        let w = stationary_distribution(&chain, 1e-12).unwrap();
        assert!(w.iter().all(|x| *x >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(stationarity_residual(&chain, &w) <= 1e-12);
        assert!(condition_number(&chain, &w).unwrap() >= 1.0 - 1e-12);
    }
}
