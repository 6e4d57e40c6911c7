mod common;

use common::fixed_policy_frequencies;
use mdp_nas::allocation::{oracle_policy, solve_oracle_allocation, SolverOptions};
use mdp_nas::instances::{gen_random_ergodic, river_swim};
use mdp_nas::mdp::solve_optimal;
use mdp_nas::navigation::{ExplorationSchedule, NavigatorState, ScheduleKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fixed_oracle_policy_frequencies_converge() {
    let mdp = gen_random_ergodic(5, 5, 0.7, 42).unwrap();
    let sol = solve_optimal(&mdp, 1e-10).unwrap();
    let (alloc, _) = solve_oracle_allocation(&mdp, &sol, &SolverOptions::default()).unwrap();
    let policy = oracle_policy(&alloc).unwrap();
    let freq = fixed_policy_frequencies(&mdp, &policy, 1_000_000, 3);
    let gap = freq
        .iter()
        .zip(&alloc.weights)
        .map(|(f, w)| (f - w).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 0.02, "sup gap {gap}");
}

#[test]
fn bookkeeping_holds_for_both_rules() {
    let mdp = river_swim(4, 0.9).unwrap();
    let schedule = ExplorationSchedule::new(ScheduleKind::Theorem, 3).unwrap();
    for rule in ["c", "d"] {
        let mut nav = NavigatorState::new(&mdp, rule, 100, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5000 {
            nav.advance(&mdp, &schedule, &mut rng);
        }
        let n_s = mdp.num_states();
        assert_eq!(nav.counts().iter().sum::<u64>(), nav.t());
        for (z, &n) in nav.counts().iter().enumerate() {
            let row: u64 = nav.transition_counts()[z * n_s..(z + 1) * n_s].iter().sum();
            assert_eq!(row, n);
            assert!(nav.reward_sums()[z] >= 0.0 && nav.reward_sums()[z] <= n as f64);
        }
        let target = nav.target_policy();
        for s in 0..n_s {
            assert!((target.row(s).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let behavior = nav.behavior_policy(&schedule);
        let floor = schedule.rate(nav.t()) / mdp.num_actions() as f64;
        assert!(behavior.probs().iter().all(|p| *p >= floor * (1.0 - 1e-15)));
    }
}
