//! Full identification runs, Monte-Carlo campaigns and their summaries.

mod report;
mod starvation;
mod vrql;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use report::{export_summary_csv, export_trace_csv, read_csv_matrix};
pub use starvation::{starvation_demo, BoundCheck, StarvationReport};
pub use vrql::{vrql_complexity, vrql_for_instance, VrqlParams, VrqlReport};

use crate::allocation::{solve_oracle_allocation, SolverOptions};
use crate::chain::connectivity_m;
use crate::error::{Error, Result};
use crate::mdp::{solve_optimal, TabularMdp, ValueSolution, DEFAULT_SOLVE_TOL};
use crate::navigation::{canonical_rule_name, ExplorationSchedule, NavigatorState, ScheduleKind};
use crate::stopping::{StoppingRule, ThresholdTracker};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Navigation rule name, see [`crate::navigation::rules`].
    pub rule: String,
    pub schedule: ScheduleKind,
    /// Connectivity parameter for the communicating schedules; computed
    /// from the instance when absent.
    pub m: Option<usize>,
    pub delta: f64,
    pub recompute_period: u64,
    pub trace_period: u64,
    pub max_steps: u64,
    pub seed: u64,
    /// When false the run always lasts `max_steps`; the statistic is still
    /// evaluated at trace points.
    pub stopping: bool,
    /// Iteration budget of each oracle recompute.
    pub solver_max_iters: usize,
    pub initial_state: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rule: "d".into(),
            schedule: ScheduleKind::Theorem,
            m: None,
            delta: 0.1,
            recompute_period: 1000,
            trace_period: 10_000,
            max_steps: 100_000_000,
            seed: 0,
            stopping: true,
            solver_max_iters: 2000,
            initial_state: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        canonical_rule_name(&self.rule)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Validation(format!(
                "delta {} must lie in (0, 1)",
                self.delta
            )));
        }
        if self.max_steps == 0 || self.recompute_period == 0 || self.trace_period == 0 {
            return Err(Error::Validation(
                "max_steps, recompute_period and trace_period must be >= 1".into(),
            ));
        }
        if self.solver_max_iters == 0 {
            return Err(Error::Validation("solver_max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u64,
    pub eps: f64,
    pub min_visits: u64,
    /// `log10 max_z |N_z(t)/t - w*_z| / w*_z` against the true oracle allocation.
    pub rel_dist_log10: f64,
    pub statistic: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run_index: u64,
    pub seed: u64,
    pub tau: u64,
    pub answered_policy: Vec<usize>,
    /// Meaningful only when `hit_cap` is false.
    pub correct: bool,
    pub hit_cap: bool,
    pub final_rel_dist_log10: f64,
    pub final_max_abs_error: f64,
    pub trace: Vec<TraceRow>,
}

/// Ground truth shared by every run on one instance.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub mdp: TabularMdp,
    pub config: RunConfig,
    pub truth: ValueSolution,
    pub oracle_weights: Vec<f64>,
    pub schedule: ExplorationSchedule,
}

impl RunContext {
    pub fn new(mdp: &TabularMdp, config: &RunConfig) -> Result<Self> {
        config.validate()?;
        if config.initial_state >= mdp.num_states() {
            return Err(Error::Validation(format!(
                "initial state {} out of range",
                config.initial_state
            )));
        }
        let truth = solve_optimal(mdp, DEFAULT_SOLVE_TOL)?;
        let (allocation, _) = solve_oracle_allocation(mdp, &truth, &SolverOptions::default())?;
        let m = match (config.schedule, config.m) {
            (ScheduleKind::Ergodic, m) => m.unwrap_or(1),
            (_, Some(m)) => m,
            (_, None) => connectivity_m(mdp)?,
        };
        Ok(Self {
            mdp: mdp.clone(),
            config: config.clone(),
            truth,
            oracle_weights: allocation.weights,
            schedule: ExplorationSchedule::new(config.schedule, m)?,
        })
    }

    /// `(log10 of the max relative error, max absolute error)` of the visit
    /// frequencies against the true oracle allocation.
    pub fn allocation_error(&self, counts: &[u64], t: u64) -> (f64, f64) {
        let t = t.max(1) as f64;
        let mut rel = 0.0f64;
        let mut abs = 0.0f64;
        for (&n, &w) in counts.iter().zip(&self.oracle_weights) {
            let diff = (n as f64 / t - w).abs();
            abs = abs.max(diff);
            rel = rel.max(if w > 0.0 { diff / w } else { f64::INFINITY });
        }
        (rel.log10(), abs)
    }

    /// One identification run with the stream `seed ^ run_index`.
    pub fn run(&self, run_index: u64) -> Result<RunRecord> {
        let cfg = &self.config;
        let mdp = &self.mdp;
        let seed = cfg.seed ^ run_index;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let solver = SolverOptions {
            max_iters: cfg.solver_max_iters,
            ..SolverOptions::default()
        };
        let mut nav = NavigatorState::new(mdp, &cfg.rule, cfg.recompute_period, cfg.initial_state)?
            .with_solver(solver);
        let rule = StoppingRule::new(cfg.delta, mdp.num_states(), mdp.num_actions())?;
        let mut thresholds = ThresholdTracker::new(&rule);
        let mut greedy: Option<Vec<usize>> = None;
        let mut trace = Vec::new();
        let mut stopped = false;

        while nav.t() < cfg.max_steps {
            let step = nav.advance(mdp, &self.schedule, &mut rng);
            let z = mdp.pair(step.state, step.action);
            thresholds.update(z, nav.counts()[z]);
            let t = nav.t();
            let trace_due = t % cfg.trace_period == 0;
            if !(cfg.stopping || trace_due) {
                continue;
            }
            let threshold = thresholds.threshold();
            let (statistic, stop) = match rule.decide_with_threshold(
                nav.empirical_mdp(),
                nav.counts(),
                t,
                greedy.as_deref(),
                threshold,
            ) {
                Ok(decision) => {
                    greedy = Some(decision.solution.optimal_policy);
                    (decision.statistic, decision.stop)
                }
                Err(_) => (f64::NAN, false),
            };
            if trace_due {
                trace.push(TraceRow {
                    t,
                    eps: self.schedule.rate(t),
                    min_visits: nav.counts().iter().copied().min().unwrap_or(0),
                    rel_dist_log10: self.allocation_error(nav.counts(), t).0,
                    statistic,
                    threshold,
                });
            }
            if cfg.stopping && stop {
                stopped = true;
                break;
            }
        }

        let tau = nav.t();
        let answered_policy = match greedy {
            Some(p) => p,
            None => solve_optimal(nav.empirical_mdp(), DEFAULT_SOLVE_TOL)?.optimal_policy,
        };
        let (final_rel_dist_log10, final_max_abs_error) = self.allocation_error(nav.counts(), tau);
        Ok(RunRecord {
            run_index,
            seed,
            tau,
            correct: answered_policy == self.truth.optimal_policy,
            answered_policy,
            hit_cap: !stopped,
            final_rel_dist_log10,
            final_max_abs_error,
            trace,
        })
    }

    /// Runs `0..n_runs` on `parallelism` threads; results are ordered by
    /// run index whatever the thread count.
    pub fn campaign(&self, n_runs: u64, parallelism: usize) -> Result<Vec<RunRecord>> {
        if n_runs == 0 {
            return Err(Error::Validation("n_runs must be >= 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism.max(1))
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
        pool.install(|| (0..n_runs).into_par_iter().map(|i| self.run(i)).collect())
    }
}

pub fn run_once(mdp: &TabularMdp, config: &RunConfig) -> Result<RunRecord> {
    RunContext::new(mdp, config)?.run(0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointQuantiles {
    pub t: u64,
    pub n: usize,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub n_runs: usize,
    pub n_capped: usize,
    pub n_errors: usize,
    /// Incorrect answers among runs that stopped, over all runs.
    pub error_rate: f64,
    /// Statistics of tau over runs that stopped; absent when every run was capped.
    pub mean_tau: Option<f64>,
    pub median_tau: Option<f64>,
    pub q10_tau: Option<f64>,
    pub q90_tau: Option<f64>,
    pub checkpoints: Vec<CheckpointQuantiles>,
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

pub fn summarize(records: &[RunRecord]) -> BenchSummary {
    let n_runs = records.len();
    let finished: Vec<&RunRecord> = records.iter().filter(|r| !r.hit_cap).collect();
    let n_errors = finished.iter().filter(|r| !r.correct).count();
    let mut taus: Vec<f64> = finished.iter().map(|r| r.tau as f64).collect();
    taus.sort_by(f64::total_cmp);
    let stat = |q: f64| (!taus.is_empty()).then(|| quantile(&taus, q));

    let mut by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for row in records.iter().flat_map(|r| &r.trace) {
        if !row.rel_dist_log10.is_nan() {
            by_t.entry(row.t).or_default().push(row.rel_dist_log10);
        }
    }
    let checkpoints = by_t
        .into_iter()
        .map(|(t, mut values)| {
            values.sort_by(f64::total_cmp);
            CheckpointQuantiles {
                t,
                n: values.len(),
                q10: quantile(&values, 0.1),
                q50: quantile(&values, 0.5),
                q90: quantile(&values, 0.9),
            }
        })
        .collect();

    BenchSummary {
        n_runs,
        n_capped: n_runs - finished.len(),
        n_errors,
        error_rate: if n_runs == 0 {
            0.0
        } else {
            n_errors as f64 / n_runs as f64
        },
        mean_tau: (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64),
        median_tau: stat(0.5),
        q10_tau: stat(0.1),
        q90_tau: stat(0.9),
        checkpoints,
    }
}

pub fn monte_carlo(
    mdp: &TabularMdp,
    config: &RunConfig,
    n_runs: u64,
    parallelism: usize,
) -> Result<BenchSummary> {
    let records = RunContext::new(mdp, config)?.campaign(n_runs, parallelism)?;
    Ok(summarize(&records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::river_swim;
    use crate::stopping::StoppingRule;

    fn bandit() -> TabularMdp {
        TabularMdp::new(1, 2, 0.0, vec![1.0, 1.0], vec![0.9, 0.5]).unwrap()
    }

    #[test]
    fn quantile_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn bandit_run_stops_correctly_after_oracle_crossing() {
        let mdp = bandit();
        let config = RunConfig {
            schedule: ScheduleKind::Ergodic,
            seed: 3,
            ..RunConfig::default()
        };
        let record = run_once(&mdp, &config).unwrap();
        assert!(!record.hit_cap);
        assert!(record.correct);
        assert_eq!(record.answered_policy, vec![0]);
        // U >= 50 for any allocation and the threshold is smallest with no visits
        let rule = StoppingRule::new(0.1, 1, 2).unwrap();
        let floor = rule.threshold(&[0, 0]);
        let first_possible = (1..).find(|&t: &u64| t as f64 / 50.0 >= floor).unwrap();
        assert!(
            record.tau >= first_possible,
            "{} < {first_possible}",
            record.tau
        );
    }

    #[test]
    fn runs_are_deterministic() {
        let mdp = river_swim(3, 0.9).unwrap();
        let config = RunConfig {
            max_steps: 3000,
            trace_period: 500,
            schedule: ScheduleKind::Communicating,
            ..RunConfig::default()
        };
        let a = run_once(&mdp, &config).unwrap();
        let b = run_once(&mdp, &config).unwrap();
        assert_eq!(a, b);
        assert!(a.hit_cap);
        assert_eq!(a.tau, 3000);
        assert_eq!(a.trace.len(), 6);
    }

    #[test]
    fn summary_excludes_capped_runs() {
        let rec = |tau, correct, hit_cap| RunRecord {
            run_index: 0,
            seed: 0,
            tau,
            answered_policy: vec![],
            correct,
            hit_cap,
            final_rel_dist_log10: 0.0,
            final_max_abs_error: 0.0,
            trace: vec![],
        };
        let s = summarize(&[
            rec(10, true, false),
            rec(30, false, false),
            rec(99, false, true),
        ]);
        assert_eq!(s.n_capped, 1);
        assert_eq!(s.n_errors, 1);
        assert!((s.error_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.mean_tau, Some(20.0));
        assert_eq!(s.median_tau, Some(20.0));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mdp = bandit();
        for cfg in [
            RunConfig {
                delta: 1.0,
                ..RunConfig::default()
            },
            RunConfig {
                max_steps: 0,
                ..RunConfig::default()
            },
            RunConfig {
                rule: "z".into(),
                ..RunConfig::default()
            },
        ] {
            assert!(run_once(&mdp, &cfg).unwrap_err().is_validation());
        }
    }
}
