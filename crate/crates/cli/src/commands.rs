use anyhow::Result;
use mdp_nas::allocation::{
    hardness_profile, oracle_policy, solve_oracle_allocation, SolverOptions,
};
use mdp_nas::bench::{
    export_summary_csv, export_trace_csv, starvation_demo, summarize, vrql_for_instance, RunConfig,
    RunContext,
};
use mdp_nas::chain::{condition_number, ergodicity_report, StateActionChain};
use mdp_nas::instances::{
    counterexample_river_swim, gen_random_ergodic, instance_to_json, load_instance, river_swim,
    save_instance, InstanceMetadata,
};
use mdp_nas::mdp::{solve_optimal, DEFAULT_SOLVE_TOL};
use mdp_nas::navigation::canonical_rule_name;

use crate::output::{ensure_dir, kv, kv_list, kv_opt, write_json};
use crate::{BenchArgs, ChainArgs, GenArgs, Kind, RunArgs, SolveArgs, StarveArgs, VrqlArgs};

pub fn gen(args: GenArgs) -> Result<()> {
    let (mdp, name) = match args.kind {
        Kind::Ergodic => (
            gen_random_ergodic(args.states, args.actions, args.gamma, args.seed)?,
            format!("ergodic-{}x{}", args.states, args.actions),
        ),
        Kind::Riverswim => (
            river_swim(args.states, args.gamma)?,
            format!("riverswim-{}", args.states),
        ),
        Kind::Counterexample => (
            counterexample_river_swim(args.states, args.gamma)?,
            format!("counterexample-{}", args.states),
        ),
    };
    let metadata = Some(InstanceMetadata {
        name: Some(name),
        seed: matches!(args.kind, Kind::Ergodic).then_some(args.seed),
    });
    match args.out {
        Some(path) => {
            save_instance(&mdp, metadata, &path)?;
            kv("written", path.display());
        }
        None => println!("{}", instance_to_json(&mdp, metadata)),
    }
    Ok(())
}

pub fn solve(args: SolveArgs) -> Result<()> {
    let mdp = load_instance(&args.instance)?;
    let solution = solve_optimal(&mdp, DEFAULT_SOLVE_TOL)?;
    let profile = hardness_profile(&solution, mdp.gamma())?;
    let options = SolverOptions {
        max_iters: args.max_iters,
        ..SolverOptions::default()
    };
    let (allocation, u_o) = solve_oracle_allocation(&mdp, &solution, &options)?;
    let policy = oracle_policy(&allocation)?;

    kv("num_states", mdp.num_states());
    kv("num_actions", mdp.num_actions());
    kv_list("optimal_policy", &solution.optimal_policy);
    kv_list("optimal_value", &solution.optimal_value);
    kv("min_gap", solution.min_gap);
    kv("span", solution.span);
    kv_list("h", &profile.h);
    kv("h_star", profile.h_star);
    kv("t3", profile.t3);
    kv("t4", profile.t4);
    kv("u_o", u_o);
    kv_list("omega", &allocation.weights);
    kv("feasibility_residual", allocation.feasibility_residual);
    kv_list("oracle_policy", policy.probs());
    if let Some(path) = args.dump {
        write_json(&allocation, &path)?;
        kv("dumped", path.display());
    }
    Ok(())
}

pub fn chain(args: ChainArgs) -> Result<()> {
    let mdp = load_instance(&args.instance)?;
    let report = ergodicity_report(&mdp, 1e-12)?;
    let kappa = condition_number(&StateActionChain::uniform(&mdp), &report.omega_u)?;
    kv("num_states", report.num_states);
    kv("num_actions", report.num_actions);
    kv("m", report.m);
    kv("r", report.r);
    kv("sigma_u", report.sigma_u);
    kv("eta1", report.eta1);
    kv("eta2", report.eta2);
    kv("eta", report.eta);
    kv("t_mix", report.t_mix);
    kv("aperiodic_uniform", report.aperiodic_uniform);
    kv("kappa", kappa);
    kv_list("omega_u", &report.omega_u);
    if let Some(path) = args.dump {
        write_json(
            &serde_json::json!({ "report": report, "kappa": kappa }),
            &path,
        )?;
        kv("dumped", path.display());
    }
    Ok(())
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    Ok(RunConfig {
        rule: canonical_rule_name(&args.mode)?.to_string(),
        schedule: args.schedule,
        m: args.m,
        delta: args.delta,
        recompute_period: args.recompute_period,
        trace_period: args.trace_period,
        max_steps: args.max_steps,
        seed: args.seed,
        stopping: !args.no_stop,
        ..RunConfig::default()
    })
}

pub fn run(args: RunArgs) -> Result<()> {
    let mdp = load_instance(&args.instance)?;
    let config = run_config(&args)?;
    let record = RunContext::new(&mdp, &config)?.run(0)?;
    kv("rule", &config.rule);
    kv("schedule", config.schedule);
    kv("seed", record.seed);
    kv("tau", record.tau);
    kv("hit_cap", record.hit_cap);
    kv("correct", record.correct);
    kv_list("answered_policy", &record.answered_policy);
    kv("final_rel_dist_log10", record.final_rel_dist_log10);
    kv("final_max_abs_error", record.final_max_abs_error);
    if let Some(dir) = args.out {
        ensure_dir(&dir)?;
        export_trace_csv(&record.trace, &dir.join("trace.csv"))?;
        write_json(&record, &dir.join("run.json"))?;
        kv("out", dir.display());
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let mdp = load_instance(&args.run.instance)?;
    let config = run_config(&args.run)?;
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let records = RunContext::new(&mdp, &config)?.campaign(args.runs, threads)?;
    let summary = summarize(&records);
    kv("rule", &config.rule);
    kv("schedule", config.schedule);
    kv("n_runs", summary.n_runs);
    kv("n_capped", summary.n_capped);
    kv("n_errors", summary.n_errors);
    kv("error_rate", summary.error_rate);
    kv_opt("mean_tau", summary.mean_tau);
    kv_opt("median_tau", summary.median_tau);
    kv_opt("q10_tau", summary.q10_tau);
    kv_opt("q90_tau", summary.q90_tau);
    if let Some(dir) = args.run.out {
        ensure_dir(&dir)?;
        export_summary_csv(&summary, &dir.join("summary.csv"))?;
        write_json(&summary, &dir.join("summary.json"))?;
        for record in &records {
            export_trace_csv(
                &record.trace,
                &dir.join(format!("trace_{:04}.csv", record.run_index)),
            )?;
        }
        kv("out", dir.display());
    }
    Ok(())
}

pub fn vrql(args: VrqlArgs) -> Result<()> {
    let mdp = load_instance(&args.instance)?;
    let report = vrql_for_instance(&mdp, args.delta, [args.c1, args.c2, args.c3])?;
    let p = &report.params;
    kv("mu_min", p.mu_min);
    kv("t_mix", p.t_mix);
    kv("epsilon", p.epsilon);
    kv("epochs", report.epochs);
    kv("epoch_length", report.epoch_length);
    kv("inner_samples", report.inner_samples);
    kv("total", report.total);
    kv("log_base", report.log_base);
    kv("mixing_time_definition", report.mixing_time_definition);
    Ok(())
}

pub fn starve(args: StarveArgs) -> Result<()> {
    let report = starvation_demo(args.states, args.alpha, args.horizon, args.runs, args.seed)?;
    kv("num_states", report.num_states);
    kv("alpha", report.alpha);
    kv("horizon", report.horizon);
    kv("n_runs", report.n_runs);
    kv("reached", report.reached);
    kv("reach_fraction", report.reach_fraction);
    for check in &report.checks {
        println!(
            "check k={} frequency={} bound={} holds={}",
            check.k, check.frequency, check.bound, check.holds
        );
    }
    Ok(())
}
