use std::path::{Path, PathBuf};

use dyce_core::io::{self, store_entry_path};
use dyce_core::runtime::mean_cost;
use dyce_core::search::{lambda_grid, search as run_search};
use dyce_core::trace::{load_trace, write_trace};
use dyce_core::{
    evaluate, simulate, standalone_exits, sweep_lambda, synthesize_trace, uniform_baseline, CostModel, ExitTrace,
    FrontierEntry,
};
use serde_json::json;

use crate::report::{digest_inputs, report_path_for, RunTimer};
use crate::{
    BaselineArgs, Cli, CliError, CliResult, Command, PlotArgs, SearchArgs, SimulateArgs, SweepArgs, SynthesizeArgs,
};

/// Per-sample mean cost and the count-based `C` may differ by rounding only.
const COST_AGREEMENT: f64 = 1e-12;

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Search(args) => search(cli, args),
        Command::Sweep(args) => sweep(cli, args),
        Command::Simulate(args) => simulate_cmd(cli, args),
        Command::Baseline(args) => baseline(cli, args),
        Command::Standalone => standalone(cli),
        Command::Validate => validate(cli),
        Command::Plot(args) => plot(cli, args),
        Command::Synthesize(args) => synthesize(cli, args),
    }
}

fn trace_path(cli: &Cli) -> CliResult<&Path> {
    cli.trace
        .as_deref()
        .ok_or_else(|| CliError::input("--trace <dir> is required for this command"))
}

fn load(cli: &Cli) -> CliResult<(ExitTrace, CostModel)> {
    load_trace(trace_path(cli)?).map_err(CliError::input)
}

fn out_or(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn check_lambda(lambda: f64) -> CliResult<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(CliError::input(format!("lambda out of range: {lambda} (expected 0 <= lambda <= 1)")))
    }
}

fn fmt_list<T: std::fmt::Display>(items: &[T]) -> String {
    let inner: Vec<String> = items.iter().map(ToString::to_string).collect();
    format!("[{}]", inner.join(","))
}

fn search(cli: &Cli, args: &SearchArgs) -> CliResult<()> {
    check_lambda(args.lambda)?;
    let settings = args.options.settings();
    settings.validate().map_err(CliError::input)?;
    let timer = RunTimer::start("search");
    let (trace, costs) = load(cli)?;
    let result = run_search(&trace, &costs, args.lambda, &settings).map_err(CliError::search)?;
    if result.round_limit_reached {
        eprintln!("warning: iterative search stopped at the round limit ({})", settings.max_rounds);
    }

    let out = out_or(cli, "config.json");
    let entry = FrontierEntry {
        lambda: args.lambda,
        config: result.config,
        metrics: result.metrics,
    };
    io::write_config(&out, &entry).map_err(CliError::input)?;
    println!("k = {}", fmt_list(&entry.config.k));
    println!("t = {}", fmt_list(&entry.config.t));
    println!("A = {}", entry.metrics.relative_accuracy);
    println!("C = {}", entry.metrics.relative_complexity);
    println!("f = {}", entry.metrics.objective);

    timer.finish(
        &report_path_for(&out, false),
        digest_inputs(trace_path(cli)?)?,
        json!({ "lambda": args.lambda, "search": settings }),
        vec![out],
    )?;
    Ok(())
}

fn sweep(cli: &Cli, args: &SweepArgs) -> CliResult<()> {
    let grid = lambda_grid(args.start, args.end, args.step).map_err(CliError::input)?;
    let settings = args.options.settings();
    settings.validate().map_err(CliError::input)?;
    let timer = RunTimer::start("sweep");
    let (trace, costs) = load(cli)?;
    let sweep = sweep_lambda(&trace, &costs, &grid, &settings).map_err(CliError::search)?;

    let out = out_or(cli, "sweep");
    let paths = io::write_store(&out, &sweep.entries).map_err(CliError::input)?;
    let frontier = out.join("frontier.csv");
    io::write_frontier(&frontier, &sweep.entries, &paths).map_err(CliError::input)?;
    let pareto_paths: Vec<PathBuf> = sweep.pareto.iter().map(|e| store_entry_path(e.lambda)).collect();
    let pareto = out.join("frontier_pareto.csv");
    io::write_frontier(&pareto, &sweep.pareto, &pareto_paths).map_err(CliError::input)?;

    println!(
        "{} configurations, {} on the Pareto frontier",
        sweep.entries.len(),
        sweep.pareto.len()
    );
    println!("{:>8} {:>10} {:>10} {:>10}  k", "lambda", "A", "C", "f");
    for entry in &sweep.pareto {
        println!(
            "{:>8} {:>10.6} {:>10.6} {:>10.6}  {}",
            entry.lambda,
            entry.metrics.relative_accuracy,
            entry.metrics.relative_complexity,
            entry.metrics.objective,
            fmt_list(&entry.config.k)
        );
    }

    let mut outputs = vec![frontier, pareto];
    outputs.extend(paths.iter().map(|p| out.join(p)));
    timer.finish(
        &report_path_for(&out, true),
        digest_inputs(trace_path(cli)?)?,
        json!({ "start": args.start, "end": args.end, "step": args.step, "search": settings }),
        outputs,
    )?;
    Ok(())
}

fn simulate_cmd(cli: &Cli, args: &SimulateArgs) -> CliResult<()> {
    let timer = RunTimer::start("simulate");
    let (trace, costs) = load(cli)?;
    let entry = io::read_config(&args.config).map_err(CliError::input)?;
    let lambda = args.lambda.unwrap_or(entry.lambda);
    check_lambda(lambda)?;
    entry.config.validate(&trace).map_err(CliError::input)?;

    let (outcomes, replayed) = simulate(&trace, &costs, &entry.config, lambda).map_err(CliError::input)?;
    let formulas = evaluate(&trace, &costs, &entry.config, lambda).map_err(CliError::input)?;
    if replayed != formulas {
        return Err(CliError::internal(format!(
            "controller replay disagrees with set formulas: {replayed:?} vs {formulas:?}"
        )));
    }
    let walked = mean_cost(&outcomes);
    if (walked - formulas.relative_complexity).abs() > COST_AGREEMENT {
        return Err(CliError::internal(format!(
            "mean per-sample cost {walked} disagrees with C = {}",
            formulas.relative_complexity
        )));
    }
    if lambda == entry.lambda && entry.metrics != replayed {
        eprintln!("note: metrics stored in {} differ from this replay", args.config.display());
    }

    let out = out_or(cli, "outcomes.csv");
    io::write_outcomes(&out, &outcomes).map_err(CliError::input)?;
    println!("{}", serde_json::to_string_pretty(&replayed).expect("report serializes"));

    timer.finish(
        &report_path_for(&out, false),
        digest_inputs(trace_path(cli)?)?,
        json!({ "config": args.config, "lambda": lambda }),
        vec![out],
    )?;
    Ok(())
}

fn baseline(cli: &Cli, args: &BaselineArgs) -> CliResult<()> {
    check_lambda(args.lambda)?;
    if args.grid_size < 2 {
        return Err(CliError::input("--grid needs at least 2 thresholds"));
    }
    let timer = RunTimer::start("baseline");
    let (trace, costs) = load(cli)?;
    let last = (args.grid_size - 1) as f64;
    let grid: Vec<f64> = (0..args.grid_size).map(|i| i as f64 / last).collect();
    let result = uniform_baseline(&trace, &costs, args.lambda, args.k_fixed, &grid).map_err(CliError::input)?;

    let out = out_or(cli, "baseline.csv");
    let rows = result.curve.iter().map(|(t, m)| {
        vec![
            io::format_real(*t),
            io::format_real(m.relative_accuracy),
            io::format_real(m.relative_complexity),
            io::format_real(m.objective),
        ]
    });
    io::write_table(&out, &["t", "A", "C", "f"], rows).map_err(CliError::input)?;
    println!("best t = {}", result.threshold);
    println!("k = {}", fmt_list(&result.config.k));
    println!("A = {}", result.metrics.relative_accuracy);
    println!("C = {}", result.metrics.relative_complexity);
    println!("f = {}", result.metrics.objective);

    timer.finish(
        &report_path_for(&out, false),
        digest_inputs(trace_path(cli)?)?,
        json!({ "lambda": args.lambda, "k_fixed": args.k_fixed, "grid_size": args.grid_size }),
        vec![out],
    )?;
    Ok(())
}

fn standalone(cli: &Cli) -> CliResult<()> {
    let timer = RunTimer::start("standalone");
    let (trace, costs) = load(cli)?;
    let rows = standalone_exits(&trace, &costs);
    let out = out_or(cli, "standalone.csv");
    io::write_table(
        &out,
        &["n", "k", "accuracy", "complexity"],
        rows.iter().map(|r| {
            vec![
                (r.position + 1).to_string(),
                r.exit.to_string(),
                io::format_real(r.accuracy),
                io::format_real(r.complexity),
            ]
        }),
    )
    .map_err(CliError::input)?;
    println!("{:>4} {:>4} {:>10} {:>10}", "n", "k", "accuracy", "complexity");
    for r in &rows {
        println!("{:>4} {:>4} {:>10.6} {:>10.6}", r.position + 1, r.exit, r.accuracy, r.complexity);
    }
    timer.finish(
        &report_path_for(&out, false),
        digest_inputs(trace_path(cli)?)?,
        json!({}),
        vec![out],
    )?;
    Ok(())
}

fn validate(cli: &Cli) -> CliResult<()> {
    let (trace, costs) = load(cli)?;
    println!(
        "ok: M={} N={} K={} a_ori={} (0 violations)",
        trace.sample_count(),
        trace.position_count(),
        fmt_list(trace.candidates_per_position()),
        costs.base_accuracy
    );
    Ok(())
}

fn plot(cli: &Cli, args: &PlotArgs) -> CliResult<()> {
    let entries = io::read_frontier(&args.frontier).map_err(CliError::input)?;
    let pareto_path = args.frontier.with_file_name("frontier_pareto.csv");
    let pareto = if pareto_path.exists() {
        io::read_frontier(&pareto_path).map_err(CliError::input)?
    } else {
        Vec::new()
    };
    let out = out_or(cli, "frontier.svg");
    std::fs::write(&out, crate::plot::render(&entries, &pareto))
        .map_err(|e| CliError::input(format!("{}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn synthesize(cli: &Cli, args: &SynthesizeArgs) -> CliResult<()> {
    let positions = args.candidates.len();
    let (trace, costs) = synthesize_trace(cli.seed, args.samples, positions, &args.candidates, args.calibration)
        .map_err(CliError::input)?;
    let out = out_or(cli, "synthetic");
    let name = format!(
        "synthetic seed={} M={} K={} calibration={}",
        cli.seed,
        args.samples,
        fmt_list(&args.candidates),
        args.calibration
    );
    write_trace(&out, &name, &trace, &costs).map_err(CliError::input)?;
    println!("wrote {}", out.display());
    Ok(())
}
