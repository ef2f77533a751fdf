//! Command-line front end: generate reproducible scenarios, run a single
//! solver, or benchmark the whole solver lineup into result tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polyfw::bench::{
    emit_meta, emit_plot_data, emit_results, run_benchmark, OutputFormat, Scenario,
};
use polyfw::solvers::{
    run_apgd_with, run_ista_traced, run_pfw_with, run_vfw_with, SolverTrace,
};
use polyfw::{dual_certificate, Error as CoreError};

#[derive(Parser)]
#[command(
    name = "polyfw",
    version,
    about = "LASSO solver benchmarks on subsampled 2-D Fourier measurements"
)]
struct Cli {
    /// Suppress progress output on standard error
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario file (and optionally the generated instance)
    Generate(GenerateArgs),
    /// Run one solver on a scenario and write its trace
    Solve(SolveArgs),
    /// Run the APGD/V-FW/P-FW comparison over a grid of scenarios
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Image side length (the image has n^2 pixels)
    #[arg(long)]
    n: usize,
    /// Number of lit pixels in the ground truth
    #[arg(long)]
    k: usize,
    /// Measurement budget multiplier: L = alpha * k
    #[arg(long)]
    alpha: usize,
    /// Measurement PSNR in dB; pass `inf` for a noiseless instance
    #[arg(long, default_value_t = 20.0)]
    psnr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Regularization as a fraction of the critical lambda, in (0, 1)
    #[arg(long, default_value_t = 0.1)]
    lambda_factor: f64,
    /// Wall-time budget per solver in seconds
    #[arg(long)]
    time_budget: Option<f64>,
    /// Scenario id; derived from the parameters when omitted
    #[arg(long)]
    id: Option<String>,
    /// Scenario output path
    #[arg(long, default_value = "scenario.json")]
    out: PathBuf,
    /// Also write the instance (ground truth, frequencies, measurements)
    #[arg(long)]
    emit_instance: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverKind,
    /// Trace output path; defaults to <id>_<solver>.trace.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the chosen solver's iteration cap
    #[arg(long)]
    max_iter: Option<usize>,
    /// Override the chosen solver's stop tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Exploration width (pfw only)
    #[arg(long)]
    delta: Option<f64>,
    /// Initial subsolver precision (pfw only)
    #[arg(long)]
    eps0: Option<f64>,
    /// Override the wall-time budget in seconds
    #[arg(long)]
    time_budget: Option<f64>,
    /// Override the scenario's lambda factor
    #[arg(long)]
    lambda_factor: Option<f64>,
    /// Override the scenario's PSNR (dB, `inf` for noiseless)
    #[arg(long)]
    psnr: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenario file: one scenario object or an array of scenarios
    #[arg(long)]
    scenarios: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also write per-solver (time, normalized objective) plot files
    #[arg(long)]
    plot_data: bool,
    /// Worker threads across scenarios (1 preserves timing fidelity)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Override every scenario's per-solver time budget (seconds)
    #[arg(long)]
    time_budget: Option<f64>,
    /// Override every scenario's seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Ista,
    Apgd,
    Vfw,
    Pfw,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::Ista => "ista",
            SolverKind::Apgd => "apgd",
            SolverKind::Vfw => "vfw",
            SolverKind::Pfw => "pfw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

/// Failures split by exit code: 1 for bad invocations or bad inputs, 2 for
/// IO and execution errors.
enum Failure {
    Usage(String),
    Runtime(String),
}

type CliResult<T> = Result<T, Failure>;

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };

    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args, quiet),
        Command::Solve(args) => cmd_solve(args, quiet),
        Command::Bench(args) => cmd_bench(args, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn psnr_option(psnr: f64) -> CliResult<Option<f64>> {
    if psnr.is_nan() {
        return Err(Failure::Usage("--psnr must be a number or inf".into()));
    }
    Ok(if psnr.is_finite() { Some(psnr) } else { None })
}

fn write_pretty_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Runtime(format!("serializing {}: {e}", path.display())))?;
    fs::write(path, text + "\n")
        .map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
}

fn cmd_generate(args: GenerateArgs, quiet: bool) -> CliResult<()> {
    let scenario = Scenario {
        id: args.id,
        seed: args.seed,
        n: args.n,
        k: args.k,
        alpha: args.alpha,
        psnr_db: psnr_option(args.psnr)?,
        lambda_factor: args.lambda_factor,
        time_budget_s: args.time_budget,
        solvers: Default::default(),
    };
    scenario.validate()?;

    write_pretty_json(&args.out, &serde_json::to_value(&scenario).unwrap())?;
    if !quiet {
        eprintln!(
            "scenario {} (L = {} measurements) -> {}",
            scenario.resolved_id(),
            scenario.measurement_count(),
            args.out.display()
        );
    }

    if let Some(path) = args.emit_instance {
        let instance = scenario.build_instance()?;
        let value = serde_json::json!({
            "scenario_id": scenario.resolved_id(),
            "scenario": scenario,
            "lambda": instance.problem.lambda(),
            "truth": instance.truth,
            "freqs": instance.freqs,
            "y": instance.problem.y(),
        });
        write_pretty_json(&path, &value)?;
        if !quiet {
            eprintln!("instance -> {}", path.display());
        }
    }
    Ok(())
}

fn load_scenario_value(path: &Path) -> CliResult<serde_json::Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("parsing {}: {e}", path.display())))
}

fn scenario_from_value(path: &Path, value: serde_json::Value) -> CliResult<Scenario> {
    serde_json::from_value(value)
        .map_err(|e| Failure::Usage(format!("parsing {}: {e}", path.display())))
}

fn cmd_solve(args: SolveArgs, quiet: bool) -> CliResult<()> {
    let mut scenario = scenario_from_value(&args.scenario, load_scenario_value(&args.scenario)?)?;

    // flags win over the file, the file wins over built-in defaults
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(f) = args.lambda_factor {
        scenario.lambda_factor = f;
    }
    if let Some(p) = args.psnr {
        scenario.psnr_db = psnr_option(p)?;
    }
    if let Some(b) = args.time_budget {
        scenario.time_budget_s = Some(b);
    }
    if args.solver != SolverKind::Pfw && (args.delta.is_some() || args.eps0.is_some()) {
        return Err(Failure::Usage(
            "--delta and --eps0 only apply to --solver pfw".into(),
        ));
    }
    let mut ista_iter = 10_000;
    let mut ista_tol = 0.0;
    match args.solver {
        SolverKind::Ista => {
            if let Some(m) = args.max_iter {
                ista_iter = m;
            }
            if let Some(t) = args.tol {
                ista_tol = t;
            }
        }
        SolverKind::Apgd => {
            if let Some(m) = args.max_iter {
                scenario.solvers.apgd.max_iter = m;
            }
            if let Some(t) = args.tol {
                scenario.solvers.apgd.tol = t;
            }
        }
        SolverKind::Vfw => {
            if let Some(m) = args.max_iter {
                scenario.solvers.vfw.max_iter = m;
            }
            if let Some(t) = args.tol {
                scenario.solvers.vfw.tol = t;
            }
        }
        SolverKind::Pfw => {
            if let Some(m) = args.max_iter {
                scenario.solvers.pfw.max_iter = m;
            }
            if let Some(t) = args.tol {
                scenario.solvers.pfw.tol = t;
            }
            if args.delta.is_some() {
                scenario.solvers.pfw.delta = args.delta;
            }
            if let Some(e) = args.eps0 {
                scenario.solvers.pfw.eps0 = e;
            }
        }
    }
    scenario.validate()?;

    let instance = scenario.build_instance()?;
    let budget = scenario.time_budget_s;
    let grid = &scenario.solvers;
    let (trace, params): (SolverTrace, serde_json::Value) = match args.solver {
        SolverKind::Ista => (
            run_ista_traced(&instance.problem, ista_iter, ista_tol, budget),
            serde_json::json!({"max_iter": ista_iter, "tol": ista_tol}),
        ),
        SolverKind::Apgd => (
            run_apgd_with(&instance.problem, grid.apgd.max_iter, grid.apgd.tol, budget),
            serde_json::to_value(&grid.apgd).unwrap(),
        ),
        SolverKind::Vfw => (
            run_vfw_with(&instance.problem, grid.vfw.max_iter, grid.vfw.tol, budget),
            serde_json::to_value(&grid.vfw).unwrap(),
        ),
        SolverKind::Pfw => (
            run_pfw_with(&instance.problem, &grid.pfw, budget),
            serde_json::to_value(&grid.pfw).unwrap(),
        ),
    };

    let out = args.out.unwrap_or_else(|| {
        PathBuf::from(format!(
            "{}_{}.trace.json",
            scenario.resolved_id(),
            args.solver.name()
        ))
    });
    let value = serde_json::json!({
        "scenario_id": scenario.resolved_id(),
        "scenario": scenario,
        "solver": args.solver.name(),
        "solver_params": params,
        "termination": trace.termination,
        "rows": trace.rows,
        "final_x": trace.final_x,
    });
    write_pretty_json(&out, &value)?;

    let eta = dual_certificate(&instance.problem, &trace.final_x);
    println!("final_objective={}", trace.final_objective());
    println!("iterations={}", trace.iterations());
    println!("certificate={}", eta.inf_norm());
    println!(
        "support_size={}",
        trace.final_x.iter().filter(|v| **v != 0.0).count()
    );
    if !quiet {
        eprintln!(
            "{} on {} ({}) -> {}",
            args.solver.name(),
            scenario.resolved_id(),
            trace.termination,
            out.display()
        );
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs, quiet: bool) -> CliResult<()> {
    if args.jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }

    let value = load_scenario_value(&args.scenarios)?;
    let mut scenarios: Vec<Scenario> = match value {
        serde_json::Value::Array(items) => items
            .into_iter()
            .map(|v| scenario_from_value(&args.scenarios, v))
            .collect::<CliResult<_>>()?,
        single => vec![scenario_from_value(&args.scenarios, single)?],
    };

    for s in scenarios.iter_mut() {
        if let Some(seed) = args.seed {
            s.seed = seed;
        }
        if let Some(b) = args.time_budget {
            s.time_budget_s = Some(b);
        }
        s.validate()?;
    }
    let mut ids: Vec<String> = scenarios.iter().map(Scenario::resolved_id).collect();
    ids.sort();
    for w in ids.windows(2) {
        if w[0] == w[1] {
            return Err(Failure::Usage(format!("duplicate scenario id {}", w[0])));
        }
    }

    fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Runtime(format!("creating {}: {e}", args.out.display())))?;

    let format = OutputFormat::from(args.format);
    let total = scenarios.len();
    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let failures: Mutex<Vec<String>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..args.jobs.min(total) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                let Some(scenario) = scenarios.get(idx) else {
                    break;
                };
                let id = scenario.resolved_id();
                match bench_one(scenario, format, &args.out, args.plot_data) {
                    Ok(path) => {
                        let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                        if !quiet {
                            eprintln!("[{n}/{total}] {id} -> {}", path.display());
                        }
                    }
                    Err(msg) => {
                        eprintln!("scenario {id} failed: {msg}");
                        failures.lock().unwrap().push(id);
                    }
                }
            });
        }
    });

    let failures = failures.into_inner().unwrap();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "{} of {total} scenarios failed: {}",
            failures.len(),
            failures.join(", ")
        )))
    }
}

/// Runs one scenario and writes its result table, meta sidecar and optional
/// plot data. Returns the table path.
fn bench_one(
    scenario: &Scenario,
    format: OutputFormat,
    dir: &Path,
    plot_data: bool,
) -> Result<PathBuf, String> {
    let id = scenario.resolved_id();
    let records = run_benchmark(scenario).map_err(|e| e.to_string())?;
    let table = dir.join(format!("{id}.{}", format.extension()));
    emit_results(&records, format, &table).map_err(|e| e.to_string())?;
    emit_meta(scenario, &dir.join(format!("{id}.meta.json"))).map_err(|e| e.to_string())?;
    if plot_data {
        emit_plot_data(scenario, &records, dir).map_err(|e| e.to_string())?;
    }
    Ok(table)
}
