//! `pdrelax`: run the primal-dual solvers on generated problems, compare
//! stepsize choices, check stepsize conditions and sweep the tightness bound.
//!
//! Exit codes: 0 converged, 2 diverged or budget exhausted, 3 invalid
//! configuration, 4 stepsizes refused, 1 anything else (I/O).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::info;
use pdrelax_core::io::write_atomic;
use pdrelax_core::problems::write_instance;
use pdrelax_core::stepsizes::auto_theta;
use pdrelax_core::tightness::{sweep, sweep_to_csv};
use pdrelax_core::{check_classic, check_relaxed, ClassicRule, Error, LinearMap, Result, StepsizeConfig};

use config::{parse_assignment, read_config_file, ExperimentConfig, ProblemSource, Settings, StepValue};
use run::{compare, execute, load_problem, prepare_reference, summary_text, write_outputs, Status};

#[derive(Parser, Debug)]
#[command(name = "pdrelax", version, about = "Primal-dual solvers under relaxed stepsize conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration; writes trace.csv and summary.txt into --out.
    Solve(SolveArgs),
    /// Run several configurations on one problem and tabulate them.
    Compare(CompareArgs),
    /// Print the relaxed and classic stepsize verdicts.
    CheckStepsizes(CheckArgs),
    /// Sweep lambda*sigma^2 on the bilinear problem min_x max_s <Ax, s>.
    Tightness(TightnessArgs),
    /// Generate a problem instance and save it to a directory.
    GenProblem(GenArgs),
}

/// Settings shared by every subcommand that builds a problem.
#[derive(Args, Debug, Default, Clone)]
struct ProblemArgs {
    /// key=value file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset (lasso, fused_lasso, fused_identity) or an instance directory.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Any other setting, e.g. --set mu=5 --set n=200.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args, Debug, Default, Clone)]
struct RunArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    algo: Option<String>,
    /// Primal stepsize, or a multiple of the default 1/L such as 0.5x.
    #[arg(long)]
    r: Option<String>,
    /// Dual parameter, or a multiple of the default 1/sigma^2 such as 1.32x.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    /// Use the largest theta admitted by lambda.
    #[arg(long)]
    auto_theta: bool,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    /// Stop once the relative objective gap reaches this value.
    #[arg(long)]
    gap_target: Option<String>,
    /// Iterations for the reference optimum (0 disables gaps).
    #[arg(long)]
    reference_budget: Option<String>,
    /// Record the Lyapunov function (base algorithm only).
    #[arg(long)]
    phi: bool,
    /// Run even if the stepsizes fail the relaxed condition.
    #[arg(long)]
    override_check: bool,
    /// Fill the wall_ms trace column.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    label: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "pdrelax_out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Settings shared by all runs.
    #[command(flatten)]
    run: RunArgs,
    /// One run per config file.
    configs: Vec<PathBuf>,
    /// One run given inline as `label=...;lambda=1.19x;...`.
    #[arg(long = "run", value_name = "SETTINGS")]
    inline: Vec<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Absolute, or a multiple of 1/L with a problem.
    #[arg(long)]
    r: Option<String>,
    /// Absolute, or a multiple of 1/sigma^2 with a problem.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    auto_theta: bool,
    /// Lipschitz constant of grad f; replaces the problem's.
    #[arg(long = "lipschitz")]
    lipschitz: Option<f64>,
    /// Spectral norm of A; replaces the problem's.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args, Debug)]
struct TightnessArgs {
    /// Comma-separated lambda*sigma^2 values.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Evenly spaced values `start:stop:count`, added to --grid.
    #[arg(long)]
    range: Option<String>,
    /// Size of the random square operator.
    #[arg(long, default_value_t = 20)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Use this problem's operator instead of a random one.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out: PathBuf,
}

fn insert_opt(s: &mut Settings, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        s.insert(key.to_string(), v.clone());
    }
}

fn insert_flag(s: &mut Settings, key: &str, on: bool) {
    if on {
        s.insert(key.to_string(), "true".into());
    }
}

impl ProblemArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::new();
        if let Some(path) = &self.config {
            read_config_file(path, &mut s)?;
        }
        self.apply(&mut s)?;
        Ok(s)
    }

    fn apply(&self, s: &mut Settings) -> Result<()> {
        insert_opt(s, "problem", &self.problem);
        insert_opt(s, "seed", &self.seed.map(|v| v.to_string()));
        for a in &self.sets {
            let (k, v) = parse_assignment(a)?;
            s.insert(k, v);
        }
        Ok(())
    }
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = self.problem.settings()?;
        self.apply(&mut s);
        Ok(s)
    }

    fn apply(&self, s: &mut Settings) {
        insert_opt(s, "algo", &self.algo);
        insert_opt(s, "r", &self.r);
        insert_opt(s, "lambda", &self.lambda);
        insert_opt(s, "theta", &self.theta);
        insert_flag(s, "auto_theta", self.auto_theta);
        insert_opt(s, "max_iter", &self.max_iter);
        insert_opt(s, "tol", &self.tol);
        insert_opt(s, "record_every", &self.record_every);
        insert_opt(s, "gap_target", &self.gap_target);
        insert_opt(s, "reference_budget", &self.reference_budget);
        insert_flag(s, "phi", self.phi);
        insert_flag(s, "override_check", self.override_check);
        insert_flag(s, "timing", self.timing);
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<Status> {
    let mut settings = args.run.settings()?;
    insert_opt(&mut settings, "label", &args.label);
    let cfg = ExperimentConfig::from_settings(&settings)?;
    let mut inst = load_problem(&cfg.problem)?;
    // refuse before the reference run so nothing is computed or written
    run::precheck(&cfg, &inst.spec, &run::resolve_stepsizes(&cfg, &inst.spec)?)?;
    let reference = prepare_reference(&mut inst, cfg.reference_budget)?;
    let report = execute(&cfg, &inst, reference)?;
    let summary = summary_text(&cfg, &inst, &report)?;
    let out = cfg.out.clone().unwrap_or_else(|| args.out.clone());
    write_outputs(&out, &report.trace, &summary)?;
    println!(
        "{}: {} after {} iterations, final gap {}",
        report.label,
        report.status.name(),
        report.iterations,
        report.final_gap.map_or("n/a".into(), |g| format!("{g:.3e}"))
    );
    info!("wrote {}", out.display());
    Ok(report.status)
}

fn cmd_compare(args: &CompareArgs) -> Result<Status> {
    let base = args.run.settings()?;
    let mut configs = Vec::new();
    for path in &args.configs {
        let mut s = base.clone();
        read_config_file(path, &mut s)?;
        if !s.contains_key("label") {
            let stem = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_default();
            s.insert("label".into(), stem);
        }
        configs.push(ExperimentConfig::from_settings(&s)?);
    }
    for spec in &args.inline {
        let mut s = base.clone();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = parse_assignment(part)?;
            s.insert(k, v);
        }
        configs.push(ExperimentConfig::from_settings(&s)?);
    }
    if configs.is_empty() {
        return Err(Error::Usage("compare needs config files or --run entries".into()));
    }
    let (csv, reports) = compare(&configs)?;
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(if reports.iter().any(|r| r.status == Status::Diverged) {
        Status::Diverged
    } else if reports.iter().all(|r| r.status == Status::Converged) {
        Status::Converged
    } else {
        Status::Stagnated
    })
}

fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let has_problem = args.problem.problem.is_some() || args.problem.config.is_some();
    let (mut lip, mut sigma) = (args.lipschitz, args.sigma);
    if has_problem && (lip.is_none() || sigma.is_none()) {
        let cfg = ExperimentConfig::from_settings(&args.problem.settings()?)?;
        let inst = load_problem(&cfg.problem)?;
        lip = lip.or(Some(inst.spec.lipschitz()));
        sigma = sigma.or(Some(inst.spec.sigma()));
    }
    let (lip, sigma) = match (lip, sigma) {
        (Some(l), Some(s)) => (l, s),
        _ => return Err(Error::Usage("give --lipschitz and --sigma, or a --problem".into())),
    };
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let resolve = |v: &Option<String>, default: f64, name: &str| -> Result<f64> {
        match v {
            Some(text) => Ok(text.parse::<StepValue>()?.resolve(default)),
            None => Err(Error::Usage(format!("--{name} is required"))),
        }
    };
    let default_r = if lip > 0.0 { 1.0 / lip } else { 1.0 / sigma };
    let r = resolve(&args.r, default_r, "r")?;
    let lambda = resolve(&args.lambda, 1.0 / (sigma * sigma), "lambda")?;
    let theta = match (args.theta, args.auto_theta) {
        (Some(_), true) => return Err(Error::Usage("--theta and --auto-theta are mutually exclusive".into())),
        (Some(t), false) => t,
        (None, true) => auto_theta(lambda, sigma, lip)?.theta,
        (None, false) => 1.0,
    };
    let cfg = StepsizeConfig::new(r, lambda, theta)?;
    println!("r={r:e} lambda={lambda:e} theta={theta} L={lip:e} sigma={sigma:e}");
    println!("lambda_sigma2={:.6} r_L_over_2={:.6}", lambda * sigma * sigma, r * lip / 2.0);
    let relaxed = check_relaxed(&cfg, lip, sigma)?;
    println!("relaxed: {relaxed}");
    for rule in ClassicRule::ALL {
        println!("{rule}: {}", check_classic(rule, &cfg, lip, sigma)?);
    }
    Ok(relaxed.satisfied)
}

fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Parse(format!("range {text:?} must look like start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    })
}

fn cmd_tightness(args: &TightnessArgs) -> Result<()> {
    let mut grid = args.grid.clone();
    if let Some(range) = &args.range {
        grid.extend(parse_range(range)?);
    }
    if grid.is_empty() {
        return Err(Error::Usage("tightness grid is empty; pass --grid or --range".into()));
    }
    let a: Arc<LinearMap> = match &args.problem {
        Some(p) => {
            let mut s = Settings::new();
            s.insert("problem".into(), p.clone());
            if !Path::new(p).is_dir() {
                s.insert("seed".into(), args.seed.to_string());
            }
            let cfg = ExperimentConfig::from_settings(&s)?;
            load_problem(&cfg.problem)?.spec.a.clone()
        }
        None => Arc::new(LinearMap::gaussian(args.size, args.size, args.seed)?),
    };
    let points = sweep(&a, &grid, args.r, args.iters, args.seed)?;
    let csv = sweep_to_csv(&points);
    match &args.out {
        Some(path) => write_atomic(path, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_settings(&args.problem.settings()?)?;
    if let ProblemSource::Stored(dir) = &cfg.problem {
        return Err(Error::Usage(format!("{} is already an instance", dir.display())));
    }
    let inst = load_problem(&cfg.problem)?;
    write_instance(&inst, &args.out)?;
    println!("wrote {} to {}", cfg.problem.describe(), args.out.display());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Parameter(_) | Error::Parse(_) | Error::Domain(_) | Error::Shape { .. } => 3,
        Error::StepsizeRefused { .. } => 4,
        Error::Diverged { .. } => 2,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Converged => 0,
        Status::Stagnated | Status::Diverged => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a).map(status_code),
        Command::Compare(a) => cmd_compare(a).map(status_code),
        Command::CheckStepsizes(a) => cmd_check(a).map(|ok| if ok { 0 } else { 4 }),
        Command::Tightness(a) => cmd_tightness(a).map(|_| 0),
        Command::GenProblem(a) => cmd_gen(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
