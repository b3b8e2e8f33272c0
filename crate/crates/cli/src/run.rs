//! Running configured experiments and rendering their outputs.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use log::info;
use pdrelax_core::io::write_atomic;
use pdrelax_core::problems::read_instance;
use pdrelax_core::solvers::relative_gap;
use pdrelax_core::stepsizes::auto_theta;
use pdrelax_core::{
    check_classic, check_relaxed, generate, reference_solve, solve, Algorithm, ClassicRule, ConvergenceTrace,
    Error, Instance, PhiOptions, ProblemSpec, Result, SolveOptions, SolverState, StepsizeConfig,
};

use crate::config::{ExperimentConfig, ProblemSource};

pub const GAP_THRESHOLDS: [f64; 3] = [1e-2, 1e-4, 1e-6];

pub fn load_problem(src: &ProblemSource) -> Result<Instance> {
    match src {
        ProblemSource::Generated(recipe) => generate(recipe),
        ProblemSource::Stored(dir) => read_instance(dir),
    }
}

/// Computes the reference optimum in place, unless the budget is zero.
pub fn prepare_reference(inst: &mut Instance, budget: usize) -> Result<Option<f64>> {
    if budget == 0 {
        return Ok(None);
    }
    let t = Instant::now();
    let reference = reference_solve(&mut inst.spec, budget)?;
    info!(
        "reference objective {:.12e} after {} iterations ({:.0} ms)",
        reference.objective,
        reference.iterations,
        t.elapsed().as_secs_f64() * 1e3
    );
    Ok(Some(reference.objective))
}

/// Defaults: `lambda = 1/sigma^2`, `r = 1/L` (or `1/sigma` when `L = 0`),
/// `theta = 1` unless given or chosen automatically.
pub fn resolve_stepsizes(cfg: &ExperimentConfig, spec: &ProblemSpec) -> Result<StepsizeConfig> {
    let (sigma, lip) = (spec.sigma(), spec.lipschitz());
    if !(sigma > 0.0) {
        return Err(Error::Domain("the linear operator is zero".into()));
    }
    let default_r = if lip > 0.0 { 1.0 / lip } else { 1.0 / sigma };
    let r = cfg.r.map_or(default_r, |v| v.resolve(default_r));
    let lambda = cfg.lambda.map_or(1.0 / (sigma * sigma), |v| v.resolve(1.0 / (sigma * sigma)));
    let theta = match (cfg.theta, cfg.auto_theta) {
        (Some(t), _) => t,
        (None, true) => auto_theta(lambda, sigma, lip)?.theta,
        (None, false) => 1.0,
    };
    StepsizeConfig::new(r, lambda, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// The iteration budget ran out first.
    Stagnated,
    Diverged,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Stagnated => "max_iter_reached",
            Status::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub stepsizes: StepsizeConfig,
    pub status: Status,
    pub iterations: usize,
    pub trace: ConvergenceTrace,
    pub final_objective: f64,
    pub reference: Option<f64>,
    pub final_gap: Option<f64>,
    pub gap_hits: Vec<(f64, Option<usize>)>,
    pub wall_ms: f64,
    pub note: Option<String>,
}

impl RunReport {
    pub fn iterations_to_gap(&self, t: f64) -> Option<usize> {
        self.gap_hits.iter().find(|(g, _)| *g == t).and_then(|(_, k)| *k)
    }
}

/// Checks the stepsizes the way the driver will, so refusals happen before any
/// work or output.
pub fn precheck(cfg: &ExperimentConfig, spec: &ProblemSpec, steps: &StepsizeConfig) -> Result<()> {
    if cfg.override_check {
        return Ok(());
    }
    let v = check_relaxed(steps, spec.lipschitz(), spec.sigma())?;
    if v.satisfied {
        Ok(())
    } else {
        Err(Error::StepsizeRefused {
            binding: v.binding,
            margin: v.margin,
        })
    }
}

/// Runs one configuration. Divergence is reported, not returned as an error.
pub fn execute(cfg: &ExperimentConfig, inst: &Instance, reference: Option<f64>) -> Result<RunReport> {
    let spec = &inst.spec;
    let steps = resolve_stepsizes(cfg, spec)?;
    precheck(cfg, spec, &steps)?;
    let init = SolverState::zeros(cfg.algorithm, spec.n(), spec.m());
    let phi = if cfg.phi {
        Some(PhiOptions {
            fixed: fixed_point(cfg, spec, &steps)?,
            theta_tilde: None,
        })
    } else {
        None
    };
    let opts = SolveOptions {
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        record_every: cfg.record_every,
        override_check: cfg.override_check,
        phi,
        reference_objective: reference,
        gap_thresholds: GAP_THRESHOLDS.to_vec(),
        stop_at_gap: cfg.gap_target,
        timing: cfg.timing,
    };
    let started = Instant::now();
    let result = solve(spec, &steps, init, &opts);
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(out) => {
            let final_objective = spec.objective(&out.state.x);
            let reached_target = matches!((cfg.gap_target, out.final_gap), (Some(t), Some(g)) if g <= t);
            let status = if out.converged || reached_target || cfg.max_iter == 0 {
                Status::Converged
            } else {
                Status::Stagnated
            };
            Ok(RunReport {
                label: cfg.label(),
                stepsizes: steps,
                status,
                iterations: out.iterations,
                trace: out.trace,
                final_objective,
                reference,
                final_gap: out.final_gap,
                gap_hits: out.gap_hits,
                wall_ms,
                note: None,
            })
        }
        Err(Error::Diverged {
            iteration,
            reason,
            trace,
        }) => {
            let final_objective = trace.last().map_or(f64::NAN, |r| r.objective);
            let gap_hits = GAP_THRESHOLDS
                .iter()
                .map(|&t| {
                    let hit = reference.and_then(|f| {
                        trace.records.iter().find(|r| relative_gap(r.objective, f) <= t).map(|r| r.iter)
                    });
                    (t, hit)
                })
                .collect();
            Ok(RunReport {
                label: cfg.label(),
                stepsizes: steps,
                status: Status::Diverged,
                iterations: iteration,
                final_objective,
                reference,
                final_gap: reference.map(|f| relative_gap(final_objective, f)),
                gap_hits,
                trace: *trace,
                wall_ms,
                note: Some(format!("diverged at iteration {iteration}: {reason}")),
            })
        }
        Err(e) => Err(e),
    }
}

/// Long base run with the same stepsizes, used as the fixed point in `Phi`.
fn fixed_point(cfg: &ExperimentConfig, spec: &ProblemSpec, steps: &StepsizeConfig) -> Result<SolverState> {
    let budget = cfg.reference_budget.max(cfg.max_iter).max(1);
    let opts = SolveOptions {
        max_iter: budget,
        tol: 1e-15,
        record_every: usize::MAX,
        override_check: cfg.override_check,
        gap_thresholds: Vec::new(),
        ..SolveOptions::default()
    };
    let out = solve(spec, steps, SolverState::zeros(Algorithm::Base, spec.n(), spec.m()), &opts)?;
    info!(
        "fixed point for Phi after {} iterations (residual {:.1e})",
        out.iterations,
        out.final_residual.unwrap_or(f64::NAN)
    );
    Ok(out.state)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

pub fn summary_text(cfg: &ExperimentConfig, inst: &Instance, report: &RunReport) -> Result<String> {
    let spec = &inst.spec;
    let s = &report.stepsizes;
    let (lip, sigma) = (spec.lipschitz(), spec.sigma());
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "label={}", report.label).unwrap();
    writeln!(w, "problem={}", cfg.problem.describe()).unwrap();
    writeln!(w, "dimensions=n {} m {}", spec.n(), spec.m()).unwrap();
    writeln!(w, "algorithm={}", cfg.algorithm).unwrap();
    writeln!(w, "r={:e}", s.r).unwrap();
    writeln!(w, "lambda={:e}", s.lambda).unwrap();
    writeln!(w, "theta={}", s.theta).unwrap();
    writeln!(w, "L={lip:e}").unwrap();
    writeln!(w, "sigma={sigma:e}").unwrap();
    writeln!(w, "lambda_sigma2={:.6}", s.lambda * sigma * sigma).unwrap();
    writeln!(w, "r_L_over_2={:.6}", s.r * lip / 2.0).unwrap();
    writeln!(w, "status={}", report.status.name()).unwrap();
    if let Some(note) = &report.note {
        writeln!(w, "note={note}").unwrap();
    }
    writeln!(w, "iterations={}", report.iterations).unwrap();
    writeln!(w, "final_objective={:.12e}", report.final_objective).unwrap();
    writeln!(w, "reference_objective={}", report.reference.map_or("n/a".into(), |f| format!("{f:.12e}"))).unwrap();
    writeln!(w, "final_gap={}", opt(report.final_gap)).unwrap();
    for (t, hit) in &report.gap_hits {
        let hit = hit.map_or_else(|| "not_reached".to_string(), |k| k.to_string());
        writeln!(w, "iters_to_gap_{t:e}={hit}").unwrap();
    }
    if let Some(inc) = report.trace.max_phi_increase(1) {
        writeln!(w, "phi_max_increase={inc:e}").unwrap();
    }
    if cfg.override_check {
        writeln!(w, "override_check=true").unwrap();
    }
    writeln!(w, "check.relaxed={}", check_relaxed(s, lip, sigma)?).unwrap();
    for rule in ClassicRule::ALL {
        writeln!(w, "check.{}={}", rule, check_classic(rule, s, lip, sigma)?).unwrap();
    }
    Ok(out)
}

/// Writes `trace.csv` and `summary.txt` into `dir`, each atomically.
pub fn write_outputs(dir: &Path, trace: &ConvergenceTrace, summary: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_atomic(dir.join("trace.csv"), trace.to_csv_string().as_bytes())?;
    write_atomic(dir.join("summary.txt"), summary.as_bytes())
}

pub const COMPARE_HEADER: &str = "label,iters_to_1e-4,final_gap,wall_ms";

/// Runs every configuration on one shared instance, concurrently.
pub fn compare(configs: &[ExperimentConfig]) -> Result<(String, Vec<RunReport>)> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Usage("compare needs at least one configuration".into()))?;
    for c in &configs[1..] {
        if c.problem != first.problem {
            let seeds = |p: &ProblemSource| match p {
                ProblemSource::Generated(r) => Some(r.seed),
                ProblemSource::Stored(_) => None,
            };
            let msg = match (seeds(&first.problem), seeds(&c.problem)) {
                (Some(a), Some(b)) if a != b => format!("mismatched problem seeds: {a} vs {b}"),
                _ => format!(
                    "configurations use different problems: {} vs {}",
                    first.problem.describe(),
                    c.problem.describe()
                ),
            };
            return Err(Error::Usage(msg));
        }
    }
    let mut inst = load_problem(&first.problem)?;
    let budget = configs.iter().map(|c| c.reference_budget).max().unwrap_or(0).max(1);
    let reference = prepare_reference(&mut inst, budget)?;
    for c in configs {
        precheck(c, &inst.spec, &resolve_stepsizes(c, &inst.spec)?)?;
    }

    let inst = &inst;
    let reports: Vec<Result<RunReport>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || execute(c, inst, reference)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Usage("a compare run panicked".into()))))
            .collect()
    });
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;

    let mut csv = String::from(COMPARE_HEADER);
    csv.push('\n');
    for r in &reports {
        let hit = r.iterations_to_gap(1e-4).map_or(String::new(), |k| k.to_string());
        let gap = r.final_gap.map_or(String::new(), |g| format!("{g:e}"));
        csv.push_str(&format!("{},{hit},{gap},{:.3}\n", csv_field(&r.label), r.wall_ms));
    }
    Ok((csv, reports))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
