use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use super::{kernels::step, lyapunov, Algorithm, SolverState};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::stepsizes::{check_relaxed, StepsizeConfig};

pub const TRACE_HEADER: &str = "iter,objective,fp_residual,dx,ds,phi,wall_ms";

/// Iterates whose norm exceeds this multiple of `1 + ||init||` count as diverged.
const BLOWUP_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    /// `||T(z) - z|| / (1 + ||T(z)||)`; absent for the initial row.
    pub fp_residual: Option<f64>,
    pub dx: Option<f64>,
    pub ds: Option<f64>,
    pub phi: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

fn opt(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for rec in &self.records {
            let _ = write!(out, "{},{}", rec.iter, rec.objective);
            opt(&mut out, rec.fp_residual);
            opt(&mut out, rec.dx);
            opt(&mut out, rec.ds);
            opt(&mut out, rec.phi);
            opt(&mut out, rec.wall_ms);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    /// Largest `phi[k+1] - phi[k]` over consecutive recorded rows starting at
    /// iteration `from`. `None` if fewer than two rows carry `phi`.
    pub fn max_phi_increase(&self, from: usize) -> Option<f64> {
        let phis: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.iter >= from)
            .filter_map(|r| r.phi)
            .collect();
        phis.windows(2).map(|w| w[1] - w[0]).reduce(f64::max)
    }
}

/// Lyapunov diagnostic settings. `fixed` is a (numerically) converged base
/// iterate for the same problem and stepsizes.
#[derive(Debug, Clone)]
pub struct PhiOptions {
    pub fixed: SolverState,
    /// Defaults to [`lyapunov::default_theta_tilde`].
    pub theta_tilde: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Stop once the fixed-point residual drops to `tol`.
    pub tol: f64,
    /// Record every `record_every`-th iterate (the last one is always kept).
    pub record_every: usize,
    /// Run even if the relaxed stepsize condition fails.
    pub override_check: bool,
    pub phi: Option<PhiOptions>,
    /// Optimal value used for relative gaps.
    pub reference_objective: Option<f64>,
    /// Relative gaps whose first hitting iteration is reported.
    pub gap_thresholds: Vec<f64>,
    /// Stop as soon as the relative gap reaches this value.
    pub stop_at_gap: Option<f64>,
    /// Fill the `wall_ms` column. Off by default so traces are reproducible
    /// byte for byte.
    pub timing: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-9,
            record_every: 1,
            override_check: false,
            phi: None,
            reference_objective: None,
            gap_thresholds: vec![1e-2, 1e-4, 1e-6],
            stop_at_gap: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub state: SolverState,
    pub trace: ConvergenceTrace,
    pub iterations: usize,
    /// The fixed-point residual reached `tol`.
    pub converged: bool,
    pub final_residual: Option<f64>,
    pub final_gap: Option<f64>,
    /// `(threshold, first iteration with gap <= threshold)`.
    pub gap_hits: Vec<(f64, Option<usize>)>,
}

impl SolveOutcome {
    pub fn iterations_to_gap(&self, threshold: f64) -> Option<usize> {
        self.gap_hits
            .iter()
            .find(|(t, _)| *t == threshold)
            .and_then(|(_, k)| *k)
    }
}

/// `(F - F_ref) / |F_ref|`.
pub fn relative_gap(objective: f64, reference: f64) -> f64 {
    (objective - reference) / reference.abs().max(f64::MIN_POSITIVE)
}

/// Runs `init.algorithm` from `init`.
///
/// Refuses stepsizes that fail the relaxed condition unless
/// `opts.override_check` is set. A non-finite iterate or one whose norm
/// exceeds `1e12 (1 + ||init||)` ends the run with [`Error::Diverged`], which
/// carries the rows recorded so far.
pub fn solve(
    prob: &ProblemSpec,
    cfg: &StepsizeConfig,
    init: SolverState,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    init.check_dims(prob)?;
    if opts.record_every == 0 {
        return Err(Error::Parameter("record_every must be at least 1".into()));
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::Parameter(format!("tol must be nonnegative, got {}", opts.tol)));
    }
    match init.algorithm {
        Algorithm::ChambollePock if !prob.f.is_zero() => {
            return Err(Error::Usage("chambolle_pock requires f = 0".into()))
        }
        Algorithm::Papc if !prob.g.is_zero() => {
            return Err(Error::Usage("papc requires g = 0".into()))
        }
        _ => {}
    }
    if !opts.override_check {
        let verdict = check_relaxed(cfg, prob.lipschitz(), prob.sigma())?;
        if !verdict.satisfied {
            return Err(Error::StepsizeRefused {
                binding: verdict.binding,
                margin: verdict.margin,
            });
        }
    }
    let phi_ctx = match &opts.phi {
        None => None,
        Some(p) => {
            if init.algorithm != Algorithm::Base {
                return Err(Error::Usage(format!(
                    "the Lyapunov diagnostic is defined for base iterates, not {}",
                    init.algorithm
                )));
            }
            let tt = p
                .theta_tilde
                .unwrap_or_else(|| lyapunov::default_theta_tilde(cfg, prob.sigma()));
            Some((&p.fixed, tt))
        }
    };

    let started = Instant::now();
    let wall = |timing: bool| timing.then(|| started.elapsed().as_secs_f64() * 1e3);
    let gap_of = |obj: f64| opts.reference_objective.map(|f| relative_gap(obj, f));
    let blowup = BLOWUP_FACTOR * (1.0 + init.norm());

    let mut trace = ConvergenceTrace::default();
    let mut gap_hits: Vec<(f64, Option<usize>)> =
        opts.gap_thresholds.iter().map(|&t| (t, None)).collect();
    let note_gap = |gap: Option<f64>, k: usize, hits: &mut Vec<(f64, Option<usize>)>| {
        if let Some(g) = gap {
            for (t, hit) in hits.iter_mut() {
                if hit.is_none() && g <= *t {
                    *hit = Some(k);
                }
            }
        }
    };

    let obj0 = prob.objective(&init.x);
    let mut final_gap = gap_of(obj0);
    note_gap(final_gap, 0, &mut gap_hits);
    let phi0 = match phi_ctx {
        Some((fixed, tt)) => Some(lyapunov::lyapunov_phi(&init, None, fixed, cfg, prob, tt)?),
        None => None,
    };
    trace.records.push(TraceRecord {
        iter: 0,
        objective: obj0,
        fp_residual: None,
        dx: None,
        ds: None,
        phi: phi0,
        wall_ms: wall(opts.timing),
    });

    let need_objective_every_step = opts.reference_objective.is_some();
    let mut state = init;
    let mut converged = false;
    let mut final_residual = None;
    let mut k = 0;
    while k < opts.max_iter {
        let next = step(&state, prob, cfg)?;
        k += 1;
        let next_norm = next.norm();
        if !next.is_finite() || next_norm > blowup {
            let reason = if next.is_finite() {
                format!("iterate norm {next_norm:e} exceeds {blowup:e}")
            } else {
                "non-finite iterate".to_string()
            };
            return Err(Error::Diverged {
                iteration: k,
                reason,
                trace: Box::new(trace),
            });
        }
        let residual = next.distance(&state) / (1.0 + next_norm);
        final_residual = Some(residual);
        converged = residual <= opts.tol;
        let stop_here = converged || k == opts.max_iter;
        let record = k % opts.record_every == 0 || stop_here;

        let mut objective = None;
        if need_objective_every_step || record {
            let obj = prob.objective(&next.x);
            final_gap = gap_of(obj);
            note_gap(final_gap, k, &mut gap_hits);
            objective = Some(obj);
        }
        let gap_stop = matches!((opts.stop_at_gap, final_gap), (Some(t), Some(g)) if g <= t);

        let phi = match phi_ctx {
            Some((fixed, tt)) if record || gap_stop => {
                Some(lyapunov::lyapunov_phi(&next, Some(&state), fixed, cfg, prob, tt)?)
            }
            _ => None,
        };
        if record || gap_stop {
            trace.records.push(TraceRecord {
                iter: k,
                objective: objective.unwrap_or_else(|| prob.objective(&next.x)),
                fp_residual: Some(residual),
                dx: Some(next.x.iter().zip(&state.x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()),
                ds: Some(next.s.iter().zip(&state.s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()),
                phi,
                wall_ms: wall(opts.timing),
            });
        }
        state = next;
        if converged || gap_stop {
            break;
        }
    }
    if opts.reference_objective.is_some() && final_gap.is_none() {
        final_gap = gap_of(prob.objective(&state.x));
    }
    Ok(SolveOutcome {
        state,
        trace,
        iterations: k,
        converged,
        final_residual,
        final_gap,
        gap_hits,
    })
}

/// Fixed-point residual `||T(z) - z|| / (1 + ||z||)` of one step of
/// `st.algorithm`. Zero exactly at fixed points, which are saddle points.
pub fn optimality_residual(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<f64> {
    let next = step(st, prob, cfg)?;
    Ok(next.distance(st) / (1.0 + st.norm()))
}
