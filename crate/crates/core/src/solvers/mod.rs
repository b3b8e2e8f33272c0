//! Iteration kernels, state maps between the equivalent forms, the driver loop
//! and the Lyapunov diagnostic.
//!
//! Every kernel takes the stepsizes as `(r, lambda)`: primal step `r`, dual
//! step `lambda / r`.

mod driver;
mod kernels;
mod lyapunov;
mod maps;

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;

use crate::error::{check_len, Error, Result};
use crate::problems::ProblemSpec;
use crate::stepsizes::StepsizeConfig;

pub use driver::{
    optimality_residual, relative_gap, solve, ConvergenceTrace, PhiOptions, SolveOptions, SolveOutcome,
    TraceRecord, TRACE_HEADER,
};
pub use kernels::{afba_step, base_step, cp_step, papc_step, pd3o_step, step};
pub use lyapunov::{default_theta_tilde, lyapunov_phi};
pub use maps::map_states;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Dual update first, then `x = zeta - r A^T s`, then the `zeta` correction.
    Base,
    Afba,
    Pd3o,
    /// Requires `f = 0`.
    ChambollePock,
    /// Requires `g = 0`.
    Papc,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Base,
        Algorithm::Afba,
        Algorithm::Pd3o,
        Algorithm::ChambollePock,
        Algorithm::Papc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Base => "base",
            Algorithm::Afba => "afba",
            Algorithm::Pd3o => "pd3o",
            Algorithm::ChambollePock => "chambolle_pock",
            Algorithm::Papc => "papc",
        }
    }

    /// Length of the auxiliary vector, given the primal and dual dimensions.
    pub fn aux_len(self, n: usize, m: usize) -> usize {
        match self {
            Algorithm::Base | Algorithm::Afba => n,
            Algorithm::Pd3o => m,
            Algorithm::ChambollePock | Algorithm::Papc => 0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "base" => Ok(Algorithm::Base),
            "afba" => Ok(Algorithm::Afba),
            "pd3o" => Ok(Algorithm::Pd3o),
            "chambolle_pock" | "cp" => Ok(Algorithm::ChambollePock),
            "papc" => Ok(Algorithm::Papc),
            _ => Err(Error::Parameter(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Iterate of one of the algorithms.
///
/// `aux` depends on `algorithm`:
///
/// | algorithm | `s` | `x` | `aux` |
/// |---|---|---|---|
/// | base | `s` | `x` | `zeta` (length n) |
/// | afba | `s1` | `x1` | `x1_bar` (length n) |
/// | pd3o | `s2` | `x2` | `z2` (length m) |
/// | chambolle_pock | `s3` | `x3` | empty |
/// | papc | `s4` | `x4` | empty |
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub algorithm: Algorithm,
    pub s: Array1<f64>,
    pub x: Array1<f64>,
    pub aux: Array1<f64>,
}

impl SolverState {
    pub fn new(algorithm: Algorithm, s: Array1<f64>, x: Array1<f64>, aux: Array1<f64>) -> Self {
        Self {
            algorithm,
            s,
            x,
            aux,
        }
    }

    pub fn base(s: Array1<f64>, x: Array1<f64>, zeta: Array1<f64>) -> Self {
        Self::new(Algorithm::Base, s, x, zeta)
    }

    pub fn afba(s: Array1<f64>, x: Array1<f64>, x_bar: Array1<f64>) -> Self {
        Self::new(Algorithm::Afba, s, x, x_bar)
    }

    pub fn pd3o(s: Array1<f64>, x: Array1<f64>, z: Array1<f64>) -> Self {
        Self::new(Algorithm::Pd3o, s, x, z)
    }

    pub fn chambolle_pock(s: Array1<f64>, x: Array1<f64>) -> Self {
        Self::new(Algorithm::ChambollePock, s, x, Array1::zeros(0))
    }

    pub fn papc(s: Array1<f64>, x: Array1<f64>) -> Self {
        Self::new(Algorithm::Papc, s, x, Array1::zeros(0))
    }

    /// Default start: `x0 = 0`, `s0 = 0`, `zeta0 = x0`, expressed in the
    /// variables of `algorithm`. All auxiliary vectors are then zero too.
    pub fn zeros(algorithm: Algorithm, n: usize, m: usize) -> Self {
        Self::new(
            algorithm,
            Array1::zeros(m),
            Array1::zeros(n),
            Array1::zeros(algorithm.aux_len(n, m)),
        )
    }

    /// Base-algorithm start that reproduces PAPC from `(s0, x0)`:
    /// `zeta0 = x0 - r grad f(x0)`.
    pub fn base_emulating_papc(
        prob: &ProblemSpec,
        cfg: &StepsizeConfig,
        s: Array1<f64>,
        x: Array1<f64>,
    ) -> Result<Self> {
        check_len("SolverState x", prob.n(), x.len())?;
        let zeta = &x - &(prob.f.gradient(&x) * cfg.r);
        Ok(Self::base(s, x, zeta))
    }

    /// The `zeta` component of a base state.
    pub fn zeta(&self) -> Option<&Array1<f64>> {
        (self.algorithm == Algorithm::Base).then_some(&self.aux)
    }

    pub fn norm(&self) -> f64 {
        (self.s.dot(&self.s) + self.x.dot(&self.x) + self.aux.dot(&self.aux)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.s.iter().chain(&self.x).chain(&self.aux).all(|v| v.is_finite())
    }

    /// `||self - other||` over all three blocks. Both states must share the
    /// algorithm and dimensions.
    pub fn distance(&self, other: &SolverState) -> f64 {
        let sq = |a: &Array1<f64>, b: &Array1<f64>| {
            a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>()
        };
        (sq(&self.s, &other.s) + sq(&self.x, &other.x) + sq(&self.aux, &other.aux)).sqrt()
    }

    pub(crate) fn check_dims(&self, prob: &ProblemSpec) -> Result<()> {
        let (n, m) = (prob.n(), prob.m());
        check_len("SolverState s", m, self.s.len())?;
        check_len("SolverState x", n, self.x.len())?;
        check_len("SolverState aux", self.algorithm.aux_len(n, m), self.aux.len())
    }
}
