//! Primal-dual splitting for `min_x f(x) + g(x) + h(Ax)`.
//!
//! `f` is convex with an `L`-Lipschitz gradient, `g` and `h` are proximable,
//! `A` is linear with spectral norm `sigma`. The solvers cover the base
//! iteration and its equivalent forms (AFBA, PD3O, Chambolle-Pock, PAPC), with
//! stepsizes checked against the relaxed rule
//! `r L / 2 < (4 theta - 3) / (2 theta - 1)`, `theta lambda sigma^2 <= 1`.
//!
//! ```
//! use pdrelax_core::{
//!     gen_lasso, reference_solve, solve, Algorithm, InstanceRecipe, SolveOptions,
//!     SolverState, StepsizeConfig,
//! };
//!
//! let recipe = InstanceRecipe { n: 60, m_data: 15, ..InstanceRecipe::desk_lasso(1) };
//! let mut inst = gen_lasso(&recipe)?;
//! let f_ref = reference_solve(&mut inst.spec, 20_000)?.objective;
//!
//! let sigma = inst.spec.sigma();
//! // lambda sigma^2 = 1.3 needs theta <= 1/1.3
//! let cfg = StepsizeConfig::new(0.05, 1.3 / (sigma * sigma), 0.76)?;
//! let init = SolverState::zeros(Algorithm::ChambollePock, inst.spec.n(), inst.spec.m());
//! let opts = SolveOptions {
//!     max_iter: 20_000,
//!     reference_objective: Some(f_ref),
//!     ..SolveOptions::default()
//! };
//! let out = solve(&inst.spec, &cfg, init, &opts)?;
//! assert!(out.final_gap.unwrap() < 1e-6);
//! # Ok::<(), pdrelax_core::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod functions;
pub mod io;
pub mod operators;
pub mod problems;
pub mod solvers;
pub mod stepsizes;
pub mod tightness;

pub use error::{Error, Result};
pub use functions::{
    conjugate_prox, BoxIndicator, HalfSquaredDistance, L1Norm, ProxFunction, QuadraticLoss,
    SmoothFunction, ZeroFunction, ZeroIndicator, ZeroSmooth,
};
pub use operators::{LinearMap, SpectralEstimate};
pub use problems::{
    gen_fused_lasso, gen_lasso, generate, reference_solve, Design, Instance, InstanceRecipe,
    ProblemKind, ProblemSpec, Reference,
};
pub use solvers::{
    map_states, solve, Algorithm, ConvergenceTrace, PhiOptions, SolveOptions, SolveOutcome,
    SolverState, TraceRecord,
};
pub use stepsizes::{
    check_classic, check_relaxed, gamma, ClassicRule, ConditionVerdict, StepsizeConfig,
};
pub use tightness::Classification;
