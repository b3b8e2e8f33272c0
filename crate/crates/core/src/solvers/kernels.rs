use ndarray::Array1;

use super::{Algorithm, SolverState};
use crate::error::{Error, Result};
use crate::functions::conjugate_prox;
use crate::problems::ProblemSpec;
use crate::stepsizes::StepsizeConfig;

fn expect(st: &SolverState, algorithm: Algorithm, prob: &ProblemSpec) -> Result<()> {
    if st.algorithm != algorithm {
        return Err(Error::Usage(format!(
            "{} step given a {} state",
            algorithm, st.algorithm
        )));
    }
    st.check_dims(prob)
}

/// One step of whichever algorithm `st` belongs to.
pub fn step(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<SolverState> {
    match st.algorithm {
        Algorithm::Base => base_step(st, prob, cfg),
        Algorithm::Afba => afba_step(st, prob, cfg),
        Algorithm::Pd3o => pd3o_step(st, prob, cfg),
        Algorithm::ChambollePock => cp_step(st, prob, cfg),
        Algorithm::Papc => papc_step(st, prob, cfg),
    }
}

/// ```text
/// s+    = prox_{(lambda/r) h*}( (lambda/r) A zeta + (I - lambda A A^T) s )
/// x+    = zeta - r A^T s+
/// zeta+ = prox_{r g}( x+ - r A^T s+ - r grad f(x+) ) - x+ + zeta
/// ```
pub fn base_step(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<SolverState> {
    expect(st, Algorithm::Base, prob)?;
    let (r, lam) = (cfg.r, cfg.lambda);
    let a = &prob.a;
    let zeta = &st.aux;

    // (lambda/r) A zeta - lambda A A^T s = A((lambda/r) zeta - lambda A^T s)
    let inner = zeta * (lam / r) - a.apply_adjoint(&st.s)? * lam;
    let s_new = conjugate_prox(prob.h.as_ref(), lam / r, &(&st.s + &a.apply(&inner)?))?;

    let at_s = a.apply_adjoint(&s_new)? * r;
    let x_new = zeta - &at_s;
    let arg = &x_new - &at_s - prob.f.gradient(&x_new) * r;
    let zeta_new = prob.g.prox(r, &arg)? - &x_new + zeta;
    Ok(SolverState::base(s_new, x_new, zeta_new))
}

/// ```text
/// s1+    = prox_{(lambda/r) h*}( s1 + (lambda/r) A x1_bar )
/// x1+    = x1_bar - r A^T (s1+ - s1)
/// x1_bar+ = prox_{r g}( x1+ - r A^T s1+ - r grad f(x1+) )
/// ```
pub fn afba_step(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<SolverState> {
    expect(st, Algorithm::Afba, prob)?;
    let (r, lam) = (cfg.r, cfg.lambda);
    let a = &prob.a;
    let x_bar = &st.aux;

    let s_new = conjugate_prox(prob.h.as_ref(), lam / r, &(&st.s + &(a.apply(x_bar)? * (lam / r))))?;
    let at_s_new = a.apply_adjoint(&s_new)? * r;
    let x_new = x_bar - &(&at_s_new - &(a.apply_adjoint(&st.s)? * r));
    let arg = &x_new - &at_s_new - prob.f.gradient(&x_new) * r;
    let x_bar_new = prob.g.prox(r, &arg)?;
    Ok(SolverState::afba(s_new, x_new, x_bar_new))
}

/// ```text
/// s2+ = prox_{(lambda/r) h*}( z2 )
/// x2+ = prox_{r g}( (I - lambda A^T A) x2 - r grad f(x2) - r A^T (2 s2+ - z2) )
/// z2+ = s2+ + (lambda/r) A x2+
/// ```
///
/// The gradient is taken at `x2`. With `f = 0` this is the base algorithm in
/// disguise; with a nonlinear gradient it is not (the dual-first Condat-Vu
/// ordering), so [`super::map_states`] only tracks it exactly when `f = 0`.
pub fn pd3o_step(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<SolverState> {
    expect(st, Algorithm::Pd3o, prob)?;
    let (r, lam) = (cfg.r, cfg.lambda);
    let a = &prob.a;
    let z = &st.aux;

    let s_new = conjugate_prox(prob.h.as_ref(), lam / r, z)?;
    // lambda A^T A x + r A^T (2 s+ - z) = A^T(lambda A x + r (2 s+ - z))
    let dual_part = a.apply(&st.x)? * lam + (&s_new * 2.0 - z) * r;
    let arg = &st.x - &(prob.f.gradient(&st.x) * r) - a.apply_adjoint(&dual_part)?;
    let x_new = prob.g.prox(r, &arg)?;
    let z_new = &s_new + &(a.apply(&x_new)? * (lam / r));
    Ok(SolverState::pd3o(s_new, x_new, z_new))
}

/// ```text
/// s3+ = prox_{(lambda/r) h*}( s3 + (lambda/r) A x3 )
/// x3+ = prox_{r g}( x3 - r A^T (2 s3+ - s3) )
/// ```
pub fn cp_step(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<SolverState> {
    expect(st, Algorithm::ChambollePock, prob)?;
    if !prob.f.is_zero() {
        return Err(Error::Usage("chambolle_pock requires f = 0".into()));
    }
    let (r, lam) = (cfg.r, cfg.lambda);
    let a = &prob.a;

    let s_new = conjugate_prox(prob.h.as_ref(), lam / r, &(&st.s + &(a.apply(&st.x)? * (lam / r))))?;
    let reflected = &s_new * 2.0 - &st.s;
    let x_new = prob.g.prox(r, &(&st.x - &(a.apply_adjoint(&reflected)? * r)))?;
    Ok(SolverState::chambolle_pock(s_new, x_new))
}

/// ```text
/// s4+ = prox_{(lambda/r) h*}( (lambda/r) A (x4 - r grad f(x4)) + (I - lambda A A^T) s4 )
/// x4+ = x4 - r grad f(x4) - r A^T s4+
/// ```
pub fn papc_step(st: &SolverState, prob: &ProblemSpec, cfg: &StepsizeConfig) -> Result<SolverState> {
    expect(st, Algorithm::Papc, prob)?;
    if !prob.g.is_zero() {
        return Err(Error::Usage("papc requires g = 0".into()));
    }
    let (r, lam) = (cfg.r, cfg.lambda);
    let a = &prob.a;

    let y: Array1<f64> = &st.x - &(prob.f.gradient(&st.x) * r);
    let inner = &y * (lam / r) - a.apply_adjoint(&st.s)? * lam;
    let s_new = conjugate_prox(prob.h.as_ref(), lam / r, &(&st.s + &a.apply(&inner)?))?;
    let x_new = y - a.apply_adjoint(&s_new)? * r;
    Ok(SolverState::papc(s_new, x_new))
}
