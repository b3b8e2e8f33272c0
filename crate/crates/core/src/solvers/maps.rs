use super::{Algorithm, SolverState};
use crate::error::{Error, Result};
use crate::operators::LinearMap;
use crate::stepsizes::StepsizeConfig;

/// Converts an iterate of `st.algorithm` into the matching iterate of `to`.
///
/// Supported pairs: base <-> afba, afba <-> pd3o, base <-> pd3o,
/// base <-> chambolle_pock. Directions out of pd3o and chambolle_pock need the
/// previous iterate `prev` of the same algorithm, because the primal variable
/// they map to is `x_prev - r A^T (s - s_prev)`.
pub fn map_states(
    to: Algorithm,
    st: &SolverState,
    prev: Option<&SolverState>,
    cfg: &StepsizeConfig,
    a: &LinearMap,
) -> Result<SolverState> {
    use Algorithm::*;
    let from = st.algorithm;
    if from == to {
        return Ok(st.clone());
    }
    let r = cfg.r;
    let ratio = cfg.lambda / r;
    let need_prev = || -> Result<&SolverState> {
        let p = prev.ok_or_else(|| {
            Error::Usage(format!("mapping {from} -> {to} needs the previous {from} iterate"))
        })?;
        if p.algorithm != from {
            return Err(Error::Usage(format!(
                "previous iterate is {}, expected {from}",
                p.algorithm
            )));
        }
        Ok(p)
    };
    // x_prev - r A^T (s - s_prev)
    let lagged_x = |p: &SolverState| -> Result<_> {
        Ok(&p.x - &(a.apply_adjoint(&(&st.s - &p.s))? * r))
    };

    match (from, to) {
        (Base, Afba) => {
            let x_bar = &st.aux - &(a.apply_adjoint(&st.s)? * r);
            Ok(SolverState::afba(st.s.clone(), st.x.clone(), x_bar))
        }
        (Afba, Base) => {
            let zeta = &st.aux + &(a.apply_adjoint(&st.s)? * r);
            Ok(SolverState::base(st.s.clone(), st.x.clone(), zeta))
        }
        (Afba, Pd3o) => {
            let z = &st.s + &(a.apply(&st.aux)? * ratio);
            Ok(SolverState::pd3o(st.s.clone(), st.aux.clone(), z))
        }
        (Pd3o, Afba) => {
            let x = lagged_x(need_prev()?)?;
            Ok(SolverState::afba(st.s.clone(), x, st.x.clone()))
        }
        (Base, Pd3o) => {
            let at_s = a.apply_adjoint(&st.s)?;
            let x = &st.aux - &(&at_s * r);
            // (I - lambda A A^T) s + (lambda/r) A zeta = s + A((lambda/r) zeta - lambda A^T s)
            let z = &st.s + &a.apply(&(&st.aux * ratio - at_s * cfg.lambda))?;
            Ok(SolverState::pd3o(st.s.clone(), x, z))
        }
        (Pd3o, Base) | (ChambollePock, Base) => {
            let x = lagged_x(need_prev()?)?;
            let zeta = &st.x + &(a.apply_adjoint(&st.s)? * r);
            Ok(SolverState::base(st.s.clone(), x, zeta))
        }
        (Base, ChambollePock) => {
            let x = &st.aux - &(a.apply_adjoint(&st.s)? * r);
            Ok(SolverState::chambolle_pock(st.s.clone(), x))
        }
        _ => Err(Error::Usage(format!("no state relation between {from} and {to}"))),
    }
}
