//! The Lyapunov function from the convergence proof, evaluated on base
//! iterates:
//!
//! ```text
//! Phi = 1/(2r) |x - x*|^2 + r/(2 lambda) |s - s*|^2_{M + M~} + 1/(2r) |zeta - zeta*|^2
//!     + beta r/(4 lambda) |s - s_prev|^2_M + beta r (1 - theta)/4 |A^T (s - s_prev)|^2
//!     + alpha/(2r) (1 - rL/2) |zeta_prev - zeta|^2
//! ```
//!
//! with `M = I - theta lambda A A^T`, `alpha = theta~ / (1 - theta)` (zero at
//! `theta = 1`), `beta = (1 + alpha)(1 - rL/2)` and
//! `M~ = I - alpha (1 - theta) lambda A A^T = I - theta~ lambda A A^T`.
//!
//! The proof writes `M~` without the factor `lambda`; it is needed for
//! `M~` to be the matrix whose positivity the proof assumes, and with it the
//! sequence is nonincreasing in practice.

use ndarray::Array1;

use super::{Algorithm, SolverState};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;
use crate::stepsizes::StepsizeConfig;

/// `0.99 * min(theta, 1 / (lambda sigma^2))`.
pub fn default_theta_tilde(cfg: &StepsizeConfig, sigma: f64) -> f64 {
    let cap = if sigma > 0.0 {
        1.0 / (cfg.lambda * sigma * sigma)
    } else {
        f64::INFINITY
    };
    0.99 * cfg.theta.min(cap)
}

/// Evaluates `Phi` at `curr`, given the previous base iterate (`None` treats
/// the difference terms as zero) and a fixed point `fixed`.
pub fn lyapunov_phi(
    curr: &SolverState,
    prev: Option<&SolverState>,
    fixed: &SolverState,
    cfg: &StepsizeConfig,
    prob: &ProblemSpec,
    theta_tilde: f64,
) -> Result<f64> {
    for (what, st) in [("current", Some(curr)), ("previous", prev), ("fixed", Some(fixed))] {
        if let Some(st) = st {
            if st.algorithm != Algorithm::Base {
                return Err(Error::Usage(format!(
                    "Lyapunov diagnostic needs base iterates, {what} state is {}",
                    st.algorithm
                )));
            }
            st.check_dims(prob)?;
        }
    }
    let theta = cfg.theta;
    if !(theta_tilde > 0.0 && theta_tilde < theta) {
        return Err(Error::Domain(format!(
            "theta_tilde must lie in (0, theta = {theta}), got {theta_tilde}"
        )));
    }
    let (r, lam) = (cfg.r, cfg.lambda);
    let half_rl = r * prob.lipschitz() / 2.0;
    let alpha = if theta < 1.0 { theta_tilde / (1.0 - theta) } else { 0.0 };
    let beta = (1.0 + alpha) * (1.0 - half_rl);
    let m_tilde_coef = alpha * (1.0 - theta);

    let a = &prob.a;
    let sq = |v: &Array1<f64>| v.dot(v);

    let ds_star = &curr.s - &fixed.s;
    let at_ds_star = sq(&a.apply_adjoint(&ds_star)?);
    let mut phi = sq(&(&curr.x - &fixed.x)) / (2.0 * r)
        + r / (2.0 * lam) * (2.0 * sq(&ds_star) - (theta + m_tilde_coef) * lam * at_ds_star)
        + sq(&(&curr.aux - &fixed.aux)) / (2.0 * r);

    if let Some(prev) = prev {
        let ds = &curr.s - &prev.s;
        let at_ds = sq(&a.apply_adjoint(&ds)?);
        phi += beta * r / (4.0 * lam) * (sq(&ds) - theta * lam * at_ds)
            + beta * r * (1.0 - theta) / 4.0 * at_ds
            + alpha / (2.0 * r) * (1.0 - half_rl) * sq(&(&prev.aux - &curr.aux));
    }
    Ok(phi)
}
