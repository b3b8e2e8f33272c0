//! Stepsize conditions for the primal-dual family.
//!
//! Stepsizes are parameterized by the primal step `r` and the product
//! `lambda = r * dual_step`. The relaxed rule trades primal range for dual
//! range through `theta in (3/4, 1]`:
//!
//! ```text
//! r * L / 2 < gamma(theta) = (4 theta - 3) / (2 theta - 1),    theta * lambda * sigma^2 <= 1
//! ```
//!
//! At `theta = 1` this is the PD3O/PDFP rule. As `theta -> 3/4` the dual bound
//! approaches `4 / (3 sigma^2)` while the primal bound collapses, unless
//! `L = 0` in which case the primal constraint disappears entirely.
//!
//! The primal bound is strict: `r L / 2 = Gamma(theta)` is rejected.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Non-strict inequalities tolerate this much relative rounding, so that
/// `lambda = 1 / (theta sigma^2)` passes `theta lambda sigma^2 <= 1`.
pub const NONSTRICT_RTOL: f64 = 1e-12;

/// `(r, lambda, theta)`: primal stepsize, stepsize product, relaxation parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeConfig {
    pub r: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl StepsizeConfig {
    pub fn new(r: f64, lambda: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Parameter(format!("r must be positive, got {r}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        check_theta(theta)?;
        Ok(Self { r, lambda, theta })
    }

    /// `theta = 1`.
    pub fn classic(r: f64, lambda: f64) -> Result<Self> {
        Self::new(r, lambda, 1.0)
    }

    pub fn primal_step(&self) -> f64 {
        self.r
    }

    pub fn dual_step(&self) -> f64 {
        self.lambda / self.r
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.75 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta must lie in (3/4, 1], got {theta}")))
    }
}

pub fn gamma(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok((4.0 * theta - 3.0) / (2.0 * theta - 1.0))
}

/// Largest admissible `lambda` for a given `theta`: `1 / (theta sigma^2)`.
pub fn max_lambda(theta: f64, sigma: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(1.0 / (theta * sigma * sigma))
}

/// Choice of `theta` for a requested `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoTheta {
    pub theta: f64,
    /// Strict upper bound on `r`; `None` when `L = 0` (any `r > 0`).
    pub r_ceiling: Option<f64>,
}

/// Picks the largest `theta` with `theta lambda sigma^2 <= 1`, which maximizes
/// `gamma(theta)` and hence the admissible primal stepsize.
pub fn auto_theta(lambda: f64, sigma: f64, lipschitz: f64) -> Result<AutoTheta> {
    if !(lambda > 0.0) || !(sigma > 0.0) || !(lipschitz >= 0.0) {
        return Err(Error::Domain(format!(
            "auto-theta needs lambda > 0, sigma > 0, L >= 0 (got {lambda}, {sigma}, {lipschitz})"
        )));
    }
    let product = lambda * sigma * sigma;
    let theta = (1.0 / product).min(1.0);
    if theta <= 0.75 {
        return Err(Error::Domain(format!(
            "lambda * sigma^2 = {product} is not below 4/3; no theta in (3/4, 1] admits it"
        )));
    }
    let r_ceiling = (lipschitz > 0.0).then(|| gamma(theta).map(|g| 2.0 * g / lipschitz)).transpose()?;
    Ok(AutoTheta { theta, r_ceiling })
}

/// Outcome of checking one set of inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub satisfied: bool,
    /// Smallest slack `rhs - lhs` over the constituent inequalities.
    pub margin: f64,
    /// The inequality attaining `margin`.
    pub binding: &'static str,
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (margin {:+.6e}, binding: {})",
            if self.satisfied { "satisfied" } else { "VIOLATED" },
            self.margin,
            self.binding
        )
    }
}

struct Inequality {
    name: &'static str,
    lhs: f64,
    rhs: f64,
    strict: bool,
}

fn evaluate(ineqs: &[Inequality]) -> ConditionVerdict {
    let mut satisfied = true;
    let mut margin = f64::INFINITY;
    let mut binding = "none";
    for q in ineqs {
        let mut slack = q.rhs - q.lhs;
        let ok = if q.strict {
            slack > 0.0
        } else {
            if slack < 0.0 && -slack <= NONSTRICT_RTOL * q.rhs.abs().max(1.0) {
                slack = 0.0;
            }
            slack >= 0.0
        };
        satisfied &= ok;
        if slack < margin {
            margin = slack;
            binding = q.name;
        }
    }
    ConditionVerdict {
        satisfied,
        margin,
        binding,
    }
}

fn check_inputs(lipschitz: f64, sigma: f64) -> Result<()> {
    if lipschitz >= 0.0 && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "need L >= 0 and sigma >= 0, got L = {lipschitz}, sigma = {sigma}"
        )))
    }
}

/// The relaxed condition `r L / 2 < gamma(theta)`, `theta lambda sigma^2 <= 1`.
pub fn check_relaxed(cfg: &StepsizeConfig, lipschitz: f64, sigma: f64) -> Result<ConditionVerdict> {
    check_inputs(lipschitz, sigma)?;
    let mut ineqs = Vec::with_capacity(2);
    if lipschitz > 0.0 {
        ineqs.push(Inequality {
            name: "r*L/2 < gamma(theta)",
            lhs: cfg.r * lipschitz / 2.0,
            rhs: gamma(cfg.theta)?,
            strict: true,
        });
    }
    ineqs.push(Inequality {
        name: "theta*lambda*sigma^2 <= 1",
        lhs: cfg.theta * cfg.lambda * sigma * sigma,
        rhs: 1.0,
        strict: false,
    });
    Ok(evaluate(&ineqs))
}

/// Previously published stepsize rules, one per algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassicRule {
    CondatVu,
    Pdfp,
    Afba,
    Pd3o,
    ChambollePock,
    Papc,
}

impl ClassicRule {
    pub const ALL: [ClassicRule; 6] = [
        ClassicRule::CondatVu,
        ClassicRule::Pdfp,
        ClassicRule::Afba,
        ClassicRule::Pd3o,
        ClassicRule::ChambollePock,
        ClassicRule::Papc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassicRule::CondatVu => "condat_vu",
            ClassicRule::Pdfp => "pdfp",
            ClassicRule::Afba => "afba",
            ClassicRule::Pd3o => "pd3o",
            ClassicRule::ChambollePock => "chambolle_pock",
            ClassicRule::Papc => "papc",
        }
    }
}

impl fmt::Display for ClassicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassicRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        ClassicRule::ALL
            .into_iter()
            .find(|r| r.name() == key || (key == "cp" && *r == ClassicRule::ChambollePock))
            .ok_or_else(|| Error::Parameter(format!("unknown algorithm rule {s:?}")))
    }
}

pub fn check_classic(
    rule: ClassicRule,
    cfg: &StepsizeConfig,
    lipschitz: f64,
    sigma: f64,
) -> Result<ConditionVerdict> {
    check_inputs(lipschitz, sigma)?;
    let ls2 = cfg.lambda * sigma * sigma;
    let half_rl = cfg.r * lipschitz / 2.0;
    let ineqs = match rule {
        ClassicRule::CondatVu => vec![Inequality {
            name: "lambda*sigma^2 + r*L/2 <= 1",
            lhs: ls2 + half_rl,
            rhs: 1.0,
            strict: false,
        }],
        ClassicRule::Pdfp | ClassicRule::Pd3o | ClassicRule::Papc => vec![
            Inequality {
                name: "r*L/2 < 1",
                lhs: half_rl,
                rhs: 1.0,
                strict: true,
            },
            Inequality {
                name: "lambda*sigma^2 <= 1",
                lhs: ls2,
                rhs: 1.0,
                strict: false,
            },
        ],
        ClassicRule::Afba => vec![Inequality {
            name: "lambda*sigma^2 + sqrt(lambda)*sigma + r*L <= 2",
            lhs: ls2 + cfg.lambda.sqrt() * sigma + cfg.r * lipschitz,
            rhs: 2.0,
            strict: false,
        }],
        ClassicRule::ChambollePock => vec![Inequality {
            name: "lambda*sigma^2 <= 1",
            lhs: ls2,
            rhs: 1.0,
            strict: false,
        }],
    };
    Ok(evaluate(&ineqs))
}
