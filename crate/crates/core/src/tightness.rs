//! Sharpness of `lambda sigma^2 < 4/3` on the bilinear problem
//! `min_x max_s <Ax, s>`.
//!
//! With `f = g = 0` and `h* = 0` the base iteration is linear:
//!
//! ```text
//! s+ = (lambda/r) A x + (I - lambda A A^T) s
//! x+ = x - r A^T s+
//! ```
//!
//! On each eigenpair of `A A^T` with eigenvalue `e` it acts as the 2x2 matrix
//! `[[1 - t, lambda/r], [-r e (1 - t), 1 - t]]` (in suitably scaled
//! coordinates), `t = lambda e`, whose eigenvalues are
//! `1 - t +- sqrt(-t (1 - t))`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::operators::{LinearMap, DEFAULT_SIGMA_MAX_ITER, DEFAULT_SIGMA_SEED, DEFAULT_SIGMA_TOL};
use crate::stepsizes::StepsizeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `t < 1`: both eigenvalues have modulus `sqrt(1 - t)`.
    ComplexPair,
    /// `t = 1`.
    DoubleZero,
    /// `t > 1`.
    RealPair,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralVerdict {
    pub lam_theta: f64,
    pub eigen_magnitudes: (f64, f64),
    pub spectral_radius: f64,
    pub regime: Regime,
}

pub fn eigen_magnitudes(lam_theta: f64) -> Result<SpectralVerdict> {
    let t = lam_theta;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda * eigenvalue must be a nonnegative number, got {t}"
        )));
    }
    let (mags, regime) = if t < 1.0 {
        let m = (1.0 - t).sqrt();
        ((m, m), Regime::ComplexPair)
    } else if t == 1.0 {
        ((0.0, 0.0), Regime::DoubleZero)
    } else {
        let d = (t * (t - 1.0)).sqrt();
        (((1.0 - t + d).abs(), (1.0 - t - d).abs()), Regime::RealPair)
    };
    Ok(SpectralVerdict {
        lam_theta: t,
        eigen_magnitudes: mags,
        spectral_radius: mags.0.max(mags.1),
        regime,
    })
}

/// `lambda sigma^2 < 4/3`: the iteration contracts from every start.
///
/// Compared directly rather than through the radius, which rounds to just
/// below 1 at `4/3`.
pub fn necessary_condition(lambda: f64, sigma: f64) -> bool {
    lambda * sigma * sigma < 4.0 / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Converged,
    Diverged,
    Marginal,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Converged => "converged",
            Classification::Diverged => "diverged",
            Classification::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Classification::Converged),
            "diverged" => Ok(Classification::Diverged),
            "marginal" => Ok(Classification::Marginal),
            _ => Err(Error::Parse(format!("unknown classification {s:?}"))),
        }
    }
}

/// Growth ratios beyond these bounds decide the classification.
const DECAY_RATIO: f64 = 1e-3;
const GROWTH_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalResult {
    pub classification: Classification,
    /// Largest increment norm over the last quarter of the run divided by the
    /// first one. Infinite or NaN after overflow.
    pub ratio: f64,
}

/// Runs the bilinear recursion for `iters` steps and classifies it.
///
/// The start mixes the top right singular vector of `A` into `x0` plus a small
/// seeded perturbation in both blocks. The observable is the increment norm
/// `d_k = ||(s_{k+1} - s_k, A(x_{k+1} - x_k))||`, which ignores the frozen
/// null-space part of `x`. Let `R = max(d over the last quarter) / d_0`:
/// `R < 1e-3` (or `d = 0` throughout) is converged, `R > 1e3` or overflow is
/// diverged, anything else marginal.
pub fn empirical_divergence_check(
    a: &LinearMap,
    cfg: &StepsizeConfig,
    iters: usize,
    seed: u64,
) -> Result<EmpiricalResult> {
    if iters < 100 {
        return Err(Error::Parameter(format!("need at least 100 iterations, got {iters}")));
    }
    let (r, lam) = (cfg.r, cfg.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = |len: usize| -> Array1<f64> {
        Array1::from_shape_fn(len, |_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            1e-6 * z
        })
    };
    let top = a.estimate_spectral_norm(DEFAULT_SIGMA_TOL, DEFAULT_SIGMA_MAX_ITER, DEFAULT_SIGMA_SEED)?;
    let mut x = top.right_vector + noise(a.cols());
    let mut s = noise(a.rows());

    let quartile_start = iters - iters / 4;
    let mut d0 = None;
    let mut tail_max: f64 = 0.0;
    let mut any_nonzero = false;
    for k in 0..iters {
        let inner = &x * (lam / r) - a.apply_adjoint(&s)? * lam;
        let ds = a.apply(&inner)?;
        let s_new = &s + &ds;
        let dx = a.apply_adjoint(&s_new)? * (-r);
        let adx = a.apply(&dx)?;
        let d = (ds.dot(&ds) + adx.dot(&adx)).sqrt();
        x += &dx;
        s = s_new;
        if !d.is_finite() {
            return Ok(EmpiricalResult {
                classification: Classification::Diverged,
                ratio: f64::INFINITY,
            });
        }
        any_nonzero |= d > 0.0;
        if k == 0 {
            d0 = Some(d);
        }
        if k >= quartile_start {
            tail_max = tail_max.max(d);
        }
    }
    if !any_nonzero {
        return Ok(EmpiricalResult {
            classification: Classification::Converged,
            ratio: 0.0,
        });
    }
    let d0 = d0.unwrap_or(0.0);
    let ratio = if d0 > 0.0 { tail_max / d0 } else { f64::INFINITY };
    let classification = if ratio < DECAY_RATIO {
        Classification::Converged
    } else if ratio > GROWTH_RATIO {
        Classification::Diverged
    } else {
        Classification::Marginal
    };
    Ok(EmpiricalResult {
        classification,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub lam_sigma2: f64,
    /// Spectral radius at the top eigenvalue of `A A^T`.
    pub radius: f64,
    pub classification: Classification,
}

/// Evaluates every `lambda sigma^2` in `grid` on operator `a` with primal step
/// `r`. Points run concurrently; each uses `seed` for its start.
pub fn sweep(a: &LinearMap, grid: &[f64], r: f64, iters: usize, seed: u64) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::Usage("tightness grid is empty".into()));
    }
    let sigma = a.sigma();
    if !(sigma > 0.0) {
        return Err(Error::Domain("tightness sweep needs a nonzero operator".into()));
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&ls2| {
                scope.spawn(move || -> Result<SweepPoint> {
                    let radius = eigen_magnitudes(ls2)?.spectral_radius;
                    let cfg = StepsizeConfig::classic(r, ls2 / (sigma * sigma))?;
                    let result = empirical_divergence_check(a, &cfg, iters, seed)?;
                    Ok(SweepPoint {
                        lam_sigma2: ls2,
                        radius,
                        classification: result.classification,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

pub fn sweep_to_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("lam_sigma2,radius,classification\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.lam_sigma2, p.radius, p.classification));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand_distr::StandardNormal;

    fn random_square(n: usize, seed: u64) -> LinearMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearMap::dense(Array2::from_shape_fn((n, n), |_| StandardNormal.sample(&mut rng))).unwrap()
    }

    #[test]
    fn magnitudes_examples() {
        let v = eigen_magnitudes(1.0).unwrap();
        assert_eq!(v.eigen_magnitudes, (0.0, 0.0));
        assert_eq!(v.regime, Regime::DoubleZero);

        let v = eigen_magnitudes(4.0 / 3.0).unwrap();
        assert!((v.spectral_radius - 1.0).abs() < 1e-15);
        assert_eq!(v.regime, Regime::RealPair);

        let v = eigen_magnitudes(0.5).unwrap();
        assert!((v.spectral_radius - 0.5_f64.sqrt()).abs() < 1e-15);
        assert!(matches!(eigen_magnitudes(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn radius_increases_past_one() {
        let mut prev = eigen_magnitudes(1.0).unwrap().spectral_radius;
        for i in 1..=100 {
            let rho = eigen_magnitudes(1.0 + i as f64 / 100.0).unwrap().spectral_radius;
            assert!(rho > prev);
            prev = rho;
        }
    }

    #[test]
    fn necessary_condition_boundary() {
        assert!(necessary_condition(1.0, 1.0));
        assert!(!necessary_condition(4.0 / 3.0, 1.0));
        assert!(necessary_condition(1.32, 1.0));
        assert!(necessary_condition(0.33, 2.0));
    }

    #[test]
    fn empirical_classification_matches_formula() {
        let a = random_square(8, 11);
        let sigma = a.sigma();
        let classify = |ls2: f64| {
            let cfg = StepsizeConfig::classic(1.0, ls2 / (sigma * sigma)).unwrap();
            empirical_divergence_check(&a, &cfg, 2000, 3).unwrap().classification
        };
        assert_eq!(classify(0.9), Classification::Converged);
        assert_eq!(classify(1.4), Classification::Diverged);
    }

    #[test]
    fn zero_operator_converges() {
        let a = LinearMap::zeros(4, 4).unwrap();
        let cfg = StepsizeConfig::classic(1.0, 1.0).unwrap();
        let res = empirical_divergence_check(&a, &cfg, 200, 0).unwrap();
        assert_eq!(res.classification, Classification::Converged);
    }

    #[test]
    fn too_few_iterations_rejected() {
        let a = random_square(3, 1);
        let cfg = StepsizeConfig::classic(1.0, 0.1).unwrap();
        assert!(matches!(
            empirical_divergence_check(&a, &cfg, 99, 0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let a = random_square(3, 1);
        assert!(matches!(sweep(&a, &[], 1.0, 200, 0), Err(Error::Usage(_))));
        let pts = sweep(&a, &[1.0], 1.0, 500, 0).unwrap();
        assert_eq!(pts[0].classification, Classification::Converged);
        assert!(sweep_to_csv(&pts).starts_with("lam_sigma2,radius,classification\n1,0,converged"));
    }
}
