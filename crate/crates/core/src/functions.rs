//! Oracles for the three terms of `f(x) + g(x) + h(Ax)`.
//!
//! `f` is smooth and only ever touched through its gradient. `g` and `h` are
//! proximable; the solvers need `prox` of `g` and the prox of the conjugate
//! `h*`, which [`conjugate_prox`] provides either from a registered closed form
//! or through the Moreau decomposition
//! `prox_{t h*}(v) = v - t * prox_{h/t}(v / t)`.

use std::fmt::Debug;
use std::sync::Arc;

use ndarray::Array1;

use crate::error::{check_len, Error, Result};
use crate::operators::LinearMap;

/// A convex function with Lipschitz continuous gradient.
///
/// `value` and `gradient` panic on inputs of the wrong length; problem
/// construction validates dimensions once so the iteration kernels don't have to.
pub trait SmoothFunction: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Array1<f64>) -> f64;
    fn gradient(&self, x: &Array1<f64>) -> Array1<f64>;
    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
    fn is_zero(&self) -> bool {
        false
    }
}

/// A proper closed convex function with a computable proximal map.
pub trait ProxFunction: Debug + Send + Sync {
    /// Required input length, or `None` for separable functions of any length.
    fn dim(&self) -> Option<usize> {
        None
    }
    /// Function value; `f64::INFINITY` outside the domain.
    fn value(&self, x: &Array1<f64>) -> f64;
    /// `argmin_y self(y) + ||y - v||^2 / (2 tau)`.
    fn prox(&self, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>>;
    /// Direct formula for the prox of the conjugate, when one is known.
    fn conjugate_prox_closed_form(&self, _tau: f64, _v: &Array1<f64>) -> Option<Array1<f64>> {
        None
    }
    fn is_zero(&self) -> bool {
        false
    }
}

fn check_step(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("prox stepsize must be positive, got {tau}")))
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {value}")))
    }
}

/// Resolvent of `tau * dh*` at `v`. Uses the registered closed form when `h`
/// has one, otherwise the Moreau decomposition.
pub fn conjugate_prox(h: &dyn ProxFunction, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>> {
    check_step(tau)?;
    if let Some(dim) = h.dim() {
        check_len("conjugate_prox", dim, v.len())?;
    }
    match h.conjugate_prox_closed_form(tau, v) {
        Some(p) => Ok(p),
        None => moreau_conjugate_prox(h, tau, v),
    }
}

/// `v - tau * prox_{h/tau}(v / tau)`, ignoring any closed form.
pub fn moreau_conjugate_prox(
    h: &dyn ProxFunction,
    tau: f64,
    v: &Array1<f64>,
) -> Result<Array1<f64>> {
    check_step(tau)?;
    let inner = h.prox(1.0 / tau, &(v / tau))?;
    Ok(v - &(inner * tau))
}

fn soft_threshold(v: &Array1<f64>, threshold: f64) -> Array1<f64> {
    v.mapv(|x| x.signum() * (x.abs() - threshold).max(0.0))
}

/// `f(x) = ||Kx - b||^2 / 2`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    k: Arc<LinearMap>,
    b: Array1<f64>,
    lipschitz: f64,
}

impl QuadraticLoss {
    /// The Lipschitz constant is `sigma(K)^2`, from the operator's cached or
    /// freshly estimated spectral norm.
    pub fn new(k: Arc<LinearMap>, b: Array1<f64>) -> Result<Self> {
        check_len("QuadraticLoss b", k.rows(), b.len())?;
        let sigma = k.sigma();
        Ok(Self {
            k,
            b,
            lipschitz: sigma * sigma,
        })
    }

    pub fn operator(&self) -> &Arc<LinearMap> {
        &self.k
    }

    pub fn target(&self) -> &Array1<f64> {
        &self.b
    }

    fn residual(&self, x: &Array1<f64>) -> Array1<f64> {
        self.k.apply(x).expect("QuadraticLoss input length") - &self.b
    }
}

impl SmoothFunction for QuadraticLoss {
    fn dim(&self) -> usize {
        self.k.cols()
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        let r = self.residual(x);
        0.5 * r.dot(&r)
    }

    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        self.k
            .apply_adjoint(&self.residual(x))
            .expect("QuadraticLoss residual length")
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// `f = 0` on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroSmooth {
    pub n: usize,
}

impl SmoothFunction for ZeroSmooth {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, _x: &Array1<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, x: &Array1<f64>) -> Array1<f64> {
        Array1::zeros(x.len())
    }
    fn lipschitz(&self) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// The zero function. Its conjugate is the indicator of `{0}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFunction;

impl ProxFunction for ZeroFunction {
    fn value(&self, _x: &Array1<f64>) -> f64 {
        0.0
    }
    fn prox(&self, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>> {
        check_step(tau)?;
        Ok(v.clone())
    }
    fn conjugate_prox_closed_form(&self, _tau: f64, v: &Array1<f64>) -> Option<Array1<f64>> {
        Some(Array1::zeros(v.len()))
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Indicator of `{0}`. Its conjugate is zero, so `h = ZeroIndicator` turns
/// the problem into the bilinear saddle `min_x max_s <Ax, s>` when `f = g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroIndicator;

impl ProxFunction for ZeroIndicator {
    fn value(&self, x: &Array1<f64>) -> f64 {
        if x.iter().all(|&v| v == 0.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>> {
        check_step(tau)?;
        Ok(Array1::zeros(v.len()))
    }
    fn conjugate_prox_closed_form(&self, _tau: f64, v: &Array1<f64>) -> Option<Array1<f64>> {
        Some(v.clone())
    }
}

/// `mu * ||x||_1`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    mu: f64,
}

impl L1Norm {
    pub fn new(mu: f64) -> Result<Self> {
        check_positive("l1 weight", mu)?;
        Ok(Self { mu })
    }

    pub fn weight(&self) -> f64 {
        self.mu
    }
}

impl ProxFunction for L1Norm {
    fn value(&self, x: &Array1<f64>) -> f64 {
        self.mu * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>> {
        check_step(tau)?;
        Ok(soft_threshold(v, tau * self.mu))
    }

    // (mu ||.||_1)* is the indicator of the l-inf ball of radius mu, whose
    // prox is a projection for every tau.
    fn conjugate_prox_closed_form(&self, _tau: f64, v: &Array1<f64>) -> Option<Array1<f64>> {
        Some(v.mapv(|x| x.clamp(-self.mu, self.mu)))
    }
}

/// `||x - b||^2 / 2`; conjugate `||s||^2 / 2 + <b, s>`.
#[derive(Debug, Clone)]
pub struct HalfSquaredDistance {
    b: Array1<f64>,
}

impl HalfSquaredDistance {
    pub fn new(b: Array1<f64>) -> Self {
        Self { b }
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.b
    }
}

impl ProxFunction for HalfSquaredDistance {
    fn dim(&self) -> Option<usize> {
        Some(self.b.len())
    }

    fn value(&self, x: &Array1<f64>) -> f64 {
        let d = x - &self.b;
        0.5 * d.dot(&d)
    }

    fn prox(&self, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>> {
        check_step(tau)?;
        check_len("HalfSquaredDistance::prox", self.b.len(), v.len())?;
        Ok((v + &(&self.b * tau)) / (1.0 + tau))
    }

    fn conjugate_prox_closed_form(&self, tau: f64, v: &Array1<f64>) -> Option<Array1<f64>> {
        Some((v - &(&self.b * tau)) / (1.0 + tau))
    }
}

/// Indicator of the box `{x : |x_i| <= bound}`; conjugate `bound * ||.||_1`.
#[derive(Debug, Clone, Copy)]
pub struct BoxIndicator {
    bound: f64,
}

impl BoxIndicator {
    pub fn new(bound: f64) -> Result<Self> {
        check_positive("box bound", bound)?;
        Ok(Self { bound })
    }
}

impl ProxFunction for BoxIndicator {
    fn value(&self, x: &Array1<f64>) -> f64 {
        if x.iter().all(|v| v.abs() <= self.bound) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, tau: f64, v: &Array1<f64>) -> Result<Array1<f64>> {
        check_step(tau)?;
        Ok(v.mapv(|x| x.clamp(-self.bound, self.bound)))
    }

    fn conjugate_prox_closed_form(&self, tau: f64, v: &Array1<f64>) -> Option<Array1<f64>> {
        Some(soft_threshold(v, tau * self.bound))
    }
}
