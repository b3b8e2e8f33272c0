//! Linear operators with forward and adjoint products.
//!
//! Every stepsize rule in this crate is stated in terms of `sigma`, the largest
//! singular value of the coupling operator, so each [`LinearMap`] can produce
//! (and caches) an estimate of it. Structured operators report their norm in
//! closed form; dense matrices go through seeded power iteration.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Error, Result};

pub const DEFAULT_SIGMA_TOL: f64 = 1e-8;
pub const DEFAULT_SIGMA_MAX_ITER: usize = 5000;
pub const DEFAULT_SIGMA_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Dense(Array2<f64>),
    /// Forward differences: row `i` has -1 in column `i` and +1 in column `i + 1`.
    Difference,
    Identity,
    Diagonal(Array1<f64>),
}

/// An `rows x cols` linear operator.
///
/// Immutable after construction apart from the write-once spectral norm cache,
/// so a single instance can be shared (behind an `Arc`) by concurrent solves.
#[derive(Debug)]
pub struct LinearMap {
    rows: usize,
    cols: usize,
    repr: Representation,
    sigma: OnceLock<f64>,
}

impl Clone for LinearMap {
    fn clone(&self) -> Self {
        let sigma = OnceLock::new();
        if let Some(s) = self.sigma.get() {
            let _ = sigma.set(*s);
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            repr: self.repr.clone(),
            sigma,
        }
    }
}

/// Result of a spectral norm computation.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub sigma: f64,
    /// `false` when power iteration hit `max_iter` before meeting `tol`; `sigma`
    /// is then the best lower estimate seen.
    pub converged: bool,
    pub iterations: usize,
    /// Unit vector `v` (length `cols`) with `||Av|| ~= sigma`.
    pub right_vector: Array1<f64>,
}

impl LinearMap {
    fn build(rows: usize, cols: usize, repr: Representation) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Parameter(format!(
                "degenerate {rows}x{cols} operator"
            )));
        }
        Ok(Self {
            rows,
            cols,
            repr,
            sigma: OnceLock::new(),
        })
    }

    pub fn dense(matrix: Array2<f64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("matrix has non-finite entries".into()));
        }
        Self::build(rows, cols, Representation::Dense(matrix))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::Shape {
                context: "matrix row",
                expected: ncols,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let matrix = Array2::from_shape_vec((rows.len(), ncols), flat)
            .map_err(|e| Error::Parameter(e.to_string()))?;
        Self::dense(matrix)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::dense(Array2::zeros((rows, cols)))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::build(n, n, Representation::Identity)
    }

    pub fn diagonal(diag: Array1<f64>) -> Result<Self> {
        let n = diag.len();
        Self::build(n, n, Representation::Diagonal(diag))
    }

    /// The `(n-1) x n` first-difference operator, stored as a stencil.
    pub fn difference(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!(
                "difference operator needs n >= 2, got {n}"
            )));
        }
        Self::build(n - 1, n, Representation::Difference)
    }

    /// Dense matrix with i.i.d. standard normal entries.
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::dense(Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut rng)))
    }

    /// Loads a dense matrix from a comma-separated, row-major text file.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::dense(crate::io::read_matrix_csv(path)?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Representation::Dense(m) => m.iter().all(|&v| v == 0.0),
            Representation::Diagonal(d) => d.iter().all(|&v| v == 0.0),
            Representation::Difference | Representation::Identity => false,
        }
    }

    /// `A v`.
    pub fn apply(&self, v: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("LinearMap::apply", self.cols, v.len())?;
        Ok(match &self.repr {
            Representation::Dense(m) => m.dot(v),
            Representation::Identity => v.clone(),
            Representation::Diagonal(d) => d * v,
            Representation::Difference => {
                Array1::from_iter(v.windows(2).into_iter().map(|w| w[1] - w[0]))
            }
        })
    }

    /// `A^T w`.
    pub fn apply_adjoint(&self, w: &Array1<f64>) -> Result<Array1<f64>> {
        check_len("LinearMap::apply_adjoint", self.rows, w.len())?;
        Ok(match &self.repr {
            Representation::Dense(m) => m.t().dot(w),
            Representation::Identity => w.clone(),
            Representation::Diagonal(d) => d * w,
            Representation::Difference => {
                let m = self.rows;
                Array1::from_shape_fn(self.cols, |j| {
                    let left = if j >= 1 { w[j - 1] } else { 0.0 };
                    let right = if j < m { w[j] } else { 0.0 };
                    left - right
                })
            }
        })
    }

    /// Materializes the operator. Test and I/O helper; solvers never call it.
    pub fn to_dense(&self) -> Array2<f64> {
        match &self.repr {
            Representation::Dense(m) => m.clone(),
            Representation::Identity => Array2::eye(self.rows),
            Representation::Diagonal(d) => Array2::from_diag(d),
            Representation::Difference => {
                let mut m = Array2::zeros((self.rows, self.cols));
                for i in 0..self.rows {
                    m[[i, i]] = -1.0;
                    m[[i, i + 1]] = 1.0;
                }
                m
            }
        }
    }

    pub fn cached_sigma(&self) -> Option<f64> {
        self.sigma.get().copied()
    }

    /// The spectral norm, estimated with default settings on first use.
    pub fn sigma(&self) -> f64 {
        if let Some(s) = self.sigma.get() {
            return *s;
        }
        let est = self
            .estimate_spectral_norm(DEFAULT_SIGMA_TOL, DEFAULT_SIGMA_MAX_ITER, DEFAULT_SIGMA_SEED)
            .expect("default spectral norm parameters are valid");
        est.sigma
    }

    /// Estimates `sigma = sqrt(||A A^T||)` and caches it.
    ///
    /// Identity, diagonal and difference operators use their exact norms. Dense
    /// matrices use power iteration on the smaller of `A^T A` and `A A^T`.
    pub fn estimate_spectral_norm(
        &self,
        tol: f64,
        max_iter: usize,
        seed: u64,
    ) -> Result<SpectralEstimate> {
        let est = match &self.repr {
            Representation::Dense(_) => self.power_iteration(tol, max_iter, seed)?,
            _ => {
                validate_power_params(tol, max_iter)?;
                self.closed_form_norm(seed)
            }
        };
        if !est.converged {
            log::warn!(
                "power iteration stopped after {} iterations without reaching tol {tol:e}; sigma ~ {}",
                est.iterations,
                est.sigma
            );
        }
        let _ = self.sigma.set(est.sigma);
        Ok(est)
    }

    fn closed_form_norm(&self, seed: u64) -> SpectralEstimate {
        let (sigma, right_vector) = match &self.repr {
            Representation::Identity => {
                let mut v = random_unit(self.cols, seed);
                if v.iter().all(|x| *x == 0.0) {
                    v[0] = 1.0;
                }
                (1.0, v)
            }
            Representation::Diagonal(d) => {
                let (idx, max) = d
                    .iter()
                    .map(|v| v.abs())
                    .enumerate()
                    .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
                let mut v = Array1::zeros(self.cols);
                v[idx] = 1.0;
                (max, v)
            }
            Representation::Difference => {
                // B^T B is the path-graph Laplacian; its top eigenpair is
                // 2 - 2cos((n-1)pi/n) with eigenvector cos((n-1)pi(j+1/2)/n).
                let n = self.cols as f64;
                let sigma = 2.0 * (PI / (2.0 * n)).cos();
                let mut v = Array1::from_shape_fn(self.cols, |j| {
                    ((n - 1.0) * PI * (j as f64 + 0.5) / n).cos()
                });
                let norm = norm(&v);
                v /= norm;
                (sigma, v)
            }
            Representation::Dense(_) => unreachable!("dense operators use power iteration"),
        };
        SpectralEstimate {
            sigma,
            converged: true,
            iterations: 0,
            right_vector,
        }
    }

    /// Power iteration regardless of representation. Exposed so the closed
    /// forms can be cross-checked; does not touch the cache.
    pub fn power_iteration(&self, tol: f64, max_iter: usize, seed: u64) -> Result<SpectralEstimate> {
        validate_power_params(tol, max_iter)?;
        let gram_on_rows = self.rows < self.cols;
        let dim = if gram_on_rows { self.rows } else { self.cols };
        let gram = |v: &Array1<f64>| -> Array1<f64> {
            if gram_on_rows {
                self.apply(&self.apply_adjoint(v).unwrap()).unwrap()
            } else {
                self.apply_adjoint(&self.apply(v).unwrap()).unwrap()
            }
        };

        let mut v = random_unit(dim, seed);
        let mut best = 0.0_f64;
        let mut best_vec = v.clone();
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=max_iter {
            iterations = it;
            let w = gram(&v);
            let w_norm = norm(&w);
            if w_norm == 0.0 {
                // Only the zero operator annihilates a Gaussian start vector.
                best = 0.0;
                converged = true;
                break;
            }
            let rayleigh = v.dot(&w);
            if rayleigh >= best {
                best = rayleigh;
                best_vec = v.clone();
            }
            let residual = norm(&(&w - &(&v * rayleigh)));
            v = w / w_norm;
            if residual <= tol * rayleigh {
                converged = true;
                break;
            }
        }

        let sigma = best.max(0.0).sqrt();
        let right_vector = if gram_on_rows {
            let mut r = self.apply_adjoint(&best_vec)?;
            let n = norm(&r);
            if n > 0.0 {
                r /= n;
            }
            r
        } else {
            best_vec
        };
        Ok(SpectralEstimate {
            sigma,
            converged,
            iterations,
            right_vector,
        })
    }
}

fn validate_power_params(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::Parameter("max_iter must be at least 1".into()));
    }
    Ok(())
}

fn random_unit(dim: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Array1::from_iter((0..dim).map(|_| StandardNormal.sample(&mut rng)));
    let n = norm(&v);
    if n > 0.0 {
        v /= n;
    }
    v
}

pub(crate) fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}
