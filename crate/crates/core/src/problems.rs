//! Problem instances `min f(x) + g(x) + h(Ax)` and the synthetic LASSO and
//! fused-LASSO generators.
//!
//! LASSO puts the data term in `h` (`f = 0`, `g = mu |x|_1`,
//! `h = |. - b|^2 / 2` composed with `K`), so Chambolle-Pock applies. Fused
//! LASSO puts it in `f` (`f = |Kx - b|^2 / 2`, `g = mu2 |x|_1`,
//! `h = mu1 |.|_1` composed with the difference operator).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::functions::{
    HalfSquaredDistance, L1Norm, ProxFunction, QuadraticLoss, SmoothFunction,
    ZeroSmooth,
};
use crate::io;
use crate::operators::LinearMap;
use crate::solvers::{relative_gap, step, Algorithm, SolverState};
use crate::stepsizes::StepsizeConfig;

/// Best point found by [`reference_solve`] and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Array1<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// `f + g + h(A .)` with its oracles.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub f: Arc<dyn SmoothFunction>,
    pub g: Arc<dyn ProxFunction>,
    pub h: Arc<dyn ProxFunction>,
    pub a: Arc<LinearMap>,
    pub reference: Option<Reference>,
}

impl ProblemSpec {
    pub fn new(
        f: Arc<dyn SmoothFunction>,
        g: Arc<dyn ProxFunction>,
        h: Arc<dyn ProxFunction>,
        a: Arc<LinearMap>,
    ) -> Result<Self> {
        let (n, m) = (a.cols(), a.rows());
        if f.dim() != n {
            return Err(Error::Shape {
                context: "ProblemSpec f",
                expected: n,
                got: f.dim(),
            });
        }
        if let Some(d) = g.dim().filter(|&d| d != n) {
            return Err(Error::Shape {
                context: "ProblemSpec g",
                expected: n,
                got: d,
            });
        }
        if let Some(d) = h.dim().filter(|&d| d != m) {
            return Err(Error::Shape {
                context: "ProblemSpec h",
                expected: m,
                got: d,
            });
        }
        Ok(Self {
            f,
            g,
            h,
            a,
            reference: None,
        })
    }

    /// Primal dimension.
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Dual dimension.
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }

    pub fn sigma(&self) -> f64 {
        self.a.sigma()
    }

    /// `f(x) + g(x) + h(Ax)`; infinite when an indicator is violated.
    ///
    /// # Panics
    /// If `x.len() != self.n()`.
    pub fn objective(&self, x: &Array1<f64>) -> f64 {
        let ax = self.a.apply(x).expect("objective: x has the wrong length");
        let terms = [self.f.value(x), self.g.value(x), self.h.value(&ax)];
        if terms.contains(&f64::INFINITY) {
            f64::INFINITY
        } else {
            terms.iter().sum()
        }
    }

    /// `(F(x) - F_ref) / |F_ref|`, if a reference is stored.
    pub fn relative_gap(&self, x: &Array1<f64>) -> Option<f64> {
        self.reference
            .as_ref()
            .map(|r| relative_gap(self.objective(x), r.objective))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Lasso,
    FusedLasso,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Lasso => "lasso",
            ProblemKind::FusedLasso => "fused_lasso",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "lasso" => Ok(ProblemKind::Lasso),
            "fused_lasso" | "fused" => Ok(ProblemKind::FusedLasso),
            _ => Err(Error::Parameter(format!("unknown problem kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// i.i.d. standard normal entries.
    Gaussian,
    /// `K = I`; the data dimension equals `n`.
    Identity,
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Gaussian => "gaussian",
            Design::Identity => "identity",
        })
    }
}

impl FromStr for Design {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Design::Gaussian),
            "identity" => Ok(Design::Identity),
            _ => Err(Error::Parameter(format!("unknown design {s:?}"))),
        }
    }
}

/// Everything needed to regenerate an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceRecipe {
    pub kind: ProblemKind,
    pub design: Design,
    pub n: usize,
    /// Rows of `K`. Ignored (taken as `n`) for the identity design.
    pub m_data: usize,
    pub nnz: usize,
    /// Noise standard deviation relative to `||K x_true|| / sqrt(m_data)`.
    pub noise: f64,
    /// LASSO penalty.
    pub mu: f64,
    /// Fused LASSO penalty on differences.
    pub mu1: f64,
    /// Fused LASSO penalty on coefficients.
    pub mu2: f64,
    pub seed: u64,
}

impl InstanceRecipe {
    /// 50 x 500 gaussian LASSO.
    pub fn desk_lasso(seed: u64) -> Self {
        Self {
            kind: ProblemKind::Lasso,
            design: Design::Gaussian,
            n: 500,
            m_data: 50,
            nnz: 5,
            noise: 0.1,
            mu: 2.0,
            mu1: 0.0,
            mu2: 0.0,
            seed,
        }
    }

    /// 50 x 500 gaussian fused LASSO.
    pub fn desk_fused(seed: u64) -> Self {
        Self {
            kind: ProblemKind::FusedLasso,
            design: Design::Gaussian,
            n: 500,
            m_data: 50,
            nnz: 5,
            noise: 0.1,
            mu: 0.0,
            mu1: 20.0,
            mu2: 2.0,
            seed,
        }
    }

    /// 250 x 250 identity-design fused LASSO.
    pub fn desk_fused_identity(seed: u64) -> Self {
        Self {
            kind: ProblemKind::FusedLasso,
            design: Design::Identity,
            n: 250,
            m_data: 250,
            nnz: 25,
            noise: 0.1,
            mu: 0.0,
            mu1: 1.0,
            mu2: 0.04,
            seed,
        }
    }

    pub fn data_rows(&self) -> usize {
        match self.design {
            Design::Identity => self.n,
            Design::Gaussian => self.m_data,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.n == 0 || self.data_rows() == 0 {
            return bad(format!("degenerate dimensions n={} m={}", self.n, self.data_rows()));
        }
        if self.nnz > self.n {
            return bad(format!("nnz {} exceeds n {}", self.nnz, self.n));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be nonnegative, got {}", self.noise));
        }
        match self.kind {
            ProblemKind::Lasso if !(self.mu > 0.0) => bad(format!("mu must be positive, got {}", self.mu)),
            ProblemKind::FusedLasso if !(self.mu1 > 0.0 && self.mu2 > 0.0) => bad(format!(
                "mu1 and mu2 must be positive, got {} and {}",
                self.mu1, self.mu2
            )),
            ProblemKind::FusedLasso if self.n < 2 => bad("fused LASSO needs n >= 2".into()),
            _ => Ok(()),
        }
    }

    /// Sets one field from its `key=value` spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
        };
        let count = |v: &str| -> Result<usize> {
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
        };
        match key {
            "kind" | "problem" => self.kind = value.parse()?,
            "design" => self.design = value.parse()?,
            "n" => self.n = count(value)?,
            "m" | "m_data" => self.m_data = count(value)?,
            "nnz" => self.nnz = count(value)?,
            "noise" => self.noise = num(value)?,
            "mu" => self.mu = num(value)?,
            "mu1" => self.mu1 = num(value)?,
            "mu2" => self.mu2 = num(value)?,
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("seed={value}: {e}")))?
            }
            _ => return Err(Error::Parameter(format!("unknown recipe key {key:?}"))),
        }
        Ok(())
    }

    /// `key=value` lines, one per field, in a fixed order.
    pub fn to_meta(&self) -> String {
        format!(
            "kind={}\ndesign={}\nn={}\nm={}\nnnz={}\nnoise={}\nmu={}\nmu1={}\nmu2={}\nseed={}\n",
            self.kind,
            self.design,
            self.n,
            self.data_rows(),
            self.nnz,
            self.noise,
            self.mu,
            self.mu1,
            self.mu2,
            self.seed
        )
    }
}

/// A generated problem together with its data.
#[derive(Debug, Clone)]
pub struct Instance {
    pub recipe: InstanceRecipe,
    pub spec: ProblemSpec,
    pub k: Arc<LinearMap>,
    pub b: Array1<f64>,
    pub x_true: Option<Array1<f64>>,
}

struct Data {
    k: Arc<LinearMap>,
    b: Array1<f64>,
    x_true: Array1<f64>,
}

fn sample_data(recipe: &InstanceRecipe) -> Result<Data> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let n = recipe.n;
    let m = recipe.data_rows();
    let k = match recipe.design {
        Design::Gaussian => {
            LinearMap::dense(Array2::from_shape_fn((m, n), |_| StandardNormal.sample(&mut rng)))?
        }
        Design::Identity => LinearMap::identity(n)?,
    };
    let mut x_true = Array1::zeros(n);
    for i in index::sample(&mut rng, n, recipe.nnz) {
        x_true[i] = StandardNormal.sample(&mut rng);
    }
    let clean = k.apply(&x_true)?;
    let std = recipe.noise * clean.dot(&clean).sqrt() / (m as f64).sqrt();
    let b = clean.mapv(|v| v + std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    Ok(Data {
        k: Arc::new(k),
        b,
        x_true,
    })
}

fn lasso_spec(k: Arc<LinearMap>, b: &Array1<f64>, mu: f64) -> Result<ProblemSpec> {
    ProblemSpec::new(
        Arc::new(ZeroSmooth { n: k.cols() }),
        Arc::new(L1Norm::new(mu)?),
        Arc::new(HalfSquaredDistance::new(b.clone())),
        k,
    )
}

fn fused_spec(k: Arc<LinearMap>, b: &Array1<f64>, mu1: f64, mu2: f64) -> Result<ProblemSpec> {
    let n = k.cols();
    ProblemSpec::new(
        Arc::new(QuadraticLoss::new(k, b.clone())?),
        Arc::new(L1Norm::new(mu2)?),
        Arc::new(L1Norm::new(mu1)?),
        Arc::new(difference_matrix(n)?),
    )
}

/// `|Kx - b|^2 / 2 + mu |x|_1` with the data term carried by `h`.
pub fn gen_lasso(recipe: &InstanceRecipe) -> Result<Instance> {
    if recipe.kind != ProblemKind::Lasso {
        return Err(Error::Parameter("gen_lasso needs a lasso recipe".into()));
    }
    let data = sample_data(recipe)?;
    let spec = lasso_spec(data.k.clone(), &data.b, recipe.mu)?;
    Ok(Instance {
        recipe: recipe.clone(),
        spec,
        k: data.k,
        b: data.b,
        x_true: Some(data.x_true),
    })
}

/// `|Kx - b|^2 / 2 + mu1 |Bx|_1 + mu2 |x|_1` with `B` the difference operator.
pub fn gen_fused_lasso(recipe: &InstanceRecipe) -> Result<Instance> {
    if recipe.kind != ProblemKind::FusedLasso {
        return Err(Error::Parameter("gen_fused_lasso needs a fused_lasso recipe".into()));
    }
    let data = sample_data(recipe)?;
    let spec = fused_spec(data.k.clone(), &data.b, recipe.mu1, recipe.mu2)?;
    Ok(Instance {
        recipe: recipe.clone(),
        spec,
        k: data.k,
        b: data.b,
        x_true: Some(data.x_true),
    })
}

pub fn generate(recipe: &InstanceRecipe) -> Result<Instance> {
    match recipe.kind {
        ProblemKind::Lasso => gen_lasso(recipe),
        ProblemKind::FusedLasso => gen_fused_lasso(recipe),
    }
}

/// The `(n-1) x n` first-difference operator.
pub fn difference_matrix(n: usize) -> Result<LinearMap> {
    LinearMap::difference(n)
}

/// Writes `K.csv`, `b.csv`, `x_true.csv` (if known) and `meta.txt` into `dir`.
pub fn write_instance(inst: &Instance, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    io::write_matrix_csv(dir.join("K.csv"), &inst.k.to_dense())?;
    io::write_vector_csv(dir.join("b.csv"), &inst.b)?;
    if let Some(x) = &inst.x_true {
        io::write_vector_csv(dir.join("x_true.csv"), x)?;
    }
    io::write_atomic(dir.join("meta.txt"), inst.recipe.to_meta().as_bytes())
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got {line:?}", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Loads an instance saved by [`write_instance`]. `K` and `b` come from the
/// files, not from regenerating the recipe.
pub fn read_instance(dir: impl AsRef<Path>) -> Result<Instance> {
    let dir = dir.as_ref();
    let meta = parse_key_values(&fs::read_to_string(dir.join("meta.txt"))?)?;
    let mut recipe = InstanceRecipe::desk_lasso(0);
    for (k, v) in &meta {
        recipe.set(k, v)?;
    }
    recipe.validate()?;
    let k = Arc::new(match recipe.design {
        Design::Identity => LinearMap::identity(recipe.n)?,
        Design::Gaussian => LinearMap::read_csv(dir.join("K.csv"))?,
    });
    if k.cols() != recipe.n {
        return Err(Error::Shape {
            context: "instance K columns",
            expected: recipe.n,
            got: k.cols(),
        });
    }
    let b = io::read_vector_csv(dir.join("b.csv"))?;
    let x_path = dir.join("x_true.csv");
    let x_true = if x_path.exists() {
        Some(io::read_vector_csv(x_path)?)
    } else {
        None
    };
    let spec = match recipe.kind {
        ProblemKind::Lasso => lasso_spec(k.clone(), &b, recipe.mu)?,
        ProblemKind::FusedLasso => fused_spec(k.clone(), &b, recipe.mu1, recipe.mu2)?,
    };
    Ok(Instance {
        recipe,
        spec,
        k,
        b,
        x_true,
    })
}

/// Stops the reference run once the fixed-point residual is this small.
const REFERENCE_TOL: f64 = 1e-15;

/// Long run with conservative stepsizes; keeps the best objective seen.
///
/// Uses Chambolle-Pock with `r = 1/sigma`, `lambda = 1/sigma^2` when `f = 0`,
/// otherwise PD3O with `r = 1/L`, `lambda = 1/(2 sigma^2)`. The result is
/// stored in `prob.reference` and returned.
pub fn reference_solve(prob: &mut ProblemSpec, budget: usize) -> Result<Reference> {
    if budget == 0 {
        return Err(Error::Parameter("reference budget must be at least 1".into()));
    }
    let sigma = prob.sigma();
    let lip = prob.lipschitz();
    let (algorithm, cfg) = if prob.f.is_zero() {
        let r = if sigma > 0.0 { 1.0 / sigma } else { 1.0 };
        let lam = if sigma > 0.0 { 1.0 / (sigma * sigma) } else { 1.0 };
        (Algorithm::ChambollePock, StepsizeConfig::classic(r, lam)?)
    } else {
        let r = if lip > 0.0 { 1.0 / lip } else { 1.0 };
        let lam = if sigma > 0.0 { 0.5 / (sigma * sigma) } else { 1.0 };
        (Algorithm::Pd3o, StepsizeConfig::classic(r, lam)?)
    };
    let mut state = SolverState::zeros(algorithm, prob.n(), prob.m());
    let mut best = Reference {
        x: state.x.clone(),
        objective: prob.objective(&state.x),
        iterations: 0,
    };
    for k in 1..=budget {
        let next = step(&state, prob, &cfg)?;
        if !next.is_finite() {
            return Err(Error::Diverged {
                iteration: k,
                reason: "reference run produced a non-finite iterate".into(),
                trace: Box::default(),
            });
        }
        let objective = prob.objective(&next.x);
        if objective < best.objective {
            best = Reference {
                x: next.x.clone(),
                objective,
                iterations: k,
            };
        }
        let residual = next.distance(&state) / (1.0 + next.norm());
        state = next;
        if residual <= REFERENCE_TOL {
            break;
        }
    }
    prob.reference = Some(best.clone());
    Ok(best)
}
