#![allow(dead_code)]

use std::sync::Arc;

use ndarray::{Array1, Array2};
use pdrelax_core::functions::{
    BoxIndicator, HalfSquaredDistance, L1Norm, ProxFunction, QuadraticLoss, SmoothFunction,
    ZeroFunction, ZeroSmooth,
};
use pdrelax_core::{LinearMap, ProblemSpec, StepsizeConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Array1<f64> {
    Array1::from_shape_fn(len, |_| StandardNormal.sample(rng))
}

pub fn gaussian_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothKind {
    Zero,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxKind {
    Zero,
    L1,
    Box,
    HalfSquared,
}

pub struct RandomProblem {
    pub spec: ProblemSpec,
    pub a: Array2<f64>,
}

pub fn prox_of(kind: ProxKind, rng: &mut ChaCha8Rng, dim: usize) -> Arc<dyn ProxFunction> {
    match kind {
        ProxKind::Zero => Arc::new(ZeroFunction),
        ProxKind::L1 => Arc::new(L1Norm::new(rng.random_range(0.1..2.0)).unwrap()),
        ProxKind::Box => Arc::new(BoxIndicator::new(rng.random_range(0.2..2.0)).unwrap()),
        ProxKind::HalfSquared => Arc::new(HalfSquaredDistance::new(gaussian_vec(rng, dim))),
    }
}

/// Dense random problem with `n <= 20`, `m <= 15`.
pub fn random_problem(seed: u64, f: SmoothKind, g: ProxKind, h: ProxKind) -> RandomProblem {
    let mut rng = rng(seed);
    let n = rng.random_range(2..=20);
    let m = rng.random_range(2..=15);
    let a = gaussian_mat(&mut rng, m, n);
    let op = Arc::new(LinearMap::dense(a.clone()).unwrap());
    let f: Arc<dyn SmoothFunction> = match f {
        SmoothKind::Zero => Arc::new(ZeroSmooth { n }),
        SmoothKind::Quadratic => {
            let p = rng.random_range(2..=12);
            let k = Arc::new(LinearMap::dense(gaussian_mat(&mut rng, p, n)).unwrap());
            Arc::new(QuadraticLoss::new(k, gaussian_vec(&mut rng, p)).unwrap())
        }
    };
    let g = prox_of(g, &mut rng, n);
    let h = prox_of(h, &mut rng, m);
    RandomProblem {
        spec: ProblemSpec::new(f, g, h, op).unwrap(),
        a,
    }
}

/// A `(r, lambda, theta)` that satisfies the relaxed condition.
pub fn random_valid_stepsizes(seed: u64, lipschitz: f64, sigma: f64) -> StepsizeConfig {
    let mut rng = rng(seed ^ 0xabcdef);
    let theta: f64 = rng.random_range(0.76..=1.0);
    let lambda = rng.random_range(0.3..=1.0) / (theta * sigma * sigma);
    let gamma = (4.0 * theta - 3.0) / (2.0 * theta - 1.0);
    let r = if lipschitz > 0.0 {
        rng.random_range(0.2..0.99) * gamma * 2.0 / lipschitz
    } else {
        rng.random_range(0.1..5.0)
    };
    StepsizeConfig::new(r, lambda, theta).unwrap()
}

pub fn max_rel_err(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let scale = 1.0 + a.iter().chain(b).fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}
