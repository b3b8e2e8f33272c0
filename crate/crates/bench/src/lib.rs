//! Shared fixtures for the benchmarks in `benches/`.

use pdrelax_core::{generate, Algorithm, Instance, InstanceRecipe, Result, SolverState, StepsizeConfig};

/// Desk-scale fused LASSO at size `n` with default stepsizes.
pub fn fused_fixture(n: usize) -> Result<(Instance, StepsizeConfig)> {
    let recipe = InstanceRecipe { n, m_data: n / 2, ..InstanceRecipe::desk_fused(0) };
    let inst = generate(&recipe)?;
    let cfg = StepsizeConfig::new(1.0 / inst.spec.lipschitz(), 1.0 / inst.spec.sigma().powi(2), 1.0)?;
    Ok((inst, cfg))
}

pub fn start(alg: Algorithm, inst: &Instance) -> SolverState {
    SolverState::zeros(alg, inst.spec.n(), inst.spec.m())
}
