mod common;

use std::sync::Arc;

use common::*;
use ndarray::{array, Array1};
use pdrelax_core::functions::{QuadraticLoss, ZeroFunction, ZeroSmooth};
use pdrelax_core::solvers::{base_step, step};
use pdrelax_core::{map_states, Algorithm, Error, LinearMap, ProblemSpec, SolverState, StepsizeConfig};
use proptest::prelude::*;

fn random_base_state(seed: u64, p: &ProblemSpec) -> SolverState {
    let mut rng = rng(seed ^ 0x55);
    SolverState::base(
        gaussian_vec(&mut rng, p.m()),
        gaussian_vec(&mut rng, p.n()),
        gaussian_vec(&mut rng, p.n()),
    )
}

fn state_err(a: &SolverState, b: &SolverState) -> f64 {
    assert_eq!(a.algorithm, b.algorithm);
    [(&a.s, &b.s), (&a.x, &b.x), (&a.aux, &b.aux)]
        .iter()
        .map(|(u, v)| max_rel_err(u, v))
        .fold(0.0, f64::max)
}

/// Runs base and `other` side by side for `iters` steps from a random base
/// start and returns the worst relative disagreement after mapping base
/// iterates into `other`'s variables.
fn track(p: &ProblemSpec, c: &StepsizeConfig, other: Algorithm, iters: usize, seed: u64) -> f64 {
    let a = p.a.as_ref();
    let mut base = random_base_state(seed, p);
    let mut alt = map_states(other, &base, None, c, a).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..iters {
        base = base_step(&base, p, c).unwrap();
        alt = step(&alt, p, c).unwrap();
        let mut expected = map_states(other, &base, None, c, a).unwrap();
        if other == Algorithm::Afba {
            // x1 and x agree exactly; x is not determined by the forward map alone
            expected.x = base.x.clone();
        }
        worst = worst.max(state_err(&expected, &alt));
    }
    worst
}

#[test]
fn gradient_descent_through_zeta() {
    // A = 0, h = 0, g = 0, f = |x|^2/2, r = 1, zeta0 = 2
    let f = QuadraticLoss::new(Arc::new(LinearMap::identity(1).unwrap()), array![0.0]).unwrap();
    let p = ProblemSpec::new(
        Arc::new(f),
        Arc::new(ZeroFunction),
        Arc::new(ZeroFunction),
        Arc::new(LinearMap::zeros(1, 1).unwrap()),
    )
    .unwrap();
    let c = StepsizeConfig::classic(1.0, 1.0).unwrap();
    let st = SolverState::base(array![0.0], array![0.0], array![2.0]);
    let next = base_step(&st, &p, &c).unwrap();
    assert_eq!(next.x, array![2.0]);
    assert_eq!(next.aux, array![0.0]);
}

#[test]
fn afba_stationary_without_data() {
    let p = ProblemSpec::new(
        Arc::new(ZeroSmooth { n: 3 }),
        Arc::new(ZeroFunction),
        Arc::new(ZeroFunction),
        Arc::new(LinearMap::zeros(2, 3).unwrap()),
    )
    .unwrap();
    let c = StepsizeConfig::classic(0.7, 0.3).unwrap();
    let st = SolverState::afba(array![0.0, 0.0], array![5.0, 5.0, 5.0], array![1.0, -2.0, 3.0]);
    let next = step(&st, &p, &c).unwrap();
    assert_eq!(next.x, st.aux);
    assert_eq!(next.aux, st.aux);
}

#[test]
fn pd3o_and_papc_reduce_to_gradient_descent() {
    let mut rng = rng(3);
    let k = Arc::new(LinearMap::dense(gaussian_mat(&mut rng, 4, 3)).unwrap());
    let f = Arc::new(QuadraticLoss::new(k, gaussian_vec(&mut rng, 4)).unwrap());
    let p = ProblemSpec::new(
        f.clone(),
        Arc::new(ZeroFunction),
        Arc::new(ZeroFunction),
        Arc::new(LinearMap::dense(gaussian_mat(&mut rng, 2, 3)).unwrap()),
    )
    .unwrap();
    let c = StepsizeConfig::classic(0.05, 0.1).unwrap();
    let x = gaussian_vec(&mut rng, 3);
    let gd = &x - &(pdrelax_core::SmoothFunction::gradient(f.as_ref(), &x) * c.r);

    let pd3o = SolverState::pd3o(Array1::zeros(2), x.clone(), p.a.apply(&x).unwrap() * (c.lambda / c.r));
    let next = step(&pd3o, &p, &c).unwrap();
    assert!(max_rel_err(&next.x, &gd) < 1e-14);

    let papc = SolverState::papc(Array1::zeros(2), x);
    let next = step(&papc, &p, &c).unwrap();
    assert!(max_rel_err(&next.x, &gd) < 1e-14);
}

#[test]
fn cp_decouples_when_a_is_zero() {
    use pdrelax_core::functions::{conjugate_prox, HalfSquaredDistance, L1Norm, ProxFunction};
    let g = L1Norm::new(0.5).unwrap();
    let h = HalfSquaredDistance::new(array![1.0, -1.0]);
    let p = ProblemSpec::new(
        Arc::new(ZeroSmooth { n: 3 }),
        Arc::new(g),
        Arc::new(h.clone()),
        Arc::new(LinearMap::zeros(2, 3).unwrap()),
    )
    .unwrap();
    let c = StepsizeConfig::classic(2.0, 1.0).unwrap();
    let st = SolverState::chambolle_pock(array![0.3, 0.4], array![3.0, -0.2, 1.5]);
    let next = step(&st, &p, &c).unwrap();
    assert_eq!(next.s, conjugate_prox(&h, 0.5, &st.s).unwrap());
    assert_eq!(next.x, g.prox(2.0, &st.x).unwrap());
}

#[test]
fn map_examples() {
    let p = random_problem(2, SmoothKind::Quadratic, ProxKind::L1, ProxKind::L1).spec;
    let c = StepsizeConfig::classic(0.3, 0.2).unwrap();
    let st = random_base_state(9, &p);

    let zero = LinearMap::zeros(p.m(), p.n()).unwrap();
    let afba = map_states(Algorithm::Afba, &st, None, &c, &zero).unwrap();
    assert_eq!((&afba.s, &afba.x, &afba.aux), (&st.s, &st.x, &st.aux));

    let cp = map_states(Algorithm::ChambollePock, &st, None, &c, &p.a).unwrap();
    let expected = &st.aux - &(p.a.apply_adjoint(&st.s).unwrap() * c.r);
    assert_eq!(cp.x, expected);
    assert_eq!(cp.s, st.s);

    let back = map_states(Algorithm::Base, &afba, None, &c, &zero).unwrap();
    assert_eq!(back, st);
    let afba = map_states(Algorithm::Afba, &st, None, &c, &p.a).unwrap();
    let back = map_states(Algorithm::Base, &afba, None, &c, &p.a).unwrap();
    assert!(state_err(&back, &st) < 1e-14);
}

#[test]
fn reverse_maps_need_previous_iterate() {
    let p = random_problem(4, SmoothKind::Zero, ProxKind::L1, ProxKind::HalfSquared).spec;
    let c = StepsizeConfig::classic(0.3, 0.2).unwrap();
    let st = SolverState::zeros(Algorithm::Pd3o, p.n(), p.m());
    for to in [Algorithm::Base, Algorithm::Afba] {
        assert!(matches!(map_states(to, &st, None, &c, &p.a), Err(Error::Usage(_))));
    }
    let cp = SolverState::zeros(Algorithm::ChambollePock, p.n(), p.m());
    assert!(matches!(map_states(Algorithm::Base, &cp, None, &c, &p.a), Err(Error::Usage(_))));
    let wrong_prev = SolverState::zeros(Algorithm::Base, p.n(), p.m());
    assert!(matches!(
        map_states(Algorithm::Base, &cp, Some(&wrong_prev), &c, &p.a),
        Err(Error::Usage(_))
    ));
    let papc = SolverState::zeros(Algorithm::Papc, p.n(), p.m());
    assert!(matches!(map_states(Algorithm::Base, &papc, None, &c, &p.a), Err(Error::Usage(_))));
}

#[test]
fn reverse_maps_recover_base_sequence() {
    let p = random_problem(6, SmoothKind::Zero, ProxKind::L1, ProxKind::HalfSquared).spec;
    let c = random_valid_stepsizes(6, p.lipschitz(), p.sigma());
    let mut base = random_base_state(6, &p);
    base = base_step(&base, &p, &c).unwrap();
    for to in [Algorithm::Pd3o, Algorithm::ChambollePock] {
        let mut b = base.clone();
        let mut prev = map_states(to, &b, None, &c, &p.a).unwrap();
        for _ in 0..5 {
            b = base_step(&b, &p, &c).unwrap();
            let cur = step(&prev, &p, &c).unwrap();
            let back = map_states(Algorithm::Base, &cur, Some(&prev), &c, &p.a).unwrap();
            assert!(state_err(&back, &b) < 1e-12, "{to}");
            if to == Algorithm::Pd3o {
                let afba = map_states(Algorithm::Afba, &cur, Some(&prev), &c, &p.a).unwrap();
                let expected = map_states(Algorithm::Afba, &b, None, &c, &p.a).unwrap();
                assert!(state_err(&afba, &expected) < 1e-12);
            }
            prev = cur;
        }
    }
}

#[test]
fn pd3o_leaves_base_sequence_when_gradient_is_nonconstant() {
    // The gradient in the PD3O kernel is taken at x2^k, while the base
    // iteration evaluates it at x^{k+1} = x2^k - r A^T (s^{k+1} - s^k).
    let p = random_problem(8, SmoothKind::Quadratic, ProxKind::L1, ProxKind::HalfSquared).spec;
    let c = random_valid_stepsizes(8, p.lipschitz(), p.sigma());
    assert!(track(&p, &c, Algorithm::Pd3o, 5, 8) > 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn base_and_afba_agree(seed in 0u64..10_000) {
        let p = random_problem(seed, SmoothKind::Quadratic, ProxKind::L1, ProxKind::HalfSquared).spec;
        let c = random_valid_stepsizes(seed, p.lipschitz(), p.sigma());
        prop_assert!(track(&p, &c, Algorithm::Afba, 200, seed) < 1e-10);
    }

    #[test]
    fn base_pd3o_cp_agree_without_smooth_term(seed in 0u64..10_000) {
        let p = random_problem(seed, SmoothKind::Zero, ProxKind::Box, ProxKind::L1).spec;
        let c = random_valid_stepsizes(seed, p.lipschitz(), p.sigma());
        prop_assert!(track(&p, &c, Algorithm::Pd3o, 200, seed) < 1e-10);
        prop_assert!(track(&p, &c, Algorithm::ChambollePock, 200, seed) < 1e-10);
    }

    #[test]
    fn base_reproduces_papc(seed in 0u64..10_000) {
        let p = random_problem(seed, SmoothKind::Quadratic, ProxKind::Zero, ProxKind::L1).spec;
        let c = random_valid_stepsizes(seed, p.lipschitz(), p.sigma());
        let mut rng = rng(seed);
        let s0 = gaussian_vec(&mut rng, p.m());
        let x0 = gaussian_vec(&mut rng, p.n());
        let mut base = SolverState::base_emulating_papc(&p, &c, s0.clone(), x0.clone()).unwrap();
        let mut papc = SolverState::papc(s0, x0);
        for _ in 0..200 {
            base = base_step(&base, &p, &c).unwrap();
            papc = step(&papc, &p, &c).unwrap();
            prop_assert!(max_rel_err(&base.s, &papc.s) < 1e-10);
            prop_assert!(max_rel_err(&base.x, &papc.x) < 1e-10);
        }
    }
}
