//! Each kernel against a literal transcription using a materialized matrix and
//! the Moreau route for the conjugate prox.

mod common;

use common::*;
use ndarray::{Array1, Array2};
use pdrelax_core::functions::moreau_conjugate_prox;
use pdrelax_core::solvers::{afba_step, base_step, cp_step, papc_step, pd3o_step};
use pdrelax_core::{ProblemSpec, SolverState, StepsizeConfig};

fn dual_prox(p: &ProblemSpec, tau: f64, v: &Array1<f64>) -> Array1<f64> {
    moreau_conjugate_prox(p.h.as_ref(), tau, v).unwrap()
}

fn literal_base(p: &ProblemSpec, a: &Array2<f64>, c: &StepsizeConfig, st: &SolverState) -> SolverState {
    let (r, lam) = (c.r, c.lambda);
    let m = a.nrows();
    let aat = a.dot(&a.t());
    let zeta = &st.aux;
    let v = a.dot(zeta) * (lam / r) + (Array2::eye(m) - aat * lam).dot(&st.s);
    let s = dual_prox(p, lam / r, &v);
    let x = zeta - &(a.t().dot(&s) * r);
    let arg = &x - &(a.t().dot(&s) * r) - p.f.gradient(&x) * r;
    let z = p.g.prox(r, &arg).unwrap() - &x + zeta;
    SolverState::base(s, x, z)
}

fn literal_afba(p: &ProblemSpec, a: &Array2<f64>, c: &StepsizeConfig, st: &SolverState) -> SolverState {
    let (r, lam) = (c.r, c.lambda);
    let xb = &st.aux;
    let s = dual_prox(p, lam / r, &(&st.s + &(a.dot(xb) * (lam / r))));
    let x = xb - &(a.t().dot(&(&s - &st.s)) * r);
    let arg = &x - &(a.t().dot(&s) * r) - p.f.gradient(&x) * r;
    let xb_new = p.g.prox(r, &arg).unwrap();
    SolverState::afba(s, x, xb_new)
}

fn literal_pd3o(p: &ProblemSpec, a: &Array2<f64>, c: &StepsizeConfig, st: &SolverState) -> SolverState {
    let (r, lam) = (c.r, c.lambda);
    let n = a.ncols();
    let ata = a.t().dot(a);
    let z = &st.aux;
    let s = dual_prox(p, lam / r, z);
    let arg = (Array2::eye(n) - ata * lam).dot(&st.x)
        - p.f.gradient(&st.x) * r
        - a.t().dot(&(&s * 2.0 - z)) * r;
    let x = p.g.prox(r, &arg).unwrap();
    let z_new = &s + &(a.dot(&x) * (lam / r));
    SolverState::pd3o(s, x, z_new)
}

fn literal_cp(p: &ProblemSpec, a: &Array2<f64>, c: &StepsizeConfig, st: &SolverState) -> SolverState {
    let (r, lam) = (c.r, c.lambda);
    let s = dual_prox(p, lam / r, &(&st.s + &(a.dot(&st.x) * (lam / r))));
    let x = p.g.prox(r, &(&st.x - &(a.t().dot(&(&s * 2.0 - &st.s)) * r))).unwrap();
    SolverState::chambolle_pock(s, x)
}

fn literal_papc(p: &ProblemSpec, a: &Array2<f64>, c: &StepsizeConfig, st: &SolverState) -> SolverState {
    let (r, lam) = (c.r, c.lambda);
    let m = a.nrows();
    let y = &st.x - &(p.f.gradient(&st.x) * r);
    let v = a.dot(&y) * (lam / r) + (Array2::eye(m) - a.dot(&a.t()) * lam).dot(&st.s);
    let s = dual_prox(p, lam / r, &v);
    let x = y - a.t().dot(&s) * r;
    SolverState::papc(s, x)
}

fn assert_close(a: &SolverState, b: &SolverState, tol: f64) {
    assert_eq!(a.algorithm, b.algorithm);
    for (u, v) in [(&a.s, &b.s), (&a.x, &b.x), (&a.aux, &b.aux)] {
        let e = max_rel_err(u, v);
        assert!(e <= tol, "relative error {e:e} > {tol:e}");
    }
}

fn random_state(seed: u64, p: &ProblemSpec, alg: pdrelax_core::Algorithm) -> SolverState {
    let mut rng = rng(seed);
    let (n, m) = (p.n(), p.m());
    SolverState::new(
        alg,
        gaussian_vec(&mut rng, m),
        gaussian_vec(&mut rng, n),
        gaussian_vec(&mut rng, alg.aux_len(n, m)),
    )
}

const KINDS: [(SmoothKind, ProxKind, ProxKind); 4] = [
    (SmoothKind::Quadratic, ProxKind::L1, ProxKind::HalfSquared),
    (SmoothKind::Quadratic, ProxKind::Box, ProxKind::L1),
    (SmoothKind::Zero, ProxKind::L1, ProxKind::Box),
    (SmoothKind::Quadratic, ProxKind::Zero, ProxKind::HalfSquared),
];

#[test]
fn kernels_match_literal_transcriptions() {
    use pdrelax_core::Algorithm::*;
    for seed in 0..10u64 {
        for (i, &(f, g, h)) in KINDS.iter().enumerate() {
            let rp = random_problem(seed * 31 + i as u64, f, g, h);
            let p = &rp.spec;
            let c = random_valid_stepsizes(seed, p.lipschitz(), p.sigma());
            let st = random_state(seed, p, Base);
            assert_close(&base_step(&st, p, &c).unwrap(), &literal_base(p, &rp.a, &c, &st), 1e-12);
            let st = random_state(seed, p, Afba);
            assert_close(&afba_step(&st, p, &c).unwrap(), &literal_afba(p, &rp.a, &c, &st), 1e-12);
            let st = random_state(seed, p, Pd3o);
            assert_close(&pd3o_step(&st, p, &c).unwrap(), &literal_pd3o(p, &rp.a, &c, &st), 1e-12);
            if f == SmoothKind::Zero {
                let st = random_state(seed, p, ChambollePock);
                assert_close(&cp_step(&st, p, &c).unwrap(), &literal_cp(p, &rp.a, &c, &st), 1e-12);
            }
            if g == ProxKind::Zero {
                let st = random_state(seed, p, Papc);
                assert_close(&papc_step(&st, p, &c).unwrap(), &literal_papc(p, &rp.a, &c, &st), 1e-12);
            }
        }
    }
}

#[test]
fn kernels_reject_wrong_preconditions() {
    use pdrelax_core::Algorithm::*;
    use pdrelax_core::Error;
    let rp = random_problem(1, SmoothKind::Quadratic, ProxKind::L1, ProxKind::L1);
    let p = &rp.spec;
    let c = StepsizeConfig::classic(0.1, 0.1).unwrap();
    let cp = SolverState::zeros(ChambollePock, p.n(), p.m());
    assert!(matches!(cp_step(&cp, p, &c), Err(Error::Usage(_))));
    let papc = SolverState::zeros(Papc, p.n(), p.m());
    assert!(matches!(papc_step(&papc, p, &c), Err(Error::Usage(_))));
    // wrong tag
    let base = SolverState::zeros(Base, p.n(), p.m());
    assert!(matches!(afba_step(&base, p, &c), Err(Error::Usage(_))));
    // wrong dimension
    let bad = SolverState::zeros(Base, p.n() + 1, p.m());
    assert!(matches!(base_step(&bad, p, &c), Err(Error::Shape { .. })));
}
