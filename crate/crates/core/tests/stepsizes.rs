use pdrelax_core::stepsizes::{auto_theta, max_lambda};
use pdrelax_core::{check_classic, check_relaxed, gamma, ClassicRule, StepsizeConfig};
use proptest::prelude::*;

fn relaxed_by_hand(r: f64, lambda: f64, theta: f64, l: f64, sigma: f64) -> bool {
    let g = (4.0 * theta - 3.0) / (2.0 * theta - 1.0);
    (l == 0.0 || r * l / 2.0 < g) && theta * lambda * sigma * sigma <= 1.0 + 1e-12
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn relaxed_check_matches_formula(
        r in 1e-3f64..5.0,
        lambda in 1e-3f64..3.0,
        theta in 0.7501f64..=1.0,
        l in prop_oneof![Just(0.0), 1e-2f64..10.0],
        sigma in 0.1f64..3.0,
    ) {
        let cfg = StepsizeConfig::new(r, lambda, theta).unwrap();
        let v = check_relaxed(&cfg, l, sigma).unwrap();
        prop_assert_eq!(v.satisfied, relaxed_by_hand(r, lambda, theta, l, sigma));
    }

    #[test]
    fn classic_rules_imply_relaxed_at_theta_one(
        r in 1e-3f64..5.0,
        lambda in 1e-3f64..3.0,
        l in 1e-2f64..10.0,
        sigma in 0.1f64..3.0,
    ) {
        let cfg = StepsizeConfig::classic(r, lambda).unwrap();
        let relaxed = check_relaxed(&cfg, l, sigma).unwrap().satisfied;
        for rule in [ClassicRule::CondatVu, ClassicRule::Pdfp, ClassicRule::Afba, ClassicRule::Pd3o, ClassicRule::Papc] {
            if check_classic(rule, &cfg, l, sigma).unwrap().satisfied {
                prop_assert!(relaxed, "{rule} accepted but relaxed rejected");
            }
        }
        // at theta = 1 the relaxed rule is exactly the PD3O rule
        prop_assert_eq!(relaxed, check_classic(ClassicRule::Pd3o, &cfg, l, sigma).unwrap().satisfied);
    }

    #[test]
    fn auto_theta_is_largest_feasible(
        ls2 in 0.05f64..1.33,
        sigma in 0.1f64..3.0,
        l in 1e-2f64..10.0,
        frac in 0.01f64..0.99,
    ) {
        let lambda = ls2 / (sigma * sigma);
        let auto = auto_theta(lambda, sigma, l).unwrap();
        let r = frac * auto.r_ceiling.unwrap();
        let cfg = StepsizeConfig::new(r, lambda, auto.theta).unwrap();
        prop_assert!(check_relaxed(&cfg, l, sigma).unwrap().satisfied);
        if auto.theta < 1.0 {
            let bigger = (auto.theta * (1.0 + 1e-9)).min(1.0);
            let cfg = StepsizeConfig::new(r, lambda, bigger).unwrap();
            prop_assert!(!check_relaxed(&cfg, l, sigma).unwrap().satisfied);
        }
        // the largest theta also gives the largest primal step
        for theta in [0.76, 0.8, 0.9] {
            if theta < auto.theta {
                prop_assert!(gamma(theta).unwrap() < gamma(auto.theta).unwrap());
            }
        }
    }

    #[test]
    fn max_lambda_is_boundary(theta in 0.7501f64..=1.0, sigma in 0.1f64..3.0) {
        let lam = max_lambda(theta, sigma).unwrap();
        let on = StepsizeConfig::new(1.0, lam, theta).unwrap();
        prop_assert!(check_relaxed(&on, 0.0, sigma).unwrap().satisfied);
        let past = StepsizeConfig::new(1.0, lam * (1.0 + 1e-9), theta).unwrap();
        prop_assert!(!check_relaxed(&past, 0.0, sigma).unwrap().satisfied);
    }
}

#[test]
fn auto_theta_rejects_four_thirds() {
    assert!(auto_theta(4.0 / 3.0, 1.0, 1.0).is_err());
    assert!(auto_theta(1.34, 1.0, 0.0).is_err());
    let a = auto_theta(1.3, 1.0, 0.0).unwrap();
    assert!((a.theta - 1.0 / 1.3).abs() < 1e-15);
    assert_eq!(a.r_ceiling, None);
}
