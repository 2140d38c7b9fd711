use num_traits::ToPrimitive;
use shrinkage::chi2::Tolerances;
use shrinkage::estimators::{EstimatorKind, ProblemSpec};
use shrinkage::risk::{
    closed_form, exact_risk, numeric_optimal_c, optimal_c, risk_general_c, risk_modified_bayes,
    Minimax,
};
use shrinkage::Rational;
use statrs::distribution::{ChiSquared, Continuous};

fn rat(a: i64, b: i64) -> Rational {
    Rational::new(a.into(), b.into())
}

fn simpson(f: impl Fn(f64) -> f64, dof: f64) -> f64 {
    let law = ChiSquared::new(dof).unwrap();
    let m = 200_000;
    let h = 1.0 / m as f64;
    let g = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let u = t / (1.0 - t);
        f(u) * law.pdf(u) / ((1.0 - t) * (1.0 - t))
    };
    let mut s = g(0.0) + g(1.0);
    for i in 1..m {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn modified_bayes_ratio_matches_independent_quadrature() {
    for &(n, rho) in &[(3u64, 0.5), (5, 1.0), (8, 4.0), (22, 0.2), (40, 10.0)] {
        let c = n as f64 * rho;
        let nf = n as f64;
        let want = 1.0 + nf * (nf + 2.0) * (1.0 + rho) * simpson(|u| (u + c).powi(-2), nf + 4.0)
            - 2.0 * nf * simpson(|u| 1.0 / (u + c), nf + 2.0);
        let spec = ProblemSpec::centered(4, n, 1.0, Some(rho)).unwrap();
        let got = risk_modified_bayes(&spec).unwrap().ratio;
        assert!(
            (got - want).abs() < 1e-8,
            "n={n} rho={rho}: {got} vs {want}"
        );
    }
}

#[test]
fn sandwich_on_a_coarse_grid() {
    let tol = Tolerances::default();
    for n in (1..=40).chain([100, 1000]) {
        for k in 0..=16 {
            let rho = 10f64.powf(-2.0 + 4.0 * k as f64 / 16.0);
            let spec = ProblemSpec::centered(3, n, 2.0, Some(2.0 * rho)).unwrap();
            let r = exact_risk(&EstimatorKind::ModifiedBayes, &spec, &tol).unwrap();
            let (lo, hi) = (r.lower_bound.unwrap(), r.upper_bound.unwrap());
            assert!(lo <= r.ratio && r.ratio <= hi, "n={n} rho={rho}");
            if n >= 5 {
                assert_eq!(r.minimax, Minimax::Proven);
            }
        }
    }
}

#[test]
fn risk_scales_with_sigma2_at_fixed_rho() {
    let a = risk_modified_bayes(&ProblemSpec::centered(6, 7, 1.0f64, Some(3.0)).unwrap()).unwrap();
    let b = risk_modified_bayes(&ProblemSpec::centered(6, 7, 2.5f64, Some(7.5)).unwrap()).unwrap();
    assert!((a.ratio - b.ratio).abs() < 1e-12);
    assert!((b.risk - 2.5 * a.risk).abs() < 1e-10);
}

#[test]
fn exact_rational_identities() {
    let r = closed_form::empirical_modified_bayes_ratio(3, 2, rat(1, 1), rat(1, 1)).unwrap();
    assert_eq!(r, rat(11, 12));
    for &(p, n) in &[(3u64, 2u64), (10, 5), (25, 30)] {
        let edge: Rational = closed_form::minimax_c_limit(p, n).unwrap();
        assert_eq!(
            closed_form::general_c_ratio(p, n, edge, rat(7, 3), rat(1, 2)).unwrap(),
            rat(1, 1)
        );
    }
    // Upper bound minus one at n = 5 stays non-positive on exact rationals near ρ = 0.
    for k in 1..50 {
        assert!(closed_form::upper_bound_curve(5, rat(k, 1000)) <= rat(0, 1));
    }
}

#[test]
fn f32_and_f64_agree() {
    let s64 = ProblemSpec::centered(8, 6, 1.0f64, Some(2.0)).unwrap();
    let s32 = ProblemSpec::centered(8, 6, 1.0f32, Some(2.0)).unwrap();
    let a = risk_modified_bayes(&s64).unwrap().ratio;
    let b = risk_modified_bayes(&s32).unwrap().ratio.to_f64().unwrap();
    assert!((a - b).abs() < 1e-5);
    let c64 = optimal_c(&s64).unwrap();
    let c32 = numeric_optimal_c(&s32).unwrap().to_f64().unwrap();
    assert!(((c64 - c32) / c64).abs() < 1e-6);
}

#[test]
fn general_c_is_quadratic_with_positive_curvature() {
    let spec = ProblemSpec::centered(9, 4, 1.5, Some(0.5)).unwrap();
    let chat = optimal_c(&spec).unwrap();
    let r = |c: f64| risk_general_c(&spec, c).unwrap().risk;
    let h = 0.1;
    let second = (r(chat + h) - 2.0 * r(chat) + r(chat - h)) / (h * h);
    // d²R/dc² = 2n(n+2)/(p−2) · σ²/(τ²+σ²) · σ²
    let want = 2.0 * 4.0 * 6.0 / 7.0 * (1.5 / 2.0) * 1.5;
    assert!(((second - want) / want).abs() < 1e-8, "{second} vs {want}");
    assert!(r(chat) < r(0.5 * chat) && r(chat) < r(1.5 * chat));
}
