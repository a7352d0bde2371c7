//! Library outputs against oracles computed independently in this file.

mod common;

use std::collections::BTreeMap;

use common::{eval_gauss, gauss_derivs, laplacian_gauss, oracle_reasons, rat};
use proptest::prelude::*;

use polylane::capacity::{
    capacity_integral, capacity_integral_panels, coeff_recursion, cutoff_derivatives_with, default_gamma,
    holder_chain_check, nonexistence_exponents, sphere_area, CutoffPath, CutoffSpec,
};
use polylane::classify::{serrin_condition, verdict, RationalTuple, Verdict};
use polylane::radial::{inverse_laplacian_ivp, kernel_eval};
use polylane::{ProblemParams, RadialFunction, RadialGrid};

#[test]
fn coefficient_tables_match_iterated_differentiation() {
    for n in [3u32, 5, 7, 10] {
        for s in 1..=3 {
            let table = coeff_recursion(s, n).unwrap();
            let r = 1.3;
            let mut poly = BTreeMap::from([(0, 1.0)]);
            for _ in 0..s {
                poly = laplacian_gauss(&poly, n, r);
            }
            for i in 0..50 {
                let rho = 0.2 + 2.4 * i as f64 / 49.0;
                let want = eval_gauss(&poly, rho, r);
                let got = table.apply(&gauss_derivs(2 * s, rho / r), rho, r);
                let scale = want.abs().max(1e-3);
                assert!((got - want).abs() / scale < 1e-10, "n={n} s={s} rho={rho}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn top_coefficient_is_one_and_first_is_n_minus_one() {
    for n in 3..12u32 {
        let t = coeff_recursion(1, n).unwrap();
        assert_eq!(t.as_f64(), vec![f64::from(n - 1), 1.0]);
        for s in 2..=4 {
            assert_eq!(coeff_recursion(s, n).unwrap().as_f64()[2 * s - 1], 1.0);
        }
    }
}

proptest! {
    #[test]
    fn cutoff_paths_agree(x in 1.02f64..1.98, gamma in 8.5f64..20.0) {
        let spec = CutoffSpec::new(gamma).unwrap();
        let a = cutoff_derivatives_with(&spec, 8, x, CutoffPath::Direct).unwrap();
        let b = cutoff_derivatives_with(&spec, 8, x, CutoffPath::Compositions).unwrap();
        let scale = a.iter().chain(&b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-9 * scale + 1e-250, "{u} vs {v}");
        }
    }

    #[test]
    fn kernel_is_nonnegative_and_bounded(r in 0.01f64..5.0, frac in 0.0f64..1.0, n in 3u32..12) {
        let s = r * frac;
        let k = kernel_eval(r, s, n).unwrap();
        prop_assert!(k >= 0.0);
        prop_assert!(k <= s / f64::from(n - 2) + 1e-15);
    }

    #[test]
    fn capacity_scales_exactly(radius in 1.0f64..200.0) {
        let spec = CutoffSpec::new(6.0).unwrap();
        let base = capacity_integral(&spec, 2, 2.0, 1.0, 5).unwrap();
        let got = capacity_integral(&spec, 2, 2.0, radius, 5).unwrap();
        let want = radius.powf(5.0 - 4.0) * base;
        prop_assert!((got - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn cutoff_first_derivative_matches_difference_quotient() {
    let spec = CutoffSpec::new(7.0).unwrap();
    for i in 1..20 {
        let x = 1.0 + i as f64 / 20.0;
        let h = 1e-6;
        let d = cutoff_derivatives_with(&spec, 2, x, CutoffPath::Direct).unwrap();
        let hp = cutoff_derivatives_with(&spec, 0, x + h, CutoffPath::Direct).unwrap()[0];
        let hm = cutoff_derivatives_with(&spec, 0, x - h, CutoffPath::Direct).unwrap()[0];
        assert!(((hp - hm) / (2.0 * h) - d[1]).abs() < 1e-6);
        assert!(((hp - 2.0 * d[0] + hm) / (h * h) - d[2]).abs() < 1e-2 * d[2].abs().max(1.0));
    }
}

#[test]
fn capacity_agrees_across_panel_counts() {
    let spec = CutoffSpec::new(9.0).unwrap();
    for (order, r, n) in [(2, 2.0, 5), (4, 2.0, 7), (2, 1.5, 6)] {
        let a = capacity_integral_panels(&spec, order, r, 3.0, n, 64).unwrap();
        let b = capacity_integral_panels(&spec, order, r, 3.0, n, 512).unwrap();
        assert!((a - b).abs() < 1e-9 * b, "{a} vs {b}");
    }
}

#[test]
fn capacity_rejects_small_gamma() {
    let spec = CutoffSpec::new(4.0).unwrap();
    assert!(capacity_integral(&spec, 2, 2.0, 1.0, 5).is_err());
    assert!(capacity_integral(&spec, 3, 1.0, 1.0, 5).is_err());
}

#[test]
fn sphere_area_recursion() {
    // ω_{N+1} = 2π ω_{N-1} / N
    for n in 2..14u32 {
        let lhs = sphere_area(n + 2);
        let rhs = 2.0 * std::f64::consts::PI * sphere_area(n) / f64::from(n);
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }
}

#[test]
fn inverse_laplacian_of_constant() {
    for n in 3..=10u32 {
        let g = RadialGrid::uniform(257, 1.0).unwrap();
        let f = RadialFunction::from_fn(g.clone(), |_| 1.0);
        let u = inverse_laplacian_ivp(&f, 0.0, n).unwrap();
        for (r, v) in g.nodes().iter().zip(&u.values) {
            assert!((v + r * r / (2.0 * f64::from(n))).abs() < 1e-10);
        }
    }
}

#[test]
fn inverse_laplacian_of_polynomial() {
    // -Δ(1 - r^4) = 4(N+2) r^2
    let n = 6u32;
    let g = RadialGrid::uniform(513, 1.0).unwrap();
    let f = RadialFunction::from_fn(g.clone(), |r| 4.0 * f64::from(n + 2) * r * r);
    let u = inverse_laplacian_ivp(&f, 1.0, n).unwrap();
    for (r, v) in g.nodes().iter().zip(&u.values) {
        assert!((v - (1.0 - r.powi(4))).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn classifier_matches_integer_oracle(
        n in 1i64..16, al in 1i64..4, be in 1i64..4,
        a in 1i64..40, b in 1i64..12, c in 1i64..40, d in 1i64..12,
    ) {
        let t = RationalTuple::new(n as u32, al as u32, be as u32, rat(a, b), rat(c, d));
        let v = verdict(&t);
        match (oracle_reasons(n, al, be, a, b, c, d), &v.verdict) {
            (Some(want), Verdict::ExistenceInBall { reasons }) => prop_assert_eq!(&want, reasons),
            (None, Verdict::ExistenceInBall { .. }) => prop_assert!(false, "unexpected existence {:?}", v),
            (Some(_), other) => prop_assert!(false, "missed existence, got {:?}", other),
            (None, _) => {}
        }
    }

    #[test]
    fn serrin_form_is_condition_i(n in 3u32..16, a in 1i64..40, b in 1i64..12, c in 1i64..40, d in 1i64..12) {
        let (p, q) = (rat(a, b), rat(c, d));
        let t = RationalTuple::new(n, 1, 1, p.clone(), q.clone());
        let v = verdict(&t);
        prop_assert_eq!(serrin_condition(&p, &q, n), v.condition_i_first || v.condition_i_second);
    }

    #[test]
    fn scaling_exponent_identities(al in 1u32..5, be in 1u32..5, a in 1i64..40, b in 1i64..12, c in 1i64..40, d in 1i64..12) {
        let (p, q) = (rat(a, b), rat(c, d));
        let t = RationalTuple::new(20, al, be, p.clone(), q.clone());
        let e = polylane::classify::exponents(&t);
        let pq1 = &p * &q - rat(1, 1);
        if pq1 > rat(0, 1) {
            let two = rat(2, 1);
            let (al_r, be_r) = (rat(al.into(), 1), rat(be.into(), 1));
            prop_assert_eq!(e.tau.unwrap().0 * &pq1, &two * &be_r * &q + &two * &al_r);
            prop_assert_eq!(e.sigma.unwrap().0 * &pq1, &two * &al_r * &p + &two * &be_r);
        } else {
            prop_assert!(e.tau.is_none() && e.sigma.is_none());
        }
    }
}

#[test]
fn decay_exponents_vanish_on_the_critical_curve() {
    // 2βq + N + 2αpq − Npq = 0 at α = β = 1, N = 5, q = 3: p = 11/9
    let t = RationalTuple::new(5, 1, 1, rat(11, 9), rat(3, 1));
    let (first, _) = nonexistence_exponents(&t).unwrap();
    assert_eq!(first.to_string(), "0");
    assert!(verdict(&t).condition_i_first);
}

fn supersolution_pair(eps: f64, scale_v: f64, radius: f64) -> (RadialFunction, RadialFunction) {
    let g = RadialGrid::uniform(4097, 2.0 * radius).unwrap();
    let u = RadialFunction::from_fn(g.clone(), |r| eps * (1.0 + r * r).powf(-1.5));
    let v = RadialFunction::from_fn(g, |r| scale_v * eps * (1.0 + r * r).powf(-1.5));
    (u, v)
}

#[test]
fn holder_chain_holds_for_a_supersolution() {
    let params = ProblemParams::new(5, 1, 1, 3.0, 3.0).unwrap();
    let spec = CutoffSpec::new(default_gamma(&params).unwrap()).unwrap();
    for radius in [1.0, 3.0, 10.0] {
        let (u, v) = supersolution_pair(0.5, 1.0, radius);
        let rep = holder_chain_check(&u, &v, &params, radius, &spec).unwrap();
        assert!(rep.all_hold(), "R={radius}: {rep:?}");
    }
}

#[test]
fn holder_chain_flags_a_non_supersolution() {
    let params = ProblemParams::new(5, 1, 1, 3.0, 3.0).unwrap();
    let spec = CutoffSpec::new(default_gamma(&params).unwrap()).unwrap();
    let (u, v) = supersolution_pair(0.5, 40.0, 3.0);
    let rep = holder_chain_check(&u, &v, &params, 3.0, &spec).unwrap();
    assert!(!rep.all_hold(), "{rep:?}");
}

#[test]
fn holder_chain_needs_the_whole_support() {
    let params = ProblemParams::new(5, 1, 1, 3.0, 3.0).unwrap();
    let spec = CutoffSpec::new(4.0).unwrap();
    let (u, v) = supersolution_pair(0.5, 1.0, 1.0);
    assert!(holder_chain_check(&u, &v, &params, 5.0, &spec).is_err());
}
