use std::f64::consts::PI;

use finitegap::curves::{HyperellipticCurve, Sheet};
use finitegap::elliptic::Lattice;
use finitegap::numerics::Jet;
use finitegap::potentials::{parse_potential_catalog, PotentialSpec, DEFAULT_CATALOG};
use finitegap::text::{format_complex, parse_complex};
use finitegap::theta::{jacobi_theta, Modulus};
use finitegap::theta_ode::{closed_system_residual, fifth_order_residual};
use finitegap::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn modulus() -> impl Strategy<Value = Modulus> {
    (-0.5f64..0.5, 0.8f64..2.5).prop_map(|(re, im)| Modulus::new(c(re, im)).unwrap())
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6f64..1e6, -1e-8f64..1e-8, Just(0.0), Just(-0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn complex_text_round_trips(re in finite(), im in finite()) {
        let z = c(re, im);
        prop_assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
    }

    #[test]
    fn theta_quasi_periodicity(tau in modulus(), x in -1.0f64..1.0, y in -0.3f64..0.3, k in 1u8..=4) {
        let z = c(x, y);
        let t = tau.tau();
        let base = jacobi_theta(k, z, &tau, 0).unwrap();
        // Shift by 1: θ₁, θ₂ flip sign.
        let sign = if k <= 2 { -1.0 } else { 1.0 };
        let shifted = jacobi_theta(k, z + 1.0, &tau, 0).unwrap();
        prop_assert!((shifted - sign * base).norm() <= 1e-11 * base.norm().max(1.0));
        // Shift by τ: multiplier ±exp(−iπτ − 2πiz).
        let sign = if k == 1 || k == 4 { -1.0 } else { 1.0 };
        let mult = (C64::i() * (-PI) * (t + 2.0 * z)).exp();
        let shifted = jacobi_theta(k, z + t, &tau, 0).unwrap();
        let want = sign * mult * base;
        prop_assert!((shifted - want).norm() <= 1e-10 * want.norm().max(1.0));
    }

    #[test]
    fn weierstrass_differential_equation(tau in modulus(), a in 0.15f64..0.85, b in 0.15f64..0.85) {
        let lat = Lattice::from_tau(&tau);
        let inv = lat.invariants().unwrap();
        let z = c(a, 0.0) + b * tau.tau();
        let jet = lat.wp_jet(z, 1).unwrap();
        let (p, dp) = (jet.deriv(0), jet.deriv(1));
        let terms = [dp * dp, -4.0 * p * p * p, inv.g2 * p, C64::from(inv.g3)];
        let scale = terms.iter().map(|t| t.norm()).fold(1.0, f64::max);
        prop_assert!((terms.iter().sum::<C64>()).norm() / scale < 1e-10);
    }

    #[test]
    fn sheets_are_exchanged_by_the_involution(
        g in 0usize..4,
        seed in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 7),
        lre in -4.0f64..4.0,
        lim in -4.0f64..4.0,
    ) {
        let curve = HyperellipticCurve::monic(seed[..2 * g + 1].iter().map(|&(r, i)| c(r, i)).collect()).unwrap();
        let lambda = c(lre, lim);
        let plus = curve.mu(lambda, Sheet::Plus);
        let minus = curve.mu(lambda, Sheet::Minus);
        prop_assert!((plus.mu + minus.mu).norm() <= 1e-12 * plus.mu.norm().max(1.0));
        prop_assert!((plus.mu * plus.mu - curve.eval(lambda)).norm() <= 1e-10 * curve.eval(lambda).norm().max(1.0));
        prop_assert_eq!(Sheet::Plus.flip(), Sheet::Minus);
    }

    #[test]
    fn jet_exp_inverts_ln(re in 0.2f64..3.0, im in -1.0f64..1.0, d1 in -2.0f64..2.0, d2 in -2.0f64..2.0) {
        let f = Jet::from_coeffs(vec![c(re, im), c(d1, 0.3), c(0.1, d2), c(-0.4, 0.2)]);
        let back = f.ln().exp();
        for k in 0..=3 {
            prop_assert!((back.coeffs()[k] - f.coeffs()[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_theta_system_holds(tau in modulus(), x in 0.05f64..0.95, y in -0.2f64..0.2, eps in 0i64..2, delta in 0i64..2) {
        for r in closed_system_residual(c(x, y), &tau, eps, delta).unwrap() {
            prop_assert!(r.relative() < 1e-9, "{:?}", r);
        }
    }

    #[test]
    fn fifth_order_equation_holds(tau in modulus(), x in 0.05f64..0.95, which in 1u8..=4) {
        let r = fifth_order_residual(c(x, 0.13), &tau, which).unwrap();
        prop_assert!(r.relative() < 1e-8, "{:?}", r);
    }
}

#[test]
fn catalog_records_round_trip() {
    let specs = parse_potential_catalog(DEFAULT_CATALOG).unwrap();
    assert_eq!(specs.len(), 7);
    for spec in specs {
        let again: PotentialSpec = spec.to_string().parse().unwrap();
        match (&spec, &again) {
            // The root r is re-solved from the printed value and may move by an ulp.
            (PotentialSpec::PencilV(p), PotentialSpec::PencilV(q)) => {
                assert_eq!((p.a, p.b, p.c, p.tau, p.rho, p.d, p.x_ref), (q.a, q.b, q.c, q.tau, q.rho, q.d, q.x_ref));
                let x = c(2.8, 0.05);
                assert!((p.r_at(x).unwrap() - q.r_at(x).unwrap()).norm() < 1e-13);
            }
            _ => assert_eq!(again, spec),
        }
    }
}

#[test]
fn curve_records_round_trip() {
    let curve = HyperellipticCurve::new(vec![c(-1.0, 0.5), c(0.0, 0.0), c(2.0, -0.25)], c(4.0, 0.0)).unwrap();
    assert_eq!(HyperellipticCurve::from_record(&curve.to_record()).unwrap(), curve);
}
