use finitegap::curves::Sheet;
use finitegap::dubrovin::{dubrovin_flow, initial_state, DubrovinState};
use finitegap::potentials::{
    mu_squared_residual, parse_potential_catalog, potential_value, resolvent_residual, trace_formula, PotentialSpec,
    DEFAULT_CATALOG,
};
use finitegap::psi::{wronskian, PsiSolution, QuadratureBase};
use finitegap::theta::{jacobi_theta, Modulus};
use finitegap::theta_ode::{quadratic_gauge_residual, reconstruct_theta, ThetaReconstruction};
use finitegap::verify::{run_suite, Suite, SuiteOptions};
use finitegap::{Complex64 as C64, Error, Tolerance};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn entry(name: &str) -> PotentialSpec {
    parse_potential_catalog(DEFAULT_CATALOG).unwrap().into_iter().find(|s| s.name() == name).unwrap()
}

#[test]
fn resolvent_and_curve_identities_for_finite_gap_entries() {
    for name in ["zero-gap", "one-gap-lame", "two-gap-lame"] {
        let spec = entry(name);
        for x in [c(0.21, 0.0), c(0.63, 0.1)] {
            for lambda in [c(0.7, 0.0), c(-1.3, 2.2)] {
                assert!(resolvent_residual(&spec, x, lambda).unwrap().relative() < 1e-9, "{name}");
                assert!(mu_squared_residual(&spec, x, lambda).unwrap().relative() < 1e-9, "{name}");
            }
        }
    }
}

#[test]
fn two_gap_wronskian_is_constant() {
    let spec = entry("two-gap-lame");
    let curve = spec.curve().unwrap();
    let lambda = c(2.3, -0.7);
    let plus = PsiSolution::theta(&spec, &curve.mu(lambda, Sheet::Plus)).unwrap();
    let minus = PsiSolution::theta(&spec, &curve.mu(lambda, Sheet::Minus)).unwrap();
    let w0 = wronskian(&plus, &minus, c(0.2, 0.0)).unwrap();
    assert!(w0.norm() > 1e-6);
    for x in [0.45, 0.8, 1.3] {
        let w = wronskian(&plus, &minus, c(x, 0.0)).unwrap();
        assert!((w - w0).norm() < 1e-8 * w0.norm(), "{x}: {w} vs {w0}");
    }
}

#[test]
fn quadrature_psi_solves_the_equation() {
    for name in ["zero-gap", "one-gap-lame", "two-gap-lame"] {
        let spec = entry(name);
        let sol = PsiSolution::quadrature(&spec, c(1.1, 0.4), Sheet::Plus, QuadratureBase::new(c(0.3, 0.0))).unwrap();
        assert!((sol.sample(c(0.3, 0.0)).unwrap().psi - 1.0).norm() < 1e-12, "{name}");
        for x in [0.35, 0.6, 0.9] {
            assert!(sol.schrodinger_residual(c(x, 0.0)).unwrap().relative() < 1e-7, "{name} at {x}");
        }
    }
}

#[test]
fn dubrovin_trace_reproduces_the_potential() {
    let spec = entry("two-gap-lame");
    let curve = spec.curve().unwrap();
    let x0 = c(0.3, 0.25);
    let traj = dubrovin_flow(&curve, &initial_state(&spec, x0).unwrap(), (0.0, 0.7), &Tolerance::uniform(1e-11).unwrap()).unwrap();
    for t in [0.1, 0.35, 0.7] {
        let st = traj.state_at(t).unwrap();
        let u = potential_value(&spec, x0 + t, 0).unwrap();
        let trace = trace_formula(&st.gammas, &curve).unwrap();
        assert!((trace - u).norm() < 1e-6 * u.norm().max(1.0), "{t}: {trace} vs {u}");
    }
}

#[test]
fn theta_reconstruction_matches_theta_four() {
    let tau = Modulus::new(c(0.0, 1.5)).unwrap();
    let xs: Vec<f64> = (0..31).map(|i| -0.6 + 0.04 * i as f64).collect();
    let seed = ThetaReconstruction::from_theta(&tau, 4, 0.17).unwrap();
    assert!(seed.seed_residual() < 1e-8);
    let rec = reconstruct_theta(&seed, &xs).unwrap();
    let exact: Vec<C64> = xs.iter().map(|&x| jacobi_theta(4, c(x, 0.0), &tau, 0).unwrap()).collect();
    assert!(quadratic_gauge_residual(&xs, &rec.theta, &exact).unwrap() < 1e-6);
}

#[test]
fn invalid_input_is_rejected() {
    assert!(matches!(Modulus::new(c(0.3, -1.0)), Err(Error::InvalidParameter(_))));
    assert!(potential_value(&entry("zero-gap"), c(0.0, 0.0), 6).is_err());
    assert!(matches!(DubrovinState::new(vec![c(0.0, 0.0)], vec![]), Err(Error::ArityMismatch { .. })));
    let curve = entry("two-gap-lame").curve().unwrap();
    assert!(matches!(trace_formula(&[c(1.0, 0.0)], &curve), Err(Error::ArityMismatch { .. })));
    assert!("two-gap-lame tau=oops".parse::<PotentialSpec>().is_err());
}

#[test]
fn full_suite_is_reproducible() {
    let a = run_suite(Suite::All, &SuiteOptions::default());
    let b = run_suite(Suite::All, &SuiteOptions::default());
    assert!(a.all_pass(), "{:?}", a.failures().collect::<Vec<_>>());
    let key = |r: &finitegap::verify::VerificationReport| -> Vec<(String, String, u64)> {
        r.checks.iter().map(|c| (c.suite.clone(), c.id.clone(), c.residual.to_bits())).collect()
    };
    assert_eq!(key(&a), key(&b));
}
