//! Verification suites: every computable identity of the library evaluated on
//! shipped fixtures, collected into deterministic reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;

use crate::curves::{HyperellipticCurve, Sheet};
use crate::dubrovin::{dubrovin_flow, initial_state, inversion_residuals, pencil_integrals};
use crate::elliptic::{invariants_from_tau, zeta_sigma, Lattice, LambdaDivisor};
use crate::error::{Error, Result};
use crate::numerics::{Jet, Residual, Tolerance};
use crate::potentials::{
    mu_squared_residual, novikov_residual_g2, parse_potential_catalog, potential_value, resolvent_residual,
    PencilV, PotentialSpec, DEFAULT_CATALOG,
};
use crate::psi::{
    factorization3_residual, factorization_residual, hermite_pencil_basis, resolvent_equation_residual, wronskian,
    PsiSolution, QuadratureBase,
};
use crate::curves::SpectralPoint;
use crate::theta::{jacobi_theta, jacobi_theta_jet, reduction_residual_g2, theta_char, theta_constants, Modulus};
use crate::theta_ode::{
    fifth_order_residual, rational_integrals, quadratic_gauge_residual, reconstruct_theta, solve_kappa, kappa,
    closed_system_residual, lambda_system_residual, ThetaBasisSample, ThetaReconstruction,
};

/// One identity evaluated over its sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: String,
    pub id: String,
    /// Short statement of the identity.
    pub eq: String,
    /// Largest residual over the samples; +∞ if evaluation failed.
    pub residual: f64,
    pub tol: f64,
    /// Negative controls and structural checks keep their tolerance under overrides.
    pub fixed_tol: bool,
}

impl Check {
    pub fn pass(&self) -> bool {
        self.residual < self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub wall_time: f64,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Trivial,
    Theta,
    Elliptic,
    Curves,
    Potentials,
    Psi,
    Dubrovin,
    ThetaOde,
    All,
}

impl Suite {
    pub const MODULES: [Suite; 7] =
        [Suite::Theta, Suite::Elliptic, Suite::Curves, Suite::Potentials, Suite::Psi, Suite::Dubrovin, Suite::ThetaOde];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Trivial => "trivial",
            Suite::Theta => "theta",
            Suite::Elliptic => "elliptic",
            Suite::Curves => "curves",
            Suite::Potentials => "potentials",
            Suite::Psi => "psi",
            Suite::Dubrovin => "dubrovin",
            Suite::ThetaOde => "theta-ode",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Suite::Trivial, Suite::All].into_iter().chain(Suite::MODULES).find(|x| x.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown suite {s:?}; expected trivial, theta, elliptic, curves, potentials, psi, dubrovin, theta-ode or all"
            ))
        })
    }
}

/// Options shared by every suite.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuiteOptions {
    /// Replaces the tolerance of every residual check.
    pub tol_override: Option<f64>,
}

/// Run a suite; checks come back sorted by (suite, id).
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> VerificationReport {
    let start = Instant::now();
    let mut checks = match suite {
        Suite::Trivial => Vec::new(),
        Suite::Theta => theta_checks(),
        Suite::Elliptic => elliptic_checks(),
        Suite::Curves => curve_checks(),
        Suite::Potentials => [two_gap_lame_identity_checks(), one_gap_equivalence_checks(), genus_two_reduction_potential_checks()].concat(),
        Suite::Psi => [
            two_gap_lame_psi_checks(),
            one_gap_psi_checks(),
            duality_checks(),
            factorization_checks(),
            counterexample_checks(),
        ]
        .concat(),
        Suite::Dubrovin => [dubrovin_checks(), pencil_integral_checks()].concat(),
        Suite::ThetaOde => [theta_closedness_checks(), theta_reconstruction_checks()].concat(),
        Suite::All => Suite::MODULES.iter().flat_map(|&s| run_suite(s, opts).checks).collect(),
    };
    if let Some(t) = opts.tol_override {
        for c in checks.iter_mut().filter(|c| !c.fixed_tol) {
            c.tol = t;
        }
    }
    checks.sort_by(|a, b| (&a.suite, &a.id).cmp(&(&b.suite, &b.id)));
    VerificationReport { suite: suite.name().to_string(), checks, wall_time: start.elapsed().as_secs_f64() }
}

fn check(suite: &str, id: &str, eq: &str, tol: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    let residual = match f() {
        Ok(r) if r.is_nan() => f64::INFINITY,
        Ok(r) => r,
        Err(_) => f64::INFINITY,
    };
    Check { suite: suite.into(), id: id.into(), eq: eq.into(), residual, tol, fixed_tol: false }
}

fn fixed(mut c: Check) -> Check {
    c.fixed_tol = true;
    c
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn max_of(it: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    it.into_iter().try_fold(0.0f64, |m, r| r.map(|r| if r.is_nan() { f64::NAN } else { m.max(r) }))
}

fn rel(r: Result<Residual>) -> Result<f64> {
    r.map(|r| r.relative())
}

/// sqrt(mean |z − mean|²) / |mean|, or the absolute spread if `relative` is false.
fn spread(vals: &[C64], relative: bool) -> f64 {
    let n = vals.len() as f64;
    let mean: C64 = vals.iter().sum::<C64>() / n;
    let sd = (vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n).sqrt();
    if relative {
        sd / mean.norm()
    } else {
        sd
    }
}

/// Deterministic low-discrepancy points in [lo, hi].
fn weyl(n: usize, seed: f64, lo: f64, hi: f64) -> Vec<f64> {
    const PHI: f64 = 0.618_033_988_749_894_8;
    (0..n).map(|i| lo + (hi - lo) * (seed + PHI * (i + 1) as f64).fract()).collect()
}

pub fn catalog_entry(name: &str) -> Result<PotentialSpec> {
    parse_potential_catalog(DEFAULT_CATALOG)?
        .into_iter()
        .find(|p| p.name() == name)
        .ok_or_else(|| Error::UnsupportedVariant(name.to_string()))
}

fn modulus(t: C64) -> Modulus {
    Modulus::new(t).expect("fixture modulus is valid")
}

fn closedness_taus() -> Vec<Modulus> {
    [c(0.0, 2.0), c(0.0, 3.0), c(0.5, 1.0)].into_iter().map(modulus).collect()
}

fn complex_points(n: usize) -> Vec<C64> {
    weyl(n, 0.1, 0.03, 0.97).into_iter().zip(weyl(n, 0.37, 0.05, 0.45)).map(|(a, b)| c(a, b)).collect()
}

// ---- theta ---------------------------------------------------------------

pub fn theta_checks() -> Vec<Check> {
    const S: &str = "theta";
    let tau = modulus(c(0.0, 2.0));
    let pts = complex_points(20);
    let mut out = vec![
        check(S, "jacobi-derivative-product", "θ₁′(0) = πθ₂(0)θ₃(0)θ₄(0)", 1e-12, || {
            max_of(closedness_taus().iter().map(|t| {
                let tc = theta_constants(t)?;
                let rhs = std::f64::consts::PI * tc.theta2_0 * tc.theta3_0 * tc.theta4_0;
                Ok((tc.theta1_prime_0 - rhs).norm() / rhs.norm())
            }))
        }),
        check(S, "quasi-periodicity", "θ₃(z + τ) = e^{−iπτ − 2πiz} θ₃(z)", 1e-11, || {
            max_of(pts.iter().map(|&z| {
                let a = jacobi_theta(3, z + tau.tau(), &tau, 0)?;
                let b = (c(0.0, -std::f64::consts::PI) * (tau.tau() + 2.0 * z)).exp() * jacobi_theta(3, z, &tau, 0)?;
                Ok((a - b).norm() / b.norm())
            }))
        }),
        check(S, "characteristic-shifts", "θ[ε+2;δ] = θ[ε;δ], θ[ε;δ+2] = (−1)^ε θ[ε;δ]", 1e-12, || {
            let mut all = Vec::new();
            for (e, d) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                for &z in &pts[..5] {
                    let base = theta_char(e, d, z, &tau)?;
                    let s = if e % 2 == 1 { -1.0 } else { 1.0 };
                    let a = theta_char(e + 2, d, z, &tau)?;
                    let b = theta_char(e, d + 2, z, &tau)?;
                    all.push(Ok(((a - base).norm() + (b - s * base).norm()) / base.norm().max(1e-300)));
                }
            }
            max_of(all)
        }),
    ];
    out.extend(genus_two_reduction_checks());
    out
}

/// The two-torus reduction of the genus-2 theta over all 16 integer characteristics.
pub fn genus_two_reduction_checks() -> Vec<Check> {
    vec![check("theta", "genus-two-reduction", "Θ[(α,ε);(β,δ)](z/2 − ατ/8, w − α/4 | Π) = two-torus theta products", 1e-9, || {
        let (tau, kap) = (modulus(c(0.0, 2.0)), modulus(c(0.3, 1.5)));
        let zs = weyl(20, 0.2, -0.5, 0.5).into_iter().zip(weyl(20, 0.7, -0.3, 0.3)).map(|(a, b)| c(a, b));
        let ws: Vec<C64> = weyl(20, 0.5, -0.5, 0.5).into_iter().zip(weyl(20, 0.9, -0.3, 0.3)).map(|(a, b)| c(a, b)).collect();
        let pts: Vec<(C64, C64)> = zs.zip(ws).collect();
        let mut all = Vec::new();
        for bits in 0..16 {
            let (a, e, b, d) = (bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1);
            for &(z, w) in &pts {
                all.push(reduction_residual_g2(a, e, b, d, z, w, &tau, &kap).map(|r| r.norm()));
            }
        }
        max_of(all)
    })]
}

// ---- elliptic ------------------------------------------------------------

pub fn elliptic_checks() -> Vec<Check> {
    const S: &str = "elliptic";
    let pts = complex_points(20);
    vec![
        check(S, "weierstrass-equation", "℘′² = 4℘³ − g₂℘ − g₃", 1e-10, || {
            max_of(closedness_taus().iter().flat_map(|t| {
                let lat = Lattice::from_tau(t);
                pts.iter().map(move |&z| {
                    let inv = invariants_from_tau(t)?;
                    let j = lat.wp_jet(z, 1)?;
                    let (p, dp) = (j.value(), j.deriv(1));
                    Ok(Residual::from_terms(&[dp * dp, -4.0 * p * p * p, inv.g2 * p, inv.g3]).relative())
                })
            }))
        }),
        check(S, "branch-values", "e₁ + e₂ + e₃ = 0, ℘(½) = e₁", 1e-11, || {
            max_of(closedness_taus().iter().map(|t| {
                let inv = invariants_from_tau(t)?;
                let lat = Lattice::from_tau(t);
                let sum = (inv.e1 + inv.e2 + inv.e3).norm() / inv.e1.norm();
                Ok(sum.max((lat.wp(c(0.5, 0.0), 0)? - inv.e1).norm() / inv.e1.norm()))
            }))
        }),
        check(S, "zeta-quasi-period", "ζ(z + 1) = ζ(z) + 2η", 1e-11, || {
            max_of(closedness_taus().iter().flat_map(|t| {
                pts.iter().map(move |&z| {
                    let eta = theta_constants(t)?.eta;
                    let a = zeta_sigma(z + 1.0, t)?.zeta;
                    let b = zeta_sigma(z, t)?.zeta + 2.0 * eta;
                    Ok((a - b).norm() / b.norm().max(1.0))
                })
            }))
        }),
    ]
}

// ---- curves --------------------------------------------------------------

pub fn curve_checks() -> Vec<Check> {
    const S: &str = "curves";
    let curve = || catalog_entry("two-gap-lame").and_then(|p| p.curve());
    vec![
        check(S, "branch-points-vanish", "μ(E_k) = 0", 1e-10, || {
            let cv = curve()?;
            max_of(cv.branch_points().iter().map(|&e| Ok(cv.mu(e, Sheet::Plus).mu.norm() / cv.scale().powf(2.5))))
        }),
        check(S, "sheet-involution", "μ(λ, −) = −μ(λ, +)", 1e-14, || {
            let cv = curve()?;
            max_of(complex_points(20).into_iter().map(|z| {
                let l = z * 20.0 - 10.0;
                let (p, m) = (cv.mu(l, Sheet::Plus).mu, cv.mu(l, Sheet::Minus).mu);
                Ok((p + m).norm() / p.norm())
            }))
        }),
        check(S, "path-continuation", "μ continued along a loop is smooth and squares to the curve", 1e-10, || {
            let cv = curve()?;
            let path: Vec<C64> = (0..=400).map(|i| C64::from_polar(3.0, 0.01 + i as f64 * 0.005) + c(-1.0, 0.0)).collect();
            let mus = cv.mu_along_path(&path, Sheet::Plus)?;
            let mut worst: f64 = 0.0;
            for w in mus.windows(2) {
                if (w[1].mu - w[0].mu).norm() > 0.2 * w[0].mu.norm().max(1.0) {
                    return Ok(f64::INFINITY);
                }
            }
            for (l, m) in path.iter().zip(&mus) {
                let f = cv.eval(*l);
                worst = worst.max((m.mu * m.mu - f).norm() / f.norm());
            }
            Ok(worst)
        }),
        fixed(check(S, "record-round-trip", "curve record parse ∘ format = id", 0.5, || {
            let cv = curve()?;
            Ok(if HyperellipticCurve::from_record(&cv.to_record())? == cv { 0.0 } else { 1.0 })
        })),
    ]
}

// ---- potentials ----------------------------------------------------------

fn two_gap_x_grid() -> Vec<C64> {
    linspace(0.1, 1.9, 20).into_iter().map(|x| c(x, 0.0)).collect()
}

fn two_gap_lambda_grid() -> Vec<C64> {
    (0..10).map(|k| c(-9.0 + 2.1 * k as f64, 0.6 + 0.1 * k as f64)).collect()
}

/// Resolvent, curve and stationary-equation identities of the two-gap Lamé potential at τ = 2i.
pub fn two_gap_lame_identity_checks() -> Vec<Check> {
    const S: &str = "potentials";
    let spec = || catalog_entry("two-gap-lame");
    vec![
        check(S, "two-gap-lame.resolvent", "R‴ − 4(u + λ)R′ − 2u′R = 0", 1e-8, || {
            let p = spec()?;
            max_of(two_gap_x_grid().into_iter().flat_map(|x| two_gap_lambda_grid().into_iter().map(move |l| (x, l))).map(|(x, l)| rel(resolvent_residual(&p, x, l))))
        }),
        check(S, "two-gap-lame.curve", "−½RR″ + ¼R′² + (u + λ)R² = (λ² − 48g₂)(λ³ − 36g₂λ + 432g₃)", 1e-8, || {
            let p = spec()?;
            max_of(two_gap_x_grid().into_iter().flat_map(|x| two_gap_lambda_grid().into_iter().map(move |l| (x, l))).map(|(x, l)| rel(mu_squared_residual(&p, x, l))))
        }),
        check(S, "two-gap-lame.stationary", "u⁽⁵⁾ − 10uu‴ − 20u′u″ + 30u²u′ − 672g₂u′ = 0", 1e-8, || {
            let p = spec()?;
            let (c1, c2) = p.novikov_constants()?;
            max_of(two_gap_x_grid().into_iter().map(|x| rel(novikov_residual_g2(&p, x, c1, c2))))
        }),
    ]
}

/// The theta-built one-gap potential is 2℘ shifted by half a period, up to a constant.
pub fn one_gap_equivalence_checks() -> Vec<Check> {
    vec![check("potentials", "one-gap.lame-form", "−2(ln θ₃)″ − 2℘(x − ω − ω′) = const", 1e-9, || {
        let p = catalog_entry("one-gap-lame")?;
        let PotentialSpec::OneGapLame { tau, d } = p else { unreachable!() };
        let lat = Lattice::from_tau(&tau);
        let diffs: Vec<C64> = linspace(0.05, 0.95, 20)
            .into_iter()
            .map(|x| {
                let x = c(x, 0.0);
                Ok(potential_value(&p, x, 0)? - 2.0 * lat.wp(x + d - 0.5 - tau.tau() / 2.0, 0)?)
            })
            .collect::<Result<_>>()?;
        let mean: C64 = diffs.iter().sum::<C64>() / diffs.len() as f64;
        Ok(spread(&diffs, false) / mean.norm().max(1.0))
    })]
}

/// The non-elliptic two-gap potential equals −2(ln Θ)″ of the reduced genus-2 theta.
pub fn genus_two_reduction_potential_checks() -> Vec<Check> {
    vec![check("potentials", "non-elliptic.reduced-theta", "−2(ln{θ₄θ₂ − iθ₁θ₁})″ = −2(ln Θ)″", 1e-8, || {
        let PotentialSpec::NonElliptic2Gap(p) = catalog_entry("non-elliptic-2gap")? else { unreachable!() };
        let spec = PotentialSpec::NonElliptic2Gap(p);
        let div = p.reduced_divisor()?;
        max_of(linspace(0.05, 0.95, 20).into_iter().map(|x| {
            let x = c(x, 0.0);
            let a = potential_value(&spec, x, 0)?;
            let b = div.potential_jet(x, 0)?.value();
            Ok((a - b).norm() / a.norm().max(1.0))
        }))
    })]
}

// ---- psi -----------------------------------------------------------------

/// Schrödinger residual of the theta-form two-gap Lamé Ψ on the 20×10 grid.
pub fn two_gap_lame_psi_checks() -> Vec<Check> {
    vec![check("psi", "two-gap-lame.theta-form", "Ψ″ = (u + λ)Ψ, Ψ = (Λ/θ₁)′", 1e-8, || {
        let spec = catalog_entry("two-gap-lame")?;
        let curve = spec.curve()?;
        let mut all = Vec::new();
        for (k, l) in two_gap_lambda_grid().into_iter().enumerate() {
            let sheet = if k % 2 == 0 { Sheet::Plus } else { Sheet::Minus };
            let sol = PsiSolution::theta(&spec, &curve.mu(l, sheet))?;
            all.extend(two_gap_x_grid().into_iter().map(|x| rel(sol.schrodinger_residual(x))));
        }
        max_of(all)
    })]
}

/// The one-gap Ψ built directly from θ₃ with λ = ℘(u).
pub fn one_gap_psi_checks() -> Vec<Check> {
    vec![check("psi", "one-gap.theta-form", "Ψ = θ₃(x − v)/θ₃(x)·e^{(ζ(v) − 2ηv)x} solves Ψ″ = (−2(ln θ₃)″ − 4η + ℘(v))Ψ", 1e-8, || {
        let PotentialSpec::OneGapLame { tau, .. } = catalog_entry("one-gap-lame")? else { unreachable!() };
        let spec = PotentialSpec::OneGapLame { tau, d: c(0.0, 0.0) };
        let lat = Lattice::from_tau(&tau);
        let eta = theta_constants(&tau)?.eta;
        let mut all = Vec::new();
        for v in [c(0.3, 0.2), c(0.71, -0.15), c(0.12, 0.4)] {
            let lambda = lat.wp(v, 0)?;
            let slope = zeta_sigma(v, &tau)?.zeta - 2.0 * eta * v;
            for x in linspace(0.05, 0.95, 20) {
                let x = c(x, 0.0);
                let num = jacobi_theta_jet(3, x - v, &tau, 2)?;
                let den = jacobi_theta_jet(3, x, &tau, 2)?;
                let psi = &(&num / &den) * &(Jet::variable(x, 2) * slope).exp();
                let q = potential_value(&spec, x, 0)? - 4.0 * eta + lambda;
                all.push(Ok(Residual::from_terms(&[psi.deriv(2), -q * psi.value()]).relative()));
            }
        }
        max_of(all)
    })]
}

/// Quadrature and theta forms agree up to a constant; the Wronskian is 2μ.
pub fn duality_checks() -> Vec<Check> {
    const S: &str = "psi";
    let mut out = Vec::new();
    for name in ["one-gap-lame", "two-gap-lame"] {
        out.push(check(S, &format!("{name}.quadrature-theta-ratio"), "Ψ_quadrature/Ψ_theta = const", 1e-7, || {
            let spec = catalog_entry(name)?;
            let curve = spec.curve()?;
            let mut worst: f64 = 0.0;
            for l in [c(1.1, 0.4), c(-2.3, 1.7), c(6.0, -0.5)] {
                for sheet in [Sheet::Plus, Sheet::Minus] {
                    let q = PsiSolution::quadrature(&spec, l, sheet, QuadratureBase::new(c(0.25, 0.0)))?;
                    let t = PsiSolution::theta(&spec, &curve.mu(l, sheet))?;
                    let ratios: Vec<C64> = linspace(0.25, 0.95, 12)
                        .into_iter()
                        .map(|x| Ok(q.sample(c(x, 0.0))?.psi / t.sample(c(x, 0.0))?.psi))
                        .collect::<Result<_>>()?;
                    worst = worst.max(spread(&ratios, true));
                }
            }
            Ok(worst)
        }));
        out.push(check(S, &format!("{name}.wronskian"), "Ψ⁺′Ψ⁻ − Ψ⁺Ψ⁻′ = 2μ", 1e-8, || {
            let spec = catalog_entry(name)?;
            let curve = spec.curve()?;
            let base = QuadratureBase::new(c(0.25, 0.0));
            let mut all = Vec::new();
            for l in [c(1.1, 0.4), c(-2.3, 1.7), c(6.0, -0.5)] {
                let p = PsiSolution::quadrature(&spec, l, Sheet::Plus, base.clone())?;
                let m = PsiSolution::quadrature(&spec, l, Sheet::Minus, base.clone())?;
                let mu = curve.mu(l, Sheet::Plus).mu;
                // Undo Ψ(x0) = 1 to get the √R·exp(±μ∫dx/R) normalization.
                let norm = p.normalization() * m.normalization();
                for x in linspace(0.3, 0.9, 7) {
                    all.push(wronskian(&p, &m, c(x, 0.0)).map(|w| (w / norm - 2.0 * mu).norm() / (2.0 * mu).norm()));
                }
            }
            max_of(all)
        }));
    }
    out
}

/// First- and second-order factorizations on polynomial test functions, and the
/// product basis of the resolvent equation.
pub fn factorization_checks() -> Vec<Check> {
    const S: &str = "psi";
    let points = || [(c(0.37, 0.0), c(2.0, 0.7)), (c(0.81, 0.0), c(-3.5, 1.2)), (c(1.3, 0.0), c(7.0, -2.0))];
    vec![
        check(S, "factorization.second-order", "(∂ + b)(∂ − b) = ∂² − (u + λ)", 1e-8, || {
            let spec = catalog_entry("two-gap-lame")?;
            let mut all = Vec::new();
            for (x, l) in points() {
                for deg in 0..=4 {
                    let f = Jet::variable(x, 4).powi(deg) + c(0.5, 0.0);
                    for s in [Sheet::Plus, Sheet::Minus] {
                        all.push(rel(factorization_residual(&spec, l, s, &f, x)));
                    }
                }
            }
            max_of(all)
        }),
        check(S, "factorization.third-order", "(∂ + a)∂(∂ − a) = ∂³ − 4(u + λ)∂ − 2u′", 1e-8, || {
            let spec = catalog_entry("two-gap-lame")?;
            let mut all = Vec::new();
            for (x, l) in points() {
                for deg in 0..=4 {
                    let f = Jet::variable(x, 4).powi(deg) + c(0.5, 0.0);
                    for s in [Sheet::Plus, Sheet::Minus] {
                        all.push(rel(factorization3_residual(&spec, l, s, &f, x)));
                    }
                }
            }
            max_of(all)
        }),
        check(S, "factorization.hermite-triple", "R, Ψ₊², R²/Ψ₊² solve R‴ − 4(u + λ)R′ − 2u′R = 0", 1e-8, || {
            let spec = catalog_entry("two-gap-lame")?;
            let mut all = Vec::new();
            for (x, l) in points() {
                for r in hermite_pencil_basis(&spec, l, &QuadratureBase::new(c(0.3, 0.0)), x, 3)? {
                    all.push(rel(resolvent_equation_residual(&spec, l, x, &r)));
                }
            }
            max_of(all)
        }),
    ]
}

fn pencil_fixture() -> Result<PencilV> {
    match catalog_entry("pencil-v")? {
        PotentialSpec::PencilV(p) => Ok(p),
        _ => unreachable!(),
    }
}

fn pencil_grid() -> Vec<f64> {
    linspace(2.7, 2.9, 21)
}

/// The λ = 0 solution of the modified Lamé equation, and the spectral pencil.
pub fn counterexample_checks() -> Vec<Check> {
    const S: &str = "psi";
    vec![
        check(S, "modified-lame.zero-mode", "Ψ = (Λ/θ₁)′ solves Ψ″ = uΨ", 1e-8, || {
            let spec = catalog_entry("modified-lame")?;
            let pt = SpectralPoint { lambda: c(0.0, 0.0), mu: c(0.0, 0.0), sheet: Sheet::Plus, ramified: false };
            let sol = PsiSolution::theta(&spec, &pt)?;
            max_of(complex_points(20).into_iter().map(|x| rel(sol.schrodinger_residual(x))))
        }),
        check(S, "pencil.schrodinger", "Ψ″ = (λ/v²)Ψ", 1e-7, || {
            let p = pencil_fixture()?;
            let mut all = Vec::new();
            for (l, s) in [(c(0.8, 0.3), Sheet::Plus), (c(-1.5, 0.6), Sheet::Minus), (c(2.2, -0.9), Sheet::Plus)] {
                let sol = PsiSolution::pencil(&p, l, s)?;
                all.extend(pencil_grid().into_iter().map(|x| rel(sol.schrodinger_residual(c(x, 0.0)))));
            }
            max_of(all)
        }),
    ]
}

// ---- dubrovin ------------------------------------------------------------

fn flow_tol() -> Tolerance {
    Tolerance { abs_tol: 1e-13, rel_tol: 1e-13, max_steps: 200_000 }
}

pub fn dubrovin_checks() -> Vec<Check> {
    const S: &str = "dubrovin";
    vec![
        check(S, "genus-one.weierstrass", "γ(x) = ℘(x + D + ω + ω′) − 4η over one period", 1e-7, || {
            let spec = catalog_entry("one-gap-lame")?;
            let PotentialSpec::OneGapLame { tau, d } = spec else { unreachable!() };
            let x0 = 0.2;
            let traj = dubrovin_flow(&spec.curve()?, &initial_state(&spec, c(x0, 0.0))?, (x0, x0 + 1.0), &flow_tol())?;
            let lat = Lattice::from_tau(&tau);
            let eta = invariants_from_tau(&tau)?.eta;
            max_of(traj.xs().iter().zip(traj.states()).map(|(&x, st)| {
                let oracle = lat.wp(c(x, 0.0) + d + 0.5 + tau.tau() / 2.0, 0)? - 4.0 * eta;
                Ok((st.gammas[0] - oracle).norm() / oracle.norm().max(1.0))
            }))
        }),
        check(S, "genus-two.trace", "u = 2(γ₁ + γ₂) − ΣE", 1e-6, || {
            let (spec, x0, traj) = genus_two_flow()?;
            max_of(traj.xs().iter().enumerate().map(|(i, &t)| {
                let u = potential_value(&spec, x0 + t, 0)?;
                Ok((traj.trace(i) - u).norm() / u.norm().max(1.0))
            }))
        }),
        check(S, "genus-two.inversion", "Σ γ_k^n γ̇_k / ϱ_k = 2δ_{n,g−1}", 1e-8, || {
            let (_, _, traj) = genus_two_flow()?;
            Ok(inversion_residuals(&traj).iter().flatten().map(|z| z.norm()).fold(0.0, f64::max))
        }),
        check(S, "genus-two.on-curve", "V(γ_k)² = ∏(γ_k − E_j)", 1e-8, || {
            let (_, _, traj) = genus_two_flow()?;
            Ok(traj.on_curve_residuals().into_iter().fold(0.0, f64::max))
        }),
    ]
}

fn genus_two_flow() -> Result<(PotentialSpec, C64, crate::dubrovin::DubrovinTrajectory)> {
    let spec = catalog_entry("two-gap-lame")?;
    let x0 = c(0.1, 0.2);
    let traj = dubrovin_flow(&spec.curve()?, &initial_state(&spec, x0)?, (0.0, 1.0), &flow_tol())?;
    Ok((spec, x0, traj))
}

/// E₁, E₂ of the pencil are constant along x.
pub fn pencil_integral_checks() -> Vec<Check> {
    vec![check("dubrovin", "pencil.integrals", "E₁, E₂ constant along the flow", 1e-8, || {
        let p = pencil_fixture()?;
        let (e2, e1) = p.integrals();
        max_of(pencil_grid().into_iter().map(|x| {
            let (a, b) = pencil_integrals(&p, c(x, 0.0))?;
            Ok(((a - e2).norm() / e2.norm().max(1.0)).max((b - e1).norm() / e1.norm().max(1.0)))
        }))
    })]
}

// ---- theta-ode -----------------------------------------------------------

pub fn theta_closedness_checks() -> Vec<Check> {
    const S: &str = "theta-ode";
    let pts = complex_points(20);
    let mut out = Vec::new();
    for tau in closedness_taus() {
        let tag = crate::text::format_complex(tau.tau());
        out.push(check(S, &format!("closed-system.tau={tag}"), "∂θ[ε;δ] and θ₁″ closed in θ's, all ε, δ ∈ {−1..2}", 1e-7, || {
            let mut all = Vec::new();
            for &x in &pts {
                for e in -1..=2 {
                    for d in -1..=2 {
                        for r in closed_system_residual(x, &tau, e, d)? {
                            all.push(Ok(r.relative()));
                        }
                    }
                }
            }
            max_of(all)
        }));
        out.push(check(S, &format!("lambda-system.tau={tag}"), "{θ₁..θ₄, θ₁′, Λ} closed under ∂", 1e-7, || {
            let mut all = Vec::new();
            for &x in &pts {
                for r in lambda_system_residual(x, c(0.3, 0.7), &tau, c(0.2, -0.1))? {
                    all.push(Ok(r.relative()));
                }
            }
            max_of(all)
        }));
        out.push(check(S, &format!("fifth-order.tau={tag}"), "((1/F′)(F′²/F)′)′ + 8F′ = 0, F = (ln θ_k)″ − 2κ", 1e-7, || {
            let mut all = Vec::new();
            for &x in &pts {
                for k in 1..=4 {
                    all.push(rel(fifth_order_residual(x, &tau, k)));
                }
            }
            max_of(all)
        }));
        out.push(check(S, &format!("kappa.tau={tag}"), "κ solving the fifth-order equation matches −κ = 2η + (π²/6)(ϑ₃⁴ + ϑ₄⁴)", 1e-9, || {
            let k = kappa(&tau)?;
            let s = solve_kappa(c(0.3, 0.2), &tau, 3, k)?;
            Ok((s - k).norm() / k.norm().max(1.0))
        }));
        let samples = |tau: &Modulus| -> Result<Vec<ThetaBasisSample>> {
            let div = LambdaDivisor::new(c(0.3, 0.2), *tau, c(0.0, 0.0))?;
            pts.iter().map(|&x| ThetaBasisSample::at(x, tau, &div)).collect()
        };
        out.push(check(S, &format!("rational-integrals.tau={tag}"), "A₁, A₂ independent of x", 1e-10, || {
            Ok(rational_integrals(&samples(&tau)?, &tau)?.2)
        }));
        out.push(fixed(check(S, &format!("rational-integrals-control.tau={tag}"), "θ₂ → 1.01θ₂ breaks constancy (10⁻⁴/spread)", 1.0, || {
            let perturbed: Vec<ThetaBasisSample> = samples(&tau)?
                .into_iter()
                .map(|mut s| {
                    s.theta[1] *= 1.01;
                    s
                })
                .collect();
            Ok(1e-4 / rational_integrals(&perturbed, &tau)?.2)
        })));
    }
    out
}

/// θ₃ rebuilt by double quadrature of the inverted elliptic integral.
pub fn theta_reconstruction_checks() -> Vec<Check> {
    const S: &str = "theta-ode";
    let build = || -> Result<(Vec<f64>, ThetaReconstruction, Vec<C64>)> {
        let tau = modulus(c(0.0, 2.0));
        let xs = linspace(-1.0, 1.0, 41);
        let seed = ThetaReconstruction::from_theta(&tau, 3, 0.17)?;
        let exact = xs.iter().map(|&x| jacobi_theta(3, c(x, 0.0), &tau, 0)).collect::<Result<_>>()?;
        Ok((xs, seed, exact))
    };
    vec![
        check(S, "reconstruction.gauge-fit", "ln(θ₃/θ_rec) is quadratic in x", 1e-6, || {
            let (xs, seed, exact) = build()?;
            let gauged = ThetaReconstruction { d: c(0.4, -0.3), e: c(1.5, 0.2), ..seed };
            quadratic_gauge_residual(&xs, &reconstruct_theta(&gauged, &xs)?.theta, &exact)
        }),
        check(S, "reconstruction.round-trip", "F of the rebuilt θ satisfies the fifth-order equation", 1e-6, || {
            let (xs, seed, _) = build()?;
            let rec = reconstruct_theta(&seed, &xs)?;
            max_of((1..xs.len()).step_by(4).map(|i| rel(crate::theta_ode::fifth_order_residual_from_f(&rec.f_jet(i, &seed), c(xs[i], 0.0)))))
        }),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_suite_is_empty() {
        let r = run_suite(Suite::Trivial, &SuiteOptions::default());
        assert!(r.checks.is_empty() && r.all_pass());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Trivial, Suite::All].into_iter().chain(Suite::MODULES) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn failed_evaluation_is_a_failed_check() {
        let ch = check("x", "y", "z", 1.0, || Err(Error::FitNotProvided));
        assert!(!ch.pass() && ch.residual.is_infinite());
        let ch = check("x", "y", "z", 1.0, || Ok(f64::NAN));
        assert!(!ch.pass());
    }

    #[test]
    fn tolerance_override_spares_controls() {
        let r = run_suite(Suite::Theta, &SuiteOptions { tol_override: Some(1e-3) });
        assert!(r.checks.iter().all(|c| c.tol == 1e-3));
        let r = run_suite(Suite::ThetaOde, &SuiteOptions { tol_override: Some(1e-30) });
        assert!(r.checks.iter().filter(|c| c.id.contains("control")).all(|c| c.tol == 1.0 && c.pass()));
        let ids: Vec<&str> = r.checks.iter().map(|c| c.id.as_str()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn module_suites_pass() {
        for s in Suite::MODULES {
            let r = run_suite(s, &SuiteOptions::default());
            let bad: Vec<String> = r.failures().map(|c| format!("{} {:e} ≥ {:e}", c.id, c.residual, c.tol)).collect();
            assert!(bad.is_empty(), "{s}: {bad:?}");
        }
    }
}
