//! The potential catalog and the resolvent identities of the Schrödinger
//! operator Ψ″ = (u + λ)Ψ.
//!
//! Potentials are built from theta functions as u = −2 (ln T)″ with the
//! additive constant set to zero. All x-derivatives come from truncated
//! Taylor arithmetic on the underlying series.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::curves::HyperellipticCurve;
use crate::elliptic::{invariants_from_tau, Lattice};
use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate_ode, least_squares, poly_roots, Jet, Residual, Tolerance};
use crate::text::{format_complex, parse_complex, parse_pairs};
use crate::theta::{jacobi_theta_jet, riemann_theta_directional_jet, Characteristic, Modulus, RiemannMatrix};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// −2 (ln T)″ as a jet of the given order, from a jet of T of order + 2.
fn minus_two_log_dd(t: &Jet) -> Result<Jet> {
    let v = t.value();
    if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::PoleHit(format!("theta factor is {v}")));
    }
    let l = t.ln().differentiate().differentiate() * (-2.0);
    if l.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::PoleHit("non-finite potential".into()));
    }
    Ok(l)
}

/// Θ[α;β](xU + D|Π)·e^{hx}, the linearly exponential divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearExpDivisor {
    pub pi: RiemannMatrix,
    pub characteristic: Characteristic,
    pub u_vec: Vec<C64>,
    pub d_vec: Vec<C64>,
    pub h: C64,
}

impl LinearExpDivisor {
    pub fn new(pi: RiemannMatrix, characteristic: Characteristic, u_vec: Vec<C64>, d_vec: Vec<C64>, h: C64) -> Result<Self> {
        let g = pi.genus();
        for len in [characteristic.alpha.len(), u_vec.len(), d_vec.len()] {
            if len != g {
                return Err(Error::ArityMismatch { expected: g, got: len });
            }
        }
        Ok(Self { pi, characteristic, u_vec, d_vec, h })
    }

    /// Jet in x of the divisor.
    pub fn jet(&self, x: C64, order: usize) -> Result<Jet> {
        let g = self.pi.genus();
        let alpha: Vec<C64> = self.characteristic.alpha.iter().map(|&a| C64::new(a as f64, 0.0)).collect();
        let beta: Vec<f64> = self.characteristic.beta.iter().map(|&b| b as f64).collect();
        let pa = self.pi.apply(&alpha);
        let arg: Vec<C64> = (0..g).map(|j| x * self.u_vec[j] + self.d_vec[j] + 0.5 * pa[j] + 0.5 * beta[j]).collect();
        let theta = riemann_theta_directional_jet(&arg, &self.u_vec, &self.pi, order)?;
        let mut c0 = self.h * x;
        let mut c1 = self.h;
        for j in 0..g {
            c0 += I * PI * (alpha[j] * pa[j] / 4.0 + alpha[j] * (x * self.u_vec[j] + self.d_vec[j] + 0.5 * beta[j]));
            c1 += I * PI * alpha[j] * self.u_vec[j];
        }
        let lin = Jet::constant(c0, order) + &(Jet::variable(zero(), order) * c1);
        Ok(&theta * &lin.exp())
    }

    /// u = −2 (ln Θ e^{hx})″.
    pub fn potential_jet(&self, x: C64, order: usize) -> Result<Jet> {
        minus_two_log_dd(&self.jet(x, order + 2)?)
    }
}

/// u = −2 ln″{θ₄(Ux+A|τ)θ₂(Vx+B|ϰ) − iθ₁(Ux+A|τ)θ₁(Vx+B|ϰ)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonElliptic2Gap {
    pub tau: Modulus,
    pub kappa: Modulus,
    pub a: C64,
    pub b: C64,
    pub u: C64,
    pub v: C64,
    /// Fitted constants (c1, c2) of the genus-2 stationary equation, when known.
    pub novikov: Option<(C64, C64)>,
}

impl NonElliptic2Gap {
    pub fn theta_jet(&self, x: C64, order: usize) -> Result<Jet> {
        let z = self.u * x + self.a;
        let w = self.v * x + self.b;
        let t4 = jacobi_theta_jet(4, z, &self.tau, order)?.stretch(self.u);
        let t1z = jacobi_theta_jet(1, z, &self.tau, order)?.stretch(self.u);
        let t2 = jacobi_theta_jet(2, w, &self.kappa, order)?.stretch(self.v);
        let t1w = jacobi_theta_jet(1, w, &self.kappa, order)?.stretch(self.v);
        Ok(&t4 * &t2 - (&t1z * &t1w) * I)
    }

    /// The same potential as an Its–Matveev divisor of the reduced genus-2 theta
    /// with Π = [[τ/4, ½], [½, ϰ]].
    pub fn reduced_divisor(&self) -> Result<LinearExpDivisor> {
        LinearExpDivisor::new(
            RiemannMatrix::reduced(&self.tau, &self.kappa)?,
            Characteristic::zero(2),
            vec![self.u / 2.0, self.v],
            vec![self.a / 2.0 + 0.25, self.b + self.kappa.tau() / 2.0],
            zero(),
        )
    }
}

/// Spectral pencil Ψ″ = (λ/v²)Ψ with R = vλ − φ, φ = 2a(x−b)(x−c).
///
/// v is built from an auxiliary torus: with ℘ of half-periods (1, τ), the
/// function r(x) solves
/// ln[θ₁(r−ϱ)/θ₁(r+ϱ)] + 2(θ₁′(ϱ)/θ₁(ϱ)) r = K ln[(x−b)/(x−c)] + D,
/// and v = φ/γ with γ = (℘(2r) − ℘(2ϱ))/s². The scale s and K are fixed by
/// matching the curve constant to a²(b−c)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilV {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub tau: Modulus,
    pub rho: C64,
    pub d: C64,
    /// Point where r is fixed by the transcendental equation.
    pub x_ref: C64,
    r_ref: C64,
    s: C64,
    e2u: C64,
    e1u: C64,
    k: C64,
}

impl PencilV {
    pub fn new(a: C64, b: C64, c: C64, tau: Modulus, rho: C64, d: C64, x_ref: C64, r_guess: C64) -> Result<Self> {
        let amp = a * a * (b - c) * (b - c);
        if amp.norm() == 0.0 {
            return Err(Error::InvalidParameter("pencil needs a ≠ 0 and b ≠ c".into()));
        }
        if (x_ref - b).norm() == 0.0 || (x_ref - c).norm() == 0.0 {
            return Err(Error::InvalidParameter("reference point must avoid b and c".into()));
        }
        let lat = Lattice::from_tau(&tau);
        let inv = invariants_from_tau(&tau)?;
        let (g2, g3) = (inv.g2 / 16.0, inv.g3 / 64.0);
        let wj = lat.wp_jet(rho, 1)?;
        let e2u = wj.value() / 4.0;
        let e1u = (12.0 * e2u * e2u - g2) / 4.0;
        let a1 = (4.0 * e1u * e2u - 8.0 * e2u * e2u * e2u - g3) / 4.0;
        let s = (a1 / amp).powf(1.0 / 6.0);
        let wpp = wj.deriv(1) / 8.0;
        let k = wpp / (s * s * s * 2.0 * a * (b - c));
        let mut p = Self { a, b, c, tau, rho, d, x_ref, r_ref: r_guess, s, e2u, e1u, k };
        let f = |r: C64| p.log_relation(x_ref, r).unwrap_or(C64::new(f64::NAN, f64::NAN));
        p.r_ref = find_root(f, r_guess, &Tolerance::uniform(1e-14)?)?;
        Ok(p)
    }

    /// Left minus right side of the transcendental equation for r at x.
    pub fn log_relation(&self, x: C64, r: C64) -> Result<C64> {
        let tr = jacobi_theta_jet(1, self.rho, &self.tau, 1)?;
        let slope = 2.0 * tr.deriv(1) / tr.value();
        let num = jacobi_theta_jet(1, r - self.rho, &self.tau, 0)?.value();
        let den = jacobi_theta_jet(1, r + self.rho, &self.tau, 0)?.value();
        if den.norm() == 0.0 {
            return Err(Error::ThetaZeroDenominator(format!("{}", r + self.rho)));
        }
        Ok((num / den).ln() + slope * r - self.k * ((x - self.b) / (x - self.c)).ln() - self.d)
    }

    pub fn phi(&self, x: C64) -> C64 {
        2.0 * self.a * (x - self.b) * (x - self.c)
    }

    fn phi_jet(&self, x: C64, order: usize) -> Jet {
        let t = Jet::variable(x, order);
        (&(&t - self.b) * &(&t - self.c)) * (2.0 * self.a)
    }

    /// E₂ and E₁ of the pencil curve μ² = λ³ + 3E₂λ² + E₁λ + a²(b−c)².
    pub fn integrals(&self) -> (C64, C64) {
        (self.e2u / (self.s * self.s), self.e1u / self.s.powi(4))
    }

    pub fn curve_coeffs(&self) -> [C64; 4] {
        let (e2, e1) = self.integrals();
        let amp = self.a * self.a * (self.b - self.c) * (self.b - self.c);
        [amp, e1, 3.0 * e2, one()]
    }

    pub fn curve(&self) -> Result<HyperellipticCurve> {
        HyperellipticCurve::monic(poly_roots(&self.curve_coeffs())?)
    }

    /// Spectral parameter attached to a point ũ of the auxiliary torus.
    pub fn lambda_of(&self, ut: C64) -> Result<C64> {
        let w = Lattice::from_tau(&self.tau).wp(ut, 0)? / 4.0;
        Ok((w - self.e2u) / (self.s * self.s))
    }

    pub fn scale_s(&self) -> C64 {
        self.s
    }

    fn gamma_of_r(&self, lat: &Lattice, r: C64) -> Result<C64> {
        Ok((lat.wp(r, 0)? / 4.0 - self.e2u) / (self.s * self.s))
    }

    /// r(x), continued from the reference point along a straight segment.
    pub fn r_at(&self, x: C64) -> Result<C64> {
        let dx = x - self.x_ref;
        if dx.norm() == 0.0 {
            return Ok(self.r_ref);
        }
        let lat = Lattice::from_tau(&self.tau);
        let mut err = None;
        let tol = Tolerance::new(1e-14, 1e-13, 200_000)?;
        let traj = integrate_ode(
            |t, y, dy| {
                let xt = self.x_ref + t * dx;
                match self.gamma_of_r(&lat, y[0]) {
                    Ok(g) => dy[0] = dx * g / (2.0 * self.s * self.phi(xt)),
                    Err(e) => {
                        err.get_or_insert(e);
                        dy[0] = C64::new(f64::NAN, f64::NAN);
                    }
                }
            },
            &[self.r_ref],
            (0.0, 1.0),
            &tol,
        );
        if let Some(e) = err {
            return Err(e);
        }
        Ok(traj?.last().1[0])
    }

    /// Jet of r at x by Picard iteration of r′ = γ(r)/(2sφ).
    pub fn r_jet(&self, x: C64, order: usize) -> Result<Jet> {
        let r0 = self.r_at(x)?;
        let lat = Lattice::from_tau(&self.tau);
        let wd = lat.wp_jet(r0, order)?.derivs();
        let den = self.phi_jet(x, order) * (2.0 * self.s);
        let mut r = Jet::constant(r0, order);
        for _ in 0..=order {
            let gam = (r.compose(&wd) * (0.25 / (self.s * self.s))) - self.e2u / (self.s * self.s);
            r = (&gam / &den).integrate(r0).truncate(order);
        }
        Ok(r)
    }

    /// γ(r(x)) as a jet.
    pub fn gamma_jet(&self, x: C64, order: usize) -> Result<Jet> {
        let r = self.r_jet(x, order)?;
        let wd = Lattice::from_tau(&self.tau).wp_jet(r.value(), order)?.derivs();
        Ok((r.compose(&wd) * (0.25 / (self.s * self.s))) - self.e2u / (self.s * self.s))
    }

    pub fn v_jet(&self, x: C64, order: usize) -> Result<Jet> {
        let g = self.gamma_jet(x, order)?;
        if g.value().norm() == 0.0 {
            return Err(Error::PoleHit(format!("v has a pole at {x}")));
        }
        Ok(&self.phi_jet(x, order) / &g)
    }

    /// v³v‴ − 4φv′ + 4φ′v.
    pub fn novikov_residual(&self, x: C64) -> Result<Residual> {
        let v = self.v_jet(x, 3)?.derivs();
        let phi = self.phi(x);
        let dphi = 2.0 * self.a * (2.0 * x - self.b - self.c);
        Ok(Residual::from_terms(&[v[0].powi(3) * v[3], -4.0 * phi * v[1], 4.0 * dphi * v[0]]))
    }
}

/// The catalog of potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// u ≡ c.
    ZeroGap { c: C64 },
    /// u = −2 ln″θ₃(x + D|τ).
    OneGapLame { tau: Modulus, d: C64 },
    /// u = 24℘(2(x + shift)) with ℘ of half-periods (1, τ).
    TwoGapLame { tau: Modulus, shift: C64 },
    NonElliptic2Gap(NonElliptic2Gap),
    /// u = 24℘(2x) + 8℘(2x − u) + 16℘(u); not finite-gap.
    ModifiedLame { tau: Modulus, u: C64 },
    /// Coefficient v of the pencil Ψ″ = (λ/v²)Ψ.
    PencilV(PencilV),
    /// u = −2 ln″{sin(ax + b) − ax − c}.
    Positon { a: f64, b: f64, c: f64 },
}

impl PotentialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::ZeroGap { .. } => "zero-gap",
            PotentialSpec::OneGapLame { .. } => "one-gap-lame",
            PotentialSpec::TwoGapLame { .. } => "two-gap-lame",
            PotentialSpec::NonElliptic2Gap(_) => "non-elliptic-2gap",
            PotentialSpec::ModifiedLame { .. } => "modified-lame",
            PotentialSpec::PencilV(_) => "pencil-v",
            PotentialSpec::Positon { .. } => "positon",
        }
    }

    /// Genus of the spectral curve, if the variant has one.
    pub fn genus(&self) -> Option<usize> {
        match self {
            PotentialSpec::ZeroGap { .. } => Some(0),
            PotentialSpec::OneGapLame { .. } | PotentialSpec::PencilV(_) => Some(1),
            PotentialSpec::TwoGapLame { .. } | PotentialSpec::NonElliptic2Gap(_) => Some(2),
            PotentialSpec::ModifiedLame { .. } | PotentialSpec::Positon { .. } => None,
        }
    }

    /// Jet of the potential (of v for the pencil) at x.
    pub fn potential_jet(&self, x: C64, order: usize) -> Result<Jet> {
        match self {
            PotentialSpec::ZeroGap { c } => Ok(Jet::constant(*c, order)),
            PotentialSpec::OneGapLame { tau, d } => minus_two_log_dd(&jacobi_theta_jet(3, x + d, tau, order + 2)?),
            PotentialSpec::TwoGapLame { tau, shift } => {
                Ok(Lattice::from_tau(tau).wp_jet(x + shift, order).map_err(pole)? * 6.0)
            }
            PotentialSpec::NonElliptic2Gap(p) => minus_two_log_dd(&p.theta_jet(x, order + 2)?),
            PotentialSpec::ModifiedLame { tau, u } => {
                let lat = Lattice::from_tau(tau);
                let a = lat.wp_jet(x, order).map_err(pole)? * 6.0;
                let b = lat.wp_jet(x - u / 2.0, order).map_err(pole)? * 2.0;
                Ok(a + &b + 4.0 * lat.wp(u / 2.0, 0)?)
            }
            PotentialSpec::PencilV(p) => p.v_jet(x, order),
            PotentialSpec::Positon { a, b, c } => {
                let (a, b, c) = (C64::new(*a, 0.0), C64::new(*b, 0.0), C64::new(*c, 0.0));
                let th = a * x + b;
                let mut d = Vec::with_capacity(order + 3);
                let mut ak = one();
                for k in 0..order + 3 {
                    let s = match k % 4 {
                        0 => th.sin(),
                        1 => th.cos(),
                        2 => -th.sin(),
                        _ => -th.cos(),
                    };
                    d.push(ak * s);
                    ak *= a;
                }
                d[0] -= a * x + c;
                d[1] -= a;
                minus_two_log_dd(&Jet::from_derivs(&d))
            }
        }
    }

    /// Constants (c1, c2) of the genus-2 stationary equation, if known.
    pub fn novikov_constants(&self) -> Result<(C64, C64)> {
        match self {
            PotentialSpec::TwoGapLame { tau, .. } => {
                let g2 = invariants_from_tau(tau)?.g2 / 16.0;
                Ok((zero(), -672.0 * g2))
            }
            PotentialSpec::NonElliptic2Gap(p) => p.novikov.ok_or(Error::FitNotProvided),
            _ => Err(Error::UnsupportedVariant(format!("{} is not a genus-2 potential", self.name()))),
        }
    }

    fn potential_sum_e(&self) -> Result<C64> {
        Ok(self.curve()?.branch_points().iter().sum())
    }

    /// Coefficient jets of R(x; λ) in ascending powers of λ.
    pub fn r_coeff_jets(&self, x: C64, order: usize) -> Result<Vec<Jet>> {
        match self {
            PotentialSpec::ZeroGap { .. } => Ok(vec![Jet::constant(one(), order)]),
            PotentialSpec::OneGapLame { .. } => {
                let sum_e = self.potential_sum_e()?;
                let gamma = (self.potential_jet(x, order)? + sum_e) * 0.5;
                Ok(vec![-gamma, Jet::constant(one(), order)])
            }
            PotentialSpec::TwoGapLame { .. } | PotentialSpec::NonElliptic2Gap(_) => {
                let (c1, c2) = self.novikov_constants()?;
                let (k1, k0) = (c1 / 4.0, c2 / 16.0);
                let u2 = self.potential_jet(x, order + 2)?;
                let u = u2.truncate(order);
                let uxx = u2.differentiate().differentiate();
                let r0 = uxx * (-0.125) + &(&u * &u * 0.375) + &(&u * (-k1 / 2.0)) + k0;
                let r1 = &u * (-0.5) + k1;
                Ok(vec![r0, r1, Jet::constant(one(), order)])
            }
            PotentialSpec::PencilV(p) => Ok(vec![-p.phi_jet(x, order), p.v_jet(x, order)?]),
            _ => Err(Error::UnsupportedVariant(format!("{} has no resolvent polynomial", self.name()))),
        }
    }

    /// R(x; λ) as a jet in x.
    pub fn r_jet(&self, x: C64, lambda: C64, order: usize) -> Result<Jet> {
        let coeffs = self.r_coeff_jets(x, order)?;
        let mut out = Jet::constant(zero(), order);
        for c in coeffs.iter().rev() {
            out = out * lambda + c;
        }
        Ok(out)
    }

    /// Q with Ψ″ = QΨ: u + λ, or λ/v² for the pencil.
    pub fn q_jet(&self, x: C64, lambda: C64, order: usize) -> Result<Jet> {
        match self {
            PotentialSpec::PencilV(p) => {
                let v = p.v_jet(x, order)?;
                Ok((&v * &v).recip() * lambda)
            }
            _ => Ok(self.potential_jet(x, order)? + lambda),
        }
    }

    /// The spectral curve. The Schrödinger variants use the monic curve of
    /// −½RR″ + ¼R′² + (u+λ)R²; the two-gap Lamé curve is the closed form
    /// (λ² − 48g₂)(λ³ − 36g₂λ + 432g₃).
    pub fn curve(&self) -> Result<HyperellipticCurve> {
        match self {
            PotentialSpec::ZeroGap { c } => HyperellipticCurve::monic(vec![-c]),
            PotentialSpec::OneGapLame { tau, .. } => {
                let inv = invariants_from_tau(tau)?;
                let shift = 4.0 * inv.eta;
                HyperellipticCurve::monic(vec![inv.e1 - shift, inv.e2 - shift, inv.e3 - shift])
            }
            PotentialSpec::TwoGapLame { tau, .. } => {
                let inv = invariants_from_tau(tau)?;
                let (g2, g3) = (inv.g2 / 16.0, inv.g3 / 64.0);
                let r = (48.0 * g2).sqrt();
                let mut bp = vec![r, -r];
                bp.extend(poly_roots(&[432.0 * g3, -36.0 * g2, zero(), one()])?);
                HyperellipticCurve::monic(bp)
            }
            PotentialSpec::NonElliptic2Gap(_) => {
                let mut last = None;
                for x in [C64::new(0.1, 0.0), C64::new(0.37, 0.0), C64::new(0.21, 0.05)] {
                    match self.mu_squared_poly(x) {
                        Ok(p) => return HyperellipticCurve::monic(poly_roots(&p)?),
                        Err(e) => last = Some(e),
                    }
                }
                Err(last.unwrap_or(Error::PoleHit("no regular reference point".into())))
            }
            PotentialSpec::PencilV(p) => p.curve(),
            _ => Err(Error::UnsupportedVariant(format!("{} has no spectral curve", self.name()))),
        }
    }

    /// Coefficients (ascending in λ) of −½RR″ + ¼R′² + (u+λ)R² at x.
    pub fn mu_squared_poly(&self, x: C64) -> Result<Vec<C64>> {
        if let PotentialSpec::PencilV(p) = self {
            return Ok(p.curve_coeffs().to_vec());
        }
        let r = self.r_coeff_jets(x, 2)?;
        let u = self.potential_jet(x, 0)?.value();
        let n = r.len();
        let mut out = vec![zero(); 2 * n];
        for i in 0..n {
            for j in 0..n {
                let (ri, rj) = (r[i].derivs(), r[j].derivs());
                out[i + j] += -0.5 * ri[0] * rj[2] + 0.25 * ri[1] * rj[1] + u * ri[0] * rj[0];
                out[i + j + 1] += ri[0] * rj[0];
            }
        }
        Ok(out)
    }
}

fn pole(e: Error) -> Error {
    match e {
        Error::PoleAtLatticePoint(m) => Error::PoleHit(m),
        other => other,
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fc = |z: C64| format_complex(z);
        match self {
            PotentialSpec::ZeroGap { c } => write!(f, "zero-gap c={}", fc(*c)),
            PotentialSpec::OneGapLame { tau, d } => write!(f, "one-gap-lame tau={} d={}", fc(tau.tau()), fc(*d)),
            PotentialSpec::TwoGapLame { tau, shift } => {
                write!(f, "two-gap-lame tau={} shift={}", fc(tau.tau()), fc(*shift))
            }
            PotentialSpec::NonElliptic2Gap(p) => {
                write!(
                    f,
                    "non-elliptic-2gap tau={} kappa={} a={} b={} u={} v={}",
                    fc(p.tau.tau()),
                    fc(p.kappa.tau()),
                    fc(p.a),
                    fc(p.b),
                    fc(p.u),
                    fc(p.v)
                )?;
                if let Some((c1, c2)) = p.novikov {
                    write!(f, " c1={} c2={}", fc(c1), fc(c2))?;
                }
                Ok(())
            }
            PotentialSpec::ModifiedLame { tau, u } => write!(f, "modified-lame tau={} u={}", fc(tau.tau()), fc(*u)),
            PotentialSpec::PencilV(p) => write!(
                f,
                "pencil-v a={} b={} c={} tau={} rho={} d={} x0={} r0={}",
                fc(p.a),
                fc(p.b),
                fc(p.c),
                fc(p.tau.tau()),
                fc(p.rho),
                fc(p.d),
                fc(p.x_ref),
                fc(p.r_ref)
            ),
            PotentialSpec::Positon { a, b, c } => write!(f, "positon a={a} b={b} c={c}"),
        }
    }
}

impl std::str::FromStr for PotentialSpec {
    type Err = Error;

    /// `<variant> key=value ...`, the format written by `Display`.
    fn from_str(line: &str) -> Result<Self> {
        let line = line.trim();
        let (name, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let pairs = parse_pairs(rest)?;
        let get = |k: &str| -> Result<C64> {
            pairs
                .iter()
                .find(|(key, _)| key == k)
                .ok_or_else(|| Error::InvalidParameter(format!("{name}: missing parameter {k}")))
                .and_then(|(_, v)| parse_complex(v))
        };
        let opt = |k: &str, default: C64| -> Result<C64> {
            if pairs.iter().any(|(key, _)| key == k) { get(k) } else { Ok(default) }
        };
        let real = |k: &str| -> Result<f64> {
            let z = get(k)?;
            if z.im != 0.0 {
                return Err(Error::InvalidParameter(format!("{name}: {k} must be real")));
            }
            Ok(z.re)
        };
        let modulus = |k: &str| get(k).and_then(Modulus::new);
        match name {
            "zero-gap" => Ok(PotentialSpec::ZeroGap { c: opt("c", zero())? }),
            "one-gap-lame" => Ok(PotentialSpec::OneGapLame { tau: modulus("tau")?, d: opt("d", zero())? }),
            "two-gap-lame" => Ok(PotentialSpec::TwoGapLame { tau: modulus("tau")?, shift: opt("shift", zero())? }),
            "non-elliptic-2gap" => {
                let novikov = match (pairs.iter().any(|(k, _)| k == "c1"), pairs.iter().any(|(k, _)| k == "c2")) {
                    (true, true) => Some((get("c1")?, get("c2")?)),
                    (false, false) => None,
                    _ => return Err(Error::InvalidParameter("c1 and c2 must be given together".into())),
                };
                Ok(PotentialSpec::NonElliptic2Gap(NonElliptic2Gap {
                    tau: modulus("tau")?,
                    kappa: modulus("kappa")?,
                    a: get("a")?,
                    b: get("b")?,
                    u: get("u")?,
                    v: get("v")?,
                    novikov,
                }))
            }
            "modified-lame" => Ok(PotentialSpec::ModifiedLame { tau: modulus("tau")?, u: get("u")? }),
            "pencil-v" => Ok(PotentialSpec::PencilV(PencilV::new(
                get("a")?,
                get("b")?,
                get("c")?,
                modulus("tau")?,
                get("rho")?,
                get("d")?,
                get("x0")?,
                get("r0")?,
            )?)),
            "positon" => Ok(PotentialSpec::Positon { a: real("a")?, b: real("b")?, c: real("c")? }),
            _ => Err(Error::InvalidParameter(format!("unknown potential variant {name:?}"))),
        }
    }
}

/// Parse a potential catalog: one record per line, `#` comments allowed.
pub fn parse_potential_catalog(text: &str) -> Result<Vec<PotentialSpec>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::parse)
        .collect()
}

/// The fixtures shipped with the library.
pub const DEFAULT_CATALOG: &str = "\
zero-gap c=0.5+0i
one-gap-lame tau=0+1.3i d=0.1+0.05i
two-gap-lame tau=0+2i shift=0+1i
non-elliptic-2gap tau=0+1i kappa=0+2i a=0.1+0.05i b=0.2-0.03i u=0-0.992585715504708i v=1+0i c1=188.51413422805738+0i c2=5783.693667792794+0i
modified-lame tau=0+1.2i u=0.31+0.17i
pencil-v a=1+0i b=0+0i c=2+0i tau=0.1+1.1i rho=0.17+0.23i d=0.3+0.2i x0=2.7+0i r0=0.3+0.1i
positon a=1 b=0.3 c=1
";

/// u^{(d)}(x), d ≤ 5.
pub fn potential_value(spec: &PotentialSpec, x: C64, d: usize) -> Result<C64> {
    if d > 5 {
        return Err(Error::InvalidParameter(format!("derivative order {d} exceeds 5")));
    }
    Ok(spec.potential_jet(x, d)?.deriv(d))
}

pub fn r_polynomial(spec: &PotentialSpec, x: C64, lambda: C64) -> Result<C64> {
    Ok(spec.r_jet(x, lambda, 0)?.value())
}

/// R‴ − 4QR′ − 2Q′R, with Q = u + λ (λ/v² for the pencil).
pub fn resolvent_residual(spec: &PotentialSpec, x: C64, lambda: C64) -> Result<Residual> {
    let r = spec.r_jet(x, lambda, 3)?.derivs();
    let q = spec.q_jet(x, lambda, 1)?.derivs();
    Ok(Residual::from_terms(&[r[3], -4.0 * q[0] * r[1], -2.0 * q[1] * r[0]]))
}

/// (−½RR″ + ¼R′² + QR²) − μ²(λ) with μ² from the variant's curve.
pub fn mu_squared_residual(spec: &PotentialSpec, x: C64, lambda: C64) -> Result<Residual> {
    let r = spec.r_jet(x, lambda, 2)?.derivs();
    let q = spec.q_jet(x, lambda, 0)?.value();
    let mu2 = spec.curve()?.eval(lambda);
    Ok(Residual::from_terms(&[-0.5 * r[0] * r[2], 0.25 * r[1] * r[1], q * r[0] * r[0], -mu2]))
}

fn novikov_terms(u: &[C64], c1: C64, c2: C64) -> [C64; 7] {
    [
        u[5],
        -10.0 * u[0] * u[3],
        -20.0 * u[1] * u[2],
        30.0 * u[0] * u[0] * u[1],
        c1 * u[3],
        -6.0 * c1 * u[0] * u[1],
        c2 * u[1],
    ]
}

/// (u⁽⁵⁾ − 10uu‴ − 20u′u″ + 30u²u′) + c1(u‴ − 6uu′) + c2u′.
pub fn novikov_residual_g2(spec: &PotentialSpec, x: C64, c1: C64, c2: C64) -> Result<Residual> {
    let u = spec.potential_jet(x, 5)?.derivs();
    Ok(Residual::from_terms(&novikov_terms(&u, c1, c2)))
}

/// Least-squares (c1, c2) for the genus-2 stationary equation over the sample points.
pub fn fit_novikov_g2(spec: &PotentialSpec, xs: &[C64]) -> Result<(C64, C64)> {
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two sample points".into()));
    }
    let mut rows = Vec::with_capacity(xs.len());
    let mut rhs = Vec::with_capacity(xs.len());
    for &x in xs {
        let u = spec.potential_jet(x, 5)?.derivs();
        let t = novikov_terms(&u, zero(), zero());
        rows.push(vec![u[3] - 6.0 * u[0] * u[1], u[1]]);
        rhs.push(-(t[0] + t[1] + t[2] + t[3]));
    }
    let c = least_squares(&rows, &rhs)?;
    Ok((c[0], c[1]))
}

/// u = 2Σγ_k − ΣE_k.
pub fn trace_formula(gammas: &[C64], curve: &HyperellipticCurve) -> Result<C64> {
    if gammas.len() != curve.genus() {
        return Err(Error::ArityMismatch { expected: curve.genus(), got: gammas.len() });
    }
    Ok(2.0 * gammas.iter().sum::<C64>() - curve.branch_points().iter().sum::<C64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{diff_fd, default_step};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn catalog() -> Vec<PotentialSpec> {
        parse_potential_catalog(DEFAULT_CATALOG).unwrap()
    }

    fn by_name(name: &str) -> PotentialSpec {
        catalog().into_iter().find(|p| p.name() == name).unwrap()
    }

    #[test]
    fn catalog_round_trip() {
        for p in catalog() {
            let back: PotentialSpec = p.to_string().parse().unwrap();
            assert_eq!(back.name(), p.name());
            if !matches!(p, PotentialSpec::PencilV(_)) {
                assert_eq!(back, p);
            }
        }
        assert!("nonsense tau=1i".parse::<PotentialSpec>().is_err());
    }

    #[test]
    fn zero_gap_is_constant() {
        let p = PotentialSpec::ZeroGap { c: c(0.7, -0.1) };
        assert_eq!(potential_value(&p, c(3.0, 1.0), 0).unwrap(), c(0.7, -0.1));
        assert_eq!(resolvent_residual(&p, c(0.3, 0.0), c(1.0, 2.0)).unwrap().value, c(0.0, 0.0));
        let z = PotentialSpec::ZeroGap { c: c(0.0, 0.0) };
        let r = mu_squared_residual(&z, c(0.3, 0.0), c(1.7, 0.2)).unwrap();
        assert!(r.value.norm() < 1e-15);
    }

    #[test]
    fn two_gap_lame_identities() {
        let p = PotentialSpec::TwoGapLame { tau: Modulus::new(c(0.0, 2.0)).unwrap(), shift: c(0.0, 0.0) };
        for k in 0..5 {
            let x = c(0.13 + 0.17 * k as f64, 0.05);
            for l in [c(1.0, 0.0), c(-2.0, 0.5), c(0.3, -1.1)] {
                assert!(resolvent_residual(&p, x, l).unwrap().relative() < 1e-9);
                assert!(mu_squared_residual(&p, x, l).unwrap().relative() < 1e-9);
            }
            let (c1, c2) = p.novikov_constants().unwrap();
            assert!(novikov_residual_g2(&p, x, c1, c2).unwrap().relative() < 1e-8);
        }
    }

    #[test]
    fn every_finite_gap_member_satisfies_the_resolvent_identities() {
        for p in catalog() {
            if p.genus().is_none() {
                continue;
            }
            let x = if matches!(p, PotentialSpec::PencilV(_)) { c(2.8, 0.0) } else { c(0.45, 0.0) };
            for l in [c(0.7, 0.1), c(-1.3, 0.4)] {
                let r = resolvent_residual(&p, x, l).unwrap();
                assert!(r.relative() < 1e-8, "{} resolvent {}", p.name(), r.relative());
                let m = mu_squared_residual(&p, x, l).unwrap();
                assert!(m.relative() < 1e-8, "{} mu2 {}", p.name(), m.relative());
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for p in catalog() {
            // Sample points and steps keep a safe distance from the nearest pole;
            // the non-elliptic fixture has complex poles about 0.15 from the real axis.
            let (x0, shrink) = match p {
                PotentialSpec::PencilV(_) => (2.8, 1.0),
                PotentialSpec::NonElliptic2Gap(_) => (0.45, 0.25),
                PotentialSpec::ModifiedLame { .. } => (0.6, 0.5),
                _ => (0.45, 1.0),
            };
            let f = |t: f64| potential_value(&p, c(t, 0.0), 0).unwrap();
            for d in 1..=3 {
                let exact = potential_value(&p, c(x0, 0.0), d).unwrap();
                let fd = diff_fd(f, x0, d, shrink * default_step(d, x0));
                assert!((exact - fd).norm() < 1e-6 * exact.norm().max(1.0), "{} d={d}: {exact} vs {fd}", p.name());
            }
        }
    }

    #[test]
    fn trace_formula_arity() {
        let cv = HyperellipticCurve::monic(vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(matches!(trace_formula(&[], &cv), Err(Error::ArityMismatch { .. })));
        let z = HyperellipticCurve::monic(vec![c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(trace_formula(&[c(0.0, 0.0)], &z).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn positon_has_no_resolvent() {
        let p = by_name("positon");
        assert!(matches!(r_polynomial(&p, c(0.1, 0.0), c(1.0, 0.0)), Err(Error::UnsupportedVariant(_))));
        assert!(potential_value(&p, c(0.4, 0.0), 2).unwrap().re.is_finite());
    }
}
