//! Solutions Ψ of Ψ″ = (u + λ)Ψ: the quadrature form
//! Ψ± = exp ∫ (R_x ± 2μ)/(2R) dx, the theta forms of the elliptic examples,
//! Wronskians and the operator factorizations built from R.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::curves::{Sheet, SpectralPoint};
use crate::elliptic::{invariants_from_tau, wp_inverse, zeta_sigma, LambdaDivisor};
use crate::error::{Error, Result};
use crate::numerics::{find_root, quad_adaptive, Jet, Residual, Tolerance};
use crate::potentials::{LinearExpDivisor, NonElliptic2Gap, PencilV, PotentialSpec};
use crate::theta::{jacobi_theta_jet, theta_constants, Modulus};

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn nan() -> C64 {
    C64::new(f64::NAN, f64::NAN)
}

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Which construction produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsiForm {
    Quadrature,
    /// θ₃ quotient of the one-gap Lamé potential.
    OneGapTheta,
    /// Derivative of Λ/θ₁ for the two-gap Lamé potential.
    TwoGapLame,
    /// Derivative of Λ/θ₁ for the modified Lamé potential.
    ModifiedLame,
    /// √v·Λ(r)/θ₁(r) for the pencil Ψ″ = (λ/v²)Ψ.
    Pencil,
    /// Θ(xU + D − W)e^{kx}/Θ(xU + D) with fitted W and k.
    ThetaQuotient,
}

impl PsiForm {
    pub fn tag(self) -> &'static str {
        match self {
            PsiForm::Quadrature => "quadrature",
            PsiForm::OneGapTheta => "one-gap-theta",
            PsiForm::TwoGapLame => "two-gap-lame",
            PsiForm::ModifiedLame => "modified-lame",
            PsiForm::Pencil => "pencil",
            PsiForm::ThetaQuotient => "theta-quotient",
        }
    }
}

/// Ψ and Ψ′ at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiSample {
    pub x: C64,
    pub psi: C64,
    pub psi_x: C64,
}

/// Base point and optional waypoints of the quadrature path. The path runs
/// x0 → via… → x in straight segments, detouring around zeros of R.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureBase {
    pub x0: C64,
    pub via: Vec<C64>,
}

impl QuadratureBase {
    pub fn new(x0: C64) -> Self {
        Self { x0, via: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Quadrature { base: QuadratureBase, sign: f64, mu: C64 },
    OneGap { tau: Modulus, d: C64, v: C64, slope: C64 },
    LambdaQuotient { div: LambdaDivisor, shift: C64 },
    Pencil { p: PencilV, ut: C64 },
    ThetaQuotient { num: LinearExpDivisor, den: LinearExpDivisor },
}

/// A solution of Ψ″ = QΨ together with its spectral data.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSolution {
    spec: PotentialSpec,
    lambda: C64,
    sheet: Sheet,
    mu: Option<C64>,
    normalization: C64,
    form: PsiForm,
    kind: Kind,
}

impl PsiSolution {
    /// Ψ± = exp ∫_{x0}^{x} (R_x ± 2μ)/(2R) dx, so that Ψ(x0) = 1.
    pub fn quadrature(spec: &PotentialSpec, lambda: C64, sheet: Sheet, base: QuadratureBase) -> Result<Self> {
        let mu = spec.curve()?.mu(lambda, sheet).mu;
        let r0 = spec.r_jet(base.x0, lambda, 0)?.value();
        if r0.norm() == 0.0 {
            return Err(Error::ZeroOfR(format!("base point {}", base.x0)));
        }
        Ok(Self {
            spec: spec.clone(),
            lambda,
            sheet,
            mu: Some(mu),
            normalization: 1.0 / r0.sqrt(),
            form: PsiForm::Quadrature,
            kind: Kind::Quadrature { base, sign: 1.0, mu },
        })
    }

    /// Theta-function form for the one-gap Lamé, two-gap Lamé and modified Lamé
    /// potentials. For the modified Lamé potential λ must be 0.
    pub fn theta(spec: &PotentialSpec, point: &SpectralPoint) -> Result<Self> {
        let lambda = point.lambda;
        match spec {
            PotentialSpec::OneGapLame { tau, d } => {
                // u = 2℘(x + D + ½ + τ/2) + 4η and λ = ℘(v) − 4η on the lattice (1, τ).
                let eta = theta_constants(tau)?.eta;
                let v = wp_inverse(lambda + 4.0 * eta, tau, Some(-2.0 * point.mu))?;
                let slope = zeta_sigma(v, tau)?.zeta - 2.0 * eta * v;
                Ok(Self::theta_parts(spec, point, PsiForm::OneGapTheta, Kind::OneGap { tau: *tau, d: *d, v, slope }))
            }
            PotentialSpec::TwoGapLame { tau, shift } => {
                let inv = invariants_from_tau(tau)?;
                let (g2, g3) = (inv.g2 / 16.0, inv.g3 / 64.0);
                let den = 36.0 * lambda * lambda - 1728.0 * g2;
                let hden = 3.0 * lambda * lambda - 144.0 * g2;
                if den.norm() == 0.0 || hden.norm() == 0.0 {
                    return Err(Error::DegenerateU(format!("λ = {lambda}")));
                }
                // ℘(2u) on half-periods (1, τ) is ℘(u)/4 on the lattice (1, τ).
                let target = 4.0 * (lambda * lambda * lambda + 1728.0 * g3) / den;
                let u = wp_inverse(target, tau, None)?;
                let h = 2.0 * point.mu / hden;
                let make = |u: C64| -> Result<Self> {
                    let div = LambdaDivisor::new(u, *tau, h)?;
                    Ok(Self::theta_parts(spec, point, PsiForm::TwoGapLame, Kind::LambdaQuotient { div, shift: *shift }))
                };
                // Only one of ±u pairs with this h; pick it by the equation itself.
                let (a, b) = (make(u)?, make(-u)?);
                let (ra, rb) = (a.probe_residual()?, b.probe_residual()?);
                Ok(if ra <= rb { a } else { b })
            }
            PotentialSpec::ModifiedLame { tau, u } => {
                if lambda.norm() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "the modified Lamé solution exists at λ = 0 only, got {lambda}"
                    )));
                }
                // h = 4ζ(u) − 2ζ(2u) with ζ of half-periods (1, τ).
                let z = |w: C64| zeta_sigma(w, tau).map(|s| s.zeta);
                let h = 2.0 * z(u / 2.0)? - z(*u)?;
                let div = LambdaDivisor::new(*u, *tau, h)?;
                Ok(Self::theta_parts(spec, point, PsiForm::ModifiedLame, Kind::LambdaQuotient { div, shift: zero() }))
            }
            _ => Err(Error::UnsupportedVariant(format!("{} has no theta-form solution", spec.name()))),
        }
    }

    fn theta_parts(spec: &PotentialSpec, point: &SpectralPoint, form: PsiForm, kind: Kind) -> Self {
        let mu = match spec {
            PotentialSpec::ModifiedLame { .. } => None,
            _ => Some(point.mu),
        };
        Self { spec: spec.clone(), lambda: point.lambda, sheet: point.sheet, mu, normalization: C64::new(1.0, 0.0), form, kind }
    }

    /// Ψ = √v·θ₁(r + ũ)/θ₁(r)·e^{−(θ₁′(ũ)/θ₁(ũ))r} for the pencil, with ũ fixed by
    /// λ = (℘(2ũ) − ℘(2ϱ))/s² and the sheet of μ.
    pub fn pencil(p: &PencilV, lambda: C64, sheet: Sheet) -> Result<Self> {
        let spec = PotentialSpec::PencilV(*p);
        let mu = spec.curve()?.mu(lambda, sheet).mu;
        let s = p.scale_s();
        let (e2, _) = p.integrals();
        let target = 4.0 * s * s * (lambda + e2);
        let ut = wp_inverse(target, &p.tau, Some(16.0 * s * s * s * mu))
            .map_err(|e| Error::InversionFailed(format!("ũ for λ = {lambda}: {e}")))?;
        Ok(Self {
            spec,
            lambda,
            sheet,
            mu: Some(mu),
            normalization: C64::new(1.0, 0.0),
            form: PsiForm::Pencil,
            kind: Kind::Pencil { p: *p, ut },
        })
    }

    /// Ψ = num/den for two linearly exponential divisors.
    pub fn theta_quotient(spec: &PotentialSpec, lambda: C64, sheet: Sheet, num: LinearExpDivisor, den: LinearExpDivisor) -> Self {
        let mu = spec.curve().ok().map(|c| c.mu(lambda, sheet).mu);
        Self {
            spec: spec.clone(),
            lambda,
            sheet,
            mu,
            normalization: C64::new(1.0, 0.0),
            form: PsiForm::ThetaQuotient,
            kind: Kind::ThetaQuotient { num, den },
        }
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn sheet(&self) -> Sheet {
        self.sheet
    }

    /// μ(λ) on the solution's sheet, when the potential has a curve.
    pub fn mu(&self) -> Option<C64> {
        self.mu
    }

    /// The constant c with Ψ = c·√R·exp(±μ∫dx/R) for quadrature solutions; 1 otherwise.
    pub fn normalization(&self) -> C64 {
        self.normalization
    }

    pub fn form(&self) -> PsiForm {
        self.form
    }

    /// Jet of Ψ at x.
    pub fn jet(&self, x: C64, order: usize) -> Result<Jet> {
        match &self.kind {
            Kind::Quadrature { base, sign, mu } => {
                let value = self.quadrature_value(base, *sign, *mu, x)?;
                let ell = log_derivative_jet(&self.spec, self.lambda, *sign * *mu, x, order.max(1))?;
                Ok(ell.integrate(zero()).exp().scale(value).truncate(order))
            }
            Kind::OneGap { tau, d, v, slope } => {
                let num = jacobi_theta_jet(3, x + d - v, tau, order)?;
                let den = jacobi_theta_jet(3, x + d, tau, order)?;
                check_den(den.value(), x)?;
                let e = (Jet::variable(x, order) * *slope).exp();
                Ok(&(&num / &den) * &e)
            }
            Kind::LambdaQuotient { div, shift } => {
                let y = x + shift;
                let l = div.jet(y, order + 1)?;
                let t = jacobi_theta_jet(1, y, &div.tau, order + 1)?;
                check_den(t.value(), x)?;
                Ok((&l / &t).differentiate())
            }
            Kind::Pencil { p, ut } => {
                let r = p.r_jet(x, order)?;
                let div = LambdaDivisor::new(-*ut, p.tau, zero())?;
                let l = div.jet(r.value(), order)?;
                let t = jacobi_theta_jet(1, r.value(), &p.tau, order)?;
                check_den(t.value(), x)?;
                let g = r.compose(&(&l / &t).derivs());
                let v = p.v_jet(x, order)?;
                Ok(&v.sqrt() * &g)
            }
            Kind::ThetaQuotient { num, den } => {
                let d = den.jet(x, order)?;
                check_den(d.value(), x)?;
                Ok(&num.jet(x, order)? / &d)
            }
        }
    }

    pub fn sample(&self, x: C64) -> Result<PsiSample> {
        let j = self.jet(x, 1)?;
        Ok(PsiSample { x, psi: j.value(), psi_x: j.deriv(1) })
    }

    /// Ψ″ − QΨ with Q = u + λ (λ/v² for the pencil).
    pub fn schrodinger_residual(&self, x: C64) -> Result<Residual> {
        let psi = self.jet(x, 2)?;
        let q = self.spec.q_jet(x, self.lambda, 0)?.value();
        Ok(Residual::from_terms(&[psi.deriv(2), -q * psi.value()]))
    }

    fn probe_residual(&self) -> Result<f64> {
        let mut last = None;
        for x in [C64::new(0.31, 0.07), C64::new(0.17, -0.13), C64::new(0.43, 0.21)] {
            match self.schrodinger_residual(x) {
                Ok(r) => return Ok(r.relative()),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or(Error::PoleHit("no regular probe point".into())))
    }

    fn quadrature_value(&self, base: &QuadratureBase, sign: f64, mu: C64, x: C64) -> Result<C64> {
        let spec = &self.spec;
        let lambda = self.lambda;
        let integral = integrate_path(spec, lambda, base, x, |z| {
            let r = spec.r_jet(z, lambda, 1)?;
            Ok((r.deriv(1) + 2.0 * sign * mu) / (2.0 * r.value()))
        })?;
        Ok(integral.exp())
    }
}

fn check_den(v: C64, x: C64) -> Result<()> {
    if v.norm() == 0.0 || !finite(v) {
        return Err(Error::ThetaZeroDenominator(format!("x = {x}")));
    }
    Ok(())
}

/// (R_x + 2m)/(2R) as a jet of order `order − 1`.
fn log_derivative_jet(spec: &PotentialSpec, lambda: C64, m: C64, x: C64, order: usize) -> Result<Jet> {
    let r = spec.r_jet(x, lambda, order)?;
    if r.value().norm() == 0.0 {
        return Err(Error::ZeroOfR(format!("x = {x}")));
    }
    let num = r.differentiate() + 2.0 * m;
    Ok(&num / &r.truncate(order - 1) * 0.5)
}

enum Piece {
    Line(C64, C64),
    Arc { center: C64, radius: f64, from: f64, to: f64 },
}

/// Zeros of R(·; λ) within `radius` of the segment a → b, as (t, zero) pairs sorted by t.
fn zeros_near_segment(spec: &PotentialSpec, lambda: C64, a: C64, b: C64, radius: f64) -> Vec<(f64, C64)> {
    const N: usize = 48;
    let d = b - a;
    let len = d.norm();
    let r_at = |z: C64| spec.r_jet(z, lambda, 0).map(|j| j.value()).unwrap_or(nan());
    let mags: Vec<f64> = (0..=N).map(|i| r_at(a + d * (i as f64 / N as f64)).norm()).collect();
    let tol = Tolerance::new(1e-14 * len.max(1.0), 1e-14, 200).expect("valid tolerance");
    let mut out: Vec<(f64, C64)> = Vec::new();
    for i in 0..=N {
        let left = if i == 0 { f64::INFINITY } else { mags[i - 1] };
        let right = if i == N { f64::INFINITY } else { mags[i + 1] };
        if !(mags[i] <= left && mags[i] <= right) {
            continue;
        }
        let Ok(z) = find_root(r_at, a + d * (i as f64 / N as f64), &tol) else {
            continue;
        };
        let t = ((z - a) * d.conj()).re / (len * len);
        let off = ((z - a) - d * t).norm();
        if off < radius && t > -radius / len && t < 1.0 + radius / len && out.iter().all(|(_, w)| (w - z).norm() > 1e-9) {
            out.push((t, z));
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

fn segment_pieces(spec: &PotentialSpec, lambda: C64, a: C64, b: C64) -> Result<Vec<Piece>> {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        return Ok(Vec::new());
    }
    let radius = 1e-2 * len;
    let zeros = zeros_near_segment(spec, lambda, a, b, radius);
    let mut pieces = Vec::new();
    let mut start = a;
    let mut t_prev = 0.0;
    for (t, z) in zeros {
        let off = ((z - a) - d * t).norm();
        let half = (radius * radius - off * off).sqrt() / len;
        let (t0, t1) = (t - half, t + half);
        if t0 <= t_prev || t1 >= 1.0 || (z - a).norm() < radius || (z - b).norm() < radius {
            return Err(Error::ZeroOfROnPath(format!("{z}")));
        }
        let (p0, p1) = (a + d * t0, a + d * t1);
        let from = (p0 - z).arg();
        let mut to = (p1 - z).arg();
        while to - from > PI {
            to -= 2.0 * PI;
        }
        while from - to > PI {
            to += 2.0 * PI;
        }
        pieces.push(Piece::Line(start, p0));
        pieces.push(Piece::Arc { center: z, radius, from, to });
        start = p1;
        t_prev = t1;
    }
    pieces.push(Piece::Line(start, b));
    Ok(pieces)
}

/// ∫ f along the base path from x0 to x, detouring around zeros of R.
fn integrate_path<F>(spec: &PotentialSpec, lambda: C64, base: &QuadratureBase, x: C64, mut f: F) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let tol = Tolerance::new(1e-13, 1e-12, 200_000)?;
    let mut vertices = vec![base.x0];
    vertices.extend(base.via.iter().copied());
    vertices.push(x);
    let mut total = zero();
    let mut err: Option<Error> = None;
    let mut eval = |z: C64| match f(z) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            nan()
        }
    };
    for w in vertices.windows(2) {
        for piece in segment_pieces(spec, lambda, w[0], w[1])? {
            let part = match piece {
                Piece::Line(p, q) => quad_adaptive(|t| eval(p + (q - p) * t) * (q - p), 0.0, 1.0, &tol),
                Piece::Arc { center, radius, from, to } => quad_adaptive(
                    |t| {
                        let th = from + (to - from) * t;
                        let e = C64::from_polar(radius, th);
                        eval(center + e) * C64::new(0.0, 1.0) * e * (to - from)
                    },
                    0.0,
                    1.0,
                    &tol,
                ),
            };
            match part {
                Ok(v) => total += v,
                Err(e) => return Err(err.take().unwrap_or(e)),
            }
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

pub fn psi_quadrature(spec: &PotentialSpec, lambda: C64, sheet: Sheet, base: &QuadratureBase, x: C64) -> Result<PsiSample> {
    PsiSolution::quadrature(spec, lambda, sheet, base.clone())?.sample(x)
}

pub fn psi_theta(spec: &PotentialSpec, point: &SpectralPoint, x: C64) -> Result<PsiSample> {
    PsiSolution::theta(spec, point)?.sample(x)
}

/// Ψ of the pencil at x.
pub fn psi_pencil_v(p: &PencilV, lambda: C64, sheet: Sheet, x: C64) -> Result<C64> {
    Ok(PsiSolution::pencil(p, lambda, sheet)?.sample(x)?.psi)
}

/// Ψ⁺_xΨ⁻ − Ψ⁺Ψ⁻_x.
pub fn wronskian(plus: &PsiSolution, minus: &PsiSolution, x: C64) -> Result<C64> {
    let (p, m) = (plus.sample(x)?, minus.sample(x)?);
    Ok(p.psi_x * m.psi - p.psi * m.psi_x)
}

/// The pair {√(R/R₀), √(R/R₀)·∫R₀/R dx} at a branch point λ = E, both equal
/// to 1 at x0 with unit Wronskian.
pub fn degenerate_basis(spec: &PotentialSpec, e: C64, base: &QuadratureBase, x: C64) -> Result<(PsiSample, PsiSample)> {
    let r0 = spec.r_jet(base.x0, e, 0)?.value();
    if r0.norm() == 0.0 {
        return Err(Error::ZeroOfR(format!("base point {}", base.x0)));
    }
    let half_log = integrate_path(spec, e, base, x, |z| {
        let r = spec.r_jet(z, e, 1)?;
        Ok(r.deriv(1) / (2.0 * r.value()))
    })?;
    let inv = integrate_path(spec, e, base, x, |z| Ok(r0 / spec.r_jet(z, e, 0)?.value()))?;
    let r = spec.r_jet(x, e, 1)?;
    let psi1 = half_log.exp();
    let psi1_x = psi1 * r.deriv(1) / (2.0 * r.value());
    let first = PsiSample { x, psi: psi1, psi_x: psi1_x };
    let second = PsiSample { x, psi: psi1 * inv, psi_x: psi1_x * inv + psi1 * r0 / r.value() };
    Ok((first, second))
}

fn mu_on(spec: &PotentialSpec, lambda: C64, sheet: Sheet) -> Result<C64> {
    Ok(spec.curve()?.mu(lambda, sheet).mu)
}

/// (∂ + b)(∂ − b)f − (f″ − Qf) with b = ½R_x/R ± μ/R, for the jet f (order ≥ 2) of a test function at x.
pub fn factorization_residual(spec: &PotentialSpec, lambda: C64, sheet: Sheet, f: &Jet, x: C64) -> Result<Residual> {
    if f.order() < 2 {
        return Err(Error::InvalidParameter("test function jet needs order 2".into()));
    }
    let mu = mu_on(spec, lambda, sheet)?;
    let b = log_derivative_jet(spec, lambda, mu, x, 2)?;
    let g = &f.differentiate().truncate(1) - &(&b * &f.truncate(1));
    let lhs = g.deriv(1) + b.value() * g.value();
    let q = spec.q_jet(x, lambda, 0)?.value();
    Ok(Residual::from_terms(&[lhs, -f.deriv(2), q * f.value()]))
}

/// (∂ + a)∂(∂ − a)f − (f‴ − 4Qf′ − 2Q′f) with a = (P_x ± 2μ)/P, for the jet f (order ≥ 3).
pub fn factorization3_residual(spec: &PotentialSpec, lambda: C64, sheet: Sheet, f: &Jet, x: C64) -> Result<Residual> {
    if f.order() < 3 {
        return Err(Error::InvalidParameter("test function jet needs order 3".into()));
    }
    let mu = mu_on(spec, lambda, sheet)?;
    let a = log_derivative_jet(spec, lambda, mu, x, 3)? * 2.0;
    let g = &f.differentiate().truncate(2) - &(&a * &f.truncate(2));
    let gx = g.differentiate();
    let lhs = gx.deriv(1) + a.value() * gx.value();
    let q = spec.q_jet(x, lambda, 1)?.derivs();
    Ok(Residual::from_terms(&[lhs, -f.deriv(3), 4.0 * q[0] * f.deriv(1), 2.0 * q[1] * f.value()]))
}

/// R‴ − 4QR′ − 2Q′R for a jet of R (order ≥ 3) at x.
pub fn resolvent_equation_residual(spec: &PotentialSpec, lambda: C64, x: C64, r: &Jet) -> Result<Residual> {
    if r.order() < 3 {
        return Err(Error::InvalidParameter("resolvent jet needs order 3".into()));
    }
    let q = spec.q_jet(x, lambda, 1)?.derivs();
    Ok(Residual::from_terms(&[r.deriv(3), -4.0 * q[0] * r.deriv(1), -2.0 * q[1] * r.value()]))
}

/// Jets of the solution triple R₁ = P, R₂ = Ψ₊², R₃ = P²/Ψ₊² of the resolvent
/// equation, with Ψ₊ the quadrature solution from `base`.
pub fn hermite_pencil_basis(spec: &PotentialSpec, lambda: C64, base: &QuadratureBase, x: C64, order: usize) -> Result<[Jet; 3]> {
    if spec.curve()?.mu(lambda, Sheet::Plus).ramified {
        return Err(Error::InvalidParameter(format!("λ = {lambda} is a branch point")));
    }
    let p = spec.r_jet(x, lambda, order)?;
    let psi = PsiSolution::quadrature(spec, lambda, Sheet::Plus, base.clone())?.jet(x, order)?;
    let r2 = &psi * &psi;
    let r3 = &(&p * &p) / &r2;
    Ok([p, r2, r3])
}

/// W and k of Ψ = Θ(xU + D − W)e^{kx}/Θ(xU + D) for the non-elliptic
/// potential at one λ, found by matching the Schrödinger equation at probe points.
#[derive(Debug, Clone, PartialEq)]
pub struct NonEllipticPsiFit {
    pub lambda: C64,
    pub sheet: Sheet,
    pub w: [C64; 2],
    pub k: C64,
    /// Largest relative Schrödinger residual over the probe points.
    pub probe_residual: f64,
}

fn nonelliptic_divisors(p: &NonElliptic2Gap, w: [C64; 2], k: C64) -> Result<(LinearExpDivisor, LinearExpDivisor)> {
    let den = p.reduced_divisor()?;
    let mut num = den.clone();
    num.d_vec = vec![den.d_vec[0] - w[0], den.d_vec[1] - w[1]];
    num.h = k;
    Ok((num, den))
}

fn nonelliptic_solution(p: &NonElliptic2Gap, lambda: C64, sheet: Sheet, w: [C64; 2], k: C64) -> Result<PsiSolution> {
    let (num, den) = nonelliptic_divisors(p, w, k)?;
    Ok(PsiSolution::theta_quotient(&PotentialSpec::NonElliptic2Gap(*p), lambda, sheet, num, den))
}

/// Probe data that does not depend on the trial parameters.
struct FitProbes {
    num: LinearExpDivisor,
    base_d: Vec<C64>,
    pts: Vec<C64>,
    den: Vec<Jet>,
    u: Vec<C64>,
}

impl FitProbes {
    fn new(p: &NonElliptic2Gap, probes: &[C64]) -> Result<Self> {
        // Midpoints double as extra equations, which rules out spurious exact fits.
        let mut pts = probes.to_vec();
        pts.extend(probes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        let spec = PotentialSpec::NonElliptic2Gap(*p);
        let den_div = p.reduced_divisor()?;
        let mut den = Vec::with_capacity(pts.len());
        let mut u = Vec::with_capacity(pts.len());
        for &x in &pts {
            let d = den_div.jet(x, 2)?;
            check_den(d.value(), x)?;
            den.push(d);
            u.push(spec.potential_jet(x, 0)?.value());
        }
        Ok(Self { base_d: den_div.d_vec.clone(), num: den_div, pts, den, u })
    }

    /// (Ψ″, (u+λ)Ψ) at each point for v = (W₁, W₂, k).
    fn terms(&self, lambda: C64, v: &[C64]) -> Vec<(C64, C64)> {
        let mut num = self.num.clone();
        num.d_vec = vec![self.base_d[0] - v[0], self.base_d[1] - v[1]];
        num.h = v[2];
        self.pts
            .iter()
            .zip(self.den.iter().zip(&self.u))
            .map(|(&x, (d, u))| match num.jet(x, 2) {
                Ok(n) => {
                    let psi = &n / d;
                    (psi.deriv(2), (u + lambda) * psi.value())
                }
                Err(_) => (nan(), nan()),
            })
            .collect()
    }
}

/// Largest Schrödinger residual over the probes relative to the largest term.
fn terms_residual(terms: &[(C64, C64)]) -> f64 {
    let scale = terms.iter().map(|(a, b)| a.norm().max(b.norm())).fold(0.0, f64::max);
    let r = terms.iter().map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale.max(1e-300);
    if r.is_finite() { r } else { f64::INFINITY }
}

/// Damped Gauss-Newton that returns its best iterate instead of failing.
fn gauss_newton<F: FnMut(&[C64]) -> Vec<C64>>(mut f: F, guess: &[C64], iters: usize) -> Vec<C64> {
    let norm = |r: &[C64]| {
        let s = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if s.is_finite() { s } else { f64::INFINITY }
    };
    let mut v = guess.to_vec();
    let mut fv = f(&v);
    let mut nv = norm(&fv);
    for _ in 0..iters {
        if !nv.is_finite() || nv < 1e-15 {
            break;
        }
        let mut jac = vec![vec![zero(); v.len()]; fv.len()];
        for j in 0..v.len() {
            let h = 1e-7 * v[j].norm().max(1.0);
            let (mut a, mut b) = (v.clone(), v.clone());
            a[j] += h;
            b[j] -= h;
            let (fa, fb) = (f(&a), f(&b));
            for i in 0..fv.len() {
                jac[i][j] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        let Ok(step) = crate::numerics::least_squares(&jac, &fv) else {
            break;
        };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-3 {
            let w: Vec<C64> = v.iter().zip(&step).map(|(a, s)| a - s * t).collect();
            let fw = f(&w);
            let nw = norm(&fw);
            if nw < nv {
                (v, fv, nv, moved) = (w, fw, nw, true);
                break;
            }
            t *= 0.5;
        }
        let size: f64 = step.iter().map(|s| s.norm()).fold(0.0, f64::max) * t;
        if !moved || size < 1e-15 * (1.0 + v.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
            break;
        }
    }
    v
}

/// Fit (W, k) at λ by continuation from large |λ|, where W ≈ U/k and k ≈ ±√λ.
/// The probes are augmented by their midpoints.
pub fn fit_nonelliptic_psi(p: &NonElliptic2Gap, lambda: C64, sheet: Sheet, probes: &[C64]) -> Result<NonEllipticPsiFit> {
    if probes.len() < 3 {
        return Err(Error::InvalidParameter("need at least three probe points".into()));
    }
    const ACCEPT: f64 = 1e-10;
    let fp = FitProbes::new(p, probes)?;
    let u_vec = p.reduced_divisor()?.u_vec;
    let solve = |lam: C64, guess: &[C64]| -> Option<Vec<C64>> {
        // Scales frozen at the guess keep the equations analytic in the unknowns.
        let scales: Vec<f64> = fp.terms(lam, guess).iter().map(|(a, b)| a.norm().max(b.norm())).collect();
        let top = scales.iter().copied().fold(0.0, f64::max);
        if !(top.is_finite() && top > 0.0) {
            return None;
        }
        let eqs = |v: &[C64]| -> Vec<C64> {
            fp.terms(lam, v).iter().zip(&scales).map(|((a, b), s)| (a - b) / s.max(1e-3 * top)).collect()
        };
        let mut v = gauss_newton(eqs, guess, 25);
        // Integer shifts of W leave Θ unchanged.
        for w in v.iter_mut().take(2) {
            w.re -= w.re.round();
        }
        (terms_residual(&fp.terms(lam, &v)) < ACCEPT).then_some(v)
    };
    let continuation = |start: f64| -> Result<Vec<C64>> {
        let theta0 = if lambda.norm() < start { (lambda.norm() / start).sqrt().max(1e-3) } else { 1.0 };
        let lam_at = |th: f64| lambda / (th * th);
        let k0 = sheet.sign() * lam_at(theta0).sqrt();
        // W ≈ U/k near the point at infinity; the opposite sign is a fallback.
        let mut v = [1.0, -1.0]
            .into_iter()
            .find_map(|s| solve(lam_at(theta0), &[s * u_vec[0] / k0, s * u_vec[1] / k0, k0]))
            .ok_or_else(|| Error::InversionFailed(format!("no start for λ = {lambda}")))?;
        let (mut th, mut prev): (f64, Option<(f64, Vec<C64>)>) = (theta0, None);
        let mut dth = (1.0 - theta0) / 40.0;
        while th < 1.0 {
            let next = (th + dth).min(1.0);
            // Secant predictor from the last two accepted points.
            let guess: Vec<C64> = match &prev {
                Some((tp, vp)) => v.iter().zip(vp).map(|(a, b)| a + (a - b) * ((next - th) / (th - tp))).collect(),
                None => v.clone(),
            };
            let step = solve(lam_at(next), &guess).filter(|w| {
                let jump: f64 = w.iter().zip(&guess).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                jump < 0.1 * (1.0 + v[2].norm())
            });
            match step {
                Some(w) => {
                    prev = Some((th, std::mem::replace(&mut v, w)));
                    th = next;
                    dth *= 1.5;
                }
                None => {
                    dth *= 0.5;
                    if dth < 1e-9 {
                        return Err(Error::InversionFailed(format!("continuation stalled at λ = {}", lam_at(th))));
                    }
                }
            }
        }
        Ok(v)
    };
    let mut outcome = continuation(1e4);
    for start in [3e3, 3e4] {
        if outcome.is_ok() {
            break;
        }
        outcome = continuation(start);
    }
    let v = outcome?;
    let sol = nonelliptic_solution(p, lambda, sheet, [v[0], v[1]], v[2])?;
    let mut probe_residual = 0.0f64;
    for &x in probes {
        probe_residual = probe_residual.max(sol.schrodinger_residual(x)?.relative());
    }
    Ok(NonEllipticPsiFit { lambda, sheet, w: [v[0], v[1]], k: v[2], probe_residual })
}

/// Ψ of the non-elliptic potential from a fit made at the same λ.
pub fn psi_nonelliptic(p: &NonElliptic2Gap, lambda: C64, fit: Option<&NonEllipticPsiFit>, x: C64) -> Result<PsiSample> {
    let fit = fit.ok_or(Error::FitNotProvided)?;
    if (fit.lambda - lambda).norm() > 1e-12 * lambda.norm().max(1.0) {
        return Err(Error::InvalidParameter(format!("fit was made at λ = {}, not {lambda}", fit.lambda)));
    }
    nonelliptic_solution(p, lambda, fit.sheet, fit.w, fit.k)?.sample(x)
}

/// The solution object behind [`psi_nonelliptic`].
pub fn nonelliptic_psi_solution(p: &NonElliptic2Gap, fit: &NonEllipticPsiFit) -> Result<PsiSolution> {
    nonelliptic_solution(p, fit.lambda, fit.sheet, fit.w, fit.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{default_step, diff_fd};
    use crate::potentials::{parse_potential_catalog, DEFAULT_CATALOG};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn by_name(name: &str) -> PotentialSpec {
        parse_potential_catalog(DEFAULT_CATALOG).unwrap().into_iter().find(|p| p.name() == name).unwrap()
    }

    fn point(spec: &PotentialSpec, lambda: C64, sheet: Sheet) -> SpectralPoint {
        spec.curve().unwrap().mu(lambda, sheet)
    }

    #[test]
    fn zero_gap_exponentials() {
        let spec = PotentialSpec::ZeroGap { c: zero() };
        let lambda = c(1.3, 0.4);
        let base = QuadratureBase::new(c(0.2, 0.0));
        for sheet in [Sheet::Plus, Sheet::Minus] {
            let s = psi_quadrature(&spec, lambda, sheet, &base, c(1.1, 0.0)).unwrap();
            let expect = (sheet.sign() * lambda.sqrt() * 0.9).exp();
            assert!((s.psi - expect).norm() < 1e-12 * expect.norm());
        }
        let p = PsiSolution::quadrature(&spec, lambda, Sheet::Plus, base.clone()).unwrap();
        let m = PsiSolution::quadrature(&spec, lambda, Sheet::Minus, base).unwrap();
        let w = wronskian(&p, &m, c(0.7, 0.0)).unwrap();
        assert!((w - 2.0 * lambda.sqrt()).norm() < 1e-12);
        assert_eq!(wronskian(&p, &p, c(0.7, 0.0)).unwrap(), zero());
    }

    #[test]
    fn two_gap_quadrature_solves_equation() {
        let spec = by_name("two-gap-lame");
        let base = QuadratureBase::new(c(0.3, 0.0));
        for (lambda, x) in [(c(1.7, 0.6), c(0.55, 0.0)), (c(-3.0, 2.0), c(0.8, 0.1)), (c(20.0, -1.0), c(0.1, 0.0))] {
            let sol = PsiSolution::quadrature(&spec, lambda, Sheet::Plus, base.clone()).unwrap();
            let r = sol.schrodinger_residual(x).unwrap();
            assert!(r.relative() < 1e-8, "λ = {lambda}: {}", r.relative());
        }
    }

    #[test]
    fn quadrature_product_is_r_ratio() {
        let spec = by_name("two-gap-lame");
        let base = QuadratureBase::new(c(0.3, 0.0));
        let lambda = c(2.5, 1.5);
        let x = c(0.9, 0.0);
        let p = psi_quadrature(&spec, lambda, Sheet::Plus, &base, x).unwrap();
        let m = psi_quadrature(&spec, lambda, Sheet::Minus, &base, x).unwrap();
        let ratio = spec.r_jet(x, lambda, 0).unwrap().value() / spec.r_jet(base.x0, lambda, 0).unwrap().value();
        assert!((p.psi * m.psi - ratio).norm() < 1e-10 * ratio.norm());
    }

    #[test]
    fn derivative_agrees_with_differences() {
        let spec = by_name("two-gap-lame");
        let sol = PsiSolution::theta(&spec, &point(&spec, c(1.2, 0.5), Sheet::Plus)).unwrap();
        let x = 0.45;
        let s = sol.sample(c(x, 0.0)).unwrap();
        let fd = diff_fd(|t| sol.sample(c(t, 0.0)).unwrap().psi, x, 1, default_step(1, x));
        assert!((fd - s.psi_x).norm() < 1e-6 * s.psi_x.norm().max(1.0));
    }

    #[test]
    fn two_gap_theta_form() {
        let spec = by_name("two-gap-lame");
        for (lambda, sheet) in [(c(1.2, 0.5), Sheet::Plus), (c(-4.0, 1.0), Sheet::Minus), (c(9.0, -3.0), Sheet::Plus)] {
            let sol = PsiSolution::theta(&spec, &point(&spec, lambda, sheet)).unwrap();
            for x in [c(0.2, 0.0), c(0.65, 0.0)] {
                let r = sol.schrodinger_residual(x).unwrap();
                assert!(r.relative() < 1e-8, "λ = {lambda}: {}", r.relative());
            }
        }
    }

    #[test]
    fn one_gap_theta_form() {
        let spec = by_name("one-gap-lame");
        for (lambda, sheet) in [(c(0.7, 0.3), Sheet::Plus), (c(-2.0, 0.5), Sheet::Minus)] {
            let sol = PsiSolution::theta(&spec, &point(&spec, lambda, sheet)).unwrap();
            for x in [c(0.2, 0.0), c(0.65, 0.0)] {
                let r = sol.schrodinger_residual(x).unwrap();
                assert!(r.relative() < 1e-8, "λ = {lambda}: {}", r.relative());
            }
        }
    }

    #[test]
    fn quadrature_and_theta_are_proportional() {
        for name in ["one-gap-lame", "two-gap-lame"] {
            let spec = by_name(name);
            let lambda = c(1.1, 0.4);
            for sheet in [Sheet::Plus, Sheet::Minus] {
                let q = PsiSolution::quadrature(&spec, lambda, sheet, QuadratureBase::new(c(0.25, 0.0))).unwrap();
                let t = PsiSolution::theta(&spec, &point(&spec, lambda, sheet)).unwrap();
                let ratios: Vec<C64> = (0..8)
                    .map(|i| {
                        let x = c(0.25 + 0.1 * i as f64, 0.0);
                        q.sample(x).unwrap().psi / t.sample(x).unwrap().psi
                    })
                    .collect();
                for r in &ratios {
                    assert!((r - ratios[0]).norm() < 1e-8 * ratios[0].norm(), "{name} {sheet:?}");
                }
            }
        }
    }

    #[test]
    fn modified_lame_solution() {
        let spec = by_name("modified-lame");
        let pt = SpectralPoint { lambda: zero(), mu: zero(), sheet: Sheet::Plus, ramified: false };
        let sol = PsiSolution::theta(&spec, &pt).unwrap();
        for x in [c(0.4, 0.05), c(0.7, 0.0), c(0.1, 0.2)] {
            let r = sol.schrodinger_residual(x).unwrap();
            assert!(r.relative() < 1e-8, "{}", r.relative());
        }
        let bad = SpectralPoint { lambda: c(1.0, 0.0), ..pt };
        assert!(PsiSolution::theta(&spec, &bad).is_err());
    }

    #[test]
    fn factorizations_on_polynomials() {
        let spec = by_name("two-gap-lame");
        let x = c(0.37, 0.0);
        let lambda = c(2.0, 0.7);
        for deg in 0..=4u32 {
            let f = Jet::variable(x, 4).powi(deg) + c(0.5, 0.0);
            for sheet in [Sheet::Plus, Sheet::Minus] {
                assert!(factorization_residual(&spec, lambda, sheet, &f, x).unwrap().relative() < 1e-8);
                assert!(factorization3_residual(&spec, lambda, sheet, &f, x).unwrap().relative() < 1e-8);
            }
        }
        let zero_f = Jet::constant(zero(), 4);
        assert_eq!(factorization_residual(&spec, lambda, Sheet::Plus, &zero_f, x).unwrap().value, zero());
    }

    #[test]
    fn right_factor_annihilates_same_sheet() {
        let spec = by_name("two-gap-lame");
        let lambda = c(2.0, 0.7);
        let x = c(0.6, 0.0);
        let mu = mu_on(&spec, lambda, Sheet::Plus).unwrap();
        let sol = PsiSolution::quadrature(&spec, lambda, Sheet::Plus, QuadratureBase::new(c(0.3, 0.0))).unwrap();
        let psi = sol.jet(x, 1).unwrap();
        let b = log_derivative_jet(&spec, lambda, mu, x, 1).unwrap().value();
        let r = psi.deriv(1) - b * psi.value();
        assert!(r.norm() < 1e-10 * psi.deriv(1).norm());
    }

    #[test]
    fn hermite_triple() {
        let spec = by_name("two-gap-lame");
        let lambda = c(1.5, -0.8);
        let x = c(0.7, 0.0);
        let basis = hermite_pencil_basis(&spec, lambda, &QuadratureBase::new(c(0.3, 0.0)), x, 3).unwrap();
        for r in &basis {
            assert!(resolvent_equation_residual(&spec, lambda, x, r).unwrap().relative() < 1e-8);
        }
        let p2 = basis[0].value() * basis[0].value();
        assert!((basis[1].value() * basis[2].value() - p2).norm() < 1e-10 * p2.norm());
    }

    #[test]
    fn pencil_solution() {
        let spec = by_name("pencil-v");
        let PotentialSpec::PencilV(p) = spec else { unreachable!() };
        let sol = PsiSolution::pencil(&p, c(0.8, 0.3), Sheet::Plus).unwrap();
        for x in [2.72, 2.8, 2.88] {
            let r = sol.schrodinger_residual(c(x, 0.0)).unwrap();
            assert!(r.relative() < 1e-7, "{x}: {}", r.relative());
        }
    }

    #[test]
    fn degenerate_pair_has_unit_wronskian() {
        let spec = by_name("two-gap-lame");
        let e = spec.curve().unwrap().branch_points()[0];
        let base = QuadratureBase::new(c(0.3, 0.05));
        let (a, b) = degenerate_basis(&spec, e, &base, c(0.6, 0.1)).unwrap();
        let w = a.psi * b.psi_x - a.psi_x * b.psi;
        assert!((w - 1.0).norm() < 1e-9, "{w}");
    }

    #[test]
    fn nonelliptic_requires_fit() {
        let PotentialSpec::NonElliptic2Gap(p) = by_name("non-elliptic-2gap") else { unreachable!() };
        assert_eq!(psi_nonelliptic(&p, c(1.0, 0.0), None, c(0.45, 0.0)), Err(Error::FitNotProvided));
    }

    fn nonelliptic_fit(lambda: C64, sheet: Sheet) -> (NonElliptic2Gap, NonEllipticPsiFit) {
        let PotentialSpec::NonElliptic2Gap(p) = by_name("non-elliptic-2gap") else { unreachable!() };
        let probes = [c(0.40, 0.0), c(0.45, 0.0), c(0.50, 0.0)];
        let fit = fit_nonelliptic_psi(&p, lambda, sheet, &probes).unwrap();
        (p, fit)
    }

    #[test]
    fn nonelliptic_fit_holds_off_the_probes() {
        let lambda = c(5.0, 3.0);
        let (p, fit) = nonelliptic_fit(lambda, Sheet::Plus);
        assert!(fit.probe_residual < 1e-9, "{}", fit.probe_residual);
        let sol = nonelliptic_psi_solution(&p, &fit).unwrap();
        for i in 0..10 {
            let x = c(0.3 + 0.03 * i as f64, 0.01);
            let r = sol.schrodinger_residual(x).unwrap().relative();
            assert!(r < 1e-6, "x = {x}: {r:e}");
        }
        let s = psi_nonelliptic(&p, lambda, Some(&fit), c(0.47, 0.0)).unwrap();
        assert!((s.psi - sol.sample(c(0.47, 0.0)).unwrap().psi).norm() < 1e-14 * s.psi.norm());
        assert!(psi_nonelliptic(&p, lambda + 1.0, Some(&fit), c(0.47, 0.0)).is_err());
    }

    #[test]
    fn nonelliptic_sheets_meet_at_a_branch_point() {
        let spec = by_name("non-elliptic-2gap");
        let curve = spec.curve().unwrap();
        let e = *curve.branch_points().iter().find(|e| (*e - 12.380731).norm() < 1e-3).unwrap();
        let (p, plus) = nonelliptic_fit(e, Sheet::Plus);
        let (_, minus) = nonelliptic_fit(e, Sheet::Minus);
        let a = nonelliptic_psi_solution(&p, &plus).unwrap();
        let b = nonelliptic_psi_solution(&p, &minus).unwrap();
        let xs = [c(0.35, 0.0), c(0.42, 0.0), c(0.55, 0.0)];
        let ratio0 = a.sample(xs[0]).unwrap().psi / b.sample(xs[0]).unwrap().psi;
        for &x in &xs[1..] {
            let ratio = a.sample(x).unwrap().psi / b.sample(x).unwrap().psi;
            assert!((ratio - ratio0).norm() < 1e-4 * ratio0.norm(), "{ratio} vs {ratio0}");
        }
    }
}
