//! Jacobi theta functions with characteristics, theta constants, and the
//! genus one and two Riemann theta series.
//!
//! Conventions: θ[ε;δ](z|τ) = Σ_n exp(πi(n+ε/2)²τ + 2πi(n+ε/2)(z+δ/2)), so every
//! function has period 1 (up to sign) in z, and
//! θ₁ = −θ[1;1], θ₂ = θ[1;0], θ₃ = θ[0;0], θ₄ = θ[0;1].

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::Jet;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Elliptic modulus τ in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    tau: C64,
}

impl Modulus {
    pub fn new(tau: C64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::InvalidParameter(format!("modulus {tau} is not in the upper half plane")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    /// Nome q = e^{iπτ}.
    pub fn nome(&self) -> C64 {
        (I * PI * self.tau).exp()
    }
}

/// How far the lattice sums are carried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    /// Fixed box half-width around the dominant term.
    Radius(usize),
    /// Tail bound relative to the dominant term.
    TargetEps(f64),
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::TargetEps(1e-18)
    }
}

const MAX_RADIUS: usize = 4000;

fn radius_for(decay: f64, order: usize, g: usize, eps: f64) -> Result<usize> {
    // Smallest R with exp(-π decay (R-1)²) (2R+1)^g (2π(R+1))^order < eps.
    if !(decay > 0.0) {
        return Err(Error::TruncationFailure("non-positive decay rate".into()));
    }
    for r in 2..=MAX_RADIUS {
        let rf = r as f64;
        let log_tail = -PI * decay * (rf - 1.0).powi(2)
            + g as f64 * (2.0 * rf + 1.0).ln()
            + order as f64 * (2.0 * PI * (rf + 1.0)).ln();
        if log_tail < eps.ln() {
            return Ok(r);
        }
    }
    Err(Error::TruncationFailure(format!("decay rate {decay} needs more than {MAX_RADIUS} terms")))
}

/// Derivatives 0..=order of θ[e;d] for e, d ∈ {0, 1} at a reduced argument.
fn char_series(e: i64, d: i64, z: C64, tau: C64, order: usize, eps: f64) -> Result<Vec<C64>> {
    let r = radius_for(tau.im, order, 1, eps)? as i64;
    let mut out = vec![C64::new(0.0, 0.0); order + 1];
    let shifted = z + 0.5 * d as f64;
    for n in -r..=r {
        let nn = n as f64 + 0.5 * e as f64;
        let term = (I * PI * nn * nn * tau + 2.0 * PI * I * nn * shifted).exp();
        let f = 2.0 * PI * I * nn;
        let mut p = term;
        for o in out.iter_mut() {
            *o += p;
            p *= f;
        }
    }
    Ok(out)
}

/// Jet in z of θ[ε;δ](z|τ) for arbitrary integer characteristics.
pub fn theta_char_jet(eps: i64, delta: i64, z: C64, tau: &Modulus, order: usize) -> Result<Jet> {
    let t = tau.tau;
    let e = eps.rem_euclid(2);
    let q = delta.div_euclid(2);
    let d = delta.rem_euclid(2);
    let mut sign = if (eps * q).rem_euclid(2) == 1 { -1.0 } else { 1.0 };

    let m = (z.im / t.im).round();
    let z1 = z - m * t;
    let p = z1.re.round();
    let z2 = z1 - p;
    if e == 1 && (p as i64).rem_euclid(2) == 1 {
        sign = -sign;
    }
    let base = Jet::from_derivs(&char_series(e, d, z2, t, order, 1e-18)?);
    let mut jet = base.scale(C64::new(sign, 0.0));
    if m != 0.0 {
        // θ(w + mτ) = exp(−πi m² τ − 2πi m (w + δ/2)) θ(w)
        let c0 = -I * PI * m * m * t - 2.0 * PI * I * m * (z2 + p + 0.5 * d as f64);
        let lin = -2.0 * PI * I * m;
        let mut ex = Jet::constant(c0, order);
        if order >= 1 {
            ex = Jet::from_coeffs({
                let mut c = ex.coeffs().to_vec();
                c[1] = lin;
                c
            });
        }
        jet = &jet * &ex.exp();
    }
    Ok(jet)
}

/// Jet in z of the Jacobi theta function θ_k(z|τ), k = 1..4.
pub fn jacobi_theta_jet(k: u8, z: C64, tau: &Modulus, order: usize) -> Result<Jet> {
    match k {
        1 => Ok(-theta_char_jet(1, 1, z, tau, order)?),
        2 => theta_char_jet(1, 0, z, tau, order),
        3 => theta_char_jet(0, 0, z, tau, order),
        4 => theta_char_jet(0, 1, z, tau, order),
        _ => Err(Error::InvalidParameter(format!("theta index {k} not in 1..=4"))),
    }
}

/// d-th z-derivative of θ_k(z|τ), computed term by term.
pub fn jacobi_theta(k: u8, z: C64, tau: &Modulus, d: usize) -> Result<C64> {
    if d > 5 {
        return Err(Error::InvalidParameter(format!("derivative order {d} exceeds 5")));
    }
    Ok(jacobi_theta_jet(k, z, tau, d)?.deriv(d))
}

/// θ[ε;δ](z|τ) for integer characteristics.
pub fn theta_char(eps: i64, delta: i64, z: C64, tau: &Modulus) -> Result<C64> {
    Ok(theta_char_jet(eps, delta, z, tau, 0)?.value())
}

/// Theta constants and the quasi-period η of the lattice (1, τ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConstants {
    pub theta2_0: C64,
    pub theta3_0: C64,
    pub theta4_0: C64,
    pub theta1_prime_0: C64,
    pub theta1_triple_prime_0: C64,
    /// ζ(z + 1) = ζ(z) + 2η for the Weierstrass ζ of the lattice with periods (1, τ).
    pub eta: C64,
}

pub fn theta_constants(tau: &Modulus) -> Result<ThetaConstants> {
    let t1 = jacobi_theta_jet(1, C64::new(0.0, 0.0), tau, 3)?;
    let theta1_prime_0 = t1.deriv(1);
    let theta1_triple_prime_0 = t1.deriv(3);
    Ok(ThetaConstants {
        theta2_0: jacobi_theta(2, C64::new(0.0, 0.0), tau, 0)?,
        theta3_0: jacobi_theta(3, C64::new(0.0, 0.0), tau, 0)?,
        theta4_0: jacobi_theta(4, C64::new(0.0, 0.0), tau, 0)?,
        theta1_prime_0,
        theta1_triple_prime_0,
        eta: -theta1_triple_prime_0 / (6.0 * theta1_prime_0),
    })
}

/// Symmetric g×g period matrix (g = 1 or 2) with positive definite imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannMatrix {
    g: usize,
    m: [[C64; 2]; 2],
}

impl RiemannMatrix {
    pub fn genus1(tau: C64) -> Result<Self> {
        Modulus::new(tau)?;
        let z = C64::new(0.0, 0.0);
        Ok(Self { g: 1, m: [[tau, z], [z, z]] })
    }

    pub fn genus2(m: [[C64; 2]; 2]) -> Result<Self> {
        if (m[0][1] - m[1][0]).norm() > 1e-14 * (m[0][1].norm() + 1.0) {
            return Err(Error::InvalidParameter("period matrix is not symmetric".into()));
        }
        let (a, b, c) = (m[0][0].im, m[0][1].im, m[1][1].im);
        if !(a > 0.0 && a * c - b * b > 0.0) {
            return Err(Error::InvalidParameter("imaginary part is not positive definite".into()));
        }
        Ok(Self { g: 2, m })
    }

    /// The block matrix [[τ/4, 1/2], [1/2, ϰ]] of the two-torus reduction.
    pub fn reduced(tau: &Modulus, kappa: &Modulus) -> Result<Self> {
        let h = C64::new(0.5, 0.0);
        Self::genus2([[tau.tau / 4.0, h], [h, kappa.tau]])
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.m[i][j]
    }

    fn im_inverse(&self) -> [[f64; 2]; 2] {
        if self.g == 1 {
            return [[1.0 / self.m[0][0].im, 0.0], [0.0, 0.0]];
        }
        let (a, b, c) = (self.m[0][0].im, self.m[0][1].im, self.m[1][1].im);
        let det = a * c - b * b;
        [[c / det, -b / det], [-b / det, a / det]]
    }

    /// Smallest eigenvalue of Im Π.
    pub fn lambda_min(&self) -> f64 {
        if self.g == 1 {
            return self.m[0][0].im;
        }
        let (a, b, c) = (self.m[0][0].im, self.m[0][1].im, self.m[1][1].im);
        0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt()
    }

    /// Π v for a g-vector v.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.g).map(|i| (0..self.g).map(|j| self.m[i][j] * v[j]).sum()).collect()
    }
}

/// Sum over N ∈ ℤ^g + a of exp(πi NΠN + 2πi N z) · weight(N), written into `out`.
fn lattice_sum(
    pi: &RiemannMatrix,
    a: [f64; 2],
    z: &[C64],
    policy: TruncationPolicy,
    weight_order: usize,
    weights: &dyn Fn(&[f64; 2], &mut [C64]),
    out: &mut [C64],
) -> Result<f64> {
    let g = pi.g;
    let yinv = pi.im_inverse();
    // Dominant term sits at N* = −(Im Π)^{-1} Im z.
    let mut center = [0.0f64; 2];
    for i in 0..g {
        center[i] = -(0..g).map(|j| yinv[i][j] * z[j].im).sum::<f64>() - a[i];
    }
    let lam = pi.lambda_min();
    let (r, eps) = match policy {
        TruncationPolicy::Radius(r) => {
            if r == 0 {
                return Err(Error::InvalidParameter("radius must be at least 1".into()));
            }
            (r, 0.0)
        }
        TruncationPolicy::TargetEps(e) => {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter("target eps must be positive".into()));
            }
            (radius_for(lam, weight_order, g, e)?, e)
        }
    };
    let r = r as i64;
    let c0 = center[0].round() as i64;
    let c1 = if g == 2 { center[1].round() as i64 } else { 0 };
    let range1 = if g == 2 { (c1 - r)..=(c1 + r) } else { 0..=0 };
    let mut w = vec![C64::new(0.0, 0.0); out.len()];
    let mut max_term = 0.0f64;
    for n0 in (c0 - r)..=(c0 + r) {
        for n1 in range1.clone() {
            let nn = [n0 as f64 + a[0], if g == 2 { n1 as f64 + a[1] } else { 0.0 }];
            let mut quad = C64::new(0.0, 0.0);
            let mut lin = C64::new(0.0, 0.0);
            for i in 0..g {
                lin += nn[i] * z[i];
                for j in 0..g {
                    quad += pi.m[i][j] * nn[i] * nn[j];
                }
            }
            let term = (I * PI * quad + 2.0 * PI * I * lin).exp();
            max_term = max_term.max(term.norm());
            weights(&nn, &mut w);
            for (o, wi) in out.iter_mut().zip(&w) {
                *o += term * wi;
            }
        }
    }
    let rf = r as f64;
    let bound = match policy {
        TruncationPolicy::TargetEps(_) => eps * max_term,
        TruncationPolicy::Radius(_) => {
            (-PI * lam * (rf - 1.0).max(0.0).powi(2)).exp()
                * (2.0 * rf + 1.0).powi(g as i32)
                * (2.0 * PI * (rf + 1.0)).powi(weight_order as i32)
                * max_term
        }
    };
    Ok(bound)
}

fn check_dims(z: &[C64], pi: &RiemannMatrix) -> Result<()> {
    if z.len() != pi.g {
        return Err(Error::ArityMismatch { expected: pi.g, got: z.len() });
    }
    Ok(())
}

/// Riemann theta value and partial derivative d = (d₁, d₂) together with the tail bound.
pub fn riemann_theta_with_bound(
    z: &[C64],
    pi: &RiemannMatrix,
    policy: TruncationPolicy,
    d: &[usize],
) -> Result<(C64, f64)> {
    check_dims(z, pi)?;
    if d.len() != pi.g {
        return Err(Error::ArityMismatch { expected: pi.g, got: d.len() });
    }
    let total: usize = d.iter().sum();
    if total > 4 {
        return Err(Error::InvalidParameter(format!("derivative order {total} exceeds 4")));
    }
    // Integer shifts of z leave the series unchanged.
    let zr: Vec<C64> = z.iter().map(|v| C64::new(v.re - v.re.round(), v.im)).collect();
    let dd = [d[0], if pi.g == 2 { d[1] } else { 0 }];
    let weights = move |n: &[f64; 2], w: &mut [C64]| {
        w[0] = (2.0 * PI * I * n[0]).powu(dd[0] as u32) * (2.0 * PI * I * n[1]).powu(dd[1] as u32);
    };
    let mut out = [C64::new(0.0, 0.0)];
    let bound = lattice_sum(pi, [0.0, 0.0], &zr, policy, total, &weights, &mut out)?;
    Ok((out[0], bound))
}

/// Θ(z|Π) or one of its partial derivatives (|d| ≤ 4), term-wise.
pub fn riemann_theta(z: &[C64], pi: &RiemannMatrix, policy: TruncationPolicy, d: &[usize]) -> Result<C64> {
    Ok(riemann_theta_with_bound(z, pi, policy, d)?.0)
}

/// Jet in t of Θ(z + t w|Π).
pub fn riemann_theta_directional_jet(z: &[C64], w: &[C64], pi: &RiemannMatrix, order: usize) -> Result<Jet> {
    check_dims(z, pi)?;
    check_dims(w, pi)?;
    let g = pi.g;
    let wv = [w[0], if g == 2 { w[1] } else { C64::new(0.0, 0.0) }];
    let weights = move |n: &[f64; 2], out: &mut [C64]| {
        let f = 2.0 * PI * I * (n[0] * wv[0] + n[1] * wv[1]);
        let mut p = C64::new(1.0, 0.0);
        for o in out.iter_mut() {
            *o = p;
            p *= f;
        }
    };
    let mut out = vec![C64::new(0.0, 0.0); order + 1];
    lattice_sum(pi, [0.0, 0.0], z, TruncationPolicy::default(), order, &weights, &mut out)?;
    Ok(Jet::from_derivs(&out))
}

/// Integer characteristic [α; β] for Θ with characteristics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Characteristic {
    pub alpha: Vec<i64>,
    pub beta: Vec<i64>,
}

impl Characteristic {
    pub fn new(alpha: Vec<i64>, beta: Vec<i64>) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.is_empty() || alpha.len() > 2 {
            return Err(Error::InvalidParameter("characteristic vectors must have equal length 1 or 2".into()));
        }
        Ok(Self { alpha, beta })
    }

    /// The genus one characteristic [ε; δ].
    pub fn jacobi(eps: i64, delta: i64) -> Self {
        Self { alpha: vec![eps], beta: vec![delta] }
    }

    pub fn zero(g: usize) -> Self {
        Self { alpha: vec![0; g], beta: vec![0; g] }
    }

    pub fn reduced(&self) -> Self {
        Self {
            alpha: self.alpha.iter().map(|a| a.rem_euclid(2)).collect(),
            beta: self.beta.iter().map(|b| b.rem_euclid(2)).collect(),
        }
    }
}

/// Θ[α;β](z|Π) = exp(πi α·Πα/4 + πi α·(z + β/2)) Θ(z + Πα/2 + β/2|Π).
pub fn theta_with_char(ch: &Characteristic, z: &[C64], pi: &RiemannMatrix) -> Result<C64> {
    check_dims(z, pi)?;
    if ch.alpha.len() != pi.g {
        return Err(Error::ArityMismatch { expected: pi.g, got: ch.alpha.len() });
    }
    let alpha: Vec<C64> = ch.alpha.iter().map(|&a| C64::new(a as f64, 0.0)).collect();
    let pa = pi.apply(&alpha);
    let mut quad = C64::new(0.0, 0.0);
    let mut lin = C64::new(0.0, 0.0);
    let mut arg = Vec::with_capacity(pi.g);
    for i in 0..pi.g {
        quad += alpha[i] * pa[i];
        lin += alpha[i] * (z[i] + 0.5 * ch.beta[i] as f64);
        arg.push(z[i] + 0.5 * pa[i] + 0.5 * ch.beta[i] as f64);
    }
    let pref = (I * PI * quad / 4.0 + I * PI * lin).exp();
    let zeros = vec![0; pi.g];
    Ok(pref * riemann_theta(&arg, pi, TruncationPolicy::default(), &zeros)?)
}

/// Θ[α;β](z|Π) summed directly over the shifted lattice ℤ^g + α/2.
pub fn theta_with_char_direct(ch: &Characteristic, z: &[C64], pi: &RiemannMatrix) -> Result<C64> {
    check_dims(z, pi)?;
    if ch.alpha.len() != pi.g {
        return Err(Error::ArityMismatch { expected: pi.g, got: ch.alpha.len() });
    }
    let a = [0.5 * ch.alpha[0] as f64, if pi.g == 2 { 0.5 * ch.alpha[1] as f64 } else { 0.0 }];
    let shifted: Vec<C64> = (0..pi.g).map(|i| z[i] + 0.5 * ch.beta[i] as f64).collect();
    let weights = |_: &[f64; 2], w: &mut [C64]| w[0] = C64::new(1.0, 0.0);
    let mut out = [C64::new(0.0, 0.0)];
    lattice_sum(pi, a, &shifted, TruncationPolicy::default(), 0, &weights, &mut out)?;
    Ok(out[0])
}

/// Left minus right side of the two-torus reduction identity
///
/// Θ[(α,ε);(β,δ)](z/2 − ατ/8, w − α/4 | Π) =
///   e^{(π/2)iα(z+β−ατ/8)} {θ[0;ε](z|τ)θ[ε;δ](w|ϰ) + i^{2β+ε} θ[1;ε](z|τ)θ[ε;δ−1](w|ϰ)}
/// with Π = [[τ/4, 1/2], [1/2, ϰ]].
pub fn reduction_residual_g2(
    alpha: i64,
    eps: i64,
    beta: i64,
    delta: i64,
    z: C64,
    w: C64,
    tau: &Modulus,
    kappa: &Modulus,
) -> Result<C64> {
    let pi = RiemannMatrix::reduced(tau, kappa)?;
    let t = tau.tau;
    let ch = Characteristic::new(vec![alpha, eps], vec![beta, delta])?;
    let af = alpha as f64;
    let lhs = theta_with_char(&ch, &[z / 2.0 - af * t / 8.0, w - af / 4.0], &pi)?;
    let pref = (0.5 * PI * I * af * (z + beta as f64 - af * t / 8.0)).exp();
    let phase = I.powi((2 * beta + eps).rem_euclid(4) as i32);
    let rhs = pref
        * (theta_char(0, eps, z, tau)? * theta_char(eps, delta, w, kappa)?
            + phase * theta_char(1, eps, z, tau)? * theta_char(eps, delta - 1, w, kappa)?);
    Ok(lhs - rhs)
}
