//! Weierstrass functions built from theta quotients, lattice invariants, the
//! elliptic integral of the third kind and the Λ-divisor.
//!
//! The base lattice is generated by (1, τ) (half-periods ½ and τ/2). A general
//! [`Lattice`] with half-periods (ω, ω′) is reached through homogeneity:
//! ℘(z|ω,ω′) = ℘(z/(2ω)|1,τ)/(2ω)² with τ = ω′/ω.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::{find_root_newton, Jet, Tolerance};
use crate::theta::{jacobi_theta, jacobi_theta_jet, theta_constants, Modulus};

/// Weierstrass half-periods (ω, ω′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub omega: C64,
    pub omega_prime: C64,
}

impl Lattice {
    pub fn new(omega: C64, omega_prime: C64) -> Result<Self> {
        if omega.norm() == 0.0 || !((omega_prime / omega).im > 0.0) {
            return Err(Error::InvalidParameter("Im(ω′/ω) must be positive".into()));
        }
        Ok(Self { omega, omega_prime })
    }

    /// The lattice generated by 1 and τ.
    pub fn from_tau(tau: &Modulus) -> Self {
        Self { omega: C64::new(0.5, 0.0), omega_prime: tau.tau() / 2.0 }
    }

    /// The lattice with half-periods 1 and τ (periods 2 and 2τ).
    pub fn half_periods(tau: &Modulus) -> Self {
        Self { omega: C64::new(1.0, 0.0), omega_prime: tau.tau() }
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::new(self.omega_prime / self.omega).expect("validated at construction")
    }

    fn scale(&self) -> C64 {
        2.0 * self.omega
    }

    /// Jet of ℘ at z, orders 0..=order.
    pub fn wp_jet(&self, z: C64, order: usize) -> Result<Jet> {
        let s = self.scale();
        let base = wp_base_jet(z / s, &self.modulus(), order)?;
        Ok(base.stretch(1.0 / s).scale(1.0 / (s * s)))
    }

    /// ℘, ℘′ or ℘″ at z.
    pub fn wp(&self, z: C64, order: usize) -> Result<C64> {
        if order > 2 {
            return Err(Error::InvalidParameter(format!("℘ derivative order {order} exceeds 2")));
        }
        Ok(self.wp_jet(z, order)?.deriv(order))
    }

    pub fn zeta(&self, z: C64) -> Result<C64> {
        let s = self.scale();
        Ok(zeta_base(z / s, &self.modulus())? / s)
    }

    pub fn sigma(&self, z: C64) -> Result<C64> {
        let s = self.scale();
        Ok(s * sigma_base(z / s, &self.modulus())?)
    }

    pub fn invariants(&self) -> Result<Invariants> {
        let s = self.scale();
        let b = invariants_from_tau(&self.modulus())?;
        let s2 = s * s;
        Ok(Invariants {
            g2: b.g2 / (s2 * s2),
            g3: b.g3 / (s2 * s2 * s2),
            e1: b.e1 / s2,
            e2: b.e2 / s2,
            e3: b.e3 / s2,
            eta: b.eta / s,
        })
    }
}

/// Lattice invariants together with the branch values and η = ζ(ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Invariants {
    pub g2: C64,
    pub g3: C64,
    /// ℘(ω)
    pub e1: C64,
    /// ℘(ω + ω′)
    pub e2: C64,
    /// ℘(ω′)
    pub e3: C64,
    pub eta: C64,
}

impl Invariants {
    pub fn discriminant(&self) -> C64 {
        self.g2 * self.g2 * self.g2 - 27.0 * self.g3 * self.g3
    }
}

/// Invariants of the lattice generated by (1, τ).
pub fn invariants_from_tau(tau: &Modulus) -> Result<Invariants> {
    let tc = theta_constants(tau)?;
    let (t2, t3, t4) = (tc.theta2_0.powi(4), tc.theta3_0.powi(4), tc.theta4_0.powi(4));
    let k = PI * PI / 3.0;
    let e1 = k * (t3 + t4);
    let e2 = k * (t2 - t4);
    let e3 = -k * (t2 + t3);
    Ok(Invariants {
        g2: -4.0 * (e1 * e2 + e1 * e3 + e2 * e3),
        g3: 4.0 * e1 * e2 * e3,
        e1,
        e2,
        e3,
        eta: tc.eta,
    })
}

fn check_off_lattice(z: C64, tau: &Modulus) -> Result<()> {
    let t = tau.tau();
    let m0 = (z.im / t.im).round();
    for dm in -1..=1 {
        let m = m0 + dm as f64;
        let r = z - m * t;
        let n = r.re.round();
        if (r - n).norm() < 1e-13 * z.norm().max(1.0) {
            return Err(Error::PoleAtLatticePoint(format!("{z} is a lattice point of (1, {t})")));
        }
    }
    Ok(())
}

fn log_theta1_jet(z: C64, tau: &Modulus, order: usize) -> Result<Jet> {
    check_off_lattice(z, tau)?;
    Ok(jacobi_theta_jet(1, z, tau, order)?.ln())
}

/// ℘ on the lattice (1, τ): ℘ = −2η − (ln θ₁)″.
fn wp_base_jet(z: C64, tau: &Modulus, order: usize) -> Result<Jet> {
    let eta = theta_constants(tau)?.eta;
    let l2 = log_theta1_jet(z, tau, order + 2)?.differentiate().differentiate();
    Ok(-(l2 + 2.0 * eta))
}

fn zeta_base(z: C64, tau: &Modulus) -> Result<C64> {
    check_off_lattice(z, tau)?;
    let eta = theta_constants(tau)?.eta;
    let j = jacobi_theta_jet(1, z, tau, 1)?;
    Ok(2.0 * eta * z + j.deriv(1) / j.value())
}

fn sigma_base(z: C64, tau: &Modulus) -> Result<C64> {
    let tc = theta_constants(tau)?;
    Ok((tc.eta * z * z).exp() * jacobi_theta(1, z, tau, 0)? / tc.theta1_prime_0)
}

/// ℘^{(order)}(z) for order 0..=2 on a general lattice.
pub fn weierstrass(z: C64, lattice: &Lattice, order: usize) -> Result<C64> {
    lattice.wp(z, order)
}

/// A point v of the lattice (1, τ) with ℘(v) = target. When `slope` is given,
/// the sign of v is chosen so that ℘′(v) is the closer of ±slope.
pub fn wp_inverse(target: C64, tau: &Modulus, slope: Option<C64>) -> Result<C64> {
    if !target.re.is_finite() || !target.im.is_finite() {
        return Err(Error::InvalidParameter(format!("℘ target {target} is not finite")));
    }
    let lat = Lattice::from_tau(tau);
    let t = tau.tau();
    let scale = target.norm().max(1.0);
    let miss = |v: C64| lat.wp(v, 0).map(|w| (w - target).norm()).unwrap_or(f64::INFINITY);
    let mut best = (f64::INFINITY, C64::new(0.5, 0.0));
    if target.norm() > 0.0 {
        let v = 1.0 / target.sqrt();
        best = (miss(v), v);
    }
    const N: usize = 12;
    for i in 0..N {
        for j in 0..N {
            let v = (i as f64 + 0.5) / N as f64 + t * ((j as f64 + 0.5) / N as f64);
            let m = miss(v);
            if m < best.0 {
                best = (m, v);
            }
        }
    }
    let tol = Tolerance::new(1e-13 * scale, 1e-15, 200)?;
    let nan = C64::new(f64::NAN, f64::NAN);
    let mut v = find_root_newton(
        |v| lat.wp(v, 0).map(|w| w - target).unwrap_or(nan),
        |v| lat.wp(v, 1).unwrap_or(nan),
        best.1,
        &tol,
    )?;
    if let Some(s) = slope {
        let d = lat.wp(v, 1)?;
        if (d + s).norm() < (d - s).norm() {
            v = -v;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaSigma {
    pub zeta: C64,
    pub sigma: C64,
}

/// ζ and σ on the lattice generated by (1, τ).
pub fn zeta_sigma(z: C64, tau: &Modulus) -> Result<ZetaSigma> {
    Ok(ZetaSigma { zeta: zeta_base(z, tau)?, sigma: sigma_base(z, tau)? })
}

/// III(x; u) = ln[σ(2x−2u)/σ(2x)] + 2ζ(2u)x for ℘ with half-periods (1, τ),
/// written through θ₁ as ln[θ₁(x−u)/θ₁(x)] + (θ₁′(u)/θ₁(u))x + ηu² with η of
/// the lattice (1, τ). The logarithm takes its principal branch pointwise; use
/// [`third_kind_path`] for a branch continued along a path.
pub fn third_kind_closed_form(x: C64, u: C64, tau: &Modulus) -> Result<C64> {
    let (ratio, lin) = third_kind_parts(x, u, tau)?;
    Ok(ratio.ln() + lin)
}

fn third_kind_parts(x: C64, u: C64, tau: &Modulus) -> Result<(C64, C64)> {
    check_off_lattice(x, tau)?;
    check_off_lattice(x - u, tau)?;
    check_off_lattice(u, tau)?;
    let eta = theta_constants(tau)?.eta;
    let tu = jacobi_theta_jet(1, u, tau, 1)?;
    let ratio = jacobi_theta(1, x - u, tau, 0)? / jacobi_theta(1, x, tau, 0)?;
    Ok((ratio, tu.deriv(1) / tu.value() * x + eta * u * u))
}

/// x-derivative of III: θ₁′(x−u)/θ₁(x−u) − θ₁′(x)/θ₁(x) + θ₁′(u)/θ₁(u).
pub fn third_kind_derivative(x: C64, u: C64, tau: &Modulus) -> Result<C64> {
    check_off_lattice(x, tau)?;
    check_off_lattice(x - u, tau)?;
    check_off_lattice(u, tau)?;
    let a = jacobi_theta_jet(1, x - u, tau, 1)?;
    let b = jacobi_theta_jet(1, x, tau, 1)?;
    let c = jacobi_theta_jet(1, u, tau, 1)?;
    Ok(a.deriv(1) / a.value() - b.deriv(1) / b.value() + c.deriv(1) / c.value())
}

/// III along a polyline with the logarithm continued from the principal
/// branch at the first vertex. Segments are subdivided until successive phase
/// increments stay below π/4.
pub fn third_kind_path(path: &[C64], u: C64, tau: &Modulus) -> Result<Vec<C64>> {
    const MAX_DEPTH: u32 = 30;
    let Some(&first) = path.first() else {
        return Ok(Vec::new());
    };
    let (r0, l0) = third_kind_parts(first, u, tau)?;
    let mut log = r0.ln();
    let mut prev = r0;
    let mut out = vec![log + l0];

    fn advance(
        a: C64,
        b: C64,
        prev: &mut C64,
        log: &mut C64,
        u: C64,
        tau: &Modulus,
        depth: u32,
    ) -> Result<()> {
        let (rb, _) = third_kind_parts(b, u, tau)?;
        let step = (rb / *prev).ln();
        if step.im.abs() < PI / 4.0 {
            *log += step;
            *prev = rb;
            return Ok(());
        }
        if depth >= MAX_DEPTH || (b - a).norm() < 1e-12 {
            return Err(Error::BranchJump(format!("phase jumps by {:.3} between {a} and {b}", step.im)));
        }
        let mid = 0.5 * (a + b);
        advance(a, mid, prev, log, u, tau, depth + 1)?;
        advance(mid, b, prev, log, u, tau, depth + 1)
    }

    for w in path.windows(2) {
        advance(w[0], w[1], &mut prev, &mut log, u, tau, 0)?;
        let (_, lin) = third_kind_parts(w[1], u, tau)?;
        out.push(log + lin);
    }
    Ok(out)
}

/// Parameters of Λ(x; u|τ) = θ₁(x−u|τ)·exp((θ₁′(u)/θ₁(u) + h)x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaDivisor {
    pub u: C64,
    pub tau: Modulus,
    pub h: C64,
}

impl LambdaDivisor {
    pub fn new(u: C64, tau: Modulus, h: C64) -> Result<Self> {
        check_off_lattice(u, &tau).map_err(|_| Error::InvalidParameter(format!("u = {u} lies on the lattice")))?;
        Ok(Self { u, tau, h })
    }

    fn slope(&self) -> Result<C64> {
        let tu = jacobi_theta_jet(1, self.u, &self.tau, 1)?;
        Ok(tu.deriv(1) / tu.value() + self.h)
    }

    pub fn jet(&self, x: C64, order: usize) -> Result<Jet> {
        let k = self.slope()?;
        let th = jacobi_theta_jet(1, x - self.u, &self.tau, order)?;
        let mut lin = Jet::constant(k * x, order);
        if order >= 1 {
            lin = lin + &Jet::variable(C64::new(0.0, 0.0), order).scale(k);
        }
        Ok(&th * &lin.exp())
    }
}

pub fn lambda_divisor(x: C64, div: &LambdaDivisor) -> Result<C64> {
    Ok(div.jet(x, 0)?.value())
}
