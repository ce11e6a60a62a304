//! Differential closedness of the Jacobi theta functions: the autonomous
//! first-order systems satisfied by θ_k, θ₁′ and the Λ-divisor, their two
//! rational integrals, the fifth-order equation shared by every θ_k, and the
//! reconstruction of θ from an inverted elliptic integral.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::elliptic::{invariants_from_tau, LambdaDivisor};
use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate_ode, least_squares, Jet, Residual, Tolerance};
use crate::theta::{jacobi_theta_jet, theta_char_jet, theta_constants, Modulus};

/// Values of the closed basis {θ₁..θ₄, θ₁′, Λ} at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaBasisSample {
    pub x: C64,
    pub theta: [C64; 4],
    pub theta1_prime: C64,
    pub lambda_div: C64,
}

impl ThetaBasisSample {
    pub fn at(x: C64, tau: &Modulus, div: &LambdaDivisor) -> Result<Self> {
        let t1 = jacobi_theta_jet(1, x, tau, 1)?;
        let mut theta = [t1.value(), C64::default(), C64::default(), C64::default()];
        for k in 2..=4u8 {
            theta[k as usize - 1] = jacobi_theta_jet(k, x, tau, 0)?.value();
        }
        Ok(Self { x, theta, theta1_prime: t1.deriv(1), lambda_div: div.jet(x, 0)?.value() })
    }
}

/// η of the lattice with half-periods (1, τ).
fn eta_half(tau: &Modulus) -> Result<C64> {
    Ok(theta_constants(tau)?.eta / 2.0)
}

fn nonzero(v: C64, what: &str, x: C64) -> Result<C64> {
    if v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::ThetaZeroDenominator(format!("{what} at {x}")));
    }
    Ok(v)
}

/// The coefficient 4{η + (π²/12)(ϑ₃⁴ + ϑ₄⁴)} of the θ₁″ equation.
fn theta1_coefficient(tau: &Modulus) -> Result<C64> {
    let tc = theta_constants(tau)?;
    Ok(4.0 * (eta_half(tau)? + PI * PI / 12.0 * (tc.theta3_0.powi(4) + tc.theta4_0.powi(4))))
}

/// θ₁″ − [θ₁′²/θ₁ − π²ϑ₃²ϑ₄²θ₂²/θ₁ − 4{η + (π²/12)(ϑ₃⁴+ϑ₄⁴)}θ₁].
fn theta1_prime_equation(x: C64, tau: &Modulus) -> Result<Residual> {
    let tc = theta_constants(tau)?;
    let t1 = jacobi_theta_jet(1, x, tau, 2)?;
    let t1v = nonzero(t1.value(), "θ₁", x)?;
    let t2 = jacobi_theta_jet(2, x, tau, 0)?.value();
    let (v3, v4) = (tc.theta3_0, tc.theta4_0);
    Ok(Residual::from_terms(&[
        t1.deriv(2),
        -t1.deriv(1) * t1.deriv(1) / t1v,
        PI * PI * v3 * v3 * v4 * v4 * t2 * t2 / t1v,
        theta1_coefficient(tau)? * t1v,
    ]))
}

/// Residuals of the two equations of the closed system for θ[ε;δ] and θ₁′:
/// ∂θ[ε;δ] = (θ₁′/θ₁)θ[ε;δ] − (−1)^{⌊δ/2⌋ε} π ϑ[ε;δ]² θ[ε−1;0] θ[0;δ−1]/θ₁.
pub fn closed_system_residual(x: C64, tau: &Modulus, eps: i64, delta: i64) -> Result<[Residual; 2]> {
    let t1 = jacobi_theta_jet(1, x, tau, 1)?;
    let t1v = nonzero(t1.value(), "θ₁", x)?;
    let th = theta_char_jet(eps, delta, x, tau, 1)?;
    let v = theta_char_jet(eps, delta, C64::default(), tau, 0)?.value();
    let p1 = theta_char_jet(eps - 1, 0, x, tau, 0)?.value();
    let p2 = theta_char_jet(0, delta - 1, x, tau, 0)?.value();
    let sign = if (delta.div_euclid(2) * eps).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    let first = Residual::from_terms(&[th.deriv(1), -t1.deriv(1) / t1v * th.value(), sign * PI * v * v * p1 * p2 / t1v]);
    Ok([first, theta1_prime_equation(x, tau)?])
}

/// The index pair (n, m) = ((8k−28)/(3k−10), (10k−28)/(3k−8)) of the θ_k equation.
pub fn index_map(k: u8) -> Result<(u8, u8)> {
    let k = k as i64;
    let (nn, nd, mn, md) = (8 * k - 28, 3 * k - 10, 10 * k - 28, 3 * k - 8);
    if nd == 0 || md == 0 || nn % nd != 0 || mn % md != 0 {
        return Err(Error::InvalidParameter(format!("no index pair for k = {k}")));
    }
    let (n, m) = (nn / nd, mn / md);
    if !(1..=4).contains(&n) || !(1..=4).contains(&m) {
        return Err(Error::InvalidParameter(format!("no index pair for k = {k}")));
    }
    Ok((n as u8, m as u8))
}

/// Residuals of the six equations of the closed system with the Λ-divisor:
/// θ₁′ = ∂θ₁, the θ₂, θ₃, θ₄ equations, the θ₁′ equation and the Λ equation.
pub fn lambda_system_residual(x: C64, u: C64, tau: &Modulus, h: C64) -> Result<[Residual; 6]> {
    let div = LambdaDivisor::new(u, *tau, h).map_err(|_| Error::DegenerateU(format!("{u}")))?;
    let tc = theta_constants(tau)?;
    let consts = [C64::default(), tc.theta2_0, tc.theta3_0, tc.theta4_0];
    let jets: Vec<Jet> = (1..=4u8).map(|k| jacobi_theta_jet(k, x, tau, 2)).collect::<Result<_>>()?;
    let t: Vec<C64> = jets.iter().map(|j| j.value()).collect();
    let t1v = nonzero(t[0], "θ₁", x)?;
    let t1p = jets[0].deriv(1);
    let mut out = [Residual::from_terms(&[]); 6];
    // θ₁′ is carried as an independent variable; this is its defining relation.
    out[0] = Residual::from_terms(&[jets[0].deriv(1), -t1p]);
    for k in 2..=4u8 {
        let (n, m) = index_map(k)?;
        let i = k as usize - 1;
        out[i] = Residual::from_terms(&[
            jets[i].deriv(1),
            -t1p / t1v * t[i],
            PI * consts[i] * consts[i] * t[n as usize - 1] * t[m as usize - 1] / t1v,
        ]);
    }
    out[4] = theta1_prime_equation(x, tau)?;
    let tu: Vec<C64> = (1..=4u8).map(|k| jacobi_theta_jet(k, u, tau, 0).map(|j| j.value())).collect::<Result<_>>()?;
    if tu[0].norm() == 0.0 {
        return Err(Error::DegenerateU(format!("{u}")));
    }
    let den = t1v * (tu[1] * tu[1] * t1v * t1v - tu[0] * tu[0] * t[1] * t[1]);
    let den = nonzero(den, "θ₂²(u)θ₁² − θ₁²(u)θ₂²", x)?;
    let lam = div.jet(x, 1)?;
    let lam_v = nonzero(lam.value(), "Λ", x)?;
    let num = tu[0].powi(3) * t[1] * t[2] * t[3] + tu[1] * tu[2] * tu[3] * t1v.powi(3);
    out[5] = Residual::from_terms(&[lam.deriv(1) / lam_v, -t1p / t1v, -PI * tc.theta2_0 * tc.theta2_0 / tu[0] * num / den, -h]);
    Ok(out)
}

/// A₁ = (ϑ₂²θ₄² − ϑ₄²θ₂²)/(ϑ₃²θ₁²) and A₂ = (ϑ₂²θ₃² − ϑ₃²θ₂²)/(ϑ₄²θ₁²) at one sample.
pub fn rational_integral_pair(s: &ThetaBasisSample, tau: &Modulus) -> Result<(C64, C64)> {
    let tc = theta_constants(tau)?;
    let (v2, v3, v4) = (tc.theta2_0 * tc.theta2_0, tc.theta3_0 * tc.theta3_0, tc.theta4_0 * tc.theta4_0);
    let [t1, t2, t3, t4] = s.theta.map(|t| t * t);
    let t1 = nonzero(t1, "θ₁", s.x)?;
    Ok(((v2 * t4 - v4 * t2) / (v3 * t1), (v2 * t3 - v3 * t2) / (v4 * t1)))
}

/// (A₁, A₂) at the first sample and the largest deviation from them over all samples.
pub fn rational_integrals(samples: &[ThetaBasisSample], tau: &Modulus) -> Result<(C64, C64, f64)> {
    let pairs: Vec<(C64, C64)> = samples.iter().map(|s| rational_integral_pair(s, tau)).collect::<Result<_>>()?;
    let &(a1, a2) = pairs.first().ok_or_else(|| Error::InvalidParameter("no samples".into()))?;
    let spread = pairs.iter().map(|(b1, b2)| (b1 - a1).norm().max((b2 - a2).norm())).fold(0.0, f64::max);
    Ok((a1, a2, spread))
}

pub fn rational_integral_constants(xs: &[C64], tau: &Modulus) -> Result<(C64, C64, f64)> {
    let div = LambdaDivisor::new(C64::new(0.3, 0.2), *tau, C64::default())?;
    let samples: Vec<ThetaBasisSample> = xs.iter().map(|&x| ThetaBasisSample::at(x, tau, &div)).collect::<Result<_>>()?;
    rational_integrals(&samples, tau)
}

/// κ with −κ = 2η + (π²/6)(ϑ₃⁴ + ϑ₄⁴).
pub fn kappa(tau: &Modulus) -> Result<C64> {
    let tc = theta_constants(tau)?;
    Ok(-(2.0 * eta_half(tau)? + PI * PI / 6.0 * (tc.theta3_0.powi(4) + tc.theta4_0.powi(4))))
}

/// ((1/F_x)(F_x²/F)_x)_x + 8F_x from a jet of F of order ≥ 3.
pub fn fifth_order_residual_from_f(f: &Jet, x: C64) -> Result<Residual> {
    if f.order() < 3 {
        return Err(Error::InvalidParameter("F needs a jet of order 3".into()));
    }
    let f = f.truncate(3);
    if f.value().norm() == 0.0 {
        return Err(Error::ThetaZero(format!("F at {x}")));
    }
    let fx = f.differentiate();
    if fx.value().norm() == 0.0 {
        return Err(Error::CriticalPointOfF(format!("{x}")));
    }
    let g = &(&fx * &fx) / &f.truncate(2);
    let h = &g.differentiate() / &fx.truncate(1);
    Ok(Residual::from_terms(&[h.deriv(1), 8.0 * fx.value()]))
}

fn f_jet(x: C64, tau: &Modulus, which: u8, kappa: C64) -> Result<Jet> {
    let th = jacobi_theta_jet(which, x, tau, 5)?;
    if th.value().norm() == 0.0 {
        return Err(Error::ThetaZero(format!("θ{which} at {x}")));
    }
    Ok(th.ln().differentiate().differentiate() - 2.0 * kappa)
}

/// The fifth-order equation for θ = θ_k with F = (ln θ)″ − 2κ.
pub fn fifth_order_residual(x: C64, tau: &Modulus, which: u8) -> Result<Residual> {
    fifth_order_residual_from_f(&f_jet(x, tau, which, kappa(tau)?)?, x)
}

/// The κ that makes the fifth-order residual vanish at x, by Newton from `guess`.
pub fn solve_kappa(x: C64, tau: &Modulus, which: u8, guess: C64) -> Result<C64> {
    let th = jacobi_theta_jet(which, x, tau, 5)?;
    let l2 = th.ln().differentiate().differentiate();
    let res = |k: C64| fifth_order_residual_from_f(&(&l2 - 2.0 * k), x).map(|r| r.value).unwrap_or(C64::new(f64::NAN, f64::NAN));
    find_root(res, guess, &Tolerance::uniform(1e-15)?)
}

/// Constants of the Liouvillian construction θ = exp(Φ)·e^{κx² + dx + e}, Φ″ = F,
/// with F = Ξ the inversion of ∫dF/√(F(F−a)(F−b)) = 2ix + c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaReconstruction {
    pub a: C64,
    pub b: C64,
    pub kappa: C64,
    /// F and F_x at x0; they fix the constant c of the inversion.
    pub f0: C64,
    pub fx0: C64,
    /// Φ and Φ′ at x0.
    pub phi0: C64,
    pub phix0: C64,
    pub x0: f64,
    pub d: C64,
    pub e: C64,
}

impl ThetaReconstruction {
    /// Seed from θ_k(·|τ) at x0 with d = e = 0, so that the result is θ_k itself.
    pub fn from_theta(tau: &Modulus, which: u8, x0: f64) -> Result<Self> {
        let inv = invariants_from_tau(tau)?;
        let kap = kappa(tau)?;
        let x = C64::new(x0, 0.0);
        let th = jacobi_theta_jet(which, x, tau, 3)?;
        if th.value().norm() == 0.0 {
            return Err(Error::ThetaZero(format!("θ{which} at {x0}")));
        }
        let l = th.ln();
        let f = l.differentiate().differentiate() - 2.0 * kap;
        Ok(Self {
            a: inv.e1 - inv.e2,
            b: inv.e1 - inv.e3,
            kappa: kap,
            f0: f.value(),
            fx0: f.deriv(1),
            phi0: l.value() - kap * x * x,
            phix0: l.deriv(1) - 2.0 * kap * x,
            x0,
            d: C64::default(),
            e: C64::default(),
        })
    }

    /// |F_x² + 4F(F−a)(F−b)| at the seed, relative to its terms.
    pub fn seed_residual(&self) -> f64 {
        let (f, fx) = (self.f0, self.fx0);
        Residual::from_terms(&[fx * fx, 4.0 * f * (f - self.a) * (f - self.b)]).relative()
    }
}

/// θ on the grid together with F, F_x there.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedTheta {
    pub xs: Vec<f64>,
    pub theta: Vec<C64>,
    pub f: Vec<C64>,
    pub fx: Vec<C64>,
}

impl ReconstructedTheta {
    /// Jet of F at grid point i, continued through F″ = −2(3F² − 2(a+b)F + ab).
    pub fn f_jet(&self, i: usize, r: &ThetaReconstruction) -> Jet {
        let (f, fx) = (self.f[i], self.fx[i]);
        let s = r.a + r.b;
        let fxx = -2.0 * (3.0 * f * f - 2.0 * s * f + r.a * r.b);
        let fxxx = -2.0 * (6.0 * f - 2.0 * s) * fx;
        Jet::from_derivs(&[f, fx, fxx, fxxx])
    }
}

/// Double quadrature of the inverted elliptic integral on a grid of real x.
pub fn reconstruct_theta(r: &ThetaReconstruction, x_grid: &[f64]) -> Result<ReconstructedTheta> {
    if x_grid.is_empty() {
        return Ok(ReconstructedTheta { xs: vec![], theta: vec![], f: vec![], fx: vec![] });
    }
    let (lo, hi) = x_grid.iter().fold((r.x0, r.x0), |(l, h), &x| (l.min(x), h.max(x)));
    let y0 = [r.f0, r.fx0, r.phi0, r.phix0];
    let s = r.a + r.b;
    let ab = r.a * r.b;
    let rhs = |_: f64, y: &[C64], dy: &mut [C64]| {
        dy[0] = y[1];
        dy[1] = -2.0 * (3.0 * y[0] * y[0] - 2.0 * s * y[0] + ab);
        dy[2] = y[3];
        dy[3] = y[0];
    };
    let tol = Tolerance::new(1e-13, 1e-13, 200_000)?;
    let fwd = if hi > r.x0 { Some(integrate_ode(rhs, &y0, (r.x0, hi), &tol)?) } else { None };
    let back = if lo < r.x0 { Some(integrate_ode(rhs, &y0, (r.x0, lo), &tol)?) } else { None };
    let mut out = ReconstructedTheta { xs: x_grid.to_vec(), theta: vec![], f: vec![], fx: vec![] };
    for &x in x_grid {
        let y = if x == r.x0 {
            y0.to_vec()
        } else {
            let traj = if x > r.x0 { fwd.as_ref() } else { back.as_ref() };
            traj.and_then(|t| t.eval(x)).ok_or_else(|| Error::InversionFailed(format!("no state at {x}")))?
        };
        let xc = C64::new(x, 0.0);
        out.theta.push((y[2] + r.kappa * xc * xc + r.d * xc + r.e).exp());
        out.f.push(y[0]);
        out.fx.push(y[1]);
    }
    Ok(out)
}

/// Largest deviation of ln(target/θ) from its least-squares quadratic in x, as a
/// gauge-independent comparison of a reconstruction with a genuine theta.
pub fn quadratic_gauge_residual(xs: &[f64], theta: &[C64], target: &[C64]) -> Result<f64> {
    if xs.len() != theta.len() || xs.len() != target.len() || xs.len() < 4 {
        return Err(Error::InvalidParameter("need at least four matching samples".into()));
    }
    // Unwrap the phase along the grid so the logarithm is continuous.
    let mut logs = Vec::with_capacity(xs.len());
    let mut prev: Option<C64> = None;
    for (t, th) in target.iter().zip(theta) {
        let mut l = (t / th).ln();
        if let Some(p) = prev {
            let k = ((p.im - l.im) / (2.0 * PI)).round();
            l.im += 2.0 * PI * k;
        }
        prev = Some(l);
        logs.push(l);
    }
    let rows: Vec<Vec<C64>> = xs.iter().map(|&x| vec![C64::new(1.0, 0.0), C64::new(x, 0.0), C64::new(x * x, 0.0)]).collect();
    let c = least_squares(&rows, &logs)?;
    let scale = logs.iter().map(|l| l.norm()).fold(1.0, f64::max);
    Ok(xs
        .iter()
        .zip(&logs)
        .map(|(&x, l)| (l - (c[0] + c[1] * x + c[2] * x * x)).norm())
        .fold(0.0, f64::max)
        / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn taus() -> Vec<Modulus> {
        [c(0.0, 2.0), c(0.0, 3.0), c(0.5, 1.0)].into_iter().map(|t| Modulus::new(t).unwrap()).collect()
    }

    fn points() -> Vec<C64> {
        (0..20).map(|i| c(0.05 + 0.047 * i as f64, 0.13 + 0.021 * ((i * 7) % 11) as f64)).collect()
    }

    #[test]
    fn closed_system_for_all_characteristics() {
        for tau in taus() {
            for x in points() {
                for eps in -1..=2 {
                    for delta in -1..=2 {
                        for r in closed_system_residual(x, &tau, eps, delta).unwrap() {
                            assert!(r.relative() < 1e-9, "τ = {} x = {x} [{eps};{delta}]: {:e}", tau.tau(), r.relative());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn closed_system_is_periodic() {
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let x = c(0.21, 0.3);
        for (a, b) in closed_system_residual(x, &tau, 0, 1).unwrap().iter().zip(closed_system_residual(x + 1.0, &tau, 0, 1).unwrap()) {
            assert!(a.relative() < 1e-10 && b.relative() < 1e-10);
        }
    }

    #[test]
    fn closed_system_at_a_critical_point_of_theta1() {
        // θ₁′ vanishes at x = ½ on the real line.
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let x = find_root(|z| jacobi_theta_jet(1, z, &tau, 1).unwrap().deriv(1), c(0.45, 0.0), &Tolerance::uniform(1e-15).unwrap()).unwrap();
        assert!((x - 0.5).norm() < 1e-10);
        let [_, r] = closed_system_residual(x, &tau, 0, 0).unwrap();
        assert!(r.relative() < 1e-9);
    }

    #[test]
    fn index_map_values() {
        assert_eq!(index_map(2).unwrap(), (3, 4));
        assert_eq!(index_map(3).unwrap(), (4, 2));
        assert_eq!(index_map(4).unwrap(), (2, 3));
        assert!(index_map(1).is_err());
    }

    #[test]
    fn lambda_system() {
        for tau in taus() {
            for x in points() {
                let r = lambda_system_residual(x, c(0.3, 0.7), &tau, c(0.0, 0.0)).unwrap();
                for (i, ri) in r.iter().enumerate() {
                    assert!(ri.relative() < 1e-9, "τ = {} x = {x} eq {i}: {:e}", tau.tau(), ri.relative());
                }
            }
        }
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let a = lambda_system_residual(c(0.2, 0.1), c(0.3, 0.7), &tau, c(0.0, 0.0)).unwrap();
        let b = lambda_system_residual(c(0.2, 0.1), c(0.3, 0.7), &tau, c(0.7, -0.2)).unwrap();
        assert!((a[5].value - b[5].value).norm() < 1e-12 * a[5].scale.max(b[5].scale));
        assert!(matches!(lambda_system_residual(c(0.2, 0.1), c(1.0, 0.0), &tau, c(0.0, 0.0)), Err(Error::DegenerateU(_))));
    }

    #[test]
    fn rational_integrals_are_constant() {
        for tau in taus() {
            let (a1, a2, spread) = rational_integral_constants(&points(), &tau).unwrap();
            assert!(spread < 1e-10, "{spread:e}");
            assert!((a1 - 1.0).norm() < 1e-10 && (a2 - 1.0).norm() < 1e-10, "{a1} {a2}");
        }
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let div = LambdaDivisor::new(c(0.3, 0.2), tau, c(0.0, 0.0)).unwrap();
        let samples: Vec<ThetaBasisSample> = points().iter().map(|&x| ThetaBasisSample::at(x, &tau, &div).unwrap()).collect();
        let scaled: Vec<ThetaBasisSample> = samples
            .iter()
            .map(|s| ThetaBasisSample { theta: s.theta.map(|t| t * c(2.5, -1.0)), ..*s })
            .collect();
        let (b1, b2, _) = rational_integrals(&scaled, &tau).unwrap();
        let (a1, a2, _) = rational_integrals(&samples, &tau).unwrap();
        assert!((a1 - b1).norm() < 1e-12 && (a2 - b2).norm() < 1e-12);
        let perturbed: Vec<ThetaBasisSample> = samples
            .iter()
            .map(|s| {
                let mut t = s.theta;
                t[1] *= 1.01;
                ThetaBasisSample { theta: t, ..*s }
            })
            .collect();
        assert!(rational_integrals(&perturbed, &tau).unwrap().2 > 1e-4);
    }

    #[test]
    fn fifth_order_equation() {
        for tau in taus() {
            for which in 1..=4u8 {
                for x in points() {
                    let r = fifth_order_residual(x, &tau, which).unwrap();
                    assert!(r.relative() < 1e-7, "τ = {} θ{which} x = {x}: {:e}", tau.tau(), r.relative());
                }
            }
        }
    }

    #[test]
    fn fifth_order_gauge_invariance() {
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let x = c(0.3, 0.2);
        let kap = kappa(&tau).unwrap();
        let base = f_jet(x, &tau, 3, kap).unwrap();
        // θ → Cθ leaves F unchanged; x → x + 1 maps θ₃ to itself.
        let shifted = f_jet(x + 1.0, &tau, 3, kap).unwrap();
        for k in 0..=3 {
            assert!((base.coeffs()[k] - shifted.coeffs()[k]).norm() < 1e-9 * base.coeffs()[k].norm().max(1.0));
        }
        let r = fifth_order_residual(x + 1.0, &tau, 3).unwrap();
        assert!(r.relative() < 1e-7);
    }

    #[test]
    fn kappa_is_pinned_by_the_equation() {
        for tau in taus() {
            let formula = kappa(&tau).unwrap();
            let solved = solve_kappa(c(0.3, 0.2), &tau, 3, formula).unwrap();
            assert!((solved - formula).norm() < 1e-9 * formula.norm().max(1.0), "{solved} vs {formula}");
            for x in [c(0.1, 0.4), c(0.7, 0.1)] {
                let r = fifth_order_residual_from_f(&f_jet(x, &tau, 3, solved).unwrap(), x).unwrap();
                assert!(r.relative() < 1e-7);
            }
            // The other transcription, with π²/12, is not a solution.
            let tc = theta_constants(&tau).unwrap();
            let other = -(2.0 * eta_half(&tau).unwrap() + PI * PI / 12.0 * (tc.theta3_0.powi(4) + tc.theta4_0.powi(4)));
            let r = fifth_order_residual_from_f(&f_jet(c(0.3, 0.2), &tau, 3, other).unwrap(), c(0.3, 0.2)).unwrap();
            assert!(r.relative() > 1e-4);
        }
    }

    #[test]
    fn theta_from_the_inverted_integral() {
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let seed = ThetaReconstruction::from_theta(&tau, 3, 0.17).unwrap();
        assert!(seed.seed_residual() < 1e-12);
        let xs: Vec<f64> = (0..41).map(|i| -1.0 + 0.05 * i as f64).collect();
        let rec = reconstruct_theta(&seed, &xs).unwrap();
        let exact: Vec<C64> = xs.iter().map(|&x| jacobi_theta_jet(3, c(x, 0.0), &tau, 0).unwrap().value()).collect();
        let i0 = xs.iter().position(|&x| x == 0.0).unwrap();
        assert!((rec.theta[i0] - theta_constants(&tau).unwrap().theta3_0).norm() < 1e-10);
        for (r, e) in rec.theta.iter().zip(&exact) {
            assert!((r - e).norm() < 1e-8 * e.norm());
        }
        let gauged = ThetaReconstruction { d: c(0.4, -0.3), e: c(1.5, 0.2), ..seed };
        let rec2 = reconstruct_theta(&gauged, &xs).unwrap();
        assert!(quadratic_gauge_residual(&xs, &rec2.theta, &exact).unwrap() < 1e-6);
        for i in [3, 17, 29] {
            let r = fifth_order_residual_from_f(&rec.f_jet(i, &seed), c(xs[i], 0.0)).unwrap();
            assert!(r.relative() < 1e-6);
        }
    }
}
