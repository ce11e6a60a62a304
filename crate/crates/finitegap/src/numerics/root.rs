use num_complex::Complex64 as C64;

use super::{linalg::solve_linear, Tolerance};
use crate::error::{Error, Result};

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Damped Newton iteration with an analytic derivative.
pub fn find_root_newton<F, D>(mut f: F, mut df: D, guess: C64, tol: &Tolerance) -> Result<C64>
where
    F: FnMut(C64) -> C64,
    D: FnMut(C64) -> C64,
{
    let mut z = guess;
    let mut fz = f(z);
    let max_iter = tol.max_steps.min(200);
    for _ in 0..max_iter {
        if !finite(fz) {
            return Err(Error::NoConvergence(format!("non-finite value at {z}")));
        }
        if fz.norm() <= tol.abs_tol {
            return Ok(z);
        }
        let d = df(z);
        if d.norm() == 0.0 || !finite(d) {
            return Err(Error::NoConvergence(format!("zero derivative at {z}")));
        }
        let step = fz / d;
        let mut t = 1.0;
        loop {
            let zn = z - step * t;
            let fn_ = f(zn);
            if finite(fn_) && fn_.norm() < fz.norm() {
                z = zn;
                fz = fn_;
                break;
            }
            t *= 0.5;
            if t < 1e-4 {
                // Accept the full step once we are at rounding level.
                if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
                    return Ok(z);
                }
                z -= step;
                fz = f(z);
                break;
            }
        }
        if step.norm() <= 2.0 * f64::EPSILON * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    if fz.norm() <= tol.abs_tol {
        Ok(z)
    } else {
        Err(Error::NoConvergence(format!("|f| = {:e} after {max_iter} iterations", fz.norm())))
    }
}

/// Root of an analytic function: damped Newton on a central-difference derivative,
/// falling back to secant steps when the damped step fails to decrease |f|.
pub fn find_root<F: FnMut(C64) -> C64>(mut f: F, guess: C64, tol: &Tolerance) -> Result<C64> {
    let mut z = guess;
    let mut fz = f(z);
    let mut prev: Option<(C64, C64)> = None;
    let max_iter = tol.max_steps.min(200);
    for _ in 0..max_iter {
        if !finite(fz) {
            return Err(Error::NoConvergence(format!("non-finite value at {z}")));
        }
        if fz.norm() == 0.0 {
            return Ok(z);
        }
        let h = 1e-7 * z.norm().max(1.0);
        let small = |s: C64, z: C64| s.norm() <= tol.abs_tol + tol.rel_tol * z.norm();
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        let mut moved = false;
        if finite(d) && d.norm() > 0.0 {
            let step = fz / d;
            if small(step, z) {
                return Ok(z - step);
            }
            let mut t = 1.0;
            while t >= 1.0 / 64.0 {
                let zn = z - step * t;
                let fnew = f(zn);
                if finite(fnew) && fnew.norm() < fz.norm() {
                    prev = Some((z, fz));
                    z = zn;
                    fz = fnew;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved && step.norm() <= 8.0 * f64::EPSILON * z.norm().max(1.0) {
                return Ok(z);
            }
        }
        if !moved {
            let (zp, fp) = prev.unwrap_or((z + h * 100.0, f(z + h * 100.0)));
            let den = fz - fp;
            if den.norm() == 0.0 {
                return Err(Error::NoConvergence(format!("stalled at {z}")));
            }
            let zn = z - fz * (z - zp) / den;
            prev = Some((z, fz));
            let done = small(zn - z, z);
            z = zn;
            fz = f(z);
            if done && finite(fz) {
                return Ok(z);
            }
        }
    }
    Err(Error::NoConvergence(format!("|f| = {:e} after {max_iter} iterations", fz.norm())))
}

/// Newton iteration for a square or overdetermined system (Gauss-Newton in the
/// latter case) with a central-difference Jacobian.
pub fn newton_system<F>(mut f: F, guess: &[C64], tol: &Tolerance) -> Result<Vec<C64>>
where
    F: FnMut(&[C64]) -> Vec<C64>,
{
    let n = guess.len();
    let mut z = guess.to_vec();
    let mut fz = f(&z);
    let norm = |v: &[C64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for _ in 0..tol.max_steps.min(100) {
        if !norm(&fz).is_finite() {
            return Err(Error::NoConvergence("non-finite system residual".into()));
        }
        if norm(&fz) == 0.0 {
            return Ok(z);
        }
        let m = fz.len();
        let mut jac = vec![vec![C64::new(0.0, 0.0); n]; m];
        for j in 0..n {
            let h = 1e-7 * z[j].norm().max(1.0);
            let mut zp = z.clone();
            zp[j] += h;
            let mut zm = z.clone();
            zm[j] -= h;
            let (fp, fm) = (f(&zp), f(&zm));
            for i in 0..m {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = if m == n {
            solve_linear(jac, fz.clone())?
        } else {
            super::least_squares(&jac, &fz)?
        };
        let mut t = 1.0;
        let base = norm(&fz);
        loop {
            let zn: Vec<C64> = z.iter().zip(&step).map(|(a, s)| a - s * t).collect();
            let fnew = f(&zn);
            if norm(&fnew) < base || t < 1e-3 {
                z = zn;
                fz = fnew;
                break;
            }
            t *= 0.5;
        }
        if norm(&step) * t <= tol.abs_tol + tol.rel_tol * norm(&z) {
            return Ok(z);
        }
    }
    if norm(&fz) <= tol.abs_tol {
        Ok(z)
    } else {
        Err(Error::NoConvergence(format!("system residual {:e}", norm(&fz))))
    }
}
