use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Horner evaluation; coefficients in ascending powers.
pub fn poly_eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

pub fn poly_derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

pub fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All roots of a polynomial (ascending coefficients) by Aberth-Ehrlich iteration
/// followed by a Newton polish on the original coefficients.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|z| z / lead).collect();
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    if n == 2 {
        let (b, cc) = (monic[1], monic[0]);
        let disc = (b * b - 4.0 * cc).sqrt();
        // Pick the sign that avoids cancellation.
        let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
        let r1 = q;
        let r2 = if q.norm() == 0.0 { C64::new(0.0, 0.0) } else { cc / q };
        return Ok(vec![r1, r2]);
    }
    let d = poly_derivative(&monic);
    // Fujiwara bound on the root moduli.
    let radius = (1..=n)
        .map(|k| monic[n - k].norm().powf(1.0 / k as f64))
        .fold(0.0, f64::max)
        * 2.0;
    let radius = if radius > 0.0 { radius } else { 1.0 };
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    let mut converged = false;
    let mut prev_step = f64::INFINITY;
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let p = poly_eval(&monic, z[i]);
            let dp = poly_eval(&d, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: C64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            max_step = max_step.max(w.norm() / z[i].norm().max(1e-300));
        }
        // Stop at full precision, or once every residual sits at rounding level.
        let noise = z.iter().all(|&zi| {
            let bound: f64 = monic.iter().rev().fold(0.0, |acc, a| acc * zi.norm() + a.norm());
            poly_eval(&monic, zi).norm() <= 16.0 * f64::EPSILON * bound
        });
        if max_step < 1e-15 || (noise && max_step >= prev_step) {
            converged = true;
            break;
        }
        prev_step = max_step;
    }
    if !converged {
        return Err(Error::NoConvergence("polynomial roots".into()));
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let dp = poly_eval(&d, *zi);
            if dp.norm() == 0.0 {
                break;
            }
            *zi -= poly_eval(&monic, *zi) / dp;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cubic_with_known_roots() {
        let roots = [c(1.0, 0.0), c(-0.5, 2.0), c(3.0, -1.0)];
        let mut p = vec![c(1.0, 0.0)];
        for r in roots {
            p = poly_mul(&p, &[-r, c(1.0, 0.0)]);
        }
        let mut found = poly_roots(&p).unwrap();
        for r in roots {
            let (i, _) = found
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - r).norm().partial_cmp(&(b.1 - r).norm()).unwrap())
                .unwrap();
            assert!((found[i] - r).norm() < 1e-12);
            found.remove(i);
        }
    }

    #[test]
    fn quadratic_without_cancellation() {
        let r = poly_roots(&[c(1e-10, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let small = r.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!((small - (1e-10 + 1e-20)).abs() < 1e-24);
    }

    #[test]
    fn quintic() {
        let roots = [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(3.0, 0.0), c(1.5, 0.0)];
        let mut p = vec![c(1.0, 0.0)];
        for r in roots {
            p = poly_mul(&p, &[-r, c(1.0, 0.0)]);
        }
        let found = poly_roots(&p).unwrap();
        for r in roots {
            assert!(found.iter().any(|z| (z - r).norm() < 1e-10));
        }
    }
}
