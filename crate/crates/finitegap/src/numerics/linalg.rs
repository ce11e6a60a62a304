use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Gaussian elimination with partial pivoting for a square complex system.
pub fn solve_linear(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Result<Vec<C64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("matrix shape".into()));
    }
    if a.iter().flatten().chain(b.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NoConvergence("non-finite linear system".into()));
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[piv][col].norm() == 0.0 {
            return Err(Error::NoConvergence("singular linear system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let m = a[row][col] / a[col][col];
            if m.norm() != 0.0 {
                for k in col..n {
                    let t = a[col][k];
                    a[row][k] -= m * t;
                }
                let t = b[col];
                b[row] -= m * t;
            }
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[i][k] * x[k];
        }
        x[i] = s / a[i][i];
    }
    Ok(x)
}

/// Least-squares solution of an overdetermined system via Householder QR.
pub fn least_squares(a: &[Vec<C64>], b: &[C64]) -> Result<Vec<C64>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    if m < n || b.len() != m {
        return Err(Error::InvalidParameter("least-squares shape".into()));
    }
    let mut r: Vec<Vec<C64>> = a.to_vec();
    let mut y = b.to_vec();
    for k in 0..n {
        let alpha_norm = (k..m).map(|i| r[i][k].norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            return Err(Error::NoConvergence("rank-deficient least-squares system".into()));
        }
        let phase = if r[k][k].norm() == 0.0 { C64::new(1.0, 0.0) } else { r[k][k] / r[k][k].norm() };
        let alpha = -phase * alpha_norm;
        let mut v: Vec<C64> = (k..m).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        for j in k..n {
            let s: C64 = (k..m).map(|i| v[i - k].conj() * r[i][j]).sum();
            let f = s * (2.0 / vn);
            for i in k..m {
                r[i][j] -= v[i - k] * f;
            }
        }
        let s: C64 = (k..m).map(|i| v[i - k].conj() * y[i]).sum();
        let f = s * (2.0 / vn);
        for i in k..m {
            y[i] -= v[i - k] * f;
        }
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= r[i][k] * x[k];
        }
        if r[i][i].norm() == 0.0 {
            return Err(Error::NoConvergence("rank-deficient least-squares system".into()));
        }
        x[i] = s / r[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_solve() {
        let a = vec![vec![c(0.0, 1.0), c(2.0, 0.0)], vec![c(1.0, 0.0), c(1.0, -1.0)]];
        let x = vec![c(0.5, 0.25), c(-1.0, 2.0)];
        let b: Vec<C64> = a.iter().map(|r| r[0] * x[0] + r[1] * x[1]).collect();
        let s = solve_linear(a, b).unwrap();
        assert!((s[0] - x[0]).norm() < 1e-14 && (s[1] - x[1]).norm() < 1e-14);
    }

    #[test]
    fn consistent_overdetermined_system() {
        let a: Vec<Vec<C64>> = (0..6).map(|i| vec![c(1.0, 0.0), c(i as f64, 0.5 * i as f64)]).collect();
        let x = [c(2.0, -1.0), c(0.3, 0.7)];
        let b: Vec<C64> = a.iter().map(|r| r[0] * x[0] + r[1] * x[1]).collect();
        let s = least_squares(&a, &b).unwrap();
        assert!((s[0] - x[0]).norm() < 1e-13 && (s[1] - x[1]).norm() < 1e-13);
    }
}
