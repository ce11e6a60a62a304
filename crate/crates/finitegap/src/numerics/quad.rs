use num_complex::Complex64 as C64;

use super::Tolerance;
use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64)> {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let mut fv = |t: f64| -> Result<C64> {
        let v = f(t);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand(t))
        }
    };
    let fc = fv(c)?;
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = fv(c - dx)? + fv(c + dx)?;
        rk += s * WGK[j];
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    let est = rk * hl;
    let err = ((rk - rg) * hl).norm();
    Ok((est, err))
}

/// Adaptive Gauss-Kronrod (7, 15) integration of a complex integrand over [a, b].
pub fn quad_adaptive<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: &Tolerance) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let (v, e) = kronrod(&mut f, a, b)?;
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    let mut evals = 1usize;
    while err > tol.abs_tol.max(tol.rel_tol * total.norm()) {
        if evals >= tol.max_steps.min(5000) {
            return Err(Error::SubdivisionLimit);
        }
        let (imax, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, _, _) = pieces.swap_remove(imax);
        let m = 0.5 * (pa + pb);
        if m == pa || m == pb {
            return Err(Error::SubdivisionLimit);
        }
        let l = kronrod(&mut f, pa, m)?;
        let r = kronrod(&mut f, m, pb)?;
        pieces.push((pa, m, l.0, l.1));
        pieces.push((m, pb, r.0, r.1));
        evals += 2;
        total = pieces.iter().map(|p| p.2).sum();
        err = pieces.iter().map(|p| p.3).sum();
        // Once every piece is at rounding level there is nothing left to gain.
        if err <= 64.0 * f64::EPSILON * pieces.iter().map(|p| p.2.norm()).sum::<f64>() {
            break;
        }
    }
    Ok(total)
}

/// Integral of an analytic `f` along the straight segment from `z0` to `z1`.
pub fn quad_segment<F: FnMut(C64) -> C64>(mut f: F, z0: C64, z1: C64, tol: &Tolerance) -> Result<C64> {
    let dz = z1 - z0;
    quad_adaptive(|t| f(z0 + dz * t) * dz, 0.0, 1.0, tol)
}
