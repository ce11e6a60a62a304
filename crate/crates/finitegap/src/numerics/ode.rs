use num_complex::Complex64 as C64;

use super::Tolerance;
use crate::error::{Error, Result};

// Verner 6(5) "efficient" pair with a one-stage continuous extension of order 5.
const STAGES: usize = 9;
const DENSE: usize = 10;

const C: [f64; STAGES] = [0.0, 0.06, 0.095_933_333_333_333_33, 0.1439, 0.4973, 0.9725, 0.9995, 1.0, 1.0];

const A: [[f64; STAGES]; STAGES] = [
    [0.0; STAGES],
    [0.06, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.923_996_296_296_296_2e-2, 7.669_337_037_037_037e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.035975, 0.0, 0.107925, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.318_683_415_233_148_4, 0.0, -5.042_058_063_628_562, 4.220_674_648_395_414, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-41.872_591_664_327_516, 0.0, 159.432_562_163_137_5, -122.119_213_565_010_03, 5.531_743_066_200_054, 0.0, 0.0, 0.0, 0.0],
    [-54.430_156_935_316_504, 0.0, 207.067_251_365_018_48, -158.610_813_784_59, 6.991_816_585_950_242, -1.859_723_106_220_323_4e-2, 0.0, 0.0, 0.0],
    [-54.663_741_787_281_98, 0.0, 207.952_806_255_389_36, -159.288_957_474_499_5, 7.018_743_740_796_944, -1.833_878_590_504_572_2e-2, -5.119_484_997_882_099e-4, 0.0, 0.0],
    [3.438_957_868_357_036e-2, 0.0, 0.0, 0.258_262_455_563_350_3, 0.420_937_118_967_353_7, 4.405_396_469_669_31, -176.483_119_024_298_65, 172.364_133_401_415_07, 0.0],
];

const B_LOW: [f64; STAGES] = [
    4.909_967_648_382_49e-2, 0.0, 0.0, 0.225_111_222_951_652_42, 0.469_468_225_302_956_2,
    0.806_579_224_998_886_8, 0.0, -0.607_119_489_177_796, 5.686_113_944_047_569_6e-2,
];

const A_EXTRA: [f64; STAGES] = [
    1.652_415_901_357_280_6e-2, 0.0, 0.0, 0.305_312_818_751_417_9, 0.207_120_093_820_197_9,
    -1.293_879_140_655_123, 57.119_884_115_881_49, -55.879_792_075_109_32, 2.483_002_829_776_601_4e-2,
];
const C_EXTRA: f64 = 0.5;

// Row i: coefficients of s, s^2, ..., s^6 multiplying k_i in the interpolant.
const B_DENSE: [[f64; 6]; DENSE] = [
    [1.0, -5.308_169_607_103_577, 10.181_680_448_958_68, -7.520_036_991_611_715, 0.934_048_536_863_116_1, 0.746_867_191_577_065],
    [0.0; 6],
    [0.0; 6],
    [0.0, 6.272_050_253_212_501, -16.026_181_474_677_46, 12.844_356_324_519_618, -1.148_794_504_476_759_1, -1.683_168_143_014_549_8],
    [0.0, 6.876_491_702_846_304, -24.635_767_260_846_333, 33.210_786_483_797_17, -17.494_615_282_636_44, 2.464_041_475_806_649_6],
    [0.0, -35.544_451_710_599_6, 165.701_617_019_024_2, -385.463_539_549_114_3, 442.432_413_701_570_17, -182.720_642_991_211_2],
    [0.0, 1_918.654_856_698_011_4, -9_268.121_508_966_042, 20_858.337_028_772_55, -22_645.827_671_584_81, 8_960.474_176_055_992],
    [0.0, -1_883.069_802_132_718_2, 9_101.025_187_200_634, -20_473.188_551_959_534, 22_209.765_551_256_532, -8_782.168_250_963_5],
    [0.0, 0.119_024_796_351_236_43, -0.125_026_967_050_393_76, 1.779_956_919_394_999_1, -4.660_932_123_043_763, 2.886_977_374_347_921],
    [0.0, -8.0, 32.0, -40.0, 16.0, 0.0],
];

#[derive(Debug, Clone)]
struct Step {
    x0: f64,
    h: f64,
    y0: Vec<C64>,
    k: Vec<Vec<C64>>,
}

/// Accepted steps of an adaptive integration together with their dense-output data.
#[derive(Debug, Clone)]
pub struct Trajectory {
    xs: Vec<f64>,
    ys: Vec<Vec<C64>>,
    steps: Vec<Step>,
}

impl Trajectory {
    /// Accepted node abscissas (strictly monotone in the integration direction).
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[Vec<C64>] {
        &self.ys
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, &[C64])> {
        self.xs.iter().copied().zip(self.ys.iter().map(|y| y.as_slice()))
    }

    pub fn interpolation_order(&self) -> usize {
        5
    }

    pub fn dim(&self) -> usize {
        self.ys[0].len()
    }

    pub fn last(&self) -> (f64, &[C64]) {
        let n = self.xs.len() - 1;
        (self.xs[n], &self.ys[n])
    }

    /// Dense output at any x inside the integrated span.
    pub fn eval(&self, x: f64) -> Option<Vec<C64>> {
        let (lo, hi) = (self.xs[0].min(*self.xs.last()?), self.xs[0].max(*self.xs.last()?));
        if x < lo - 1e-14 * lo.abs().max(1.0) || x > hi + 1e-14 * hi.abs().max(1.0) {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.ys[0].clone());
        }
        let forward = self.xs.len() < 2 || self.xs[1] > self.xs[0];
        let idx = match self.xs.binary_search_by(|p| {
            let o = p.partial_cmp(&x).unwrap();
            if forward { o } else { o.reverse() }
        }) {
            Ok(i) => i.min(self.steps.len() - 1),
            Err(i) => i.saturating_sub(1).min(self.steps.len() - 1),
        };
        let st = &self.steps[idx];
        let s = (x - st.x0) / st.h;
        let mut w = [0.0; DENSE];
        for (i, row) in B_DENSE.iter().enumerate() {
            let mut acc = row[5];
            for j in (0..5).rev() {
                acc = acc * s + row[j];
            }
            w[i] = acc * s;
        }
        let mut y = st.y0.clone();
        for (i, wi) in w.iter().enumerate() {
            if *wi != 0.0 {
                for (yj, kj) in y.iter_mut().zip(&st.k[i]) {
                    *yj += kj * (wi * st.h);
                }
            }
        }
        Some(y)
    }
}

fn check_finite(v: &[C64], x: f64) -> Result<()> {
    if v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState(x))
    }
}

/// Adaptive Verner 6(5) integration of y' = f(x, y) over `span` (either direction).
///
/// `f(x, y, dy)` writes the derivative into `dy`.
pub fn integrate_ode<F>(mut f: F, y0: &[C64], span: (f64, f64), tol: &Tolerance) -> Result<Trajectory>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let (xa, xb) = span;
    let n = y0.len();
    check_finite(y0, xa)?;
    let mut traj = Trajectory { xs: vec![xa], ys: vec![y0.to_vec()], steps: Vec::new() };
    if xa == xb || n == 0 {
        return Ok(traj);
    }
    let dir = (xb - xa).signum();
    let len = (xb - xa).abs();

    let mut x = xa;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; DENSE];
    f(x, &y, &mut k[0]);
    check_finite(&k[0], x)?;

    let scale = |y: &[C64], i: usize| tol.abs_tol + tol.rel_tol * y[i].norm();
    // Initial step from the derivative norm.
    let d0 = (0..n).map(|i| (y[i].norm() / scale(&y, i)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
    let d1 = (0..n).map(|i| (k[0][i].norm() / scale(&y, i)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.clamp(1e-10 * len.max(1.0), len);

    let mut ytmp = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];
    let mut steps = 0usize;
    let mut rejected_last = false;

    while (xb - x) * dir > 0.0 {
        steps += 1;
        if steps > tol.max_steps {
            return Err(Error::StepLimitExceeded(x));
        }
        let last = (x + dir * h - xb) * dir >= 0.0;
        if last {
            h = (xb - x).abs();
        }
        let hs = dir * h;
        for s in 1..STAGES {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    if A[s][j] != 0.0 {
                        acc += k[j][i] * (hs * A[s][j]);
                    }
                }
                ytmp[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(x + C[s] * hs, &ytmp, &mut tail[0]);
            if s == STAGES - 1 {
                ynew.copy_from_slice(&ytmp);
            }
        }
        let mut err = 0.0f64;
        let mut finite = true;
        for i in 0..n {
            let mut e = C64::new(0.0, 0.0);
            for j in 0..STAGES {
                let d = A[STAGES - 1][j] - B_LOW[j];
                if d != 0.0 {
                    e += k[j][i] * d;
                }
            }
            e *= hs;
            let sc = tol.abs_tol + tol.rel_tol * y[i].norm().max(ynew[i].norm());
            let r = e.norm() / sc;
            if !r.is_finite() {
                finite = false;
            }
            err = err.max(r);
        }
        if !finite {
            if h < 1e-14 * len.max(1.0) {
                return Err(Error::NonFiniteState(x));
            }
            h *= 0.25;
            rejected_last = true;
            continue;
        }
        if err <= 1.0 {
            // Extra stage for the continuous extension.
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..STAGES {
                    if A_EXTRA[j] != 0.0 {
                        acc += k[j][i] * (hs * A_EXTRA[j]);
                    }
                }
                ytmp[i] = acc;
            }
            f(x + C_EXTRA * hs, &ytmp, &mut k[STAGES]);
            check_finite(&k[STAGES], x)?;
            traj.steps.push(Step { x0: x, h: hs, y0: y.clone(), k: k.clone() });
            x = if last { xb } else { x + hs };
            y.copy_from_slice(&ynew);
            check_finite(&y, x)?;
            traj.xs.push(x);
            traj.ys.push(y.clone());
            // First-same-as-last: stage 8 is f at the new point.
            let fsal = k[STAGES - 1].clone();
            k[0].copy_from_slice(&fsal);
            let mut fac = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-1.0 / 6.0) };
            fac = fac.clamp(0.2, 5.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h *= fac;
            rejected_last = false;
        } else {
            let fac = (0.9 * err.powf(-1.0 / 6.0)).clamp(0.1, 0.9);
            h *= fac;
            rejected_last = true;
            if h < 1e-14 * len.max(1.0) {
                return Err(Error::StepLimitExceeded(x));
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn zero_field_keeps_constant() {
        let t = integrate_ode(|_, _, dy| dy[0] = C64::new(0.0, 0.0), &[one()], (0.0, 1.0), &Tolerance::default()).unwrap();
        assert!(t.ys().iter().all(|y| (y[0] - one()).norm() == 0.0));
    }

    #[test]
    fn exponential_growth() {
        let tol = Tolerance::default();
        let t = integrate_ode(|_, y, dy| dy[0] = y[0], &[one()], (0.0, 1.0), &tol).unwrap();
        let (x, y) = t.last();
        assert_eq!(x, 1.0);
        assert!((y[0] - E).norm() < 10.0 * tol.abs_tol * E, "{}", (y[0] - E).norm());
        for i in 0..=50 {
            let xi = i as f64 / 50.0;
            let yi = t.eval(xi).unwrap()[0];
            assert!((yi - xi.exp()).norm() / xi.exp() < 100.0 * tol.rel_tol, "x={xi} {}", (yi - xi.exp()).norm());
        }
    }

    #[test]
    fn rotation_closes_after_one_period() {
        let w = C64::new(0.0, 2.0 * PI);
        let t = integrate_ode(|_, y, dy| dy[0] = w * y[0], &[one()], (0.0, 1.0), &Tolerance::default()).unwrap();
        assert!((t.last().1[0] - one()).norm() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let t = integrate_ode(|_, y, dy| dy[0] = y[0], &[one()], (0.0, -2.0), &Tolerance::default()).unwrap();
        assert!((t.last().1[0].re - (-2.0f64).exp()).abs() < 1e-12);
        let mid = t.eval(-1.3).unwrap()[0];
        assert!((mid.re - (-1.3f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn nonfinite_state_is_reported() {
        let r = integrate_ode(|_, y, dy| dy[0] = y[0] * y[0], &[one()], (0.0, 2.0), &Tolerance::default());
        assert!(matches!(r, Err(Error::StepLimitExceeded(_)) | Err(Error::NonFiniteState(_))));
    }
}
