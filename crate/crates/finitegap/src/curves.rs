//! Hyperelliptic spectral curves μ² = c·∏(λ − E_k), sheet-tagged evaluation
//! of μ, and the genus-2 curve that covers two elliptic curves.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::{find_root, poly_mul, Tolerance};
use crate::theta::{jacobi_theta_jet, theta_constants, Modulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sheet {
    Plus,
    Minus,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Plus => 1.0,
            Sheet::Minus => -1.0,
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Sheet::Plus),
            -1 => Ok(Sheet::Minus),
            _ => Err(Error::InvalidParameter(format!("sheet must be +1 or -1, got {s}"))),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sheet::Plus => Sheet::Minus,
            Sheet::Minus => Sheet::Plus,
        }
    }
}

/// μ² = leading_coeff · ∏(λ − E_k) with 2g+1 distinct branch points.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperellipticCurve {
    branch_points: Vec<C64>,
    leading_coeff: C64,
}

impl HyperellipticCurve {
    pub fn new(branch_points: Vec<C64>, leading_coeff: C64) -> Result<Self> {
        let n = branch_points.len();
        if n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("need an odd number of branch points, got {n}")));
        }
        if leading_coeff.norm() == 0.0 || !leading_coeff.re.is_finite() || !leading_coeff.im.is_finite() {
            return Err(Error::InvalidParameter("leading coefficient must be finite and nonzero".into()));
        }
        let scale = branch_points.iter().map(|e| e.norm()).fold(1.0, f64::max);
        for (i, a) in branch_points.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::InvalidParameter(format!("branch point {a} is not finite")));
            }
            for b in &branch_points[i + 1..] {
                if (a - b).norm() <= 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!("branch points {a} and {b} coincide")));
                }
            }
        }
        Ok(Self { branch_points, leading_coeff })
    }

    pub fn monic(branch_points: Vec<C64>) -> Result<Self> {
        Self::new(branch_points, C64::new(1.0, 0.0))
    }

    pub fn genus(&self) -> usize {
        (self.branch_points.len() - 1) / 2
    }

    pub fn branch_points(&self) -> &[C64] {
        &self.branch_points
    }

    pub fn leading_coeff(&self) -> C64 {
        self.leading_coeff
    }

    /// Typical size of the branch points, at least 1.
    pub fn scale(&self) -> f64 {
        self.branch_points.iter().map(|e| e.norm()).fold(1.0, f64::max)
    }

    /// Ascending coefficients of the monic polynomial ∏(λ − E_k).
    pub fn monic_coeffs(&self) -> Vec<C64> {
        self.branch_points
            .iter()
            .fold(vec![C64::new(1.0, 0.0)], |acc, e| poly_mul(&acc, &[-e, C64::new(1.0, 0.0)]))
    }

    /// c·∏(λ − E_k).
    pub fn eval(&self, lambda: C64) -> C64 {
        self.leading_coeff * self.branch_points.iter().map(|e| lambda - e).product::<C64>()
    }

    /// μ = ±√c·∏√(λ − E_k) with principal square roots.
    pub fn mu(&self, lambda: C64, sheet: Sheet) -> SpectralPoint {
        let tol = 1e-14 * self.scale();
        let ramified = self.branch_points.iter().any(|e| (lambda - e).norm() <= tol);
        let mu = if ramified {
            C64::new(0.0, 0.0)
        } else {
            sheet.sign() * self.leading_coeff.sqrt() * self.branch_points.iter().map(|e| (lambda - e).sqrt()).product::<C64>()
        };
        SpectralPoint { lambda, mu, sheet, ramified }
    }

    /// μ continued analytically along a polyline, starting on `sheet` at the first vertex.
    pub fn mu_along_path(&self, path: &[C64], sheet: Sheet) -> Result<Vec<SpectralPoint>> {
        let mut out: Vec<SpectralPoint> = Vec::with_capacity(path.len());
        for &l in path {
            let mut p = self.mu(l, Sheet::Plus);
            if p.ramified {
                return Err(Error::ZeroOfROnPath(format!("path passes through branch point {l}")));
            }
            match out.last() {
                None => {
                    if sheet == Sheet::Minus {
                        p.mu = -p.mu;
                    }
                    p.sheet = sheet;
                }
                Some(prev) => {
                    if (p.mu - prev.mu).norm() > (p.mu + prev.mu).norm() {
                        p.mu = -p.mu;
                    }
                    // Sheet label always refers to the principal convention.
                    p.sheet = if (p.mu - self.mu(l, Sheet::Plus).mu).norm() == 0.0 { Sheet::Plus } else { Sheet::Minus };
                }
            }
            out.push(p);
        }
        Ok(out)
    }

    /// One catalog line: `genus lead_re,lead_im e1_re,e1_im ...`.
    pub fn to_record(&self) -> String {
        let mut s = format!("{} {},{}", self.genus(), self.leading_coeff.re, self.leading_coeff.im);
        for e in &self.branch_points {
            s.push_str(&format!(" {},{}", e.re, e.im));
        }
        s
    }

    pub fn from_record(line: &str) -> Result<Self> {
        let mut it = line.split_whitespace();
        let bad = |what: &str| Error::InvalidParameter(format!("malformed curve record ({what}): {line}"));
        let genus: usize = it.next().ok_or_else(|| bad("genus"))?.parse().map_err(|_| bad("genus"))?;
        let pair = |tok: &str| -> Result<C64> {
            let (a, b) = tok.split_once(',').ok_or_else(|| bad("pair"))?;
            Ok(C64::new(a.parse().map_err(|_| bad("number"))?, b.parse().map_err(|_| bad("number"))?))
        };
        let lead = pair(it.next().ok_or_else(|| bad("leading coefficient"))?)?;
        let bps = it.map(pair).collect::<Result<Vec<_>>>()?;
        if bps.len() != 2 * genus + 1 {
            return Err(bad("branch point count"));
        }
        Self::new(bps, lead)
    }
}

impl fmt::Display for HyperellipticCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

/// Parse a catalog: one curve per line, blank lines and `#` comments ignored.
pub fn parse_catalog(text: &str) -> Result<Vec<HyperellipticCurve>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(HyperellipticCurve::from_record)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lambda: C64,
    pub mu: C64,
    pub sheet: Sheet,
    /// λ is a branch point, so the sheet label carries no information.
    pub ramified: bool,
}

pub fn mu_of_lambda(curve: &HyperellipticCurve, lambda: C64, sheet: Sheet) -> SpectralPoint {
    curve.mu(lambda, sheet)
}

/// Complete elliptic integral K(m) by the arithmetic-geometric mean.
fn complete_k(m: C64) -> C64 {
    let mut a = C64::new(1.0, 0.0);
    let mut b = (1.0 - m).sqrt();
    for _ in 0..64 {
        let an = 0.5 * (a + b);
        let mut bn = (a * b).sqrt();
        if (an - bn).norm() > (an + bn).norm() {
            bn = -bn;
        }
        a = an;
        b = bn;
        if (a - b).norm() <= 1e-16 * a.norm() {
            break;
        }
    }
    PI / (2.0 * a)
}

/// The modulus τ with k²(τ) = ϑ₂⁴/ϑ₃⁴ = m.
pub fn modulus_from_k2(m: C64) -> Result<Modulus> {
    if m.norm() == 0.0 || (m - 1.0).norm() == 0.0 {
        return Err(Error::InvalidParameter(format!("k² = {m} is degenerate")));
    }
    let guess = C64::new(0.0, 1.0) * complete_k(1.0 - m) / complete_k(m);
    let tol = Tolerance::uniform(1e-15)?;
    let k2 = |t: C64| -> C64 {
        match Modulus::new(t).and_then(|md| theta_constants(&md)) {
            Ok(tc) => (tc.theta2_0 / tc.theta3_0).powi(4) - m,
            Err(_) => C64::new(f64::NAN, f64::NAN),
        }
    };
    let t = find_root(k2, guess, &tol).unwrap_or(guess);
    Modulus::new(t)
}

/// ϑ₂²θ₄²(u|τ) / (ϑ₃²θ₁²(u|τ)), the degree-two function on the torus vanishing at τ/2.
pub fn cover_function(u: C64, tau: &Modulus) -> Result<C64> {
    Ok(cover_sqrt(u, tau)?.powi(2))
}

fn cover_sqrt(u: C64, tau: &Modulus) -> Result<C64> {
    let tc = theta_constants(tau)?;
    let t1 = jacobi_theta_jet(1, u, tau, 0)?.value();
    if t1.norm() == 0.0 {
        return Err(Error::PoleHit(format!("θ₁ vanishes at u = {u}")));
    }
    Ok(tc.theta2_0 * jacobi_theta_jet(4, u, tau, 0)?.value() / (tc.theta3_0 * t1))
}

/// μ² = λ(λ−1)(λ−a)(λ−b)(λ−ab) together with the moduli of its two elliptic quotients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiReductionCurve {
    pub a: C64,
    pub b: C64,
    pub tau: Modulus,
    pub kappa: Modulus,
}

impl JacobiReductionCurve {
    /// Validates that k²(τ) and k²(ϰ) are the two critical values X(±√(ab)).
    pub fn new(a: C64, b: C64, tau: Modulus, kappa: Modulus) -> Result<Self> {
        let pts = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), a, b, a * b];
        for i in 0..5 {
            for j in i + 1..5 {
                if (pts[i] - pts[j]).norm() < 1e-12 {
                    return Err(Error::InvalidParameter(format!("branch points {} and {} coincide", pts[i], pts[j])));
                }
            }
        }
        let curve = Self { a, b, tau, kappa };
        let (xp, xm) = curve.critical_values();
        let k2 = |md: &Modulus| -> Result<C64> {
            let tc = theta_constants(md)?;
            Ok((tc.theta2_0 / tc.theta3_0).powi(4))
        };
        let (kt, kk) = (k2(&tau)?, k2(&kappa)?);
        let close = |x: C64, y: C64| (x - y).norm() <= 1e-8 * x.norm().max(1.0);
        if !((close(kt, xp) && close(kk, xm)) || (close(kt, xm) && close(kk, xp))) {
            return Err(Error::InconsistentCover(format!(
                "k²(τ) = {kt}, k²(ϰ) = {kk} do not match the critical values {xp}, {xm}"
            )));
        }
        Ok(curve)
    }

    /// Moduli computed from the branch points; τ carries X(√(ab)), ϰ carries X(−√(ab)).
    pub fn from_branch_points(a: C64, b: C64) -> Result<Self> {
        let probe = Self { a, b, tau: Modulus::new(C64::new(0.0, 1.0))?, kappa: Modulus::new(C64::new(0.0, 1.0))? };
        let (xp, xm) = probe.critical_values();
        Self::new(a, b, modulus_from_k2(xp)?, modulus_from_k2(xm)?)
    }

    pub fn curve(&self) -> HyperellipticCurve {
        HyperellipticCurve::monic(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), self.a, self.b, self.a * self.b])
            .expect("distinct branch points checked at construction")
    }

    /// X(λ) = (1−a)(1−b)λ / ((λ−a)(λ−b)); invariant under λ ↦ ab/λ.
    pub fn cover_map(&self, lambda: C64) -> C64 {
        (1.0 - self.a) * (1.0 - self.b) * lambda / ((lambda - self.a) * (lambda - self.b))
    }

    /// X(√(ab)) and X(−√(ab)).
    pub fn critical_values(&self) -> (C64, C64) {
        let r = (self.a * self.b).sqrt();
        (self.cover_map(r), self.cover_map(-r))
    }
}

fn solve_on_torus(target: C64, tau: &Modulus, guess: C64) -> Result<C64> {
    // Solve the square-root relation, which has simple roots, with the sign
    // of the root chosen to match the guess.
    let s = target.sqrt();
    let g0 = cover_sqrt(guess, tau)?;
    let s = if (g0 - s).norm() <= (g0 + s).norm() { s } else { -s };
    let tol = Tolerance::uniform(1e-14)?;
    let u = find_root(|u| cover_sqrt(u, tau).map(|v| v - s).unwrap_or(C64::new(f64::NAN, f64::NAN)), guess, &tol)?;
    Ok(u)
}

/// Holomorphic integrals (u₁, u₂) at λ from f_τ(u₁) = X(λ) and f_ϰ(u₂) = X(λ).
pub fn cover_integrals(red: &JacobiReductionCurve, lambda: C64, guesses: (C64, C64)) -> Result<(C64, C64)> {
    let x = red.cover_map(lambda);
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::PoleHit(format!("λ = {lambda} maps to the pole of the cover")));
    }
    let u1 = solve_on_torus(x, &red.tau, guesses.0)?;
    let u2 = solve_on_torus(x, &red.kappa, guesses.1)?;
    for (u, md) in [(u1, &red.tau), (u2, &red.kappa)] {
        let r = cover_function(u, md)? - x;
        if r.norm() > 1e-8 * x.norm().max(1.0) {
            return Err(Error::InconsistentCover(format!("relation residual {r:e} at λ = {lambda}")));
        }
    }
    Ok((u1, u2))
}

/// Continue (u₁, u₂) along a polyline in λ, each step seeded by the previous solution.
pub fn cover_integrals_path(red: &JacobiReductionCurve, path: &[C64], start: (C64, C64)) -> Result<Vec<(C64, C64)>> {
    let mut cur = start;
    let mut out = Vec::with_capacity(path.len());
    for &l in path {
        cur = cover_integrals(red, l, cur)?;
        out.push(cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::invariants_from_tau;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn curve() -> HyperellipticCurve {
        HyperellipticCurve::monic(vec![c(-1.0, 0.0), c(0.0, 0.5), c(2.0, 0.0)]).unwrap()
    }

    #[test]
    fn branch_point_gives_zero() {
        let p = curve().mu(c(-1.0, 0.0), Sheet::Plus);
        assert!(p.ramified && p.mu.norm() == 0.0);
    }

    #[test]
    fn sheet_flip() {
        let l = c(0.3, -0.7);
        let cv = curve();
        assert!((cv.mu(l, Sheet::Plus).mu + cv.mu(l, Sheet::Minus).mu).norm() < 1e-15);
        let p = cv.mu(l, Sheet::Plus);
        assert!((p.mu * p.mu - cv.eval(l)).norm() < 1e-12);
    }

    #[test]
    fn positive_sheet_at_infinity() {
        let cv = HyperellipticCurve::new(vec![c(-1.0, 0.0), c(0.0, 0.5), c(2.0, 0.0)], c(4.0, 0.0)).unwrap();
        let l = c(1e6, 0.0);
        let r = cv.mu(l, Sheet::Plus).mu / l.powf(1.5);
        assert!((r - 2.0).norm() < 1e-5);
    }

    #[test]
    fn rejects_bad_curves() {
        assert!(HyperellipticCurve::monic(vec![c(0.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(HyperellipticCurve::monic(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn record_round_trip() {
        let cv = curve();
        let back = HyperellipticCurve::from_record(&cv.to_record()).unwrap();
        assert_eq!(cv, back);
        let cat = parse_catalog("# comment\n\n1 1,0 0,0 1,0 2,0\n").unwrap();
        assert_eq!(cat.len(), 1);
        assert!(HyperellipticCurve::from_record("1 1,0 0,0").is_err());
    }

    #[test]
    fn path_continuation_is_smooth() {
        let cv = curve();
        let path: Vec<C64> = (0..=200).map(|k| c(-3.0 + 0.03 * k as f64, 0.2)).collect();
        let pts = cv.mu_along_path(&path, Sheet::Plus).unwrap();
        for w in pts.windows(2) {
            assert!((w[1].mu - w[0].mu).norm() < 0.5);
        }
    }

    #[test]
    fn two_gap_lame_curve() {
        let tau = Modulus::new(c(0.0, 2.0)).unwrap();
        let inv = invariants_from_tau(&tau).unwrap();
        let (g2, g3) = (inv.g2 / 16.0, inv.g3 / 64.0);
        let r1 = (48.0 * g2).sqrt();
        let cubic = crate::numerics::poly_roots(&[432.0 * g3, -36.0 * g2, c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let mut bp = vec![r1, -r1];
        bp.extend(cubic);
        let cv = HyperellipticCurve::monic(bp).unwrap();
        for k in 0..10 {
            let l = c(k as f64 * 0.7 - 3.0, 0.4 * k as f64 - 1.0);
            let mu = cv.mu(l, Sheet::Plus).mu;
            let rhs = (l * l - 48.0 * g2) * (l * l * l - 36.0 * g2 * l + 432.0 * g3);
            assert!((mu * mu - rhs).norm() < 1e-9 * rhs.norm());
        }
    }

    #[test]
    fn modulus_from_k2_round_trip() {
        let tau = Modulus::new(c(0.0, 1.3)).unwrap();
        let tc = theta_constants(&tau).unwrap();
        let m = (tc.theta2_0 / tc.theta3_0).powi(4);
        let back = modulus_from_k2(m).unwrap();
        assert!((back.tau() - tau.tau()).norm() < 1e-12);
    }

    #[test]
    fn cover_limits_and_residual() {
        let red = JacobiReductionCurve::from_branch_points(c(0.5, 0.0), c(3.0, 0.0)).unwrap();
        let (t, k) = (red.tau.tau(), red.kappa.tau());
        let (u1, u2) = cover_integrals(&red, c(1e6, 0.0), (t / 2.0 + 0.01, k / 2.0 + 0.01)).unwrap();
        assert!((u1 - t / 2.0).norm() < 1e-2 && (u2 - k / 2.0).norm() < 1e-2);
        assert!(JacobiReductionCurve::new(c(0.5, 0.0), c(3.0, 0.0), red.kappa, red.tau).is_ok());
        let wrong = Modulus::new(c(0.0, 1.0)).unwrap();
        assert!(matches!(
            JacobiReductionCurve::new(c(0.5, 0.0), c(3.0, 0.0), wrong, red.kappa),
            Err(Error::InconsistentCover(_))
        ));
    }
}
