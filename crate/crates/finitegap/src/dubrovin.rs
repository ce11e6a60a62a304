//! Dubrovin variables: the moving zeros γ_k(x) of R(x; λ), their flow with
//! sheet tracking, the differentiated Jacobi inversion relations, and the
//! logarithmic inversion behind the genus-1 pencil.
//!
//! The flow is integrated in Mumford coordinates U(λ) = ∏(λ − γ_k) and V(λ)
//! with V(γ_k) = ϱ_k, i.e. U = R and V = −½R_x. In these variables the vector
//! field is polynomial, so γ's crossing branch points or passing near each
//! other need no special treatment.

use num_complex::Complex64 as C64;

use crate::curves::{HyperellipticCurve, Sheet};
use crate::error::{Error, Result};
use crate::numerics::{find_root, integrate_ode, poly_eval, poly_mul, poly_roots, Tolerance, Trajectory};
use crate::potentials::{PencilV, PotentialSpec};

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// Points (γ_k, ϱ_k) of the curve, ϱ_k = sheet_k · μ(γ_k) with the principal branch of μ.
/// The flow uses ϱ_k/√c, i.e. the monic product ∏(γ_k − E_j), whatever the
/// leading coefficient c of the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DubrovinState {
    pub gammas: Vec<C64>,
    pub sheets: Vec<Sheet>,
}

impl DubrovinState {
    pub fn new(gammas: Vec<C64>, sheets: Vec<Sheet>) -> Result<Self> {
        if gammas.len() != sheets.len() {
            return Err(Error::ArityMismatch { expected: gammas.len(), got: sheets.len() });
        }
        Ok(Self { gammas, sheets })
    }

    pub fn genus(&self) -> usize {
        self.gammas.len()
    }

    /// ϱ_k on the given curve.
    pub fn rhos(&self, curve: &HyperellipticCurve) -> Vec<C64> {
        self.gammas.iter().zip(&self.sheets).map(|(&g, &s)| curve.mu(g, s).mu).collect()
    }
}

/// Ascending coefficients of ∏(λ − γ_k).
fn u_poly(gammas: &[C64]) -> Vec<C64> {
    gammas.iter().fold(vec![one()], |acc, g| poly_mul(&acc, &[-g, one()]))
}

/// The polynomial of degree < g through (γ_k, values_k).
fn interpolate(gammas: &[C64], values: &[C64]) -> Vec<C64> {
    let g = gammas.len();
    let mut out = vec![zero(); g];
    for k in 0..g {
        let mut basis = vec![one()];
        let mut den = one();
        for j in (0..g).filter(|&j| j != k) {
            basis = poly_mul(&basis, &[-gammas[j], one()]);
            den *= gammas[k] - gammas[j];
        }
        for (o, b) in out.iter_mut().zip(&basis) {
            *o += b * values[k] / den;
        }
    }
    out
}

/// Quotient of `num` by the monic polynomial `den` (both ascending).
fn div_monic(num: &[C64], den: &[C64]) -> Vec<C64> {
    let (n, d) = (num.len() - 1, den.len() - 1);
    if n < d {
        return vec![zero()];
    }
    let mut rem = num.to_vec();
    let mut q = vec![zero(); n - d + 1];
    for i in (0..=n - d).rev() {
        let c = rem[i + d];
        q[i] = c;
        for j in 0..=d {
            rem[i + j] -= c * den[j];
        }
    }
    q
}

/// Right side of the flow in the variables y = (U₀..U_{g−1}, V₀..V_{g−1}) of the
/// monic curve f; returns (dy, u) with u = 2Σγ − ΣE.
fn mumford_rhs(f: &[C64], y: &[C64]) -> (Vec<C64>, C64) {
    let g = y.len() / 2;
    let mut u = y[..g].to_vec();
    u.push(one());
    let v = &y[g..];
    let mut num = f.to_vec();
    for (i, t) in poly_mul(v, v).into_iter().enumerate() {
        num[i] -= t;
    }
    let w = div_monic(&num, &u);
    // The λ^g coefficient of W − (λ + c)U vanishes exactly when c is the potential.
    let c = w[g] - u[g - 1];
    let mut dv = vec![zero(); g];
    for (i, d) in dv.iter_mut().enumerate() {
        let lower = if i > 0 { u[i - 1] } else { zero() };
        *d = w[i] - lower - c * u[i];
    }
    let mut dy: Vec<C64> = v.iter().map(|z| -2.0 * z).collect();
    dy.extend(dv);
    (dy, c)
}

/// Sheet of (γ, ϱ) relative to the principal branch.
fn sheet_of(curve: &HyperellipticCurve, gamma: C64, rho: C64) -> Sheet {
    let m = curve.mu(gamma, Sheet::Plus).mu;
    if (rho - m).norm() <= (rho + m).norm() { Sheet::Plus } else { Sheet::Minus }
}

/// γ's listed in the order that best matches `prev`.
fn match_order(prev: &[C64], mut roots: Vec<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(prev.len());
    for p in prev {
        let (i, _) = roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - p).norm().total_cmp(&(b.1 - p).norm()))
            .expect("as many roots as γ's");
        out.push(roots.remove(i));
    }
    out
}

/// A flow of Dubrovin variables with its node states.
#[derive(Debug, Clone)]
pub struct DubrovinTrajectory {
    curve: HyperellipticCurve,
    traj: Trajectory,
    states: Vec<DubrovinState>,
}

impl DubrovinTrajectory {
    pub fn curve(&self) -> &HyperellipticCurve {
        &self.curve
    }

    pub fn xs(&self) -> &[f64] {
        self.traj.xs()
    }

    pub fn states(&self) -> &[DubrovinState] {
        &self.states
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    /// (U, V) at node i; U is monic of degree g, V of degree g − 1.
    pub fn mumford(&self, i: usize) -> (Vec<C64>, Vec<C64>) {
        split_mumford(&self.traj.ys()[i])
    }

    /// Dense-output state at any x in the span.
    pub fn state_at(&self, x: f64) -> Result<DubrovinState> {
        let y = self.traj.eval(x).ok_or_else(|| Error::InvalidParameter(format!("x = {x} outside the span")))?;
        let i = match self.xs().iter().position(|&t| (t - x) * (self.xs()[1.min(self.xs().len() - 1)] - self.xs()[0]) >= 0.0) {
            Some(i) => i,
            None => self.xs().len() - 1,
        };
        state_from_mumford(&self.curve, &y, &self.states[i].gammas)
    }

    /// 2Σγ_k − ΣE_k at node i.
    pub fn trace(&self, i: usize) -> C64 {
        let g = self.genus();
        -2.0 * self.traj.ys()[i][g - 1] - self.curve.branch_points().iter().sum::<C64>()
    }

    /// R(λ) = ∏(λ − γ_k) at node i.
    pub fn r_polynomial(&self, i: usize, lambda: C64) -> C64 {
        poly_eval(&self.mumford(i).0, lambda)
    }

    /// |V(γ_k)² − ∏(γ_k − E_j)| / scale at every node.
    pub fn on_curve_residuals(&self) -> Vec<f64> {
        let lead = self.curve.leading_coeff();
        (0..self.xs().len())
            .map(|i| {
                let (_, v) = self.mumford(i);
                self.states[i]
                    .gammas
                    .iter()
                    .map(|&g| {
                        let rho = poly_eval(&v, g);
                        let f = self.curve.eval(g) / lead;
                        (rho * rho - f).norm() / rho.norm_sqr().max(f.norm()).max(self.curve.scale())
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

fn split_mumford(y: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let g = y.len() / 2;
    let mut u = y[..g].to_vec();
    u.push(one());
    (u, y[g..].to_vec())
}

fn state_from_mumford(curve: &HyperellipticCurve, y: &[C64], prev: &[C64]) -> Result<DubrovinState> {
    let (u, v) = split_mumford(y);
    let gammas = match_order(prev, poly_roots(&u)?);
    let sl = curve.leading_coeff().sqrt();
    let sheets = gammas.iter().map(|&g| sheet_of(curve, g, sl * poly_eval(&v, g))).collect();
    DubrovinState::new(gammas, sheets)
}

/// dγ_k/dx = 2ϱ_k/∏_{j≠k}(γ_k − γ_j) with monic ϱ_k, evaluated pointwise.
pub fn dubrovin_rhs(curve: &HyperellipticCurve, state: &DubrovinState) -> Result<Vec<C64>> {
    let sl = curve.leading_coeff().sqrt();
    let rhos: Vec<C64> = state.rhos(curve).iter().map(|r| r / sl).collect();
    let g = state.genus();
    (0..g)
        .map(|k| {
            let den: C64 = (0..g).filter(|&j| j != k).map(|j| state.gammas[k] - state.gammas[j]).product();
            if den.norm() == 0.0 {
                return Err(Error::CollisionUnresolved(f64::NAN));
            }
            Ok(2.0 * rhos[k] / den)
        })
        .collect()
}

/// Integrate dγ_k/dx = 2ϱ_k/∏_{j≠k}(γ_k − γ_j) over `span`.
pub fn dubrovin_flow(curve: &HyperellipticCurve, init: &DubrovinState, span: (f64, f64), tol: &Tolerance) -> Result<DubrovinTrajectory> {
    let g = curve.genus();
    if init.genus() != g {
        return Err(Error::ArityMismatch { expected: g, got: init.genus() });
    }
    if g == 0 {
        return Err(Error::InvalidParameter("genus 0 has no Dubrovin variables".into()));
    }
    let scale = curve.scale();
    for (i, a) in init.gammas.iter().enumerate() {
        for b in &init.gammas[i + 1..] {
            if (a - b).norm() <= 1e-12 * scale {
                return Err(Error::InvalidParameter(format!("initial γ's {a} and {b} coincide")));
            }
        }
    }
    let sl = curve.leading_coeff().sqrt();
    let f = curve.monic_coeffs();
    let rhos: Vec<C64> = init.rhos(curve).iter().map(|r| r / sl).collect();
    let mut y0 = u_poly(&init.gammas)[..g].to_vec();
    y0.extend(interpolate(&init.gammas, &rhos));
    let traj = integrate_ode(
        |_, y, dy| {
            let (d, _) = mumford_rhs(&f, y);
            dy.copy_from_slice(&d);
        },
        &y0,
        span,
        tol,
    )?;
    let mut states = Vec::with_capacity(traj.xs().len());
    let mut prev = init.gammas.clone();
    for y in traj.ys() {
        let st = state_from_mumford(curve, y, &prev)?;
        prev = st.gammas.clone();
        states.push(st);
    }
    Ok(DubrovinTrajectory { curve: curve.clone(), traj, states })
}

/// Residuals of the x-derivatives of the inversion relations at every node:
/// Σ_k γ_k^n γ̇_k/ϱ_k − 2δ_{n,g−1} for n = 0..g−1. γ̇ comes from the flow and
/// ϱ from the curve with the tracked sheets.
pub fn inversion_residuals(traj: &DubrovinTrajectory) -> Vec<Vec<C64>> {
    let curve = traj.curve();
    let sl = curve.leading_coeff().sqrt();
    let f = curve.monic_coeffs();
    let g = traj.genus();
    (0..traj.xs().len())
        .map(|i| {
            let st = &traj.states()[i];
            let (dy, _) = mumford_rhs(&f, &traj.traj.ys()[i]);
            let du = &dy[..g];
            let rhos: Vec<C64> = st.rhos(curve).iter().map(|r| r / sl).collect();
            let ratios: Vec<C64> = (0..g)
                .map(|k| {
                    let gk = st.gammas[k];
                    let dprod: C64 = (0..g).filter(|&j| j != k).map(|j| gk - st.gammas[j]).product();
                    let gdot = -poly_eval(du, gk) / dprod;
                    gdot / rhos[k]
                })
                .collect();
            (0..g)
                .map(|n| {
                    let s: C64 = (0..g).map(|k| st.gammas[k].powi(n as i32) * ratios[k]).sum();
                    if n + 1 == g { s - 2.0 } else { s }
                })
                .collect()
        })
        .collect()
}

/// Dubrovin variables of a genus ≥ 1 Schrödinger potential at x0: roots of R
/// with ϱ_k = −½R_x(γ_k).
pub fn initial_state(spec: &PotentialSpec, x0: C64) -> Result<DubrovinState> {
    if matches!(spec, PotentialSpec::PencilV(_)) || spec.genus().is_none_or(|g| g == 0) {
        return Err(Error::UnsupportedVariant(format!("{} has no Dubrovin flow", spec.name())));
    }
    let curve = spec.curve()?;
    let coeffs = spec.r_coeff_jets(x0, 1)?;
    let values: Vec<C64> = coeffs.iter().map(|j| j.value()).collect();
    let slopes: Vec<C64> = coeffs.iter().map(|j| j.deriv(1)).collect();
    let gammas = poly_roots(&values)?;
    let sheets = gammas.iter().map(|&g| sheet_of(&curve, g, -0.5 * poly_eval(&slopes, g))).collect();
    DubrovinState::new(gammas, sheets)
}

/// r(x) for the pencil by Newton on its transcendental equation.
pub fn log_inversion_g1(p: &PencilV, x: C64, guess: C64) -> Result<C64> {
    if (x - p.b).norm() == 0.0 || (x - p.c).norm() == 0.0 {
        return Err(Error::InvalidParameter(format!("x = {x} hits a zero of φ")));
    }
    let f = |r: C64| p.log_relation(x, r).unwrap_or(C64::new(f64::NAN, f64::NAN));
    find_root(f, guess, &Tolerance::uniform(1e-14)?)
}

/// (E₂, E₁) evaluated from v, v′, v″ at x.
pub fn pencil_integrals(p: &PencilV, x: C64) -> Result<(C64, C64)> {
    let v = p.v_jet(x, 2)?.derivs();
    let phi = p.phi(x);
    let dphi = 2.0 * p.a * (2.0 * x - p.b - p.c);
    let e2 = (-0.5 * v[0] * v[2] + 0.25 * v[1] * v[1] - 2.0 * phi / v[0]) / 3.0;
    let e1 = 0.5 * phi * v[2] - 0.5 * dphi * v[1] + phi * phi / (v[0] * v[0]) + 2.0 * p.a * v[0];
    Ok((e2, e1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{invariants_from_tau, Lattice};
    use crate::potentials::{parse_potential_catalog, potential_value, r_polynomial, DEFAULT_CATALOG};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn by_name(name: &str) -> PotentialSpec {
        parse_potential_catalog(DEFAULT_CATALOG).unwrap().into_iter().find(|p| p.name() == name).unwrap()
    }

    fn tol() -> Tolerance {
        Tolerance::new(1e-13, 1e-13, 200_000).unwrap()
    }

    #[test]
    fn polynomial_helpers() {
        let g = [c(1.0, 0.5), c(-2.0, 0.1), c(0.3, -1.0)];
        let vals = [c(2.0, 0.0), c(0.0, 1.0), c(-1.0, 3.0)];
        let p = interpolate(&g, &vals);
        for (gk, vk) in g.iter().zip(&vals) {
            assert!((poly_eval(&p, *gk) - vk).norm() < 1e-13);
        }
        let u = u_poly(&g);
        let num = poly_mul(&u, &[c(1.0, 1.0), c(2.0, 0.0), one()]);
        let q = div_monic(&num, &u);
        assert!((q[0] - c(1.0, 1.0)).norm() < 1e-13 && (q[1] - 2.0).norm() < 1e-13 && (q[2] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn genus_one_flow_tracks_weierstrass() {
        let spec = by_name("one-gap-lame");
        let PotentialSpec::OneGapLame { tau, d } = spec else { unreachable!() };
        let x0 = 0.2;
        let init = initial_state(&spec, c(x0, 0.0)).unwrap();
        let traj = dubrovin_flow(&spec.curve().unwrap(), &init, (x0, x0 + 1.0), &tol()).unwrap();
        let lat = Lattice::from_tau(&tau);
        let eta = invariants_from_tau(&tau).unwrap().eta;
        let shift = d + 0.5 + tau.tau() / 2.0;
        for (x, st) in traj.xs().iter().zip(traj.states()) {
            let oracle = lat.wp(c(*x, 0.0) + shift, 0).unwrap() - 4.0 * eta;
            assert!((st.gammas[0] - oracle).norm() < 1e-7 * oracle.norm().max(1.0), "x = {x}");
        }
        assert!(traj.on_curve_residuals().iter().all(|&r| r < 1e-8));
        for r in inversion_residuals(&traj) {
            assert!(r[0].norm() < 1e-8);
        }
    }

    #[test]
    fn weierstrass_curve_flow_is_wp() {
        let tau = crate::theta::Modulus::new(c(0.0, 1.3)).unwrap();
        let inv = invariants_from_tau(&tau).unwrap();
        let curve = HyperellipticCurve::new(vec![inv.e1, inv.e2, inv.e3], c(4.0, 0.0)).unwrap();
        let lat = Lattice::from_tau(&tau);
        let z0 = c(0.3, 0.4);
        let wj = lat.wp_jet(z0, 1).unwrap();
        let sheet = sheet_of(&curve, wj.value(), wj.deriv(1));
        let init = DubrovinState::new(vec![wj.value()], vec![sheet]).unwrap();
        let traj = dubrovin_flow(&curve, &init, (0.0, 1.0), &tol()).unwrap();
        for (x, st) in traj.xs().iter().zip(traj.states()) {
            let oracle = lat.wp(z0 + x, 0).unwrap();
            assert!((st.gammas[0] - oracle).norm() < 1e-7 * oracle.norm().max(1.0), "x = {x}");
        }
        assert!(traj.on_curve_residuals().iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn branch_points_are_turning_points() {
        let curve = by_name("two-gap-lame").curve().unwrap();
        let e = curve.branch_points().to_vec();
        let init = DubrovinState::new(vec![e[0], e[2]], vec![Sheet::Plus, Sheet::Plus]).unwrap();
        assert!(dubrovin_rhs(&curve, &init).unwrap().iter().all(|z| z.norm() == 0.0));
        let fwd = dubrovin_flow(&curve, &init, (0.0, 0.02), &tol()).unwrap();
        let back = dubrovin_flow(&curve, &init, (0.0, -0.02), &tol()).unwrap();
        let (a, b) = (fwd.states().last().unwrap(), back.states().last().unwrap());
        for k in 0..2 {
            assert!((a.gammas[k] - init.gammas[k]).norm() > 1e-3);
            assert!((a.gammas[k] - b.gammas[k]).norm() < 1e-10 * curve.scale());
        }
    }

    #[test]
    fn genus_two_flow_matches_the_potential() {
        let spec = by_name("two-gap-lame");
        // Off the real line the γ's stay clear of the branch points.
        let x0 = c(0.1, 0.2);
        let init = initial_state(&spec, x0).unwrap();
        let curve = spec.curve().unwrap();
        let traj = dubrovin_flow(&curve, &init, (0.0, 1.0), &tol()).unwrap();
        assert!(traj.xs().len() > 10);
        for (i, &t) in traj.xs().iter().enumerate() {
            let x = x0 + t;
            let u = potential_value(&spec, x, 0).unwrap();
            assert!((traj.trace(i) - u).norm() < 1e-6 * u.norm().max(1.0), "x = {x}");
            let lam = c(0.7, -1.3);
            let r = r_polynomial(&spec, x, lam).unwrap();
            assert!((traj.r_polynomial(i, lam) - r).norm() < 1e-6 * r.norm().max(1.0));
        }
        for r in inversion_residuals(&traj) {
            assert!(r.iter().all(|z| z.norm() < 1e-8), "{r:?}");
        }
        assert!(traj.on_curve_residuals().iter().all(|&r| r < 1e-8));
        let mid = traj.state_at(0.5).unwrap();
        let u = potential_value(&spec, x0 + 0.5, 0).unwrap();
        assert!((trace_of(&mid, &curve) - u).norm() < 1e-6 * u.norm());
    }

    fn trace_of(st: &DubrovinState, curve: &HyperellipticCurve) -> C64 {
        crate::potentials::trace_formula(&st.gammas, curve).unwrap()
    }

    #[test]
    fn sheets_flip_at_turning_points() {
        let spec = by_name("two-gap-lame");
        let init = initial_state(&spec, c(0.1, 0.0)).unwrap();
        let traj = dubrovin_flow(&spec.curve().unwrap(), &init, (0.1, 1.1), &tol()).unwrap();
        let flips = traj.states().windows(2).filter(|w| w[0].sheets != w[1].sheets).count();
        assert!(flips > 0);
    }

    #[test]
    fn log_inversion_matches_the_continued_solution() {
        let PotentialSpec::PencilV(p) = by_name("pencil-v") else { unreachable!() };
        let mut r = p.r_at(c(2.7, 0.0)).unwrap();
        let mut xs = Vec::new();
        let mut x = 2.7;
        while x <= 2.9 + 1e-12 {
            let next = log_inversion_g1(&p, c(x, 0.0), r).unwrap();
            assert!(p.log_relation(c(x, 0.0), next).unwrap().norm() < 1e-10);
            assert!((next - r).norm() < 1e-2);
            assert!((next - p.r_at(c(x, 0.0)).unwrap()).norm() < 1e-10);
            r = next;
            xs.push(x);
            x += 1e-2;
        }
        let (e2, e1) = p.integrals();
        for &x in &xs {
            let (a, b) = pencil_integrals(&p, c(x, 0.0)).unwrap();
            assert!((a - e2).norm() < 1e-8 * e2.norm().max(1.0), "E2 {a} vs {e2}");
            assert!((b - e1).norm() < 1e-8 * e1.norm().max(1.0), "E1 {b} vs {e1}");
        }
    }
}
