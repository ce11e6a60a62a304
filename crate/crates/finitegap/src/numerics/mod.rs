//! Complex-valued numerical engine: ODE integration, quadrature, root finding,
//! finite differences, truncated Taylor arithmetic and small dense linear algebra.

mod fd;
mod jet;
mod linalg;
mod ode;
mod poly;
mod quad;
mod root;

pub use fd::{default_step, diff_fd};
pub use jet::Jet;
pub use linalg::{least_squares, solve_linear};
pub use ode::{integrate_ode, Trajectory};
pub use poly::{poly_derivative, poly_eval, poly_mul, poly_roots};
pub use quad::{quad_adaptive, quad_segment};
pub use root::{find_root, find_root_newton, newton_system};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Error budget shared by the adaptive routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_steps: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_steps == 0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance ({abs_tol}, {rel_tol}, {max_steps})"
            )));
        }
        Ok(Self { abs_tol, rel_tol, max_steps })
    }

    /// Same step budget with both tolerances set to `tol`.
    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, tol, Self::default().max_steps)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_steps: 200_000 }
    }
}

/// Value of an identity's left-minus-right side with the size of its largest term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub value: C64,
    pub scale: f64,
}

impl Residual {
    /// Build from the individual terms of an identity whose sum should vanish.
    pub fn from_terms(terms: &[C64]) -> Self {
        let value = terms.iter().sum();
        let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
        Self { value, scale }
    }

    /// |value| / max(scale, 1e-300).
    pub fn relative(&self) -> f64 {
        self.value.norm() / self.scale.max(1e-300)
    }
}
