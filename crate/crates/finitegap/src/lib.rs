//! Finite-gap potentials, Baker–Akhiezer functions and theta-function tools
//! for the one-dimensional Schrödinger operator.

pub mod error;
pub mod numerics;
pub mod theta;
pub mod elliptic;
pub mod curves;
pub mod potentials;
pub mod psi;
pub mod dubrovin;
pub mod theta_ode;
pub mod verify;
pub mod text;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use numerics::Tolerance;
