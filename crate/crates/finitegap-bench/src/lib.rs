//! Shared fixtures for the benchmark harness.

use finitegap::potentials::{parse_potential_catalog, PotentialSpec, DEFAULT_CATALOG};
use finitegap::Complex64;

/// A catalog entry by name; panics on an unknown name.
pub fn entry(name: &str) -> PotentialSpec {
    parse_potential_catalog(DEFAULT_CATALOG)
        .expect("shipped catalog parses")
        .into_iter()
        .find(|s| s.name() == name)
        .unwrap_or_else(|| panic!("no catalog entry {name:?}"))
}

/// `n` points on the segment from `a` to `b`.
pub fn segment(a: Complex64, b: Complex64, n: usize) -> Vec<Complex64> {
    (0..n).map(|i| a + (b - a) * (i as f64 / (n - 1) as f64)).collect()
}
