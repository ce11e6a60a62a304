use num_complex::Complex64 as C64;

/// Step used by the oracle when the caller has no better choice.
///
/// Order 1 uses 1e-4 max(1, |x|); higher orders take larger steps so that
/// cancellation does not dominate after division by h^order.
pub fn default_step(order: usize, x: f64) -> f64 {
    let base = match order {
        0 | 1 => 1e-4,
        2 => 4e-3,
        3 => 8e-3,
        4 => 2e-2,
        _ => 4e-2,
    };
    base * x.abs().max(1.0)
}

fn central(f: &mut impl FnMut(f64) -> C64, x: f64, order: usize, h: f64) -> C64 {
    let mut p = |k: f64| f(x + k * h);
    match order {
        1 => (p(1.0) - p(-1.0)) / (2.0 * h),
        2 => (p(1.0) - 2.0 * p(0.0) + p(-1.0)) / (h * h),
        3 => (p(2.0) - 2.0 * p(1.0) + 2.0 * p(-1.0) - p(-2.0)) / (2.0 * h.powi(3)),
        4 => (p(2.0) - 4.0 * p(1.0) + 6.0 * p(0.0) - 4.0 * p(-1.0) + p(-2.0)) / h.powi(4),
        5 => {
            (p(3.0) - 4.0 * p(2.0) + 5.0 * p(1.0) - 5.0 * p(-1.0) + 4.0 * p(-2.0) - p(-3.0))
                / (2.0 * h.powi(5))
        }
        _ => panic!("diff_fd supports orders 1..=5"),
    }
}

/// Central finite difference of order 1..=5 with one Richardson extrapolation.
///
/// # Panics
/// If `order` is outside 1..=5 or `h` is not positive.
pub fn diff_fd<F: FnMut(f64) -> C64>(mut f: F, x: f64, order: usize, h: f64) -> C64 {
    assert!(h > 0.0, "step must be positive");
    let d1 = central(&mut f, x, order, h);
    let d2 = central(&mut f, x, order, 0.5 * h);
    (4.0 * d2 - d1) / 3.0
}
