//! Composite Simpson quadrature on uniform grids.

use crate::error::{BlochError, Result};

/// Composite Simpson rule over samples at spacing `h`; needs an odd number of
/// nodes (an even number of panels), at least 3.
pub fn composite_simpson(values: &[f64], h: f64) -> Result<f64> {
    let n = values.len();
    if n < 3 || n % 2 == 0 {
        return Err(BlochError::Invalid(format!(
            "Simpson rule needs an odd number of nodes >= 3, got {n}"
        )));
    }
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(acc * h / 3.0)
}

/// Smallest even panel count covering `[0, delta]` with spacing at most
/// `h_target`; returns `(panels, h_effective)`.
pub fn even_subdivision(delta: f64, h_target: f64) -> (usize, f64) {
    assert!(delta > 0.0 && h_target > 0.0, "positive interval and step required");
    let mut n = (delta / h_target).ceil() as usize;
    n = n.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    (n, delta / n as f64)
}
