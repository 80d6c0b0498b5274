//! Gradient coordinates from evaluations only.
//!
//! Along coordinate `i` the counting function is a polynomial in the scaling
//! factor `1 + s` applied to `x_i = e^{y_i}` (after dividing out the smallest
//! exponent). Evaluating it at `D + 1` Chebyshev nodes and differentiating the
//! interpolant at `s = 0` recovers `Σ_α α_i p_α e^{⟨α,y⟩}`.

use crate::error::{Error, Result};
use crate::numeric::Lu;

use super::CountingOracle;

/// Smallest pivot accepted in the Chebyshev–Vandermonde factorization.
pub const VANDERMONDE_PIVOT_TOL: f64 = 1e-13;

/// Unnormalized gradient coordinate `∂/∂y_i g_p(e^y)`, obtained from `D + 1`
/// evaluations where `D` is the degree bound in coordinate `i`.
pub fn gradient_by_interpolation(oracle: &CountingOracle, y: &[f64], i: usize) -> Result<f64> {
    let log_g = oracle.log_eval(y)?;
    let normalized = normalized_gradient_by_interpolation(oracle, y, i, log_g)?;
    Ok(normalized * log_g.exp())
}

/// Same as [`gradient_by_interpolation`] divided by `g_p(e^y)`; stays finite
/// when `g_p(e^y)` itself overflows.
pub fn normalized_gradient_by_interpolation(
    oracle: &CountingOracle,
    y: &[f64],
    i: usize,
    log_g: f64,
) -> Result<f64> {
    if i >= y.len() {
        return Err(Error::DimensionMismatch { expected: oracle.dim(), got: i + 1 });
    }
    let (lo, hi) = oracle.exponent_range(i);
    let degree = (hi - lo).max(0) as usize;
    if degree == 0 {
        return Ok(lo as f64);
    }
    // keep (1 + s)^D bounded on the node interval
    let width = (1.0 / degree as f64).min(1.0);
    let n = degree + 1;
    let nodes: Vec<f64> = (0..n)
        .map(|k| {
            let c = (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64).cos();
            0.5 * width * (1.0 - c)
        })
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut shifted = y.to_vec();
    for &s in &nodes {
        shifted[i] = y[i] + (1.0 + s).ln();
        let v = oracle.log_eval(&shifted)? - log_g - lo as f64 * (1.0 + s).ln();
        values.push(v.exp());
    }
    // Chebyshev basis T_k(t) with t = 2s/width − 1 ∈ [−1, 1]
    let vander: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&s| chebyshev_row(2.0 * s / width - 1.0, n))
        .collect();
    let lu = Lu::factor(&vander, VANDERMONDE_PIVOT_TOL).map_err(|e| {
        Error::numerical(format!(
            "interpolation for coordinate {i} (degree {degree}, {n} nodes on [0, {width:.3e}]) failed: {e}"
        ))
    })?;
    let coef = lu.solve(&values);
    // T_k'(−1) = (−1)^{k+1} k², chain rule factor 2/width
    let deriv: f64 = coef
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            c * sign * (k * k) as f64
        })
        .sum::<f64>()
        * 2.0
        / width;
    Ok(deriv + lo as f64)
}

fn chebyshev_row(t: f64, n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    row[0] = 1.0;
    if n > 1 {
        row[1] = t;
    }
    for k in 2..n {
        row[k] = 2.0 * t * row[k - 1] - row[k - 2];
    }
    row
}
