//! Small dense linear algebra and log-domain helpers.
//!
//! Everything here works on `Vec<f64>` / `Vec<Vec<f64>>` (row-major). Instances
//! are desk scale, so clarity wins over blocking or SIMD.

use crate::error::{Error, Result};

/// Stable `log Σ exp(x_i)`. Returns `-inf` for an empty input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    log_sum_exp_slice(&values)
}

pub fn log_sum_exp_slice(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + s.ln()
}

/// `log(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Normalizes log-weights into probabilities. Returns the probabilities and the log normalizer.
pub fn softmax(log_weights: &[f64]) -> (Vec<f64>, f64) {
    let lse = log_sum_exp_slice(log_weights);
    let mut p: Vec<f64> = log_weights.iter().map(|&w| (w - lse).exp()).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        for v in &mut p {
            *v /= s;
        }
    }
    (p, lse)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_int(a: &[i64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, y)| x as f64 * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn to_f64(point: &[i64]) -> Vec<f64> {
    point.iter().map(|&v| v as f64).collect()
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
    sign: f64,
    min_pivot: f64,
}

impl Lu {
    /// Factors `a`. A pivot with magnitude below `pivot_tol` is reported as a numerical error.
    pub fn factor(a: &[Vec<f64>], pivot_tol: f64) -> Result<Self> {
        let n = a.len();
        let mut lu: Vec<Vec<f64>> = a.to_vec();
        for row in &lu {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i][k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            min_pivot = min_pivot.min(pmax);
            if !(pmax >= pivot_tol) {
                return Err(Error::numerical(format!(
                    "pivot {pmax:.3e} below tolerance {pivot_tol:.1e} at column {k} of {n}"
                )));
            }
            if p != k {
                lu.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            let pivot = lu[k][k];
            for i in (k + 1)..n {
                let f = lu[i][k] / pivot;
                lu[i][k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i][j] -= f * lu[k][j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm, sign, min_pivot })
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    /// `(sign, log |det|)`.
    pub fn log_det(&self) -> (f64, f64) {
        let mut sign = self.sign;
        let mut acc = 0.0;
        for i in 0..self.n {
            let d = self.lu[i][i];
            if d < 0.0 {
                sign = -sign;
            }
            acc += d.abs().ln();
        }
        (sign, acc)
    }
}

/// Solves `a x = b` for square `a`.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    Ok(Lu::factor(a, 1e-300)?.solve(b))
}

/// `(sign, log|det a|)`; a singular matrix gives `(0, -inf)`.
pub fn log_abs_det(a: &[Vec<f64>]) -> (f64, f64) {
    if a.is_empty() {
        return (1.0, 0.0);
    }
    match Lu::factor(a, 0.0) {
        Ok(lu) if lu.min_pivot() > 0.0 => lu.log_det(),
        _ => (0.0, f64::NEG_INFINITY),
    }
}

/// Orthonormal basis of the span of `vectors` by modified Gram–Schmidt with a
/// second re-orthogonalization pass. Vectors whose residual norm falls below
/// `tol * (1 + original norm)` are treated as dependent and skipped.
pub fn orthonormal_basis(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let original = norm2(v);
        if original == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&r, q);
                axpy(&mut r, -c, q);
            }
        }
        let nr = norm2(&r);
        if nr > tol * (1.0 + original) {
            basis.push(scale(&r, 1.0 / nr));
        }
    }
    basis
}

/// Orthogonal projection of `v` onto the span of the orthonormal `basis`.
pub fn project_onto(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for q in basis {
        axpy(&mut out, dot(v, q), q);
    }
    out
}

/// Coordinates of `v` in the orthonormal `basis`.
pub fn coordinates(basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    basis.iter().map(|q| dot(v, q)).collect()
}

/// Numerical rank of a set of vectors.
pub fn rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    orthonormal_basis(vectors, tol).len()
}

/// Least-squares solution of `Σ_j x_j cols[j] ≈ target` via normal equations
/// on an orthonormalized system. Columns must be linearly independent.
pub fn least_squares(cols: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let k = cols.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&cols[i], &cols[j])).collect())
        .collect();
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, target)).collect();
    let lu = Lu::factor(&gram, 1e-14)?;
    let mut x = lu.solve(&rhs);
    // one step of iterative refinement on the normal equations
    let mut res = target.to_vec();
    for (xj, c) in x.iter().zip(cols) {
        axpy(&mut res, -xj, c);
    }
    let corr = lu.solve(&cols.iter().map(|c| dot(c, &res)).collect::<Vec<_>>());
    for (xi, ci) in x.iter_mut().zip(corr) {
        *xi += ci;
    }
    Ok(x)
}

/// Euclidean diameter of a point set (max pairwise distance).
pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.max(d2);
        }
    }
    best.sqrt()
}

/// `log C(n, k)` via log-gamma sums.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Exact integer determinant (Bareiss fraction-free elimination).
pub fn det_i128(mut a: Vec<Vec<i128>>) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n.saturating_sub(1) {
        if a[k][k] == 0 {
            match ((k + 1)..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}
