//! Supports, log-weights, facet systems and the information-theoretic
//! primitives used everywhere else.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::numeric::{self, dot_int, log_add_exp, log_sum_exp_slice, to_f64};

/// Default absolute tolerance on facet slacks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// An explicit finite set of distinct integer points of common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportFamily {
    points: Vec<Vec<i64>>,
    dim: usize,
    diameter: f64,
}

impl SupportFamily {
    /// Builds a family from pairwise-distinct points.
    pub fn new(points: Vec<Vec<i64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::validation("support must contain at least one point"))?;
        if dim == 0 {
            return Err(Error::validation("support dimension must be positive"));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            ensure_dim(dim, p.len())?;
            if !seen.insert(p.clone()) {
                return Err(Error::validation(format!("duplicate support point {p:?}")));
            }
        }
        let diameter = numeric::diameter(&points.iter().map(|p| to_f64(p)).collect::<Vec<_>>());
        Ok(SupportFamily { points, dim, diameter })
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    pub fn points_f64(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| to_f64(p)).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn log_cardinality(&self) -> f64 {
        (self.points.len() as f64).ln()
    }

    pub fn index_of(&self, point: &[i64]) -> Option<usize> {
        self.points.iter().position(|p| p == point)
    }

    /// Orthonormal basis of the direction space of the affine hull.
    pub fn direction_basis(&self) -> Vec<Vec<f64>> {
        let base = to_f64(&self.points[0]);
        let diffs: Vec<Vec<f64>> =
            self.points.iter().skip(1).map(|p| numeric::sub(&to_f64(p), &base)).collect();
        numeric::orthonormal_basis(&diffs, 1e-10)
    }

    /// Lexicographically smallest point maximizing `⟨α, y⟩`, ties within `tol`.
    pub fn argmax(&self, y: &[f64], tol: f64) -> usize {
        let values: Vec<f64> = self.points.iter().map(|p| dot_int(p, y)).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut idx: Option<usize> = None;
        for (i, &v) in values.iter().enumerate() {
            if v >= best - tol {
                idx = match idx {
                    Some(j) if self.points[j] <= self.points[i] => Some(j),
                    _ => Some(i),
                };
            }
        }
        idx.unwrap_or(0)
    }
}

/// A support family together with strictly positive weights in log domain.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSupport {
    support: SupportFamily,
    log_weights: Vec<f64>,
    bit_complexity: f64,
}

impl WeightedSupport {
    /// Merges duplicate points by adding their weights. `log_weights` defaults to zero.
    pub fn new(points: Vec<Vec<i64>>, log_weights: Option<Vec<f64>>) -> Result<Self> {
        let log_weights = log_weights.unwrap_or_else(|| vec![0.0; points.len()]);
        ensure_dim(points.len(), log_weights.len())?;
        let mut merged: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        let mut order: Vec<Vec<i64>> = Vec::new();
        for (p, &w) in points.into_iter().zip(&log_weights) {
            if !w.is_finite() {
                return Err(Error::validation(format!("log-weight of {p:?} is not finite")));
            }
            match merged.get_mut(&p) {
                Some(acc) => *acc = log_add_exp(*acc, w),
                None => {
                    merged.insert(p.clone(), w);
                    order.push(p);
                }
            }
        }
        let log_weights: Vec<f64> = order.iter().map(|p| merged[p]).collect();
        let support = SupportFamily::new(order)?;
        Ok(Self::from_parts(support, log_weights))
    }

    pub fn uniform(points: Vec<Vec<i64>>) -> Result<Self> {
        Self::new(points, None)
    }

    fn from_parts(support: SupportFamily, log_weights: Vec<f64>) -> Self {
        let bit_complexity = log_weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        WeightedSupport { support, log_weights, bit_complexity }
    }

    pub fn support(&self) -> &SupportFamily {
        &self.support
    }

    pub fn points(&self) -> &[Vec<i64>] {
        self.support.points()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `L_p = max |log p_α|`, always recomputed from the weights.
    pub fn bit_complexity(&self) -> f64 {
        self.bit_complexity
    }

    /// Rejects a declared `L_p` smaller than the recomputed one.
    pub fn check_declared_bit_complexity(&self, declared: f64) -> Result<()> {
        if declared + 1e-12 < self.bit_complexity {
            return Err(Error::validation(format!(
                "declared bit complexity {declared} is below recomputed L_p = {}",
                self.bit_complexity
            )));
        }
        Ok(())
    }

    /// Sub-family on the given indices, keeping their weights.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let points = indices.iter().map(|&i| self.points()[i].clone()).collect();
        let support = SupportFamily::new(points)?;
        let w = indices.iter().map(|&i| self.log_weights[i]).collect();
        Ok(Self::from_parts(support, w))
    }

    /// `log Σ p_α e^{⟨α,y⟩}`.
    pub fn log_partition(&self, y: &[f64]) -> f64 {
        let terms = self.exponents(y);
        log_sum_exp_slice(&terms)
    }

    /// The per-point exponents `log p_α + ⟨α, y⟩`.
    pub fn exponents(&self, y: &[f64]) -> Vec<f64> {
        self.points().iter().zip(&self.log_weights).map(|(p, w)| w + dot_int(p, y)).collect()
    }
}

/// A probability vector indexed like an explicit support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimalDistribution {
    pub probabilities: Vec<f64>,
}

impl PrimalDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.iter().any(|&q| !(q >= 0.0)) {
            return Err(Error::validation("probabilities must be nonnegative"));
        }
        let s: f64 = probabilities.iter().sum();
        if (s - 1.0).abs() > 1e-12 * probabilities.len().max(1) as f64 {
            return Err(Error::validation(format!("probabilities sum to {s}, not 1")));
        }
        Ok(PrimalDistribution { probabilities })
    }

    pub fn uniform(n: usize) -> Self {
        PrimalDistribution { probabilities: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut probabilities = vec![0.0; n];
        probabilities[at] = 1.0;
        PrimalDistribution { probabilities }
    }

    /// `q_α ∝ e^{ℓ_α}`, normalized in log domain.
    pub fn from_log_weights(log_weights: &[f64]) -> Self {
        PrimalDistribution { probabilities: numeric::softmax(log_weights).0 }
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// `Σ q_α (log p_α − log q_α)` with `0·log 0 = 0`.
pub fn entropy_objective(q: &PrimalDistribution, p: &WeightedSupport) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::domain(format!(
            "distribution has {} entries but the support has {} points",
            q.len(),
            p.len()
        )));
    }
    Ok(q.probabilities
        .iter()
        .zip(p.log_weights())
        .filter(|(&qa, _)| qa > 0.0)
        .map(|(&qa, &lw)| qa * (lw - qa.ln()))
        .sum())
}

/// Result of a KL evaluation. `value` is `+inf` when `q1` is not absolutely
/// continuous with respect to `q2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlValue {
    pub value: f64,
    pub absolutely_continuous: bool,
}

pub fn kl_divergence(q1: &PrimalDistribution, q2: &PrimalDistribution) -> Result<KlValue> {
    ensure_dim(q1.len(), q2.len())?;
    let mut value = 0.0;
    for (&a, &b) in q1.probabilities.iter().zip(&q2.probabilities) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(KlValue { value: f64::INFINITY, absolutely_continuous: false });
            }
            value += a * (a / b).ln();
        }
    }
    Ok(KlValue { value: value.max(0.0), absolutely_continuous: true })
}

/// `‖q1 − q2‖₁`.
pub fn tv_distance(q1: &PrimalDistribution, q2: &PrimalDistribution) -> Result<f64> {
    ensure_dim(q1.len(), q2.len())?;
    Ok(q1.probabilities.iter().zip(&q2.probabilities).map(|(a, b)| (a - b).abs()).sum())
}

/// `Σ q_α α`.
pub fn marginal_of(q: &PrimalDistribution, support: &SupportFamily) -> Result<Vec<f64>> {
    ensure_dim(support.len(), q.len())?;
    let mut theta = vec![0.0; support.dim()];
    for (p, &qa) in support.points().iter().zip(&q.probabilities) {
        for (t, &v) in theta.iter_mut().zip(p) {
            *t += qa * v as f64;
        }
    }
    Ok(theta)
}

/// Inequality description `⟨a_i, x⟩ ≤ b_i` with integer rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetSystem {
    rows: Vec<Vec<i64>>,
    offsets: Vec<f64>,
    unary_complexity: i64,
}

impl FacetSystem {
    pub fn new(rows: Vec<Vec<i64>>, offsets: Vec<f64>) -> Result<Self> {
        ensure_dim(rows.len(), offsets.len())?;
        if let Some(first) = rows.first() {
            for r in &rows {
                ensure_dim(first.len(), r.len())?;
            }
        }
        if offsets.iter().any(|b| !b.is_finite()) {
            return Err(Error::validation("facet offsets must be finite"));
        }
        let unary_complexity =
            rows.iter().flat_map(|r| r.iter()).fold(0i64, |m, &v| m.max(v.abs())).max(1);
        Ok(FacetSystem { rows, offsets, unary_complexity })
    }

    /// Rejects a declared `M` smaller than the recomputed one.
    pub fn check_declared_unary_complexity(&self, declared: i64) -> Result<()> {
        if declared < self.unary_complexity {
            return Err(Error::validation(format!(
                "declared unary complexity {declared} is below recomputed M = {}",
                self.unary_complexity
            )));
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.rows.first().map(|r| r.len())
    }

    /// `M = max_i ‖a_i‖_∞`.
    pub fn unary_complexity(&self) -> i64 {
        self.unary_complexity
    }

    /// `b_i − ⟨a_i, x⟩` for each row.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().zip(&self.offsets).map(|(a, b)| b - dot_int(a, x)).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slacks(x).iter().all(|&s| s >= -tol)
    }

    /// Checks every support point satisfies every inequality (integer points, so exactly up to rounding of `b`).
    pub fn check_points(&self, support: &SupportFamily) -> Result<()> {
        for p in support.points() {
            for (i, (a, b)) in self.rows.iter().zip(&self.offsets).enumerate() {
                let v: i64 = a.iter().zip(p).map(|(x, y)| x * y).sum();
                if v as f64 > b + FEASIBILITY_TOL {
                    return Err(Error::validation(format!(
                        "support point {p:?} violates facet {i}: {v} > {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Facet description of a full-dimensional `conv(points)` by enumerating
    /// hyperplanes through `m` affinely independent points. Exact integer
    /// arithmetic; rows are primitive. Intended for small desk-scale supports.
    pub fn from_points(support: &SupportFamily) -> Result<Self> {
        let m = support.dim();
        let pts = support.points();
        let n = pts.len();
        if n <= m {
            return Err(Error::domain("support is not full-dimensional"));
        }
        let subsets = numeric::log_binomial(n as u64, m as u64);
        if subsets > (2.0e7f64).ln() {
            return Err(Error::Budget {
                message: format!("facet enumeration over C({n},{m}) subsets"),
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        let mut found: HashSet<Vec<i64>> = HashSet::new();
        let mut rows = Vec::new();
        let mut offsets = Vec::new();
        let mut combo: Vec<usize> = (0..m).collect();
        loop {
            if let Some(normal) = hyperplane_normal(pts, &combo) {
                let b0: i64 = normal.iter().zip(&pts[combo[0]]).map(|(a, x)| a * x).sum();
                let mut above = false;
                let mut below = false;
                for p in pts {
                    let v: i64 = normal.iter().zip(p).map(|(a, x)| a * x).sum();
                    above |= v > b0;
                    below |= v < b0;
                }
                if !(above && below) {
                    let (row, b) = if above {
                        (normal.iter().map(|v| -v).collect::<Vec<_>>(), -b0)
                    } else {
                        (normal, b0)
                    };
                    if found.insert(row.clone()) {
                        rows.push(row);
                        offsets.push(b as f64);
                    }
                }
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
        if rows.is_empty() {
            return Err(Error::domain("support is not full-dimensional"));
        }
        Self::new(rows, offsets)
    }
}

/// Primitive integer normal of the hyperplane through the chosen points, or
/// `None` if they are affinely dependent.
fn hyperplane_normal(pts: &[Vec<i64>], idx: &[usize]) -> Option<Vec<i64>> {
    let m = pts[0].len();
    let base = &pts[idx[0]];
    let diffs: Vec<Vec<i128>> = idx[1..]
        .iter()
        .map(|&i| pts[i].iter().zip(base).map(|(a, b)| (a - b) as i128).collect())
        .collect();
    let mut normal = Vec::with_capacity(m);
    for j in 0..m {
        let minor: Vec<Vec<i128>> = diffs
            .iter()
            .map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, &v)| v).collect())
            .collect();
        let d = numeric::det_i128(minor);
        normal.push(if j % 2 == 0 { d } else { -d });
    }
    if normal.iter().all(|&v| v == 0) {
        return None;
    }
    let g = normal.iter().fold(0i64, |g, &v| numeric::gcd(g, v as i64));
    Some(normal.iter().map(|&v| v as i64 / g).collect())
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `{ i : b_i − ⟨a_i, θ⟩ ≤ tol }`; errors if θ violates a facet by more than `tol`.
pub fn tight_facets(theta: &[f64], facets: &FacetSystem, tol: f64) -> Result<Vec<usize>> {
    if let Some(d) = facets.dim() {
        ensure_dim(d, theta.len())?;
    }
    let slacks = facets.slacks(theta);
    if let Some((i, s)) = slacks.iter().enumerate().find(|(_, &s)| s < -tol) {
        return Err(Error::domain(format!("marginal violates facet {i} by {:.3e}", -s)));
    }
    Ok(slacks.iter().enumerate().filter(|(_, &s)| s <= tol).map(|(i, _)| i).collect())
}
