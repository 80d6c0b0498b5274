//! Counting oracles for `g_p(x) = Σ_α p_α x^α`.
//!
//! Three backends: an explicit weighted support, a product of linear forms
//! `∏_i (Σ_j A_ij x_j)^{r_i}` (matrix scaling), and weighted spanning trees of
//! a multigraph (a multiaffine polynomial in the edge variables). All
//! evaluations happen at `x = e^y` and are returned in log domain.

pub mod interpolation;
pub mod matrix_tree;

use std::collections::BTreeMap;

use crate::error::{ensure_dim, Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::numeric::{log_add_exp, log_binomial, log_sum_exp_slice, softmax};
use crate::support::WeightedSupport;

pub use interpolation::gradient_by_interpolation;
pub use matrix_tree::{matrix_tree_log_det, Graph};

/// Product forms wider than this skip the transportation-LP membership check.
pub const PRECHECK_MAX_COLUMNS: usize = 12;

/// `∏_i (Σ_j A_ij x_j)^{r_i}` with nonnegative `A` and positive integer `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductForm {
    a: Vec<Vec<f64>>,
    log_a: Vec<Vec<f64>>,
    r: Vec<u64>,
}

impl ProductForm {
    pub fn new(a: Vec<Vec<f64>>, r: Vec<u64>) -> Result<Self> {
        ensure_dim(a.len(), r.len())?;
        let n = a.first().map(|row| row.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::validation("product-form matrix must be nonempty"));
        }
        for (i, row) in a.iter().enumerate() {
            ensure_dim(n, row.len())?;
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::validation(format!("row {i} has a negative or non-finite entry")));
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(Error::domain(format!("row {i} is identically zero")));
            }
            if r[i] == 0 {
                return Err(Error::validation(format!("exponent r[{i}] must be positive")));
            }
        }
        let log_a = a.iter().map(|row| row.iter().map(|&v| v.ln()).collect()).collect();
        Ok(ProductForm { a, log_a, r })
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn exponents(&self) -> &[u64] {
        &self.r
    }

    pub fn num_columns(&self) -> usize {
        self.a[0].len()
    }

    /// `h = ‖r‖₁`, the total degree.
    pub fn total_degree(&self) -> u64 {
        self.r.iter().sum()
    }

    /// Per-row log of the linear form at `x = e^y`.
    pub fn row_log_sums(&self, y: &[f64]) -> Vec<f64> {
        self.log_a
            .iter()
            .map(|row| {
                let terms: Vec<f64> = row.iter().zip(y).map(|(la, yj)| la + yj).collect();
                log_sum_exp_slice(&terms)
            })
            .collect()
    }

    fn eval_and_gradient(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let n = self.num_columns();
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        for (row, &ri) in self.log_a.iter().zip(&self.r) {
            let terms: Vec<f64> = row.iter().zip(y).map(|(la, yj)| la + yj).collect();
            let (probs, lse) = softmax(&terms);
            value += ri as f64 * lse;
            for (g, p) in grad.iter_mut().zip(probs) {
                *g += ri as f64 * p;
            }
        }
        (value, grad)
    }

    /// Bound on `max |log p_α|` over the coefficients of the expanded polynomial.
    pub fn bit_complexity_bound(&self) -> f64 {
        let upper: f64 = self
            .a
            .iter()
            .zip(&self.r)
            .map(|(row, &ri)| ri as f64 * row.iter().sum::<f64>().ln())
            .sum();
        let min_pos = self.a.iter().flatten().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        let lower = self.total_degree() as f64 * min_pos.ln();
        upper.abs().max(lower.abs())
    }

    /// Transportation feasibility: `θ` is a marginal iff flows `π_ij ≥ 0` on the
    /// support of `A` have row sums `r` and column sums `θ`.
    pub fn contains_marginal(&self, theta: &[f64], tol: f64) -> bool {
        let n = self.num_columns();
        let k = self.a.len();
        let mut vars = Vec::new();
        for i in 0..k {
            for j in 0..n {
                if self.a[i][j] > 0.0 {
                    vars.push((i, j));
                }
            }
        }
        let mut rows = vec![vec![0.0; vars.len()]; k + n];
        for (v, &(i, j)) in vars.iter().enumerate() {
            rows[i][v] = 1.0;
            rows[k + j][v] = 1.0;
        }
        let mut b: Vec<f64> = self.r.iter().map(|&x| x as f64).collect();
        b.extend_from_slice(theta);
        let sol = LinearProgram::new(rows, b, vec![0.0; vars.len()]).solve(tol);
        sol.status == LpStatus::Optimal
    }

    fn expand(&self, limit: usize) -> Result<WeightedSupport> {
        let n = self.num_columns();
        let mut states: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        states.insert(vec![0; n], 0.0);
        for (row, &ri) in self.log_a.iter().zip(&self.r) {
            for _ in 0..ri {
                let mut next: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
                for (alpha, lw) in &states {
                    for (j, &la) in row.iter().enumerate() {
                        if la == f64::NEG_INFINITY {
                            continue;
                        }
                        let mut b = alpha.clone();
                        b[j] += 1;
                        let e = next.entry(b).or_insert(f64::NEG_INFINITY);
                        *e = log_add_exp(*e, lw + la);
                    }
                }
                if next.len() > limit {
                    return Err(Error::Budget {
                        message: format!("product-form expansion exceeds {limit} monomials"),
                        lower: limit as f64,
                        upper: f64::INFINITY,
                    });
                }
                states = next;
            }
        }
        let (points, weights): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        WeightedSupport::new(points, Some(weights))
    }
}

/// An evaluator of the generalized counting function.
#[derive(Clone, Debug, PartialEq)]
pub enum CountingOracle {
    Explicit(WeightedSupport),
    ProductForm(ProductForm),
    SpanningTree(Graph),
}

impl CountingOracle {
    pub fn dim(&self) -> usize {
        match self {
            CountingOracle::Explicit(w) => w.dim(),
            CountingOracle::ProductForm(p) => p.num_columns(),
            CountingOracle::SpanningTree(g) => g.num_edges(),
        }
    }

    pub fn explicit(&self) -> Option<&WeightedSupport> {
        match self {
            CountingOracle::Explicit(w) => Some(w),
            _ => None,
        }
    }

    /// `log g_p(e^y)`.
    pub fn log_eval(&self, y: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), y.len())?;
        check_finite(y)?;
        Ok(match self {
            CountingOracle::Explicit(w) => w.log_partition(y),
            CountingOracle::ProductForm(p) => {
                p.row_log_sums(y).iter().zip(p.exponents()).map(|(l, &r)| r as f64 * l).sum()
            }
            CountingOracle::SpanningTree(g) => matrix_tree_log_det(g.num_vertices, &g.edges, y)?,
        })
    }

    /// `∇_y log g_p(e^y)`, the marginal of the induced distribution.
    pub fn log_gradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval_with_gradient(y)?.1)
    }

    /// `(log g_p(e^y), ∇_y log g_p(e^y))` in one pass.
    pub fn eval_with_gradient(&self, y: &[f64]) -> Result<(f64, Vec<f64>)> {
        ensure_dim(self.dim(), y.len())?;
        check_finite(y)?;
        Ok(match self {
            CountingOracle::Explicit(w) => {
                let (q, lse) = softmax(&w.exponents(y));
                let mut theta = vec![0.0; w.dim()];
                for (p, qa) in w.points().iter().zip(q) {
                    for (t, &v) in theta.iter_mut().zip(p) {
                        *t += qa * v as f64;
                    }
                }
                (lse, theta)
            }
            CountingOracle::ProductForm(p) => p.eval_and_gradient(y),
            CountingOracle::SpanningTree(g) => {
                matrix_tree::edge_marginals(g.num_vertices, &g.edges, y)?
            }
        })
    }

    /// `(min_α α_i, max_α α_i)` over the support, or a bound containing it.
    pub fn exponent_range(&self, i: usize) -> (i64, i64) {
        match self {
            CountingOracle::Explicit(w) => {
                let lo = w.points().iter().map(|p| p[i]).min().unwrap_or(0);
                let hi = w.points().iter().map(|p| p[i]).max().unwrap_or(0);
                (lo, hi)
            }
            CountingOracle::ProductForm(p) => {
                let h = p.total_degree() as i64;
                let col_used: u64 = p
                    .matrix()
                    .iter()
                    .zip(p.exponents())
                    .filter(|(row, _)| row[i] > 0.0)
                    .map(|(_, &r)| r)
                    .sum();
                (0, h.min(col_used as i64))
            }
            CountingOracle::SpanningTree(_) => (0, 1),
        }
    }

    /// Degree of `g_p` in the variable `x_i` (after factoring out `x_i^{min α_i}`).
    pub fn degree_bound(&self, i: usize) -> u64 {
        let (lo, hi) = self.exponent_range(i);
        (hi - lo).max(0) as u64
    }

    /// `log |F|` for explicit supports, an upper bound otherwise.
    pub fn log_cardinality_bound(&self) -> f64 {
        match self {
            CountingOracle::Explicit(w) => w.support().log_cardinality(),
            CountingOracle::ProductForm(p) => {
                let n = p.num_columns() as u64;
                log_binomial(p.total_degree() + n - 1, n - 1)
            }
            CountingOracle::SpanningTree(g) => {
                let m = g.num_edges() as u64;
                let n = g.num_vertices as u64;
                let d = self.diameter_bound().max(0.5);
                (m as f64 * (2.0 * d).ln()).min(log_binomial(m, n - 1))
            }
        }
    }

    /// Diameter of the support, exact for explicit supports.
    pub fn diameter_bound(&self) -> f64 {
        match self {
            CountingOracle::Explicit(w) => w.support().diameter(),
            CountingOracle::ProductForm(p) => p.total_degree() as f64 * 2f64.sqrt(),
            CountingOracle::SpanningTree(g) => {
                (2 * (g.num_vertices - 1)).min(g.num_edges()) as f64
            }
            .sqrt(),
        }
    }

    /// `L_p` for explicit supports, an upper bound otherwise.
    pub fn bit_complexity_bound(&self) -> f64 {
        match self {
            CountingOracle::Explicit(w) => w.bit_complexity(),
            CountingOracle::ProductForm(p) => p.bit_complexity_bound(),
            CountingOracle::SpanningTree(_) => 0.0,
        }
    }

    /// Unary facet complexity known from the structure of the backend.
    /// Transportation and spanning-tree polytopes have 0/±1 facet normals.
    pub fn known_unary_complexity(&self) -> Option<i64> {
        match self {
            CountingOracle::Explicit(_) => None,
            CountingOracle::ProductForm(_) | CountingOracle::SpanningTree(_) => Some(1),
        }
    }

    /// Materializes the support with its weights. Errors past `limit` points.
    pub fn to_explicit(&self, limit: usize) -> Result<WeightedSupport> {
        match self {
            CountingOracle::Explicit(w) => Ok(w.clone()),
            CountingOracle::ProductForm(p) => p.expand(limit),
            CountingOracle::SpanningTree(g) => {
                let trees = g.spanning_trees(limit)?;
                let m = g.num_edges();
                let points = trees
                    .into_iter()
                    .map(|t| {
                        let mut v = vec![0i64; m];
                        for e in t {
                            v[e] = 1;
                        }
                        v
                    })
                    .collect();
                WeightedSupport::uniform(points)
            }
        }
    }

    /// Whether `θ ∈ conv(F)`; `None` when it cannot be decided cheaply.
    pub fn contains_marginal(&self, theta: &[f64], tol: f64) -> Option<bool> {
        if theta.len() != self.dim() {
            return Some(false);
        }
        match self {
            CountingOracle::Explicit(w) => {
                Some(lp::in_hull(&w.support().points_f64(), theta, tol))
            }
            CountingOracle::ProductForm(p) => {
                (p.num_columns() <= PRECHECK_MAX_COLUMNS).then(|| p.contains_marginal(theta, tol))
            }
            CountingOracle::SpanningTree(_) => {
                let w = self.to_explicit(5_000).ok()?;
                Some(lp::in_hull(&w.support().points_f64(), theta, tol))
            }
        }
    }
}

fn check_finite(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("dual point has a non-finite coordinate"));
    }
    Ok(())
}
