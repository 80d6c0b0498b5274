//! Downstream solvers built on dual solves: `(r, c)`-matrix scaling, the
//! capacity relaxation `Cap_B(p)`, and rank-1 Brascamp–Lieb constants.
//!
//! Capacity and the worst-case Brascamp–Lieb constant maximize a concave
//! function of the marginal. Every inner solve at a point yields a valid
//! linear upper bound (a cut) and a certified lower bound, and the outer loop
//! maximizes the cut model by LP until the two bounds meet.

use serde::{Deserialize, Serialize};

use crate::dual::{self, SolveOptions, SolveReport};
use crate::error::{ensure_dim, Error, Result};
use crate::lp::{self, LinearProgram, LpStatus};
use crate::numeric::{dot, log_abs_det, log_sum_exp_slice, norm2, rank, to_f64};
use crate::oracle::{CountingOracle, ProductForm};
use crate::support::{FacetSystem, WeightedSupport};

/// `x`, `y` and the scaled matrix `XAY` for an `(r, c)`-scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Dual point with `y = e^z`.
    pub z: Vec<f64>,
    pub log_x: Vec<f64>,
    pub scaled: Vec<Vec<f64>>,
    /// `max_i |Σ_k B_ik − r_i|`.
    pub row_residual: f64,
    /// `Σ_k |Σ_i B_ik − c_k|`.
    pub column_residual: f64,
    pub log_x_max: f64,
    pub log_y_max: f64,
    /// Budget `R` on `max |log y_k|` from the radius bound.
    pub budget_log_y: f64,
    /// Budget `R + L_A + log h` on `max |log x_i|`.
    pub budget_log_x: f64,
    /// `L_A = max |log A_ij|` over nonzero entries.
    pub matrix_bit_complexity: f64,
    pub report: SolveReport,
}

/// Scales `A` so that `XAY` has row sums `r` and column sums within `ε` of `c`.
pub fn matrix_scale(
    a: &[Vec<f64>],
    r: &[u64],
    c: &[u64],
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<ScalingResult> {
    ensure_dim(a.len(), r.len())?;
    let n = a.first().map(|row| row.len()).unwrap_or(0);
    ensure_dim(n, c.len())?;
    if r.iter().sum::<u64>() != c.iter().sum::<u64>() {
        return Err(Error::validation("row and column targets must have equal totals"));
    }
    if c.contains(&0) {
        return Err(Error::validation("column targets must be positive"));
    }
    for k in 0..n {
        if a.iter().all(|row| row.get(k).copied().unwrap_or(0.0) == 0.0) {
            return Err(Error::domain(format!("column {k} is identically zero")));
        }
    }
    let pf = ProductForm::new(a.to_vec(), r.to_vec())?;
    let oracle = CountingOracle::ProductForm(pf.clone());
    let theta: Vec<f64> = c.iter().map(|&v| v as f64).collect();
    let mut inner = opts.clone();
    // ℓ1 column residual ≤ √n ‖∇h‖₂
    inner.gradient_tol = Some(opts.gradient_tol.unwrap_or(epsilon / (n as f64).sqrt()));
    if oracle.contains_marginal(&theta, 1e-9) == Some(false) {
        return Err(Error::domain("c is outside the transportation polytope: not asymptotically scalable"));
    }
    let report = dual::solve_dual(&oracle, &theta, epsilon, None, &inner)?;
    let z = report.y.clone();
    let row_lse = pf.row_log_sums(&z);
    let log_x: Vec<f64> = r.iter().zip(&row_lse).map(|(&ri, l)| (ri as f64).ln() - l).collect();
    let scaled: Vec<Vec<f64>> = a
        .iter()
        .zip(&log_x)
        .map(|(row, lx)| row.iter().zip(&z).map(|(&v, zk)| if v > 0.0 { (lx + v.ln() + zk).exp() } else { 0.0 }).collect())
        .collect();
    let row_residual = scaled
        .iter()
        .zip(r)
        .map(|(row, &ri)| (row.iter().sum::<f64>() - ri as f64).abs())
        .fold(0.0, f64::max);
    let column_residual: f64 =
        (0..n).map(|k| (scaled.iter().map(|row| row[k]).sum::<f64>() - c[k] as f64).abs()).sum();
    if column_residual > epsilon {
        return Err(Error::Convergence {
            iterations: report.iterations,
            best_certificate: column_residual,
            best: Some(Box::new(report)),
        });
    }
    let la = a.iter().flatten().filter(|&&v| v > 0.0).map(|v| v.ln().abs()).fold(0.0, f64::max);
    let h = pf.total_degree() as f64;
    let radius = report.radius.radius;
    Ok(ScalingResult {
        x: log_x.iter().map(|v| v.exp()).collect(),
        y: z.iter().map(|v| v.exp()).collect(),
        log_x_max: log_x.iter().map(|v| v.abs()).fold(0.0, f64::max),
        log_y_max: z.iter().map(|v| v.abs()).fold(0.0, f64::max),
        budget_log_y: radius,
        budget_log_x: radius + la + h.ln(),
        matrix_bit_complexity: la,
        z,
        log_x,
        scaled,
        row_residual,
        column_residual,
        report,
    })
}

/// One outer iteration of a cut-model maximization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    pub iteration: usize,
    pub point: Vec<f64>,
    /// Inner solve value at `point`, an upper estimate of the objective there.
    pub value: f64,
    pub best_lower: f64,
    pub upper: f64,
    pub inner_iterations: usize,
}

/// Result of maximizing a concave function over a polytope, in log domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterReport {
    /// `exp(log_upper)`.
    pub value: f64,
    pub log_lower: f64,
    pub log_upper: f64,
    /// Point with the best certified lower bound.
    pub argmax: Vec<f64>,
    pub iterations: usize,
    pub history: Vec<OuterStep>,
}

struct Evaluation {
    value: f64,
    lower: f64,
    slope: Vec<f64>,
    inner_iterations: usize,
}

/// Feasible set `{θ = T z : E z = e, z ≥ 0}` whose first `simplex` coordinates
/// of `z` are convex weights.
struct Region {
    t: Vec<Vec<f64>>,
    e: Vec<Vec<f64>>,
    e_rhs: Vec<f64>,
    simplex: usize,
}

impl Region {
    fn nz(&self) -> usize {
        self.t.first().map(|r| r.len()).unwrap_or(0)
    }

    /// `T z` after snapping the convex weights back onto the simplex, so LP
    /// round-off cannot push the point out of the hull.
    fn point(&self, z: &[f64]) -> Vec<f64> {
        let mut z = z.to_vec();
        let k = self.simplex.min(z.len());
        z[..k].iter_mut().for_each(|v| *v = v.max(0.0));
        let s: f64 = z[..k].iter().sum();
        if s > 0.0 {
            z[..k].iter_mut().for_each(|v| *v /= s);
        }
        self.t.iter().map(|row| dot(row, &z)).collect()
    }

    /// Any feasible point.
    fn feasible_point(&self) -> Option<Vec<f64>> {
        let sol = LinearProgram::new(self.e.clone(), self.e_rhs.clone(), vec![0.0; self.nz()]).solve(1e-9);
        (sol.status == LpStatus::Optimal).then(|| self.point(&sol.x))
    }

    /// Maximizes the cut model `min_k (f_k + ⟨s_k, θ − θ_k⟩)` over the region.
    fn maximize_model(&self, cuts: &[(Vec<f64>, f64, Vec<f64>)]) -> Option<(Vec<f64>, f64)> {
        let nz = self.nz();
        let k = cuts.len();
        let width = nz + 2 + k;
        let mut rows = Vec::with_capacity(self.e.len() + k);
        let mut rhs = self.e_rhs.clone();
        for row in &self.e {
            let mut r = row.clone();
            r.resize(width, 0.0);
            rows.push(r);
        }
        for (idx, (theta_k, f_k, s_k)) in cuts.iter().enumerate() {
            // t − ⟨s_k, Tz⟩ + σ_k = f_k − ⟨s_k, θ_k⟩
            let mut r = vec![0.0; width];
            for (j, rj) in r.iter_mut().take(nz).enumerate() {
                *rj = -self.t.iter().zip(s_k).map(|(row, s)| row[j] * s).sum::<f64>();
            }
            r[nz] = 1.0;
            r[nz + 1] = -1.0;
            r[nz + 2 + idx] = 1.0;
            rows.push(r);
            rhs.push(f_k - dot(s_k, theta_k));
        }
        let mut c = vec![0.0; width];
        c[nz] = -1.0;
        c[nz + 1] = 1.0;
        let sol = LinearProgram::new(rows, rhs, c).solve(1e-9);
        if sol.status != LpStatus::Optimal {
            return None;
        }
        Some((self.point(&sol.x[..nz]), sol.x[nz] - sol.x[nz + 1]))
    }
}

fn maximize_concave<F>(
    region: &Region,
    starts: Vec<Vec<f64>>,
    tol: f64,
    max_outer: usize,
    mut eval: F,
) -> Result<OuterReport>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    let mut cuts: Vec<(Vec<f64>, f64, Vec<f64>)> = Vec::new();
    let mut history = Vec::new();
    let mut best_lower = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    let mut upper = f64::INFINITY;
    let mut record = |theta: &[f64], ev: Evaluation, upper: f64, cuts: &mut Vec<_>, history: &mut Vec<OuterStep>| {
        if ev.lower > best_lower {
            best_lower = ev.lower;
            argmax = theta.to_vec();
        }
        history.push(OuterStep {
            iteration: history.len(),
            point: theta.to_vec(),
            value: ev.value,
            best_lower,
            upper,
            inner_iterations: ev.inner_iterations,
        });
        cuts.push((theta.to_vec(), ev.value, ev.slope));
        (best_lower, argmax.clone())
    };
    let mut state = (f64::NEG_INFINITY, Vec::new());
    for s in &starts {
        let ev = eval(s)?;
        state = record(s, ev, upper, &mut cuts, &mut history);
    }
    for _ in 0..max_outer {
        let (theta, ub) = region
            .maximize_model(&cuts)
            .ok_or_else(|| Error::numerical("cut-model LP failed"))?;
        upper = upper.min(ub);
        if upper - state.0 <= tol {
            return Ok(OuterReport {
                value: upper.exp(),
                log_lower: state.0,
                log_upper: upper,
                argmax: state.1,
                iterations: history.len(),
                history,
            });
        }
        let ev = eval(&theta)?;
        state = record(&theta, ev, upper, &mut cuts, &mut history);
    }
    Err(Error::Budget {
        message: format!("outer maximization did not close the gap in {max_outer} steps"),
        lower: state.0,
        upper,
    })
}

/// Constraint polytope `P(B)` of a capacity instance.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintPolytope {
    Vertices(Vec<Vec<i64>>),
    Facets(FacetSystem),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityInstance {
    /// The polynomial `p` as a weighted support.
    pub polynomial: WeightedSupport,
    pub constraint: ConstraintPolytope,
    /// Facets of `conv(supp p)`, used for the radius bound and face restriction.
    pub support_facets: Option<FacetSystem>,
}

/// Options for the outer maximization.
#[derive(Clone, Debug)]
pub struct OuterOptions {
    pub max_outer: usize,
    pub inner: SolveOptions,
}

impl Default for OuterOptions {
    fn default() -> Self {
        OuterOptions { max_outer: 500, inner: SolveOptions::default() }
    }
}

/// `Cap_B(p) = sup_{θ ∈ P(B) ∩ conv(supp p)} exp g(θ)`, as an upper value with
/// `log_upper − log_lower ≤ ε/2`.
pub fn capacity(instance: &CapacityInstance, epsilon: f64, opts: &OuterOptions) -> Result<OuterReport> {
    let w = &instance.polynomial;
    let m = w.dim();
    let pts = w.support().points_f64();
    let ns = pts.len();
    let mut t: Vec<Vec<f64>> = (0..m).map(|i| pts.iter().map(|p| p[i]).collect()).collect();
    let mut e: Vec<Vec<f64>> = Vec::new();
    let mut e_rhs = Vec::new();
    let mut starts = Vec::new();
    match &instance.constraint {
        ConstraintPolytope::Vertices(b) => {
            for v in b {
                ensure_dim(m, v.len())?;
            }
            let nb = b.len();
            for i in 0..m {
                let mut row: Vec<f64> = pts.iter().map(|p| p[i]).collect();
                row.extend(b.iter().map(|v| -(v[i] as f64)));
                e.push(row);
                e_rhs.push(0.0);
            }
            let mut ones = vec![1.0; ns];
            ones.extend(vec![0.0; nb]);
            e.push(ones);
            e_rhs.push(1.0);
            let mut ones = vec![0.0; ns];
            ones.extend(vec![1.0; nb]);
            e.push(ones);
            e_rhs.push(1.0);
            t.iter_mut().for_each(|row| row.extend(vec![0.0; nb]));
            for v in b {
                if let Some(j) = w.support().index_of(v) {
                    starts.push(pts[j].clone());
                }
            }
        }
        ConstraintPolytope::Facets(f) => {
            if let Some(d) = f.dim() {
                ensure_dim(m, d)?;
            }
            let nf = f.len();
            for (i, (a, &bi)) in f.rows().iter().zip(f.offsets()).enumerate() {
                let mut row: Vec<f64> = pts.iter().map(|p| a.iter().zip(p).map(|(&x, y)| x as f64 * y).sum()).collect();
                row.extend((0..nf).map(|k| if k == i { 1.0 } else { 0.0 }));
                e.push(row);
                e_rhs.push(bi);
            }
            let mut ones = vec![1.0; ns];
            ones.extend(vec![0.0; nf]);
            e.push(ones);
            e_rhs.push(1.0);
            t.iter_mut().for_each(|row| row.extend(vec![0.0; nf]));
            for (j, p) in pts.iter().enumerate() {
                if f.contains(p, 1e-9) {
                    starts.push(pts[j].clone());
                }
            }
        }
    }
    let region = Region { t, e, e_rhs, simplex: ns };
    if starts.is_empty() {
        starts.push(
            region
                .feasible_point()
                .ok_or_else(|| Error::domain("P(B) does not meet the convex hull of supp p"))?,
        );
    }
    let oracle = CountingOracle::Explicit(w.clone());
    let eps_in = epsilon / 4.0;
    let facets = instance.support_facets.as_ref();
    let inner = &opts.inner;
    maximize_concave(&region, starts, epsilon / 2.0, opts.max_outer, |theta| {
        let rep = dual::solve_dual(&oracle, theta, eps_in, facets, inner)?;
        Ok(Evaluation {
            value: rep.h_value,
            lower: rep.h_value - rep.gap_certificate - eps_in / 2.0,
            slope: rep.y.iter().map(|v| -v).collect(),
            inner_iterations: rep.iterations,
        })
    })
}

/// Bases `S` (`|S| = n`, `det V_S ≠ 0`) of the rows of `V` with `log det(V_S)²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    pub n: usize,
    pub m: usize,
    pub bases: Vec<Vec<usize>>,
    pub log_det_sq: Vec<f64>,
}

impl BasisSet {
    pub fn indicator(&self, k: usize) -> Vec<i64> {
        let mut v = vec![0; self.m];
        for &j in &self.bases[k] {
            v[j] = 1;
        }
        v
    }

    pub fn indicators(&self) -> Vec<Vec<f64>> {
        (0..self.bases.len()).map(|k| to_f64(&self.indicator(k))).collect()
    }
}

/// Upper limit on `C(m, n)` for basis enumeration.
pub const MAX_BASIS_SUBSETS: u64 = 1_000_000;

/// Enumerates the bases among the rows of `V`.
pub fn enumerate_bases(vectors: &[Vec<f64>]) -> Result<BasisSet> {
    let m = vectors.len();
    let n = vectors.first().map(|v| v.len()).unwrap_or(0);
    if n == 0 || m < n {
        return Err(Error::domain(format!("need at least n = {n} ≥ 1 vectors, got {m}")));
    }
    for v in vectors {
        ensure_dim(n, v.len())?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("vectors must be finite"));
        }
    }
    if rank(vectors, 1e-10) < n {
        return Err(Error::domain("V does not have full column rank"));
    }
    let count = crate::numeric::log_binomial(m as u64, n as u64).exp();
    if count > MAX_BASIS_SUBSETS as f64 * 1.000001 {
        return Err(Error::Budget {
            message: format!("C({m}, {n}) subsets exceed the enumeration limit"),
            lower: f64::NAN,
            upper: f64::NAN,
        });
    }
    let log_norms: Vec<f64> = vectors.iter().map(|v| norm2(v).max(1e-300).ln()).collect();
    let mut bases = Vec::new();
    let mut log_det_sq = Vec::new();
    let mut s: Vec<usize> = (0..n).collect();
    loop {
        let sub: Vec<Vec<f64>> = s.iter().map(|&j| vectors[j].clone()).collect();
        let (_, ld) = log_abs_det(&sub);
        let scale: f64 = s.iter().map(|&j| log_norms[j]).sum();
        // relative singularity test against Hadamard's bound
        if ld.is_finite() && ld - scale > (1e-10f64).ln() {
            bases.push(s.clone());
            log_det_sq.push(2.0 * ld);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(BasisSet { n, m, bases, log_det_sq });
            }
            i -= 1;
            if s[i] < m - n + i {
                s[i] += 1;
                for k in i + 1..n {
                    s[k] = s[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Brascamp–Lieb constant `inf_{x>0} det(Σ p_j x_j v_j v_jᵀ) / ∏ x_j^{p_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlReport {
    /// `+∞` when `p` lies outside the base polytope.
    pub value: f64,
    pub log_value: f64,
    pub in_polytope: bool,
    pub num_bases: usize,
    pub report: Option<SolveReport>,
}

/// Entries below this are treated as exact zeros of `p`.
const P_ZERO: f64 = 1e-12;

fn clean_p(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&v| if v.abs() < P_ZERO { 0.0 } else { v }).collect()
}

fn bl_support(bases: &BasisSet, p: &[f64]) -> Result<(WeightedSupport, Vec<usize>)> {
    let log_p: Vec<f64> = p.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let active: Vec<usize> =
        (0..bases.bases.len()).filter(|&k| bases.bases[k].iter().all(|&j| p[j] > 0.0)).collect();
    let points = active.iter().map(|&k| bases.indicator(k)).collect();
    let lw = active
        .iter()
        .map(|&k| bases.bases[k].iter().map(|&j| log_p[j]).sum::<f64>() + bases.log_det_sq[k])
        .collect();
    Ok((WeightedSupport::new(points, Some(lw))?, active))
}

fn bl_inner(bases: &BasisSet, p: &[f64], epsilon: f64, opts: &SolveOptions) -> Result<SolveReport> {
    let (support, _) = bl_support(bases, p)?;
    let oracle = CountingOracle::Explicit(support);
    let mut inner = opts.clone();
    // base polytopes of linear matroids have 0/±1 facet normals
    inner.unary_complexity = Some(1);
    dual::solve_dual(&oracle, p, epsilon, None, &inner)
}

fn in_base_polytope(bases: &BasisSet, p: &[f64]) -> bool {
    p.iter().all(|&v| v >= -1e-12) && lp::in_hull(&bases.indicators(), p, 1e-9)
}

/// Rank-1 Brascamp–Lieb constant to multiplicative accuracy `1 + ε`.
pub fn bl_constant(vectors: &[Vec<f64>], p: &[f64], epsilon: f64, opts: &SolveOptions) -> Result<BlReport> {
    let bases = enumerate_bases(vectors)?;
    ensure_dim(bases.m, p.len())?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("p must be finite"));
    }
    let p = clean_p(p);
    if !in_base_polytope(&bases, &p) {
        return Ok(BlReport {
            value: f64::INFINITY,
            log_value: f64::INFINITY,
            in_polytope: false,
            num_bases: bases.bases.len(),
            report: None,
        });
    }
    let rep = bl_inner(&bases, &p, epsilon / 2.0, opts)?;
    Ok(BlReport {
        value: rep.h_value.exp(),
        log_value: rep.h_value,
        in_polytope: true,
        num_bases: bases.bases.len(),
        report: Some(rep),
    })
}

/// `∂/∂p_j log Σ_S p^S det(V_S)² e^{⟨1_S, y⟩} − y_j`.
fn bl_slope(bases: &BasisSet, p: &[f64], y: &[f64]) -> Vec<f64> {
    let log_p: Vec<f64> = p.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let terms: Vec<f64> = bases
        .bases
        .iter()
        .zip(&bases.log_det_sq)
        .map(|(s, ld)| s.iter().map(|&j| log_p[j] + y[j]).sum::<f64>() + ld)
        .collect();
    let log_z = log_sum_exp_slice(&terms);
    (0..bases.m)
        .map(|j| {
            let parts: Vec<f64> = bases
                .bases
                .iter()
                .zip(&bases.log_det_sq)
                .filter(|(s, _)| s.contains(&j))
                .map(|(s, ld)| {
                    s.iter().filter(|&&i| i != j).map(|&i| log_p[i]).sum::<f64>()
                        + s.iter().map(|&i| y[i]).sum::<f64>()
                        + ld
                        - log_z
                })
                .collect();
            let d = if parts.is_empty() { 0.0 } else { log_sum_exp_slice(&parts).exp() };
            d - y[j]
        })
        .collect()
}

/// `sup_{p ∈ P_B} BL(V, p)` to multiplicative accuracy `1 + ε`.
pub fn bl_worst_case(vectors: &[Vec<f64>], epsilon: f64, opts: &OuterOptions) -> Result<OuterReport> {
    let bases = enumerate_bases(vectors)?;
    let ind = bases.indicators();
    let nb = ind.len();
    let t: Vec<Vec<f64>> = (0..bases.m).map(|j| ind.iter().map(|v| v[j]).collect()).collect();
    let region = Region { t, e: vec![vec![1.0; nb]], e_rhs: vec![1.0], simplex: nb };
    let centroid: Vec<f64> =
        (0..bases.m).map(|j| ind.iter().map(|v| v[j]).sum::<f64>() / nb as f64).collect();
    let eps_in = epsilon / 4.0;
    maximize_concave(&region, vec![centroid], epsilon / 2.0, opts.max_outer, |p| {
        let p = clean_p(p);
        let rep = bl_inner(&bases, &p, eps_in, &opts.inner)?;
        Ok(Evaluation {
            value: rep.h_value,
            lower: rep.h_value - rep.gap_certificate - eps_in / 2.0,
            slope: bl_slope(&bases, &p, &rep.y),
            inner_iterations: rep.iterations,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_by_two() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let s = matrix_scale(&a, &[1, 1], &[1, 1], 1e-6, &SolveOptions::default()).unwrap();
        for row in &s.scaled {
            for v in row {
                assert!((v - 0.5).abs() < 1e-9);
            }
        }
        assert!(s.row_residual < 1e-12);
    }

    #[test]
    fn triangular_scaling_converges() {
        let a = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        let s = matrix_scale(&a, &[1, 1], &[1, 1], 1e-6, &SolveOptions::default()).unwrap();
        assert!(s.column_residual <= 1e-6);
        assert!(s.row_residual < 1e-12);
    }

    #[test]
    fn zero_column_rejected() {
        let a = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        assert!(matches!(
            matrix_scale(&a, &[1, 1], &[1, 1], 1e-6, &SolveOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn capacity_single_coordinate() {
        let w = WeightedSupport::uniform(vec![vec![1, 0], vec![0, 1]]).unwrap();
        let inst = CapacityInstance {
            polynomial: w,
            constraint: ConstraintPolytope::Vertices(vec![vec![1, 0]]),
            support_facets: Some(
                FacetSystem::new(
                    vec![vec![1, 1], vec![-1, -1], vec![-1, 0], vec![0, -1]],
                    vec![1.0, -1.0, 0.0, 0.0],
                )
                .unwrap(),
            ),
        };
        let rep = capacity(&inst, 1e-6, &OuterOptions::default()).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-6);
        assert!(rep.value >= 1.0);
    }

    #[test]
    fn identity_bl_is_one() {
        let v = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let r = bl_constant(&v, &[1.0, 1.0, 1.0], 1e-6, &SolveOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        let wc = bl_worst_case(&v, 1e-6, &OuterOptions::default()).unwrap();
        assert!((wc.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn am_gm_case() {
        let v = vec![vec![1.0], vec![1.0], vec![1.0]];
        let r = bl_constant(&v, &[1.0 / 3.0; 3], 1e-6, &SolveOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 2e-6, "{}", r.value);
    }

    #[test]
    fn outside_base_polytope_is_infinite() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let r = bl_constant(&v, &[1.0, 1.0, 1.0], 1e-6, &SolveOptions::default()).unwrap();
        assert!(!r.in_polytope && r.value.is_infinite());
    }

    #[test]
    fn basis_enumeration() {
        let v = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0]];
        let b = enumerate_bases(&v).unwrap();
        assert_eq!(b.bases, vec![vec![0, 2], vec![1, 2]]);
        assert!((b.log_det_sq[1] - (36f64).ln()).abs() < 1e-12);
    }
}
