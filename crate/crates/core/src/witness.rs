//! Short near-optimal dual witnesses.
//!
//! A dual point `y` is written as a nonnegative combination of projected facet
//! normals tight at a vertex maximizing `⟨α, y⟩`. Capping every coefficient at
//! `Δ` shortens `y` to norm at most `m^{3/2} M Δ` while raising `h_θ` by at
//! most `ε/2`: every off-facet point loses at least `Δ` in exponent because
//! integer normals separate lattice points by at least one.

use serde::{Deserialize, Serialize};

use crate::dual::{self, radius_bound, SolveOptions};
use crate::error::{ensure_dim, Error, Result};
use crate::lp::{LinearProgram, LpStatus};
use crate::numeric::{self, axpy, dot, least_squares, norm2, scale, sub, to_f64};
use crate::oracle::CountingOracle;
use crate::support::{FacetSystem, SupportFamily};

/// Accepted reconstruction residual `‖Σ β_i a'_i − y‖`, relative to `max(1, ‖y‖)`.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

/// A conic combination of tight projected facet normals at a maximizing vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicBasis {
    pub vertex_index: usize,
    pub vertex: Vec<i64>,
    /// Facets tight at the vertex.
    pub tight: Vec<usize>,
    /// Independent subset of `tight` carrying the combination.
    pub indices: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Projections of the selected facet normals onto the direction space.
    pub projected_rows: Vec<Vec<f64>>,
    /// The input vector projected onto the direction space.
    pub target: Vec<f64>,
    pub residual: f64,
}

impl ConicBasis {
    /// `Σ β_i a'_i`.
    pub fn combination(&self) -> Vec<f64> {
        combine(&self.projected_rows, &self.coefficients, self.target.len())
    }
}

fn combine(rows: &[Vec<f64>], coef: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (r, &b) in rows.iter().zip(coef) {
        axpy(&mut out, b, r);
    }
    out
}

/// Finds a vertex maximizing `⟨α, y⟩` and writes the projection of `y` as a
/// nonnegative combination of at most `dim(H)` independent tight normals.
pub fn good_basis(y: &[f64], facets: &FacetSystem, support: &SupportFamily) -> Result<ConicBasis> {
    let m = support.dim();
    ensure_dim(m, y.len())?;
    if let Some(d) = facets.dim() {
        ensure_dim(m, d)?;
    }
    let basis = support.direction_basis();
    let target = numeric::project_onto(&basis, y);
    let scale_y = norm2(&target);
    let vertex_index = support.argmax(&target, 1e-9 * scale_y.max(1.0));
    let vertex = support.points()[vertex_index].clone();
    let tight: Vec<usize> = (0..facets.len())
        .filter(|&i| {
            let v: i64 = facets.rows()[i].iter().zip(&vertex).map(|(a, x)| a * x).sum();
            (v as f64 - facets.offsets()[i]).abs() <= 1e-9
        })
        .collect();
    if scale_y <= 1e-300 {
        return Ok(ConicBasis {
            vertex_index,
            vertex,
            tight,
            indices: Vec::new(),
            coefficients: Vec::new(),
            projected_rows: Vec::new(),
            target,
            residual: 0.0,
        });
    }
    let projected: Vec<Vec<f64>> =
        tight.iter().map(|&i| numeric::project_onto(&basis, &to_f64(&facets.rows()[i]))).collect();
    // unit-norm target keeps the LP well scaled; β is rescaled afterwards
    let unit = scale(&target, 1.0 / scale_y);
    let k = basis.len();
    let a: Vec<Vec<f64>> =
        (0..k).map(|r| projected.iter().map(|p| dot(&basis[r], p)).collect()).collect();
    let b: Vec<f64> = basis.iter().map(|e| dot(e, &unit)).collect();
    let sol = LinearProgram::new(a, b, vec![0.0; projected.len()]).solve(1e-9);
    if sol.status != LpStatus::Optimal {
        return Err(Error::Integrity(format!(
            "maximizing direction is not in the cone of the {} tight normals at vertex {:?}; \
             the facet system does not describe conv(F)",
            tight.len(),
            vertex
        )));
    }
    let mut active: Vec<usize> = (0..projected.len()).filter(|&j| sol.x[j] > 0.0).collect();
    let mut beta: Vec<f64> = active.iter().map(|&j| sol.x[j]).collect();
    caratheodory(&projected, &mut active, &mut beta);
    // polish on the independent set
    let cols: Vec<Vec<f64>> = active.iter().map(|&j| projected[j].clone()).collect();
    if !cols.is_empty() {
        if let Ok(ls) = least_squares(&cols, &unit) {
            if ls.iter().all(|&v| v >= -1e-12) {
                let before = norm2(&sub(&combine(&cols, &beta, m), &unit));
                let cand: Vec<f64> = ls.iter().map(|v| v.max(0.0)).collect();
                if norm2(&sub(&combine(&cols, &cand, m), &unit)) <= before {
                    beta = cand;
                }
            }
        }
    }
    let coefficients: Vec<f64> = beta.iter().map(|b| b * scale_y).collect();
    let projected_rows: Vec<Vec<f64>> = active.iter().map(|&j| projected[j].clone()).collect();
    let indices: Vec<usize> = active.iter().map(|&j| tight[j]).collect();
    let residual = norm2(&sub(&combine(&projected_rows, &coefficients, m), &target));
    if residual > RECONSTRUCTION_TOL * scale_y.max(1.0) {
        return Err(Error::Integrity(format!(
            "conic reconstruction residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(ConicBasis { vertex_index, vertex, tight, indices, coefficients, projected_rows, target, residual })
}

/// Removes linearly dependent columns from a nonnegative combination without
/// changing the represented vector.
fn caratheodory(cols: &[Vec<f64>], active: &mut Vec<usize>, beta: &mut Vec<f64>) {
    loop {
        let vecs: Vec<Vec<f64>> = active.iter().map(|&j| cols[j].clone()).collect();
        let Some(dep) = (1..vecs.len()).find(|&t| numeric::rank(&vecs[..=t], 1e-10) <= t) else {
            return;
        };
        // vecs[dep] = Σ_{t<dep} c_t vecs[t] on an independent prefix
        let prefix: Vec<Vec<f64>> = vecs[..dep].to_vec();
        let Ok(c) = least_squares(&prefix, &vecs[dep]) else { return };
        let mut z: Vec<f64> = c;
        z.push(-1.0);
        if z.iter().all(|&v| v <= 0.0) {
            z.iter_mut().for_each(|v| *v = -*v);
        }
        let (mut t, mut hit) = (f64::INFINITY, 0);
        for (i, &zi) in z.iter().enumerate() {
            if zi > 0.0 && beta[i] / zi < t {
                t = beta[i] / zi;
                hit = i;
            }
        }
        if !t.is_finite() {
            return;
        }
        for (i, &zi) in z.iter().enumerate() {
            beta[i] = (beta[i] - t * zi).max(0.0);
        }
        beta[hit] = 0.0;
        let keep: Vec<usize> = (0..active.len()).filter(|&i| beta[i] > 0.0).collect();
        *active = keep.iter().map(|&i| active[i]).collect();
        *beta = keep.iter().map(|&i| beta[i]).collect();
    }
}

/// `y∘ = Σ min(Δ, β_i) a'_i`.
pub fn truncate_dual(basis: &ConicBasis, delta: f64) -> Vec<f64> {
    let capped: Vec<f64> = basis.coefficients.iter().map(|&b| b.min(delta)).collect();
    combine(&basis.projected_rows, &capped, basis.target.len())
}

/// Smallest `⟨α* − α, a_i⟩` over selected facets `i` and support points off facet `i`.
/// Integer facet data makes this at least one.
pub fn integrality_gap(basis: &ConicBasis, facets: &FacetSystem, support: &SupportFamily) -> Option<i64> {
    let mut best: Option<i64> = None;
    for &i in &basis.indices {
        let a = &facets.rows()[i];
        let at_vertex: i64 = a.iter().zip(&basis.vertex).map(|(x, y)| x * y).sum();
        for p in support.points() {
            let v: i64 = a.iter().zip(p).map(|(x, y)| x * y).sum();
            if (v as f64 - facets.offsets()[i]).abs() > 1e-9 {
                let gap = at_vertex - v;
                best = Some(best.map_or(gap, |b| b.min(gap)));
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    pub h_star: f64,
    pub h_truncated: f64,
    /// `h(y*) + ε/2 − h(y∘)`; nonnegative when the truncation bound holds.
    pub margin: f64,
    pub norm_star: f64,
    pub norm_truncated: f64,
    pub passed: bool,
    /// Full instance dump when the bound fails.
    pub counterexample: Option<serde_json::Value>,
}

/// Checks `h_θ(y∘) ≤ h_θ(y*) + ε/2`.
pub fn verify_truncation(
    oracle: &CountingOracle,
    theta: &[f64],
    y_star: &[f64],
    y_truncated: &[f64],
    epsilon: f64,
) -> Result<TruncationCheck> {
    let h_star = dual::h_value(oracle, theta, y_star)?;
    let h_truncated = dual::h_value(oracle, theta, y_truncated)?;
    // rounding slack for the two log-sum-exp evaluations
    let slack = 1e-12 * (1.0 + h_star.abs());
    let margin = h_star + epsilon / 2.0 - h_truncated;
    let passed = margin >= -slack;
    let counterexample = (!passed).then(|| {
        let support = oracle.explicit().map(|w| {
            serde_json::json!({ "points": w.points(), "log_weights": w.log_weights() })
        });
        serde_json::json!({
            "theta": theta,
            "y_star": y_star,
            "y_truncated": y_truncated,
            "epsilon": epsilon,
            "h_star": h_star,
            "h_truncated": h_truncated,
            "support": support,
        })
    });
    Ok(TruncationCheck {
        h_star,
        h_truncated,
        margin,
        norm_star: norm2(y_star),
        norm_truncated: norm2(y_truncated),
        passed,
        counterexample,
    })
}

/// Solve, basis, truncation and check in one pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub y_star: Vec<f64>,
    pub y_truncated: Vec<f64>,
    pub delta: f64,
    /// `m^{3/2} M Δ`.
    pub norm_bound: f64,
    pub basis: ConicBasis,
    pub check: TruncationCheck,
}

/// Solves to `ε/2` optimality, then builds and checks the truncation witness.
pub fn witness(
    oracle: &CountingOracle,
    facets: &FacetSystem,
    theta: &[f64],
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<WitnessReport> {
    let w = oracle
        .explicit()
        .ok_or_else(|| Error::validation("truncation witnesses need an explicit support"))?;
    let solved = dual::solve_dual(oracle, theta, epsilon / 2.0, Some(facets), opts)?;
    let basis = good_basis(&solved.y, facets, w.support())?;
    let rb = radius_bound(
        w.dim(),
        facets.unary_complexity(),
        w.bit_complexity(),
        w.support().log_cardinality(),
        epsilon,
    )?;
    let y_truncated = truncate_dual(&basis, rb.delta);
    let check = verify_truncation(oracle, theta, &basis.target, &y_truncated, epsilon)?;
    Ok(WitnessReport {
        y_star: basis.target.clone(),
        y_truncated,
        delta: rb.delta,
        norm_bound: rb.radius,
        basis,
        check,
    })
}
