//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  Ax = b, x ≥ 0`. Bland's rule keeps the method from
//! cycling on the heavily degenerate systems produced by tight facets and
//! convex-hull membership checks. Sizes here are a few hundred columns at most.

use crate::numeric::{norm2, norm_inf, orthonormal_basis, project_onto, sub};

#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Constraint rows, each of length `c.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
}

const PIVOT_TOL: f64 = 1e-10;

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs Bland's-rule iterations over columns `< allowed`.
    fn run(&mut self, allowed: usize, max_iters: usize) -> LpStatus {
        for _ in 0..max_iters {
            let entering = (0..allowed).find(|&j| self.obj[j] < -1e-11);
            let Some(j) = entering else {
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return LpStatus::Unbounded,
                Some((r, _)) => self.pivot(r, j),
            }
        }
        LpStatus::IterationLimit
    }
}

impl LinearProgram {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Self {
        LinearProgram { a, b, c }
    }

    /// Solves the program; `feas_tol` bounds the phase-one residual accepted as feasible.
    pub fn solve(&self, feas_tol: f64) -> LpSolution {
        let m = self.a.len();
        let n = self.c.len();
        let width = n + m;
        let mut rows = Vec::with_capacity(m);
        for (i, row) in self.a.iter().enumerate() {
            let scale = norm_inf(row).max(self.b[i].abs()).max(1e-300);
            let sign = if self.b[i] < 0.0 { -1.0 } else { 1.0 } / scale;
            let mut t = vec![0.0; width + 1];
            for (j, v) in row.iter().enumerate() {
                t[j] = sign * v;
            }
            t[n + i] = 1.0;
            t[width] = sign * self.b[i];
            rows.push(t);
        }
        // phase one: minimize the sum of artificials
        let mut obj = vec![0.0; width + 1];
        for row in &rows {
            for j in 0..n {
                obj[j] -= row[j];
            }
            obj[width] -= row[width];
        }
        let mut tab = Tableau { rows, obj, basis: (n..n + m).collect(), width };
        let max_iters = 50 * (m + n + 10) * (m + 10);
        let st = tab.run(width, max_iters);
        let infeasible_sol = |status| LpSolution { status, x: vec![0.0; n], value: f64::NAN };
        if st == LpStatus::IterationLimit {
            return infeasible_sol(st);
        }
        if -tab.obj[width] > feas_tol {
            return infeasible_sol(LpStatus::Infeasible);
        }
        // drive artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| tab.rows[i][j].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
        // phase two
        let mut obj = vec![0.0; width + 1];
        obj[..n].copy_from_slice(&self.c);
        for i in 0..m {
            let bj = tab.basis[i];
            let cb = if bj < n { self.c[bj] } else { 0.0 };
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&tab.rows[i]) {
                    *o -= cb * v;
                }
            }
        }
        tab.obj = obj;
        let st = tab.run(n, max_iters);
        let mut x = vec![0.0; n];
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.rhs(i).max(0.0);
            }
        }
        let value = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        LpSolution { status: st, x, value }
    }
}

/// Convex weights `λ ≥ 0, Σλ = 1` with `Σ λ_i points_i = target`, if they exist.
pub fn hull_weights(points: &[Vec<f64>], target: &[f64], tol: f64) -> Option<Vec<f64>> {
    let lp = hull_lp(points, target, vec![0.0; points.len()]);
    let sol = lp.solve(tol);
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let recon = combine(points, &sol.x, target.len());
    if norm_inf(&sub(&recon, target)) > tol.max(1e-9) * 10.0 {
        return None;
    }
    Some(sol.x)
}

pub fn in_hull(points: &[Vec<f64>], target: &[f64], tol: f64) -> bool {
    hull_weights(points, target, tol).is_some()
}

fn hull_lp(points: &[Vec<f64>], target: &[f64], c: Vec<f64>) -> LinearProgram {
    let m = target.len();
    let mut a = vec![vec![0.0; points.len()]; m + 1];
    for (j, p) in points.iter().enumerate() {
        for i in 0..m {
            a[i][j] = p[i];
        }
        a[m][j] = 1.0;
    }
    let mut b = target.to_vec();
    b.push(1.0);
    LinearProgram::new(a, b, c)
}

fn combine(points: &[Vec<f64>], w: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (p, &wi) in points.iter().zip(w) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += wi * v;
        }
    }
    out
}

/// The minimal face of `conv(points)` containing a target point.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimalFace {
    /// Points carrying positive weight in some convex representation of the target.
    pub indices: Vec<usize>,
    /// Convex weights over `indices`, all strictly positive, representing the target.
    pub weights: Vec<f64>,
}

/// Minimal face of `conv(points)` containing `target`, or `None` if `target`
/// is outside the hull. The face weights average the LP solutions found, so
/// every face point gets positive weight.
pub fn minimal_face(points: &[Vec<f64>], target: &[f64], tol: f64) -> Option<MinimalFace> {
    let n = points.len();
    let mut in_face = vec![false; n];
    let first = hull_weights(points, target, tol)?;
    let threshold = 1e-9;
    let mut solutions = vec![first];
    for (j, &w) in solutions[0].iter().enumerate() {
        in_face[j] = w > threshold;
    }
    loop {
        if in_face.iter().all(|&f| f) {
            break;
        }
        // maximize the total weight on points not yet known to be in the face
        let c: Vec<f64> = in_face.iter().map(|&f| if f { 0.0 } else { -1.0 }).collect();
        let sol = hull_lp(points, target, c).solve(tol);
        if sol.status != LpStatus::Optimal {
            break;
        }
        let mut progressed = false;
        for j in 0..n {
            if !in_face[j] && sol.x[j] > threshold {
                in_face[j] = true;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
        solutions.push(sol.x);
    }
    // a face contains every point of its affine hull; points whose weight the
    // LPs could only make tiny are recovered here
    let found: Vec<usize> = (0..n).filter(|&j| in_face[j]).collect();
    let base = &points[found[0]];
    let dirs: Vec<Vec<f64>> = found[1..].iter().map(|&j| sub(&points[j], base)).collect();
    let basis = orthonormal_basis(&dirs, 1e-9);
    let mut closed = false;
    for j in 0..n {
        if in_face[j] {
            continue;
        }
        let d = sub(&points[j], base);
        if norm2(&sub(&d, &project_onto(&basis, &d))) <= 1e-9 * (1.0 + norm2(&d)) {
            in_face[j] = true;
            closed = true;
        }
    }
    let indices: Vec<usize> = (0..n).filter(|&j| in_face[j]).collect();
    if closed {
        let face_pts: Vec<Vec<f64>> = indices.iter().map(|&j| points[j].clone()).collect();
        if let Some(weights) = max_min_weights(&face_pts, target, tol) {
            return Some(MinimalFace { indices, weights });
        }
    }
    let k = solutions.len() as f64;
    let mut weights: Vec<f64> =
        indices.iter().map(|&j| solutions.iter().map(|s| s[j].max(0.0)).sum::<f64>() / k).collect();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    Some(MinimalFace { indices, weights })
}

/// Convex weights representing `target` that maximize the smallest weight.
fn max_min_weights(points: &[Vec<f64>], target: &[f64], tol: f64) -> Option<Vec<f64>> {
    // λ_j = μ_j + t with μ ≥ 0; the extra column carries t
    let k = points.len();
    let mut cols = points.to_vec();
    let mut sum = vec![0.0; target.len()];
    for p in points {
        sum.iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    cols.push(sum);
    let mut lp = hull_lp(&cols, target, vec![0.0; k + 1]);
    lp.a[target.len()][k] = k as f64;
    lp.c[k] = -1.0;
    let sol = lp.solve(tol);
    if sol.status != LpStatus::Optimal || sol.x[k] <= 0.0 {
        return None;
    }
    let t = sol.x[k];
    let mut w: Vec<f64> = sol.x[..k].iter().map(|&m| m.max(0.0) + t).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    Some(w)
}
