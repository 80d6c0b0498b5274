//! Min-norm points and long-dual-vector certificates.
//!
//! The shortest vector `v` of `conv(v_1..v_N)` gives the shortest `y` with
//! `⟨y, v_i⟩ ≤ −1` for all `i`, namely `y* = −v/‖v‖²` of length `1/‖v‖`. A
//! support that contains `0` and sits at distance `δ` from the affine hull of
//! its other points therefore forces near-optimal duals of length about `1/δ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, axpy, dot, norm2, scale, sub};
use crate::oracle::CountingOracle;
use crate::par::{self, Execution};
use crate::support::WeightedSupport;

/// Default termination tolerance for Wolfe's method.
pub const WOLFE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinNormResult {
    pub v: Vec<f64>,
    pub delta: f64,
    /// Convex coefficients with `v = Σ μ_i v_i`.
    pub mu: Vec<f64>,
    pub tau: f64,
    pub y_star: Vec<f64>,
    pub iterations: usize,
}

/// Wolfe's method on the convex hull of `points`. Returns the min-norm point,
/// its convex coefficients and the number of major iterations. Allows `0` in
/// the hull.
pub fn wolfe(points: &[Vec<f64>], tol: f64) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::domain("min-norm point of an empty set"));
    }
    let dim = points[0].len();
    for p in points {
        crate::error::ensure_dim(dim, p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite input vector"));
        }
    }
    let scale2 = points.iter().map(|p| dot(p, p)).fold(0.0f64, f64::max).max(1e-300);
    let start = (0..n)
        .min_by(|&a, &b| dot(&points[a], &points[a]).total_cmp(&dot(&points[b], &points[b])))
        .unwrap_or(0);
    let mut corral: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();
    let max_major = 50 * n + 100;
    let mut major = 0;
    while major < max_major {
        major += 1;
        let xx = dot(&x, &x);
        let (j, xj) = (0..n)
            .map(|j| (j, dot(&x, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xj >= xx - tol * scale2 || xx <= tol * tol * scale2 || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);
        // minor cycle
        loop {
            let w = match affine_minimizer(points, &corral) {
                Some(w) => w,
                None => {
                    // affinely dependent corral: drop the newest point and stop
                    corral.pop();
                    lambda.pop();
                    let s: f64 = lambda.iter().sum();
                    lambda.iter_mut().for_each(|l| *l /= s);
                    return Ok(finish(points, &corral, &lambda, major));
                }
            };
            if w.iter().all(|&wi| wi > 1e-14) {
                lambda = w;
                break;
            }
            let mut step = 1.0f64;
            for (l, wi) in lambda.iter().zip(&w) {
                if *wi <= 1e-14 {
                    let denom = l - wi;
                    if denom > 0.0 {
                        step = step.min(l / denom);
                    }
                }
            }
            for (l, wi) in lambda.iter_mut().zip(&w) {
                *l += step * (wi - *l);
            }
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_l = Vec::with_capacity(corral.len());
            for (c, l) in corral.iter().zip(&lambda) {
                if *l > 1e-14 {
                    keep_c.push(*c);
                    keep_l.push(*l);
                }
            }
            if keep_c.is_empty() {
                // numerically collapsed; keep the point of largest weight in w
                let best = (0..corral.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
                keep_c.push(corral[best]);
                keep_l.push(1.0);
            }
            let s: f64 = keep_l.iter().sum();
            corral = keep_c;
            lambda = keep_l.into_iter().map(|l| l / s).collect();
        }
        x = combine(points, &corral, &lambda, dim);
    }
    Ok(finish(points, &corral, &lambda, major))
}

fn finish(points: &[Vec<f64>], corral: &[usize], lambda: &[f64], iters: usize) -> (Vec<f64>, Vec<f64>, usize) {
    let dim = points[0].len();
    let x = combine(points, corral, lambda, dim);
    let mut mu = vec![0.0; points.len()];
    for (&c, &l) in corral.iter().zip(lambda) {
        mu[c] += l;
    }
    (x, mu, iters)
}

fn combine(points: &[Vec<f64>], corral: &[usize], lambda: &[f64], dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for (&c, &l) in corral.iter().zip(lambda) {
        axpy(&mut x, l, &points[c]);
    }
    x
}

/// Weights `w` (summing to 1) of the min-norm point of the affine hull of the corral.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let p0 = &points[corral[0]];
    let cols: Vec<Vec<f64>> = corral[1..].iter().map(|&c| sub(&points[c], p0)).collect();
    // reject nearly dependent directions
    let basis = numeric::orthonormal_basis(&cols, 1e-12);
    if basis.len() < cols.len() {
        return None;
    }
    let target: Vec<f64> = p0.iter().map(|v| -v).collect();
    let c = numeric::least_squares(&cols, &target).ok()?;
    let mut w = Vec::with_capacity(k);
    w.push(1.0 - c.iter().sum::<f64>());
    w.extend(c);
    Some(w)
}

/// Min-norm point of `conv(vectors)` with the derived separation data.
pub fn min_norm_point(vectors: &[Vec<f64>]) -> Result<MinNormResult> {
    let (v, mu, iterations) = wolfe(vectors, WOLFE_TOL)?;
    let delta = norm2(&v);
    if delta <= 1e-12 {
        return Err(Error::domain(format!(
            "degenerate instance: the origin lies in the convex hull (distance {delta:.3e})"
        )));
    }
    let y_star = scale(&v, -1.0 / (delta * delta));
    Ok(MinNormResult { v, delta, mu, tau: 1.0 / delta, y_star, iterations })
}

/// Shortest `y` with `⟨y, v_i⟩ ≤ −1` for all `i`, and its length `τ`.
pub fn shortest_separating_y(vectors: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    let r = min_norm_point(vectors)?;
    Ok((r.y_star, r.tau))
}

/// Objective `Σ λ_i − ¼‖Σ λ_i v_i‖²` of the Lagrange dual of the separation QP.
pub fn separation_dual_objective(vectors: &[Vec<f64>], lambda: &[f64]) -> f64 {
    let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut s = vec![0.0; dim];
    for (v, &l) in vectors.iter().zip(lambda) {
        axpy(&mut s, l, v);
    }
    lambda.iter().sum::<f64>() - 0.25 * dot(&s, &s)
}

/// Support `F' ∪ {0}` built from a lattice cell of a flat simplex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatInstance {
    pub generators: Vec<Vec<i64>>,
    pub translate: Vec<i64>,
    pub cell_vertices: Vec<Vec<i64>>,
    /// `cell_vertices` followed by the origin.
    pub family: Vec<Vec<i64>>,
    pub theta: Vec<f64>,
    pub delta: f64,
    pub unit_normal: Vec<f64>,
    /// Projection of the origin onto the affine hull of the generators.
    pub projection: Vec<f64>,
    pub diameter: f64,
    pub smoothness: f64,
    pub epsilon: f64,
}

/// Maximum number of cell vertices enumerated by [`build_flat_instance`].
pub const MAX_CELL_VERTICES: usize = 1 << 20;

/// Builds the lattice-cell instance from affinely independent integer points
/// `α_0 = 0, α_1, …, α_m` (pass `α_1..α_m`; the origin is implicit).
pub fn build_flat_instance(generators: &[Vec<i64>]) -> Result<FlatInstance> {
    let m = generators.len();
    if m == 0 {
        return Err(Error::domain("need at least one generator"));
    }
    for g in generators {
        crate::error::ensure_dim(m, g.len())?;
    }
    let rows: Vec<Vec<f64>> = generators.iter().map(|g| numeric::to_f64(g)).collect();
    let det = numeric::det_i128(
        generators.iter().map(|g| g.iter().map(|&v| v as i128).collect()).collect(),
    );
    if det == 0 {
        return Err(Error::domain("points are affinely dependent together with the origin"));
    }
    // ⟨a', α_i⟩ = 1 for all i describes the hyperplane H
    let a_prime = numeric::solve(&rows, &vec![1.0; m])?;
    let na = norm2(&a_prime);
    let delta = 1.0 / na;
    let unit_normal = scale(&a_prime, delta);
    let projection = scale(&a_prime, delta * delta);
    let base = &rows[0];
    let dirs: Vec<Vec<f64>> = rows[1..].iter().map(|r| sub(r, base)).collect();
    let beta = if dirs.is_empty() {
        Vec::new()
    } else {
        numeric::least_squares(&dirs, &sub(&projection, base))?
    };
    let cell: Vec<i64> = beta
        .iter()
        .map(|&b| {
            let r = b.round();
            if (b - r).abs() <= 1e-12 {
                r as i64
            } else {
                b.floor() as i64
            }
        })
        .collect();
    let mut translate = generators[0].clone();
    for (k, &c) in cell.iter().enumerate() {
        for (t, (a, b)) in translate.iter_mut().zip(generators[k + 1].iter().zip(&generators[0])) {
            *t += c * (a - b);
        }
    }
    let count = 1usize.checked_shl((m - 1) as u32).unwrap_or(usize::MAX);
    if count > MAX_CELL_VERTICES {
        return Err(Error::Budget {
            message: format!("cell has 2^{} vertices", m - 1),
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    let mut cell_vertices = Vec::with_capacity(count);
    for mask in 0..count {
        let mut v = translate.clone();
        for k in 0..(m - 1) {
            if mask >> k & 1 == 1 {
                for (t, (a, b)) in v.iter_mut().zip(generators[k + 1].iter().zip(&generators[0])) {
                    *t += a - b;
                }
            }
        }
        cell_vertices.push(v);
    }
    let mut family = cell_vertices.clone();
    family.push(vec![0; m]);
    let diameter = numeric::diameter(&family.iter().map(|p| numeric::to_f64(p)).collect::<Vec<_>>());
    let smoothness = 2.0 * diameter * diameter;
    let epsilon = delta * delta / (4f64.exp() * smoothness);
    Ok(FlatInstance {
        generators: generators.to_vec(),
        translate,
        cell_vertices,
        family,
        theta: vec![0.0; m],
        delta,
        unit_normal,
        projection,
        diameter,
        smoothness,
        epsilon,
    })
}

impl FlatInstance {
    /// Uniform-weight oracle over the family.
    pub fn oracle(&self) -> Result<CountingOracle> {
        Ok(CountingOracle::Explicit(WeightedSupport::uniform(self.family.clone())?))
    }
}

/// A named generator set from the bundled catalogue.
#[derive(Clone, Debug)]
pub struct CatalogueEntry {
    pub name: String,
    pub generators: Vec<Vec<i64>>,
}

/// Chain simplices `α_1 = e_1`, `α_i = e_i + k e_{i−1}`; their distance from the
/// origin to the affine hull shrinks like `k^{−(m−1)}`.
pub fn chain_simplex(m: usize, k: i64) -> Vec<Vec<i64>> {
    (0..m)
        .map(|i| {
            let mut v = vec![0i64; m];
            v[i] = 1;
            if i > 0 {
                v[i - 1] = k;
            }
            v
        })
        .collect()
}

/// Bundled flat simplices with `δ ≈ 1e-3` plus a non-flat control.
pub fn catalogue() -> Vec<CatalogueEntry> {
    vec![
        CatalogueEntry { name: "chain-m2-k1000".into(), generators: chain_simplex(2, 1000) },
        CatalogueEntry { name: "chain-m3-k32".into(), generators: chain_simplex(3, 32) },
        CatalogueEntry { name: "chain-m4-k10".into(), generators: chain_simplex(4, 10) },
        CatalogueEntry { name: "unit-simplex-m3".into(), generators: chain_simplex(3, 0) },
    ]
}

/// One probe of the empirical lower-bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub norm: f64,
    pub gap: f64,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCertificate {
    pub delta: f64,
    pub tau: f64,
    pub y_star: Vec<f64>,
    pub epsilon: f64,
    /// Every `y` with `h(y) ≤ g(θ) + ε` has `‖y‖ ≥ required_norm`.
    pub required_norm: f64,
    pub probe_radius: f64,
    pub g_theta: f64,
    pub min_gap: f64,
    pub violations: usize,
    pub probes: Vec<Probe>,
}

/// Certifies that short duals are far from optimal on a flat instance and
/// cross-checks with random probes of norm at most `0.5/δ`.
pub fn certify_lower_bound(
    instance: &FlatInstance,
    num_probes: usize,
    seed: u64,
    exec: Execution,
) -> Result<LowerBoundCertificate> {
    let cells: Vec<Vec<f64>> = instance.cell_vertices.iter().map(|p| numeric::to_f64(p)).collect();
    let mn = min_norm_point(&cells)?;
    let oracle = instance.oracle()?;
    // θ = 0 is a vertex of conv(F) and the only point of F on ⟨a,x⟩ = 0: g(0) = log p_0.
    let g_theta = 0.0;
    let probe_radius = 0.5 / mn.delta;
    let m = instance.theta.len();
    let probes: Vec<Result<Probe>> = par::map_indexed(exec, num_probes, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut dir: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        // half of the probes lean toward the most favourable direction −a
        if k % 2 == 1 {
            let tilt: f64 = rng.random_range(0.5..4.0);
            let len = norm2(&dir);
            axpy(&mut dir, -tilt * len, &instance.unit_normal);
        }
        let nd = norm2(&dir).max(1e-300);
        let r = probe_radius * rng.random::<f64>().powf(1.0 / m as f64);
        let y = scale(&dir, r / nd);
        let (lg, grad) = oracle.eval_with_gradient(&y)?;
        Ok(Probe { norm: norm2(&y), gap: lg - g_theta, gradient_norm: norm2(&grad) })
    });
    let probes: Vec<Probe> = probes.into_iter().collect::<Result<_>>()?;
    let min_gap = probes.iter().map(|p| p.gap).fold(f64::INFINITY, f64::min);
    let violations = probes.iter().filter(|p| p.gap <= instance.epsilon).count();
    Ok(LowerBoundCertificate {
        delta: mn.delta,
        tau: mn.tau,
        y_star: mn.y_star,
        epsilon: instance.epsilon,
        required_norm: mn.tau,
        probe_radius,
        g_theta,
        min_gap,
        violations,
        probes,
    })
}
