//! Instance generators and independent reference solvers shared by the
//! integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use maxent::support::{FacetSystem, WeightedSupport};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

/// `−θ log θ − (1−θ) log(1−θ)`.
pub fn binary_entropy(t: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    f(t) + f(1.0 - t)
}

fn rank_i64(points: &[Vec<i64>]) -> usize {
    let base = &points[0];
    let mut rows: Vec<Vec<f64>> = points
        .iter()
        .skip(1)
        .map(|p| p.iter().zip(base).map(|(a, b)| (a - b) as f64).collect())
        .collect();
    let m = base.len();
    let mut r = 0;
    for c in 0..m {
        let Some(piv) = (r..rows.len()).max_by(|&i, &j| rows[i][c].abs().total_cmp(&rows[j][c].abs())) else {
            break;
        };
        if rows[piv][c].abs() < 1e-9 {
            continue;
        }
        rows.swap(r, piv);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                for k in 0..m {
                    rows[i][k] -= f * rows[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

/// A random full-dimensional subset of `{0,1}^m` with random log weights in
/// `[−spread, spread]`, together with its facet system.
pub fn random_01_polytope(rng: &mut ChaCha8Rng, m: usize, spread: f64) -> (WeightedSupport, FacetSystem) {
    let cube: Vec<Vec<i64>> = (0..1u32 << m).map(|b| (0..m).map(|i| ((b >> i) & 1) as i64).collect()).collect();
    loop {
        let mut pts = cube.clone();
        pts.shuffle(rng);
        let k = rng.random_range(m + 1..=cube.len());
        pts.truncate(k);
        if rank_i64(&pts) < m {
            continue;
        }
        let lw: Vec<f64> = (0..k).map(|_| rng.random_range(-spread..=spread)).collect();
        let w = WeightedSupport::new(pts, Some(lw)).unwrap();
        let f = FacetSystem::from_points(w.support()).unwrap();
        return (w, f);
    }
}

/// Points on the face cut out by a random set of facets.
pub fn random_face(rng: &mut ChaCha8Rng, w: &WeightedSupport, f: &FacetSystem) -> Vec<usize> {
    let m = w.dim();
    loop {
        let k = rng.random_range(0..=m);
        let mut ids: Vec<usize> = (0..f.len()).collect();
        ids.shuffle(rng);
        ids.truncate(k);
        let on: Vec<usize> = (0..w.len())
            .filter(|&j| {
                ids.iter().all(|&i| {
                    let v: i64 = f.rows()[i].iter().zip(&w.points()[j]).map(|(a, x)| a * x).sum();
                    (v as f64 - f.offsets()[i]).abs() < 1e-9
                })
            })
            .collect();
        if !on.is_empty() {
            return on;
        }
    }
}

/// A strictly positive Dirichlet(1) combination of the given points.
pub fn dirichlet_point(rng: &mut ChaCha8Rng, w: &WeightedSupport, idx: &[usize]) -> Vec<f64> {
    let g: Vec<f64> = idx.iter().map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
    let s: f64 = g.iter().sum();
    let mut theta = vec![0.0; w.dim()];
    for (&j, gj) in idx.iter().zip(&g) {
        for (t, &x) in theta.iter_mut().zip(&w.points()[j]) {
            *t += gj / s * x as f64;
        }
    }
    theta
}

fn lse(v: &[f64]) -> f64 {
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + v.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for k in c..n {
                a[i][k] -= f * a[c][k];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// `g(θ)` by damped Newton on the given face, where `θ` must lie in the
/// relative interior of the convex hull of the face points.
pub fn newton_g(points: &[Vec<i64>], log_w: &[f64], theta: &[f64]) -> f64 {
    let m = theta.len();
    let v: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(theta).map(|(&a, t)| a as f64 - t).collect())
        .collect();
    // coordinates in a basis of the span of the centred points
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in points.iter().skip(1) {
        let mut d: Vec<f64> = p.iter().zip(&points[0]).map(|(&a, &b)| (a - b) as f64).collect();
        for _ in 0..2 {
            for e in &basis {
                let c: f64 = d.iter().zip(e).map(|(x, y)| x * y).sum();
                d.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            basis.push(d.iter().map(|x| x / n).collect());
        }
    }
    let k = basis.len();
    let u: Vec<Vec<f64>> =
        v.iter().map(|x| basis.iter().map(|e| x.iter().zip(e).map(|(a, b)| a * b).sum()).collect()).collect();
    let f = |z: &[f64]| -> f64 {
        let e: Vec<f64> =
            u.iter().zip(log_w).map(|(x, lw)| lw + x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()).collect();
        lse(&e)
    };
    let mut z = vec![0.0; k];
    let _ = m;
    for _ in 0..200 {
        let e: Vec<f64> =
            u.iter().zip(log_w).map(|(x, lw)| lw + x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).collect();
        let l = lse(&e);
        let q: Vec<f64> = e.iter().map(|x| (x - l).exp()).collect();
        let mut g = vec![0.0; k];
        for (x, qa) in u.iter().zip(&q) {
            for i in 0..k {
                g[i] += qa * x[i];
            }
        }
        let mut h = vec![vec![0.0; k]; k];
        for (x, qa) in u.iter().zip(&q) {
            for i in 0..k {
                for j in 0..k {
                    h[i][j] += qa * (x[i] - g[i]) * (x[j] - g[j]);
                }
            }
        }
        if g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-14 {
            break;
        }
        let Some(step) = gauss_solve(h, g.clone()) else { break };
        let f0 = l;
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = z.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            if f(&cand) <= f0 || t < 1e-12 {
                z = cand;
                break;
            }
            t *= 0.5;
        }
    }
    f(&z)
}

/// Random connected multigraph-free graph on `n` vertices.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (order[i].min(order[j]), order[i].max(order[j]));
        edges.push((a, b));
    }
    let p: f64 = rng.random_range(0.1..0.6);
    for a in 0..n {
        for b in a + 1..n {
            if !edges.contains(&(a, b)) && rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    edges.shuffle(rng);
    edges
}

/// Least squares `min ‖A z − f‖` over the given columns of `A` by modified
/// Gram–Schmidt with one reorthogonalization pass.
fn column_least_squares(cols: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let p = cols.len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = vec![vec![0.0; p]; p];
    for (j, c) in cols.iter().enumerate() {
        let mut v = c.clone();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let d: f64 = v.iter().zip(qi).map(|(a, b)| a * b).sum();
                r[i][j] += d;
                v.iter_mut().zip(qi).for_each(|(a, b)| *a -= d * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r[j][j] = n;
        q.push(v.iter().map(|x| x / n.max(1e-300)).collect());
    }
    let qtf: Vec<f64> = q.iter().map(|qi| qi.iter().zip(f).map(|(a, b)| a * b).sum()).collect();
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| r[i][k] * z[k]).sum();
        z[i] = (qtf[i] - s) / r[i][i];
    }
    z
}

/// Lawson–Hanson active-set NNLS `min ‖E u − f‖, u ≥ 0` with `E` given by columns.
pub fn nnls(cols: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let n = cols.len();
    let residual = |u: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = f.iter().map(|x| -x).collect();
        for (c, &uj) in cols.iter().zip(u) {
            r.iter_mut().zip(c).for_each(|(a, b)| *a += uj * b);
        }
        r
    };
    let mut u = vec![0.0; n];
    let mut active = vec![false; n];
    for _ in 0..10 * n + 10 {
        let r = residual(&u);
        let w: Vec<f64> = cols.iter().map(|c| -c.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>()).collect();
        let Some(t) = (0..n).filter(|&j| !active[j] && w[j] > 1e-13).max_by(|&a, &b| w[a].total_cmp(&w[b])) else {
            break;
        };
        active[t] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&j| active[j]).collect();
            let sub: Vec<Vec<f64>> = idx.iter().map(|&j| cols[j].clone()).collect();
            let z = column_least_squares(&sub, f);
            if z.iter().all(|&v| v > 0.0) {
                u.iter_mut().for_each(|v| *v = 0.0);
                for (&j, &v) in idx.iter().zip(&z) {
                    u[j] = v;
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (&j, &zj) in idx.iter().zip(&z) {
                if zj <= 0.0 {
                    alpha = alpha.min(u[j] / (u[j] - zj));
                }
            }
            for (&j, &zj) in idx.iter().zip(&z) {
                u[j] += alpha * (zj - u[j]);
                if u[j] <= 1e-15 {
                    u[j] = 0.0;
                    active[j] = false;
                }
            }
        }
    }
    u
}

/// Shortest `x` with `⟨v_i, x⟩ ≥ 1` for all `i`, via the least-distance
/// programming reduction to NNLS. `None` when infeasible.
pub fn least_distance_separator(vectors: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = vectors[0].len();
    let cols: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().copied().chain([1.0]).collect()).collect();
    let mut f = vec![0.0; m + 1];
    f[m] = 1.0;
    let u = nnls(&cols, &f);
    let mut r: Vec<f64> = f.iter().map(|x| -x).collect();
    for (c, &uj) in cols.iter().zip(&u) {
        r.iter_mut().zip(c).for_each(|(a, b)| *a += uj * b);
    }
    if r.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-12 {
        return None;
    }
    Some((0..m).map(|j| -r[j] / r[m]).collect())
}

/// All spanning trees as edge-indicator vectors, by brute force over
/// `(n−1)`-subsets of edges.
pub fn brute_force_spanning_trees(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<i64>> {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let e = edges.len();
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..n - 1).collect();
    if e < n - 1 {
        return out;
    }
    loop {
        let mut parent: Vec<usize> = (0..n).collect();
        let acyclic = pick.iter().all(|&k| {
            let (a, b) = (find(&mut parent, edges[k].0), find(&mut parent, edges[k].1));
            parent[a] = b;
            a != b
        });
        if acyclic {
            let mut v = vec![0i64; e];
            pick.iter().for_each(|&k| v[k] = 1);
            out.push(v);
        }
        // next combination
        let k = n - 1;
        let Some(i) = (0..k).rev().find(|&i| pick[i] < e - k + i) else { break };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    out
}

/// `(log Σ e^{⟨α,y⟩}, marginal)` over indicator vectors.
pub fn explicit_eval(points: &[Vec<i64>], y: &[f64]) -> (f64, Vec<f64>) {
    let e: Vec<f64> = points.iter().map(|p| p.iter().zip(y).map(|(&a, b)| a as f64 * b).sum()).collect();
    let l = lse(&e);
    let mut g = vec![0.0; y.len()];
    for (p, ea) in points.iter().zip(&e) {
        let q = (ea - l).exp();
        g.iter_mut().zip(p).for_each(|(gi, &a)| *gi += q * a as f64);
    }
    (l, g)
}

/// `log det` of a symmetric positive semidefinite matrix; `−∞` when singular.
pub fn log_det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut acc = 0.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c].abs() < 1e-300 {
            return f64::NEG_INFINITY;
        }
        a.swap(c, piv);
        acc += a[c][c].abs().ln();
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for k in c..n {
                a[i][k] -= f * a[c][k];
            }
        }
    }
    acc
}

/// `log det(Σ_j p_j e^{t_j} v_j v_jᵀ) − Σ_j p_j t_j`.
pub fn bl_objective(vectors: &[Vec<f64>], p: &[f64], t: &[f64]) -> f64 {
    let n = vectors[0].len();
    let mut a = vec![vec![0.0; n]; n];
    for ((v, &pj), &tj) in vectors.iter().zip(p).zip(t) {
        let s = pj * tj.exp();
        for i in 0..n {
            for k in 0..n {
                a[i][k] += s * v[i] * v[k];
            }
        }
    }
    log_det(a) - p.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()
}

/// Minimizes [`bl_objective`] by exact coordinate descent: along one
/// coordinate `det` is affine in `x_j = e^{t_j}`, so each step is closed form.
pub fn bl_coordinate_descent(vectors: &[Vec<f64>], p: &[f64], max_sweeps: usize) -> f64 {
    let m = vectors.len();
    let mut t = vec![0.0; m];
    let mut best = bl_objective(vectors, p, &t);
    for _ in 0..max_sweeps {
        let before = best;
        for j in 0..m {
            if p[j] <= 0.0 || p[j] >= 1.0 {
                continue;
            }
            let det_at = |x: f64, t: &mut Vec<f64>| -> f64 {
                t[j] = x.ln();
                (bl_objective(vectors, p, t) + p.iter().zip(t.iter()).map(|(a, b)| a * b).sum::<f64>()).exp()
            };
            let saved = t[j];
            let d1 = det_at(1.0, &mut t);
            let d2 = det_at(2.0, &mut t);
            let (a1, a0) = (d2 - d1, 2.0 * d1 - d2);
            if a1 <= 0.0 || a0 <= 0.0 {
                t[j] = saved;
                continue;
            }
            t[j] = (p[j] * a0 / (a1 * (1.0 - p[j]))).ln();
            let v = bl_objective(vectors, p, &t);
            if v <= best {
                best = v;
            } else {
                t[j] = saved;
            }
        }
        if before - best < 1e-15 {
            break;
        }
    }
    best
}

/// `{0,1}^m` with random log weights in `[−spread, spread]` and its unit facets.
pub fn weighted_cube(rng: &mut ChaCha8Rng, m: usize, spread: f64) -> (WeightedSupport, FacetSystem) {
    let cube: Vec<Vec<i64>> = (0..1u32 << m).map(|b| (0..m).map(|i| ((b >> i) & 1) as i64).collect()).collect();
    let lw: Vec<f64> = cube.iter().map(|_| rng.random_range(-spread..=spread)).collect();
    let rows: Vec<Vec<i64>> = (0..2 * m)
        .map(|k| (0..m).map(|i| if i == k % m { if k < m { 1 } else { -1 } } else { 0 }).collect())
        .collect();
    let offsets: Vec<f64> = (0..2 * m).map(|k| if k < m { 1.0 } else { 0.0 }).collect();
    (WeightedSupport::new(cube, Some(lw)).unwrap(), FacetSystem::new(rows, offsets).unwrap())
}
