//! Experiment drivers: stability of max-entropy distributions under marginal
//! perturbations, and the boundary behaviour of empirical means.
//!
//! Every pair or trial chunk draws from its own RNG derived from the master
//! seed, so parallel and serial runs produce identical tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::dual::{radius_bound, solve_dual, SolveOptions};
use crate::error::{Error, Result};
use crate::oracle::CountingOracle;
use crate::par::{self, Execution};
use crate::support::{tv_distance, FacetSystem, WeightedSupport};

/// Derives an independent stream seed from a master seed and a position.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Violation,
    SolverFailure,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Violation => "violation",
            RowStatus::SolverFailure => "solver_failure",
        }
    }
}

/// One `(θ₁, θ₂)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub instance_id: String,
    pub pair: usize,
    pub eps: f64,
    /// `‖θ₁ − θ₂‖₁`.
    pub theta_dist: f64,
    pub theta_dist_l2: f64,
    /// `‖q^{θ₁} − q^{θ₂}‖₁`.
    pub tv: f64,
    /// `√(R(ε)·ε)`.
    pub bound: f64,
    pub margin: f64,
    pub iters1: usize,
    pub iters2: usize,
    pub status: RowStatus,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRun {
    pub instance_id: String,
    pub seed: u64,
    pub rows: Vec<StabilityRow>,
    pub violations: usize,
    pub failures: usize,
}

impl StabilityRun {
    /// Least-squares slope of `log median tv` against `log ε`.
    pub fn tv_exponent(&self) -> Option<f64> {
        let mut eps: Vec<f64> = self.rows.iter().map(|r| r.eps).collect();
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        let pts: Vec<(f64, f64)> = eps
            .iter()
            .filter_map(|&e| {
                let mut tv: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.eps == e && r.status != RowStatus::SolverFailure && r.tv > 0.0)
                    .map(|r| r.tv)
                    .collect();
                if tv.is_empty() {
                    return None;
                }
                tv.sort_by(f64::total_cmp);
                Some((e.ln(), tv[tv.len() / 2].ln()))
            })
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

#[derive(Clone, Debug)]
pub struct StabilityConfig {
    pub num_pairs: usize,
    pub eps_grid: Vec<f64>,
    pub seed: u64,
    pub exec: Execution,
    pub opts: SolveOptions,
}

/// A Dirichlet(1) mixture of up to `m + 1` random support points.
fn sample_marginal(rng: &mut ChaCha8Rng, w: &WeightedSupport) -> Vec<f64> {
    let k = (w.dim() + 1).min(w.len());
    let idx: Vec<usize> = rand::seq::index::sample(rng, w.len(), k).into_vec();
    let g: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = g.iter().sum();
    let mut theta = vec![0.0; w.dim()];
    for (&j, gj) in idx.iter().zip(&g) {
        for (t, &x) in theta.iter_mut().zip(&w.points()[j]) {
            *t += gj / s * x as f64;
        }
    }
    theta
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Measures `‖q^{θ₁} − q^{θ₂}‖₁` against `√(R(ε)·ε)` over random pairs at
/// `ℓ1` distance `ε`, for each `ε` in the grid.
pub fn stability_experiment(
    instance_id: &str,
    support: &WeightedSupport,
    facets: Option<&FacetSystem>,
    cfg: &StabilityConfig,
) -> Result<StabilityRun> {
    if cfg.eps_grid.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::validation("perturbation sizes must lie in (0, 1)"));
    }
    let unary = match facets {
        Some(f) => f.unary_complexity(),
        None => match cfg.opts.unary_complexity {
            Some(m) => m,
            None => FacetSystem::from_points(support.support())?.unary_complexity(),
        },
    };
    let oracle = CountingOracle::Explicit(support.clone());
    let n = cfg.num_pairs;
    let mut rows = Vec::with_capacity(n * cfg.eps_grid.len());
    for (ei, &eps) in cfg.eps_grid.iter().enumerate() {
        let r = radius_bound(
            support.dim(),
            unary,
            support.bit_complexity(),
            support.support().log_cardinality(),
            eps,
        )?
        .radius;
        let bound = (r * eps).sqrt();
        let tol = (1e-2 * eps).min(1e-8);
        let mut opts = cfg.opts.clone();
        opts.marginal_tol = opts.marginal_tol.or(Some(1e-10));
        let batch = par::map_indexed(cfg.exec, n, |k| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, ei as u64, k as u64));
            let theta1 = sample_marginal(&mut rng, support);
            let mut theta2 = theta1.clone();
            for _ in 0..16 {
                let phi = sample_marginal(&mut rng, support);
                let d = l1(&phi, &theta1);
                if d >= eps {
                    let t = eps / d;
                    theta2 = theta1.iter().zip(&phi).map(|(a, b)| a + t * (b - a)).collect();
                    break;
                }
            }
            let s1 = solve_dual(&oracle, &theta1, tol, facets, &opts);
            let s2 = solve_dual(&oracle, &theta2, tol, facets, &opts);
            let (tv, it1, it2, status) = match (s1, s2) {
                (Ok(a), Ok(b)) => {
                    let tv = tv_distance(a.q.as_ref().expect("explicit"), b.q.as_ref().expect("explicit"))
                        .unwrap_or(f64::NAN);
                    let status = if tv <= bound { RowStatus::Ok } else { RowStatus::Violation };
                    (tv, a.iterations, b.iterations, status)
                }
                (a, b) => {
                    for e in [a.err(), b.err()].into_iter().flatten() {
                        log::warn!("stability pair {k} at eps {eps:e}: {e}");
                    }
                    (f64::NAN, 0, 0, RowStatus::SolverFailure)
                }
            };
            StabilityRow {
                instance_id: instance_id.to_string(),
                pair: k,
                eps,
                theta_dist: l1(&theta1, &theta2),
                theta_dist_l2: l2(&theta1, &theta2),
                tv,
                bound,
                margin: bound - tv,
                iters1: it1,
                iters2: it2,
                status,
                theta1,
                theta2,
            }
        });
        rows.extend(batch);
    }
    let violations = rows.iter().filter(|r| r.status == RowStatus::Violation).count();
    let failures = rows.iter().filter(|r| r.status == RowStatus::SolverFailure).count();
    Ok(StabilityRun { instance_id: instance_id.to_string(), seed: cfg.seed, rows, violations, failures })
}

/// Empirical means of uniform samples from `({0}×{0,1}^{m−1}) ∪ {e₁}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRun {
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Trials whose mean avoids both facets `x₁ = 0` and `x₁ = 1`.
    pub off_facet_pair: usize,
    pub off_facet_pair_fraction: f64,
    /// `1 − (1 − 1/(2^{m−1}+1))^N`.
    pub closed_form: f64,
    pub closed_form_std_error: f64,
    pub closed_form_z: f64,
    /// Trials whose mean lies in the interior of `P`.
    pub off_boundary: usize,
    pub off_boundary_fraction: f64,
    pub off_boundary_exact: f64,
    pub off_boundary_std_error: f64,
    pub off_boundary_z: f64,
}

impl BoundaryRun {
    /// Whether both fractions lie within three binomial standard errors.
    pub fn within_three_sigma(&self) -> bool {
        self.closed_form_z.abs() <= 3.0 && self.off_boundary_z.abs() <= 3.0
    }
}

/// `P(mean ∉ ∂P)` exactly: `k` copies of `e₁` with `1 ≤ k ≤ N−2`, and every
/// other coordinate neither constant 0 nor constant 1 over the remaining samples.
pub fn off_boundary_probability(m: usize, n: usize) -> f64 {
    let p = 1.0 / ((2f64).powi(m as i32 - 1) + 1.0);
    (1..n.saturating_sub(1))
        .map(|k| {
            let rest = (n - k) as i32;
            (crate::numeric::log_binomial(n as u64, k as u64)).exp()
                * p.powi(k as i32)
                * (1.0 - p).powi(rest)
                * (1.0 - (2f64).powi(1 - rest)).powi(m as i32 - 1)
        })
        .sum()
}

const BOUNDARY_CHUNK: usize = 4096;

pub fn boundary_demo(m: usize, n: usize, trials: usize, seed: u64, exec: Execution) -> Result<BoundaryRun> {
    if !(2..=62).contains(&m) {
        return Err(Error::validation("boundary demo needs 2 ≤ m ≤ 62"));
    }
    if n == 0 || (m < 63 && n as u128 > 1u128 << m) {
        return Err(Error::validation("boundary demo needs 1 ≤ N ≤ 2^m"));
    }
    if trials == 0 {
        return Err(Error::validation("boundary demo needs at least one trial"));
    }
    let cube = 1u64 << (m - 1);
    let counts = par::map_chunks(exec, trials, BOUNDARY_CHUNK, |range| {
        let chunk = (range.start / BOUNDARY_CHUNK) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, chunk, 0));
        let mut facet = 0usize;
        let mut interior = 0usize;
        let mut ones = vec![0usize; m - 1];
        for _ in range {
            ones.iter_mut().for_each(|c| *c = 0);
            let mut k = 0usize;
            for _ in 0..n {
                let idx = rng.random_range(0..=cube);
                if idx == cube {
                    k += 1;
                } else {
                    for (b, c) in ones.iter_mut().enumerate() {
                        *c += ((idx >> b) & 1) as usize;
                    }
                }
            }
            if k > 0 && k < n {
                facet += 1;
                // 0 < x_i < 1 − x₁ in counts: 0 < c_i < N − k
                if ones.iter().all(|&c| c > 0 && c < n - k) {
                    interior += 1;
                }
            }
        }
        (facet, interior)
    });
    let (facet, interior) = counts.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let t = trials as f64;
    let p = 1.0 / (cube as f64 + 1.0);
    let closed_form = 1.0 - (1.0 - p).powi(n as i32);
    let se_c = (closed_form * (1.0 - closed_form) / t).sqrt();
    let frac_c = facet as f64 / t;
    let exact_b = off_boundary_probability(m, n);
    let se_b = (exact_b * (1.0 - exact_b) / t).sqrt();
    let frac_b = interior as f64 / t;
    let z = |f: f64, e: f64, se: f64| if se > 0.0 { (f - e) / se } else if f == e { 0.0 } else { f64::INFINITY };
    Ok(BoundaryRun {
        m,
        n,
        trials,
        seed,
        off_facet_pair: facet,
        off_facet_pair_fraction: frac_c,
        closed_form,
        closed_form_std_error: se_c,
        closed_form_z: z(frac_c, closed_form, se_c),
        off_boundary: interior,
        off_boundary_fraction: frac_b,
        off_boundary_exact: exact_b,
        off_boundary_std_error: se_b,
        off_boundary_z: z(frac_b, exact_b, se_b),
    })
}
