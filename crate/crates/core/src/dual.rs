//! Ball-constrained dual solves.
//!
//! `h_θ(y) = log Σ_α p_α e^{⟨α−θ,y⟩}` is minimized over `B(0, R)` by projected
//! gradient descent with optional momentum. Every returned point carries a
//! certificate bounding `h_θ(y) − min_{B(0,R)} h_θ` from three sources:
//! the gradient (`2R‖∇h‖`), linearization lower bounds collected along the
//! run, and (explicit supports) a primal feasible distribution with marginal
//! exactly `θ`, whose objective is a lower bound by weak duality.
//!
//! The ball uses the radius for accuracy `ε/2` and the run stops once the
//! certificate drops to `ε/2`, so `h_θ(y) ≤ g(θ) + ε` overall.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::lp;
use crate::minnorm;
use crate::numeric::{self, axpy, dot, log_sum_exp_slice, norm2, scale, softmax, sub, to_f64, Lu};
use crate::oracle::CountingOracle;
use crate::support::{self, FacetSystem, PrimalDistribution, WeightedSupport, FEASIBILITY_TOL};

/// Radius of a ball guaranteed to contain an `ε`-optimal dual point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusBound {
    pub delta: f64,
    pub radius: f64,
    pub m: usize,
    pub unary_complexity: i64,
    pub bit_complexity: f64,
    pub log_cardinality: f64,
    pub epsilon: f64,
}

/// `Δ = log|F| + 2L_p + log(2m) + log(1/ε)` and `R = m^{3/2} M Δ`.
pub fn radius_bound(
    m: usize,
    unary_complexity: i64,
    bit_complexity: f64,
    log_cardinality: f64,
    epsilon: f64,
) -> Result<RadiusBound> {
    if m == 0 || unary_complexity < 1 {
        return Err(Error::validation("radius bound needs m ≥ 1 and M ≥ 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::validation(format!("accuracy {epsilon} must lie in (0, 1)")));
    }
    if !(bit_complexity >= 0.0) || !(log_cardinality >= 0.0) {
        return Err(Error::validation("L_p and log|F| must be nonnegative"));
    }
    let delta = log_cardinality + 2.0 * bit_complexity + (2.0 * m as f64).ln() - epsilon.ln();
    let radius = (m as f64).powf(1.5) * unary_complexity as f64 * delta;
    Ok(RadiusBound {
        delta,
        radius,
        m,
        unary_complexity,
        bit_complexity,
        log_cardinality,
        epsilon,
    })
}

/// `h_θ(y) = log g_p(e^y) − ⟨θ, y⟩`.
pub fn h_value(oracle: &CountingOracle, theta: &[f64], y: &[f64]) -> Result<f64> {
    ensure_dim(oracle.dim(), theta.len())?;
    Ok(oracle.log_eval(y)? - dot(theta, y))
}

/// `∇_y h_θ(y) = θ^y − θ`.
pub fn h_gradient(oracle: &CountingOracle, theta: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    ensure_dim(oracle.dim(), theta.len())?;
    Ok(sub(&oracle.log_gradient(y)?, theta))
}

/// `q^y_α ∝ p_α e^{⟨α,y⟩}`.
pub fn primal_from_dual(support: &WeightedSupport, y: &[f64]) -> PrimalDistribution {
    PrimalDistribution::from_log_weights(&support.exponents(y))
}

/// `|KL(q, q^y) − (h_θ(y) − Σ q_α log(p_α/q_α))|` for a distribution `q` with marginal `θ`.
pub fn kl_identity_check(
    q: &PrimalDistribution,
    support: &WeightedSupport,
    theta: &[f64],
    y: &[f64],
) -> Result<f64> {
    let qy = primal_from_dual(support, y);
    let kl = support::kl_divergence(q, &qy)?.value;
    let h = support.log_partition(y) - dot(theta, y);
    let ent = support::entropy_objective(q, support)?;
    Ok((kl - (h - ent)).abs())
}

/// The minimal face of `conv(F)` containing `θ`, with the points on it.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceRestriction {
    /// Indices (into the original support) of the points on the face.
    pub indices: Vec<usize>,
    pub support: WeightedSupport,
    /// A distribution on the face points, strictly positive, with marginal `θ`.
    pub interior: Vec<f64>,
    /// Orthonormal basis of the direction space of the face.
    pub basis: Vec<Vec<f64>>,
    pub is_identity: bool,
}

impl FaceRestriction {
    /// Orthogonal projection onto the direction space of the face.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        numeric::project_onto(&self.basis, v)
    }
}

/// Restricts `F` to the minimal face containing `θ`: first by tight facets
/// (exact on integer points), then by LP until `θ` is in the relative interior.
pub fn face_restrict(
    theta: &[f64],
    facets: Option<&FacetSystem>,
    support: &WeightedSupport,
    tol: f64,
) -> Result<FaceRestriction> {
    ensure_dim(support.dim(), theta.len())?;
    let mut candidates: Vec<usize> = (0..support.len()).collect();
    if let Some(f) = facets {
        let tight = support::tight_facets(theta, f, tol)?;
        candidates.retain(|&i| {
            let p = &support.points()[i];
            tight.iter().all(|&t| {
                let v: i64 = f.rows()[t].iter().zip(p).map(|(a, x)| a * x).sum();
                (v as f64 - f.offsets()[t]).abs() <= 1e-9
            })
        });
        if candidates.is_empty() {
            return Err(Error::domain("no support point lies on the face containing θ"));
        }
    }
    let pts: Vec<Vec<f64>> = candidates.iter().map(|&i| to_f64(&support.points()[i])).collect();
    let mut face = lp::minimal_face(&pts, theta, tol.max(1e-12));
    if face.is_none() && candidates.len() < support.len() {
        // θ within `tol` of a facet yet strictly inside: drop the facet pruning
        candidates = (0..support.len()).collect();
        face = lp::minimal_face(&support.support().points_f64(), theta, tol.max(1e-12));
    }
    let face = face.ok_or_else(|| Error::domain("θ lies outside the convex hull of the support"))?;
    let indices: Vec<usize> = face.indices.iter().map(|&k| candidates[k]).collect();
    let restricted = support.restrict(&indices)?;
    let basis = restricted.support().direction_basis();
    Ok(FaceRestriction {
        is_identity: indices.len() == support.len(),
        indices,
        support: restricted,
        interior: face.weights,
        basis,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// `h_θ(y) ≤ g(θ) + ε`, hence `KL(q^θ, q^y) ≤ ε`.
    Kl,
    /// Only `‖θ^y − θ‖` is controlled.
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Certificate,
    GradientNorm,
    Vertex,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub accelerate: bool,
    pub feasibility_tol: f64,
    /// Stop once `‖∇h‖` falls below this value (marginal guarantee). Defaults to
    /// `ε/(4d)` for oracle-only supports and to nothing for explicit ones.
    pub gradient_tol: Option<f64>,
    pub face_restriction: bool,
    pub record_trace: bool,
    /// Unary facet complexity to use when no facet system is given.
    pub unary_complexity: Option<i64>,
    /// Iterations between primal certificate evaluations.
    pub check_every: usize,
    /// When `θ` is interior to the support hull, keep iterating after the gap is
    /// certified until `‖∇h‖` falls below this, within a bounded extra budget.
    pub marginal_tol: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 500_000,
            accelerate: true,
            feasibility_tol: FEASIBILITY_TOL,
            gradient_tol: None,
            face_restriction: true,
            record_trace: false,
            unary_complexity: None,
            check_every: 8,
            marginal_tol: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub y: Vec<f64>,
    pub h_value: f64,
    pub gradient_norm: f64,
    pub gap_certificate: f64,
    /// Best lower bound on `min_{B(0,R)} h_θ` seen.
    pub lower_bound: f64,
    /// `q^y` over the explicit support.
    pub q: Option<PrimalDistribution>,
    pub theta_y: Vec<f64>,
    pub iterations: usize,
    pub radius_used: f64,
    pub radius: RadiusBound,
    pub solver: String,
    pub guarantee: Guarantee,
    pub stop_reason: StopReason,
    /// Indices of the support points on the minimal face containing `θ`.
    pub face: Option<Vec<usize>>,
    /// A distribution with marginal `θ` certifying the lower bound.
    pub feasible_primal: Option<PrimalDistribution>,
    pub trace: Vec<f64>,
}

/// Objective `y ↦ h_θ(y)` over either an explicit support or an oracle.
enum Objective<'a> {
    Explicit(&'a WeightedSupport),
    Oracle(&'a CountingOracle),
}

impl Objective<'_> {
    fn eval(&self, theta: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Objective::Explicit(w) => {
                let (q, lse) = softmax(&w.exponents(y));
                let mut g = scale(theta, -1.0);
                for (p, qa) in w.points().iter().zip(q) {
                    for (gi, &v) in g.iter_mut().zip(p) {
                        *gi += qa * v as f64;
                    }
                }
                Ok((lse - dot(theta, y), g))
            }
            Objective::Oracle(o) => {
                let (l, t) = o.eval_with_gradient(y)?;
                Ok((l - dot(theta, y), sub(&t, theta)))
            }
        }
    }
}

/// Builds a distribution on the face with marginal `θ` from `q^y`, and the
/// resulting lower bound on `h_θ` over the ball.
struct PrimalCertifier<'a> {
    face: &'a FaceRestriction,
    theta: &'a [f64],
    radius: f64,
}

impl PrimalCertifier<'_> {
    fn certify(&self, y: &[f64]) -> Option<(f64, Vec<f64>)> {
        let w = &self.face.support;
        let pts: Vec<Vec<f64>> = w.points().iter().map(|p| to_f64(p)).collect();
        let k = self.face.basis.len();
        let mut q = softmax(&w.exponents(y)).0;
        if k > 0 {
            for _ in 0..2 {
                let mean = weighted_mean(&pts, &q);
                let r = sub(self.theta, &mean);
                let rhs = numeric::coordinates(&self.face.basis, &r);
                let coords: Vec<Vec<f64>> =
                    pts.iter().map(|p| numeric::coordinates(&self.face.basis, &sub(p, &mean))).collect();
                let mut cov = vec![vec![0.0; k]; k];
                for (u, &qa) in coords.iter().zip(&q) {
                    for a in 0..k {
                        for b in 0..k {
                            cov[a][b] += qa * u[a] * u[b];
                        }
                    }
                }
                let Ok(lu) = Lu::factor(&cov, 1e-300) else { break };
                let c = lu.solve(&rhs);
                if c.iter().any(|v| !v.is_finite()) {
                    break;
                }
                for (qa, u) in q.iter_mut().zip(&coords) {
                    *qa *= 1.0 + dot(u, &c);
                }
                if q.iter().any(|&v| v < 0.0) {
                    let t = q
                        .iter()
                        .zip(&self.face.interior)
                        .filter(|(&a, _)| a < 0.0)
                        .map(|(&a, &b)| -a / (b - a))
                        .fold(0.0f64, f64::max)
                        .min(1.0);
                    for (qa, &b) in q.iter_mut().zip(&self.face.interior) {
                        *qa = ((1.0 - t) * *qa + t * b).max(0.0);
                    }
                    break;
                }
            }
        }
        let s: f64 = q.iter().sum();
        if !(s > 0.0) {
            return None;
        }
        q.iter_mut().for_each(|v| *v /= s);
        let eta = norm2(&sub(&weighted_mean(&pts, &q), self.theta));
        let ent: f64 = q
            .iter()
            .zip(w.log_weights())
            .filter(|(&a, _)| a > 0.0)
            .map(|(&a, &lw)| a * (lw - a.ln()))
            .sum();
        let lb = ent - self.radius * eta;
        lb.is_finite().then_some((lb, q))
    }
}

fn weighted_mean(points: &[Vec<f64>], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; points[0].len()];
    for (p, &qa) in points.iter().zip(q) {
        axpy(&mut out, qa, p);
    }
    out
}

fn project_ball(y: &mut [f64], radius: f64) {
    let n = norm2(y);
    if n > radius {
        let s = radius / n;
        y.iter_mut().for_each(|v| *v *= s);
    }
}

struct RunOutcome {
    y: Vec<f64>,
    h: f64,
    grad: Vec<f64>,
    cert: f64,
    lower_bound: f64,
    primal: Option<Vec<f64>>,
    iterations: usize,
    stop: Option<StopReason>,
    trace: Vec<f64>,
}

/// Extra iterations spent chasing `marginal_tol` once the gap is certified.
const MARGINAL_GRACE: usize = 20_000;

struct RunConfig<'a> {
    theta: &'a [f64],
    radius: f64,
    step: f64,
    target: f64,
    gradient_tol: Option<f64>,
    marginal_tol: Option<f64>,
    max_iters: usize,
    accelerate: bool,
    check_every: usize,
    record_trace: bool,
    certifier: Option<&'a PrimalCertifier<'a>>,
}

/// Projected gradient descent with monotone momentum restarts.
fn run_descent(obj: &Objective, cfg: &RunConfig, start: Vec<f64>) -> Result<RunOutcome> {
    let theta = cfg.theta;
    let r = cfg.radius;
    let mut x = start;
    project_ball(&mut x, r);
    let (mut fx, mut gx) = obj.eval(theta, &x)?;
    let mut lower = f64::NEG_INFINITY;
    let mut primal: Option<Vec<f64>> = None;
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut trace = Vec::new();
    let mut it = 0usize;
    let mut since_primal = usize::MAX / 2;
    let mut certified_at: Option<usize> = None;
    loop {
        if cfg.record_trace {
            trace.push(fx);
        }
        let gnorm = norm2(&gx);
        lower = lower.max(fx - dot(&gx, &x) - r * gnorm);
        let mut cert = (fx - lower).min(2.0 * r * gnorm).max(0.0);
        if let Some(c) = cfg.certifier {
            since_primal += 1;
            if cert > cfg.target && (since_primal >= cfg.check_every || cert < 64.0 * cfg.target) {
                since_primal = 0;
                if let Some((lb, q)) = c.certify(&x) {
                    if lb > lower {
                        lower = lb;
                        primal = Some(q);
                    } else if primal.is_none() {
                        primal = Some(q);
                    }
                    cert = cert.min((fx - lower).max(0.0));
                }
            }
        }
        if cert <= cfg.target && certified_at.is_none() {
            certified_at = Some(it);
        }
        // the marginal target is best effort: near the boundary of the hull the
        // gradient can shrink far more slowly than the gap
        let marginal_done = cfg.marginal_tol.is_none_or(|tol| gnorm <= tol)
            || certified_at.is_some_and(|c| it - c >= MARGINAL_GRACE.max(c));
        let stop = if cert <= cfg.target && marginal_done {
            Some(StopReason::Certificate)
        } else if cfg.gradient_tol.is_some_and(|tol| gnorm <= tol) {
            Some(StopReason::GradientNorm)
        } else {
            None
        };
        if stop.is_some() || it >= cfg.max_iters {
            if let (Some(c), None) = (cfg.certifier, &primal) {
                primal = c.certify(&x).map(|(_, q)| q);
            }
            return Ok(RunOutcome {
                y: x,
                h: fx,
                grad: gx,
                cert,
                lower_bound: lower,
                primal,
                iterations: it,
                stop,
                trace,
            });
        }
        it += 1;
        let (fz, gz) = if cfg.accelerate && t > 1.0 { obj.eval(theta, &z)? } else { (fx, gx.clone()) };
        if cfg.accelerate && t > 1.0 {
            lower = lower.max(fz - dot(&gz, &z) - r * norm2(&gz));
        }
        let base = if cfg.accelerate && t > 1.0 { &z } else { &x };
        let mut xn = base.clone();
        axpy(&mut xn, -cfg.step, &gz);
        project_ball(&mut xn, r);
        let (mut fn_, mut gn) = obj.eval(theta, &xn)?;
        if fn_ > fx {
            // restart from a plain projected step
            t = 1.0;
            xn = x.clone();
            axpy(&mut xn, -cfg.step, &gx);
            project_ball(&mut xn, r);
            // a plain 1/(2L) step cannot increase h beyond rounding
            let e = obj.eval(theta, &xn)?;
            fn_ = e.0;
            gn = e.1;
        }
        if cfg.accelerate {
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / tn;
            z = xn.clone();
            axpy(&mut z, beta, &sub(&xn, &x));
            t = tn;
        }
        x = xn;
        fx = fn_;
        gx = gn;
    }
}

/// Per-solve problem constants.
struct Setup {
    radius: RadiusBound,
    diameter: f64,
}

fn setup(
    oracle: &CountingOracle,
    epsilon: f64,
    facets: Option<&FacetSystem>,
    opts: &SolveOptions,
) -> Result<Setup> {
    let m = oracle.dim();
    let unary = match (facets, opts.unary_complexity, oracle.known_unary_complexity()) {
        (Some(f), _, _) => f.unary_complexity(),
        (None, Some(mm), _) => mm,
        (None, None, Some(mm)) => mm,
        (None, None, None) => {
            let w = oracle.explicit().expect("only explicit oracles lack a structural M");
            FacetSystem::from_points(w.support())
                .map_err(|e| {
                    Error::validation(format!(
                        "unary facet complexity unknown ({e}); supply facets or declare it"
                    ))
                })?
                .unary_complexity()
        }
    };
    let radius = radius_bound(
        m,
        unary,
        oracle.bit_complexity_bound(),
        oracle.log_cardinality_bound(),
        epsilon / 2.0,
    )?;
    Ok(Setup { radius, diameter: oracle.diameter_bound() })
}

fn smoothness_step(diameter: f64) -> f64 {
    // L = 2d², step 1/(2L)
    let l = 2.0 * diameter.max(1e-12).powi(2);
    1.0 / (2.0 * l)
}

fn iteration_cap(opts: &SolveOptions, diameter: f64, radius: f64, epsilon: f64) -> usize {
    let l = 2.0 * diameter.max(1e-12).powi(2);
    let cap = (8.0 * l * radius * radius / epsilon).ceil() + 10.0;
    if cap >= opts.max_iters as f64 {
        opts.max_iters
    } else {
        cap as usize
    }
}

/// Solves the dual to accuracy `ε` inside the ball of radius `R(ε/2)`.
pub fn solve_dual(
    oracle: &CountingOracle,
    theta: &[f64],
    epsilon: f64,
    facets: Option<&FacetSystem>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    ensure_dim(oracle.dim(), theta.len())?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("θ has a non-finite coordinate"));
    }
    if let Some(f) = facets {
        if let Some(d) = f.dim() {
            ensure_dim(oracle.dim(), d)?;
        }
        if !f.contains(theta, opts.feasibility_tol) {
            return Err(Error::domain("θ violates the facet system"));
        }
    }
    let st = setup(oracle, epsilon, facets, opts)?;
    match oracle.explicit() {
        Some(w) => solve_explicit(w, theta, epsilon, facets, opts, &st),
        None => solve_oracle(oracle, theta, epsilon, opts, &st),
    }
}

fn solve_oracle(
    oracle: &CountingOracle,
    theta: &[f64],
    epsilon: f64,
    opts: &SolveOptions,
    st: &Setup,
) -> Result<SolveReport> {
    if oracle.contains_marginal(theta, opts.feasibility_tol.max(1e-9)) == Some(false) {
        return Err(Error::domain("θ lies outside the marginal polytope"));
    }
    let r = st.radius.radius;
    let grad_tol = opts.gradient_tol.unwrap_or(epsilon / (4.0 * st.diameter.max(1e-12)));
    let cfg = RunConfig {
        theta,
        radius: r,
        step: smoothness_step(st.diameter),
        target: epsilon / 2.0,
        gradient_tol: Some(grad_tol),
        marginal_tol: None,
        max_iters: iteration_cap(opts, st.diameter, r, epsilon),
        accelerate: opts.accelerate,
        check_every: opts.check_every,
        record_trace: opts.record_trace,
        certifier: None,
    };
    let obj = Objective::Oracle(oracle);
    let out = run_descent(&obj, &cfg, vec![0.0; theta.len()])?;
    let theta_y = numeric::add(&out.grad, theta);
    finish(out, theta_y, None, None, st, r)
}

fn solve_explicit(
    w: &WeightedSupport,
    theta: &[f64],
    epsilon: f64,
    facets: Option<&FacetSystem>,
    opts: &SolveOptions,
    st: &Setup,
) -> Result<SolveReport> {
    let r = st.radius.radius;
    let tol = opts.feasibility_tol;
    let face = if opts.face_restriction {
        face_restrict(theta, facets, w, tol)?
    } else {
        let pts = w.support().points_f64();
        let weights = lp::hull_weights(&pts, theta, tol.max(1e-12))
            .ok_or_else(|| Error::domain("θ lies outside the convex hull of the support"))?;
        FaceRestriction {
            indices: (0..w.len()).collect(),
            support: w.clone(),
            interior: weights,
            basis: w.support().direction_basis(),
            is_identity: true,
        }
    };
    let step = smoothness_step(st.diameter);
    let cap = iteration_cap(opts, st.diameter, r, epsilon);
    let full_obj = Objective::Explicit(w);
    let certifier = PrimalCertifier { face: &face, theta, radius: r };

    if face.is_identity {
        let cfg = RunConfig {
            theta,
            radius: r,
            step,
            target: epsilon / 2.0,
            gradient_tol: opts.gradient_tol,
            marginal_tol: opts.marginal_tol,
            max_iters: if opts.marginal_tol.is_some() { opts.max_iters } else { cap },
            accelerate: opts.accelerate,
            check_every: opts.check_every,
            record_trace: opts.record_trace,
            certifier: Some(&certifier),
        };
        let out = run_descent(&full_obj, &cfg, vec![0.0; theta.len()])?;
        let q = primal_from_dual(w, &out.y);
        let theta_y = numeric::add(&out.grad, theta);
        let primal = out.primal.clone().map(|p| lift_distribution(&face, w.len(), p));
        return finish(out, theta_y, Some(q), primal, st, r).map(|mut rep| {
            rep.face = Some(face.indices.clone());
            rep
        });
    }

    // θ on a proper face: solve on the face, then push off-face mass down
    let (y_face, face_iters, mut trace) = if face.indices.len() == 1 {
        (vec![0.0; theta.len()], 0usize, Vec::new())
    } else {
        let face_obj = Objective::Explicit(&face.support);
        let cfg = RunConfig {
            theta,
            radius: r,
            step,
            target: epsilon / 4.0,
            gradient_tol: None,
            marginal_tol: None,
            max_iters: cap,
            accelerate: opts.accelerate,
            check_every: opts.check_every,
            record_trace: opts.record_trace,
            certifier: Some(&certifier),
        };
        let out = run_descent(&face_obj, &cfg, vec![0.0; theta.len()])?;
        (out.y, out.iterations, out.trace)
    };
    let y0 = lift_off_face(w, &face, theta, &y_face, epsilon, r)?;
    let cfg = RunConfig {
        theta,
        radius: r,
        step,
        target: epsilon / 2.0,
        gradient_tol: opts.gradient_tol,
        marginal_tol: None,
        max_iters: cap.saturating_sub(face_iters),
        accelerate: opts.accelerate,
        check_every: opts.check_every,
        record_trace: opts.record_trace,
        certifier: Some(&certifier),
    };
    let mut out = run_descent(&full_obj, &cfg, y0)?;
    out.iterations += face_iters;
    trace.append(&mut out.trace);
    out.trace = trace;
    if face.indices.len() == 1 && out.stop == Some(StopReason::Certificate) && out.iterations == 0 {
        out.stop = Some(StopReason::Vertex);
    }
    let q = primal_from_dual(w, &out.y);
    let theta_y = numeric::add(&out.grad, theta);
    let primal = out.primal.clone().map(|p| lift_distribution(&face, w.len(), p));
    finish(out, theta_y, Some(q), primal, st, r).map(|mut rep| {
        rep.face = Some(face.indices.clone());
        rep
    })
}

fn lift_distribution(face: &FaceRestriction, n: usize, q: Vec<f64>) -> PrimalDistribution {
    let mut full = vec![0.0; n];
    for (&i, v) in face.indices.iter().zip(q) {
        full[i] = v;
    }
    PrimalDistribution { probabilities: full }
}

/// Adds `s·u` to the face solution, where `⟨α − θ, u⟩ = 0` on the face and
/// `≤ −1` off it, with `s` chosen so the off-face mass is at most `ε/8`.
fn lift_off_face(
    w: &WeightedSupport,
    face: &FaceRestriction,
    theta: &[f64],
    y_face: &[f64],
    epsilon: f64,
    radius: f64,
) -> Result<Vec<f64>> {
    let on: std::collections::HashSet<usize> = face.indices.iter().copied().collect();
    let off: Vec<usize> = (0..w.len()).filter(|i| !on.contains(i)).collect();
    let perp = |v: &[f64]| sub(v, &face.project(v));
    let vecs: Vec<Vec<f64>> =
        off.iter().map(|&i| perp(&sub(&to_f64(&w.points()[i]), theta))).collect();
    let sep = minnorm::min_norm_point(&vecs).map_err(|e| {
        Error::Integrity(format!("no separating direction for the face containing θ: {e}"))
    })?;
    let u = sep.y_star;
    let expo = w.exponents(y_face);
    let ty = dot(theta, y_face);
    let off_l = log_sum_exp_slice(&off.iter().map(|&i| expo[i] - ty).collect::<Vec<_>>());
    let on_l = log_sum_exp_slice(&face.indices.iter().map(|&i| expo[i] - ty).collect::<Vec<_>>());
    let s = (off_l - on_l + (8.0 / epsilon).ln()).max(0.0);
    let mut y = y_face.to_vec();
    axpy(&mut y, s, &u);
    project_ball(&mut y, radius);
    Ok(y)
}

fn finish(
    out: RunOutcome,
    theta_y: Vec<f64>,
    q: Option<PrimalDistribution>,
    primal: Option<PrimalDistribution>,
    st: &Setup,
    r: f64,
) -> Result<SolveReport> {
    let guarantee = match out.stop {
        Some(StopReason::GradientNorm) => Guarantee::Marginal,
        _ => Guarantee::Kl,
    };
    let report = SolveReport {
        gradient_norm: norm2(&out.grad),
        y: out.y,
        h_value: out.h,
        gap_certificate: out.cert,
        lower_bound: out.lower_bound,
        q,
        theta_y,
        iterations: out.iterations,
        radius_used: r,
        radius: st.radius.clone(),
        solver: "projected_gradient".to_string(),
        guarantee,
        stop_reason: out.stop.unwrap_or(StopReason::Certificate),
        face: None,
        feasible_primal: primal,
        trace: out.trace,
    };
    match out.stop {
        Some(_) => Ok(report),
        None => Err(Error::Convergence {
            iterations: report.iterations,
            best_certificate: report.gap_certificate,
            best: Some(Box::new(report)),
        }),
    }
}
