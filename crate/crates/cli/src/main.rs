//! `maxent` command-line front end.
//!
//! Exit codes: 0 when every checked invariant held, 2 when a counterexample
//! was recorded, 1 on errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use maxent::apps::{self, OuterOptions};
use maxent::dual::{self, SolveOptions};
use maxent::experiments::{self, StabilityConfig};
use maxent::io::{self, Format};
use maxent::minnorm;
use maxent::par::Execution;
use maxent::support::FacetSystem;

#[derive(Parser)]
#[command(name = "maxent", version, about = "Maximum-entropy distributions via ball-constrained dual solves")]
struct Cli {
    /// Suppress timestamps so identical inputs give byte-identical output.
    #[arg(long, global = true)]
    deterministic: bool,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    /// Run data-parallel work on the calling thread only.
    #[arg(long, global = true)]
    serial: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the dual program for the instance marginal.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Marginal overriding the instance `theta`, comma separated.
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        no_accel: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-iteration `h` values as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Build and check a short truncated dual witness.
    Witness {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify that short dual vectors are far from optimal on a flat simplex.
    Lowerbound {
        /// JSON generators `[[...], ...]` of the simplex (origin implicit).
        #[arg(long, conflicts_with = "catalogue")]
        simplex: Option<PathBuf>,
        /// Name of a bundled simplex.
        #[arg(long)]
        catalogue: Option<String>,
        #[arg(long, default_value_t = 1000)]
        probes: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Empirical-gap table as CSV.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Min-norm point of the convex hull of a vector set.
    Minnorm {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// (r, c)-matrix scaling.
    Scale {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long)]
        c: String,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Capacity relaxation of a polynomial over a constraint polytope.
    Capacity {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        /// Outer iterate log as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-1 Brascamp–Lieb constant.
    Bl {
        #[arg(long)]
        vectors: PathBuf,
        /// Exponents, comma separated (ignored with --worst-case).
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        worst_case: bool,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stability of max-entropy distributions under marginal perturbations.
    Stability {
        instance: PathBuf,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        /// Perturbation sizes, comma separated.
        #[arg(long, default_value = "1e-4")]
        eps: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Empirical means near the boundary of a polytope.
    Boundary {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn emit_json<T: serde::Serialize>(report: &T, out: Option<&Path>, deterministic: bool) -> Result<()> {
    io::emit_report(report, out, Format::Json, deterministic)?;
    Ok(())
}

fn facets_for(inst: &io::Instance) -> Result<FacetSystem> {
    if let Some(f) = &inst.facets {
        return Ok(f.clone());
    }
    let w = inst.oracle.explicit().context("an explicit support is required")?;
    FacetSystem::from_points(w.support()).context("no facets given and the support is not full-dimensional")
}

/// Returns whether all checked invariants held.
fn run(cli: &Cli) -> Result<bool> {
    let det = cli.deterministic;
    let exec = if cli.serial { Execution::Serial } else { Execution::default() };
    match &cli.command {
        Command::Solve { instance, eps, theta, max_iters, no_accel, out, trace } => {
            let inst = io::load_instance(instance)?;
            let theta = match theta {
                Some(t) => io::parse_list::<f64>("theta", t)?,
                None => inst.theta.clone().context("instance has no theta; pass --theta")?,
            };
            let mut opts = SolveOptions { accelerate: !no_accel, record_trace: trace.is_some(), ..Default::default() };
            if let Some(n) = max_iters {
                opts.max_iters = *n;
            }
            opts.unary_complexity = inst.unary_complexity;
            let report = dual::solve_dual(&inst.oracle, &theta, *eps, inst.facets.as_ref(), &opts)?;
            if let Some(p) = trace {
                io::emit(&io::trace_csv(&report.trace, det)?, Some(p))?;
            }
            emit_json(&report, out.as_deref(), det)?;
            Ok(true)
        }
        Command::Witness { instance, eps, out } => {
            let inst = io::load_instance(instance)?;
            let theta = inst.theta.clone().context("instance has no theta")?;
            let facets = facets_for(&inst)?;
            let rep = maxent::witness::witness(&inst.oracle, &facets, &theta, *eps, &SolveOptions::default())?;
            eprintln!("‖y*‖        = {:.6e}", rep.check.norm_star);
            eprintln!("‖y∘‖        = {:.6e}", rep.check.norm_truncated);
            eprintln!("h(y*)       = {:.12}", rep.check.h_star);
            eprintln!("h(y∘)       = {:.12}", rep.check.h_truncated);
            eprintln!("m^1.5·M·Δ   = {:.6e}", rep.norm_bound);
            eprintln!("margin      = {:.3e}", rep.check.margin);
            emit_json(&rep, out.as_deref(), det)?;
            Ok(rep.check.passed && rep.check.norm_truncated <= rep.norm_bound * (1.0 + 1e-12))
        }
        Command::Lowerbound { simplex, catalogue, probes, seed, table, out } => {
            let generators = match (simplex, catalogue) {
                (Some(p), _) => io::load_matrix(p)?
                    .into_iter()
                    .map(|row| row.into_iter().map(|v| v as i64).collect())
                    .collect::<Vec<Vec<i64>>>(),
                (None, Some(name)) => minnorm::catalogue()
                    .into_iter()
                    .find(|e| &e.name == name)
                    .with_context(|| {
                        let names: Vec<String> = minnorm::catalogue().into_iter().map(|e| e.name).collect();
                        format!("unknown catalogue entry `{name}`; available: {}", names.join(", "))
                    })?
                    .generators,
                (None, None) => bail!("pass --simplex or --catalogue"),
            };
            let instance = minnorm::build_flat_instance(&generators)?;
            let cert = minnorm::certify_lower_bound(&instance, *probes, *seed, exec)?;
            if let Some(p) = table {
                io::emit(&io::rows_csv(&cert.probes, det)?, Some(p))?;
            }
            let summary = serde_json::json!({
                "delta": cert.delta,
                "tau": cert.tau,
                "y_star": cert.y_star,
                "epsilon": cert.epsilon,
                "required_norm": cert.required_norm,
                "probe_radius": cert.probe_radius,
                "g_theta": cert.g_theta,
                "min_gap": cert.min_gap,
                "violations": cert.violations,
                "probes": cert.probes.len(),
            });
            emit_json(&summary, out.as_deref(), det)?;
            Ok(cert.violations == 0)
        }
        Command::Minnorm { vectors, out } => {
            let v = io::load_matrix(vectors)?;
            let r = minnorm::min_norm_point(&v)?;
            let summary = serde_json::json!({
                "v": r.v, "delta": r.delta, "tau": r.tau, "y_star": r.y_star,
                "mu": r.mu, "iterations": r.iterations,
            });
            emit_json(&summary, out.as_deref(), det)?;
            Ok(true)
        }
        Command::Scale { matrix, r, c, eps, out } => {
            let a = io::load_matrix(matrix)?;
            let r = io::parse_list::<u64>("r", r)?;
            let c = io::parse_list::<u64>("c", c)?;
            let res = apps::matrix_scale(&a, &r, &c, *eps, &SolveOptions::default())?;
            emit_json(&res, out.as_deref(), det)?;
            Ok(res.log_y_max <= res.budget_log_y && res.log_x_max <= res.budget_log_x)
        }
        Command::Capacity { instance, eps, log, out } => {
            let inst = io::load_capacity(instance)?;
            let rep = apps::capacity(&inst, *eps, &OuterOptions::default())?;
            if let Some(p) = log {
                io::emit(&io::outer_csv(&rep, det)?, Some(p))?;
            }
            emit_json(&rep, out.as_deref(), det)?;
            Ok(true)
        }
        Command::Bl { vectors, p, worst_case, eps, log, out } => {
            let v = io::load_matrix(vectors)?;
            if *worst_case {
                let rep = apps::bl_worst_case(&v, *eps, &OuterOptions::default())?;
                if let Some(path) = log {
                    io::emit(&io::outer_csv(&rep, det)?, Some(path))?;
                }
                emit_json(&rep, out.as_deref(), det)?;
            } else {
                let p = io::parse_list::<f64>("p", p.as_deref().context("pass --p or --worst-case")?)?;
                let rep = apps::bl_constant(&v, &p, *eps, &SolveOptions::default())?;
                emit_json(&rep, out.as_deref(), det)?;
            }
            Ok(true)
        }
        Command::Stability { instance, pairs, eps, seed, out, format } => {
            let inst = io::load_instance(instance)?;
            let w = inst.oracle.explicit().context("stability experiments need an explicit support")?;
            let cfg = StabilityConfig {
                num_pairs: *pairs,
                eps_grid: io::parse_list::<f64>("eps", eps)?,
                seed: *seed,
                exec,
                opts: SolveOptions { unary_complexity: inst.unary_complexity, ..Default::default() },
            };
            let id = instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let run = experiments::stability_experiment(&id, w, inst.facets.as_ref(), &cfg)?;
            for r in run.rows.iter().filter(|r| r.status != experiments::RowStatus::Ok) {
                log::warn!("counterexample: {}", serde_json::to_string(r)?);
            }
            let text = match format {
                OutFormat::Csv => io::stability_csv(&run, det)?,
                OutFormat::Json => io::report_json(&run, det)?,
            };
            io::emit(&text, out.as_deref())?;
            log::info!(
                "{} rows, {} violations, {} solver failures, tv exponent {:?}",
                run.rows.len(),
                run.violations,
                run.failures,
                run.tv_exponent()
            );
            Ok(run.violations == 0)
        }
        Command::Boundary { m, n, trials, seed, out } => {
            let run = experiments::boundary_demo(*m, *n, *trials, *seed, exec)?;
            emit_json(&run, out.as_deref(), det)?;
            Ok(run.within_three_sigma())
        }
    }
}
