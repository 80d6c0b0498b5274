//! Instance files and report output.
//!
//! Instances are UTF-8 JSON. Derived quantities (`M`, `L_p`, `d`) are always
//! recomputed; declared values are checked against them. Reports are written
//! as JSON or CSV, both carrying a schema version header.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::apps::{CapacityInstance, ConstraintPolytope, OuterReport};
use crate::error::{Error, Result};
use crate::experiments::StabilityRun;
use crate::oracle::{CountingOracle, Graph, ProductForm};
use crate::support::{FacetSystem, WeightedSupport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FacetsFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleFile {
    Explicit,
    ProductForm { matrix: Vec<Vec<f64>>, r: Vec<u64> },
    SpanningTree { num_vertices: usize, edges: Vec<(usize, usize)> },
}

/// On-disk instance layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<FacetsFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleFile>,
    /// Declared unary facet complexity; must not be below the recomputed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unary_complexity: Option<i64>,
    /// Declared `L_p`; must not be below the recomputed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit_complexity: Option<f64>,
    /// Declared diameter; must not be below the recomputed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
}

/// A validated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub oracle: CountingOracle,
    pub theta: Option<Vec<f64>>,
    pub facets: Option<FacetSystem>,
    pub unary_complexity: Option<i64>,
    pub file: InstanceFile,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse { field: format!("line {}, column {}", e.line(), e.column()), message: e.to_string() }
}

fn field(name: &str, message: impl Into<String>) -> Error {
    Error::Parse { field: name.to_string(), message: message.into() }
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(parse_error)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Builds the oracle and checks every invariant and declared value.
    pub fn validate(self) -> Result<Instance> {
        let m = self.dimension;
        if m == 0 {
            return Err(field("dimension", "must be positive"));
        }
        let oracle = match self.oracle.clone().unwrap_or(OracleFile::Explicit) {
            OracleFile::Explicit => {
                let pts = self.support.clone().ok_or_else(|| field("support", "required for explicit instances"))?;
                if let Some(lw) = &self.log_weights {
                    if lw.len() != pts.len() {
                        return Err(field("log_weights", format!("expected {} entries, got {}", pts.len(), lw.len())));
                    }
                }
                if let Some((i, p)) = pts.iter().enumerate().find(|(_, p)| p.len() != m) {
                    return Err(field(&format!("support[{i}]"), format!("expected length {m}, got {}", p.len())));
                }
                CountingOracle::Explicit(WeightedSupport::new(pts, self.log_weights.clone())?)
            }
            OracleFile::ProductForm { matrix, r } => {
                if self.support.is_some() || self.log_weights.is_some() {
                    return Err(field("support", "not allowed with a product_form oracle"));
                }
                let pf = ProductForm::new(matrix, r)?;
                if pf.num_columns() != m {
                    return Err(field("dimension", format!("product form has {} columns", pf.num_columns())));
                }
                CountingOracle::ProductForm(pf)
            }
            OracleFile::SpanningTree { num_vertices, edges } => {
                if self.support.is_some() || self.log_weights.is_some() {
                    return Err(field("support", "not allowed with a spanning_tree oracle"));
                }
                let g = Graph::new(num_vertices, edges)?;
                if g.num_edges() != m {
                    return Err(field("dimension", format!("graph has {} edges", g.num_edges())));
                }
                CountingOracle::SpanningTree(g)
            }
        };
        if let Some(t) = &self.theta {
            if t.len() != m {
                return Err(field("theta", format!("expected length {m}, got {}", t.len())));
            }
        }
        let facets = match &self.facets {
            Some(f) => {
                let fs = FacetSystem::new(f.a.clone(), f.b.clone())?;
                if let Some(d) = fs.dim() {
                    if d != m {
                        return Err(field("facets.A", format!("rows must have length {m}")));
                    }
                }
                if let Some(w) = oracle.explicit() {
                    fs.check_points(w.support())?;
                }
                Some(fs)
            }
            None => None,
        };
        if let Some(declared) = self.unary_complexity {
            match (&facets, oracle.known_unary_complexity()) {
                (Some(fs), _) => fs.check_declared_unary_complexity(declared)?,
                (None, Some(k)) if declared < k => {
                    return Err(Error::validation(format!(
                        "declared unary facet complexity {declared} is below the structural value {k}"
                    )))
                }
                _ if declared < 1 => return Err(Error::validation("unary facet complexity must be ≥ 1")),
                _ => {}
            }
        }
        if let Some(declared) = self.bit_complexity {
            match oracle.explicit() {
                Some(w) => w.check_declared_bit_complexity(declared)?,
                None if declared + 1e-9 < oracle.bit_complexity_bound() => {
                    return Err(Error::validation(format!(
                        "declared L_p {declared} is below the recomputed bound {}",
                        oracle.bit_complexity_bound()
                    )))
                }
                None => {}
            }
        }
        if let Some(declared) = self.diameter {
            let d = oracle.diameter_bound();
            if declared + 1e-9 < d {
                return Err(Error::validation(format!("declared diameter {declared} is below the recomputed {d}")));
            }
        }
        Ok(Instance {
            oracle,
            theta: self.theta.clone(),
            facets,
            unary_complexity: self.unary_complexity,
            file: self,
        })
    }
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    InstanceFile::from_json(&std::fs::read_to_string(path)?)?.validate()
}

/// Capacity instance: a polynomial with 0/1 support and a constraint polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityFile {
    pub dimension: usize,
    pub support: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_weights: Option<Vec<f64>>,
    /// Facets of the convex hull of the support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<FacetsFile>,
    pub constraint: ConstraintFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintFile {
    Vertices(Vec<Vec<i64>>),
    Facets(FacetsFile),
}

impl CapacityFile {
    pub fn validate(self) -> Result<CapacityInstance> {
        let m = self.dimension;
        if let Some((i, _)) = self.support.iter().enumerate().find(|(_, p)| p.len() != m) {
            return Err(field(&format!("support[{i}]"), format!("expected length {m}")));
        }
        let polynomial = WeightedSupport::new(self.support, self.log_weights)?;
        let support_facets = match self.facets {
            Some(f) => {
                let fs = FacetSystem::new(f.a, f.b)?;
                fs.check_points(polynomial.support())?;
                Some(fs)
            }
            None => None,
        };
        let constraint = match self.constraint {
            ConstraintFile::Vertices(v) => {
                if v.iter().any(|p| p.len() != m) {
                    return Err(field("constraint.vertices", format!("points must have length {m}")));
                }
                ConstraintPolytope::Vertices(v)
            }
            ConstraintFile::Facets(f) => ConstraintPolytope::Facets(FacetSystem::new(f.a, f.b)?),
        };
        Ok(CapacityInstance { polynomial, constraint, support_facets })
    }
}

pub fn load_capacity(path: &Path) -> Result<CapacityInstance> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str::<CapacityFile>(&text).map_err(parse_error)?.validate()
}

/// A matrix given either bare or as `{"matrix": ...}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Bare(Vec<Vec<f64>>),
    Wrapped { matrix: Vec<Vec<f64>> },
}

/// Reads a real matrix from `[[...], ...]` or `{"matrix": [[...], ...]}`;
/// `{"vectors": ...}` is accepted as well.
pub fn load_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_error)?;
    let value = match value {
        serde_json::Value::Object(mut o) if o.contains_key("vectors") => {
            serde_json::json!({ "matrix": o.remove("vectors").unwrap_or_default() })
        }
        v => v,
    };
    let m: MatrixFile =
        serde_json::from_value(value).map_err(|e| field("matrix", format!("expected an array of rows: {e}")))?;
    let rows = match m {
        MatrixFile::Bare(r) | MatrixFile::Wrapped { matrix: r } => r,
    };
    if let Some(first) = rows.first() {
        if rows.iter().any(|r| r.len() != first.len()) {
            return Err(field("matrix", "rows have different lengths"));
        }
    }
    Ok(rows)
}

/// Parses a comma-separated list of numbers.
pub fn parse_list<T: std::str::FromStr>(name: &str, text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| field(name, format!("`{s}`: {e}"))))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

fn header(deterministic: bool) -> String {
    if deterministic {
        format!("schema_version={SCHEMA_VERSION}")
    } else {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("schema_version={SCHEMA_VERSION} generated_unix={now}")
    }
}

/// `{"schema_version": 1, ["generated_unix": t,] "report": ...}`.
pub fn report_json<T: Serialize>(report: &T, deterministic: bool) -> Result<String> {
    let mut obj = serde_json::Map::new();
    obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    if !deterministic {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        obj.insert("generated_unix".into(), now.into());
    }
    obj.insert("report".into(), serde_json::to_value(report)?);
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(obj))? + "\n")
}

/// Writes serializable flat rows as CSV after a `# schema_version=…` line.
pub fn rows_csv<R: Serialize>(rows: &[R], deterministic: bool) -> Result<String> {
    let mut out = Vec::new();
    writeln!(out, "# {}", header(deterministic))?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    String::from_utf8(out).map_err(|e| Error::numerical(format!("CSV output is not UTF-8: {e}")))
}

#[derive(Serialize)]
struct StabilityCsvRow<'a> {
    instance_id: &'a str,
    eps: f64,
    theta_dist: f64,
    tv: f64,
    bound: f64,
    margin: f64,
    iters1: usize,
    iters2: usize,
    theta_dist_l2: f64,
    status: &'static str,
}

/// Stability table with the fixed leading columns
/// `instance_id, eps, theta_dist, tv, bound, margin, iters1, iters2`.
pub fn stability_csv(run: &StabilityRun, deterministic: bool) -> Result<String> {
    let rows: Vec<StabilityCsvRow> = run
        .rows
        .iter()
        .map(|r| StabilityCsvRow {
            instance_id: &r.instance_id,
            eps: r.eps,
            theta_dist: r.theta_dist,
            tv: r.tv,
            bound: r.bound,
            margin: r.margin,
            iters1: r.iters1,
            iters2: r.iters2,
            theta_dist_l2: r.theta_dist_l2,
            status: r.status.as_str(),
        })
        .collect();
    rows_csv(&rows, deterministic)
}

#[derive(Serialize)]
struct OuterCsvRow {
    iteration: usize,
    value: f64,
    best_lower: f64,
    upper: f64,
    inner_iterations: usize,
}

/// Iterate log of an outer maximization.
pub fn outer_csv(report: &OuterReport, deterministic: bool) -> Result<String> {
    let rows: Vec<OuterCsvRow> = report
        .history
        .iter()
        .map(|s| OuterCsvRow {
            iteration: s.iteration,
            value: s.value,
            best_lower: s.best_lower,
            upper: s.upper,
            inner_iterations: s.inner_iterations,
        })
        .collect();
    rows_csv(&rows, deterministic)
}

#[derive(Serialize)]
struct TraceCsvRow {
    iteration: usize,
    h_value: f64,
}

/// Iterate log of a dual solve (`h` per iteration).
pub fn trace_csv(trace: &[f64], deterministic: bool) -> Result<String> {
    let rows: Vec<TraceCsvRow> =
        trace.iter().enumerate().map(|(iteration, &h_value)| TraceCsvRow { iteration, h_value }).collect();
    rows_csv(&rows, deterministic)
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Serializes `report` in the requested format and emits it.
pub fn emit_report<T: Serialize>(report: &T, path: Option<&Path>, format: Format, deterministic: bool) -> Result<()> {
    let text = match format {
        Format::Json => report_json(report, deterministic)?,
        Format::Csv => rows_csv(std::slice::from_ref(report), deterministic)?,
    };
    emit(&text, path)
}
