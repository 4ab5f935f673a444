//! Scenario files: a versioned JSON description of a domain, its constraints,
//! and one task to run, plus the bundled fixture catalog and report
//! rendering used by the `causal-entropy` binary.
//!
//! Output is deterministic: JSON is emitted with sorted keys and fixed
//! numeric formatting, so identical inputs produce byte-identical bytes.
//! Probabilities computed on an exact-rational path are printed as fractions;
//! floating results are printed with 12 significant digits.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::causal::{
    causal_maxent_bivariate, causal_maxent_dag, order_sensitivity, timeseries_window_compare,
    CausalFitResult, Dag, FeasibilityScope, FitStatus,
};
use crate::counting::concentration_census;
use crate::dist::{relation_to_constraint, FiniteDomain, LinearConstraint, ProbTable, Relation};
use crate::error::{Error, Result};
use crate::igci::{
    discrete_pir_score, fat_pen, igci_direction, igci_score, limit_consistency, MonotoneFunction,
    DEFAULT_LIMIT_WIDTH_SCALE, DEFAULT_PEN_WIDTH, LIMIT_GRIDS,
};
use crate::maxent::{maxent, SolveStatus};
use crate::pir::{causal_pir_joint, infer_direction, pearl_puzzle, symmetric_pir_joint};

pub const SCENARIO_VERSION: u32 = 1;

/// Default census tolerances.
pub const DEFAULT_CENSUS_DELTAS: [f64; 3] = [0.1, 0.2, 0.4];

// ---------------------------------------------------------------------------
// schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub variables: Vec<VariableSpec>,
}

/// One linear expectation constraint: either an explicit value table `f`
/// over the domain points (canonical index order) or a symbolic moment such
/// as `"E[X]"`, `"E[X^2]"`, `"E[X*Y]"`, which expands over numeric value
/// labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<f64>>,
    pub target: f64,
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DagSpec {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_scope: Option<FeasibilityScope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pen_width: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Admissible tuples as value labels, one per domain variable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dag: Option<DagSpec>,
    /// Observed tuples (value labels) for direction inference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observations: Option<Vec<Vec<String>>>,
    /// Real-valued x-samples in [0, 1] for the slope-score tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<MonotoneFunction>,
    pub task: TaskSpec,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| Error::Invalid(format!("scenario does not parse: {e}")))?;
        if s.version != SCENARIO_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported scenario version {} (expected {SCENARIO_VERSION})",
                s.version
            )));
        }
        Ok(s)
    }
}

/// Command-line overrides applied on top of a scenario's task block.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub task: Option<String>,
    pub cause: Option<String>,
    pub order: Option<Vec<String>>,
    pub feasibility_scope: Option<FeasibilityScope>,
    pub epsilon: Option<f64>,
    pub grid: Option<usize>,
    pub pen_width: Option<f64>,
    pub seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Invalid(format!("unknown format {other}"))),
        }
    }
}

/// Result of running one scenario task.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub task: String,
    /// The task completed but reported an infeasible constraint set.
    pub infeasible: bool,
    /// Full machine-readable report (stable key order when serialized).
    pub body: Value,
    /// The primary distribution, when the task produces one; used by the
    /// table and CSV renderers.
    pub main_table: Option<ProbTable>,
}

/// Process exit code for an outcome: 0 ok, 2 infeasible, 3 validation error,
/// 4 size-cap error.
pub fn exit_code(outcome: &Result<RunReport>) -> i32 {
    match outcome {
        Ok(r) if r.infeasible => 2,
        Ok(_) => 0,
        Err(Error::SizeCap(_)) => 4,
        Err(_) => 3,
    }
}

/// Stable machine-readable code for an error, alongside its human message.
pub fn error_code(e: &Error) -> &'static str {
    match e {
        Error::SizeCap(_) => "size-cap",
        Error::Resolution(_) => "resolution",
        Error::Numeric(_) => "numeric",
        Error::UnknownVariable(_) => "unknown-variable",
        Error::EmptyRelation => "empty-relation",
        Error::ObservationOutsideRelation(_) => "observation-outside-relation",
        Error::Invalid(_) => "validation",
    }
}

/// Format a float with 12 significant digits, shortest representation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - mag);
    let rounded = (x * scale).round() / scale;
    format!("{rounded}")
}

fn frac(r: &BigRational) -> String {
    r.to_string()
}

fn prob_string(table: &ProbTable, idx: usize) -> String {
    match table.exact_prob(idx) {
        Some(r) => frac(r),
        None => fmt_sig(table.prob(idx)),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Invalid(format!("serialization failed: {e}")))
}

/// Render a report in the requested format.
pub fn render(report: &RunReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            // serde_json maps are ordered; a Value round-trip sorts keys
            let text = serde_json::to_string_pretty(&report.body)
                .map_err(|e| Error::Invalid(format!("cannot render: {e}")))?;
            Ok(text + "\n")
        }
        OutputFormat::Csv => {
            let table = report.main_table.as_ref().ok_or_else(|| {
                Error::Invalid(format!("task {} emits no distribution for csv", report.task))
            })?;
            let domain = table.domain();
            let mut out = String::new();
            for v in domain.variables() {
                out.push_str(&v.name);
                out.push(',');
            }
            out.push_str("probability\n");
            for idx in 0..domain.size() {
                for label in domain.point_labels(idx) {
                    out.push_str(&label);
                    out.push(',');
                }
                out.push_str(&prob_string(table, idx));
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Table => {
            let mut out = String::new();
            out.push_str(&format!("task: {}\n", report.task));
            if report.infeasible {
                out.push_str("status: infeasible\n");
            }
            if let Some(table) = &report.main_table {
                let domain = table.domain();
                let names: Vec<&str> =
                    domain.variables().iter().map(|v| v.name.as_str()).collect();
                out.push_str(&format!("{}  p\n", names.join("  ")));
                for idx in 0..domain.size() {
                    let labels = domain.point_labels(idx);
                    out.push_str(&format!(
                        "{}  {}\n",
                        labels.join("  "),
                        prob_string(table, idx)
                    ));
                }
            } else {
                let text = serde_json::to_string_pretty(&report.body)
                    .map_err(|e| Error::Invalid(format!("cannot render: {e}")))?;
                out.push_str(&text);
                out.push('\n');
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// scenario resolution
// ---------------------------------------------------------------------------

fn build_domain(spec: &ScenarioFile) -> Result<FiniteDomain> {
    let d = spec
        .domain
        .as_ref()
        .ok_or_else(|| Error::Invalid("task needs a domain".into()))?;
    FiniteDomain::new(
        d.variables
            .iter()
            .map(|v| (v.name.clone(), v.values.clone()))
            .collect(),
    )
}

fn build_relation(spec: &ScenarioFile, domain: &FiniteDomain) -> Result<Relation> {
    let tuples = spec
        .relation
        .as_ref()
        .ok_or_else(|| Error::Invalid("task needs a relation".into()))?;
    if tuples.is_empty() {
        return Err(Error::EmptyRelation);
    }
    let borrowed: Vec<Vec<&str>> = tuples
        .iter()
        .map(|t| t.iter().map(String::as_str).collect())
        .collect();
    Relation::from_labels(domain.clone(), &borrowed)
}

/// Expand `"E[X*Y^2]"`-style moment syntax to (variable, power) pairs.
fn parse_moment(domain: &FiniteDomain, text: &str) -> Result<Vec<(usize, u32)>> {
    let inner = text
        .strip_prefix("E[")
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Invalid(format!("moment spec {text} is not of the form E[...]")))?;
    let mut powers = Vec::new();
    for factor in inner.split('*') {
        let factor = factor.trim();
        let (name, pow) = match factor.split_once('^') {
            Some((n, p)) => {
                let pow: u32 = p.trim().parse().map_err(|_| {
                    Error::Invalid(format!("bad exponent in moment factor {factor}"))
                })?;
                (n.trim(), pow)
            }
            None => (factor, 1),
        };
        powers.push((domain.var_index(name)?, pow));
    }
    Ok(powers)
}

fn build_constraints(
    spec: &ScenarioFile,
    domain: &FiniteDomain,
    ov: &Overrides,
) -> Result<Vec<LinearConstraint>> {
    let mut out = Vec::with_capacity(spec.constraints.len());
    for c in &spec.constraints {
        let epsilon = ov.epsilon.unwrap_or(c.epsilon);
        if epsilon < 0.0 {
            return Err(Error::Invalid(format!("constraint {}: negative epsilon", c.id)));
        }
        let built = match (&c.moment, &c.f) {
            (Some(m), None) => {
                LinearConstraint::moment(domain.clone(), &parse_moment(domain, m)?, c.target, epsilon)?
            }
            (None, Some(f)) => LinearConstraint::new(domain.clone(), f.clone(), c.target, epsilon)?,
            _ => {
                return Err(Error::Invalid(format!(
                    "constraint {} needs exactly one of `moment` or `f`",
                    c.id
                )))
            }
        };
        out.push(built);
    }
    Ok(out)
}

fn build_dag(spec: &ScenarioFile) -> Result<Dag> {
    let d = spec
        .dag
        .as_ref()
        .ok_or_else(|| Error::Invalid("task needs a dag".into()))?;
    let edges: Vec<(&str, &str)> = d
        .edges
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    Dag::new(d.nodes.clone(), &edges)
}

fn cause_of(spec: &ScenarioFile, ov: &Overrides) -> Result<String> {
    ov.cause
        .clone()
        .or_else(|| spec.task.cause.clone())
        .ok_or_else(|| Error::Invalid("task needs a cause variable (--cause)".into()))
}

fn scope_of(spec: &ScenarioFile, ov: &Overrides) -> FeasibilityScope {
    ov.feasibility_scope
        .or(spec.task.feasibility_scope)
        .unwrap_or(FeasibilityScope::GeneralJoint)
}

fn function_of(spec: &ScenarioFile) -> Result<MonotoneFunction> {
    spec.function
        .clone()
        .ok_or_else(|| Error::Invalid("task needs a function".into()))
}

fn fit_body(fit: &CausalFitResult) -> Result<Value> {
    let status = match fit.status {
        FitStatus::Ok => json!("ok"),
        FitStatus::NonUnique => json!("non-unique"),
        // step numbers are reported 1-based
        FitStatus::InfeasibleAtStep(j) => json!(format!("infeasible at step {}", j + 1)),
    };
    Ok(json!({
        "order": fit.order,
        "status": status,
        "steps": fit.steps.iter().map(|s| {
            Ok(json!({
                "node": s.node,
                "conditional": to_value(&s.conditional)?,
                "conditional_entropy": s.conditional_entropy,
                "iterations": s.iterations,
            }))
        }).collect::<Result<Vec<_>>>()?,
        "joint": match &fit.joint { Some(t) => to_value(t)?, None => Value::Null },
        "alternatives": fit.alternatives.iter().map(to_value).collect::<Result<Vec<_>>>()?,
    }))
}

// ---------------------------------------------------------------------------
// task dispatch
// ---------------------------------------------------------------------------

/// Execute the scenario's task (possibly overridden) and build the report.
pub fn run(spec: &ScenarioFile, ov: &Overrides) -> Result<RunReport> {
    let task = ov.task.clone().unwrap_or_else(|| spec.task.name.clone());
    let mut report = match task.as_str() {
        "pir" => {
            let domain = build_domain(spec)?;
            let rel = build_relation(spec, &domain)?;
            let cause = cause_of(spec, ov)?;
            let joint = causal_pir_joint(&rel, &cause)?;
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "cause": cause,
                    "joint": to_value(&joint)?,
                }),
                main_table: Some(joint),
            }
        }
        "symmetric-pir" => {
            let domain = build_domain(spec)?;
            let rel = build_relation(spec, &domain)?;
            let joint = symmetric_pir_joint(&rel)?;
            RunReport {
                task,
                infeasible: false,
                body: json!({ "joint": to_value(&joint)? }),
                main_table: Some(joint),
            }
        }
        "infer-direction" => {
            let domain = build_domain(spec)?;
            let rel = build_relation(spec, &domain)?;
            let tuples = spec
                .observations
                .as_ref()
                .ok_or_else(|| Error::Invalid("task needs observations".into()))?;
            let mut observations = Vec::with_capacity(tuples.len());
            for t in tuples {
                let point: Vec<usize> = t
                    .iter()
                    .enumerate()
                    .map(|(var, label)| domain.value_index(var, label))
                    .collect::<Result<_>>()?;
                observations.push(domain.index_of(&point));
            }
            let call = infer_direction(&rel, &observations)?;
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "inferred": to_value(&call.inferred)?,
                    "likelihood_cause_to_effect": frac(&call.likelihood_cause_to_effect),
                    "likelihood_effect_to_cause": frac(&call.likelihood_effect_to_cause),
                }),
                main_table: None,
            }
        }
        "pearl-puzzle" => {
            let r = pearl_puzzle();
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "causal_joint": to_value(&r.causal_joint)?,
                    "symmetric_joint": to_value(&r.symmetric_joint)?,
                    "causal_ab": to_value(&r.causal_ab)?,
                    "symmetric_ab": to_value(&r.symmetric_ab)?,
                    "causal_ab_independent": r.causal_ab_independent,
                    "symmetric_ab_independent": r.symmetric_ab_independent,
                    "symmetric_ab_mutual_information": r.symmetric_ab_mutual_information,
                }),
                main_table: Some(r.causal_joint),
            }
        }
        "maxent" => {
            let domain = build_domain(spec)?;
            let mut constraints = build_constraints(spec, &domain, ov)?;
            if let Some(rel) = &spec.relation {
                if !rel.is_empty() {
                    constraints.push(relation_to_constraint(&build_relation(spec, &domain)?)?);
                }
            }
            let sol = maxent(&domain, &constraints)?;
            let infeasible = sol.status == SolveStatus::Infeasible;
            RunReport {
                task,
                infeasible,
                body: json!({
                    "status": format!("{:?}", sol.status).to_lowercase(),
                    "distribution": to_value(&sol.distribution)?,
                    "multipliers": sol.multipliers,
                    "residuals": sol.residuals,
                    "entropy_nats": sol.distribution.entropy(),
                    "iterations": sol.iterations,
                }),
                main_table: Some(sol.distribution),
            }
        }
        "causal-maxent" => {
            let domain = build_domain(spec)?;
            let mut constraints = build_constraints(spec, &domain, ov)?;
            if let Some(rel) = &spec.relation {
                if !rel.is_empty() {
                    constraints.push(relation_to_constraint(&build_relation(spec, &domain)?)?);
                }
            }
            let cause = cause_of(spec, ov)?;
            let fit = causal_maxent_bivariate(&domain, &constraints, &cause)?;
            let infeasible = matches!(fit.status, FitStatus::InfeasibleAtStep(_));
            let table = fit.joint.clone();
            RunReport {
                task,
                infeasible,
                body: fit_body(&fit)?,
                main_table: table,
            }
        }
        "causal-maxent-dag" => {
            let domain = build_domain(spec)?;
            let mut constraints = build_constraints(spec, &domain, ov)?;
            if let Some(rel) = &spec.relation {
                if !rel.is_empty() {
                    constraints.push(relation_to_constraint(&build_relation(spec, &domain)?)?);
                }
            }
            let dag = build_dag(spec)?;
            let order_names = ov.order.clone().or_else(|| spec.task.order.clone());
            let fit = match &order_names {
                Some(names) => {
                    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                    causal_maxent_dag(&domain, &constraints, &dag, Some(&refs), scope_of(spec, ov))?
                }
                None => causal_maxent_dag(&domain, &constraints, &dag, None, scope_of(spec, ov))?,
            };
            let infeasible = matches!(fit.status, FitStatus::InfeasibleAtStep(_));
            let table = fit.joint.clone();
            RunReport {
                task,
                infeasible,
                body: fit_body(&fit)?,
                main_table: table,
            }
        }
        "order-sensitivity" => {
            let domain = build_domain(spec)?;
            let constraints = build_constraints(spec, &domain, ov)?;
            let dag = build_dag(spec)?;
            let r = order_sensitivity(&domain, &constraints, &dag, scope_of(spec, ov))?;
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "orders": r.orders,
                    "max_total_variation": r.max_total_variation,
                    "results": r.results.iter().map(fit_body).collect::<Result<Vec<_>>>()?,
                }),
                main_table: None,
            }
        }
        "census" => {
            let domain = build_domain(spec)?;
            let rel = build_relation(spec, &domain)?;
            let cause = cause_of(spec, ov)?;
            let n = spec
                .task
                .n
                .ok_or_else(|| Error::Invalid("census task needs n".into()))?;
            let deltas = spec
                .task
                .deltas
                .clone()
                .unwrap_or_else(|| DEFAULT_CENSUS_DELTAS.to_vec());
            let c = concentration_census(&rel, &cause, n, &deltas)?;
            let fracs = |v: &[BigRational]| -> Vec<String> { v.iter().map(frac).collect() };
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "n": c.n,
                    "deltas": c.deltas,
                    "num_types": c.num_types,
                    "causal_near_causal": fracs(&c.causal_near_causal),
                    "causal_near_symmetric": fracs(&c.causal_near_symmetric),
                    "uniform_near_causal": fracs(&c.uniform_near_causal),
                    "uniform_near_symmetric": fracs(&c.uniform_near_symmetric),
                    "expected_causal_empirical": to_value(&c.expected_causal_empirical)?,
                    "expected_uniform_empirical": to_value(&c.expected_uniform_empirical)?,
                }),
                main_table: Some(c.expected_causal_empirical),
            }
        }
        "igci" => {
            let f = function_of(spec)?;
            let grid = ov.grid.or(spec.task.grid).unwrap_or(200);
            let width = ov.pen_width.or(spec.task.pen_width).unwrap_or(DEFAULT_PEN_WIDTH);
            let band = fat_pen(&f, grid, width)?;
            let xs: Vec<f64> = match &spec.samples {
                Some(s) => s.clone(),
                // default: one sample per grid column
                None => (0..grid).map(|i| i as f64 / grid as f64).collect(),
            };
            let snapped: Vec<(usize, usize)> = xs
                .iter()
                .map(|&x| (band.snap(x), band.snap(f.eval(x))))
                .collect();
            let discrete = discrete_pir_score(&band, &snapped)?;
            let score_xs: Vec<f64> = snapped
                .iter()
                .map(|&(i, _)| i as f64 / grid as f64)
                .collect();
            // avoid boundary samples where the derivative may degenerate
            let score_input: Vec<f64> = score_xs
                .iter()
                .copied()
                .map(|x| x.max(0.5 / grid as f64))
                .collect();
            let score = igci_score(&f, &score_input)?;
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "grid": grid,
                    "pen_width": width,
                    "samples": snapped.len(),
                    "sum_log_nx": discrete.sum_log_nx,
                    "sum_log_ny": discrete.sum_log_ny,
                    "discrete_direction": to_value(&discrete.inferred)?,
                    "igci_score": score,
                    "igci_direction": to_value(&igci_direction(score))?,
                }),
                main_table: None,
            }
        }
        "limit-consistency" => {
            let f = function_of(spec)?;
            let xs = spec
                .samples
                .clone()
                .ok_or_else(|| Error::Invalid("task needs samples".into()))?;
            // a --pen-width is read as the half-width at the coarsest grid;
            // finer grids scale it by sqrt of the refinement factor
            let scale = ov
                .pen_width
                .or(spec.task.pen_width)
                .map(|w| w / (LIMIT_GRIDS[0] as f64).sqrt())
                .unwrap_or(DEFAULT_LIMIT_WIDTH_SCALE);
            let r = limit_consistency(&f, &xs, scale)?;
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "grids": r.grids,
                    "deviations": r.deviations,
                    "decreasing": r.decreasing,
                }),
                main_table: None,
            }
        }
        "timeseries-compare" => {
            let r = timeseries_window_compare()?;
            RunReport {
                task,
                infeasible: false,
                body: json!({
                    "admissible_triples": r.relation.len(),
                    "static_joint": to_value(&r.static_joint)?,
                    "static_prev_marginal": to_value(&r.static_prev_marginal)?,
                    "sequential_prev_marginal": to_value(&r.sequential_prev_marginal)?,
                }),
                main_table: Some(r.static_joint),
            }
        }
        other => return Err(Error::Invalid(format!("unknown task {other}"))),
    };
    let mut top = serde_json::Map::new();
    top.insert("task".into(), json!(report.task));
    top.insert("infeasible".into(), json!(report.infeasible));
    if let Some(seed) = ov.seed {
        top.insert("seed".into(), json!(seed));
    }
    if let Value::Object(body) = std::mem::take(&mut report.body) {
        for (k, v) in body {
            top.insert(k, v);
        }
    }
    report.body = Value::Object(top);
    Ok(report)
}

/// Parse and run a scenario from its JSON text.
pub fn run_text(text: &str, ov: &Overrides) -> Result<RunReport> {
    let spec = ScenarioFile::from_json(text)?;
    run(&spec, ov)
}

// ---------------------------------------------------------------------------
// bundled fixtures
// ---------------------------------------------------------------------------

/// The bundled fixture catalog: `(name, json)` pairs.
pub fn list_examples() -> Vec<(&'static str, &'static str)> {
    vec![
        ("device", include_str!("../fixtures/device.json")),
        ("pearl-puzzle", include_str!("../fixtures/pearl-puzzle.json")),
        ("chain-3", include_str!("../fixtures/chain-3.json")),
        ("parity", include_str!("../fixtures/parity.json")),
        (
            "sun-lauderdale-grid",
            include_str!("../fixtures/sun-lauderdale-grid.json"),
        ),
        (
            "appendix-timeseries",
            include_str!("../fixtures/appendix-timeseries.json"),
        ),
        ("igci-square", include_str!("../fixtures/igci-square.json")),
    ]
}

/// Fixture JSON by name.
pub fn example(name: &str) -> Result<&'static str> {
    list_examples()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text)
        .ok_or_else(|| Error::Invalid(format!("no bundled example named {name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_has_twelve_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.25), "0.25");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-1.0 / 7.0), "-0.142857142857");
        assert_eq!(fmt_sig(123456.789), "123456.789");
    }

    #[test]
    fn moment_parsing() {
        let d = FiniteDomain::new(vec![("X", vec!["1", "2"]), ("Y", vec!["0", "1"])]).unwrap();
        assert_eq!(parse_moment(&d, "E[X]").unwrap(), vec![(0, 1)]);
        assert_eq!(parse_moment(&d, "E[X^2]").unwrap(), vec![(0, 2)]);
        assert_eq!(parse_moment(&d, "E[X*Y]").unwrap(), vec![(0, 1), (1, 1)]);
        assert!(parse_moment(&d, "E[Z]").is_err());
        assert!(parse_moment(&d, "X*Y").is_err());
    }

    #[test]
    fn catalog_is_complete_and_valid() {
        let names: Vec<&str> = list_examples().iter().map(|(n, _)| *n).collect();
        assert_eq!(
            names,
            vec![
                "device",
                "pearl-puzzle",
                "chain-3",
                "parity",
                "sun-lauderdale-grid",
                "appendix-timeseries",
                "igci-square"
            ]
        );
        for (name, text) in list_examples() {
            ScenarioFile::from_json(text)
                .unwrap_or_else(|e| panic!("fixture {name} does not validate: {e}"));
        }
    }

    #[test]
    fn empty_relation_is_a_validation_error() {
        let text = r#"{
            "version": 1,
            "domain": {"variables": [
                {"name": "X", "values": ["0", "1"]},
                {"name": "Y", "values": ["0", "1"]}
            ]},
            "relation": [],
            "task": {"name": "pir", "cause": "X"}
        }"#;
        let outcome = run_text(text, &Overrides::default());
        assert_eq!(exit_code(&outcome), 3);
    }

    #[test]
    fn unknown_task_and_version_are_rejected() {
        let text = r#"{"version": 1, "task": {"name": "no-such-task"}}"#;
        assert_eq!(exit_code(&run_text(text, &Overrides::default())), 3);
        let text = r#"{"version": 2, "task": {"name": "pir"}}"#;
        assert!(ScenarioFile::from_json(text).is_err());
    }

    #[test]
    fn device_fixture_reproduces_the_golden_table() {
        let report = run_text(example("device").unwrap(), &Overrides::default()).unwrap();
        assert_eq!(exit_code(&Ok(report.clone())), 0);
        let table = report.main_table.unwrap();
        let d = table.domain().clone();
        let sixth = BigRational::new(1.into(), 6.into());
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(table.exact_prob(d.index_of(&[0, 1])).unwrap(), &sixth);
        assert_eq!(table.exact_prob(d.index_of(&[0, 2])).unwrap(), &sixth);
        assert_eq!(table.exact_prob(d.index_of(&[1, 0])).unwrap(), &third);
        assert_eq!(table.exact_prob(d.index_of(&[2, 0])).unwrap(), &third);
    }

    #[test]
    fn json_output_is_deterministic_and_round_trips() {
        let ov = Overrides::default();
        let a = render(&run_text(example("device").unwrap(), &ov).unwrap(), OutputFormat::Json)
            .unwrap();
        let b = render(&run_text(example("device").unwrap(), &ov).unwrap(), OutputFormat::Json)
            .unwrap();
        assert_eq!(a, b);
        // the emitted joint deserializes back to an identical table
        let report = run_text(example("device").unwrap(), &ov).unwrap();
        let joint_value = report.body.get("joint").unwrap().clone();
        let round: ProbTable = serde_json::from_value(joint_value).unwrap();
        assert!(round.exact_eq(report.main_table.as_ref().unwrap()));
    }

    #[test]
    fn csv_has_one_row_per_domain_point() {
        let report = run_text(example("device").unwrap(), &Overrides::default()).unwrap();
        let csv = render(&report, OutputFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines[0], "X,Y,probability");
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines.iter().skip(1).any(|l| l.ends_with("1/3")));
    }

    #[test]
    fn overrides_switch_task_and_cause() {
        let text = example("device").unwrap();
        let ov = Overrides {
            cause: Some("Y".into()),
            ..Default::default()
        };
        let report = run_text(text, &ov).unwrap();
        let table = report.main_table.unwrap();
        let d = table.domain().clone();
        // cause = Y mirrors the table
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(table.exact_prob(d.index_of(&[0, 1])).unwrap(), &third);
        let ov = Overrides {
            task: Some("symmetric-pir".into()),
            ..Default::default()
        };
        let report = run_text(text, &ov).unwrap();
        let table = report.main_table.unwrap();
        let quarter = BigRational::new(1.into(), 4.into());
        let d = table.domain().clone();
        assert_eq!(table.exact_prob(d.index_of(&[0, 1])).unwrap(), &quarter);
    }

    #[test]
    fn parity_fixture_is_infeasible_at_step_two() {
        let outcome = run_text(example("parity").unwrap(), &Overrides::default());
        assert_eq!(exit_code(&outcome), 2);
        let report = outcome.unwrap();
        assert_eq!(
            report.body.get("status").unwrap().as_str().unwrap(),
            "infeasible at step 2"
        );
    }

    #[test]
    fn every_fixture_runs_without_validation_errors() {
        for (name, text) in list_examples() {
            let outcome = run_text(text, &Overrides::default());
            let code = exit_code(&outcome);
            assert!(
                code == 0 || (code == 2 && name == "parity"),
                "fixture {name} exited {code}: {:?}",
                outcome.err()
            );
        }
    }
}
