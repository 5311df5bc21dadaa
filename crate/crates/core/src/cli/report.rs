use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::{classify, grid_json, Failure, Payload, Problem, Task};
use crate::flow::{domain_probe, FlowMap, ProbeConfig, ProbeOutcome};
use crate::normal::{
    isotropic_model_form, linearize, morse_normalize, symplectic_normalize, NormalConfig, NormalError,
    NormalFormResult, SAMPLE_SEED,
};
use crate::verify::{closed_form_regression_with, regression_cases, ResidualEntry, REGRESSION_TOLERANCE};
use crate::weighted::{
    euler_like_check, filtration_degree, graded_component, CheckMethod, EulerLikeReport, Graded, VectorField,
    WeightSequence,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Rows of the sampled map table kept in a report.
pub const MAP_ROW_CAP: usize = 10_000;

/// Grid points and their images under `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapTable {
    pub dim: usize,
    pub rows: Vec<(Vec<f64>, Vec<f64>)>,
    pub total: usize,
}

impl MapTable {
    fn sample(flow: &FlowMap, cfg: &NormalConfig) -> Result<MapTable, NormalError> {
        let dim = flow.dim();
        let total = cfg.grid.len(dim);
        let points: Vec<Vec<f64>> = cfg.grid.points(dim).into_iter().take(MAP_ROW_CAP).collect();
        let images = points
            .par_iter()
            .map(|p| flow.apply(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MapTable {
            dim,
            rows: points.into_iter().zip(images).collect(),
            total,
        })
    }

    pub fn truncated(&self) -> bool {
        self.rows.len() < self.total
    }

    fn to_json(&self) -> Value {
        json!({
            "columns": self.header(),
            "rows": self.rows.iter().map(|(p, q)| p.iter().chain(q).copied().collect::<Vec<f64>>()).collect::<Vec<_>>(),
            "total": self.total,
            "truncated": self.truncated(),
        })
    }

    fn header(&self) -> Vec<String> {
        (1..=self.dim)
            .map(|i| format!("p{i}"))
            .chain((1..=self.dim).map(|i| format!("phi{i}")))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for (p, q) in &self.rows {
            let cells: Vec<String> = p.iter().chain(q).map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// A report under construction. Everything in `body` is a pure function of
/// the problem and the flags; timing is kept outside it.
#[derive(Clone, Debug)]
pub struct Report {
    body: Map<String, Value>,
    warnings: Vec<String>,
    pub table: Option<MapTable>,
    fixture_rows: Vec<(String, bool, String)>,
}

impl Report {
    fn new(task: &str) -> Report {
        let mut body = Map::new();
        body.insert("schema_version".into(), json!(SCHEMA_VERSION));
        body.insert(
            "tool".into(),
            json!({"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")}),
        );
        body.insert("task".into(), json!(task));
        Report {
            body,
            warnings: Vec::new(),
            table: None,
            fixture_rows: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: Value) {
        self.body.insert(key.into(), value);
    }

    pub fn warn(&mut self, msg: &str) {
        self.warnings.push(msg.to_string());
    }

    pub fn verdict(&self) -> bool {
        self.body.get("verdict").and_then(Value::as_bool).unwrap_or(false)
    }

    pub fn body(&self) -> Value {
        let mut body = self.body.clone();
        body.insert("warnings".into(), json!(self.warnings));
        body.insert("map".into(), self.table.as_ref().map_or(Value::Null, MapTable::to_json));
        Value::Object(body)
    }

    pub fn to_json(&self, elapsed: Duration) -> String {
        let doc = json!({
            "body": self.body(),
            "timing": {"elapsed_ms": elapsed.as_secs_f64() * 1e3},
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
        text.push('\n');
        text
    }

    pub fn fixture_table(&self) -> String {
        let mut out = String::new();
        for (id, passed, detail) in &self.fixture_rows {
            let _ = writeln!(out, "{:<14} {:<4} {detail}", id, if *passed { "PASS" } else { "FAIL" });
        }
        out
    }
}

fn residual_json(e: &ResidualEntry) -> Value {
    json!({
        "name": e.name,
        "grid": e.grid.as_ref().map(grid_json),
        "max_residual": e.max_residual,
        "location": e.location,
        "tolerance": e.tolerance,
        "passed": e.passed,
    })
}

fn euler_like_json(r: &EulerLikeReport) -> Value {
    let method = match &r.method {
        CheckMethod::Polynomial => json!({"kind": "polynomial"}),
        CheckMethod::Numeric {
            max_deviation,
            location,
            samples,
        } => json!({
            "kind": "numeric",
            "max_deviation": max_deviation,
            "location": location.as_ref().map(|(p, i)| json!({"point": p, "component": i + 1})),
            "samples": samples,
        }),
    };
    json!({
        "verdict": r.verdict,
        "offending_terms": r.offending_terms.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "method": method,
        "notes": r.notes,
    })
}

fn config_json(cfg: &NormalConfig) -> Value {
    json!({
        "grid": grid_json(&cfg.grid),
        "integrator": {"steps": cfg.integrator.steps, "t0": cfg.integrator.t0},
        "sample_seed": SAMPLE_SEED,
    })
}

fn fail(report: &mut Report, kind: Failure, message: String) -> i32 {
    report.set("verdict", json!(false));
    report.set("error", json!({"kind": kind.label(), "message": message}));
    kind.exit_code()
}

fn finish(report: &mut Report, verdict: bool) -> i32 {
    report.set("verdict", json!(verdict));
    report.set("error", Value::Null);
    if verdict {
        0
    } else {
        1
    }
}

/// Runs one problem. The exit code follows the verdict or the failure kind.
pub fn solve(problem: &Problem, cfg: &NormalConfig) -> (Report, i32) {
    let mut report = Report::new(problem.task.name());
    report.set("input_digest", json!(problem.digest()));
    report.set("dim", json!(problem.dim));
    report.set("weights", json!(problem.weights.as_slice()));
    report.set("config", config_json(cfg));
    report.set("residuals", json!([]));
    let code = match run_task(problem, cfg, &mut report) {
        Ok(verdict) => finish(&mut report, verdict),
        Err(e) => {
            if let Some(r) = e.euler_like_report() {
                report.set("result", json!({"euler_like": euler_like_json(r)}));
            }
            fail(&mut report, classify(&e), e.to_string())
        }
    };
    (report, code)
}

fn record_pipeline(report: &mut Report, res: &NormalFormResult, cfg: &NormalConfig) -> Result<bool, NormalError> {
    report.set(
        "residuals",
        Value::Array(res.residuals.entries.iter().map(residual_json).collect()),
    );
    for w in &res.warnings {
        report.warn(w);
    }
    report.table = Some(MapTable::sample(&res.flow, cfg)?);
    Ok(res.verdict)
}

fn field_of(problem: &Problem) -> &VectorField {
    match &problem.payload {
        Payload::Field(x) => x,
        _ => unreachable!("validated payload"),
    }
}

fn run_task(problem: &Problem, cfg: &NormalConfig, report: &mut Report) -> Result<bool, NormalError> {
    let w = &problem.weights;
    match (problem.task, &problem.payload) {
        (Task::Check, _) => {
            let r = euler_like_check(field_of(problem), w);
            report.set("result", json!({"euler_like": euler_like_json(&r)}));
            Ok(r.verdict)
        }
        (Task::Linearize, _) => {
            let x = field_of(problem);
            let res = linearize(x, w, cfg)?;
            report.set(
                "result",
                json!({
                    "target": res.target.to_string(),
                    "path": if res.flow.path().is_exact() { "exact" } else { "numeric" },
                    "euler_like": euler_like_json(res.flow.path().provenance()),
                }),
            );
            record_pipeline(report, &res, cfg)
        }
        (Task::Morse, Payload::Function(f)) => {
            let res = morse_normalize(f, w, cfg)?;
            let fact = res.factorization.as_ref().expect("morse factorization");
            report.set(
                "result",
                json!({
                    "target": res.target.to_string(),
                    "normal_coordinates": fact.normal.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "identities": {
                        "symmetric": fact.is_symmetric(),
                        "quadratic": fact.quadratic_identity(),
                        "gradient": fact.gradient_identity(),
                        "hessian": fact.hessian_identity(),
                        "euler": fact.euler_identity(),
                    },
                }),
            );
            record_pipeline(report, &res, cfg)
        }
        (Task::Symplectic, Payload::Form(om)) => {
            let res = symplectic_normalize(om, w, cfg, problem.k)?;
            report.set(
                "result",
                json!({
                    "k": res.degree,
                    "target": res.target.to_string(),
                    "primitive": res.primitive.as_ref().map(ToString::to_string),
                }),
            );
            record_pipeline(report, &res, cfg)
        }
        (Task::IsotropicModel, Payload::Form(om)) => {
            let model = isotropic_model_form(om, w)?;
            report.set(
                "result",
                json!({
                    "omega2": model.omega2.to_string(),
                    "checks": model.checks.iter().map(|c| json!({
                        "name": c.name,
                        "passed": c.passed,
                        "detail": c.detail,
                    })).collect::<Vec<_>>(),
                }),
            );
            Ok(model.passed())
        }
        (Task::DomainProbe, _) => {
            let p = problem.point.as_deref().expect("validated point");
            let outcome = domain_probe(field_of(problem), w, p, &ProbeConfig::default());
            let detail = match &outcome {
                ProbeOutcome::ConvergedToBase { limit, distance } => json!({"limit": limit, "distance": distance}),
                ProbeOutcome::Escaped { s, norm } => json!({"s": s, "norm": norm}),
                ProbeOutcome::Undecided { distance } => json!({"distance": distance}),
            };
            report.set("result", json!({"outcome": outcome.label(), "detail": detail}));
            Ok(outcome.converged())
        }
        (Task::Component, payload) => {
            let k = problem.k.expect("validated k");
            let (component, degree) = match payload {
                Payload::Field(x) => component_of(x, w, k)?,
                Payload::Function(f) => component_of(f, w, k)?,
                Payload::Form(om) => component_of(om, w, k)?,
            };
            report.set("result", json!({"k": k, "component": component, "filtration_degree": degree}));
            Ok(true)
        }
        _ => unreachable!("payload validated against task"),
    }
}

fn component_of<O>(obj: &O, w: &WeightSequence, k: i64) -> Result<(String, String), NormalError>
where
    O: Graded + std::fmt::Display,
{
    let c = graded_component(obj, w, k)?;
    Ok((c.to_string(), filtration_degree(obj, w)?.to_string()))
}

/// The regression registry plus the known non-linearizable example.
pub fn fixtures(cfg: &NormalConfig) -> (Report, i32) {
    let mut report = Report::new("fixtures");
    report.set("config", config_json(cfg));
    let mut rows = Vec::new();
    let mut all = true;
    for case in regression_cases() {
        let entry = match closed_form_regression_with(case.id, &cfg.grid, cfg.integrator) {
            Ok(o) => {
                let matched = o.matched.map(|m| m.label());
                let symbolic = o.symbolic.map(|m| m.label());
                report.fixture_rows.push((
                    o.id.clone(),
                    o.passed,
                    format!(
                        "matched={} symbolic={} direct={:.3e} inverse={:.3e}",
                        matched.unwrap_or("none"),
                        symbolic.unwrap_or("none"),
                        o.direct_deviation,
                        o.inverse_deviation
                    ),
                ));
                all &= o.passed;
                json!({
                    "id": o.id,
                    "kind": "closed-form",
                    "passed": o.passed,
                    "field": o.field.to_string(),
                    "map": o.map.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "matched": matched,
                    "symbolic": symbolic,
                    "direct_deviation": o.direct_deviation,
                    "inverse_deviation": o.inverse_deviation,
                    "tolerance": REGRESSION_TOLERANCE,
                })
            }
            Err(e) => {
                all = false;
                report.fixture_rows.push((case.id.to_string(), false, e.to_string()));
                json!({"id": case.id, "kind": "closed-form", "passed": false, "error": e.to_string()})
            }
        };
        rows.push(entry);
    }

    // x ∂x + (2y + x²) ∂y with weights (1, 2) must be rejected.
    let x = VectorField::parse(2, &["x1", "2*x2 + x1^2"]).expect("fixture parses");
    let w = WeightSequence::new(vec![1, 2]).expect("fixture weights");
    let r = euler_like_check(&x, &w);
    let terms: Vec<String> = r.offending_terms.iter().map(ToString::to_string).collect();
    let rejected = !r.verdict && terms.iter().any(|t| t == "x1^2 ∂/∂x2 (weight 0)");
    all &= rejected;
    report
        .fixture_rows
        .push(("2b-m2".into(), rejected, format!("rejected: {}", terms.join(", "))));
    rows.push(json!({
        "id": "2b-m2",
        "kind": "rejection",
        "passed": rejected,
        "field": x.to_string(),
        "offending_terms": terms,
    }));

    report.set("fixtures", Value::Array(rows));
    let code = finish(&mut report, all);
    (report, code)
}
