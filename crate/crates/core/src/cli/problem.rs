use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{json, Value};

use super::CliError;
use crate::flow::IntegratorConfig;
use crate::verify::GridSpec;
use crate::weighted::{Graded, ScalarField, TwoForm, VectorField, WeightSequence};

const TOP_KEYS: &[&str] = &[
    "dim",
    "weights",
    "task",
    "vector_field",
    "function",
    "two_form",
    "grid",
    "integrator",
    "point",
    "k",
];
const GRID_KEYS: &[&str] = &["radius", "points_per_axis"];
const INTEGRATOR_KEYS: &[&str] = &["steps", "t0"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Check,
    Linearize,
    Morse,
    Symplectic,
    IsotropicModel,
    DomainProbe,
    Component,
}

impl Task {
    pub fn parse(s: &str) -> Option<Task> {
        Some(match s {
            "check" => Task::Check,
            "linearize" => Task::Linearize,
            "morse" => Task::Morse,
            "symplectic" => Task::Symplectic,
            "isotropic-model" => Task::IsotropicModel,
            "domain-probe" => Task::DomainProbe,
            "component" => Task::Component,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Check => "check",
            Task::Linearize => "linearize",
            Task::Morse => "morse",
            Task::Symplectic => "symplectic",
            Task::IsotropicModel => "isotropic-model",
            Task::DomainProbe => "domain-probe",
            Task::Component => "component",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Field(VectorField),
    Function(ScalarField),
    Form(TwoForm),
}

impl Payload {
    fn key(&self) -> &'static str {
        match self {
            Payload::Field(_) => "vector_field",
            Payload::Function(_) => "function",
            Payload::Form(_) => "two_form",
        }
    }

    /// Canonical JSON rendering: every expression printed in expanded form.
    fn canonical_json(&self) -> Value {
        match self {
            Payload::Field(x) => json!(x.canonical().components().iter().map(|e| e.to_string()).collect::<Vec<_>>()),
            Payload::Function(f) => json!(f.canonical().body().to_string()),
            Payload::Form(om) => {
                let om = om.canonical();
                let n = om.dim();
                let mut map = BTreeMap::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let c = om.upper(i, j);
                        if !c.is_zero() {
                            map.insert(format!("{},{}", i + 1, j + 1), c.to_string());
                        }
                    }
                }
                json!(map)
            }
        }
    }
}

#[derive(Deserialize)]
struct RawGrid {
    radius: f64,
    points_per_axis: usize,
}

#[derive(Deserialize)]
struct RawIntegrator {
    steps: Option<usize>,
    t0: Option<f64>,
}

#[derive(Deserialize)]
struct RawProblem {
    dim: usize,
    weights: Vec<u32>,
    task: String,
    vector_field: Option<Vec<String>>,
    function: Option<String>,
    two_form: Option<BTreeMap<String, String>>,
    grid: Option<RawGrid>,
    integrator: Option<RawIntegrator>,
    point: Option<Vec<f64>>,
    k: Option<i64>,
}

/// A validated problem: every expression parsed, every payload consistent
/// with the task.
#[derive(Clone, Debug)]
pub struct Problem {
    pub dim: usize,
    pub weights: WeightSequence,
    pub task: Task,
    pub payload: Payload,
    pub grid: Option<GridSpec>,
    pub integrator: Option<IntegratorConfig>,
    pub point: Option<Vec<f64>>,
    pub k: Option<i64>,
}

fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

fn unknown_keys(obj: &serde_json::Map<String, Value>, allowed: &[&str], prefix: &str) -> Vec<String> {
    obj.keys()
        .filter(|k| !allowed.contains(&k.as_str()))
        .map(|k| format!("{prefix}{k}"))
        .collect()
}

fn reject_unknown(value: &Value) -> Result<(), CliError> {
    let Some(top) = value.as_object() else {
        return Err(schema("problem must be a JSON object"));
    };
    let mut unknown = unknown_keys(top, TOP_KEYS, "");
    if let Some(Value::Object(g)) = top.get("grid") {
        unknown.extend(unknown_keys(g, GRID_KEYS, "grid."));
    }
    if let Some(Value::Object(i)) = top.get("integrator") {
        unknown.extend(unknown_keys(i, INTEGRATOR_KEYS, "integrator."));
    }
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(schema(format!("unknown keys: {}", unknown.join(", "))))
    }
}

fn pair_key(key: &str, dim: usize) -> Result<(usize, usize), CliError> {
    let bad = || schema(format!("two_form key {key:?} must be \"i,j\" with 1 <= i < j <= {dim}"));
    let (i, j) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || i >= j || j > dim {
        return Err(bad());
    }
    Ok((i, j))
}

impl Problem {
    pub fn from_json(text: &str, lax: bool) -> Result<Problem, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Json(e.to_string()))?;
        if !lax {
            reject_unknown(&value)?;
        }
        let raw: RawProblem = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
        Problem::validate(raw, lax)
    }

    fn validate(raw: RawProblem, lax: bool) -> Result<Problem, CliError> {
        let dim = raw.dim;
        if dim == 0 {
            return Err(schema("dim must be positive"));
        }
        if raw.weights.len() != dim {
            return Err(schema(format!("weights has length {} but dim is {dim}", raw.weights.len())));
        }
        let weights = WeightSequence::new(raw.weights).map_err(|e| schema(e.to_string()))?;
        let task = Task::parse(&raw.task).ok_or_else(|| schema(format!("unknown task {:?}", raw.task)))?;

        let mut payloads = Vec::new();
        if let Some(v) = &raw.vector_field {
            let texts: Vec<&str> = v.iter().map(String::as_str).collect();
            payloads.push(Payload::Field(VectorField::parse(dim, &texts).map_err(|e| schema(format!("vector_field: {e}")))?));
        }
        if let Some(f) = &raw.function {
            payloads.push(Payload::Function(ScalarField::parse(dim, f).map_err(|e| schema(format!("function: {e}")))?));
        }
        if let Some(m) = &raw.two_form {
            let entries = m
                .iter()
                .map(|(k, v)| Ok((pair_key(k, dim)?, v.as_str())))
                .collect::<Result<Vec<_>, CliError>>()?;
            payloads.push(Payload::Form(TwoForm::parse(dim, &entries).map_err(|e| schema(format!("two_form: {e}")))?));
        }
        if payloads.len() != 1 {
            return Err(schema(format!(
                "exactly one of vector_field, function, two_form is required, found {}",
                payloads.len()
            )));
        }
        let payload = payloads.pop().expect("one payload");
        let expected = match task {
            Task::Check | Task::Linearize | Task::DomainProbe => Some("vector_field"),
            Task::Morse => Some("function"),
            Task::Symplectic | Task::IsotropicModel => Some("two_form"),
            Task::Component => None,
        };
        if let Some(key) = expected {
            if payload.key() != key {
                return Err(schema(format!("task {} takes {key}, not {}", task.name(), payload.key())));
            }
        }

        let grid = raw
            .grid
            .map(|g| GridSpec::new(g.radius, g.points_per_axis))
            .transpose()
            .map_err(|e| schema(format!("grid: {e}")))?;
        let integrator = raw
            .integrator
            .map(|i| {
                let d = IntegratorConfig::default();
                IntegratorConfig::new(i.steps.unwrap_or(d.steps), i.t0.unwrap_or(d.t0))
            })
            .transpose()
            .map_err(|e| schema(format!("integrator: {e}")))?;

        match (task, &raw.point) {
            (Task::DomainProbe, None) => return Err(schema("domain-probe needs a point")),
            (Task::DomainProbe, Some(p)) if p.len() != dim => {
                return Err(schema(format!("point has length {} but dim is {dim}", p.len())))
            }
            (Task::DomainProbe, Some(p)) if p.iter().any(|v| !v.is_finite()) => {
                return Err(schema("point must be finite"))
            }
            (Task::DomainProbe, _) => {}
            (_, Some(_)) if !lax => return Err(schema(format!("task {} takes no point", task.name()))),
            _ => {}
        }
        match (task, raw.k) {
            (Task::Component, None) => return Err(schema("component needs k")),
            (Task::Component | Task::Symplectic, _) => {}
            (_, Some(_)) if !lax => return Err(schema(format!("task {} takes no k", task.name()))),
            _ => {}
        }

        Ok(Problem {
            dim,
            weights,
            task,
            payload,
            grid,
            integrator,
            point: if task == Task::DomainProbe { raw.point } else { None },
            k: if matches!(task, Task::Component | Task::Symplectic) { raw.k } else { None },
        })
    }

    /// The problem with every expression canonicalized and keys sorted.
    pub fn canonical_json(&self) -> Value {
        let mut v = json!({
            "dim": self.dim,
            "weights": self.weights.as_slice(),
            "task": self.task.name(),
        });
        let obj = v.as_object_mut().expect("object");
        obj.insert(self.payload.key().into(), self.payload.canonical_json());
        if let Some(g) = &self.grid {
            obj.insert("grid".into(), json!({"radius": g.radius(), "points_per_axis": g.points_per_axis()}));
        }
        if let Some(i) = &self.integrator {
            obj.insert("integrator".into(), json!({"steps": i.steps, "t0": i.t0}));
        }
        if let Some(p) = &self.point {
            obj.insert("point".into(), json!(p));
        }
        if let Some(k) = self.k {
            obj.insert("k".into(), json!(k));
        }
        v
    }

    /// SHA-256 of the canonical problem.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_json().to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_linearize_problem() {
        let p = Problem::from_json(
            r#"{"dim":2,"weights":[1,2],"task":"linearize","vector_field":["x1 + x2^2","2*x2"]}"#,
            false,
        )
        .unwrap();
        assert_eq!(p.task, Task::Linearize);
        assert!(matches!(p.payload, Payload::Field(_)));
    }

    #[test]
    fn strict_mode_rejects_unknown_keys() {
        let text = r#"{"dim":2,"weights":[1,1],"task":"check","vector_field":["x1","x2"],"colour":1}"#;
        match Problem::from_json(text, false) {
            Err(CliError::Schema(m)) => assert!(m.contains("colour")),
            other => panic!("{other:?}"),
        }
        assert!(Problem::from_json(text, true).is_ok());
        let nested = r#"{"dim":2,"weights":[1,1],"task":"check","vector_field":["x1","x2"],"grid":{"radius":0.3,"points_per_axis":5,"extra":0}}"#;
        assert!(Problem::from_json(nested, false).is_err());
    }

    #[test]
    fn payload_must_match_task() {
        let text = r#"{"dim":2,"weights":[1,1],"task":"morse","vector_field":["x1","x2"]}"#;
        assert!(matches!(Problem::from_json(text, false), Err(CliError::Schema(_))));
        let two = r#"{"dim":2,"weights":[1,1],"task":"component","k":1,"function":"x1","vector_field":["x1","x2"]}"#;
        assert!(Problem::from_json(two, false).is_err());
    }

    #[test]
    fn two_form_keys_are_checked() {
        let bad = r#"{"dim":2,"weights":[1,1],"task":"symplectic","two_form":{"2,1":"1"}}"#;
        assert!(Problem::from_json(bad, false).is_err());
        let out = r#"{"dim":2,"weights":[1,1],"task":"symplectic","two_form":{"1,3":"1"}}"#;
        assert!(Problem::from_json(out, false).is_err());
    }

    #[test]
    fn expressions_parse_at_load_time() {
        let text = r#"{"dim":2,"weights":[1,1],"task":"check","vector_field":["x1 +","x2"]}"#;
        assert!(matches!(Problem::from_json(text, false), Err(CliError::Schema(_))));
        let out_of_range = r#"{"dim":2,"weights":[1,1],"task":"check","vector_field":["x3","x2"]}"#;
        assert!(Problem::from_json(out_of_range, false).is_err());
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = Problem::from_json(r#"{"dim":2,"weights":[1,2],"task":"check","vector_field":["x1 + x2^2","2*x2"]}"#, false).unwrap();
        let b = Problem::from_json(r#"{"task":"check","vector_field":["x2*x2 + x1","x2+x2"],"weights":[1,2],"dim":2}"#, false).unwrap();
        assert_eq!(a.digest(), b.digest());
    }
}
