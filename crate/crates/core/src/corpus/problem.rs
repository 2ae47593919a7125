//! Problem files: a derivative–antiderivative pair on an interval together
//! with its exceptional set and, optionally, the expected decomposition.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use super::cantor::cantor_function;
use super::expr::{Expr, ParseError};
use crate::exceptional::ExceptionalSet;
use crate::kernel::{extend, ExtendedFunction, Interval, PointFn};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("in `{path}`: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

impl ProblemError {
    /// `IO_ERROR`, `SCHEMA_ERROR` or `PARSE_ERROR`.
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemError::Io { .. } => "IO_ERROR",
            ProblemError::Schema { .. } => "SCHEMA_ERROR",
            ProblemError::Parse { .. } => "PARSE_ERROR",
        }
    }

    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ProblemError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Cantor,
    Zero,
}

impl Builtin {
    fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "cantor" => Some(Builtin::Cantor),
            "zero" => Some(Builtin::Zero),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Cantor => "cantor",
            Builtin::Zero => "zero",
        }
    }
}

impl PointFn for Builtin {
    fn eval(&self, x: f64) -> Option<f64> {
        match self {
            Builtin::Cantor => cantor_function(x).ok(),
            Builtin::Zero => Some(0.0),
        }
    }
}

/// Either half of a problem's function pair.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSource {
    Expr(Expr),
    Builtin(Builtin),
}

impl FunctionSource {
    fn point_fn(&self) -> Arc<dyn PointFn> {
        match self {
            FunctionSource::Expr(e) => Arc::new(e.clone()),
            FunctionSource::Builtin(b) => Arc::new(*b),
        }
    }
}

impl fmt::Display for FunctionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSource::Expr(e) => write!(f, "{e}"),
            FunctionSource::Builtin(b) => write!(f, "builtin {}", b.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default)]
    pub continuous_at_e: bool,
    #[serde(default)]
    pub absolutely_continuous: bool,
}

/// An expected part of the decomposition: a number or a failure status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExpectedValue {
    Value(f64),
    Divergent,
    NotBs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub delta_f: Option<f64>,
    pub riemann: Option<ExpectedValue>,
    pub residue: Option<ExpectedValue>,
    /// How the expected numbers were obtained.
    pub provenance: Option<String>,
}

/// Per-problem overrides for the singularity-adapted gauge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeHints {
    pub h0: Option<f64>,
    pub c: Option<f64>,
    pub gamma0: Option<f64>,
    pub dist_power: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub ambient: Interval,
    pub antiderivative: FunctionSource,
    pub derivative: FunctionSource,
    pub exceptional: ExceptionalSet,
    pub flags: Flags,
    pub expected: Option<Expected>,
    /// Tolerance the expectations are stated at.
    pub tol: Option<f64>,
    pub gauge: GaugeHints,
}

impl ProblemSpec {
    /// `F_ex`.
    pub fn extended_antiderivative(&self) -> ExtendedFunction {
        extend(self.antiderivative.point_fn(), self.exceptional.clone())
    }

    /// `f_ex`.
    pub fn extended_derivative(&self) -> ExtendedFunction {
        extend(self.derivative.point_fn(), self.exceptional.clone())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    name: String,
    interval: [f64; 2],
    #[serde(rename = "F")]
    antiderivative: RawFunction,
    f: RawFunction,
    #[serde(rename = "E")]
    exceptional: RawSet,
    #[serde(default)]
    flags: Flags,
    #[serde(default)]
    expected: Option<RawExpected>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    gauge: Option<GaugeHints>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFunction {
    Expr(String),
    Builtin(RawBuiltin),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBuiltin {
    builtin: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    points: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpected {
    #[serde(rename = "delta_F", default)]
    delta_f: Option<f64>,
    #[serde(default)]
    riemann: Option<RawExpectedValue>,
    #[serde(default)]
    residue: Option<RawExpectedValue>,
    #[serde(default)]
    provenance: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawExpectedValue {
    Number(f64),
    Status(String),
}

/// Reads and validates a problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text)
}

/// Validates a problem given as JSON text.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ProblemError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawProblem = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        ProblemError::schema(path, e.into_inner().to_string())
    })?;
    de.end()
        .map_err(|e| ProblemError::schema(".", e.to_string()))?;
    validate(raw)
}

fn validate(raw: RawProblem) -> Result<ProblemSpec, ProblemError> {
    if raw.name.is_empty()
        || !raw
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(ProblemError::schema(
            "name",
            "must be a nonempty identifier of letters, digits, `_` or `-`",
        ));
    }
    let [lo, hi] = raw.interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(ProblemError::schema(
            "interval",
            format!("need finite lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let ambient = Interval::new(lo, hi).expect("checked above");
    let antiderivative = function_source(raw.antiderivative, "F")?;
    let derivative = function_source(raw.f, "f")?;
    let exceptional = exceptional_set(raw.exceptional, &ambient)?;
    let expected = raw.expected.map(expected).transpose()?;
    if let Some(tol) = raw.tol {
        if !(tol.is_finite() && tol >= 1e-12) {
            return Err(ProblemError::schema("tol", "must be a finite number >= 1e-12"));
        }
    }
    let gauge = raw.gauge.unwrap_or_default();
    for (field, value) in [
        ("gauge.h0", gauge.h0),
        ("gauge.c", gauge.c),
        ("gauge.gamma0", gauge.gamma0),
        ("gauge.dist_power", gauge.dist_power),
    ] {
        if matches!(value, Some(v) if !(v.is_finite() && v > 0.0)) {
            return Err(ProblemError::schema(field, "must be positive and finite"));
        }
    }
    Ok(ProblemSpec {
        name: raw.name,
        ambient,
        antiderivative,
        derivative,
        exceptional,
        flags: raw.flags,
        expected,
        tol: raw.tol,
        gauge,
    })
}

fn function_source(raw: RawFunction, field: &str) -> Result<FunctionSource, ProblemError> {
    match raw {
        RawFunction::Expr(text) => Expr::parse(&text)
            .map(FunctionSource::Expr)
            .map_err(|source| ProblemError::Parse {
                path: field.to_string(),
                source,
            }),
        RawFunction::Builtin(RawBuiltin { builtin }) => Builtin::from_name(&builtin)
            .map(FunctionSource::Builtin)
            .ok_or_else(|| {
                ProblemError::schema(
                    format!("{field}.builtin"),
                    format!("unknown builtin `{builtin}` (known: cantor, zero)"),
                )
            }),
    }
}

fn exceptional_set(raw: RawSet, ambient: &Interval) -> Result<ExceptionalSet, ProblemError> {
    let no_points = |set: ExceptionalSet| match raw.points {
        Some(_) => Err(ProblemError::schema(
            "E.points",
            format!("only allowed when type is `points`, not `{}`", raw.kind),
        )),
        None => Ok(set),
    };
    match raw.kind.as_str() {
        "empty" => no_points(ExceptionalSet::Empty),
        "cantor" => no_points(ExceptionalSet::cantor(*ambient)),
        "points" => {
            let points = raw
                .points
                .clone()
                .ok_or_else(|| ProblemError::schema("E.points", "required when type is `points`"))?;
            for (i, &p) in points.iter().enumerate() {
                if !(p > ambient.lo() && p < ambient.hi()) {
                    return Err(ProblemError::schema(
                        format!("E.points[{i}]"),
                        format!("{p} is not interior to {ambient}; interval endpoints may not belong to E"),
                    ));
                }
            }
            ExceptionalSet::points(points)
                .map_err(|e| ProblemError::schema("E.points", e.to_string()))
        }
        other => Err(ProblemError::schema(
            "E.type",
            format!("unknown set type `{other}` (known: empty, points, cantor)"),
        )),
    }
}

fn expected(raw: RawExpected) -> Result<Expected, ProblemError> {
    let status = |value: Option<RawExpectedValue>, field: &str, word: &str, status: ExpectedValue| {
        match value {
            None => Ok(None),
            Some(RawExpectedValue::Number(v)) => Ok(Some(ExpectedValue::Value(v))),
            Some(RawExpectedValue::Status(s)) if s == word => Ok(Some(status)),
            Some(RawExpectedValue::Status(s)) => Err(ProblemError::schema(
                format!("expected.{field}"),
                format!("expected a number or \"{word}\", got \"{s}\""),
            )),
        }
    };
    Ok(Expected {
        delta_f: raw.delta_f,
        riemann: status(raw.riemann, "riemann", "DIVERGENT", ExpectedValue::Divergent)?,
        residue: status(raw.residue, "residue", "NOT_BS", ExpectedValue::NotBs)?,
        provenance: raw.provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAVISIDE: &str = r#"{
        "name": "step",
        "interval": [-1, 1],
        "F": "cases(x < 0 => 0, else => 1)",
        "f": "0",
        "E": {"type": "points", "points": [0]},
        "flags": {"continuous_at_e": false, "absolutely_continuous": false},
        "expected": {"delta_F": 1, "riemann": 0, "residue": 1}
    }"#;

    fn schema_path(text: &str) -> String {
        match parse_problem(text) {
            Err(ProblemError::Schema { path, .. }) => path,
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn loads_a_valid_problem() {
        let p = parse_problem(HEAVISIDE).unwrap();
        assert_eq!(p.name, "step");
        assert_eq!(p.exceptional, ExceptionalSet::FinitePoints(vec![0.0]));
        let expected = p.expected.clone().unwrap();
        assert_eq!(expected.riemann, Some(ExpectedValue::Value(0.0)));
        let big_f = p.extended_antiderivative();
        assert_eq!(big_f.value(0.5), 1.0);
        assert_eq!(big_f.value(0.0), 0.0);
    }

    #[test]
    fn endpoint_in_e_is_rejected() {
        let text = HEAVISIDE.replace("[-1, 1]", "[0, 1]");
        assert_eq!(schema_path(&text), "E.points[0]");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = HEAVISIDE.replace("\"name\"", "\"colour\": 1, \"name\"");
        assert_eq!(schema_path(&text), "colour");
        let text = HEAVISIDE.replace("\"absolutely_continuous\"", "\"smooth\": true, \"absolutely_continuous\"");
        assert_eq!(schema_path(&text), "flags.smooth");
    }

    #[test]
    fn status_words() {
        let text = HEAVISIDE.replace("\"riemann\": 0", "\"riemann\": \"DIVERGENT\"");
        let p = parse_problem(&text).unwrap();
        assert_eq!(p.expected.unwrap().riemann, Some(ExpectedValue::Divergent));
        let text = HEAVISIDE.replace("\"riemann\": 0", "\"riemann\": \"NOT_BS\"");
        assert_eq!(schema_path(&text), "expected.riemann");
    }

    #[test]
    fn expression_errors_are_nested() {
        let text = HEAVISIDE.replace("\"f\": \"0\"", "\"f\": \"2*+x\"");
        match parse_problem(&text) {
            Err(ProblemError::Parse { path, source }) => {
                assert_eq!(path, "f");
                assert_eq!(source.offset, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_schema_errors() {
        assert_eq!(schema_path(&HEAVISIDE.replace("[-1, 1]", "[1, -1]")), "interval");
        assert_eq!(schema_path(&HEAVISIDE.replace("\"points\", \"points\"", "\"blob\", \"points\"")), "E.type");
        assert_eq!(
            schema_path(&HEAVISIDE.replace("\"type\": \"points\", \"points\": [0]", "\"type\": \"cantor\", \"points\": [0]")),
            "E.points"
        );
        assert_eq!(schema_path(&HEAVISIDE.replace("\"f\": \"0\"", "\"f\": {\"builtin\": \"nope\"}")), "f.builtin");
        assert_eq!(schema_path(&HEAVISIDE.replace("\"name\": \"step\"", "\"name\": \"a b\"")), "name");
        assert!(matches!(parse_problem("{"), Err(ProblemError::Schema { .. })));
        assert!(matches!(
            load_problem("/nonexistent/problem.json"),
            Err(ProblemError::Io { .. })
        ));
    }
}
