//! Spec-file ingestion and the deterministic JSON report envelope.
//!
//! Spec files are JSON: `{"n": 1, "derivation": {"matrix": rows}}` or
//! `{"n": 1, "derivation": {"spectral": [{"eigenvalue": a, "eigenvectors":
//! rows}, ...]}}`, plus an optional `"label"`. Parsing is a manual walk of
//! the JSON value so that every error can name the offending field.

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::derivation::{DerivationForm, DerivationSpec, SpectralBlock};

#[derive(Debug, Clone, Error)]
pub enum SpecError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("dimension error at `{field}`: {message}")]
    Dimension { field: String, message: String },
}

impl SpecError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Schema { field: field.into(), message: message.into() }
    }

    fn dimension(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Dimension { field: field.into(), message: message.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SpecError::Syntax(_) => "SyntaxError",
            SpecError::Schema { .. } => "SchemaError",
            SpecError::Dimension { .. } => "DimensionError",
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            SpecError::Syntax(_) => None,
            SpecError::Schema { field, .. } | SpecError::Dimension { field, .. } => Some(field),
        }
    }
}

/// A parsed spec file: the derivation plus its optional label.
#[derive(Debug, Clone)]
pub struct ParsedSpec {
    pub spec: DerivationSpec,
    pub label: Option<String>,
}

pub fn parse_spec(text: &str) -> Result<ParsedSpec, SpecError> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| SpecError::schema("$", "spec must be a JSON object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "n" | "derivation" | "label") {
            return Err(SpecError::schema(key, "unknown field"));
        }
    }

    let n_value = obj.get("n").ok_or_else(|| SpecError::schema("n", "missing field"))?;
    let n = n_value
        .as_u64()
        .filter(|&v| v >= 1)
        .ok_or_else(|| SpecError::schema("n", "must be an integer >= 1"))?
        as usize;
    let d = 2 * n + 1;

    let label = match obj.get("label") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(SpecError::schema("label", "must be a string")),
    };

    let deriv = obj
        .get("derivation")
        .ok_or_else(|| SpecError::schema("derivation", "missing field"))?
        .as_object()
        .ok_or_else(|| SpecError::schema("derivation", "must be an object"))?;
    for key in deriv.keys() {
        if !matches!(key.as_str(), "matrix" | "spectral") {
            return Err(SpecError::schema(format!("derivation.{key}"), "unknown field"));
        }
    }

    let spec = match (deriv.get("matrix"), deriv.get("spectral")) {
        (Some(_), Some(_)) => {
            return Err(SpecError::schema(
                "derivation",
                "matrix and spectral are mutually exclusive",
            ))
        }
        (None, None) => {
            return Err(SpecError::schema("derivation", "needs either matrix or spectral"))
        }
        (Some(m), None) => {
            let rows = parse_matrix_rows(m, d, "derivation.matrix")?;
            DerivationSpec::from_matrix_rows(n, &rows)
                .map_err(|e| SpecError::schema("derivation.matrix", e.to_string()))?
        }
        (None, Some(s)) => {
            let blocks = parse_spectral(s, d)?;
            DerivationSpec::from_spectral(n, blocks)
                .map_err(|e| SpecError::schema("derivation.spectral", e.to_string()))?
        }
    };
    Ok(ParsedSpec { spec, label })
}

fn parse_matrix_rows(v: &Value, d: usize, field: &str) -> Result<Vec<Vec<f64>>, SpecError> {
    let rows = v
        .as_array()
        .ok_or_else(|| SpecError::schema(field, "must be an array of rows"))?;
    if rows.len() != d {
        return Err(SpecError::dimension(
            field,
            format!("need {d} rows, got {}", rows.len()),
        ));
    }
    let mut out = Vec::with_capacity(d);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| SpecError::schema(format!("{field}[{i}]"), "must be an array"))?;
        if row.len() != d {
            return Err(SpecError::dimension(
                format!("{field}[{i}]"),
                format!("need {d} entries, got {}", row.len()),
            ));
        }
        let mut r = Vec::with_capacity(d);
        for (j, entry) in row.iter().enumerate() {
            r.push(parse_real(entry, || format!("{field}[{i}][{j}]"))?);
        }
        out.push(r);
    }
    Ok(out)
}

fn parse_spectral(v: &Value, d: usize) -> Result<Vec<SpectralBlock>, SpecError> {
    let blocks = v
        .as_array()
        .ok_or_else(|| SpecError::schema("derivation.spectral", "must be an array"))?;
    if blocks.is_empty() {
        return Err(SpecError::schema("derivation.spectral", "must be non-empty"));
    }
    let mut out = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.iter().enumerate() {
        let path = format!("derivation.spectral[{i}]");
        let obj = block
            .as_object()
            .ok_or_else(|| SpecError::schema(&path, "must be an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "eigenvalue" | "eigenvectors") {
                return Err(SpecError::schema(format!("{path}.{key}"), "unknown field"));
            }
        }
        let eigenvalue = parse_real(
            obj.get("eigenvalue")
                .ok_or_else(|| SpecError::schema(format!("{path}.eigenvalue"), "missing field"))?,
            || format!("{path}.eigenvalue"),
        )?;
        let vecs = obj
            .get("eigenvectors")
            .ok_or_else(|| SpecError::schema(format!("{path}.eigenvectors"), "missing field"))?
            .as_array()
            .ok_or_else(|| {
                SpecError::schema(format!("{path}.eigenvectors"), "must be an array of vectors")
            })?;
        if vecs.is_empty() {
            return Err(SpecError::schema(format!("{path}.eigenvectors"), "must be non-empty"));
        }
        let mut eigenvectors = Vec::with_capacity(vecs.len());
        for (j, vec) in vecs.iter().enumerate() {
            let vpath = format!("{path}.eigenvectors[{j}]");
            let entries = vec
                .as_array()
                .ok_or_else(|| SpecError::schema(&vpath, "must be an array of numbers"))?;
            if entries.len() != d {
                return Err(SpecError::dimension(
                    &vpath,
                    format!("need {d} entries, got {}", entries.len()),
                ));
            }
            let mut coords = Vec::with_capacity(d);
            for (c, entry) in entries.iter().enumerate() {
                coords.push(parse_real(entry, || format!("{vpath}[{c}]"))?);
            }
            eigenvectors.push(coords);
        }
        out.push(SpectralBlock { eigenvalue, eigenvectors });
    }
    Ok(out)
}

fn parse_real(v: &Value, field: impl Fn() -> String) -> Result<f64, SpecError> {
    let x = v
        .as_f64()
        .ok_or_else(|| SpecError::schema(field(), "must be a number"))?;
    if !x.is_finite() {
        return Err(SpecError::schema(field(), "must be finite"));
    }
    Ok(x)
}

/// Canonical JSON value of a spec (sorted keys); `parse` of the rendered
/// string is the identity on parsed specs.
pub fn spec_to_value(spec: &DerivationSpec, label: Option<&str>) -> Value {
    let mut m = Map::new();
    m.insert("n".into(), Value::Number(Number::from(spec.n() as u64)));
    let mut dv = Map::new();
    match spec.form() {
        DerivationForm::Matrix(mat) => {
            dv.insert("matrix".into(), rows_value(&mat.to_rows()));
        }
        DerivationForm::Spectral(blocks) => {
            let bs: Vec<Value> = blocks
                .iter()
                .map(|b| {
                    let mut bm = Map::new();
                    bm.insert("eigenvalue".into(), real_value(b.eigenvalue));
                    bm.insert("eigenvectors".into(), rows_value(&b.eigenvectors));
                    Value::Object(bm)
                })
                .collect();
            dv.insert("spectral".into(), Value::Array(bs));
        }
    }
    m.insert("derivation".into(), Value::Object(dv));
    if let Some(l) = label {
        m.insert("label".into(), Value::String(l.into()));
    }
    Value::Object(m)
}

pub fn serialize_spec(spec: &DerivationSpec, label: Option<&str>) -> String {
    let mut s = serde_json::to_string_pretty(&spec_to_value(spec, label)).unwrap();
    s.push('\n');
    s
}

pub fn rows_value(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| reals_value(r)).collect())
}

pub fn reals_value(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| real_value(x)).collect())
}

/// Finite reals only; NaN/inf would serialize as null and break round-trips,
/// so reports must not contain them.
pub fn real_value(x: f64) -> Value {
    Value::Number(Number::from_f64(x).expect("report values must be finite"))
}

/// For statistics that may be undefined (empty sample bands): NaN -> null.
pub fn real_or_null(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// The report envelope. Key order is sorted (serde_json map), floats render
/// shortest-round-trip, so identical invocations produce identical bytes;
/// `wall_time_ms` is only present when timings were requested.
pub fn render_report(
    command: &str,
    inputs: Value,
    params: Value,
    results: Value,
    wall_time_ms: Option<f64>,
) -> String {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(command.into()));
    m.insert("inputs".into(), inputs);
    m.insert("params".into(), params);
    m.insert("results".into(), results);
    m.insert("tool_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    if let Some(ms) = wall_time_ms {
        m.insert("wall_time_ms".into(), real_value(ms));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).unwrap();
    s.push('\n');
    s
}

/// Error payload printed on failed invocations: kind, offending field when
/// known, and a message.
pub fn render_error(kind: &str, field: Option<&str>, message: &str) -> String {
    let mut e = Map::new();
    e.insert("kind".into(), Value::String(kind.into()));
    if let Some(f) = field {
        e.insert("field".into(), Value::String(f.into()));
    }
    e.insert("message".into(), Value::String(message.into()));
    let mut m = Map::new();
    m.insert("error".into(), Value::Object(e));
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).unwrap();
    s.push('\n');
    s
}
