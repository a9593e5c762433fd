//! Germ specification files.
//!
//! ```json
//! {"dimension": 2, "truncation_degree": 8, "map": ["z1/2 + z2^2", "z2/3"],
//!  "tolerance": "1/1000000000", "bundle": "tangent"}
//! ```
//!
//! `bundle` is one of `"tangent"`, `{"rank": r, "cocycle": [[...], ...]}`,
//! `{"tensor": {"p": 1, "q": 0, "k_can": 0}}` or `{"line": "a+bi"}`.
//! Numbers may be decimals or rational strings such as `"1/3"`.

use hopf_core::cohomology::TensorBundleSpec;
use hopf_core::series::{parse_series, SeriesMatrix, TruncatedMapGerm, TruncatedSeries};
use hopf_core::{Error, C};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Malformed input, with the offending field in the message.
#[derive(Debug)]
pub struct InputError(pub String);

impl InputError {
    pub fn field(name: &str, message: impl std::fmt::Display) -> Self {
        InputError(format!("field `{name}`: {message}"))
    }
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub dimension: usize,
    pub truncation_degree: usize,
    pub map: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bundle: Option<Value>,
}

#[derive(Clone, Debug)]
pub enum BundleChoice {
    Tangent,
    Cocycle(Vec<Vec<String>>),
    Tensor(TensorBundleSpec),
}

/// A spec with every field parsed.
pub struct Parsed {
    pub germ: TruncatedMapGerm<f64>,
    pub tolerance: f64,
    pub bundle: Option<BundleChoice>,
}

pub fn read_spec(text: &str) -> Result<SpecFile, InputError> {
    serde_json::from_str(text).map_err(|e| InputError(format!("spec: {e}")))
}

/// A constant expression such as `0.5`, `1/3` or `0.2-0.1i`.
pub fn parse_constant(text: &str) -> Result<C<f64>, Error> {
    let s = parse_series::<f64>(text, 1, 0)?;
    Ok(s.constant_term())
}

pub fn parse_number(field: &str, v: &Value) -> Result<f64, InputError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| InputError::field(field, "not representable as f64")),
        Value::String(s) => {
            let c = parse_constant(s).map_err(|e| InputError::field(field, e))?;
            if c.im != 0.0 {
                return Err(InputError::field(field, "expected a real number"));
            }
            Ok(c.re)
        }
        _ => Err(InputError::field(field, "expected a number or a \"p/q\" string")),
    }
}

fn parse_bundle(v: &Value) -> Result<BundleChoice, InputError> {
    let bad =
        || InputError::field("bundle", "expected \"tangent\", {\"rank\", \"cocycle\"}, {\"tensor\"} or {\"line\"}");
    match v {
        Value::String(s) if s == "tangent" => Ok(BundleChoice::Tangent),
        Value::String(s) => named_bundle(s).map(BundleChoice::Tensor).map_err(|e| InputError::field("bundle", e)),
        Value::Object(o) if o.contains_key("cocycle") => {
            let rank = o
                .get("rank")
                .and_then(Value::as_u64)
                .ok_or_else(|| InputError::field("bundle.rank", "expected a positive integer"))?
                as usize;
            let rows: Vec<Vec<String>> = serde_json::from_value(o["cocycle"].clone())
                .map_err(|e| InputError::field("bundle.cocycle", format!("expected a matrix of expressions ({e})")))?;
            if rank == 0 || rows.len() != rank || rows.iter().any(|r| r.len() != rank) {
                return Err(InputError::field("bundle.cocycle", format!("expected {rank}×{rank} expressions")));
            }
            Ok(BundleChoice::Cocycle(rows))
        }
        Value::Object(o) if o.contains_key("tensor") => {
            let t = &o["tensor"];
            let get = |k: &str| t.get(k).and_then(Value::as_i64);
            let (p, q) = match (get("p"), get("q")) {
                (Some(p), Some(q)) if p >= 0 && q >= 0 => (p as usize, q as usize),
                _ => return Err(InputError::field("bundle.tensor", "p and q must be non-negative integers")),
            };
            let k = get("k_can").unwrap_or(0) as i32;
            let mut spec = TensorBundleSpec::tensor(p, q, k);
            if let Some(line) = t.get("line") {
                let text = line.as_str().ok_or_else(|| InputError::field("bundle.tensor.line", "expected a string"))?;
                spec.line_character =
                    Some(parse_constant(text).map_err(|e| InputError::field("bundle.tensor.line", e))?);
            }
            Ok(BundleChoice::Tensor(spec))
        }
        Value::Object(o) if o.contains_key("line") => {
            let text = o["line"].as_str().ok_or_else(|| InputError::field("bundle.line", "expected a string"))?;
            let lambda = parse_constant(text).map_err(|e| InputError::field("bundle.line", e))?;
            if lambda.norm() == 0.0 {
                return Err(InputError::field("bundle.line", "character must be nonzero"));
            }
            Ok(BundleChoice::Tensor(TensorBundleSpec::line(lambda)))
        }
        _ => Err(bad()),
    }
}

/// `trivial`, `canonical`, `tangent`, `cotangent`, `forms:l`,
/// `endomorphisms`, `tensor:p,q,k` or `line:λ`.
pub fn named_bundle(name: &str) -> Result<TensorBundleSpec, String> {
    let (head, arg) = name.split_once(':').map_or((name, None), |(h, a)| (h, Some(a)));
    let int = |s: &str| s.trim().parse::<i64>().map_err(|_| format!("`{s}` is not an integer"));
    match (head, arg) {
        ("trivial" | "structure", None) => Ok(TensorBundleSpec::structure_sheaf()),
        ("canonical", None) => Ok(TensorBundleSpec::canonical()),
        ("tangent", None) => Ok(TensorBundleSpec::tangent()),
        ("cotangent", None) => Ok(TensorBundleSpec::forms(1)),
        ("endomorphisms", None) => Ok(TensorBundleSpec::forms_with_endomorphisms()),
        ("forms", Some(l)) => Ok(TensorBundleSpec::forms(int(l)?.max(0) as usize)),
        ("tensor", Some(args)) => {
            let v: Vec<i64> = args.split(',').map(int).collect::<Result<_, _>>()?;
            match v[..] {
                [p, q, k] if p >= 0 && q >= 0 => Ok(TensorBundleSpec::tensor(p as usize, q as usize, k as i32)),
                _ => Err("tensor:p,q,k with p, q >= 0".into()),
            }
        }
        ("line", Some(l)) => Ok(TensorBundleSpec::line(parse_constant(l).map_err(|e| e.to_string())?)),
        _ => Err(format!("unknown bundle `{name}`")),
    }
}

/// The JSON form of a tensor bundle, as accepted in `bundle`.
pub fn tensor_bundle_json(spec: &TensorBundleSpec) -> Value {
    match spec.line_character {
        Some(l) if spec.p == 0 && spec.q == 0 && spec.k_can == 0 => {
            serde_json::json!({ "line": hopf_core::Series::constant(1, 0, l).to_string() })
        }
        Some(l) => serde_json::json!({ "tensor": {
            "p": spec.p, "q": spec.q, "k_can": spec.k_can,
            "line": hopf_core::Series::constant(1, 0, l).to_string(),
        } }),
        None => serde_json::json!({ "tensor": { "p": spec.p, "q": spec.q, "k_can": spec.k_can } }),
    }
}

impl SpecFile {
    /// Parses and validates every field; `tol` and `degree` override the file.
    pub fn parse(&mut self, tol: Option<f64>, degree: Option<usize>) -> Result<Parsed, InputError> {
        if let Some(d) = degree {
            self.truncation_degree = d;
        }
        if let Some(t) = tol {
            self.tolerance = Some(serde_json::json!(t));
        }
        if self.dimension == 0 {
            return Err(InputError::field("dimension", "must be at least 1"));
        }
        if self.truncation_degree < 2 {
            return Err(InputError::field("truncation_degree", "must be at least 2"));
        }
        if self.map.len() != self.dimension {
            return Err(InputError::field(
                "map",
                format!("has {} entries, dimension is {}", self.map.len(), self.dimension),
            ));
        }
        let tolerance = match &self.tolerance {
            Some(v) => parse_number("tolerance", v)?,
            None => DEFAULT_TOLERANCE,
        };
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(InputError::field("tolerance", "must be positive"));
        }
        let (n, cap) = (self.dimension, self.truncation_degree);
        let components = self
            .map
            .iter()
            .enumerate()
            .map(|(i, t)| parse_series(t, n, cap).map_err(|e| InputError::field(&format!("map[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let germ = TruncatedMapGerm::new(components).map_err(|e| match e {
            Error::NonGerm { component } => InputError::field(&format!("map[{}]", component - 1), e),
            _ => InputError::field("map", e),
        })?;
        let bundle = self.bundle.as_ref().map(parse_bundle).transpose()?;
        Ok(Parsed { germ, tolerance, bundle })
    }
}

pub fn cocycle_matrix(rows: &[Vec<String>], n: usize, cap: usize) -> Result<SeriesMatrix<f64>, InputError> {
    let r = rows.len();
    let mut entries: Vec<TruncatedSeries<f64>> = Vec::with_capacity(r * r);
    for (i, row) in rows.iter().enumerate() {
        for (j, t) in row.iter().enumerate() {
            entries
                .push(parse_series(t, n, cap).map_err(|e| InputError::field(&format!("bundle.cocycle[{i}][{j}]"), e))?);
        }
    }
    SeriesMatrix::from_entries(r, r, entries).map_err(|e| InputError::field("bundle.cocycle", e))
}
