//! JSON documents for tensors and point correspondences.
//!
//! A tensor document is
//! `{"kind": "trifocal", "complex": bool, "slices": [T1, T2, T3]}` where each
//! slice is a list of three rows. Real entries are numbers; complex entries
//! are `[re, im]` pairs.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::estimate::PointTriple;
use crate::linalg::{Scalar, C64};
use crate::tensor::{ComplexTensor, RealTensor, TrifocalTensor};

/// A tensor read from a document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnyTensor {
    Real(RealTensor),
    Complex(ComplexTensor),
}

impl AnyTensor {
    pub fn to_complex(&self) -> ComplexTensor {
        match self {
            AnyTensor::Real(t) => t.to_complex(),
            AnyTensor::Complex(t) => *t,
        }
    }

    pub fn as_real(&self) -> Option<&RealTensor> {
        match self {
            AnyTensor::Real(t) => Some(t),
            AnyTensor::Complex(_) => None,
        }
    }
}

fn slices_json<T: Scalar>(t: &TrifocalTensor<T>, entry: impl Fn(T) -> Value) -> Value {
    Value::Array(
        t.slices
            .iter()
            .map(|s| Value::Array((0..3).map(|i| Value::Array((0..3).map(|j| entry(s[(i, j)])).collect())).collect()))
            .collect(),
    )
}

pub fn tensor_to_json(t: &RealTensor) -> Value {
    json!({"kind": "trifocal", "complex": false, "slices": slices_json(t, |x| json!(x))})
}

pub fn complex_tensor_to_json(t: &ComplexTensor) -> Value {
    json!({"kind": "trifocal", "complex": true, "slices": slices_json(t, |z: C64| json!([z.re, z.im]))})
}

pub fn any_tensor_to_json(t: &AnyTensor) -> Value {
    match t {
        AnyTensor::Real(t) => tensor_to_json(t),
        AnyTensor::Complex(t) => complex_tensor_to_json(t),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDocument(msg.into())
}

fn number(v: &Value) -> Result<f64> {
    let x = v.as_f64().ok_or_else(|| invalid(format!("expected a number, found {v}")))?;
    if !x.is_finite() {
        return Err(invalid("non-finite entry"));
    }
    Ok(x)
}

pub fn tensor_from_json(v: &Value) -> Result<AnyTensor> {
    if v.get("kind").and_then(Value::as_str) != Some("trifocal") {
        return Err(invalid("missing \"kind\": \"trifocal\""));
    }
    let complex = v
        .get("complex")
        .map(|c| c.as_bool().ok_or_else(|| invalid("\"complex\" must be a boolean")))
        .transpose()?
        .unwrap_or(false);
    let slices = v.get("slices").and_then(Value::as_array).ok_or_else(|| invalid("missing \"slices\" array"))?;
    if slices.len() != 3 {
        return Err(invalid(format!("expected 3 slices, found {}", slices.len())));
    }
    let mut entries: Vec<C64> = Vec::with_capacity(27);
    for s in slices {
        let rows = s.as_array().filter(|r| r.len() == 3).ok_or_else(|| invalid("each slice must have 3 rows"))?;
        for r in rows {
            let cols = r.as_array().filter(|c| c.len() == 3).ok_or_else(|| invalid("each row must have 3 entries"))?;
            for e in cols {
                let z = match (complex, e) {
                    (false, _) => C64::new(number(e)?, 0.0),
                    (true, Value::Array(p)) if p.len() == 2 => C64::new(number(&p[0])?, number(&p[1])?),
                    (true, _) => return Err(invalid(format!("complex entries must be [re, im], found {e}"))),
                };
                entries.push(z);
            }
        }
    }
    if complex {
        Ok(AnyTensor::Complex(TrifocalTensor::from_flat(&entries)))
    } else {
        let re: Vec<f64> = entries.iter().map(|z| z.re).collect();
        Ok(AnyTensor::Real(TrifocalTensor::from_flat(&re)))
    }
}

pub fn parse_tensor(text: &str) -> Result<AnyTensor> {
    let v: Value = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    tensor_from_json(&v)
}

/// `{"triples": [{"q1": [x, y, w], "q2": ..., "q3": ...}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondences {
    pub triples: Vec<PointTriple>,
}

pub fn parse_correspondences(text: &str) -> Result<Correspondences> {
    let c: Correspondences = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    if c.triples.iter().any(|t| [t.q1, t.q2, t.q3].iter().any(|q| !q.iter().all(|x| x.is_finite()))) {
        return Err(invalid("non-finite image coordinate"));
    }
    Ok(c)
}
