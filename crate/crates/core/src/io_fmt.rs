//! Output formatting: every real is written with 17 significant digits so that
//! files round-trip bit-exactly.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn raw(x: f64) -> Box<RawValue> {
    let s = if x.is_finite() { fmt17(x) } else { "null".to_string() };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

pub fn f64_17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x).serialize(s)
}

pub fn opt_f64_17<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => raw(*v).serialize(s),
        None => s.serialize_none(),
    }
}

pub fn vec_f64_17<S, V>(v: V, s: S) -> Result<S::Ok, S::Error>
where
    S: Serializer,
    V: AsRef<[f64]>,
{
    let v = v.as_ref();
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&raw(x))?;
    }
    seq.end()
}
