//! Report assembly and serialisation.
//!
//! Reports are built from `serde_json::Value`, whose maps are ordered by key,
//! so the JSON form is deterministic. Floats use the shortest representation
//! that round-trips.

use std::collections::BTreeSet;
use std::io::Write;

use serde_json::{Map, Value};

use crate::args::Format;

pub struct Report {
    pub command: &'static str,
    pub passed: bool,
    pub summary: Map<String, Value>,
    pub rows: Vec<Value>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            passed: true,
            summary: Map::new(),
            rows: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    /// Records one check; the report fails if any check does.
    pub fn check(&mut self, ok: bool) -> bool {
        self.passed &= ok;
        ok
    }

    pub fn to_json(&self) -> String {
        let mut doc = Map::new();
        doc.insert("command".into(), self.command.into());
        doc.insert("passed".into(), self.passed.into());
        doc.insert("summary".into(), Value::Object(self.summary.clone()));
        doc.insert("rows".into(), Value::Array(self.rows.clone()));
        let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let flat: Vec<Vec<(String, String)>> = self
            .rows
            .iter()
            .map(|r| {
                let mut out = Vec::new();
                flatten("", r, &mut out);
                out
            })
            .collect();
        let mut headers = BTreeSet::new();
        for row in &flat {
            headers.extend(row.iter().map(|(k, _)| k.clone()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&headers)?;
        for row in &flat {
            let record: Vec<&str> = headers
                .iter()
                .map(|h| row.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()))
                .collect();
            w.write_record(&record)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        let text = match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv().map_err(std::io::Error::other)?,
        };
        out.write_all(text.as_bytes())
    }
}

/// Nested arrays and objects become `key_0`, `key_1_2`, `key_sub`, ...
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}_{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&join(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// `f64` as JSON; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn vec3(v: &nalgebra::Vector3<f64>) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn list(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn vec3s(v: &[nalgebra::Vector3<f64>]) -> Value {
    Value::Array(v.iter().map(vec3).collect())
}

pub fn mat3(m: &nalgebra::Matrix3<f64>) -> Value {
    Value::Array(
        (0..3)
            .map(|r| Value::Array((0..3).map(|c| num(m[(r, c)])).collect()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_flattens_nested_rows() {
        let mut r = Report::new("t");
        r.rows.push(json!({"b": [1.5, 2.0], "a": {"x": true}, "c": null}));
        assert_eq!(r.to_csv().unwrap(), "a_x,b_0,b_1,c\ntrue,1.5,2.0,\n");
    }

    #[test]
    fn json_keys_are_sorted() {
        let mut r = Report::new("t");
        r.set("zeta", 1);
        r.set("alpha", num(0.1));
        let s = r.to_json();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
        assert!(s.contains("0.1"));
        assert_eq!(num(f64::NAN), Value::Null);
    }
}
