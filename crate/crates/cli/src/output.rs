//! Result tables and their CSV, JSON and plot renderings.

use serde_json::{json, Map, Value as Json};
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i128),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Value {
    /// Rendering used in CSV cells and plot files. Floats use the shortest
    /// representation that round-trips.
    pub fn render(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format!("{f:?}"),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Empty => String::new(),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Int(i) => match i64::try_from(*i) {
                Ok(v) => json!(v),
                Err(_) => json!(i.to_string()),
            },
            Value::Float(f) => json_float(*f),
            Value::Text(s) => json!(s),
            Value::Bool(b) => json!(b),
            Value::Empty => Json::Null,
        }
    }
}

/// Non-finite floats have no JSON number form; they are written as strings.
pub fn json_float(f: f64) -> Json {
    serde_json::Number::from_f64(f).map_or_else(|| json!(format!("{f:?}")), Json::Number)
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i128)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i128)
    }
}

impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Int(v as i128)
    }
}

impl From<u128> for Value {
    fn from(v: u128) -> Self {
        i128::try_from(v).map_or_else(|_| Value::Text(v.to_string()), Value::Int)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Empty, Into::into)
    }
}

/// Builds a table row from heterogeneous cells.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => {
        vec![$($crate::output::Value::from($v)),*]
    };
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Value::render))?;
        }
        out.flush()?;
        Ok(())
    }

    /// `{"manifest": ..., "columns": [...], "rows": [{column: value}, ...]}`.
    pub fn to_json(&self, manifest: &Json) -> Json {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).to_string(), v.to_json());
                }
                Json::Object(m)
            })
            .collect();
        json!({ "manifest": manifest, "columns": self.columns, "rows": rows })
    }

    /// Two whitespace-separated columns with a `#` header line.
    pub fn write_plot<W: Write>(&self, mut w: W, x: &str, y: &str) -> std::io::Result<()> {
        let (Some(i), Some(j)) = (self.column(x), self.column(y)) else {
            return Err(std::io::Error::other(format!("no plot columns {x}, {y}")));
        };
        writeln!(w, "# {x} {y}")?;
        for r in &self.rows {
            writeln!(w, "{} {}", r[i].render(), r[j].render())?;
        }
        Ok(())
    }
}

/// Outcome of one `--check` assertion.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}
