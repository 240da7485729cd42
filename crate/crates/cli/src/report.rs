//! Run summaries and their JSON and CSV serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
    Above,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
        }
    }

    fn holds(self, value: f64, limit: f64) -> bool {
        match self {
            Relation::AtMost => value <= limit,
            Relation::AtLeast => value >= limit,
            Relation::Above => value > limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub limit: Option<(Relation, f64)>,
    pub pass: bool,
}

impl Check {
    /// Passes when `value <relation> limit`; NaN never passes.
    pub fn bound(name: &str, value: f64, relation: Relation, limit: f64) -> Self {
        Check {
            name: name.into(),
            value: Value::from(value),
            limit: Some((relation, limit)),
            pass: relation.holds(value, limit),
        }
    }

    pub fn flag(name: &str, value: bool) -> Self {
        Check { name: name.into(), value: Value::from(value), limit: None, pass: value }
    }

    fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        m.insert("pass".into(), Value::from(self.pass));
        m.insert("value".into(), self.value.clone());
        if let Some((rel, limit)) = self.limit {
            m.insert("relation".into(), Value::from(rel.symbol()));
            m.insert("limit".into(), Value::from(limit));
        }
        Value::Object(m)
    }
}

/// A CSV data file: header row plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: &'static str, header: &'static [&'static str]) -> Self {
        Table { file, header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&decimal17(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Decimal notation with 17 significant digits.
pub fn decimal17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    // exponent after rounding to 17 digits, so 9.99..95 counts as 10
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (16 - exp).max(0) as usize;
    let mut s = String::new();
    write!(s, "{v:.decimals$}").expect("write to string");
    s
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub metrics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.into(), value.into());
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// JSON summary. Objects use sorted keys; wall-clock time is included only
/// when requested so that repeated runs stay byte-identical.
pub fn summary_json(experiment: &str, input: &BTreeMap<String, Value>, report: &Report, seconds: Option<f64>) -> Value {
    let checks: serde_json::Map<String, Value> = report.checks.iter().map(|c| (c.name.clone(), c.to_json())).collect();
    let mut v = json!({
        "experiment": experiment,
        "input": input,
        "metrics": report.metrics,
        "checks": checks,
        "pass": report.pass(),
        "files": report.tables.iter().map(|t| t.file).collect::<Vec<_>>(),
    });
    if let Some(s) = seconds {
        v["wall_clock_seconds"] = Value::from(s);
    }
    v
}

pub fn error_json(experiment: &str, message: &str, exit_code: i32) -> Value {
    json!({ "experiment": experiment, "error": message, "exit_code": exit_code, "pass": false })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
