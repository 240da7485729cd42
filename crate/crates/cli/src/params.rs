//! Experiment parameters merged from defaults, a JSON config and flags.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or parameter values; exit code 2.
    #[error("{0}")]
    Invalid(String),
    /// An operation rejected its input or failed while running.
    #[error(transparent)]
    Core(#[from] soliton_lab::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Core(e) if !e.is_runtime() => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("invalid value for `{key}`: {msg}"))
}

/// A named option with a default written in flag syntax.
#[derive(Debug, Clone, Copy)]
pub struct Opt {
    pub key: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn opt(key: &'static str, default: &'static str, help: &'static str) -> Opt {
    Opt { key, default: Some(default), help }
}

pub const fn optional(key: &'static str, help: &'static str) -> Opt {
    Opt { key, default: None, help }
}

/// Resolved parameters. Every typed read is recorded for the input echo.
#[derive(Debug)]
pub struct Params {
    values: BTreeMap<String, Value>,
    options: &'static [Opt],
    echo: RefCell<BTreeMap<String, Value>>,
}

impl Params {
    /// `config` values are overridden by `flags`; unknown keys are rejected.
    pub fn merge(
        options: &'static [Opt],
        config: &BTreeMap<String, Value>,
        flags: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in config {
            if !options.iter().any(|o| o.key == k) {
                return Err(CliError::Invalid(format!("unknown config key `{k}`")));
            }
            values.insert(k.clone(), v.clone());
        }
        for (k, v) in flags {
            values.insert(k.clone(), Value::String(v.clone()));
        }
        Ok(Params { values, options, echo: RefCell::new(BTreeMap::new()) })
    }

    fn raw(&self, key: &str) -> Option<Value> {
        if let Some(v) = self.values.get(key) {
            return Some(v.clone());
        }
        let opt = self.options.iter().find(|o| o.key == key).unwrap_or_else(|| panic!("undeclared option {key}"));
        opt.default.map(|d| Value::String(d.to_string()))
    }

    fn record(&self, key: &str, v: Value) {
        self.echo.borrow_mut().insert(key.to_string(), v);
    }

    pub fn echo(&self) -> BTreeMap<String, Value> {
        self.echo.borrow().clone()
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.raw(key).is_some_and(|v| !v.is_null())
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| invalid(key, "a value is required"))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        let v = match self.raw(key) {
            None | Some(Value::Null) => return Ok(None),
            Some(Value::Number(n)) => n.as_f64().ok_or_else(|| invalid(key, "not a number"))?,
            Some(Value::String(s)) => s.trim().parse::<f64>().map_err(|e| invalid(key, format!("{s:?}: {e}")))?,
            Some(other) => return Err(invalid(key, format!("expected a number, got {other}"))),
        };
        if !v.is_finite() {
            return Err(invalid(key, "must be finite"));
        }
        self.record(key, Value::from(v));
        Ok(Some(v))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = match self.raw(key) {
            Some(Value::Number(n)) => n.as_u64().ok_or_else(|| invalid(key, "expected a non-negative integer"))?,
            Some(Value::String(s)) => s.trim().parse::<u64>().map_err(|e| invalid(key, format!("{s:?}: {e}")))?,
            None | Some(Value::Null) => return Err(invalid(key, "a value is required")),
            Some(other) => return Err(invalid(key, format!("expected an integer, got {other}"))),
        };
        self.record(key, Value::from(v));
        usize::try_from(v).map_err(|_| invalid(key, "too large"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.usize(key).map(|v| v as u64)
    }

    pub fn string(&self, key: &str) -> Result<String> {
        match self.raw(key) {
            Some(Value::String(s)) => {
                self.record(key, Value::from(s.clone()));
                Ok(s)
            }
            None | Some(Value::Null) => Err(invalid(key, "a value is required")),
            Some(other) => Err(invalid(key, format!("expected a string, got {other}"))),
        }
    }

    /// Comma list (flags) or JSON array of numbers.
    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.opt_list(key)?.ok_or_else(|| invalid(key, "a value is required"))
    }

    pub fn opt_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let out: Vec<f64> = match self.raw(key) {
            None | Some(Value::Null) => return Ok(None),
            Some(Value::Number(n)) => vec![n.as_f64().ok_or_else(|| invalid(key, "not a number"))?],
            Some(Value::String(s)) => s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| invalid(key, format!("{t:?}: {e}"))))
                .collect::<Result<_>>()?,
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| invalid(key, format!("expected numbers, got {v}"))))
                .collect::<Result<_>>()?,
            Some(other) => return Err(invalid(key, format!("expected a list of numbers, got {other}"))),
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(invalid(key, "entries must be finite"));
        }
        self.record(key, Value::from(out.clone()));
        Ok(Some(out))
    }

    /// A list of exactly `len` numbers.
    pub fn vector(&self, key: &str, len: usize) -> Result<Vec<f64>> {
        let v = self.list(key)?;
        if v.len() != len {
            return Err(invalid(key, format!("expected {len} entries, got {}", v.len())));
        }
        Ok(v)
    }

    /// An increasing pair `lo,hi`.
    pub fn interval(&self, key: &str) -> Result<(f64, f64)> {
        let v = self.vector(key, 2)?;
        if !(v[1] > v[0]) {
            return Err(invalid(key, format!("expected lo < hi, got {},{}", v[0], v[1])));
        }
        Ok((v[0], v[1]))
    }
}
