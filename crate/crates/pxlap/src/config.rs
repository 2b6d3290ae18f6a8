//! Flat `key = value` configuration files with dotted sections.
//!
//! ```text
//! # comment
//! domain.dim    = 1
//! domain.bounds = 0 1
//! exponent.p1   = 2.5 + 0.5*x   # trailing comment
//! ```
//!
//! Keys are `[a-z0-9_]` segments joined by dots, each key may appear once,
//! and values run to the end of the line (or a `#`). Every error carries the
//! line and column it refers to. See `docs/config.md` for the key reference.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use pxlap_core::expr::Expr;

/// A configuration error with its position (1-based; 0 means "no position").
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {col}: {msg}")]
    At {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("missing required key `{0}`")]
    Missing(String),
}

impl ConfigError {
    fn at(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Self::At {
            line,
            col,
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
    /// Column of the first character of the value.
    pub col: usize,
}

/// Every key the tool understands.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "output.dir",
    "domain.dim",
    "domain.n",
    "domain.bounds",
    "domain.delta",
    "exponent.p1",
    "exponent.p2",
    "exponent.q1",
    "exponent.q2",
    "exponent.r1",
    "exponent.r2",
    "exponent.s1",
    "exponent.s2",
    "exponent.alpha1",
    "exponent.alpha2",
    "exponent.beta1",
    "exponent.beta2",
    "exponent.gamma1",
    "exponent.gamma2",
    "exponent.eta1",
    "exponent.eta2",
    "coefficient.a",
    "coefficient.regime",
    "coefficient.a0",
    "coefficient.a_inf",
    "reaction.f1",
    "reaction.g1",
    "reaction.f2",
    "reaction.g2",
    "system.monotone",
    "pair.lower1",
    "pair.upper1",
    "pair.lower2",
    "pair.upper2",
    "app.name",
    "app.lambda",
    "app.theta",
    "app.theta1",
    "app.theta2",
    "app.f1",
    "app.f2",
    "search.k_max_exp",
    "search.lambda_max_exp",
    "norm.u",
    "norm.p",
    "dirichlet.f",
    "dirichlet.p",
    "sweep.lambdas",
    "solver.tol",
    "solver.max_iter",
    "solver.reg_eps",
    "verify.tol",
    "verify.w_samples",
    "verify.envelope_points",
    "picard.omega",
    "picard.max_iter",
    "picard.step_tol",
    "picard.residual_tol",
    "picard.sandwich_tol",
    "logistic.residual_tol",
    "logistic.max_iter",
];

/// A parsed file. Typed getters report positions on failure.
#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    touched: Mutex<BTreeSet<String>>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|seg| {
            !seg.is_empty()
                && seg
                    .bytes()
                    .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
        })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let col = content.len() - content.trim_start().len() + 1;
                return Err(ConfigError::at(line, col, "expected `key = value`"));
            };
            let key_part = &content[..eq];
            let key = key_part.trim();
            let key_col = key_part.len() - key_part.trim_start().len() + 1;
            if !valid_key(key) {
                return Err(ConfigError::at(
                    line,
                    key_col,
                    format!("malformed key `{key}`"),
                ));
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::at(
                    line,
                    key_col,
                    format!("unknown key `{key}`"),
                ));
            }
            let value_part = &content[eq + 1..];
            let value = value_part.trim();
            let col = eq + 1 + value_part.len() - value_part.trim_start().len() + 1;
            if value.is_empty() {
                return Err(ConfigError::at(
                    line,
                    col,
                    format!("empty value for `{key}`"),
                ));
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(ConfigError::at(
                    line,
                    key_col,
                    format!("duplicate key `{key}` (first set on line {})", prev.line),
                ));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                    col,
                },
            );
        }
        Ok(Self {
            entries,
            touched: Mutex::new(BTreeSet::new()),
        })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        let entry = self.entries.get(key);
        if entry.is_some() {
            self.touched.lock().unwrap().insert(key.to_string());
        }
        entry
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Overrides (or adds) a value, e.g. from a command-line flag.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
                col: 0,
            },
        );
    }

    /// Keys present in the file but never read.
    pub fn untouched(&self) -> Vec<(&str, &Entry)> {
        let touched = self.touched.lock().unwrap();
        self.entries
            .iter()
            .filter(|(k, _)| !touched.contains(*k))
            .map(|(k, e)| (k.as_str(), e))
            .collect()
    }

    fn require(&self, key: &str) -> Result<&Entry, ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn str(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        Ok(self.get(key).map(|e| e.value.as_str()))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|e| parse_f64(e, &e.value, e.col))
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn req_f64(&self, key: &str) -> Result<f64, ConfigError> {
        let e = self.require(key)?;
        parse_f64(e, &e.value, e.col)
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    ConfigError::at(
                        e.line,
                        e.col,
                        format!("expected a nonnegative integer, got `{}`", e.value),
                    )
                })
            })
            .transpose()
    }

    pub fn req_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.require(key)?;
        Ok(self.usize(key)?.expect("present"))
    }

    pub fn i32(&self, key: &str) -> Result<Option<i32>, ConfigError> {
        self.get(key)
            .map(|e| {
                e.value.parse::<i32>().map_err(|_| {
                    ConfigError::at(
                        e.line,
                        e.col,
                        format!("expected an integer, got `{}`", e.value),
                    )
                })
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get(key)
            .map(|e| match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(ConfigError::at(
                    e.line,
                    e.col,
                    format!("expected `true` or `false`, got `{other}`"),
                )),
            })
            .transpose()
    }

    /// Numbers separated by commas and/or whitespace.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        let bytes = e.value.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b',' || bytes[i].is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && bytes[i] != b',' && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            out.push(parse_f64(e, &e.value[start..i], e.col + start)?);
        }
        Ok(Some(out))
    }

    pub fn req_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.require(key)?;
        Ok(self.list(key)?.expect("present"))
    }

    /// Parses an expression over `vars`; syntax errors point into the value.
    pub fn expr(&self, key: &str, vars: &[&str]) -> Result<Option<Expr>, ConfigError> {
        self.get(key).map(|e| parse_expr(e, vars)).transpose()
    }

    pub fn expr_or(&self, key: &str, default: &str, vars: &[&str]) -> Result<Expr, ConfigError> {
        match self.expr(key, vars)? {
            Some(e) => Ok(e),
            None => Ok(Expr::parse(default, vars).expect("default expressions parse")),
        }
    }

    pub fn req_expr(&self, key: &str, vars: &[&str]) -> Result<Expr, ConfigError> {
        parse_expr(self.require(key)?, vars)
    }

    /// The position of `key` for error messages (0, 0 when absent).
    pub fn position(&self, key: &str) -> (usize, usize) {
        self.entries.get(key).map_or((0, 0), |e| (e.line, e.col))
    }

    /// An error positioned at `key`'s value.
    pub fn error(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        let (line, col) = self.position(key);
        ConfigError::at(line, col, format!("`{key}`: {}", msg.into()))
    }
}

fn parse_f64(e: &Entry, text: &str, col: usize) -> Result<f64, ConfigError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ConfigError::at(
            e.line,
            col,
            format!("expected a finite number, got `{text}`"),
        )),
    }
}

fn parse_expr(e: &Entry, vars: &[&str]) -> Result<Expr, ConfigError> {
    Expr::parse(&e.value, vars).map_err(|err| {
        let (pos, msg) = match &err {
            pxlap_core::Error::Syntax { pos, msg } => (*pos, msg.clone()),
            pxlap_core::Error::UnknownIdentifier { name, pos } => (
                *pos,
                format!("unknown identifier `{name}` (allowed: {})", vars.join(", ")),
            ),
            other => (0, other.to_string()),
        };
        ConfigError::at(e.line, e.col + char_offset(&e.value, pos), msg)
    })
}

/// Byte offset → character offset, so columns count characters.
fn char_offset(s: &str, byte: usize) -> usize {
    s.char_indices().take_while(|(i, _)| *i < byte).count()
}
