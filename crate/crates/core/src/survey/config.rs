//! Flat `key = value` configuration for the survey runs.
//!
//! ```text
//! # comments and blank lines are ignored
//! sieve.s_max = 20
//! sieve.exact_s_max = all
//! modified_sieve = true
//! n5.j18.s = 15
//! cubic.alpha_max = 44
//! cubic.final_q = 8000000000000
//! audit.samples = 100
//! audit.seed = 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key {0}")]
    UnknownKey(String),
    #[error("bad value for {key}: {value}")]
    BadValue { key: String, value: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyConfig {
    /// Largest s tried for the worst-case threshold of each ω. Beyond it
    /// the threshold search is guided by a floating-point scan over all s.
    pub s_max: usize,
    /// Largest s tried on exact factorizations; None means all.
    pub exact_s_max: Option<usize>,
    /// Fixed s for the worst-case threshold of (n, ω).
    pub per_j_s: BTreeMap<(u32, usize), usize>,
    pub modified_sieve: bool,
    pub cubic_alpha_max: u32,
    pub cubic_final_q: u64,
    pub cubic_window_j: usize,
    pub cubic_j_max: usize,
    pub audit_samples: usize,
    pub audit_seed: u64,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        SurveyConfig {
            s_max: 20,
            exact_s_max: None,
            per_j_s: BTreeMap::new(),
            modified_sieve: true,
            cubic_alpha_max: 44,
            cubic_final_q: 8_000_000_000_000,
            cubic_window_j: 24,
            cubic_j_max: 26,
            audit_samples: 100,
            audit_seed: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .replace('_', "")
        .parse()
        .map_err(|_| ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        })
}

/// `n5.j18.s` → (5, 18).
fn per_j_key(key: &str) -> Option<(u32, usize)> {
    let rest = key.strip_prefix('n')?.strip_suffix(".s")?;
    let (n, j) = rest.split_once(".j")?;
    Some((n.parse().ok()?, j.parse().ok()?))
}

impl SurveyConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SurveyConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "sieve.s_max" => self.s_max = parse_num(key, value)?,
            "sieve.exact_s_max" => {
                self.exact_s_max = match value {
                    "all" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "modified_sieve" => self.modified_sieve = parse_num(key, value)?,
            "cubic.alpha_max" => self.cubic_alpha_max = parse_num(key, value)?,
            "cubic.final_q" => self.cubic_final_q = parse_num(key, value)?,
            "cubic.window_j" => self.cubic_window_j = parse_num(key, value)?,
            "cubic.j_max" => self.cubic_j_max = parse_num(key, value)?,
            "audit.samples" => self.audit_samples = parse_num(key, value)?,
            "audit.seed" => self.audit_seed = parse_num(key, value)?,
            _ => match per_j_key(key) {
                Some(nj) => {
                    self.per_j_s.insert(nj, parse_num(key, value)?);
                }
                None => return Err(ConfigError::UnknownKey(key.into())),
            },
        }
        Ok(())
    }

    /// Canonical text: every key, fixed order. Parsing it gives back the
    /// same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sieve.s_max = {}", self.s_max);
        match self.exact_s_max {
            Some(v) => {
                let _ = writeln!(s, "sieve.exact_s_max = {v}");
            }
            None => s.push_str("sieve.exact_s_max = all\n"),
        }
        let _ = writeln!(s, "modified_sieve = {}", self.modified_sieve);
        for ((n, j), v) in &self.per_j_s {
            let _ = writeln!(s, "n{n}.j{j}.s = {v}");
        }
        let _ = writeln!(s, "cubic.alpha_max = {}", self.cubic_alpha_max);
        let _ = writeln!(s, "cubic.final_q = {}", self.cubic_final_q);
        let _ = writeln!(s, "cubic.window_j = {}", self.cubic_window_j);
        let _ = writeln!(s, "cubic.j_max = {}", self.cubic_j_max);
        let _ = writeln!(s, "audit.samples = {}", self.audit_samples);
        let _ = writeln!(s, "audit.seed = {}", self.audit_seed);
        s
    }
}
