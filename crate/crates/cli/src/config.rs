//! Run configuration: defaults, then a config file, then flags.
//!
//! Config files are either a JSON object or flat `key = value` lines
//! (`#` starts a comment). Both use the same keys:
//!
//! | key          | value                          | default   |
//! |--------------|--------------------------------|-----------|
//! | `q`          | real, `> 0`, `≠ 1`             | `0.5`     |
//! | `tol`        | real, `> 0`                    | `1e-10`   |
//! | `max_terms`  | integer, `≥ 1`                 | `1000`    |
//! | `signature`  | `p,q_neg` or `[p, q_neg]`      | `0,4`     |
//! | `gamma_rep`  | `dirac` or `chiral`            | `dirac`   |
//! | `x0`         | real                           | `1`       |
//! | `contour_k`  | integer                        | `200`     |
//! | `output`     | path                           | stdout    |

use std::path::PathBuf;

use num_complex::Complex64;
use qspin_core::clifford::{GammaSet, Signature};
use qspin_core::qderiv::QContext;
use qspin_core::qintegral::QContour;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key = value")]
    Syntax { line: usize },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("config key '{key}': {message}")]
    BadValue { key: String, message: String },
    #[error("config key '{0}' given twice")]
    Duplicate(String),
    #[error("config JSON must be an object: {0}")]
    Json(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Partial configuration; `None` means "not set at this layer".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigLayer {
    pub q: Option<f64>,
    pub tol: Option<f64>,
    pub max_terms: Option<usize>,
    pub signature: Option<(usize, usize)>,
    pub gamma_rep: Option<String>,
    pub x0: Option<f64>,
    pub contour_k: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub q: f64,
    pub tol: f64,
    pub max_terms: usize,
    pub signature: (usize, usize),
    pub gamma_rep: String,
    pub x0: f64,
    pub contour_k: usize,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            q: 0.5,
            tol: 1e-10,
            max_terms: 1000,
            signature: (0, 4),
            gamma_rep: "dirac".into(),
            x0: 1.0,
            contour_k: 200,
            output: None,
        }
    }
}

impl RunConfig {
    /// Applies `layer` on top of `self`.
    pub fn overlay(mut self, layer: &ConfigLayer) -> Self {
        if let Some(v) = layer.q {
            self.q = v;
        }
        if let Some(v) = layer.tol {
            self.tol = v;
        }
        if let Some(v) = layer.max_terms {
            self.max_terms = v;
        }
        if let Some(v) = layer.signature {
            self.signature = v;
        }
        if let Some(v) = &layer.gamma_rep {
            self.gamma_rep = v.clone();
        }
        if let Some(v) = layer.x0 {
            self.x0 = v;
        }
        if let Some(v) = layer.contour_k {
            self.contour_k = v;
        }
        if let Some(v) = &layer.output {
            self.output = Some(v.clone());
        }
        self
    }

    pub fn context(&self) -> Result<QContext, ConfigError> {
        let invalid = |e: qspin_core::qderiv::QDerivError| ConfigError::Invalid(e.to_string());
        QContext::new(self.q)
            .and_then(|c| c.with_tol(self.tol))
            .and_then(|c| c.with_max_terms(self.max_terms))
            .and_then(|c| c.with_x0(Complex64::new(self.x0, 0.0)))
            .map_err(invalid)
    }

    pub fn signature(&self) -> Result<Signature, ConfigError> {
        Signature::new(self.signature.0, self.signature.1).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn gamma(&self) -> Result<GammaSet, ConfigError> {
        GammaSet::by_label(&self.gamma_rep).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn contour(&self) -> Result<QContour, ConfigError> {
        QContour::new(Complex64::new(self.x0, 0.0), self.contour_k).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Checks every derived object, so commands fail early with a usage
    /// error rather than deep inside a computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.context()?;
        self.signature()?;
        self.gamma()?;
        self.contour()?;
        Ok(())
    }
}

const KEYS: [&str; 8] = ["q", "tol", "max_terms", "signature", "gamma_rep", "x0", "contour_k", "output"];

/// Parses a config file body. Text starting with `{` is read as JSON.
pub fn parse_config(text: &str) -> Result<ConfigLayer, ConfigError> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_flat(text)
    }
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_flat(text: &str) -> Result<ConfigLayer, ConfigError> {
    let mut layer = ConfigLayer::default();
    let mut seen = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        let key = key.trim();
        if seen.contains(&key) {
            return Err(ConfigError::Duplicate(key.to_string()));
        }
        seen.push(key);
        set_text(&mut layer, key, value.trim())?;
    }
    Ok(layer)
}

fn parse_number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| bad(key, e.to_string()))
}

fn parse_signature(key: &str, v: &str) -> Result<(usize, usize), ConfigError> {
    let v = v.trim().trim_start_matches(['(', '[']).trim_end_matches([')', ']']);
    let (p, q) = v.split_once(',').ok_or_else(|| bad(key, "expected p,q_neg"))?;
    Ok((parse_number(key, p.trim())?, parse_number(key, q.trim())?))
}

fn set_text(layer: &mut ConfigLayer, key: &str, v: &str) -> Result<(), ConfigError> {
    let v = v.trim_matches('"');
    match key {
        "q" => layer.q = Some(parse_number(key, v)?),
        "tol" => layer.tol = Some(parse_number(key, v)?),
        "max_terms" => layer.max_terms = Some(parse_number(key, v)?),
        "signature" => layer.signature = Some(parse_signature(key, v)?),
        "gamma_rep" => layer.gamma_rep = Some(v.to_string()),
        "x0" => layer.x0 = Some(parse_number(key, v)?),
        "contour_k" => layer.contour_k = Some(parse_number(key, v)?),
        "output" => layer.output = Some(PathBuf::from(v)),
        _ => return Err(ConfigError::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn parse_json(text: &str) -> Result<ConfigLayer, ConfigError> {
    let value: Json = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
    let Json::Object(map) = value else {
        return Err(ConfigError::Json("top level is not an object".into()));
    };
    let mut layer = ConfigLayer::default();
    for (key, v) in &map {
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        let text = match v {
            Json::Number(n) => n.to_string(),
            Json::String(s) => s.clone(),
            Json::Array(items) if key == "signature" && items.len() == 2 => {
                format!("{},{}", items[0], items[1])
            }
            other => return Err(bad(key, format!("unsupported value {other}"))),
        };
        set_text(&mut layer, key, &text)?;
    }
    Ok(layer)
}
