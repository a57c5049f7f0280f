//! JSON model configuration.
//!
//! ```json
//! {
//!   "statuses": ["participant", "non-participant"],
//!   "conditions": [
//!     { "name": "I", "matrix": [[0.90, 0.44], [0.10, 0.56]] },
//!     { "name": "C", "matrix": [[0.72, 0.29], [0.28, 0.71]] }
//!   ],
//!   "initial": [127, 111],
//!   "length": 100,
//!   "schedules": [{ "name": "every-other", "pattern": "(I,C)*" }],
//!   "options": { "normalize_output": false, "column_sum_tolerance": 1e-9, "seed": 0 }
//! }
//! ```
//!
//! Matrix rows are destination statuses, so a printed table can be copied
//! without transposing. `schedules` and `options` may be omitted.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ecm::{validate_ecm, EcmError, SimulationModel, DEFAULT_COLUMN_SUM_TOLERANCE};
use crate::schedule::{is_label, parse_schedule, NamedSchedule};

/// Longest horizon a config may declare.
pub const MAX_CONFIG_LENGTH: usize = 10_000_000;

/// Status names that would collide with the fixed CSV columns.
const RESERVED_STATUS_NAMES: [&str; 2] = ["t", "schedule"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("FileNotFound: {0}")]
    FileNotFound(String),
    #[error("IoError: {path}: {message}")]
    Io { path: String, message: String },
    #[error("ParseError at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("SchemaError at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("ValidationError at {path}: {reason}")]
    Validation { path: String, reason: String },
}

impl ConfigError {
    fn schema(path: impl fmt::Display, reason: impl fmt::Display) -> Self {
        ConfigError::Schema {
            path: path.to_string(),
            reason: reason.to_string(),
        }
    }

    fn validation(path: impl fmt::Display, reason: impl fmt::Display) -> Self {
        ConfigError::Validation {
            path: path.to_string(),
            reason: reason.to_string(),
        }
    }

    /// Field path for schema and validation errors.
    pub fn field_path(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { path, .. } | ConfigError::Validation { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Write status fractions instead of counts.
    pub normalize_output: bool,
    pub column_sum_tolerance: f64,
    /// Monte Carlo seed.
    pub seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            normalize_output: false,
            column_sum_tolerance: DEFAULT_COLUMN_SUM_TOLERANCE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub name: String,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub name: String,
    pub pattern: String,
}

/// The config document as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub statuses: Vec<String>,
    pub conditions: Vec<ConditionSpec>,
    pub initial: Vec<f64>,
    pub length: usize,
    #[serde(default)]
    pub schedules: Vec<ScheduleSpec>,
    #[serde(default)]
    pub options: Options,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub model: SimulationModel,
    pub options: Options,
    /// Source pattern of each schedule, in declaration order.
    pub patterns: Vec<String>,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ModelConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ConfigError::FileNotFound(path.display().to_string()),
        _ => ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        },
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ModelConfig, ConfigError> {
    parse_document(text)?.validate()
}

/// Deserializes without semantic checks; type and shape errors carry field paths.
pub fn parse_document(text: &str) -> Result<ConfigDocument, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: ConfigDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => {
                ConfigError::schema(path, strip_position(&inner.to_string()))
            }
            _ => ConfigError::Parse {
                line: inner.line(),
                column: inner.column(),
                message: strip_position(&inner.to_string()),
            },
        }
    })?;
    de.end().map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    Ok(doc)
}

/// serde_json appends " at line L column C"; positions are reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

impl ConfigDocument {
    pub fn validate(&self) -> Result<ModelConfig, ConfigError> {
        let n = self.statuses.len();
        if n == 0 {
            return Err(ConfigError::schema("statuses", "at least one status is required"));
        }
        for (i, s) in self.statuses.iter().enumerate() {
            if s.trim().is_empty() {
                return Err(ConfigError::validation(format!("statuses[{i}]"), "empty status name"));
            }
            if RESERVED_STATUS_NAMES.contains(&s.as_str()) {
                return Err(ConfigError::validation(
                    format!("statuses[{i}]"),
                    format!("\"{s}\" is reserved for a trajectory CSV column"),
                ));
            }
            if self.statuses[..i].contains(s) {
                return Err(ConfigError::validation(
                    format!("statuses[{i}]"),
                    format!("duplicate status name \"{s}\""),
                ));
            }
        }

        if self.length == 0 {
            return Err(ConfigError::schema("length", "must be positive"));
        }
        if self.length > MAX_CONFIG_LENGTH {
            return Err(ConfigError::schema(
                "length",
                format!("must be at most {MAX_CONFIG_LENGTH}"),
            ));
        }
        let tol = self.options.column_sum_tolerance;
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(ConfigError::schema(
                "options.column_sum_tolerance",
                "must be a finite non-negative number",
            ));
        }

        if self.conditions.is_empty() {
            return Err(ConfigError::schema("conditions", "at least one condition is required"));
        }
        let mut conditions = Vec::with_capacity(self.conditions.len());
        for (i, c) in self.conditions.iter().enumerate() {
            if !is_label(&c.name) {
                return Err(ConfigError::validation(
                    format!("conditions[{i}].name"),
                    format!("\"{}\" is not a valid condition label", c.name),
                ));
            }
            if self.conditions[..i].iter().any(|o| o.name == c.name) {
                return Err(ConfigError::validation(
                    format!("conditions[{i}].name"),
                    format!("duplicate condition name \"{}\"", c.name),
                ));
            }
            let path = format!("conditions[{i}].matrix");
            if c.matrix.len() != n || c.matrix.iter().any(|r| r.len() != n) {
                return Err(ConfigError::schema(path, format!("not square of size {n}")));
            }
            let m = validate_ecm(c.name.clone(), &c.matrix, tol).map_err(|e| match e {
                EcmError::NegativeEntry { row, col, value } => ConfigError::validation(
                    format!("{path}[{row}][{col}]"),
                    format!("negative entry {value}"),
                ),
                other => ConfigError::validation(&path, other),
            })?;
            conditions.push(m);
        }

        if self.initial.len() != n {
            return Err(ConfigError::schema(
                "initial",
                format!("expected {n} values, found {}", self.initial.len()),
            ));
        }
        if let Some(i) = self.initial.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ConfigError::validation(
                format!("initial[{i}]"),
                format!("count {} must be non-negative", self.initial[i]),
            ));
        }
        if self.initial.iter().sum::<f64>() <= 0.0 {
            return Err(ConfigError::validation(
                "initial",
                "total population must be positive",
            ));
        }

        let labels: Vec<&str> = self.conditions.iter().map(|c| c.name.as_str()).collect();
        let mut schedules = Vec::with_capacity(self.schedules.len());
        for (i, s) in self.schedules.iter().enumerate() {
            if s.name.trim().is_empty() {
                return Err(ConfigError::validation(
                    format!("schedules[{i}].name"),
                    "empty schedule name",
                ));
            }
            if self.schedules[..i].iter().any(|o| o.name == s.name) {
                return Err(ConfigError::validation(
                    format!("schedules[{i}].name"),
                    format!("duplicate schedule name \"{}\"", s.name),
                ));
            }
            let path = format!("schedules[{i}].pattern");
            let schedule = parse_schedule(&s.pattern, self.length)
                .and_then(|sch| sch.check_labels(&labels).map(|_| sch))
                .map_err(|e| ConfigError::validation(&path, e))?;
            schedules.push(NamedSchedule::new(s.name.clone(), schedule));
        }

        let model = SimulationModel::new(
            self.statuses.clone(),
            conditions,
            self.initial.clone(),
            self.length,
        )
        .and_then(|m| m.with_schedules(schedules))
        .map_err(|e| ConfigError::validation("", e))?;

        Ok(ModelConfig {
            model,
            options: self.options.clone(),
            patterns: self.schedules.iter().map(|s| s.pattern.clone()).collect(),
        })
    }
}

impl ModelConfig {
    /// The config as a JSON document that loads back to an equivalent model.
    pub fn to_document(&self) -> ConfigDocument {
        let m = &self.model;
        ConfigDocument {
            statuses: m.statuses().to_vec(),
            conditions: m
                .conditions()
                .iter()
                .map(|c| ConditionSpec {
                    name: c.label().to_string(),
                    matrix: c.rows().map(<[f64]>::to_vec).collect(),
                })
                .collect(),
            initial: m.initial().counts().to_vec(),
            length: m.length(),
            schedules: m
                .schedules()
                .iter()
                .zip(&self.patterns)
                .map(|(s, p)| ScheduleSpec {
                    name: s.name.clone(),
                    pattern: p.clone(),
                })
                .collect(),
            options: self.options.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{
        "statuses": ["a", "b", "c"],
        "conditions": [{"name": "sample", "matrix": [[0.7, 0.5, 0.1], [0.2, 0.3, 0.2], [0.1, 0.2, 0.7]]}],
        "initial": [100, 100, 100],
        "length": 1,
        "schedules": [{"name": "one", "pattern": "sample"}]
    }"#;

    fn with(field: &str, value: &str) -> String {
        let mut v: serde_json::Value = serde_json::from_str(WORKED).unwrap();
        let ptr = field.split('.').fold(&mut v, |acc, k| match k.parse::<usize>() {
            Ok(i) => &mut acc[i],
            Err(_) => &mut acc[k],
        });
        *ptr = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    #[test]
    fn loads_worked_example() {
        let cfg = parse_config(WORKED).unwrap();
        assert_eq!(cfg.model.conditions().len(), 1);
        assert!(cfg.model.conditions()[0].is_conservative());
        assert_eq!(cfg.options, Options::default());
        assert_eq!(cfg.patterns, ["sample"]);
    }

    #[test]
    fn non_square_matrix() {
        let text = with("conditions.0.matrix", "[[1, 0, 0], [0, 1, 0]]");
        let text = with_statuses(&text, 2);
        assert_eq!(
            parse_config(&text).unwrap_err(),
            ConfigError::Schema {
                path: "conditions[0].matrix".into(),
                reason: "not square of size 2".into()
            }
        );
    }

    fn with_statuses(text: &str, n: usize) -> String {
        let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
        v["statuses"] = (0..n).map(|i| format!("s{i}")).collect();
        v["initial"] = (0..n).map(|_| 1.0).collect();
        v.to_string()
    }

    #[test]
    fn unknown_label() {
        let text = with("schedules.0.pattern", "\"X\"");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.field_path(), Some("schedules[0].pattern"));
        assert!(err.to_string().contains("UnknownLabel: X"), "{err}");
    }

    #[test]
    fn negative_entry_names_the_cell() {
        let text = with("conditions.0.matrix.1.2", "-0.2");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.field_path(), Some("conditions[0].matrix[1][2]"));
    }

    #[test]
    fn type_errors_have_paths() {
        let err = parse_config(&with("initial.1", "\"x\"")).unwrap_err();
        assert_eq!(err.field_path(), Some("initial[1]"));
        let err = parse_config(&with("length", "-3")).unwrap_err();
        assert_eq!(err.field_path(), Some("length"));
        let err = parse_config(&with("length", "0")).unwrap_err();
        assert_eq!(err.field_path(), Some("length"));
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse_config(&with("options", r#"{"sed": 3}"#)).unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }), "{err}");
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = parse_config("{\n  \"statuses\": [\"a\",\n}").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");
        let err = parse_config(&format!("{WORKED} {{}}")).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "{err}");
    }

    #[test]
    fn semantic_checks() {
        let dup = with("statuses", r#"["a", "a", "c"]"#);
        assert_eq!(parse_config(&dup).unwrap_err().field_path(), Some("statuses[1]"));
        let reserved = with("statuses", r#"["a", "t", "c"]"#);
        assert!(parse_config(&reserved).is_err());
        let zero = with("initial", "[0, 0, 0]");
        assert_eq!(parse_config(&zero).unwrap_err().field_path(), Some("initial"));
        let short = with("schedules.0.pattern", "\"sample,sample\"");
        assert!(parse_config(&short).unwrap_err().to_string().contains("LengthOverflow"));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_config("/nonexistent/config.json"),
            Err(ConfigError::FileNotFound(_))
        ));
    }

    #[test]
    fn document_round_trip() {
        let cfg = parse_config(WORKED).unwrap();
        let text = serde_json::to_string(&cfg.to_document()).unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(again.to_document(), cfg.to_document());
    }
}
