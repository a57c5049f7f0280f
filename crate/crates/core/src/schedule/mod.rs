//! Intervention schedules: one condition label per timestep.
//!
//! Schedules can be written by hand in a small pattern language (see
//! [`parse_schedule`]) or generated by the periodic and arithmetic-gap
//! families used for interval sweeps.

mod generate;
mod parser;

use std::fmt;

pub use generate::{arithmetic_gap_schedule, periodic_schedule};
pub use parser::{parse_schedule, MAX_NESTING};

/// Errors produced while building or parsing a schedule.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("SyntaxError at {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("LengthOverflow: pattern expands to at least {expanded} labels, target is {target}")]
    LengthOverflow { expanded: usize, target: usize },
    #[error("LengthUnderflow: pattern expands to {expanded} labels, target is {target}")]
    LengthUnderflow { expanded: usize, target: usize },
    #[error("StarNotLast: '(...)*' at {position} must be the final top-level item")]
    StarNotLast { position: usize },
    #[error("InvalidLabel: {0:?} is not an identifier")]
    InvalidLabel(String),
    #[error("EmptySchedule: a schedule needs at least one timestep")]
    Empty,
    #[error("UnknownLabel: {label} (known: {known})")]
    UnknownLabel { label: String, known: String },
}

/// Returns true when `s` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_label(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Per-timestep condition labels. `labels[t]` selects the matrix that
/// carries the population from `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    labels: Vec<String>,
}

impl Schedule {
    pub fn new<I, S>(labels: I) -> Result<Self, ScheduleError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ScheduleError::Empty);
        }
        if let Some(bad) = labels.iter().find(|l| !is_label(l)) {
            return Err(ScheduleError::InvalidLabel(bad.clone()));
        }
        Ok(Self { labels })
    }

    /// A schedule that applies `label` at every step.
    pub fn constant(label: &str, length: usize) -> Result<Self, ScheduleError> {
        Self::new(std::iter::repeat_n(label, length))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Always false for a constructed schedule; provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, t: usize) -> Option<&str> {
        self.labels.get(t).map(String::as_str)
    }

    /// Checks every label against a set of known condition names.
    pub fn check_labels<S: AsRef<str>>(&self, known: &[S]) -> Result<(), ScheduleError> {
        for label in &self.labels {
            if !known.iter().any(|k| k.as_ref() == label) {
                return Err(ScheduleError::UnknownLabel {
                    label: label.clone(),
                    known: known.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(","),
                });
            }
        }
        Ok(())
    }

    /// Number of timesteps that use `label`.
    pub fn count(&self, label: &str) -> usize {
        self.labels.iter().filter(|l| *l == label).count()
    }

    /// Applies a consistent renaming of condition labels.
    pub fn rename<F>(&self, mut f: F) -> Result<Self, ScheduleError>
    where
        F: FnMut(&str) -> String,
    {
        Self::new(self.labels.iter().map(|l| f(l)))
    }
}

/// Canonical comma-separated form, e.g. `I,C,I`.
pub fn format_schedule(s: &Schedule) -> String {
    s.labels.join(",")
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_schedule(self))
    }
}

/// A schedule with a display name, as declared in a model configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSchedule {
    pub name: String,
    pub schedule: Schedule,
}

impl NamedSchedule {
    pub fn new(name: impl Into<String>, schedule: Schedule) -> Self {
        Self {
            name: name.into(),
            schedule,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_grammar() {
        assert!(is_label("I"));
        assert!(is_label("_x9"));
        assert!(is_label("attainable"));
        assert!(!is_label(""));
        assert!(!is_label("9a"));
        assert!(!is_label("a-b"));
    }

    #[test]
    fn format_is_comma_joined() {
        let s = Schedule::new(["I", "C", "I"]).unwrap();
        assert_eq!(format_schedule(&s), "I,C,I");
    }

    #[test]
    fn rejects_empty_and_bad_labels() {
        assert_eq!(Schedule::new(Vec::<String>::new()), Err(ScheduleError::Empty));
        assert!(matches!(
            Schedule::new(["I", "no way"]),
            Err(ScheduleError::InvalidLabel(_))
        ));
    }

    #[test]
    fn unknown_label_reported() {
        let s = Schedule::new(["X"]).unwrap();
        let err = s.check_labels(&["I", "C"]).unwrap_err();
        assert_eq!(err.to_string(), "UnknownLabel: X (known: I,C)");
    }
}
