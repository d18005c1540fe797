//! Verification reports and JSON helpers.

use serde::Serialize;
use serde_json::{json, Value};

/// JSON number, or `"inf"`, `"-inf"`, `"nan"` for values JSON cannot hold.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn ser_num<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    num(*x).serialize(s)
}

/// One verified claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The inequality being checked, in words.
    pub claim: String,
    #[serde(serialize_with = "ser_num")]
    pub measured: f64,
    #[serde(serialize_with = "ser_num")]
    pub bound: f64,
    pub pass: bool,
    /// Distance to the bound, positive when the claim holds.
    #[serde(serialize_with = "ser_num")]
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// `measured < bound`, or `≤` when `strict` is false.
    pub fn below(name: &str, claim: &str, measured: f64, bound: f64, strict: bool) -> Self {
        let pass = if strict {
            measured < bound
        } else {
            measured <= bound
        };
        Check {
            name: name.into(),
            claim: claim.into(),
            measured,
            bound,
            pass,
            margin: bound - measured,
            note: None,
        }
    }

    /// `measured ≥ bound`.
    pub fn above(name: &str, claim: &str, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            claim: claim.into(),
            measured,
            bound,
            pass: measured >= bound,
            margin: measured - bound,
            note: None,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, claim: &str, note: String) -> Self {
        Check {
            name: name.into(),
            claim: claim.into(),
            measured: f64::NAN,
            bound: f64::NAN,
            pass: false,
            margin: f64::NAN,
            note: Some(note),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub command: String,
    pub checks: Vec<Check>,
    /// True exactly when every check passes.
    pub pass: bool,
    pub details: Value,
}

impl VerificationReport {
    pub fn new(command: &str, checks: Vec<Check>, details: Value) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport {
            command: command.into(),
            checks,
            pass,
            details,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_pass_is_conjunction() {
        let ok = Check::below("a", "a < 1", 0.5, 1.0, true);
        let tie = Check::below("b", "b < 1", 1.0, 1.0, true);
        let tie_loose = Check::below("c", "c <= 1", 1.0, 1.0, false);
        assert!(ok.pass && !tie.pass && tie_loose.pass);
        assert!(VerificationReport::new("x", vec![ok.clone(), tie_loose], Value::Null).pass);
        assert!(!VerificationReport::new("x", vec![ok, tie], Value::Null).pass);
        assert!(VerificationReport::new("x", vec![], Value::Null).pass);
    }

    #[test]
    fn non_finite_numbers_serialize_as_strings() {
        let c = Check::failed("f", "never", "budget".into());
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["measured"], "nan");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(num(0.25), 0.25);
        assert_eq!(Check::above("m", "m >= 0", 0.5, 0.0).margin, 0.5);
    }
}
