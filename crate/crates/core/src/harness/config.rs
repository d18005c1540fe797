//! Experiment configuration: one JSON document per experiment, checked
//! against `schema/experiment.schema.json`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::irf::IrfProblem;
use crate::probcore::{
    Channel, Constraint, ConstraintFunctional, DistortionMatrix, DivergenceKind, Pmf,
};

/// Default solver tolerance in bits.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// A threshold that may be `+∞`, written as a number or as `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold(pub f64);

impl Serialize for Threshold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Threshold;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Threshold, E> {
                if v >= 0.0 {
                    Ok(Threshold(v))
                } else {
                    Err(E::custom(format!("threshold {v} is negative")))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Threshold, E> {
                Ok(Threshold(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Threshold, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Threshold, E> {
                match v {
                    "inf" | "infinity" | "+inf" => Ok(Threshold(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// A distortion matrix or the name of a standard one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistortionSpec {
    Named(NamedDistortion),
    Matrix(DistortionMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedDistortion {
    Hamming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub functional: ConstraintFunctional,
    pub threshold: Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub theta_d: Vec<Threshold>,
    pub theta_div: Vec<Threshold>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Source pmf `P_X`.
    pub source: Pmf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<DivergenceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_d: Option<Threshold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_div: Option<Threshold>,
    /// General constraint list; replaces the distortion/divergence pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<ConstraintSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_alphabet_size: Option<usize>,
    /// Use this channel instead of solving for one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<Channel>,
    pub seed: u64,
    /// Monte Carlo trials; the number of seeds for `verify-converse`.
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    /// Symbol file for `roundtrip`; relative paths resolve against the
    /// config file. Without it the command draws `trials` symbols.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Block size for `roundtrip`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    /// Used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// A configuration problem with the field it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.to_string(),
    }
}

impl ExperimentConfig {
    /// Parses and validates; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| bad(&format!("line {} column {}", e.line(), e.column()), e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `input` is resolved against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| bad(&path.display().to_string(), e))?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(input), Some(dir)) = (&cfg.input, path.parent()) {
            if input.is_relative() {
                cfg.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(bad("trials", "must be positive"));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(bad("tolerance", "must be positive and finite"));
            }
        }
        if self.budget == Some(0) {
            return Err(bad("budget", "must be positive"));
        }
        if let Some(ns) = &self.block_sizes {
            if ns.is_empty() || ns.contains(&0) {
                return Err(bad(
                    "block_sizes",
                    "must be a non-empty list of positive sizes",
                ));
            }
        }
        if matches!(self.block_size, Some(0))
            || self.block_size.is_some_and(|n| n > usize::from(u16::MAX))
        {
            return Err(bad("block_size", "must lie in 1..=65535"));
        }
        if let Some(g) = &self.sweep {
            if g.theta_d.is_empty() || g.theta_div.is_empty() {
                return Err(bad("sweep", "grids must be non-empty"));
            }
        }
        let pair = self.distortion.is_some()
            || self.divergence.is_some()
            || self.theta_d.is_some()
            || self.theta_div.is_some();
        if pair && self.constraints.is_some() {
            return Err(bad(
                "constraints",
                "give either a constraint list or distortion/divergence/theta_d/theta_div, not both",
            ));
        }
        if self.constraints.is_some() || pair {
            match (&self.sweep, self.theta_d) {
                (Some(g), None) => self.problem_at(Some((g.theta_d[0].0, g.theta_div[0].0)))?,
                _ => self.problem()?,
            };
        } else if self.channel.is_none() {
            return Err(bad("constraints", "need a problem definition or a channel"));
        }
        if let Some(q) = &self.channel {
            if q.in_size() != self.source.len() {
                return Err(bad(
                    "channel",
                    format!(
                        "{} rows for a source of {} symbols",
                        q.in_size(),
                        self.source.len()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    pub fn has_problem(&self) -> bool {
        self.constraints.is_some() || self.distortion.is_some()
    }

    pub fn distortion_matrix(&self) -> Result<Option<DistortionMatrix>, ConfigError> {
        let n = self.recon_alphabet_size.unwrap_or(self.source.len());
        match &self.distortion {
            None => Ok(None),
            Some(DistortionSpec::Matrix(m)) => Ok(Some(m.clone())),
            Some(DistortionSpec::Named(NamedDistortion::Hamming)) => {
                DistortionMatrix::hamming(self.source.len(), n)
                    .map(Some)
                    .map_err(|e| bad("distortion", e))
            }
        }
    }

    /// The rate-function problem at the configured thresholds.
    pub fn problem(&self) -> Result<IrfProblem, ConfigError> {
        self.problem_at(None)
    }

    /// The RDPF problem at `(θ_d, θ_D)`, for sweeps.
    pub fn problem_at(&self, thetas: Option<(f64, f64)>) -> Result<IrfProblem, ConfigError> {
        if let Some(list) = &self.constraints {
            if thetas.is_some() {
                return Err(bad("sweep", "sweeps need the distortion/divergence form"));
            }
            let cs = list
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    Constraint::new(c.functional.clone(), c.threshold.0)
                        .map_err(|e| bad(&format!("constraints[{i}]"), e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            return IrfProblem::new(self.source.clone(), cs, self.recon_alphabet_size)
                .map_err(|e| bad("constraints", e));
        }
        let d = self
            .distortion_matrix()?
            .ok_or_else(|| bad("distortion", "missing"))?;
        let kind = self
            .divergence
            .clone()
            .unwrap_or(DivergenceKind::TotalVariation);
        let (td, tv) = match thetas {
            Some(t) => t,
            None => (
                self.theta_d.ok_or_else(|| bad("theta_d", "missing"))?.0,
                self.theta_div.map_or(f64::INFINITY, |t| t.0),
            ),
        };
        if let Some(n) = self.recon_alphabet_size {
            if n != d.out_size() {
                return Err(bad(
                    "recon_alphabet_size",
                    format!(
                        "{n} differs from the distortion matrix's {} columns",
                        d.out_size()
                    ),
                ));
            }
        }
        let cs = vec![
            Constraint::distortion(d, td).map_err(|e| bad("theta_d", e))?,
            Constraint::divergence(kind, tv).map_err(|e| bad("theta_div", e))?,
        ];
        IrfProblem::new(self.source.clone(), cs, self.recon_alphabet_size)
            .map_err(|e| bad("problem", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "source": [0.5, 0.5],
        "distortion": "hamming",
        "divergence": {"kind": "tv"},
        "theta_d": 0.25,
        "theta_div": "inf",
        "seed": 7,
        "trials": 1000
    }"#;

    #[test]
    fn parses_pair_form() {
        let cfg = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.theta_div, Some(Threshold(f64::INFINITY)));
        let p = cfg.problem().unwrap();
        assert_eq!(p.thresholds(), vec![0.25, f64::INFINITY]);
        assert_eq!(cfg.tolerance(), DEFAULT_TOLERANCE);
    }

    #[test]
    fn parses_constraint_list_and_matrix() {
        let text = r#"{
            "source": [0.2, 0.8],
            "constraints": [
                {"functional": {"type": "distortion", "matrix": [[0, 1, 0.5], [1, 0, 0.5]]}, "threshold": 0.3},
                {"functional": {"type": "marginal_divergence", "divergence": {"kind": "w1", "source_values": [0, 1], "recon_values": [0, 1, 0.5]}}, "threshold": 0.1}
            ],
            "recon_alphabet_size": 3,
            "seed": 1,
            "trials": 10
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.problem().unwrap().recon_alphabet_size(), 3);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            (BASE.replace("\"seed\": 7,", ""), "seed"),
            (BASE.replace("\"trials\": 1000", "\"trials\": 0"), "trials"),
            (
                BASE.replace("\"seed\": 7,", "\"seed\": 7, \"colour\": 1,"),
                "colour",
            ),
            (BASE.replace("[0.5, 0.5]", "[0.5, 0.6]"), "sum"),
            (BASE.replace("0.25", "-0.25"), "negative"),
            (BASE.replace("\"inf\"", "\"huge\""), "huge"),
            (BASE.replace("\"tv\"", "\"hellinger\""), "hellinger"),
            (BASE.replace("\"hamming\"", "[[0, 1]]"), "dimension"),
        ];
        for (text, needle) in cases {
            let err = ExperimentConfig::from_json(&text).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = ExperimentConfig::from_json("{\n  \"source\": [0.5,\n}").unwrap_err();
        assert!(err.field.starts_with("line 3"), "{err}");
    }

    #[test]
    fn channel_only_config() {
        let text = r#"{"source": [0.5, 0.5], "channel": [[0.75, 0.25], [0.25, 0.75]], "seed": 1, "trials": 5}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(!cfg.has_problem());
        let text = r#"{"source": [0.5, 0.5], "seed": 1, "trials": 5}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn threshold_roundtrip() {
        let t: Vec<Threshold> = serde_json::from_str(r#"[0, 0.5, "inf", 3]"#).unwrap();
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"[0.0,0.5,"inf",3.0]"#);
    }
}
