//! Experiment orchestration behind the `rdpc` binary.
//!
//! Every command is a pure function of the configuration (after flag
//! overrides): it returns a JSON report, the files to write and an exit
//! status. Monte Carlo trials run in parallel; their statistics are integer
//! counts, so results do not depend on scheduling.

pub mod config;
pub mod report;

mod commands;

use std::fmt;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde_json::Value;

use crate::error::Error;
use crate::probcore::Pmf;

pub use commands::{
    cmd_roundtrip, cmd_solve, cmd_sweep, cmd_verify_converse, cmd_verify_thm1, cmd_verify_thm3,
    read_symbols, THM1_TV_TOLERANCE, THM3_TV_TOLERANCE, TREND_TOLERANCE,
};
pub use config::{ConfigError, ExperimentConfig, Threshold};
pub use report::{Check, VerificationReport};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Config = 1,
    Infeasible = 2,
    BudgetExhausted = 3,
    /// A verification report with at least one failed check.
    VerificationFailed = 4,
    /// Solver iteration cap, I/O failure or a corrupt bitstream.
    Runtime = 5,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// A command failure with the exit status it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessError {
    pub status: ExitStatus,
    pub message: String,
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    pub fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        HarnessError {
            status,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::new(ExitStatus::Config, e.to_string())
    }
}

impl From<Error> for HarnessError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Infeasible { .. } => ExitStatus::Infeasible,
            Error::BudgetExhausted { .. } => ExitStatus::BudgetExhausted,
            Error::MaxIterations
            | Error::Truncated
            | Error::Malformed(_)
            | Error::BadMagic
            | Error::UnsupportedVersion(_) => ExitStatus::Runtime,
            _ => ExitStatus::Config,
        };
        HarnessError::new(status, e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::new(ExitStatus::Runtime, e.to_string())
    }
}

/// Result of one command.
#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub status: ExitStatus,
    /// Printed to stdout.
    pub report: Value,
    /// Files to write, relative to the output directory.
    pub files: Vec<(String, Vec<u8>)>,
}

impl CommandOutput {
    /// Writes `files` under `dir`, creating it if needed.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                std::fs::write(&path, bytes)?;
                Ok(path)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Roundtrip,
    VerifyThm1,
    VerifyConverse,
    VerifyThm3,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Roundtrip => "roundtrip",
            Command::VerifyThm1 => "verify-thm1",
            Command::VerifyConverse => "verify-converse",
            Command::VerifyThm3 => "verify-thm3",
        }
    }
}

/// Flag values that override the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub budget: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), ConfigError> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(b) = self.budget {
            cfg.budget = Some(b);
        }
        cfg.validate()
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<CommandOutput, HarnessError> {
    match command {
        Command::Solve => cmd_solve(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Roundtrip => cmd_roundtrip(cfg),
        Command::VerifyThm1 => cmd_verify_thm1(cfg),
        Command::VerifyConverse => cmd_verify_converse(cfg),
        Command::VerifyThm3 => cmd_verify_thm3(cfg),
    }
}

/// Source symbols for Monte Carlo trial `index`: ChaCha20 keyed like the
/// candidate stream but with key byte 8 set to 1, so the data is independent
/// of the shared randomness.
pub fn source_symbols(seed: u64, index: u64, source: &Pmf, count: usize) -> Vec<usize> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = 1;
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(index);
    let cdf: Vec<f64> = source
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let last = source.support().last().unwrap_or(0);
    (0..count)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            cdf.iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_sampling_is_deterministic_and_calibrated() {
        let p = Pmf::new(vec![0.1, 0.0, 0.9]).unwrap();
        assert_eq!(source_symbols(3, 4, &p, 10), source_symbols(3, 4, &p, 10));
        let draws: Vec<usize> = (0..20_000)
            .flat_map(|i| source_symbols(3, i, &p, 1))
            .collect();
        assert!(!draws.contains(&1));
        let ones = draws.iter().filter(|&&x| x == 0).count() as f64 / draws.len() as f64;
        assert!((ones - 0.1).abs() < 0.01, "{ones}");
    }

    #[test]
    fn error_statuses() {
        let s = |e: Error| HarnessError::from(e).status;
        assert_eq!(
            s(Error::Infeasible { violation: 1.0 }),
            ExitStatus::Infeasible
        );
        assert_eq!(
            s(Error::BudgetExhausted { budget: 3 }),
            ExitStatus::BudgetExhausted
        );
        assert_eq!(s(Error::TooLarge("x".into())), ExitStatus::Config);
        assert_eq!(s(Error::MaxIterations), ExitStatus::Runtime);
        assert_eq!(ExitStatus::VerificationFailed.code(), 4);
    }
}
