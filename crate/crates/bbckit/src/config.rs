//! Flat key=value experiment configuration.
//!
//! One key per line, `#` comments, blank lines ignored. `sut=`, `spec=`,
//! and `mode=` repeat to span a matrix; everything else appears at most
//! once. Paths are resolved relative to the config file's directory.

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("config lists no {0}")]
    Missing(&'static str),
}

fn invalid(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        line,
        message: message.into(),
    }
}

/// Engine variant of one experiment cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum RunMode {
    /// Full loop with live monitors.
    Bbc,
    /// Full loop, monitors recording but never aborting.
    BbcUnmonitored,
    LearnThenCheck,
    /// Standalone testing straight from the property.
    Mbt,
}

impl RunMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RunMode::Bbc => "bbc",
            RunMode::BbcUnmonitored => "bbc-nomon",
            RunMode::LearnThenCheck => "learn-then-check",
            RunMode::Mbt => "mbt",
        }
    }

    pub fn parse(text: &str) -> Option<RunMode> {
        Some(match text {
            "bbc" => RunMode::Bbc,
            "bbc-nomon" => RunMode::BbcUnmonitored,
            "learn-then-check" => RunMode::LearnThenCheck,
            "mbt" => RunMode::Mbt,
            _ => return None,
        })
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct ExperimentConfig {
    pub suts: Vec<PathBuf>,
    pub specs: Vec<PathBuf>,
    pub modes: Vec<RunMode>,
    /// Seeds 0..n, one run per seed.
    pub seeds: u64,
    pub step_budget: Option<u64>,
    /// Conformance-test cap per round.
    pub max_tests: Option<u64>,
    /// Suite size for standalone testing cells.
    pub mbt_tests: u64,
    pub expected_infix: f64,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            suts: Vec::new(),
            specs: Vec::new(),
            modes: vec![RunMode::Bbc],
            seeds: 1,
            step_budget: None,
            max_tests: None,
            mbt_tests: 1000,
            expected_infix: 10.0,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config; `dir` anchors relative paths.
    pub fn parse(text: &str, dir: &Path) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig {
            modes: Vec::new(),
            ..ExperimentConfig::default()
        };
        let mut seen: Vec<&str> = Vec::new();
        let once = |line: usize, key: &'static str, seen: &mut Vec<&str>| {
            if seen.contains(&key) {
                Err(invalid(line, format!("{key} given twice")))
            } else {
                seen.push(key);
                Ok(())
            }
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(invalid(line, "expected key=value"));
            };
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| invalid(line, format!("{key} must be a nonnegative integer")))
            };
            match key {
                "sut" => cfg.suts.push(dir.join(value)),
                "spec" => cfg.specs.push(dir.join(value)),
                "mode" => cfg.modes.push(
                    RunMode::parse(value)
                        .ok_or_else(|| invalid(line, format!("unknown mode {value:?}")))?,
                ),
                "seeds" => {
                    once(line, "seeds", &mut seen)?;
                    cfg.seeds = int(value)?;
                    if cfg.seeds == 0 {
                        return Err(invalid(line, "seeds must be positive"));
                    }
                }
                "step-budget" => {
                    once(line, "step-budget", &mut seen)?;
                    cfg.step_budget = Some(int(value)?);
                }
                "max-tests" => {
                    once(line, "max-tests", &mut seen)?;
                    cfg.max_tests = Some(int(value)?);
                }
                "mbt-tests" => {
                    once(line, "mbt-tests", &mut seen)?;
                    cfg.mbt_tests = int(value)?;
                }
                "expected-infix" => {
                    once(line, "expected-infix", &mut seen)?;
                    cfg.expected_infix = value
                        .parse::<f64>()
                        .ok()
                        .filter(|f| f.is_finite() && *f >= 0.0)
                        .ok_or_else(|| invalid(line, "expected-infix must be a nonnegative number"))?;
                }
                _ => return Err(invalid(line, format!("unknown key {key:?}"))),
            }
        }
        if cfg.suts.is_empty() {
            return Err(ConfigError::Missing("sut"));
        }
        if cfg.specs.is_empty() {
            return Err(ConfigError::Missing("spec"));
        }
        if cfg.modes.is_empty() {
            cfg.modes.push(RunMode::Bbc);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_matrix() {
        let text = "# lock family\nsut=lock.dot\nsut=lock2.dot\nspec=p1.dot\nmode=bbc\nmode=learn-then-check\nseeds=50\nstep-budget=100000\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/tmp/exp")).unwrap();
        assert_eq!(cfg.suts.len(), 2);
        assert_eq!(cfg.suts[0], Path::new("/tmp/exp/lock.dot"));
        assert_eq!(cfg.modes, vec![RunMode::Bbc, RunMode::LearnThenCheck]);
        assert_eq!(cfg.seeds, 50);
        assert_eq!(cfg.step_budget, Some(100000));
    }

    #[test]
    fn rejects_unknown_keys_with_the_line() {
        let text = "sut=a.dot\nspec=p.dot\nworkers=4\n";
        assert_eq!(
            ExperimentConfig::parse(text, Path::new(".")),
            Err(ConfigError::Invalid {
                line: 3,
                message: "unknown key \"workers\"".into()
            })
        );
    }

    #[test]
    fn rejects_duplicates_and_missing_sections() {
        let text = "sut=a.dot\nspec=p.dot\nseeds=2\nseeds=3\n";
        assert!(matches!(
            ExperimentConfig::parse(text, Path::new(".")),
            Err(ConfigError::Invalid { line: 4, .. })
        ));
        assert_eq!(
            ExperimentConfig::parse("spec=p.dot\n", Path::new(".")),
            Err(ConfigError::Missing("sut"))
        );
    }

    #[test]
    fn defaults_apply() {
        let cfg = ExperimentConfig::parse("sut=a.dot\nspec=p.dot\n", Path::new(".")).unwrap();
        assert_eq!(cfg.modes, vec![RunMode::Bbc]);
        assert_eq!(cfg.seeds, 1);
        assert_eq!(cfg.mbt_tests, 1000);
    }
}
