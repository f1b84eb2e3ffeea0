use std::path::Path;

use magsac_core::metrics::DEFAULT_FAILURE_THRESHOLD;
use magsac_core::synthetic::DEFAULT_POINT_COUNT;
use magsac_core::{Method, ProblemKind, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Everything a benchmark sweep or a single fit needs. Built from defaults,
/// then an optional `key=value` file, then command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub problem: ProblemKind,
    pub methods: Vec<Method>,
    /// Also report σ-consensus post-processed variants of the baselines.
    pub post_sigma: bool,
    pub solver: SolverConfig,
    pub runs: usize,
    /// Runs above this RMS error, pixels, count as failures.
    pub failure_threshold: f64,
    pub noise_levels: Vec<f64>,
    pub outlier_ratios: Vec<f64>,
    /// Points per synthetic scene.
    pub points: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Homography,
            methods: Method::ALL.to_vec(),
            post_sigma: false,
            solver: SolverConfig::default(),
            runs: 10,
            failure_threshold: DEFAULT_FAILURE_THRESHOLD,
            noise_levels: vec![0.5, 1.0, 2.0],
            outlier_ratios: vec![0.5],
            points: DEFAULT_POINT_COUNT,
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| CliError::Config {
        line,
        message: format!("cannot parse '{value}' for '{key}'"),
    })
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse_value(line, key, v))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(CliError::Config {
            line,
            message: format!("'{key}' expects a boolean, got '{value}'"),
        }),
    }
}

impl BenchConfig {
    /// Applies one `key=value` setting; `line` is reported in errors.
    pub fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        match key.as_str() {
            "problem" => {
                self.problem = value.trim().parse().map_err(|e: magsac_core::Error| CliError::Config {
                    line,
                    message: e.to_string(),
                })?
            }
            "method" | "methods" => self.methods = parse_list(line, &key, value)?,
            "post_sigma" => self.post_sigma = parse_bool(line, &key, value)?,
            "sigma_max" => self.solver.noise.sigma_max = parse_value(line, &key, value)?,
            "partitions" => self.solver.noise.partitions = parse_value(line, &key, value)?,
            "quantile" => self.solver.noise.quantile = parse_value(line, &key, value)?,
            "outlier_bound" => self.solver.noise.outlier_bound = Some(parse_value(line, &key, value)?),
            "confidence" => self.solver.confidence = parse_value(line, &key, value)?,
            "seed" => self.solver.seed = parse_value(line, &key, value)?,
            "max_iterations" => self.solver.max_iterations = parse_value(line, &key, value)?,
            "min_iterations" => self.solver.min_iterations = parse_value(line, &key, value)?,
            "loop_sigma" | "threshold" => self.solver.loop_sigma = parse_value(line, &key, value)?,
            "inner_iterations" => self.solver.inner_iterations = parse_value(line, &key, value)?,
            "reference_sigma" => self.solver.reference_sigma = parse_value(line, &key, value)?,
            "runs" => self.runs = parse_value(line, &key, value)?,
            "failure_threshold" => self.failure_threshold = parse_value(line, &key, value)?,
            "noise" | "noise_levels" => self.noise_levels = parse_list(line, &key, value)?,
            "outliers" | "outlier_ratios" => self.outlier_ratios = parse_list(line, &key, value)?,
            "points" => self.points = parse_value(line, &key, value)?,
            _ => {
                return Err(CliError::Config {
                    line,
                    message: format!("unknown key '{key}'"),
                })
            }
        }
        Ok(())
    }

    /// Applies a `key=value` document. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: k + 1,
                message: format!("expected key=value, got '{line}'"),
            })?;
            self.apply(k + 1, key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let bad = |message: String| Err(CliError::Config { line: 0, message });
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if !(self.failure_threshold > 0.0) {
            return bad(format!("failure threshold must be positive, got {}", self.failure_threshold));
        }
        if let Some(r) = self.outlier_ratios.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return bad(format!("outlier ratios must lie in [0, 1), got {r}"));
        }
        if let Some(s) = self.noise_levels.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return bad(format!("noise levels must be non-negative, got {s}"));
        }
        Ok(())
    }
}
