//! Flat key=value experiment configuration: a pure text parser (no I/O) plus
//! validation of every numeric field against the module preconditions.

use crate::error::{Error, Result};
use crate::schedule::{parse_schedule, Schedule};

/// Complete experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Only the circle ships; the field exists so configs state it.
    pub manifold: String,
    pub b: f64,
    pub j_min: usize,
    pub j_max: usize,
    pub n: usize,
    pub s: f64,
    pub r: f64,
    /// Planted Besov density amplitude; 0 means the uniform density.
    pub amplitude: f64,
    pub density_seed: u64,
    /// Intensity schedule R_t(j); required by `clt`-style runs.
    pub schedule: Option<Schedule>,
    /// Schedule echo in canonical form, kept for audit output.
    pub schedule_text: Option<String>,
    /// Fixed-size schedule for de-Poissonization runs.
    pub m_schedule: Vec<usize>,
    pub replicates: usize,
    pub master_seed: u64,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifold: "circle".into(),
            b: 2.0,
            j_min: 2,
            j_max: 5,
            n: 2,
            s: 1.0,
            r: 2.0,
            amplitude: 0.0,
            density_seed: 0,
            schedule: None,
            schedule_text: None,
            m_schedule: Vec::new(),
            replicates: 4000,
            master_seed: 0,
            output_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    /// Ambient dimension; 1 for the circle.
    pub fn d(&self) -> f64 {
        1.0
    }

    /// Probe levels j_min..=j_max.
    pub fn j_list(&self) -> Vec<usize> {
        (self.j_min..=self.j_max).collect()
    }
}

fn bad(line_no: usize, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line_no}: {message}"))
}

fn parse_num<T: std::str::FromStr>(line_no: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| bad(line_no, format!("invalid value {value:?} for key {key}")))
}

/// Parse the flat key=value format. Pure function of the text: `#` starts a
/// comment, blank lines are skipped, keys may appear at most once.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(h) => &raw[..h],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line_no, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(bad(line_no, format!("duplicate key {key}")));
        }
        seen.push(key.to_string());
        match key {
            "manifold" => cfg.manifold = value.to_string(),
            "B" | "b" => cfg.b = parse_num(line_no, key, value)?,
            "j_min" => cfg.j_min = parse_num(line_no, key, value)?,
            "j_max" => cfg.j_max = parse_num(line_no, key, value)?,
            "n" => cfg.n = parse_num(line_no, key, value)?,
            "s" => cfg.s = parse_num(line_no, key, value)?,
            "r" => cfg.r = parse_num(line_no, key, value)?,
            "amplitude" => cfg.amplitude = parse_num(line_no, key, value)?,
            "density_seed" => cfg.density_seed = parse_num(line_no, key, value)?,
            "schedule" => {
                let parsed = parse_schedule(value).map_err(|e| bad(line_no, e))?;
                cfg.schedule_text = Some(parsed.canonical());
                cfg.schedule = Some(parsed);
            }
            "m_schedule" => {
                cfg.m_schedule = value
                    .split(',')
                    .map(|piece| parse_num(line_no, key, piece.trim()))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "replicates" => cfg.replicates = parse_num(line_no, key, value)?,
            "master_seed" => cfg.master_seed = parse_num(line_no, key, value)?,
            "output_dir" => cfg.output_dir = value.to_string(),
            other => return Err(bad(line_no, format!("unknown key {other:?}"))),
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Check every field against the preconditions of the modules that will
/// consume it, before any computation starts.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.manifold != "circle" {
        return Err(Error::Config(format!(
            "unsupported manifold {:?}: only the circle ships",
            cfg.manifold
        )));
    }
    if !(cfg.b > 1.0) {
        return Err(Error::Config("B must exceed 1".into()));
    }
    if cfg.j_min > cfg.j_max {
        return Err(Error::Config(format!(
            "empty level range: j_min {} > j_max {}",
            cfg.j_min, cfg.j_max
        )));
    }
    if cfg.j_max > 12 {
        return Err(Error::Config(format!(
            "j_max {} too large: frame construction is supported up to 12",
            cfg.j_max
        )));
    }
    if cfg.n < 1 || cfg.n > 4 {
        return Err(Error::Config(format!(
            "kernel order n must lie in 1..=4, got {}",
            cfg.n
        )));
    }
    if !(cfg.s > 0.0) || !cfg.s.is_finite() {
        return Err(Error::Config(format!(
            "smoothness s must be positive and finite, got {}",
            cfg.s
        )));
    }
    if !(cfg.r >= 1.0) || !cfg.r.is_finite() {
        return Err(Error::Config(format!(
            "integrability r must be at least 1, got {}",
            cfg.r
        )));
    }
    if !(cfg.amplitude >= 0.0) || !cfg.amplitude.is_finite() {
        return Err(Error::Config(format!(
            "density amplitude must be non-negative, got {}",
            cfg.amplitude
        )));
    }
    if cfg.replicates < 100 {
        return Err(Error::Config(format!(
            "replicates must be at least 100 (Wasserstein estimator precondition), got {}",
            cfg.replicates
        )));
    }
    if cfg.m_schedule.iter().any(|&m| m == 0) {
        return Err(Error::Config("m_schedule entries must be positive".into()));
    }
    if cfg.output_dir.is_empty() {
        return Err(Error::Config("output_dir must be non-empty".into()));
    }
    Ok(())
}
