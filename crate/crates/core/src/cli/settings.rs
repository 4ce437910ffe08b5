//! Effective run settings: defaults, then a `key = value` file, then flags.

use std::path::Path;

use crate::error::{config, Result, SwiptError};
use crate::mc::FadingSpec;
use crate::model::SystemParams;
use crate::solver::SolverConfig;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub params: SystemParams,
    pub solver: SolverConfig,
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub fading: FadingSpec,
    pub trials: usize,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            params: SystemParams::default(),
            solver: SolverConfig::default(),
            g1: None,
            g2: None,
            fading: FadingSpec::default(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| SwiptError::Config(format!("invalid value '{value}' for '{key}'")))
}

impl Settings {
    /// Sets one key. Returns `Ok(false)` for an unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "q" => self.params.q = num(&key, value)?,
            "sigma2" => self.params.sigma2 = num(&key, value)?,
            "t0" => self.params.t0 = num(&key, value)?,
            "t0_us" => self.params.t0 = num::<f64>(&key, value)? * 1e-6,
            "eta" => self.params.eta = num(&key, value)?,
            "pd" => self.params.pd = num(&key, value)?,
            "pe" => self.params.pe = num(&key, value)?,
            "eps_d" => self.params.eps_d = num(&key, value)?,
            "eps_e" => self.params.eps_e = num(&key, value)?,
            "n" => self.solver.grid_levels = num(&key, value)?,
            "tol_pt_rel" => self.solver.tol_pt_rel = num(&key, value)?,
            "tol_constraint" => self.solver.tol_constraint = num(&key, value)?,
            "g1" => self.g1 = Some(num(&key, value)?),
            "g2" => self.g2 = Some(num(&key, value)?),
            "k" => self.fading.k = num(&key, value)?,
            "omega1" => self.fading.omega1 = num(&key, value)?,
            "omega2" => self.fading.omega2 = num(&key, value)?,
            "trials" => self.trials = num(&key, value)?,
            "seed" => self.seed = num(&key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Applies a config file; unknown keys are errors.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SwiptError::Config(format!("cannot read {}: {e}", path.display())))?;
        for (line_no, key, value) in parse_key_values(&text)? {
            if !self.set(&key, &value)? {
                return config(format!("{}:{line_no}: unknown key '{key}'", path.display()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.solver.validate()
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return config(format!("line {}: expected 'key = value', got '{raw}'", i + 1));
        };
        out.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
