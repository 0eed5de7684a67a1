//! Run configuration: flat key=value config file, environment override for
//! the cache directory, and CLI-flag precedence handled by the caller.

use std::path::PathBuf;

use hamsys_core::{Error, Result};

pub const CACHE_DIR_ENV: &str = "HAMSYS_CACHE_DIR";

#[derive(Debug, Clone, PartialEq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub cache_dir: PathBuf,
    pub ode_tol: f64,
    pub quad_rel_tol: f64,
    pub geometry_tol: f64,
    pub format: OutputFormat,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cache_dir = std::env::var(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|_| PathBuf::from(".hamsys-cache"));
        RunConfig {
            cache_dir,
            ode_tol: 1e-12,
            quad_rel_tol: 1e-11,
            geometry_tol: 1e-9,
            format: OutputFormat::Json,
            verbosity: 0,
        }
    }
}

impl RunConfig {
    /// Parse a flat `key = value` file over the defaults. Unknown keys are
    /// collected as warnings, not errors.
    pub fn from_file(path: &std::path::Path) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {path:?}: {e}")))?;
        let mut config = RunConfig::default();
        let mut warnings = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                warnings.push(format!("config line {} is not key=value", lineno + 1));
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |v: &str| -> Result<f64> {
                v.parse()
                    .map_err(|_| Error::Domain(format!("config key {key}: bad number {v}")))
            };
            match key {
                "cache_dir" => config.cache_dir = PathBuf::from(value),
                "ode_tol" => config.ode_tol = parse_f64(value)?,
                "quad_rel_tol" => config.quad_rel_tol = parse_f64(value)?,
                "geometry_tol" => config.geometry_tol = parse_f64(value)?,
                "format" => {
                    config.format = match value {
                        "json" => OutputFormat::Json,
                        "csv" => OutputFormat::Csv,
                        other => {
                            return Err(Error::Domain(format!("unknown format {other}")));
                        }
                    }
                }
                "verbosity" => {
                    config.verbosity = value
                        .parse()
                        .map_err(|_| Error::Domain(format!("bad verbosity {value}")))?
                }
                other => warnings.push(format!("unknown config key {other}")),
            }
        }
        Ok((config, warnings))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-14..=1e-6).contains(&self.ode_tol) {
            return Err(Error::Domain(format!(
                "ode_tol {} outside [1e-14, 1e-6]",
                self.ode_tol
            )));
        }
        if !(1e-14..=1e-6).contains(&self.quad_rel_tol) {
            return Err(Error::Domain(format!(
                "quad_rel_tol {} outside [1e-14, 1e-6]",
                self.quad_rel_tol
            )));
        }
        if !(1e-12..=1e-4).contains(&self.geometry_tol) {
            return Err(Error::Domain(format!(
                "geometry_tol {} outside [1e-12, 1e-4]",
                self.geometry_tol
            )));
        }
        Ok(())
    }
}
