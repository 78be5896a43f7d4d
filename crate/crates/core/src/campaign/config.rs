use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::disorder::{check_dimension, ErrorModel};
use crate::error::{Error, Result};
use crate::tempering::{Spacing, TemperatureGrid};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "QUDIT_THRESHOLD_WORKERS";

/// Largest supported equilibration exponent.
pub const MAX_EXPONENT: u32 = 40;

/// Parameters of a simulation campaign over an `(p, L)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Qudit dimension.
    pub d: usize,
    /// Error rates.
    pub p: Vec<f64>,
    /// Linear system sizes.
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    /// Disorder samples per `(p, L)`.
    pub samples: usize,
    /// Equilibration exponent, `t_eq = 2^b`.
    pub b: u32,
    pub t_min: f64,
    pub t_max: f64,
    /// Number of temperatures.
    pub temperatures: usize,
    #[serde(default)]
    pub spacing: Spacing,
    pub seed: u64,
    #[serde(default = "default_measure_every")]
    pub measure_every: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

fn default_measure_every() -> u64 {
    1
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn t_eq(&self) -> u64 {
        1u64 << self.b
    }

    pub fn grid(&self) -> Result<TemperatureGrid> {
        TemperatureGrid::new(self.t_min, self.t_max, self.temperatures, self.spacing)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        check_dimension(self.d).map_err(|e| Error::Config(e.to_string()))?;
        if self.p.is_empty() {
            return bad("p list is empty".into());
        }
        for &p in &self.p {
            ErrorModel::new(self.d, p).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.sizes.is_empty() {
            return bad("L list is empty".into());
        }
        if let Some(l) = self.sizes.iter().find(|&&l| l < 2) {
            return bad(format!("system size {l} is below 2"));
        }
        let mut distinct = self.p.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut sizes = self.sizes.clone();
        sizes.sort_unstable();
        sizes.dedup();
        if distinct.len() != self.p.len() || sizes.len() != self.sizes.len() {
            return bad("p and L lists must not repeat values".into());
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.b > MAX_EXPONENT {
            return bad(format!("b = {} exceeds {MAX_EXPONENT}", self.b));
        }
        if self.measure_every == 0 {
            return bad("measure_every must be at least 1".into());
        }
        // the last three logarithmic bins must all receive measurements
        if self.t_eq() >= 4 && self.measure_every > self.t_eq() / 4 {
            return bad(format!("measure_every must not exceed t_eq/4 = {}", self.t_eq() / 4));
        }
        self.grid().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Worker count after the environment override; 0 means all cores.
    pub fn effective_workers(&self) -> Result<usize> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{WORKERS_ENV} = {v:?} is not a count"))),
            Err(_) => Ok(self.workers),
        }
    }
}
