//! Run configuration files (TOML).
//!
//! ```toml
//! kick_strength = 3.1
//! hbar_eff = 0.8            # or an [units] table
//! phases = [0.0, 2.0943951023931953, 0.0]
//! sigma = 1.32              # optional, defaults to 1.65·ℏ̄
//! seed = 2018
//!
//! [classical]
//! points = 200000
//! kicks = 15
//! record = [15]
//!
//! [quantum]
//! samples = 10000
//! kicks = 15
//! record = [15]
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hbar_eff_from_units, ExperimentUnits, PhaseSequence, SimParams, CESIUM_D2_WAVELENGTH, CESIUM_MASS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    /// Kick period in seconds.
    pub pulse_period: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
    #[serde(default = "default_mass")]
    pub atom_mass: f64,
}

fn default_wavelength() -> f64 {
    CESIUM_D2_WAVELENGTH
}

fn default_mass() -> f64 {
    CESIUM_MASS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Half-width of the symmetric momentum grid.
    pub half_width: f64,
    /// Bin spacing; defaults to ℏ̄.
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSection {
    pub points: usize,
    pub kicks: u64,
    /// Kick counts at which distributions are written; defaults to `[kicks]`.
    #[serde(default)]
    pub record: Vec<u64>,
    #[serde(default = "default_portrait_bins")]
    pub portrait_bins: usize,
    pub grid: Option<GridSection>,
}

fn default_portrait_bins() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSection {
    pub samples: u64,
    pub kicks: u64,
    #[serde(default)]
    pub record: Vec<u64>,
    pub grid: Option<GridSection>,
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kick_strength: f64,
    pub hbar_eff: Option<f64>,
    pub units: Option<UnitsSection>,
    pub phases: Vec<f64>,
    pub sigma: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub classical: Option<ClassicalSection>,
    pub quantum: Option<QuantumSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            field: "config",
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Resolves ℏ̄ (directly or from laboratory units) and validates.
    pub fn params(&self) -> Result<SimParams> {
        let hbar = match (self.hbar_eff, &self.units) {
            (Some(h), None) => h,
            (None, Some(u)) => hbar_eff_from_units(&ExperimentUnits::new(u.pulse_period, u.wavelength, u.atom_mass)?)?,
            (Some(_), Some(_)) => return Err(Error::config("hbar_eff", "give either hbar_eff or [units], not both")),
            (None, None) => return Err(Error::config("hbar_eff", "missing: give hbar_eff or [units]")),
        };
        SimParams::new(
            self.kick_strength,
            hbar,
            PhaseSequence::new(self.phases.clone())?,
            self.sigma,
            self.seed,
        )
    }
}

/// Built-in configurations for the three figure reproductions.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "fig1" => Some(include_str!("../presets/fig1.toml")),
        "fig2" => Some(include_str!("../presets/fig2.toml")),
        "fig3" => Some(include_str!("../presets/fig3.toml")),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 3] = ["fig1", "fig2", "fig3"];
