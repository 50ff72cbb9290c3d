//! Run configuration: a TOML file layered under command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use mpas_core::economics::ConstraintLimits;
use mpas_core::optimizer::{OptimizerConfig, PenaltyWeights};
use mpas_core::scenario::{bundled, DEFAULT_LOAD_SCALE};
use mpas_core::{DeviceParams, Strategy, SwarmConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Input files. Any path left out falls back to the bundled data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<PathBuf>,
    /// Directory holding `spv.csv`, `wt.csv` and `load.csv` (one row per historical day).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<PathBuf>,
    /// `state, grid_price[, customer_price]` rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prices: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmSection {
    pub population: usize,
    pub generations: usize,
    pub exploration: f64,
    pub exploitation: f64,
    pub inertia_start: f64,
    pub inertia_end: f64,
}

impl Default for SwarmSection {
    fn default() -> Self {
        let s = SwarmConfig::default();
        Self {
            population: s.population,
            generations: s.generations,
            exploration: s.exploration,
            exploitation: s.exploitation,
            inertia_start: s.inertia_start,
            inertia_end: s.inertia_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Spread coefficient of the uncertainty sets.
    pub k: f64,
    pub strategy: Strategy,
    /// Load multiplier scale relative to the nominal case load.
    pub load_scale: f64,
    /// Apply the fictitious charge in the fitness function.
    pub fictitious_charge: bool,
    pub out: PathBuf,
    pub inputs: Inputs,
    pub devices: DeviceParams,
    pub swarm: SwarmSection,
    pub limits: ConstraintLimits,
    pub penalties: PenaltyWeights,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            k: bundled::DEFAULT_K,
            strategy: Strategy::Mpas,
            load_scale: DEFAULT_LOAD_SCALE,
            fictitious_charge: true,
            out: PathBuf::from("out"),
            inputs: Inputs::default(),
            devices: DeviceParams::default(),
            swarm: SwarmSection::default(),
            limits: ConstraintLimits::default(),
            penalties: PenaltyWeights::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub case: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub strategy: Option<Strategy>,
    pub no_reverse_constraint: bool,
    pub k: Option<f64>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::NotFound {
                what: "config file",
                path: path.to_path_buf(),
            },
            _ => CliError::Io {
                path: path.to_path_buf(),
                source: e,
            },
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.case {
            self.inputs.case = Some(p.clone());
        }
        if let Some(p) = &o.profiles {
            self.inputs.profiles = Some(p.clone());
        }
        if let Some(p) = &o.prices {
            self.inputs.prices = Some(p.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        if let Some(s) = o.strategy {
            self.strategy = s;
        }
        if o.no_reverse_constraint {
            self.limits.forbid_reverse_power = false;
        }
        if let Some(k) = o.k {
            self.k = k;
        }
    }

    /// Range checks and input existence.
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(CliError::Config(format!("k must be positive, got {}", self.k)));
        }
        if !(self.load_scale > 0.0 && self.load_scale.is_finite()) {
            return Err(CliError::Config("load_scale must be positive".into()));
        }
        if !(self.limits.v_min < self.limits.v_max && self.limits.v_min > 0.0) {
            return Err(CliError::Config("voltage limits must satisfy 0 < v_min < v_max".into()));
        }
        self.optimizer().swarm.validate()?;
        let exists = |what: &'static str, p: &Option<PathBuf>, dir: bool| match p {
            Some(p) if (dir && !p.is_dir()) || (!dir && !p.is_file()) => Err(CliError::NotFound {
                what,
                path: p.clone(),
            }),
            _ => Ok(()),
        };
        exists("case file", &self.inputs.case, false)?;
        exists("profile directory", &self.inputs.profiles, true)?;
        exists("price file", &self.inputs.prices, false)?;
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        let s = &self.swarm;
        OptimizerConfig {
            swarm: SwarmConfig {
                population: s.population,
                generations: s.generations,
                exploration: s.exploration,
                exploitation: s.exploitation,
                inertia_start: s.inertia_start,
                inertia_end: s.inertia_end,
                seed: self.seed,
            },
            limits: self.limits,
            penalties: self.penalties,
        }
    }

    /// Input paths made absolute so the echoed config runs from anywhere.
    pub fn resolved(&self) -> Result<Self> {
        let abs = |p: &Option<PathBuf>| -> Result<Option<PathBuf>> {
            p.as_ref()
                .map(|p| {
                    fs::canonicalize(p).map_err(|e| CliError::Io {
                        path: p.clone(),
                        source: e,
                    })
                })
                .transpose()
        };
        let mut c = self.clone();
        c.inputs.case = abs(&self.inputs.case)?;
        c.inputs.profiles = abs(&self.inputs.profiles)?;
        c.inputs.prices = abs(&self.inputs.prices)?;
        Ok(c)
    }
}
