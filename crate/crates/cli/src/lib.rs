//! Command-line front end: configuration, input loading, day runs, artifact
//! emission and side-by-side strategy comparison.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod error;

use std::fs;
use std::path::{Path, PathBuf};

use mpas_core::optimizer::{optimize_day, DayOutcome, HerdOptimizer};
use mpas_core::scenario::bundled;
use mpas_core::{build_plan, load_case, CaseData, DayProfiles, DeviceSet, DmsPlan, HistoricalSeries, PriceSignal, Scenario};

pub use config::{Overrides, RunConfig};
pub use error::{CliError, Result};

fn read(what: &'static str, path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::NotFound {
            what,
            path: path.to_path_buf(),
        },
        _ => CliError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn history(what: &'static str, path: PathBuf) -> Result<HistoricalSeries> {
    let text = read(what, &path)?;
    Ok(HistoricalSeries::from_csv(text.as_bytes(), None)?)
}

/// Build the scheduling day described by `cfg`.
pub fn load_scenario(cfg: &RunConfig) -> Result<Scenario> {
    let case = match &cfg.inputs.case {
        Some(p) => load_case(&read("case file", p)?)?,
        None => CaseData::ieee33(),
    };
    let [spv, wt, load] = match &cfg.inputs.profiles {
        Some(dir) => [
            history("spv profile file", dir.join("spv.csv"))?,
            history("wt profile file", dir.join("wt.csv"))?,
            history("load profile file", dir.join("load.csv"))?,
        ],
        None => bundled::history()?,
    };
    let prices = match &cfg.inputs.prices {
        Some(p) => PriceSignal::from_csv(read("price file", p)?.as_bytes())?,
        None => bundled::prices()?,
    };
    let devices = DeviceSet::from_case(&case, &cfg.devices)?;
    let profiles = DayProfiles::synthesize(&spv, &wt, &load, cfg.k, cfg.seed, 1.0)?;
    Ok(Scenario::new(case, devices, profiles, prices, cfg.load_scale)?)
}

pub fn plan(cfg: &RunConfig, scenario: &Scenario) -> DmsPlan {
    let fc = if cfg.fictitious_charge { None } else { Some(0.0) };
    build_plan(&scenario.devices, &scenario.prices, cfg.strategy, fc)
}

pub struct RunOutput {
    pub scenario: Scenario,
    pub plan: DmsPlan,
    pub outcome: DayOutcome,
}

/// Validate, load and schedule one day without touching the filesystem
/// beyond reading inputs.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let scenario = load_scenario(cfg)?;
    let plan = plan(cfg, &scenario);
    let opt = cfg.optimizer();
    let outcome = optimize_day(&scenario, &plan, &HerdOptimizer::new(opt.swarm), &opt)?;
    Ok(RunOutput {
        scenario,
        plan,
        outcome,
    })
}

/// Run one day and write every artifact into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let out = execute(cfg)?;
    let effective = cfg.resolved()?;
    artifacts::write_all(&cfg.out, &effective, &out)?;
    Ok(out)
}
