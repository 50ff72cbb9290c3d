//! A scheduling day: feeder, devices, per-state profiles and prices.

use serde::{Deserialize, Serialize};

use crate::der_models::{DeviceSet, RenewableKind};
use crate::dms::PriceSignal;
use crate::error::{Error, Result};
use crate::network::{BusPower, CaseData};
use crate::uncertainty::{build_envelope, synthesize_day, HistoricalSeries};

/// Ratio of peak to nominal feeder demand that load multipliers are scaled against.
pub const DEFAULT_LOAD_SCALE: f64 = 1.3;

/// Per-state normalized multipliers for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayProfiles {
    pub spv: Vec<f64>,
    pub wt: Vec<f64>,
    pub load: Vec<f64>,
    /// State length (h).
    pub dt: f64,
}

impl DayProfiles {
    pub fn new(spv: Vec<f64>, wt: Vec<f64>, load: Vec<f64>, dt: f64) -> Result<Self> {
        if spv.len() != load.len() || wt.len() != load.len() || load.is_empty() {
            return Err(Error::Input(format!(
                "profile lengths differ: spv {}, wt {}, load {}",
                spv.len(),
                wt.len(),
                load.len()
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::Input("state duration must be positive".into()));
        }
        if spv.iter().chain(&wt).chain(&load).any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Input("profile multipliers must be finite and non-negative".into()));
        }
        Ok(Self { spv, wt, load, dt })
    }

    pub fn states(&self) -> usize {
        self.load.len()
    }

    /// Draw one day per series from its uncertainty envelope. Each series
    /// gets its own stream derived from `seed`.
    pub fn synthesize(
        spv: &HistoricalSeries,
        wt: &HistoricalSeries,
        load: &HistoricalSeries,
        k: f64,
        seed: u64,
        dt: f64,
    ) -> Result<Self> {
        let draw = |h: &HistoricalSeries, stream: u64| -> Result<Vec<f64>> {
            synthesize_day(&build_envelope(h, k)?, seed.wrapping_mul(3).wrapping_add(stream))
        };
        Self::new(draw(spv, 0)?, draw(wt, 1)?, draw(load, 2)?, dt)
    }
}

/// Historical month and price day bundled with the crate.
pub mod bundled {
    use super::*;

    pub const SPV_CSV: &str = include_str!("../data/synthetic/spv.csv");
    pub const WT_CSV: &str = include_str!("../data/synthetic/wt.csv");
    pub const LOAD_CSV: &str = include_str!("../data/synthetic/load.csv");
    pub const PRICES_CSV: &str = include_str!("../data/synthetic/prices.csv");

    /// Spread coefficient used with the bundled month.
    pub const DEFAULT_K: f64 = 1.0;

    pub fn history() -> Result<[HistoricalSeries; 3]> {
        Ok([
            HistoricalSeries::from_csv(SPV_CSV.as_bytes(), None)?,
            HistoricalSeries::from_csv(WT_CSV.as_bytes(), None)?,
            HistoricalSeries::from_csv(LOAD_CSV.as_bytes(), None)?,
        ])
    }

    pub fn prices() -> Result<PriceSignal> {
        PriceSignal::from_csv(PRICES_CSV.as_bytes())
    }

    /// 33-bus feeder with default devices on a day drawn from the bundled month.
    pub fn scenario(params: &crate::der_models::DeviceParams, k: f64, seed: u64) -> Result<Scenario> {
        let case = CaseData::ieee33();
        let devices = DeviceSet::from_case(&case, params)?;
        let [spv, wt, load] = history()?;
        let profiles = DayProfiles::synthesize(&spv, &wt, &load, k, seed, 1.0)?;
        Scenario::new(case, devices, profiles, prices()?, DEFAULT_LOAD_SCALE)
    }
}

/// Grid-side dispatch of the controllable devices in one state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    /// Charging power per BESS (kW).
    pub charge: Vec<f64>,
    /// Discharging power per BESS (kW).
    pub discharge: Vec<f64>,
    /// Output per microturbine (kW).
    pub mt: Vec<f64>,
}

impl Dispatch {
    pub fn idle(devices: &DeviceSet) -> Self {
        Self {
            charge: vec![0.0; devices.storage.len()],
            discharge: vec![0.0; devices.storage.len()],
            mt: vec![0.0; devices.turbines.len()],
        }
    }

    pub fn is_idle(&self) -> bool {
        self.charge.iter().chain(&self.discharge).chain(&self.mt).all(|x| *x == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub case: CaseData,
    pub devices: DeviceSet,
    pub profiles: DayProfiles,
    pub prices: PriceSignal,
    pub load_scale: f64,
    bus_of: DeviceBuses,
}

#[derive(Debug, Clone, Default)]
struct DeviceBuses {
    renewables: Vec<usize>,
    turbines: Vec<usize>,
    storage: Vec<usize>,
}

impl Scenario {
    pub fn new(
        case: CaseData,
        devices: DeviceSet,
        profiles: DayProfiles,
        prices: PriceSignal,
        load_scale: f64,
    ) -> Result<Self> {
        if profiles.states() != prices.states() {
            return Err(Error::Input(format!(
                "profiles cover {} states but prices cover {}",
                profiles.states(),
                prices.states()
            )));
        }
        if !(load_scale > 0.0) {
            return Err(Error::Input("load scale must be positive".into()));
        }
        let resolve = |node: usize| {
            case.bus_index(node)
                .ok_or_else(|| Error::Reference(format!("device at unknown node {node}")))
        };
        let bus_of = DeviceBuses {
            renewables: devices.renewables.iter().map(|u| resolve(u.node)).collect::<Result<_>>()?,
            turbines: devices.turbines.iter().map(|u| resolve(u.node)).collect::<Result<_>>()?,
            storage: devices.storage.iter().map(|u| resolve(u.node)).collect::<Result<_>>()?,
        };
        Ok(Self {
            case,
            devices,
            profiles,
            prices,
            load_scale,
            bus_of,
        })
    }

    pub fn states(&self) -> usize {
        self.profiles.states()
    }

    pub fn dt(&self) -> f64 {
        self.profiles.dt
    }

    /// Customer demand at every bus in state `i`.
    pub fn demand(&self, i: usize) -> BusPower {
        self.case.scaled_demand(self.load_scale * self.profiles.load[i])
    }

    /// Output of each renewable unit in state `i` (kW), in device order.
    pub fn renewable_output(&self, i: usize) -> Vec<f64> {
        self.devices
            .renewables
            .iter()
            .map(|u| match u.kind {
                RenewableKind::Spv => u.output(self.profiles.spv[i]),
                RenewableKind::Wt => u.output(self.profiles.wt[i]),
            })
            .collect()
    }

    /// Net bus demand after renewables and the given dispatch.
    pub fn net_demand(&self, i: usize, dispatch: &Dispatch) -> BusPower {
        let mut power = self.demand(i);
        for (bus, kw) in self.bus_of.renewables.iter().zip(self.renewable_output(i)) {
            power.add_p(*bus, -kw);
        }
        for (bus, kw) in self.bus_of.turbines.iter().zip(&dispatch.mt) {
            power.add_p(*bus, -kw);
        }
        for (b, bus) in self.bus_of.storage.iter().enumerate() {
            power.add_p(*bus, dispatch.charge[b] - dispatch.discharge[b]);
        }
        power
    }
}
