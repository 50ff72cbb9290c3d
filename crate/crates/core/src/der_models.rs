//! Device models: renewable units, the microturbine and battery storage.
//!
//! Battery dispatch is always expressed grid-side: `p_c` is the power drawn
//! from the feeder while charging, `p_d` the power delivered to it while
//! discharging. Efficiencies sit between those and the stored energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CaseData, DerKind};

const SOC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewableKind {
    Spv,
    Wt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableUnit {
    pub node: usize,
    pub kind: RenewableKind,
    /// kWp
    pub rating: f64,
    /// Purchase tariff ($/kWh).
    pub price: f64,
}

impl RenewableUnit {
    /// Output (kW) for a normalized availability multiplier.
    pub fn output(&self, multiplier: f64) -> f64 {
        self.rating * multiplier.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroTurbine {
    pub node: usize,
    /// kW
    pub rating: f64,
    /// Capacity held back for forecast errors (kW).
    pub reserve: f64,
    /// Fuel cost ($/kWh).
    pub fuel_price: f64,
    /// O&M cost ($/kWh).
    pub om_price: f64,
}

impl MicroTurbine {
    pub fn new(node: usize, rating: f64, reserve: f64, fuel_price: f64, om_price: f64) -> Result<Self> {
        if !(rating > 0.0) || reserve < 0.0 || reserve > rating {
            return Err(Error::Input(format!(
                "microturbine at node {node}: need 0 <= reserve <= rating"
            )));
        }
        Ok(Self {
            node,
            rating,
            reserve,
            fuel_price,
            om_price,
        })
    }

    /// Generation cost per kWh including O&M.
    pub fn marginal_cost(&self) -> f64 {
        self.fuel_price + self.om_price
    }
}

/// Dispatch range of the microturbine for one state.
pub fn mt_bounds(mt: &MicroTurbine, state_in_window: bool) -> (f64, f64) {
    if state_in_window {
        (0.0, (mt.rating - mt.reserve).max(0.0))
    } else {
        (0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bess {
    pub node: usize,
    /// Energy capacity (kWh).
    pub capacity: f64,
    pub p_max_c: f64,
    pub p_max_d: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_init: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    /// O&M cost per kWh charged or discharged ($/kWh).
    pub om_price: f64,
}

impl Bess {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Input(format!("BESS at node {}: {msg}", self.node)));
        if !(self.capacity > 0.0) {
            return bad("capacity must be positive");
        }
        if self.p_max_c < 0.0 || self.p_max_d < 0.0 {
            return bad("power limits must be non-negative");
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return bad("need 0 <= soc_min < soc_max <= 1");
        }
        if !(self.soc_min <= self.soc_init && self.soc_init <= self.soc_max) {
            return bad("initial SOC outside [soc_min, soc_max]");
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0 && self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return bad("efficiencies must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn round_trip(&self) -> f64 {
        self.eta_c * self.eta_d
    }

    /// Usable energy between the SOC limits (kWh).
    pub fn usable_energy(&self) -> f64 {
        (self.soc_max - self.soc_min) * self.capacity
    }
}

/// Largest feasible charging power given the SOC headroom.
pub fn clamp_charge(b: &Bess, soc_prev: f64, requested: f64, dt: f64) -> f64 {
    if soc_prev >= b.soc_max - SOC_TOL || !(requested > 0.0) {
        return 0.0;
    }
    let headroom = (b.soc_max - soc_prev) * b.capacity / (b.eta_c * dt);
    requested.min(b.p_max_c).min(headroom)
}

/// Largest feasible discharging power given the stored energy above the floor.
pub fn clamp_discharge(b: &Bess, soc_prev: f64, requested: f64, dt: f64) -> f64 {
    if soc_prev <= b.soc_min + SOC_TOL || !(requested > 0.0) {
        return 0.0;
    }
    let available = (soc_prev - b.soc_min) * b.capacity * b.eta_d / dt;
    requested.min(b.p_max_d).min(available)
}

/// Advance the state of charge by one state of length `dt` hours.
pub fn soc_update(b: &Bess, soc_prev: f64, p_c: f64, p_d: f64, dt: f64) -> Result<f64> {
    if p_c < 0.0 || p_d < 0.0 {
        return Err(Error::Consistency("negative BESS dispatch".into()));
    }
    if p_c > 0.0 && p_d > 0.0 {
        return Err(Error::Consistency(format!(
            "BESS at node {} charging and discharging in the same state",
            b.node
        )));
    }
    if p_c == 0.0 && p_d == 0.0 {
        return Ok(soc_prev);
    }
    let soc = soc_prev + (b.eta_c * p_c / b.capacity - p_d / (b.eta_d * b.capacity)) * dt;
    if soc < b.soc_min - SOC_TOL || soc > b.soc_max + SOC_TOL {
        return Err(Error::Consistency(format!(
            "BESS at node {} SOC would reach {soc:.12}",
            b.node
        )));
    }
    Ok(soc.clamp(b.soc_min, b.soc_max))
}

/// SOC at the end of every state, per BESS.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SocTrace {
    pub initial: Vec<f64>,
    /// `states[i][b]`: SOC of BESS `b` at the end of state `i`.
    pub states: Vec<Vec<f64>>,
}

impl SocTrace {
    pub fn new(fleet: &[Bess]) -> Self {
        Self {
            initial: fleet.iter().map(|b| b.soc_init).collect(),
            states: Vec::new(),
        }
    }

    /// SOC entering the next state.
    pub fn current(&self) -> &[f64] {
        self.states.last().unwrap_or(&self.initial)
    }

    pub fn push(&mut self, socs: Vec<f64>) {
        self.states.push(socs);
    }
}

/// Device parameters shared by every unit of a kind. Defaults follow the
/// reference study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeviceParams {
    /// BESS round-trip efficiency; charge and discharge use its square root.
    pub round_trip: f64,
    pub bess_p_max_c: f64,
    pub bess_p_max_d: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_init: f64,
    pub bess_om: f64,
    pub mt_reserve: f64,
    pub mt_fuel: f64,
    pub mt_om: f64,
    pub spv_price: f64,
    pub wt_price: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            round_trip: 0.85,
            bess_p_max_c: 500.0,
            bess_p_max_d: 500.0,
            soc_min: 0.1,
            soc_max: 1.0,
            soc_init: 0.1,
            bess_om: 0.0015,
            mt_reserve: 400.0,
            mt_fuel: 0.0335,
            mt_om: 0.012,
            spv_price: 0.028,
            wt_price: 0.029,
        }
    }
}

impl DeviceParams {
    pub fn bess(&self, node: usize, capacity: f64) -> Result<Bess> {
        if !(self.round_trip > 0.0 && self.round_trip <= 1.0) {
            return Err(Error::Input("round-trip efficiency must lie in (0, 1]".into()));
        }
        let eta = self.round_trip.sqrt();
        let b = Bess {
            node,
            capacity,
            p_max_c: self.bess_p_max_c,
            p_max_d: self.bess_p_max_d,
            soc_min: self.soc_min,
            soc_max: self.soc_max,
            soc_init: self.soc_init,
            eta_c: eta,
            eta_d: eta,
            om_price: self.bess_om,
        };
        b.validate()?;
        Ok(b)
    }
}

/// All DERs on the feeder, in case-file order within each kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeviceSet {
    pub renewables: Vec<RenewableUnit>,
    pub turbines: Vec<MicroTurbine>,
    pub storage: Vec<Bess>,
}

impl DeviceSet {
    pub fn from_case(case: &CaseData, params: &DeviceParams) -> Result<Self> {
        let mut set = DeviceSet::default();
        for der in case.ders() {
            match der.kind {
                DerKind::Spv => set.renewables.push(RenewableUnit {
                    node: der.node,
                    kind: RenewableKind::Spv,
                    rating: der.rating,
                    price: params.spv_price,
                }),
                DerKind::Wt => set.renewables.push(RenewableUnit {
                    node: der.node,
                    kind: RenewableKind::Wt,
                    rating: der.rating,
                    price: params.wt_price,
                }),
                DerKind::Mt => set.turbines.push(MicroTurbine::new(
                    der.node,
                    der.rating,
                    params.mt_reserve,
                    params.mt_fuel,
                    params.mt_om,
                )?),
                DerKind::Bess => set.storage.push(params.bess(der.node, der.rating)?),
            }
        }
        Ok(set)
    }

    /// Decision-vector length: one gene per BESS then one per MT.
    pub fn gene_count(&self) -> usize {
        self.storage.len() + self.turbines.len()
    }
}
