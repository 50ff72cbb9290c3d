//! Decision mechanism: a-priori modes and dispatch caps for every state.
//!
//! The daily mean grid price splits the day. States priced below the mean
//! may charge, states above it may discharge, states at the mean stand by.
//! Within each side the battery's usable energy is handed out greedily by
//! price priority, so the cheapest states charge and the dearest discharge;
//! everything left over is standby.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::der_models::{mt_bounds, Bess, DeviceSet, MicroTurbine};
use crate::error::{Error, Result};

/// Customer tariff markup over the grid price when none is supplied.
pub const DEFAULT_CUSTOMER_MARKUP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSignal {
    grid: Vec<f64>,
    customer: Vec<f64>,
    mean: f64,
}

impl PriceSignal {
    pub fn new(grid: Vec<f64>, customer: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Input("price signal has no states".into()));
        }
        if grid.len() != customer.len() {
            return Err(Error::Input("grid and customer price lengths differ".into()));
        }
        if grid.iter().chain(&customer).any(|p| !p.is_finite()) {
            return Err(Error::Input("price signal contains non-finite values".into()));
        }
        let mean = crate::stats::mean(&grid);
        Ok(Self {
            grid,
            customer,
            mean,
        })
    }

    /// Customer prices derived as a fixed markup over the grid price.
    pub fn from_grid(grid: Vec<f64>, markup: f64) -> Result<Self> {
        let customer = grid.iter().map(|g| g * (1.0 + markup)).collect();
        Self::new(grid, customer)
    }

    /// `state_index, grid_price[, customer_price]` rows, header optional.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows: Vec<(usize, f64, Option<f64>)> = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.iter().all(str::is_empty) {
                continue;
            }
            let idx = rec.get(0).and_then(|s| s.parse::<usize>().ok());
            let Some(idx) = idx else {
                if n == 0 {
                    continue;
                }
                return Err(Error::Input(format!("price row {}: bad state index", n + 1)));
            };
            let grid: f64 = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Input(format!("price row {}: bad grid price", n + 1)))?;
            let customer = match rec.get(2) {
                Some(s) if !s.is_empty() => Some(s.parse().map_err(|_| {
                    Error::Input(format!("price row {}: bad customer price", n + 1))
                })?),
                _ => None,
            };
            rows.push((idx, grid, customer));
        }
        rows.sort_by_key(|r| r.0);
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Input("duplicate state index in price file".into()));
        }
        let grid: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let customer = rows
            .iter()
            .map(|r| r.2.unwrap_or(r.1 * (1.0 + DEFAULT_CUSTOMER_MARKUP)))
            .collect();
        Self::new(grid, customer)
    }

    pub fn states(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn customer(&self) -> &[f64] {
        &self.customer
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Charge,
    Standby,
    Discharge,
}

/// How battery dispatch is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Mean-price partition with price-priority caps, dispatch optimized per state.
    #[default]
    Mpas,
    /// Charge in the cheapest states, then discharge at full rate right after
    /// the battery is full, regardless of price.
    FixedWindow,
}

impl Strategy {
    pub fn id(&self) -> &'static str {
        match self {
            Strategy::Mpas => "mpas",
            Strategy::FixedWindow => "fixed-window",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpas" => Ok(Strategy::Mpas),
            "fixed-window" => Ok(Strategy::FixedWindow),
            other => Err(Error::Input(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmsPlan {
    pub strategy: Strategy,
    /// States priced below the mean.
    pub charge_states: Vec<usize>,
    /// States priced above the mean.
    pub discharge_states: Vec<usize>,
    /// States in which the microturbine may run.
    pub mt_window: Vec<usize>,
    /// `modes[i][b]` for state `i`, BESS `b`.
    pub modes: Vec<Vec<Mode>>,
    /// Charge cap in charge mode, discharge cap in discharge mode, else 0 (kW).
    pub caps: Vec<Vec<f64>>,
    /// `mt_caps[i][r]` upper dispatch bound (kW).
    pub mt_caps: Vec<Vec<f64>>,
    /// Price applied to BESS energy in the fitness function ($/kWh).
    pub fc_price: f64,
}

impl DmsPlan {
    pub fn states(&self) -> usize {
        self.modes.len()
    }

    /// Whether battery genes are fixed at their caps instead of searched.
    pub fn forced_storage(&self) -> bool {
        self.strategy == Strategy::FixedWindow
    }

    /// States in which every BESS stands by.
    pub fn standby_states(&self) -> Vec<usize> {
        (0..self.states())
            .filter(|&i| self.modes[i].iter().all(|m| *m == Mode::Standby))
            .collect()
    }
}

/// States strictly below and strictly above the mean price.
pub fn partition_states(p: &PriceSignal) -> (Vec<usize>, Vec<usize>) {
    let m = p.mean();
    let below = (0..p.states()).filter(|&i| p.grid[i] < m).collect();
    let above = (0..p.states()).filter(|&i| p.grid[i] > m).collect();
    (below, above)
}

/// `states` reordered by price; ties keep the earlier state first.
fn by_priority(p: &PriceSignal, states: &[usize], descending: bool) -> Vec<usize> {
    let mut order = states.to_vec();
    order.sort_by(|&a, &b| {
        let ord = p.grid[a].total_cmp(&p.grid[b]);
        let ord = if descending { ord.reverse() } else { ord };
        ord.then(a.cmp(&b))
    });
    order
}

/// Caps for `n` ranked states: full power until the energy runs out, then
/// the remainder, then nothing.
fn ranked_caps(energy: f64, p_max: f64, n: usize, remainder: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut caps = vec![0.0; n];
    if !(p_max > 0.0) || !(energy > 0.0) {
        return caps;
    }
    let z = (energy / p_max).floor() as usize;
    for cap in caps.iter_mut().take(z) {
        *cap = p_max;
    }
    if z < n {
        let left = (energy - z as f64 * p_max).max(0.0);
        caps[z] = remainder(left).clamp(0.0, p_max);
    }
    caps
}

/// Per-state discharge caps over the day (zero outside `discharge_states`).
pub fn allocate_discharge_limits(b: &Bess, p: &PriceSignal, discharge_states: &[usize]) -> Vec<f64> {
    let order = by_priority(p, discharge_states, true);
    let ranked = ranked_caps(b.usable_energy(), b.p_max_d, order.len(), |left| left / b.eta_d);
    let mut caps = vec![0.0; p.states()];
    for (state, cap) in order.into_iter().zip(ranked) {
        caps[state] = cap;
    }
    caps
}

/// Per-state charge caps over the day (zero outside `charge_states`).
pub fn allocate_charge_limits(b: &Bess, p: &PriceSignal, charge_states: &[usize]) -> Vec<f64> {
    let order = by_priority(p, charge_states, false);
    let headroom = (b.soc_max - b.soc_init.max(b.soc_min)) * b.capacity;
    let ranked = ranked_caps(headroom, b.p_max_c, order.len(), |left| left * b.eta_c);
    let mut caps = vec![0.0; p.states()];
    for (state, cap) in order.into_iter().zip(ranked) {
        caps[state] = cap;
    }
    caps
}

/// States where the grid price beats the turbine's fuel plus O&M cost.
pub fn mt_window(mt: &MicroTurbine, p: &PriceSignal) -> Vec<usize> {
    let threshold = mt.marginal_cost();
    (0..p.states()).filter(|&i| p.grid[i] > threshold).collect()
}

pub fn fictitious_price(p: &PriceSignal) -> f64 {
    p.mean()
}

/// Build the day plan. `fc_override` replaces the mean-price fictitious charge.
pub fn build_plan(
    devices: &DeviceSet,
    p: &PriceSignal,
    strategy: Strategy,
    fc_override: Option<f64>,
) -> DmsPlan {
    let n = p.states();
    let (charge_states, discharge_states) = partition_states(p);
    let mut modes = vec![vec![Mode::Standby; devices.storage.len()]; n];
    let mut caps = vec![vec![0.0; devices.storage.len()]; n];

    for (b, bess) in devices.storage.iter().enumerate() {
        let charge = allocate_charge_limits(bess, p, &charge_states);
        let discharge = match strategy {
            Strategy::Mpas => allocate_discharge_limits(bess, p, &discharge_states),
            Strategy::FixedWindow => discharge_after_full(bess, p, &charge),
        };
        for i in 0..n {
            if charge[i] > 0.0 {
                modes[i][b] = Mode::Charge;
                caps[i][b] = charge[i];
            } else if discharge[i] > 0.0 {
                modes[i][b] = Mode::Discharge;
                caps[i][b] = discharge[i];
            }
        }
    }

    let mut window: Vec<usize> = Vec::new();
    let mut mt_caps = vec![vec![0.0; devices.turbines.len()]; n];
    for (r, mt) in devices.turbines.iter().enumerate() {
        let w = mt_window(mt, p);
        for &i in &w {
            mt_caps[i][r] = mt_bounds(mt, true).1;
        }
        window.extend(w);
    }
    window.sort_unstable();
    window.dedup();

    DmsPlan {
        strategy,
        charge_states,
        discharge_states,
        mt_window: window,
        modes,
        caps,
        mt_caps,
        fc_price: fc_override.unwrap_or_else(|| fictitious_price(p)),
    }
}

/// Same cap sizes as the price-priority allocation, laid out chronologically
/// starting in the state after the last charging state.
fn discharge_after_full(b: &Bess, p: &PriceSignal, charge: &[f64]) -> Vec<f64> {
    let n = p.states();
    let mut caps = vec![0.0; n];
    let Some(last) = charge.iter().rposition(|c| *c > 0.0) else {
        return caps;
    };
    let slots = n - last - 1;
    let ranked = ranked_caps(b.usable_energy(), b.p_max_d, slots, |left| left / b.eta_d);
    for (k, cap) in ranked.into_iter().enumerate() {
        caps[last + 1 + k] = cap;
    }
    caps
}
