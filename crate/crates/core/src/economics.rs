//! Per-state profit accounting and the day report.
//!
//! Revenue is customer billing plus feeder losses recovered at the grid
//! price. Payments cover grid purchase, renewable tariffs, microturbine fuel
//! and O&M, and BESS O&M. Fictitious charges credit BESS charging and debit
//! BESS discharging at a fixed price; they shape the fitness the optimizer
//! sees and cancel out of the reported profit.

use serde::{Deserialize, Serialize};

use crate::der_models::{DeviceSet, RenewableKind};
use crate::dms::{DmsPlan, Mode};
use crate::error::{Error, Result};
use crate::network::{CaseData, PowerFlowResult};
use crate::scenario::{Dispatch, Scenario};
use crate::stats;

/// Largest substation balance residual accepted from a power-flow result (kW).
const PF_MISMATCH_TOL_KW: f64 = 1e-3;
/// Closure tolerance on the day's energy (kWh) and currency ($) equations.
pub const ACCOUNTING_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateLedger {
    pub state: usize,
    pub dt: f64,
    pub grid_price: f64,
    pub customer_price: f64,

    // Energy (kWh).
    pub demand_kwh: f64,
    pub loss_kwh: f64,
    pub grid_kwh: f64,
    pub spv_kwh: f64,
    pub wt_kwh: f64,
    pub mt_kwh: f64,
    pub bess_charge_kwh: f64,
    pub bess_discharge_kwh: f64,

    // Revenue ($).
    pub billing: f64,
    pub loss_cost: f64,
    pub fc_credit: f64,

    // Payments ($).
    pub grid_cost: f64,
    pub spv_cost: f64,
    pub wt_cost: f64,
    pub mt_fuel: f64,
    pub mt_om: f64,
    pub bess_om: f64,
    pub fc_debit: f64,

    /// Net fictitious charge: credit on charging minus debit on discharging.
    pub fc: f64,
    /// Reported state profit, revenue − payments − fc.
    pub of: f64,
}

impl StateLedger {
    pub fn revenue(&self) -> f64 {
        self.billing + self.loss_cost + self.fc_credit
    }

    pub fn payments(&self) -> f64 {
        self.grid_cost
            + self.spv_cost
            + self.wt_cost
            + self.mt_fuel
            + self.mt_om
            + self.bess_om
            + self.fc_debit
    }

    /// Revenue and payments with the fictitious terms left out.
    pub fn real_revenue(&self) -> f64 {
        self.billing + self.loss_cost
    }

    pub fn real_payments(&self) -> f64 {
        self.payments() - self.fc_debit
    }
}

/// Account for one state. `fc_price` is the fictitious charge ($/kWh).
pub fn state_profit(
    scenario: &Scenario,
    state: usize,
    dispatch: &Dispatch,
    pf: &PowerFlowResult,
    fc_price: f64,
) -> Result<StateLedger> {
    if pf.mismatch_kw > PF_MISMATCH_TOL_KW {
        return Err(Error::Evaluation(format!(
            "power flow not converged (balance residual {:.3e} kW)",
            pf.mismatch_kw
        )));
    }
    let dt = scenario.dt();
    let e_g = scenario.prices.grid()[state];
    let e_c = scenario.prices.customer()[state];
    let devices = &scenario.devices;

    let mut l = StateLedger {
        state,
        dt,
        grid_price: e_g,
        customer_price: e_c,
        demand_kwh: scenario.demand(state).total_p() * dt,
        loss_kwh: pf.p_loss * dt,
        grid_kwh: pf.p_grid * dt,
        ..Default::default()
    };
    for (unit, kw) in devices.renewables.iter().zip(scenario.renewable_output(state)) {
        let kwh = kw * dt;
        match unit.kind {
            RenewableKind::Spv => {
                l.spv_kwh += kwh;
                l.spv_cost += unit.price * kwh;
            }
            RenewableKind::Wt => {
                l.wt_kwh += kwh;
                l.wt_cost += unit.price * kwh;
            }
        }
    }
    for (mt, kw) in devices.turbines.iter().zip(&dispatch.mt) {
        let kwh = kw * dt;
        l.mt_kwh += kwh;
        l.mt_fuel += mt.fuel_price * kwh;
        l.mt_om += mt.om_price * kwh;
    }
    for (b, bess) in devices.storage.iter().enumerate() {
        let c = dispatch.charge[b] * dt;
        let d = dispatch.discharge[b] * dt;
        l.bess_charge_kwh += c;
        l.bess_discharge_kwh += d;
        l.bess_om += bess.om_price * (c + d);
    }

    l.billing = l.demand_kwh * e_c;
    l.loss_cost = l.loss_kwh * e_g;
    l.fc_credit = fc_price * l.bess_charge_kwh;
    l.grid_cost = l.grid_kwh * e_g;
    l.fc_debit = fc_price * l.bess_discharge_kwh;
    l.fc = l.fc_credit - l.fc_debit;
    l.of = l.revenue() - l.payments() - l.fc;
    Ok(l)
}

/// Objective seen by the optimizer: revenue − payments with fictitious charges active.
pub fn fitness(ledger: &StateLedger) -> f64 {
    ledger.revenue() - ledger.payments()
}

pub fn daily_profit(ledgers: &[StateLedger]) -> f64 {
    ledgers.iter().map(|l| l.of).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLimits {
    pub v_min: f64,
    pub v_max: f64,
    /// Treat any back-feed to the substation as a violation.
    pub forbid_reverse_power: bool,
}

impl Default for ConstraintLimits {
    fn default() -> Self {
        Self {
            v_min: 0.95,
            v_max: 1.05,
            forbid_reverse_power: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Voltage { bus: usize, v: f64 },
    Overload { from: usize, to: usize, amps: f64, limit: f64 },
    ReversePower { kw: f64 },
    BessDispatch { bess: usize, kw: f64, cap: f64 },
    BessMode { bess: usize },
    MtDispatch { mt: usize, kw: f64, cap: f64 },
}

const BOUND_TOL: f64 = 1e-9;

/// Network limits, device bounds from the plan, and back-feed for one state.
pub fn check_constraints(
    pf: &PowerFlowResult,
    case: &CaseData,
    devices: &DeviceSet,
    plan: &DmsPlan,
    state: usize,
    dispatch: &Dispatch,
    limits: &ConstraintLimits,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (bus, v) in case.buses().iter().zip(&pf.v_mag) {
        if *v < limits.v_min - BOUND_TOL || *v > limits.v_max + BOUND_TOL {
            out.push(Violation::Voltage { bus: bus.id, v: *v });
        }
    }
    for (line, amps) in case.lines().iter().zip(&pf.i_line) {
        if *amps > line.ampacity + BOUND_TOL {
            out.push(Violation::Overload {
                from: line.from,
                to: line.to,
                amps: *amps,
                limit: line.ampacity,
            });
        }
    }
    if limits.forbid_reverse_power && pf.p_rev > 0.0 {
        out.push(Violation::ReversePower { kw: pf.p_rev });
    }
    for b in 0..devices.storage.len() {
        let (c, d) = (dispatch.charge[b], dispatch.discharge[b]);
        let cap = plan.caps[state][b];
        let (kw, allowed) = match plan.modes[state][b] {
            Mode::Charge => (c, d == 0.0),
            Mode::Discharge => (d, c == 0.0),
            Mode::Standby => (c.max(d), c == 0.0 && d == 0.0),
        };
        if !allowed {
            out.push(Violation::BessMode { bess: b });
        }
        if kw > cap + BOUND_TOL {
            out.push(Violation::BessDispatch { bess: b, kw, cap });
        }
    }
    for (r, kw) in dispatch.mt.iter().enumerate() {
        let cap = plan.mt_caps[state][r];
        if *kw < -BOUND_TOL || *kw > cap + BOUND_TOL {
            out.push(Violation::MtDispatch { mt: r, kw: *kw, cap });
        }
    }
    out
}

/// Population standard deviation of a demand profile (kW).
pub fn load_deviation_index(profile: &[f64]) -> f64 {
    crate::stats::population_sd(profile)
}

/// An amount with its share of the enclosing total (%).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub value: f64,
    pub share: f64,
}

fn items<const N: usize>(values: [f64; N]) -> ([Item; N], f64) {
    let total: f64 = values.iter().sum();
    let share = |v: f64| if total.abs() > 0.0 { 100.0 * v / total } else { 0.0 };
    (values.map(|v| Item { value: v, share: share(v) }), total)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Payments {
    pub grid: Item,
    pub spv: Item,
    pub wt: Item,
    pub mt: Item,
    pub mt_om: Item,
    pub bess_om: Item,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Revenue {
    pub consumption: Item,
    pub losses: Item,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EconomicEquation {
    pub payments: Payments,
    pub revenue: Revenue,
    pub profit: f64,
    /// Profit as a percentage of total payments.
    pub margin: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyEquation {
    pub grid: Item,
    pub spv: Item,
    pub wt: Item,
    pub mt: Item,
    pub bess_supplied: Item,
    pub total_in: f64,
    pub billing: Item,
    pub loss: Item,
    pub bess_consumed: Item,
    pub total_out: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadProfiles {
    /// Customer demand (kW).
    pub demand: Vec<f64>,
    /// Demand less SPV and WT output.
    pub with_renewables: Vec<f64>,
    /// Demand less renewables, MT output and BESS discharge, plus BESS charging.
    pub net: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Ldi {
    pub demand: f64,
    pub with_renewables: f64,
    pub net: f64,
}

/// Changes of the net profile relative to customer demand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandShift {
    pub mean_change_pct: f64,
    pub peak_change_pct: f64,
    pub valley_change_pct: f64,
    pub peak_state_before: usize,
    pub peak_state_after: usize,
    pub valley_state_before: usize,
    pub valley_state_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayReport {
    /// Identifier of the scheduling strategy that produced the day.
    pub strategy: String,
    pub seed: u64,
    pub states: usize,
    pub dpf: f64,
    pub economic: EconomicEquation,
    pub energy: EnergyEquation,
    pub ldi: Ldi,
    pub shift: DemandShift,
    pub profiles: LoadProfiles,
    /// SOC of each BESS after the last state.
    pub end_soc: Vec<f64>,
    pub ledgers: Vec<StateLedger>,
}

fn argmax(xs: &[f64]) -> usize {
    (0..xs.len()).fold(0, |best, i| if xs[i] > xs[best] { i } else { best })
}

fn argmin(xs: &[f64]) -> usize {
    (0..xs.len()).fold(0, |best, i| if xs[i] < xs[best] { i } else { best })
}

fn pct_change(before: f64, after: f64) -> f64 {
    if before.abs() > 0.0 {
        100.0 * (after - before) / before
    } else {
        0.0
    }
}

/// Aggregate a complete day and check energy and currency closure.
pub fn build_report(ledgers: Vec<StateLedger>) -> Result<DayReport> {
    if ledgers.is_empty() {
        return Err(Error::Accounting("no states to report".into()));
    }
    let sum = |f: fn(&StateLedger) -> f64| ledgers.iter().map(f).sum::<f64>();

    let ([grid, spv, wt, mt, mt_om, bess_om], pay_total) = items([
        sum(|l| l.grid_cost),
        sum(|l| l.spv_cost),
        sum(|l| l.wt_cost),
        sum(|l| l.mt_fuel),
        sum(|l| l.mt_om),
        sum(|l| l.bess_om),
    ]);
    let ([consumption, losses], rev_total) = items([sum(|l| l.billing), sum(|l| l.loss_cost)]);
    let dpf = daily_profit(&ledgers);
    let closure = pay_total + dpf - rev_total;
    if closure.abs() > ACCOUNTING_TOL {
        return Err(Error::Accounting(format!(
            "payments + profit differ from revenue by {closure:.6} $"
        )));
    }

    let ([e_grid, e_spv, e_wt, e_mt, e_bess_d], total_in) = items([
        sum(|l| l.grid_kwh),
        sum(|l| l.spv_kwh),
        sum(|l| l.wt_kwh),
        sum(|l| l.mt_kwh),
        sum(|l| l.bess_discharge_kwh),
    ]);
    let ([billing, loss, bess_c], total_out) = items([
        sum(|l| l.demand_kwh),
        sum(|l| l.loss_kwh),
        sum(|l| l.bess_charge_kwh),
    ]);
    if (total_in - total_out).abs() > ACCOUNTING_TOL {
        return Err(Error::Accounting(format!(
            "energy in {total_in:.6} kWh differs from energy out {total_out:.6} kWh"
        )));
    }
    // Energy shares are taken against the common total, as in a balance sheet.
    let reshare = |mut it: Item| {
        it.share = if total_in.abs() > 0.0 { 100.0 * it.value / total_in } else { 0.0 };
        it
    };

    let demand: Vec<f64> = ledgers.iter().map(|l| l.demand_kwh / l.dt).collect();
    let with_renewables: Vec<f64> = ledgers
        .iter()
        .map(|l| (l.demand_kwh - l.spv_kwh - l.wt_kwh) / l.dt)
        .collect();
    let net: Vec<f64> = ledgers
        .iter()
        .map(|l| {
            (l.demand_kwh - l.spv_kwh - l.wt_kwh - l.mt_kwh - l.bess_discharge_kwh
                + l.bess_charge_kwh)
                / l.dt
        })
        .collect();
    let (pb, pa) = (argmax(&demand), argmax(&net));
    let (vb, va) = (argmin(&demand), argmin(&net));
    let shift = DemandShift {
        mean_change_pct: pct_change(stats::mean(&demand), stats::mean(&net)),
        peak_change_pct: pct_change(demand[pb], net[pa]),
        valley_change_pct: pct_change(demand[vb], net[va]),
        peak_state_before: pb,
        peak_state_after: pa,
        valley_state_before: vb,
        valley_state_after: va,
    };
    let ldi = Ldi {
        demand: load_deviation_index(&demand),
        with_renewables: load_deviation_index(&with_renewables),
        net: load_deviation_index(&net),
    };

    Ok(DayReport {
        strategy: String::new(),
        seed: 0,
        states: ledgers.len(),
        dpf,
        economic: EconomicEquation {
            payments: Payments {
                grid,
                spv,
                wt,
                mt,
                mt_om,
                bess_om,
                total: pay_total,
            },
            revenue: Revenue {
                consumption,
                losses,
                total: rev_total,
            },
            profit: dpf,
            margin: if pay_total.abs() > 0.0 { 100.0 * dpf / pay_total } else { 0.0 },
        },
        energy: EnergyEquation {
            grid: reshare(e_grid),
            spv: reshare(e_spv),
            wt: reshare(e_wt),
            mt: reshare(e_mt),
            bess_supplied: reshare(e_bess_d),
            total_in,
            billing: reshare(billing),
            loss: reshare(loss),
            bess_consumed: reshare(bess_c),
            total_out,
        },
        ldi,
        shift,
        profiles: LoadProfiles {
            demand,
            with_renewables,
            net,
        },
        end_soc: Vec::new(),
        ledgers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::der_models::DeviceParams;
    use crate::dms::{build_plan, PriceSignal, Strategy};
    use crate::network::{load_case, run_power_flow};
    use crate::scenario::DayProfiles;

    /// One load bus behind a short line, one BESS, no other devices.
    fn toy(load_kw: f64, grid_price: f64, customer_price: f64) -> Scenario {
        let src = format!(
            "[bus]\n1,0,0\n2,{load_kw},0\n[line]\n1,2,0.01,0.01,1000\n[der]\n2,bess,3000\n"
        );
        let case = load_case(&src).unwrap();
        let mut params = DeviceParams::default();
        params.bess_om = 0.0;
        let devices = DeviceSet::from_case(&case, &params).unwrap();
        let profiles = DayProfiles::new(vec![0.0], vec![0.0], vec![1.0], 1.0).unwrap();
        let prices = PriceSignal::new(vec![grid_price], vec![customer_price]).unwrap();
        Scenario::new(case, devices, profiles, prices, 1.0).unwrap()
    }

    fn evaluate(s: &Scenario, d: &Dispatch, fc: f64) -> StateLedger {
        let pf = run_power_flow(&s.case, &s.net_demand(0, d)).unwrap();
        state_profit(s, 0, d, &pf, fc).unwrap()
    }

    #[test]
    fn empty_system_has_zero_profit() {
        let s = toy(0.0, 0.1, 0.105);
        let l = evaluate(&s, &Dispatch::idle(&s.devices), 0.067);
        assert_eq!(l.of, 0.0);
        assert_eq!(fitness(&l), 0.0);
    }

    #[test]
    fn single_state_substitution() {
        // P_D = 1000, E_C = 0.105, E_G = 0.10; losses pass through to customers.
        let s = toy(1000.0, 0.10, 0.105);
        let l = evaluate(&s, &Dispatch::idle(&s.devices), 0.067);
        let expected = 1000.0 * 0.105 + l.loss_kwh * 0.10 - (1000.0 + l.loss_kwh) * 0.10;
        assert!((l.of - expected).abs() < 1e-9);
        assert!((l.of - 5.0).abs() < 1e-6);
    }

    #[test]
    fn fc_cancels_from_reported_profit() {
        let s = toy(800.0, 0.05, 0.0525);
        let mut d = Dispatch::idle(&s.devices);
        d.charge[0] = 300.0;
        let with = evaluate(&s, &d, 0.067);
        let without = evaluate(&s, &d, 0.0);
        assert!((with.of - without.of).abs() < 1e-9);
        assert!((fitness(&with) - fitness(&without) - 0.067 * 300.0).abs() < 1e-9);
    }

    #[test]
    fn charging_below_fc_price_raises_fitness() {
        let s = toy(1000.0, 0.05, 0.0525);
        let idle = evaluate(&s, &Dispatch::idle(&s.devices), 0.067);
        let mut d = Dispatch::idle(&s.devices);
        d.charge[0] = 100.0;
        let charged = evaluate(&s, &d, 0.067);
        // Losses pass through at the grid price, so the gain is exact.
        assert!((fitness(&charged) - fitness(&idle) - 1.70).abs() < 1e-9);
    }

    #[test]
    fn discharging_above_fc_price_raises_fitness() {
        let s = toy(1000.0, 0.09, 0.0945);
        let idle = evaluate(&s, &Dispatch::idle(&s.devices), 0.067);
        let mut d = Dispatch::idle(&s.devices);
        d.discharge[0] = 100.0;
        let out = evaluate(&s, &d, 0.067);
        assert!((fitness(&out) - fitness(&idle) - 2.30).abs() < 1e-9);
    }

    #[test]
    fn idle_battery_fitness_equals_profit() {
        let s = toy(600.0, 0.07, 0.0735);
        let l = evaluate(&s, &Dispatch::idle(&s.devices), 0.067);
        assert_eq!(fitness(&l), l.of);
    }

    #[test]
    fn unconverged_flow_is_rejected() {
        let s = toy(600.0, 0.07, 0.0735);
        let d = Dispatch::idle(&s.devices);
        let mut pf = run_power_flow(&s.case, &s.net_demand(0, &d)).unwrap();
        pf.mismatch_kw = 1.0;
        assert!(matches!(state_profit(&s, 0, &d, &pf, 0.0), Err(Error::Evaluation(_))));
    }

    #[test]
    fn daily_profit_sums_states() {
        assert_eq!(daily_profit(&[]), 0.0);
        let a = StateLedger { of: -3.0, ..Default::default() };
        let b = StateLedger { of: 10.0, ..Default::default() };
        assert_eq!(daily_profit(&[a, b]), 7.0);
    }

    #[test]
    fn ldi_examples() {
        assert_eq!(load_deviation_index(&[250.0; 24]), 0.0);
        assert_eq!(load_deviation_index(&[100.0, 300.0]), 100.0);
    }

    #[test]
    fn base_case_voltage_violations() {
        let case = crate::network::CaseData::ieee33();
        let devices = DeviceSet::default();
        let prices = PriceSignal::from_grid(vec![0.05], 0.05).unwrap();
        let plan = build_plan(&devices, &prices, Strategy::Mpas, None);
        let pf = run_power_flow(&case, &case.scaled_demand(1.0)).unwrap();
        let v = check_constraints(&pf, &case, &devices, &plan, 0, &Dispatch::idle(&devices), &ConstraintLimits::default());
        let buses: Vec<usize> = v
            .iter()
            .filter_map(|x| match x {
                Violation::Voltage { bus, .. } => Some(*bus),
                _ => None,
            })
            .collect();
        assert!(buses.contains(&18));
        assert!(!buses.contains(&2));
        let none = run_power_flow(&case, &case.zero_power()).unwrap();
        assert!(check_constraints(&none, &case, &devices, &plan, 0, &Dispatch::idle(&devices), &ConstraintLimits::default()).is_empty());
    }

    #[test]
    fn backfeed_and_device_bounds_are_flagged() {
        let s = toy(100.0, 0.09, 0.0945);
        let plan = build_plan(&s.devices, &s.prices, Strategy::Mpas, None);
        let mut d = Dispatch::idle(&s.devices);
        d.discharge[0] = 400.0;
        let pf = run_power_flow(&s.case, &s.net_demand(0, &d)).unwrap();
        let v = check_constraints(&pf, &s.case, &s.devices, &plan, 0, &d, &ConstraintLimits::default());
        assert!(v.iter().any(|x| matches!(x, Violation::ReversePower { .. })));
        // Single state equals its own mean, so the plan leaves it on standby.
        assert!(v.iter().any(|x| matches!(x, Violation::BessMode { .. })));
        let relaxed = ConstraintLimits { forbid_reverse_power: false, ..Default::default() };
        let v = check_constraints(&pf, &s.case, &s.devices, &plan, 0, &d, &relaxed);
        assert!(!v.iter().any(|x| matches!(x, Violation::ReversePower { .. })));
    }

    #[test]
    fn report_for_day_without_ders() {
        let s = toy(500.0, 0.06, 0.063);
        let l = evaluate(&s, &Dispatch::idle(&s.devices), 0.06);
        let r = build_report(vec![l.clone(), l]).unwrap();
        assert!((r.economic.payments.grid.share - 100.0).abs() < 1e-12);
        assert!((r.energy.total_in - r.energy.total_out).abs() < ACCOUNTING_TOL);
        assert!((r.economic.payments.total + r.dpf - r.economic.revenue.total).abs() < 1e-9);
        assert_eq!(r.ldi.demand, 0.0);
    }

    #[test]
    fn report_rejects_energy_imbalance() {
        let mut l = StateLedger { dt: 1.0, demand_kwh: 10.0, grid_kwh: 9.0, ..Default::default() };
        l.of = 0.0;
        assert!(matches!(build_report(vec![l]), Err(Error::Accounting(_))));
    }
}
