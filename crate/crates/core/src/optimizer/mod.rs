//! Sequential per-state dispatch search.
//!
//! States are solved in chronological order. In each state the plan fixes
//! the BESS modes, so a BESS gene is its charging power in a charge state,
//! its discharging power in a discharge state, and pinned to zero otherwise.
//! Genes are repaired into the SOC and cap limits before every evaluation;
//! network limits and back-feed enter the fitness as static penalties.

mod kernel;

pub use kernel::{HerdOptimizer, KernelResult, SwarmConfig, SwarmKernel};

use serde::{Deserialize, Serialize};

use crate::der_models::{clamp_charge, clamp_discharge, soc_update, SocTrace};
use crate::dms::{DmsPlan, Mode};
use crate::economics::{self, build_report, check_constraints, ConstraintLimits, DayReport, StateLedger, Violation};
use crate::error::{Error, Result};
use crate::network::{run_power_flow, PowerFlowResult};
use crate::scenario::{Dispatch, Scenario};

/// Static penalty weights ($ per unit of violation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyWeights {
    /// Per p.u. of voltage outside the band, summed over buses.
    pub voltage_per_pu: f64,
    /// Per ampere above a line rating.
    pub overload_per_amp: f64,
    /// Per kW fed back through the substation.
    pub reverse_per_kw: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            voltage_per_pu: 1e3,
            overload_per_amp: 1e3 / 100.0,
            reverse_per_kw: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub swarm: SwarmConfig,
    pub limits: ConstraintLimits,
    pub penalties: PenaltyWeights,
}

pub fn penalty(violations: &[Violation], limits: &ConstraintLimits, w: &PenaltyWeights) -> f64 {
    violations
        .iter()
        .map(|v| match *v {
            Violation::Voltage { v, .. } => {
                w.voltage_per_pu * ((limits.v_min - v).max(0.0) + (v - limits.v_max).max(0.0))
            }
            Violation::Overload { amps, limit, .. } => w.overload_per_amp * (amps - limit),
            Violation::ReversePower { kw } => w.reverse_per_kw * kw,
            // Repair keeps device genes inside their limits.
            _ => 0.0,
        })
        .fold(0.0, |acc, x| acc + x)
}

/// Best dispatch found for one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    /// BESS genes in fleet order, then MT genes.
    pub genes: Vec<f64>,
    /// Fitness net of penalties ($).
    pub fitness: f64,
    pub penalty: f64,
    pub dispatch: Dispatch,
    pub ledger: StateLedger,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub individuals: Vec<Individual>,
    pub soc: SocTrace,
}

impl Schedule {
    pub fn dispatch(&self, state: usize) -> &Dispatch {
        &self.individuals[state].dispatch
    }
}

#[derive(Debug, Clone)]
pub struct DayOutcome {
    pub schedule: Schedule,
    pub report: DayReport,
    pub flows: Vec<PowerFlowResult>,
}

/// Everything the search in one state depends on.
#[derive(Debug, Clone, Copy)]
pub struct StateContext<'a> {
    pub scenario: &'a Scenario,
    pub plan: &'a DmsPlan,
    pub state: usize,
    /// SOC of each BESS entering the state.
    pub soc_prev: &'a [f64],
}

impl StateContext<'_> {
    /// Search box after repair. Forced-storage plans pin BESS genes to their
    /// feasible cap.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let devices = &self.scenario.devices;
        let dt = self.scenario.dt();
        let forced = self.plan.forced_storage();
        let mut out = Vec::with_capacity(devices.gene_count());
        for (b, bess) in devices.storage.iter().enumerate() {
            let cap = self.plan.caps[self.state][b];
            let hi = match self.plan.modes[self.state][b] {
                Mode::Charge => clamp_charge(bess, self.soc_prev[b], cap, dt),
                Mode::Discharge => clamp_discharge(bess, self.soc_prev[b], cap, dt),
                Mode::Standby => 0.0,
            };
            out.push((if forced { hi } else { 0.0 }, hi));
        }
        for r in 0..devices.turbines.len() {
            out.push((0.0, self.plan.mt_caps[self.state][r].max(0.0)));
        }
        out
    }

    /// Map genes to a dispatch, repairing each BESS gene into its SOC limit.
    pub fn decode(&self, genes: &[f64]) -> Dispatch {
        let devices = &self.scenario.devices;
        let dt = self.scenario.dt();
        let mut d = Dispatch::idle(devices);
        for (b, bess) in devices.storage.iter().enumerate() {
            let cap = self.plan.caps[self.state][b];
            let g = genes[b].clamp(0.0, cap.max(0.0));
            match self.plan.modes[self.state][b] {
                Mode::Charge => d.charge[b] = clamp_charge(bess, self.soc_prev[b], g, dt),
                Mode::Discharge => d.discharge[b] = clamp_discharge(bess, self.soc_prev[b], g, dt),
                Mode::Standby => {}
            }
        }
        let nb = devices.storage.len();
        for (r, mt) in d.mt.iter_mut().enumerate() {
            *mt = genes[nb + r].clamp(0.0, self.plan.mt_caps[self.state][r].max(0.0));
        }
        d
    }

    pub fn evaluate(&self, genes: &[f64], cfg: &OptimizerConfig) -> Result<(Individual, PowerFlowResult)> {
        let s = self.scenario;
        let dispatch = self.decode(genes);
        let pf = run_power_flow(&s.case, &s.net_demand(self.state, &dispatch))?;
        let ledger = economics::state_profit(s, self.state, &dispatch, &pf, self.plan.fc_price)?;
        let violations = check_constraints(&pf, &s.case, &s.devices, self.plan, self.state, &dispatch, &cfg.limits);
        let penalty = penalty(&violations, &cfg.limits, &cfg.penalties);
        let fitness = economics::fitness(&ledger) - penalty;
        Ok((
            Individual {
                genes: genes.to_vec(),
                fitness,
                penalty,
                dispatch,
                ledger,
            },
            pf,
        ))
    }
}

/// Seed for one state, decorrelated from its neighbours.
pub fn state_seed(seed: u64, state: usize) -> u64 {
    let mut z = seed ^ (state as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Best individual for one state. The lower corner of the box (idle
/// dispatch, or the pinned caps of a forced plan) is always a candidate.
pub fn optimize_state(
    ctx: &StateContext,
    kernel: &dyn SwarmKernel,
    cfg: &OptimizerConfig,
) -> Result<(Individual, PowerFlowResult)> {
    let bounds = ctx.bounds();
    let floor: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let baseline = ctx.evaluate(&floor, cfg)?;
    if bounds.iter().all(|(lo, hi)| lo == hi) {
        return Ok(baseline);
    }
    let mut objective = |genes: &[f64]| match ctx.evaluate(genes, cfg) {
        Ok((ind, _)) => ind.fitness,
        Err(e) => {
            log::debug!("state {}: candidate rejected: {e}", ctx.state);
            f64::NAN
        }
    };
    let found = kernel.maximize(&mut objective, &bounds, state_seed(cfg.swarm.seed, ctx.state))?;
    if found.best_fitness > baseline.0.fitness {
        ctx.evaluate(&found.best, cfg)
    } else {
        Ok(baseline)
    }
}

/// Solve every state in order, advancing the SOC chain after each one.
pub fn optimize_day(
    scenario: &Scenario,
    plan: &DmsPlan,
    kernel: &dyn SwarmKernel,
    cfg: &OptimizerConfig,
) -> Result<DayOutcome> {
    let n = scenario.states();
    if plan.states() != n {
        return Err(Error::Consistency(format!(
            "plan covers {} states, scenario {}",
            plan.states(),
            n
        )));
    }
    let fleet = &scenario.devices.storage;
    let mut soc = SocTrace::new(fleet);
    let mut individuals = Vec::with_capacity(n);
    let mut flows = Vec::with_capacity(n);
    for state in 0..n {
        let soc_prev = soc.current().to_vec();
        let ctx = StateContext {
            scenario,
            plan,
            state,
            soc_prev: &soc_prev,
        };
        let (best, pf) = optimize_state(&ctx, kernel, cfg).map_err(|e| e.at_state(state))?;
        let next = fleet
            .iter()
            .enumerate()
            .map(|(b, bess)| {
                soc_update(bess, soc_prev[b], best.dispatch.charge[b], best.dispatch.discharge[b], scenario.dt())
            })
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| e.at_state(state))?;
        soc.push(next);
        individuals.push(best);
        flows.push(pf);
    }
    let mut report = build_report(individuals.iter().map(|i| i.ledger.clone()).collect())?;
    report.strategy = plan.strategy.id().to_string();
    report.seed = cfg.swarm.seed;
    report.end_soc = soc.current().to_vec();
    Ok(DayOutcome {
        schedule: Schedule { individuals, soc },
        report,
        flows,
    })
}
