//! Benchmark fixtures.

use mpas_core::optimizer::{OptimizerConfig, StateContext};
use mpas_core::scenario::bundled;
use mpas_core::{build_plan, DeviceParams, DmsPlan, Scenario, Strategy};

/// Bundled day with its plan.
pub fn bundled_day(strategy: Strategy, seed: u64) -> (Scenario, DmsPlan) {
    let scenario = bundled::scenario(&DeviceParams::default(), bundled::DEFAULT_K, seed).expect("bundled scenario");
    let plan = build_plan(&scenario.devices, &scenario.prices, strategy, None);
    (scenario, plan)
}

pub fn config(seed: u64) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::default();
    cfg.swarm.seed = seed;
    cfg
}

/// State with the most free genes.
pub fn busiest_state(scenario: &Scenario, plan: &DmsPlan, soc: &[f64]) -> usize {
    (0..scenario.states())
        .max_by_key(|&state| {
            let ctx = StateContext { scenario, plan, state, soc_prev: soc };
            ctx.bounds().iter().filter(|(lo, hi)| hi > lo).count()
        })
        .unwrap_or(0)
}

pub fn initial_soc(scenario: &Scenario) -> Vec<f64> {
    scenario.devices.storage.iter().map(|b| b.soc_init).collect()
}
