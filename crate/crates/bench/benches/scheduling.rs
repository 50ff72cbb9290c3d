use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mpas_bench::{bundled_day, busiest_state, config, initial_soc};
use mpas_core::optimizer::{optimize_day, optimize_state, HerdOptimizer, StateContext};
use mpas_core::{run_power_flow, Dispatch, Strategy};

fn power_flow(c: &mut Criterion) {
    let (scenario, _) = bundled_day(Strategy::Mpas, 0);
    let demand = scenario.net_demand(19, &Dispatch::idle(&scenario.devices));
    c.bench_function("power_flow_33bus", |b| {
        b.iter(|| run_power_flow(black_box(&scenario.case), black_box(&demand)).unwrap())
    });
}

fn single_state(c: &mut Criterion) {
    let (scenario, plan) = bundled_day(Strategy::Mpas, 0);
    let cfg = config(0);
    let kernel = HerdOptimizer::new(cfg.swarm);
    let soc = initial_soc(&scenario);
    let state = busiest_state(&scenario, &plan, &soc);
    let ctx = StateContext { scenario: &scenario, plan: &plan, state, soc_prev: &soc };
    c.bench_function("optimize_state", |b| b.iter(|| optimize_state(black_box(&ctx), &kernel, &cfg).unwrap()));
}

fn full_day(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_day");
    group.sample_size(10);
    for (name, strategy) in [("mpas", Strategy::Mpas), ("fixed_window", Strategy::FixedWindow)] {
        let (scenario, plan) = bundled_day(strategy, 0);
        let cfg = config(0);
        let kernel = HerdOptimizer::new(cfg.swarm);
        group.bench_function(name, |b| b.iter(|| optimize_day(black_box(&scenario), &plan, &kernel, &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, power_flow, single_state, full_day);
criterion_main!(benches);
