use mpas_core::der_models::soc_update;
use mpas_core::scenario::bundled;
use mpas_core::{Strategy, *};
use proptest::prelude::*;

fn day(seed: u64) -> Scenario {
    bundled::scenario(&DeviceParams::default(), bundled::DEFAULT_K, seed).unwrap()
}

fn run(s: &Scenario, strategy: Strategy, fc: Option<f64>, seed: u64) -> DayOutcome {
    let plan = build_plan(&s.devices, &s.prices, strategy, fc);
    let cfg = OptimizerConfig {
        swarm: SwarmConfig { seed, ..Default::default() },
        ..Default::default()
    };
    optimize_day(s, &plan, &HerdOptimizer::new(cfg.swarm), &cfg).unwrap()
}

#[test]
fn same_seed_same_schedule() {
    let s = day(3);
    let a = run(&s, Strategy::Mpas, None, 11);
    let b = run(&s, Strategy::Mpas, None, 11);
    assert_eq!(a.schedule, b.schedule);
    assert_eq!(a.report, b.report);
}

#[test]
fn schedule_follows_plan_and_soc_chain() {
    let s = day(5);
    let plan = build_plan(&s.devices, &s.prices, Strategy::Mpas, None);
    let out = run(&s, Strategy::Mpas, None, 2);
    let mut soc: Vec<f64> = out.schedule.soc.initial.clone();
    for (i, ind) in out.schedule.individuals.iter().enumerate() {
        for (b, bess) in s.devices.storage.iter().enumerate() {
            let (c, d) = (ind.dispatch.charge[b], ind.dispatch.discharge[b]);
            match plan.modes[i][b] {
                Mode::Charge => assert_eq!(d, 0.0),
                Mode::Discharge => assert_eq!(c, 0.0),
                Mode::Standby => assert!(c == 0.0 && d == 0.0),
            }
            assert!(c <= plan.caps[i][b] + 1e-9 && d <= plan.caps[i][b] + 1e-9);
            soc[b] = soc_update(bess, soc[b], c, d, s.dt()).unwrap();
        }
        assert_eq!(out.schedule.soc.states[i], soc);
        for (r, mt) in ind.dispatch.mt.iter().enumerate() {
            assert!(*mt >= 0.0 && *mt <= plan.mt_caps[i][r] + 1e-9);
        }
    }
    assert_eq!(out.report.end_soc, soc);
    assert_eq!(out.report.strategy, "mpas");
    assert_eq!(out.report.seed, 2);
}

#[test]
fn fixed_window_discharges_straight_after_charging() {
    let s = day(1);
    let plan = build_plan(&s.devices, &s.prices, Strategy::FixedWindow, None);
    assert!(plan.forced_storage());
    let first_discharge = (0..plan.states())
        .find(|&i| plan.modes[i].contains(&Mode::Discharge))
        .unwrap();
    let last_charge = (0..first_discharge)
        .rev()
        .find(|&i| plan.modes[i].contains(&Mode::Charge))
        .unwrap();
    assert_eq!(first_discharge, last_charge + 1);
    let out = run(&s, Strategy::FixedWindow, None, 1);
    assert_eq!(out.report.strategy, "fixed-window");
}

#[test]
fn fc_off_still_balances() {
    let s = day(2);
    let out = run(&s, Strategy::Mpas, Some(0.0), 4);
    let r = &out.report;
    assert!((r.energy.total_in - r.energy.total_out).abs() < 1e-3);
    assert!((r.economic.payments.total + r.dpf - r.economic.revenue.total).abs() < 1e-3);
    assert!(r.ledgers.iter().all(|l| l.fc == 0.0));
}

#[test]
fn profiles_have_one_row_per_state() {
    let out = run(&day(0), Strategy::Mpas, None, 0);
    let p = &out.report.profiles;
    assert_eq!(p.demand.len(), 24);
    assert_eq!(p.with_renewables.len(), 24);
    assert_eq!(p.net.len(), 24);
    assert_eq!(out.flows.len(), 24);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthetic_days_stay_in_envelope(
        days in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 2..12),
        k in 0.2f64..3.0,
        seed in any::<u64>(),
    ) {
        let h = HistoricalSeries::new(days, None).unwrap();
        let env = build_envelope(&h, k).unwrap();
        let day = synthesize_day(&env, seed).unwrap();
        prop_assert!(env.contains(&day, 1e-9));
    }

    #[test]
    fn single_peak_prices_leave_a_standby_gap(peak in 14usize..20, width in 0.01f64..0.08) {
        let grid: Vec<f64> = (0..24)
            .map(|h| 0.03 + width * (-((h as f64 - peak as f64) / 3.0).powi(2)).exp())
            .collect();
        let p = PriceSignal::from_grid(grid, 0.05).unwrap();
        let case = CaseData::ieee33();
        let devices = DeviceSet::from_case(&case, &DeviceParams::default()).unwrap();
        let plan = build_plan(&devices, &p, Strategy::Mpas, None);
        let modes = &plan.modes;
        let active = |m: Mode| (0..24).filter(move |&i| modes[i][0] == m);
        let first_d = active(Mode::Discharge).min().unwrap();
        let last_c = active(Mode::Charge).filter(|&i| i < first_d).max().unwrap();
        prop_assert!(first_d > last_c + 1);
        let standby = plan.standby_states();
        prop_assert!((last_c + 1..first_d).all(|i| standby.contains(&i)));
    }
}
