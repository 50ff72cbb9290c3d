//! Files written by a run. Every per-state series has one row per state
//! plus a header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mpas_core::economics::Item;
use mpas_core::{DayReport, Mode};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::RunOutput;

pub const SCHEDULE: &str = "schedule.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const PROFIT: &str = "profit_per_state.csv";
pub const BESS: &str = "bess_dispatch.csv";
pub const LOAD: &str = "load_profile.csv";
pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io(&path))
}

fn csv_bytes(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Core(e.into());
    w.write_record(&header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    w.into_inner().map_err(|e| CliError::Core(mpas_core::Error::Io(e.into_error())))
}

fn f(x: f64) -> String {
    // Adding 0.0 turns a negative zero positive.
    format!("{:.6}", x + 0.0)
}

fn mode(m: Mode) -> &'static str {
    match m {
        Mode::Charge => "charge",
        Mode::Standby => "standby",
        Mode::Discharge => "discharge",
    }
}

pub fn schedule_csv(out: &RunOutput) -> Result<Vec<u8>> {
    let s = &out.scenario;
    let mut header = vec!["state".to_string(), "grid_price".into(), "customer_price".into()];
    for b in &s.devices.storage {
        let n = b.node;
        header.extend([format!("bess{n}_mode"), format!("bess{n}_charge_kw"), format!("bess{n}_discharge_kw")]);
    }
    header.extend(s.devices.turbines.iter().map(|m| format!("mt{}_kw", m.node)));
    header.extend(["loss_kw".into(), "grid_kw".into(), "min_voltage_pu".into(), "penalty".into(), "fitness".into()]);
    let rows = out.outcome.schedule.individuals.iter().enumerate().map(|(i, ind)| {
        let mut r = vec![i.to_string(), f(s.prices.grid()[i]), f(s.prices.customer()[i])];
        for b in 0..s.devices.storage.len() {
            r.extend([
                mode(out.plan.modes[i][b]).to_string(),
                f(ind.dispatch.charge[b]),
                f(ind.dispatch.discharge[b]),
            ]);
        }
        r.extend(ind.dispatch.mt.iter().map(|x| f(*x)));
        let pf = &out.outcome.flows[i];
        r.extend([f(pf.p_loss), f(pf.p_grid), f(pf.min_voltage()), f(ind.penalty), f(ind.fitness)]);
        r
    });
    csv_bytes(header, rows)
}

pub fn profit_csv(report: &DayReport) -> Result<Vec<u8>> {
    let header = ["state", "revenue", "payments", "fictitious_charge", "profit"].map(String::from).to_vec();
    let rows = report
        .ledgers
        .iter()
        .map(|l| vec![l.state.to_string(), f(l.revenue()), f(l.payments()), f(l.fc), f(l.of)]);
    csv_bytes(header, rows)
}

pub fn bess_csv(out: &RunOutput) -> Result<Vec<u8>> {
    let s = &out.scenario;
    let mut header = vec!["state".to_string()];
    for b in &s.devices.storage {
        header.extend([format!("bess{}_power_kw", b.node), format!("bess{}_soc", b.node)]);
    }
    let sched = &out.outcome.schedule;
    let rows = sched.individuals.iter().enumerate().map(|(i, ind)| {
        let mut r = vec![i.to_string()];
        for b in 0..s.devices.storage.len() {
            // Positive when discharging into the feeder.
            r.extend([f(ind.dispatch.discharge[b] - ind.dispatch.charge[b]), f(sched.soc.states[i][b])]);
        }
        r
    });
    csv_bytes(header, rows)
}

pub fn load_csv(report: &DayReport) -> Result<Vec<u8>> {
    let header = ["state", "demand_kw", "demand_less_renewables_kw", "net_demand_kw"].map(String::from).to_vec();
    let p = &report.profiles;
    let rows = (0..p.demand.len()).map(|i| vec![i.to_string(), f(p.demand[i]), f(p.with_renewables[i]), f(p.net[i])]);
    csv_bytes(header, rows)
}

fn item(t: &mut String, label: &str, it: &Item) {
    let _ = writeln!(t, "    {label:<24}{:>14.2}{:>9.2} %", it.value, it.share);
}

fn total(t: &mut String, label: &str, v: f64) {
    let _ = writeln!(t, "    {label:<24}{v:>14.2}");
}

pub fn report_text(r: &DayReport) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "Strategy: {}   Seed: {}   States: {}", r.strategy, r.seed, r.states);
    let _ = writeln!(t, "Daily profit (DPF): {:.2} $", r.dpf);
    let _ = writeln!(t);
    let e = &r.economic;
    let _ = writeln!(t, "Economic equation ($)");
    let _ = writeln!(t, "  Payments");
    item(&mut t, "Grid purchase", &e.payments.grid);
    item(&mut t, "SPV", &e.payments.spv);
    item(&mut t, "WT", &e.payments.wt);
    item(&mut t, "MT fuel", &e.payments.mt);
    item(&mut t, "MT O&M", &e.payments.mt_om);
    item(&mut t, "BESS O&M", &e.payments.bess_om);
    total(&mut t, "Total", e.payments.total);
    let _ = writeln!(t, "  Revenue");
    item(&mut t, "Consumption billing", &e.revenue.consumption);
    item(&mut t, "Losses", &e.revenue.losses);
    total(&mut t, "Total", e.revenue.total);
    let _ = writeln!(t, "  Profit {:.2} $ ({:.2} % of payments)", e.profit, e.margin);
    let _ = writeln!(t);
    let n = &r.energy;
    let _ = writeln!(t, "Energy equation (kWh)");
    let _ = writeln!(t, "  Supplied");
    item(&mut t, "Grid", &n.grid);
    item(&mut t, "SPV", &n.spv);
    item(&mut t, "WT", &n.wt);
    item(&mut t, "MT", &n.mt);
    item(&mut t, "BESS discharge", &n.bess_supplied);
    total(&mut t, "Total", n.total_in);
    let _ = writeln!(t, "  Consumed");
    item(&mut t, "Billing", &n.billing);
    item(&mut t, "Losses", &n.loss);
    item(&mut t, "BESS charge", &n.bess_consumed);
    total(&mut t, "Total", n.total_out);
    let _ = writeln!(t);
    let _ = writeln!(t, "Load deviation index (kW)");
    total(&mut t, "Demand", r.ldi.demand);
    total(&mut t, "Less renewables", r.ldi.with_renewables);
    total(&mut t, "Net", r.ldi.net);
    let s = &r.shift;
    let _ = writeln!(t, "Demand shift");
    let _ = writeln!(t, "    {:<24}{:>14.2} %", "Mean", s.mean_change_pct);
    let _ = writeln!(
        t,
        "    {:<24}{:>14.2} %   state {} -> {}",
        "Peak", s.peak_change_pct, s.peak_state_before, s.peak_state_after
    );
    let _ = writeln!(
        t,
        "    {:<24}{:>14.2} %   state {} -> {}",
        "Valley", s.valley_change_pct, s.valley_state_before, s.valley_state_after
    );
    let soc: Vec<String> = r.end_soc.iter().map(|x| format!("{x:.4}")).collect();
    let _ = writeln!(t, "End SOC: {}", soc.join(", "));
    t
}

pub fn write_all(dir: &Path, effective: &RunConfig, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let report = &out.outcome.report;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write(dir, SCHEDULE, &schedule_csv(out)?)?;
    write(dir, REPORT_JSON, json.as_bytes())?;
    write(dir, REPORT_TXT, report_text(report).as_bytes())?;
    write(dir, PROFIT, &profit_csv(report)?)?;
    write(dir, BESS, &bess_csv(out)?)?;
    write(dir, LOAD, &load_csv(report)?)?;
    write(dir, EFFECTIVE_CONFIG, effective.to_toml().as_bytes())?;
    Ok(())
}
