//! Side-by-side economic and energy equations of two runs on the same inputs.

use std::fmt::Write as _;

use mpas_core::DayReport;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::RunOutput;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub item: &'static str,
    pub a: f64,
    pub b: f64,
    /// (a − b) / |b| in percent; 0 when both are 0.
    pub delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub rows: Vec<Row>,
    pub profit_delta_pct: f64,
    pub loss_delta_pct: f64,
}

fn delta(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if b == 0.0 {
        f64::INFINITY.copysign(a)
    } else {
        100.0 * (a - b) / b.abs()
    }
}

/// The two runs must share feeder, devices, historical draw and prices.
pub fn check_inputs(a: &RunOutput, b: &RunOutput) -> Result<()> {
    let (sa, sb) = (&a.scenario, &b.scenario);
    let mut diffs = Vec::new();
    if sa.case != sb.case {
        diffs.push("case");
    }
    if sa.profiles != sb.profiles || sa.load_scale != sb.load_scale {
        diffs.push("profiles");
    }
    if sa.prices != sb.prices {
        diffs.push("prices");
    }
    if sa.devices != sb.devices {
        diffs.push("devices");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Compare(format!("runs differ in {}", diffs.join(", "))))
    }
}

pub fn compare(a: &RunOutput, b: &RunOutput) -> Result<Comparison> {
    check_inputs(a, b)?;
    Ok(table(&a.outcome.report, &b.outcome.report))
}

pub fn table(ra: &DayReport, rb: &DayReport) -> Comparison {
    let pick: [(&'static str, fn(&DayReport) -> f64); 22] = [
        ("DPF ($)", |r| r.dpf),
        ("Payments: grid ($)", |r| r.economic.payments.grid.value),
        ("Payments: SPV ($)", |r| r.economic.payments.spv.value),
        ("Payments: WT ($)", |r| r.economic.payments.wt.value),
        ("Payments: MT fuel ($)", |r| r.economic.payments.mt.value),
        ("Payments: MT O&M ($)", |r| r.economic.payments.mt_om.value),
        ("Payments: BESS O&M ($)", |r| r.economic.payments.bess_om.value),
        ("Payments: total ($)", |r| r.economic.payments.total),
        ("Revenue: billing ($)", |r| r.economic.revenue.consumption.value),
        ("Revenue: losses ($)", |r| r.economic.revenue.losses.value),
        ("Revenue: total ($)", |r| r.economic.revenue.total),
        ("Profit margin (%)", |r| r.economic.margin),
        ("Energy: grid (kWh)", |r| r.energy.grid.value),
        ("Energy: SPV (kWh)", |r| r.energy.spv.value),
        ("Energy: WT (kWh)", |r| r.energy.wt.value),
        ("Energy: MT (kWh)", |r| r.energy.mt.value),
        ("Energy: BESS out (kWh)", |r| r.energy.bess_supplied.value),
        ("Energy: billing (kWh)", |r| r.energy.billing.value),
        ("Energy: losses (kWh)", |r| r.energy.loss.value),
        ("Energy: BESS in (kWh)", |r| r.energy.bess_consumed.value),
        ("LDI demand (kW)", |r| r.ldi.demand),
        ("LDI net (kW)", |r| r.ldi.net),
    ];
    let rows = pick
        .iter()
        .map(|(item, get)| {
            let (a, b) = (get(ra), get(rb));
            Row {
                item,
                a,
                b,
                delta_pct: delta(a, b),
            }
        })
        .collect();
    Comparison {
        a: ra.strategy.clone(),
        b: rb.strategy.clone(),
        rows,
        profit_delta_pct: delta(ra.dpf, rb.dpf),
        loss_delta_pct: delta(ra.energy.loss.value, rb.energy.loss.value),
    }
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "{:<26}{:>14}{:>14}{:>10}", "", format!("A ({})", self.a), format!("B ({})", self.b), "delta %");
        for r in &self.rows {
            let _ = writeln!(t, "{:<26}{:>14.2}{:>14.2}{:>10.2}", r.item, r.a, r.b, r.delta_pct);
        }
        let _ = writeln!(
            t,
            "Profit {:+.2} %, losses {:+.2} % (A relative to B)",
            self.profit_delta_pct, self.loss_delta_pct
        );
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas() {
        assert_eq!(delta(0.0, 0.0), 0.0);
        assert_eq!(delta(104.0, 100.0), 4.0);
        assert_eq!(delta(-5.0, -10.0), 50.0);
        assert!(delta(1.0, 0.0).is_infinite());
    }
}
