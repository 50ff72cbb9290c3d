//! Radial feeder data and backward/forward sweep power flow.
//!
//! Quantities at the API boundary are in engineering units (kW, kVar, A, Ω);
//! the sweep itself runs in per-unit on the feeder base. Bus vectors are
//! always indexed in the order buses appear in [`CaseData::buses`], line
//! vectors in the order of [`CaseData::lines`].

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ampacity used for lines whose case entry leaves the limit blank.
pub const DEFAULT_AMPACITY_A: f64 = 400.0;

/// Bundled 12.66 kV 33-bus test feeder with its DER siting.
pub const IEEE33_CASE: &str = include_str!("../data/ieee33.csv");

/// Substation node id.
pub const SUBSTATION: usize = 1;

/// Active-power balance tolerance (kW) below which back-feed is treated as zero.
const BALANCE_TOL_KW: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// Nominal active demand (kW).
    pub p_load: f64,
    /// Nominal reactive demand (kVar).
    pub q_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series resistance (Ω).
    pub r: f64,
    /// Series reactance (Ω).
    pub x: f64,
    /// Thermal current limit (A).
    pub ampacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerKind {
    Spv,
    Wt,
    Mt,
    Bess,
}

impl FromStr for DerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spv" | "pv" | "solar" => Ok(DerKind::Spv),
            "wt" | "wind" => Ok(DerKind::Wt),
            "mt" | "microturbine" => Ok(DerKind::Mt),
            "bess" | "battery" => Ok(DerKind::Bess),
            other => Err(Error::Input(format!("unknown DER type '{other}'"))),
        }
    }
}

impl fmt::Display for DerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DerKind::Spv => "spv",
            DerKind::Wt => "wt",
            DerKind::Mt => "mt",
            DerKind::Bess => "bess",
        };
        f.write_str(s)
    }
}

/// A DER sited at a bus. `rating` is kWp for SPV/WT, kW for MT, kWh for BESS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerPlacement {
    pub node: usize,
    pub kind: DerKind,
    pub rating: f64,
}

/// Per-unit base and source voltage of the feeder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeederBase {
    pub kv: f64,
    pub mva: f64,
    /// Substation voltage magnitude setpoint (p.u.).
    pub v_source: f64,
}

impl Default for FeederBase {
    fn default() -> Self {
        Self {
            kv: 12.66,
            mva: 100.0,
            v_source: 1.0,
        }
    }
}

impl FeederBase {
    pub fn z_base(&self) -> f64 {
        self.kv * self.kv / self.mva
    }

    pub fn kva_base(&self) -> f64 {
        self.mva * 1000.0
    }

    pub fn i_base(&self) -> f64 {
        self.mva * 1e6 / (3f64.sqrt() * self.kv * 1e3)
    }
}

/// Line oriented away from the substation, in dense bus indices.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Branch {
    line: usize,
    up: usize,
    down: usize,
    z: Complex64,
}

/// Immutable radial feeder: buses, lines, DER siting and the derived sweep order.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseData {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    ders: Vec<DerPlacement>,
    base: FeederBase,
    index: HashMap<usize, usize>,
    root: usize,
    /// Branches ordered so a branch always follows the branch feeding it.
    sweep: Vec<Branch>,
}

impl CaseData {
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        ders: Vec<DerPlacement>,
        base: FeederBase,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if bus.p_load < 0.0 || !bus.p_load.is_finite() || !bus.q_load.is_finite() {
                return Err(Error::Input(format!("bus {} has invalid load", bus.id)));
            }
            if index.insert(bus.id, i).is_some() {
                return Err(Error::Input(format!("duplicate bus id {}", bus.id)));
            }
        }
        let root = *index
            .get(&SUBSTATION)
            .ok_or_else(|| Error::Topology(format!("substation node {SUBSTATION} missing")))?;

        for line in &lines {
            if line.from == line.to {
                return Err(Error::Topology(format!("self-loop at node {}", line.from)));
            }
            for end in [line.from, line.to] {
                if !index.contains_key(&end) {
                    return Err(Error::Reference(format!("line references unknown node {end}")));
                }
            }
            if line.r < 0.0 || !(line.ampacity > 0.0) {
                return Err(Error::Input(format!(
                    "line {}-{} needs r >= 0 and ampacity > 0",
                    line.from, line.to
                )));
            }
        }
        if lines.len() + 1 != buses.len() {
            return Err(Error::Topology(format!(
                "{} buses need exactly {} lines for a tree, found {}",
                buses.len(),
                buses.len().saturating_sub(1),
                lines.len()
            )));
        }

        let z_base = base.z_base();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); buses.len()];
        for (l, line) in lines.iter().enumerate() {
            adjacency[index[&line.from]].push(l);
            adjacency[index[&line.to]].push(l);
        }
        let mut seen = vec![false; buses.len()];
        let mut sweep = Vec::with_capacity(lines.len());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(up) = queue.pop_front() {
            for &l in &adjacency[up] {
                let line = &lines[l];
                let (a, b) = (index[&line.from], index[&line.to]);
                let down = if a == up { b } else { a };
                if seen[down] {
                    // Either the branch we arrived through or a cycle.
                    if sweep.iter().any(|br: &Branch| br.line == l) {
                        continue;
                    }
                    return Err(Error::Topology(format!(
                        "cycle through line {}-{}",
                        line.from, line.to
                    )));
                }
                seen[down] = true;
                sweep.push(Branch {
                    line: l,
                    up,
                    down,
                    z: Complex64::new(line.r / z_base, line.x / z_base),
                });
                queue.push_back(down);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!(
                "node {} is not connected to the substation",
                buses[i].id
            )));
        }

        for der in &ders {
            if !index.contains_key(&der.node) {
                return Err(Error::Reference(format!(
                    "{} placed at unknown node {}",
                    der.kind, der.node
                )));
            }
            if !(der.rating > 0.0) {
                return Err(Error::Input(format!(
                    "{} at node {} needs a positive rating",
                    der.kind, der.node
                )));
            }
        }

        Ok(Self {
            buses,
            lines,
            ders,
            base,
            index,
            root,
            sweep,
        })
    }

    /// The bundled 33-bus feeder.
    pub fn ieee33() -> Self {
        load_case(IEEE33_CASE).expect("bundled case parses")
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn ders(&self) -> &[DerPlacement] {
        &self.ders
    }

    pub fn base(&self) -> FeederBase {
        self.base
    }

    pub fn with_base(mut self, base: FeederBase) -> Self {
        let z_base = base.z_base();
        for br in &mut self.sweep {
            let line = &self.lines[br.line];
            br.z = Complex64::new(line.r / z_base, line.x / z_base);
        }
        self.base = base;
        self
    }

    /// Dense position of a bus id in [`Self::buses`].
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn total_load(&self) -> (f64, f64) {
        self.buses
            .iter()
            .fold((0.0, 0.0), |(p, q), b| (p + b.p_load, q + b.q_load))
    }

    /// Nominal demand of every bus, scaled by `factor`.
    pub fn scaled_demand(&self, factor: f64) -> BusPower {
        BusPower {
            p_kw: self.buses.iter().map(|b| b.p_load * factor).collect(),
            q_kvar: self.buses.iter().map(|b| b.q_load * factor).collect(),
        }
    }

    /// Zero net demand at every bus.
    pub fn zero_power(&self) -> BusPower {
        BusPower::zeros(self.buses.len())
    }
}

fn section_records(body: &str) -> Result<Vec<csv::StringRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        // Column header rows are recognised by a non-numeric first field.
        if rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        out.push(rec);
    }
    Ok(out)
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize, what: &str) -> Result<T> {
    rec.get(i)
        .ok_or_else(|| Error::Input(format!("{what}: missing column {}", i + 1)))?
        .parse()
        .map_err(|_| Error::Input(format!("{what}: bad value in column {}", i + 1)))
}

/// Parse a sectioned case file with the default ampacity for blank limits.
pub fn load_case(source: &str) -> Result<CaseData> {
    load_case_with(source, DEFAULT_AMPACITY_A, FeederBase::default())
}

/// Parse a sectioned case file (`[bus]`, `[line]`, `[der]` sections of CSV rows).
pub fn load_case_with(source: &str, default_ampacity: f64, base: FeederBase) -> Result<CaseData> {
    let mut sections: HashMap<String, String> = HashMap::new();
    let mut current: Option<String> = None;
    for raw in source.lines() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_ascii_lowercase();
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        match &current {
            Some(name) => {
                let body = sections.get_mut(name).expect("section registered");
                body.push_str(raw);
                body.push('\n');
            }
            None if line.is_empty() || line.starts_with('#') => {}
            None => return Err(Error::Input(format!("data outside a section: '{line}'"))),
        }
    }

    let bus_body = sections
        .get("bus")
        .ok_or_else(|| Error::Input("case file has no [bus] section".into()))?;
    let line_body = sections
        .get("line")
        .ok_or_else(|| Error::Input("case file has no [line] section".into()))?;

    let buses = section_records(bus_body)?
        .iter()
        .map(|r| {
            Ok(Bus {
                id: field(r, 0, "bus")?,
                p_load: field(r, 1, "bus")?,
                q_load: field(r, 2, "bus")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let lines = section_records(line_body)?
        .iter()
        .map(|r| {
            let ampacity = match r.get(4) {
                Some(s) if !s.is_empty() => field(r, 4, "line")?,
                _ => default_ampacity,
            };
            Ok(Line {
                from: field(r, 0, "line")?,
                to: field(r, 1, "line")?,
                r: field(r, 2, "line")?,
                x: field(r, 3, "line")?,
                ampacity,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ders = match sections.get("der") {
        Some(body) => section_records(body)?
            .iter()
            .map(|r| {
                Ok(DerPlacement {
                    node: field(r, 0, "der")?,
                    kind: r
                        .get(1)
                        .ok_or_else(|| Error::Input("der: missing type".into()))?
                        .parse()?,
                    rating: field(r, 2, "der")?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };

    CaseData::new(buses, lines, ders, base)
}

/// Net demand per bus (consumption positive, generation negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusPower {
    pub p_kw: Vec<f64>,
    pub q_kvar: Vec<f64>,
}

impl BusPower {
    pub fn zeros(n: usize) -> Self {
        Self {
            p_kw: vec![0.0; n],
            q_kvar: vec![0.0; n],
        }
    }

    pub fn total_p(&self) -> f64 {
        self.p_kw.iter().sum()
    }

    /// Add active power (kW) drawn at dense bus index `idx`; negative injects.
    pub fn add_p(&mut self, idx: usize, kw: f64) {
        self.p_kw[idx] += kw;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Convergence threshold on max |ΔV| between sweeps (p.u.).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowResult {
    /// Voltage magnitude per bus (p.u.).
    pub v_mag: Vec<f64>,
    /// Voltage angle per bus (rad).
    pub v_ang: Vec<f64>,
    /// Current magnitude per line (A).
    pub i_line: Vec<f64>,
    /// Total active loss (kW).
    pub p_loss: f64,
    /// Total reactive loss (kVar).
    pub q_loss: f64,
    /// Active power injected at the substation (kW); negative when back-feeding.
    pub p_grid: f64,
    pub q_grid: f64,
    /// Back-feed toward the grid (kW).
    pub p_rev: f64,
    /// |p_grid − (net demand + losses)| at the final iterate (kW).
    pub mismatch_kw: f64,
    pub iterations: usize,
}

impl PowerFlowResult {
    pub fn min_voltage(&self) -> f64 {
        self.v_mag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_voltage(&self) -> f64 {
        self.v_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Solve the radial feeder for the given per-bus net demand.
pub fn run_power_flow(case: &CaseData, demand: &BusPower) -> Result<PowerFlowResult> {
    run_power_flow_with(case, demand, SweepOptions::default())
}

pub fn run_power_flow_with(
    case: &CaseData,
    demand: &BusPower,
    opts: SweepOptions,
) -> Result<PowerFlowResult> {
    let n = case.buses.len();
    if demand.p_kw.len() != n || demand.q_kvar.len() != n {
        return Err(Error::Input(format!(
            "net demand has {} entries, feeder has {n} buses",
            demand.p_kw.len()
        )));
    }
    let base = case.base;
    let kva = base.kva_base();
    let s_load: Vec<Complex64> = demand
        .p_kw
        .iter()
        .zip(&demand.q_kvar)
        .map(|(p, q)| Complex64::new(p / kva, q / kva))
        .collect();

    let source = Complex64::new(base.v_source, 0.0);
    let mut v = vec![source; n];
    let mut branch_i = vec![Complex64::new(0.0, 0.0); case.lines.len()];
    let mut node_i = vec![Complex64::new(0.0, 0.0); n];
    let mut last_delta = f64::INFINITY;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        backward_sweep(case, &s_load, &v, &mut node_i, &mut branch_i);

        last_delta = 0.0;
        for br in &case.sweep {
            let next = v[br.up] - br.z * branch_i[br.line];
            last_delta = f64::max(last_delta, (next - v[br.down]).norm());
            v[br.down] = next;
        }
        if !last_delta.is_finite() || v.iter().any(|x| !x.norm().is_finite() || x.norm() < 1e-3) {
            return Err(Error::Divergence {
                iterations,
                last_delta,
            });
        }
        if last_delta < opts.tolerance {
            break;
        }
    }
    if last_delta >= opts.tolerance {
        return Err(Error::Divergence {
            iterations,
            last_delta,
        });
    }

    // Currents consistent with the converged voltages.
    backward_sweep(case, &s_load, &v, &mut node_i, &mut branch_i);

    let mut s_loss = Complex64::new(0.0, 0.0);
    for br in &case.sweep {
        s_loss += br.z * branch_i[br.line].norm_sqr();
    }
    let feed: Complex64 = case
        .sweep
        .iter()
        .filter(|br| br.up == case.root)
        .map(|br| branch_i[br.line])
        .sum();
    let s_grid = v[case.root] * feed.conj();

    let i_base = base.i_base();
    let mut pf = PowerFlowResult {
        v_mag: v.iter().map(|x| x.norm()).collect(),
        v_ang: v.iter().map(|x| x.arg()).collect(),
        i_line: branch_i.iter().map(|i| i.norm() * i_base).collect(),
        p_loss: s_loss.re * kva,
        q_loss: s_loss.im * kva,
        p_grid: s_grid.re * kva,
        q_grid: s_grid.im * kva,
        p_rev: 0.0,
        mismatch_kw: 0.0,
        iterations,
    };
    pf.mismatch_kw = (pf.p_grid - (demand.total_p() + pf.p_loss)).abs();
    pf.p_rev = reverse_power(&pf);
    Ok(pf)
}

fn backward_sweep(
    case: &CaseData,
    s_load: &[Complex64],
    v: &[Complex64],
    node_i: &mut [Complex64],
    branch_i: &mut [Complex64],
) {
    for (k, (s, vk)) in s_load.iter().zip(v).enumerate() {
        node_i[k] = (s / vk).conj();
    }
    for br in case.sweep.iter().rev() {
        branch_i[br.line] = node_i[br.down];
        node_i[br.up] += node_i[br.down];
    }
}

/// Active power flowing back through the substation (kW), zero while the
/// feeder imports.
pub fn reverse_power(pf: &PowerFlowResult) -> f64 {
    if pf.p_grid >= -BALANCE_TOL_KW {
        0.0
    } else {
        -pf.p_grid
    }
}
