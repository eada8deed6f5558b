use std::f64::consts::LN_2;

use toml::{Table, Value};

use monitor_lab::circuit::{ancilla_probe_curve, entanglement_growth_curve, purity_growth_estimator, CircuitSpec};
use monitor_lab::haar::RandomStream;
use monitor_lab::learn::{accuracy_curve, DepthRule};
use monitor_lab::mincut::{estimate_pc, mean_cut_curve, CutBottom};
use monitor_lab::qstate::{Region, RenyiIndex};
use monitor_lab::statmech::{closed_form_purity, log_ratio, BoundaryConfig, LatticeModel};

use crate::config::{AncillaProbe, EntanglementGrowth, Learnability, MincutPercolation, Params, PurityGrowth, StatmechCheck};
use crate::output::{Cell, CsvTable};
use crate::CliError;

/// Largest state vector any experiment may allocate.
pub const MAX_AMPLITUDES: usize = 1 << 24;

pub const RATE_NOTE: &str = "p is the probability of measuring each site after each gate layer";

#[derive(Debug, Default)]
pub struct RunOutput {
    /// `(file suffix, table)`; the empty suffix is the main CSV.
    pub tables: Vec<(String, CsvTable)>,
    pub results: Table,
    pub violations: Vec<String>,
}

impl RunOutput {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_state_size(local_dim: usize, sites: usize) -> Result<(), CliError> {
    let amps = (local_dim as f64).powi(sites as i32);
    if amps > MAX_AMPLITUDES as f64 {
        return Err(CliError::Cap(format!("{sites} sites of dimension {local_dim} need {amps:e} amplitudes, cap is {MAX_AMPLITUDES}")));
    }
    Ok(())
}

fn check_rates(rates: &[f64]) -> Result<(), CliError> {
    if rates.is_empty() {
        return Err(invalid("key `rates`: grid is empty"));
    }
    match rates.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(invalid(format!("key `rates`: {p} outside [0, 1]"))),
        None => Ok(()),
    }
}

pub fn run(params: &Params, root: RandomStream) -> Result<RunOutput, CliError> {
    match params {
        Params::PurityGrowth(p) => purity_growth(p, root),
        Params::EntanglementGrowth(p) => entanglement_growth(p, root),
        Params::StatmechCheck(p) => statmech_check(p),
        Params::MincutPercolation(p) => mincut_percolation(p, root),
        Params::Learnability(p) => learnability(p, root),
        Params::AncillaProbe(p) => ancilla_probe(p, root),
    }
}

fn purity_growth(p: &PurityGrowth, root: RandomStream) -> Result<RunOutput, CliError> {
    let cut = p.cut.unwrap_or(p.sites / 2);
    if cut == 0 || cut >= p.sites {
        return Err(invalid(format!("key `cut`: {cut} must lie strictly inside 0..{}", p.sites)));
    }
    check_state_size(p.local_dim, p.sites.min(4 * p.t_max + 2))?;
    let rows = purity_growth_estimator(p.sites, p.local_dim, p.t_max, p.samples, cut, root.child(0))?;
    let mut out = RunOutput::default();
    let floor = (p.local_dim as f64).powi(-(cut.min(p.sites - cut) as i32));
    let mut table = CsvTable::new(&["t", "samples", "mean_purity", "stderr", "closed_form"]);
    for row in &rows {
        let e = row.estimate;
        out.check(e.mean >= floor - 1e-12 && e.mean <= 1.0 + 1e-12, || format!("mean purity {} at t={} outside [{floor}, 1]", e.mean, row.t));
        table.push(vec![
            Cell::Int(row.t as u64),
            Cell::Int(e.count as u64),
            Cell::Float(e.mean),
            Cell::Float(e.stderr),
            Cell::Float(closed_form_purity(p.local_dim as u64, row.t)),
        ]);
    }
    out.check(rows[0].estimate.mean == 1.0, || "purity at t=0 is not 1".into());
    out.tables.push((String::new(), table));
    Ok(out)
}

fn entanglement_growth(p: &EntanglementGrowth, root: RandomStream) -> Result<RunOutput, CliError> {
    check_rates(&p.rates)?;
    let end = p.region_end.unwrap_or(p.sites / 2);
    if p.region_start >= end || end > p.sites {
        return Err(invalid(format!("keys `region_start`, `region_end`: [{}, {end}) is not a region of {} sites", p.region_start, p.sites)));
    }
    let index = match p.renyi {
        0 => return Err(invalid("key `renyi`: index must be at least 1")),
        1 => RenyiIndex::VonNeumann,
        n => RenyiIndex::Order(n),
    };
    check_state_size(p.local_dim, p.sites)?;
    let region = Region::interval(p.region_start, end);
    let max_entropy = (end - p.region_start).min(p.sites - end + p.region_start) as f64 * (p.local_dim as f64).ln();
    let mut out = RunOutput::default();
    let mut table = CsvTable::new(&["p", "t", "samples", "mean_entropy", "stderr"]);
    for (j, &rate) in p.rates.iter().enumerate() {
        let s = root.child(j as u64);
        let spec = CircuitSpec::new(p.sites, p.local_dim, p.depth, rate, s.child(0), s.child(1))?;
        for row in entanglement_growth_curve(&spec, &region, index, p.samples, s.child(2))? {
            let e = row.estimate;
            out.check(e.mean >= -1e-12 && e.mean <= max_entropy + 1e-9, || format!("entropy {} at p={rate}, t={} outside [0, {max_entropy}]", e.mean, row.t));
            table.push(vec![Cell::Float(rate), Cell::Int(row.t as u64), Cell::Int(e.count as u64), Cell::Float(e.mean), Cell::Float(e.stderr)]);
        }
    }
    out.tables.push((String::new(), table));
    out.results.insert("measurement_rate".into(), Value::String(RATE_NOTE.into()));
    Ok(out)
}

fn statmech_check(p: &StatmechCheck) -> Result<RunOutput, CliError> {
    if !(0.0..=1.0).contains(&p.p) {
        return Err(invalid(format!("key `p`: {} outside [0, 1]", p.p)));
    }
    if p.replicas < 2 {
        return Err(invalid("key `replicas`: need at least 2"));
    }
    let exact = p.replicas == 2 && p.p == 0.0;
    let mut out = RunOutput::default();
    let mut table = CsvTable::new(&["t", "width", "contracted", "closed_form", "abs_diff"]);
    for t in 1..=p.t_max {
        let width = 4 * t;
        let model = LatticeModel::circuit(p.replicas, p.local_dim, width, t, p.p);
        let boundary = BoundaryConfig::new(Region::interval(0, width / 2), p.replicas, 1, false)?;
        let z = log_ratio(&model, &boundary)?.exp();
        let closed = if exact { closed_form_purity(p.local_dim, t) } else { f64::NAN };
        let diff = (z - closed).abs();
        if exact {
            out.check(diff < 1e-10, || format!("t={t}: contraction {z} differs from closed form {closed} by {diff:e}"));
        }
        table.push(vec![Cell::Int(t as u64), Cell::Int(width as u64), Cell::Float(z), Cell::Float(closed), Cell::Float(diff)]);
    }
    out.tables.push((String::new(), table));
    Ok(out)
}

fn mincut_percolation(p: &MincutPercolation, root: RandomStream) -> Result<RunOutput, CliError> {
    check_rates(&p.rates)?;
    check_rates(&p.wall_rates)?;
    let pc = estimate_pc(&p.sizes, &p.rates, p.samples, root.child(0))?;
    let mut out = RunOutput::default();
    let mut scan = CsvTable::new(&["sites", "p", "samples", "mean_cut", "stderr", "zero_fraction"]);
    for pt in &pc.points {
        out.check((0.0..=1.0).contains(&pt.zero_fraction) && pt.mean_cut.mean >= 0.0, || format!("bad scan point at L={}, p={}", pt.sites, pt.p));
        scan.push(vec![
            Cell::Int(pt.sites as u64),
            Cell::Float(pt.p),
            Cell::Int(pt.samples as u64),
            Cell::Float(pt.mean_cut.mean),
            Cell::Float(pt.mean_cut.stderr),
            Cell::Float(pt.zero_fraction),
        ]);
    }
    let mut walls = CsvTable::new(&["p", "region_size", "samples", "mean_cut", "stderr"]);
    for (j, &rate) in p.wall_rates.iter().enumerate() {
        for (size, e) in mean_cut_curve(p.wall_sites, p.wall_depth, rate, &p.wall_sizes, CutBottom::Free, p.wall_samples, root.child(1).child(j as u64))? {
            walls.push(vec![Cell::Float(rate), Cell::Int(size as u64), Cell::Int(e.count as u64), Cell::Float(e.mean), Cell::Float(e.stderr)]);
        }
    }
    out.tables.push((String::new(), scan));
    out.tables.push(("walls".into(), walls));
    out.results.insert("p_c".into(), Value::Float(pc.p_c));
    out.results.insert("p_c_ci_low".into(), Value::Float(pc.ci_low));
    out.results.insert("p_c_ci_high".into(), Value::Float(pc.ci_high));
    out.results.insert("pair_crossings".into(), Value::Array(pc.pair_crossings.iter().map(|&x| Value::Float(x)).collect()));
    out.results.insert("measurement_rate".into(), Value::String(RATE_NOTE.into()));
    Ok(out)
}

fn learnability(p: &Learnability, root: RandomStream) -> Result<RunOutput, CliError> {
    check_rates(&p.rates)?;
    check_state_size(p.local_dim, p.sizes.iter().copied().max().unwrap_or(0))?;
    let rows = accuracy_curve(&p.sizes, &p.rates, DepthRule::TimesSites(p.depth_factor), p.local_dim, p.pair.into(), p.games, root.child(0))?;
    let mut out = RunOutput::default();
    let mut table = CsvTable::new(&["sites", "p", "depth", "games", "accuracy", "accuracy_stderr", "credence", "credence_stderr", "dead_branches"]);
    for r in &rows {
        let (a, c) = (r.stats.accuracy, r.stats.credence);
        out.check((0.0..=1.0).contains(&a.mean) && (0.0..=1.0).contains(&c.mean), || format!("accuracy/credence out of range at L={}, p={}", r.sites, r.p));
        table.push(vec![
            Cell::Int(r.sites as u64),
            Cell::Float(r.p),
            Cell::Int(r.depth as u64),
            Cell::Int(a.count as u64),
            Cell::Float(a.mean),
            Cell::Float(a.stderr),
            Cell::Float(c.mean),
            Cell::Float(c.stderr),
            Cell::Int(r.stats.dead_branches as u64),
        ]);
    }
    out.tables.push((String::new(), table));
    out.results.insert("measurement_rate".into(), Value::String(RATE_NOTE.into()));
    Ok(out)
}

fn ancilla_probe(p: &AncillaProbe, root: RandomStream) -> Result<RunOutput, CliError> {
    check_rates(&p.rates)?;
    check_state_size(p.local_dim, p.sizes.iter().copied().max().unwrap_or(0) + 1)?;
    let mut out = RunOutput::default();
    let mut table = CsvTable::new(&["sites", "p", "t", "samples", "mean_entropy", "stderr"]);
    for (i, &sites) in p.sizes.iter().enumerate() {
        for (j, &rate) in p.rates.iter().enumerate() {
            let s = root.child((i * p.rates.len() + j) as u64);
            let spec = CircuitSpec::new(sites, p.local_dim, p.depth_factor * sites, rate, s.child(0), s.child(1))?;
            let curve = ancilla_probe_curve(&spec, p.pair.into(), p.samples, s.child(2))?;
            out.check((curve[0].estimate.mean - LN_2).abs() < 1e-12, || format!("S_R(0) = {} at L={sites}, p={rate}", curve[0].estimate.mean));
            for row in &curve {
                let e = row.estimate;
                out.check(e.mean >= -1e-12 && e.mean <= LN_2 + 1e-9, || format!("S_R = {} outside [0, ln 2] at L={sites}, p={rate}", e.mean));
                table.push(vec![
                    Cell::Int(sites as u64),
                    Cell::Float(rate),
                    Cell::Int(row.t as u64),
                    Cell::Int(e.count as u64),
                    Cell::Float(e.mean),
                    Cell::Float(e.stderr),
                ]);
            }
        }
    }
    out.tables.push((String::new(), table));
    out.results.insert("measurement_rate".into(), Value::String(RATE_NOTE.into()));
    Ok(out)
}
