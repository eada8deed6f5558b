//! Brickwork monitored circuits on an open chain.
//!
//! One time step is an even layer of two-site gates on `(0,1), (2,3), ...`
//! followed by an odd layer on `(1,2), (3,4), ...`. After every layer each
//! site is measured in the computational basis with probability `p`; the
//! positions come from the spec's measurement stream, the outcomes from the
//! caller's generator.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::haar::{sample_haar_state, sample_haar_unitary, sample_orthogonal_pair, RandomStream};
use crate::qstate::{Branch, QuditState, Region, RenyiIndex, StateError};
use crate::stats::MeanEstimate;
use crate::C64;

/// Largest number of measurements [`enumerate_branches`] will expand.
pub const MAX_ENUMERATED_MEASUREMENTS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("invalid circuit spec: {0}")]
    InvalidSpec(String),
    #[error("initial state ({sites} sites, d = {dim}) incompatible with the circuit ({need} sites from offset {offset}, d = {want})")]
    Incompatible { sites: usize, dim: usize, need: usize, offset: usize, want: usize },
    #[error("{count} measurements exceed the enumeration cap of {cap}")]
    TooManyMeasurements { count: usize, cap: usize },
    #[error("measurement layout is {got_layers}x{got_sites}, expected {layers}x{sites}")]
    LayoutShape { layers: usize, sites: usize, got_layers: usize, got_sites: usize },
    #[error(transparent)]
    State(#[from] StateError),
}

pub type CircuitResult<T> = Result<T, CircuitError>;

/// Complete description of one monitored brickwork circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitSpec {
    pub sites: usize,
    pub local_dim: usize,
    /// Number of time steps (two layers each).
    pub depth: usize,
    /// Per-site, per-layer measurement probability.
    pub p: f64,
    pub gate_stream: RandomStream,
    pub meas_stream: RandomStream,
}

impl CircuitSpec {
    pub fn new(
        sites: usize,
        local_dim: usize,
        depth: usize,
        p: f64,
        gate_stream: RandomStream,
        meas_stream: RandomStream,
    ) -> CircuitResult<Self> {
        let spec = Self { sites, local_dim, depth, p, gate_stream, meas_stream };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CircuitResult<()> {
        if self.sites == 0 {
            return Err(CircuitError::InvalidSpec("need at least one site".into()));
        }
        if self.local_dim < 2 {
            return Err(CircuitError::InvalidSpec(format!("local dimension {} < 2", self.local_dim)));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(CircuitError::InvalidSpec(format!("measurement rate {} outside [0, 1]", self.p)));
        }
        Ok(())
    }

    pub fn layers(&self) -> usize {
        2 * self.depth
    }

    /// Same geometry with both streams replaced by their `index`-th child,
    /// i.e. an independent circuit realization.
    pub fn child(&self, index: u64) -> Self {
        Self { gate_stream: self.gate_stream.child(index), meas_stream: self.meas_stream.child(index), ..*self }
    }
}

/// Left sites of the gates in `layer`.
pub fn gate_left_sites(layer: usize, sites: usize) -> impl Iterator<Item = usize> {
    (layer % 2..sites.saturating_sub(1)).step_by(2)
}

/// The Haar gate at `(layer, left)`; each position has its own stream so any
/// subset of the circuit can be rebuilt independently.
pub fn gate_unitary(gate_stream: &RandomStream, sites: usize, local_dim: usize, layer: usize, left: usize) -> DMatrix<C64> {
    let mut rng = gate_stream.child((layer * sites + left) as u64).rng();
    sample_haar_unitary(local_dim * local_dim, &mut rng)
}

/// Which `(layer, site)` slots carry a measurement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementLayout {
    layers: usize,
    sites: usize,
    flags: Vec<bool>,
}

impl MeasurementLayout {
    pub fn empty(layers: usize, sites: usize) -> Self {
        Self { layers, sites, flags: vec![false; layers * sites] }
    }

    pub fn full(layers: usize, sites: usize) -> Self {
        Self { layers, sites, flags: vec![true; layers * sites] }
    }

    /// Bernoulli(p) draws from the spec's measurement stream, layer by layer.
    pub fn sample(spec: &CircuitSpec) -> Self {
        let mut rng = spec.meas_stream.rng();
        let mut layout = Self::empty(spec.layers(), spec.sites);
        for flag in layout.flags.iter_mut() {
            *flag = rng.random::<f64>() < spec.p;
        }
        layout
    }

    pub fn from_positions(layers: usize, sites: usize, positions: &[(usize, usize)]) -> CircuitResult<Self> {
        let mut layout = Self::empty(layers, sites);
        for &(layer, site) in positions {
            if layer >= layers || site >= sites {
                return Err(CircuitError::InvalidSpec(format!("measurement position ({layer}, {site}) out of range")));
            }
            layout.set(layer, site, true);
        }
        Ok(layout)
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn is_measured(&self, layer: usize, site: usize) -> bool {
        self.flags[layer * self.sites + site]
    }

    pub fn set(&mut self, layer: usize, site: usize, measured: bool) {
        self.flags[layer * self.sites + site] = measured;
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Positions in execution order.
    pub fn positions(&self) -> Vec<(usize, usize)> {
        (0..self.layers)
            .flat_map(|l| (0..self.sites).map(move |s| (l, s)))
            .filter(|&(l, s)| self.is_measured(l, s))
            .collect()
    }

    /// The first `layers` layers of this layout.
    pub fn truncated(&self, layers: usize) -> Self {
        let layers = layers.min(self.layers);
        Self { layers, sites: self.sites, flags: self.flags[..layers * self.sites].to_vec() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasurementEvent {
    pub layer: usize,
    pub site: usize,
    pub outcome: usize,
}

/// Outcomes of one trajectory, in execution order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub events: Vec<MeasurementEvent>,
}

impl MeasurementRecord {
    pub fn positions(&self) -> Vec<(usize, usize)> {
        self.events.iter().map(|e| (e.layer, e.site)).collect()
    }

    pub fn outcomes(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.outcome).collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub final_state: QuditState,
    pub record: MeasurementRecord,
    /// Sum of the log Born probabilities of the recorded outcomes.
    pub log_born: f64,
}

/// Gates and measurement positions of one circuit, outcome-free.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitRealization {
    spec: CircuitSpec,
    gates: Vec<Vec<(usize, DMatrix<C64>)>>,
    layout: MeasurementLayout,
}

impl CircuitRealization {
    pub fn sample(spec: &CircuitSpec) -> CircuitResult<Self> {
        Self::with_layout(spec, MeasurementLayout::sample(spec))
    }

    /// Gates from the spec, measurement positions frozen to `layout`.
    pub fn with_layout(spec: &CircuitSpec, layout: MeasurementLayout) -> CircuitResult<Self> {
        spec.validate()?;
        if layout.layers() != spec.layers() || layout.sites() != spec.sites {
            return Err(CircuitError::LayoutShape {
                layers: spec.layers(),
                sites: spec.sites,
                got_layers: layout.layers(),
                got_sites: layout.sites(),
            });
        }
        let gates = (0..spec.layers())
            .map(|layer| {
                gate_left_sites(layer, spec.sites)
                    .map(|left| (left, gate_unitary(&spec.gate_stream, spec.sites, spec.local_dim, layer, left)))
                    .collect()
            })
            .collect();
        Ok(Self { spec: *spec, gates, layout })
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn layout(&self) -> &MeasurementLayout {
        &self.layout
    }

    pub fn gates(&self, layer: usize) -> &[(usize, DMatrix<C64>)] {
        &self.gates[layer]
    }

    fn check_state(&self, state: &QuditState, offset: usize) -> CircuitResult<()> {
        if state.local_dim() != self.spec.local_dim || state.num_sites() < offset + self.spec.sites {
            return Err(CircuitError::Incompatible {
                sites: state.num_sites(),
                dim: state.local_dim(),
                need: self.spec.sites,
                offset,
                want: self.spec.local_dim,
            });
        }
        Ok(())
    }

    fn apply_layer(&self, state: &mut QuditState, layer: usize, offset: usize) {
        for (left, gate) in &self.gates[layer] {
            state.apply_two_site_unchecked(gate, left + offset);
        }
    }
}

/// Samples a realization from `spec` and runs one Born trajectory.
pub fn run_trajectory<R: Rng + ?Sized>(spec: &CircuitSpec, initial: &QuditState, rng: &mut R) -> CircuitResult<TrajectoryResult> {
    let realization = CircuitRealization::sample(spec)?;
    run_realization(&realization, initial, 0, rng, |_, _| {})
}

/// Runs a Born trajectory of `realization` on the sites
/// `offset..offset + sites` of `initial`. `observe` sees the state at `t = 0`
/// and after every full time step.
pub fn run_realization<R, F>(
    realization: &CircuitRealization,
    initial: &QuditState,
    offset: usize,
    rng: &mut R,
    mut observe: F,
) -> CircuitResult<TrajectoryResult>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &QuditState),
{
    realization.check_state(initial, offset)?;
    let mut state = initial.clone();
    let mut record = MeasurementRecord::default();
    observe(0, &state);
    for layer in 0..realization.spec.layers() {
        realization.apply_layer(&mut state, layer, offset);
        for site in 0..realization.spec.sites {
            if realization.layout.is_measured(layer, site) {
                let outcome = state.measure_site(site + offset, rng)?;
                record.events.push(MeasurementEvent { layer, site, outcome });
            }
        }
        if layer % 2 == 1 {
            observe(layer / 2 + 1, &state);
        }
    }
    let log_born = state.log_weight() - initial.log_weight();
    Ok(TrajectoryResult { final_state: state, record, log_born })
}

/// Replays `realization` on `initial` with the outcomes of `record` imposed.
/// Returns `None` if some outcome has vanishing Born probability.
pub fn replay_outcomes(
    realization: &CircuitRealization,
    initial: &QuditState,
    offset: usize,
    record: &MeasurementRecord,
) -> CircuitResult<Option<QuditState>> {
    realization.check_state(initial, offset)?;
    let mut state = initial.clone();
    let mut events = record.events.iter().peekable();
    for layer in 0..realization.spec.layers() {
        realization.apply_layer(&mut state, layer, offset);
        while let Some(e) = events.next_if(|e| e.layer == layer) {
            if state.measure_site_forced(e.site + offset, e.outcome)?.is_dead() {
                return Ok(None);
            }
        }
    }
    Ok(Some(state))
}

/// One measurement branch of a frozen circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchOutcome {
    pub record: MeasurementRecord,
    pub born_prob: f64,
    pub final_state: QuditState,
}

/// Every outcome string of the frozen circuit with its Born probability.
/// Strings with vanishing probability are omitted.
pub fn enumerate_branches(realization: &CircuitRealization, initial: &QuditState) -> CircuitResult<Vec<BranchOutcome>> {
    realization.check_state(initial, 0)?;
    let count = realization.layout.count();
    if count > MAX_ENUMERATED_MEASUREMENTS {
        return Err(CircuitError::TooManyMeasurements { count, cap: MAX_ENUMERATED_MEASUREMENTS });
    }
    let positions = realization.layout.positions();
    let mut out = Vec::new();
    let mut events = Vec::with_capacity(count);
    let mut state = initial.clone();
    if realization.spec.layers() > 0 {
        realization.apply_layer(&mut state, 0, 0);
    }
    expand(realization, &positions, 0, 0, state, initial.log_weight(), &mut events, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn expand(
    realization: &CircuitRealization,
    positions: &[(usize, usize)],
    layer: usize,
    next: usize,
    state: QuditState,
    log_weight0: f64,
    events: &mut Vec<MeasurementEvent>,
    out: &mut Vec<BranchOutcome>,
) -> CircuitResult<()> {
    let layers = realization.spec.layers();
    if layer >= layers {
        out.push(BranchOutcome {
            record: MeasurementRecord { events: events.clone() },
            born_prob: (state.log_weight() - log_weight0).exp(),
            final_state: state,
        });
        return Ok(());
    }
    match positions.get(next) {
        Some(&(l, site)) if l == layer => {
            for outcome in 0..realization.spec.local_dim {
                let mut branch = state.clone();
                if let Branch::Alive { .. } = branch.measure_site_forced(site, outcome)? {
                    events.push(MeasurementEvent { layer, site, outcome });
                    expand(realization, positions, layer, next + 1, branch, log_weight0, events, out)?;
                    events.pop();
                }
            }
            Ok(())
        }
        _ => {
            let mut state = state;
            if layer + 1 < layers {
                realization.apply_layer(&mut state, layer + 1, 0);
            }
            expand(realization, positions, layer + 1, next, state, log_weight0, events, out)
        }
    }
}

/// Gates in the past causal cone of the bond `(cut - 1, cut)` after
/// `layers` layers, bottom layer first, with the inclusive site range they
/// touch. Gates outside the cone act on one side of the cut only once
/// commuted to the end, so they cannot change the entanglement across it.
pub fn causal_cone(sites: usize, layers: usize, cut: usize) -> (Vec<(usize, usize)>, Option<(usize, usize)>) {
    let mut gates = Vec::new();
    let mut active: Option<(usize, usize)> = None;
    for layer in (0..layers).rev() {
        let mut grown = active;
        for left in gate_left_sites(layer, sites) {
            let straddles = left + 1 == cut;
            let touches = active.is_some_and(|(lo, hi)| left + 1 >= lo && left <= hi);
            if straddles || touches {
                gates.push((layer, left));
                grown = Some(match grown {
                    None => (left, left + 1),
                    Some((lo, hi)) => (lo.min(left), hi.max(left + 1)),
                });
            }
        }
        active = grown;
    }
    gates.reverse();
    (gates, active)
}

/// Purity across `cut` after `t` steps of the unmeasured circuit drawn from
/// `gate_stream`, simulated on the causal cone only.
pub fn cone_purity(gate_stream: &RandomStream, sites: usize, local_dim: usize, t: usize, cut: usize) -> CircuitResult<f64> {
    let (gates, window) = causal_cone(sites, 2 * t, cut);
    let Some((lo, hi)) = window else {
        return Ok(1.0);
    };
    let mut state = QuditState::zeros(hi - lo + 1, local_dim)?;
    for (layer, left) in gates {
        let u = gate_unitary(gate_stream, sites, local_dim, layer, left);
        state.apply_two_site_unchecked(&u, left - lo);
    }
    Ok(state.purity(&Region::interval(0, cut - lo))?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimePoint {
    pub t: usize,
    pub estimate: MeanEstimate,
}

/// Haar average of `tr rho_A^2(t)` for `A = {0..cut-1}` at `p = 0`, for
/// `t = 0..=t_max`, with jackknife errors. Sample `s` uses the gate stream
/// `stream.child(s)`; the `t = 0` row is the exact value 1.
pub fn purity_growth_estimator(
    sites: usize,
    local_dim: usize,
    t_max: usize,
    num_samples: usize,
    cut: usize,
    stream: RandomStream,
) -> CircuitResult<Vec<TimePoint>> {
    if cut == 0 || cut >= sites {
        return Err(CircuitError::InvalidSpec(format!("cut {cut} must lie strictly inside a chain of {sites} sites")));
    }
    if local_dim < 2 {
        return Err(CircuitError::InvalidSpec(format!("local dimension {local_dim} < 2")));
    }
    let per_sample: Vec<Vec<f64>> = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| {
            let gates = stream.child(s);
            (1..=t_max).map(|t| cone_purity(&gates, sites, local_dim, t, cut)).collect::<CircuitResult<Vec<f64>>>()
        })
        .collect::<CircuitResult<_>>()?;
    let mut out = vec![TimePoint { t: 0, estimate: MeanEstimate { count: num_samples, mean: 1.0, stderr: 0.0 } }];
    for t in 1..=t_max {
        let column: Vec<f64> = per_sample.iter().map(|row| row[t - 1]).collect();
        out.push(TimePoint { t, estimate: MeanEstimate::from_samples(&column) });
    }
    Ok(out)
}

/// Mean trajectory Rényi entropy of `region` at `t = 0..=depth`. Sample `s`
/// runs the realization `spec.child(s)` with outcomes from `stream.child(s)`.
pub fn entanglement_growth_curve(
    spec: &CircuitSpec,
    region: &Region,
    index: RenyiIndex,
    num_samples: usize,
    stream: RandomStream,
) -> CircuitResult<Vec<TimePoint>> {
    spec.validate()?;
    let per_sample: Vec<Vec<f64>> = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| {
            let realization = CircuitRealization::sample(&spec.child(s))?;
            let initial = QuditState::zeros(spec.sites, spec.local_dim)?;
            let mut rng = stream.child(s).rng();
            let mut curve = Vec::with_capacity(spec.depth + 1);
            let mut failure = None;
            run_realization(&realization, &initial, 0, &mut rng, |_, state| match state.renyi_entropy(region, index) {
                Ok(s) => curve.push(s),
                Err(e) => failure = Some(e),
            })?;
            match failure {
                Some(e) => Err(e.into()),
                None => Ok(curve),
            }
        })
        .collect::<CircuitResult<_>>()?;
    Ok(reduce_columns(&per_sample, spec.depth))
}

fn reduce_columns(rows: &[Vec<f64>], depth: usize) -> Vec<TimePoint> {
    (0..=depth)
        .map(|t| {
            let column: Vec<f64> = rows.iter().map(|r| r[t]).collect();
            TimePoint { t, estimate: MeanEstimate::from_samples(&column) }
        })
        .collect()
}

/// The two orthogonal hypotheses / purification branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialPair {
    /// Two Haar-random states conditioned to be orthogonal.
    HaarOrthogonal,
    /// `|0...0>` and `|1...1>`.
    ProductOrthogonal,
}

impl InitialPair {
    pub fn sample<R: Rng + ?Sized>(&self, sites: usize, local_dim: usize, rng: &mut R) -> (Vec<C64>, Vec<C64>) {
        let dim = local_dim.pow(sites as u32);
        match self {
            InitialPair::HaarOrthogonal => sample_orthogonal_pair(dim, rng),
            InitialPair::ProductOrthogonal => {
                let ones = (0..sites).fold(0usize, |acc, _| acc * local_dim + 1);
                let mut a = vec![C64::new(0.0, 0.0); dim];
                let mut b = a.clone();
                a[0] = C64::new(1.0, 0.0);
                b[ones] = C64::new(1.0, 0.0);
                (a, b)
            }
        }
    }
}

/// Reference entropy `S_R(t)`, `t = 0..=depth`, for the state
/// `(|0>|phi> + |1>|psi>)/sqrt(2)`. The reference is site 0 of the register
/// (only its levels 0 and 1 are used) and is never touched by gates or
/// measurements; the system occupies sites `1..=L`.
pub fn ancilla_probe_run<R: Rng + ?Sized>(spec: &CircuitSpec, pair: InitialPair, rng: &mut R) -> CircuitResult<Vec<f64>> {
    spec.validate()?;
    let realization = CircuitRealization::sample(spec)?;
    let (phi, psi) = pair.sample(spec.sites, spec.local_dim, rng);
    let block = phi.len();
    let mut amps = vec![C64::new(0.0, 0.0); block * spec.local_dim];
    amps[..block].copy_from_slice(&phi);
    amps[block..2 * block].copy_from_slice(&psi);
    let initial = QuditState::from_amplitudes(spec.sites + 1, spec.local_dim, amps)?;
    let reference = Region::new(vec![0]);
    let mut series = Vec::with_capacity(spec.depth + 1);
    let mut failure = None;
    run_realization(&realization, &initial, 1, rng, |_, state| {
        match state.renyi_entropy(&reference, RenyiIndex::VonNeumann) {
            Ok(s) => series.push(s),
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(series),
    }
}

/// Mean `S_R(t)` over `num_samples` realizations `spec.child(s)`, probe
/// randomness from `stream.child(s)`.
pub fn ancilla_probe_curve(
    spec: &CircuitSpec,
    pair: InitialPair,
    num_samples: usize,
    stream: RandomStream,
) -> CircuitResult<Vec<TimePoint>> {
    let rows: Vec<Vec<f64>> = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| ancilla_probe_run(&spec.child(s), pair, &mut stream.child(s).rng()))
        .collect::<CircuitResult<_>>()?;
    Ok(reduce_columns(&rows, spec.depth))
}

/// Haar-random state of the whole chain.
pub fn haar_chain_state<R: Rng + ?Sized>(sites: usize, local_dim: usize, rng: &mut R) -> CircuitResult<QuditState> {
    let amps = sample_haar_state(local_dim.pow(sites as u32), rng);
    Ok(QuditState::from_amplitudes(sites, local_dim, amps)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(sites: usize, depth: usize, p: f64, seed: u64) -> CircuitSpec {
        CircuitSpec::new(sites, 2, depth, p, RandomStream::new(seed, 1), RandomStream::new(seed, 2)).unwrap()
    }

    #[test]
    fn brickwork_pairs() {
        assert_eq!(gate_left_sites(0, 5).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(gate_left_sites(1, 5).collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(gate_left_sites(1, 4).collect::<Vec<_>>(), vec![1]);
        assert_eq!(gate_left_sites(0, 1).count(), 0);
    }

    #[test]
    fn spec_validation() {
        let s = RandomStream::new(0, 0);
        assert!(CircuitSpec::new(4, 2, 1, 1.5, s, s).is_err());
        assert!(CircuitSpec::new(0, 2, 1, 0.5, s, s).is_err());
        assert!(CircuitSpec::new(4, 1, 1, 0.5, s, s).is_err());
    }

    #[test]
    fn unitary_evolution_without_measurements() {
        let spec = spec(4, 3, 0.0, 1);
        let init = QuditState::zeros(4, 2).unwrap();
        let r = run_trajectory(&spec, &init, &mut RandomStream::new(9, 9).rng()).unwrap();
        assert!(r.record.is_empty());
        assert_eq!(r.log_born, 0.0);
        assert!((r.final_state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_measurement_records_every_slot() {
        let spec = spec(4, 1, 1.0, 2);
        let init = QuditState::product(4, 2, &[1, 0, 1, 1]).unwrap();
        let r = run_trajectory(&spec, &init, &mut RandomStream::new(3, 3).rng()).unwrap();
        assert_eq!(r.record.len(), 8);
        assert_eq!(r.record.positions(), (0..2).flat_map(|l| (0..4).map(move |s| (l, s))).collect::<Vec<_>>());
        assert!((r.log_born - r.final_state.log_weight()).abs() < 1e-15);
        assert!(r.log_born <= 0.0);
    }

    #[test]
    fn trajectories_are_deterministic() {
        let spec = spec(5, 3, 0.4, 3);
        let init = QuditState::zeros(5, 2).unwrap();
        let a = run_trajectory(&spec, &init, &mut RandomStream::new(4, 0).rng()).unwrap();
        let b = run_trajectory(&spec, &init, &mut RandomStream::new(4, 0).rng()).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&spec, &init, &mut RandomStream::new(4, 1).rng()).unwrap();
        assert_eq!(a.record.positions(), c.record.positions());
    }

    #[test]
    fn replay_reproduces_trajectory() {
        let spec = spec(4, 2, 0.5, 5);
        let realization = CircuitRealization::sample(&spec).unwrap();
        let init = QuditState::zeros(4, 2).unwrap();
        let r = run_realization(&realization, &init, 0, &mut RandomStream::new(1, 1).rng(), |_, _| {}).unwrap();
        let replayed = replay_outcomes(&realization, &init, 0, &r.record).unwrap().unwrap();
        assert!((replayed.log_weight() - r.log_born).abs() < 1e-12);
        let overlap: C64 = replayed.amplitudes().iter().zip(r.final_state.amplitudes()).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branches_without_measurements() {
        let spec = spec(3, 2, 0.0, 6);
        let realization = CircuitRealization::sample(&spec).unwrap();
        let branches = enumerate_branches(&realization, &QuditState::zeros(3, 2).unwrap()).unwrap();
        assert_eq!(branches.len(), 1);
        assert!((branches[0].born_prob - 1.0).abs() < 1e-12);
    }

    #[test]
    fn branches_of_single_measurement_on_plus_state() {
        // One site, no gates: the layout still has two layers.
        let spec = spec(1, 1, 0.0, 7);
        let layout = MeasurementLayout::from_positions(2, 1, &[(0, 0)]).unwrap();
        let realization = CircuitRealization::with_layout(&spec, layout).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QuditState::from_amplitudes(1, 2, vec![C64::new(s, 0.0), C64::new(s, 0.0)]).unwrap();
        let branches = enumerate_branches(&realization, &plus).unwrap();
        assert_eq!(branches.len(), 2);
        for b in &branches {
            assert!((b.born_prob - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_probabilities_are_complete() {
        for seed in 0..10 {
            let spec = spec(4, 2, 0.35, 100 + seed);
            let realization = CircuitRealization::sample(&spec).unwrap();
            if realization.layout().count() > MAX_ENUMERATED_MEASUREMENTS {
                continue;
            }
            let branches = enumerate_branches(&realization, &QuditState::zeros(4, 2).unwrap()).unwrap();
            let total: f64 = branches.iter().map(|b| b.born_prob).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn enumeration_cap() {
        let spec = spec(4, 2, 1.0, 8);
        let realization = CircuitRealization::sample(&spec).unwrap();
        assert_eq!(
            enumerate_branches(&realization, &QuditState::zeros(4, 2).unwrap()).unwrap_err(),
            CircuitError::TooManyMeasurements { count: 16, cap: 12 }
        );
    }

    #[test]
    fn cone_purity_matches_full_chain() {
        for (sites, cut) in [(8, 4), (9, 3), (10, 5)] {
            for t in 0..=2 {
                let stream = RandomStream::new(77, sites as u64);
                let spec = CircuitSpec::new(sites, 2, t, 0.0, stream, stream).unwrap();
                let realization = CircuitRealization::sample(&spec).unwrap();
                let init = QuditState::zeros(sites, 2).unwrap();
                let r = run_realization(&realization, &init, 0, &mut RandomStream::new(0, 0).rng(), |_, _| {}).unwrap();
                let full = r.final_state.purity(&Region::interval(0, cut)).unwrap();
                let cone = cone_purity(&stream, sites, 2, t, cut).unwrap();
                assert!((full - cone).abs() < 1e-10, "L={sites} cut={cut} t={t}: {full} vs {cone}");
            }
        }
    }

    #[test]
    fn causal_cone_geometry() {
        // Cut bond (9,10) is straddled by odd layers: the cone widens by one
        // site per layer below the top gate.
        let (gates, window) = causal_cone(20, 8, 10);
        assert_eq!(window, Some((2, 17)));
        assert_eq!(gates.last(), Some(&(7, 9)));
        let (gates, window) = causal_cone(20, 0, 10);
        assert!(gates.is_empty() && window.is_none());
    }

    #[test]
    fn purity_estimator_first_row_is_exact() {
        let rows = purity_growth_estimator(8, 2, 1, 20, 4, RandomStream::new(1, 0)).unwrap();
        assert_eq!(rows[0].estimate.mean, 1.0);
        assert_eq!(rows.len(), 2);
        assert!(rows[1].estimate.mean < 1.0);
    }

    #[test]
    fn ancilla_endpoints() {
        let ln2 = 2f64.ln();
        for pair in [InitialPair::HaarOrthogonal, InitialPair::ProductOrthogonal] {
            let s = ancilla_probe_run(&spec(4, 3, 0.0, 11), pair, &mut RandomStream::new(5, 5).rng()).unwrap();
            assert_eq!(s.len(), 4);
            for x in s {
                assert!((x - ln2).abs() < 1e-10);
            }
            let s = ancilla_probe_run(&spec(4, 1, 1.0, 12), pair, &mut RandomStream::new(6, 6).rng()).unwrap();
            assert!((s[0] - ln2).abs() < 1e-12);
            assert!(s[1].abs() < 1e-10);
        }
    }

    #[test]
    fn fully_measured_chain_has_no_entanglement() {
        let spec = spec(6, 3, 1.0, 13);
        let curve = entanglement_growth_curve(&spec, &Region::interval(0, 3), RenyiIndex::Order(2), 5, RandomStream::new(2, 2)).unwrap();
        for point in &curve[1..] {
            assert!(point.estimate.mean.abs() < 1e-12);
        }
    }
}
