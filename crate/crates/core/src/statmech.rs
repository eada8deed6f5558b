//! Replica statistical mechanics of brickwork circuits.
//!
//! Spins live on the gates of the circuit geometry. For the Haar circuit each
//! gate carries an output spin `k` and an input spin `l` joined by a
//! Weingarten weight; tensor legs between consecutive events on a site carry
//! overlap weights `d^{C(g^{-1} h)}`, or `d` when measured. Integrating out
//! `k` gives the triangle weight `J(x, y; l)` between the two upper spins and
//! the lower one, which is what the transfer engine uses.
//!
//! The engine sweeps the gates from the top boundary down. Its state is a
//! sparse map from a row of spins (one per site, the spin at the top end of
//! the site's open leg) to a weight, rescaled after every gate.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Zero};
use thiserror::Error;

use crate::circuit::{gate_left_sites, MeasurementLayout};
use crate::qstate::Region;
use crate::replica::{rational_to_f64, weingarten_table, Permutation, ReplicaError, SymmetricGroup, WeingartenTable};

/// Largest `(Q!)^width` row space the transfer engine accepts.
pub const STATE_SPACE_CAP: u64 = 1 << 24;
/// Link cap for the exhaustive cluster expansion.
pub const FK_LINK_CAP: usize = 24;
/// Kernels are built in exact rational arithmetic up to this `Q`.
const EXACT_KERNEL_MAX_Q: usize = 4;
const MEASURED: usize = usize::MAX;

type RowMap<K> = HashMap<K, f64, BuildHasherDefault<DefaultHasher>>;

#[derive(Debug, Error, PartialEq)]
pub enum StatMechError {
    #[error("row space of {states:e} configurations exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: f64, cap: u64 },
    #[error("{links} links exceed the exhaustive cap of {cap}")]
    TooManyLinks { links: usize, cap: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("partition function is not positive (sign {sign})")]
    NonPositive { sign: f64 },
    #[error(transparent)]
    Replica(#[from] ReplicaError),
}

pub type StatMechResult<T> = Result<T, StatMechError>;

/// Measurement-averaged link weight `(1-p) d^{C(g^{-1}h)} + p d`.
pub fn link_weight(g: &Permutation, h: &Permutation, d: u64, p: f64) -> f64 {
    let c = g.relative(h).cycle_count() as i32;
    (1.0 - p) * (d as f64).powi(c) + p * d as f64
}

/// Link weight for a frozen measurement layout.
pub fn fixed_config_link_weight(g: &Permutation, h: &Permutation, d: u64, measured: bool) -> f64 {
    if measured {
        d as f64
    } else {
        (d as f64).powi(g.relative(h).cycle_count() as i32)
    }
}

/// `J_p(g_i, g_j; g_k) = sum_l W_p(g_i^{-1} g_l) W_p(g_j^{-1} g_l) Wg(g_l^{-1} g_k)`,
/// exactly, for `p` given as a rational.
pub fn triangle_weight_exact(
    gi: &Permutation,
    gj: &Permutation,
    gk: &Permutation,
    d: u64,
    p: &BigRational,
    weingarten: &WeingartenTable,
) -> BigRational {
    let dd = BigRational::from_integer(d.into());
    let u = BigRational::one() - p;
    let w = |c: usize| u.clone() * num_traits::pow(dd.clone(), c) + p.clone() * dd.clone();
    weingarten
        .group()
        .elements()
        .iter()
        .map(|gl| w(gi.relative(gl).cycle_count()) * w(gj.relative(gl).cycle_count()) * weingarten.exact(&gl.relative(gk)).clone())
        .fold(BigRational::zero(), |acc, x| acc + x)
}

/// [`triangle_weight_exact`] rounded once to `f64`; `p` is taken at its
/// exact binary value, so cancellations (e.g. the unitarity zero) are exact.
pub fn triangle_weight(gi: &Permutation, gj: &Permutation, gk: &Permutation, d: u64, p: f64, weingarten: &WeingartenTable) -> f64 {
    let p = BigRational::from_float(p).expect("finite measurement rate");
    rational_to_f64(&triangle_weight_exact(gi, gj, gk, d, &p, weingarten))
}

/// `d -> infinity` triangle weight, a product of two Potts bonds.
pub fn potts_triangle_weight(gi: &Permutation, gj: &Permutation, gk: &Permutation, p: f64) -> f64 {
    let bond = |a: &Permutation| if a == gk { 1.0 } else { p };
    bond(gi) * bond(gj)
}

/// `(2d / (d^2 + 1))^{2t}`, the Haar-averaged half-chain purity after `t`
/// unmeasured steps.
pub fn closed_form_purity(d: u64, t: usize) -> f64 {
    let d = d as f64;
    (2.0 * d / (d * d + 1.0)).powi(2 * t as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LatticeKind {
    /// Honeycomb model of a Haar brickwork circuit.
    HaarCircuit,
    /// One Gaussian tensor per gate: square-lattice model without
    /// Weingarten links.
    RandomTensor,
    /// `d -> infinity` Potts bonds `(1-p) delta + p`.
    Potts,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasurementField {
    /// Every leg slot measured independently with probability `p`.
    Averaged(f64),
    /// Frozen measurement positions.
    Fixed(MeasurementLayout),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BottomBoundary {
    /// Product initial state: every bottom spin has weight 1.
    Free,
    /// Bottom legs tied to a fixed permutation (maximally mixed input).
    Pinned(Permutation),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeModel {
    pub q: usize,
    pub d: u64,
    pub width: usize,
    /// Time steps; the lattice has `2 * depth` gate rows.
    pub depth: usize,
    pub kind: LatticeKind,
    pub field: MeasurementField,
    pub bottom: BottomBoundary,
}

impl LatticeModel {
    /// Haar circuit model with measurement-averaged links and a free bottom.
    pub fn circuit(q: usize, d: u64, width: usize, depth: usize, p: f64) -> Self {
        Self { q, d, width, depth, kind: LatticeKind::HaarCircuit, field: MeasurementField::Averaged(p), bottom: BottomBoundary::Free }
    }

    pub fn layers(&self) -> usize {
        2 * self.depth
    }

    fn validate(&self) -> StatMechResult<()> {
        if self.width == 0 {
            return Err(StatMechError::InvalidModel("width must be positive".into()));
        }
        if self.d < 2 && self.kind != LatticeKind::Potts {
            return Err(StatMechError::InvalidModel(format!("local dimension {} < 2", self.d)));
        }
        match &self.field {
            MeasurementField::Averaged(p) if !(0.0..=1.0).contains(p) => {
                return Err(StatMechError::InvalidModel(format!("measurement rate {p} outside [0, 1]")));
            }
            MeasurementField::Fixed(layout) if layout.layers() != self.layers() || layout.sites() != self.width => {
                return Err(StatMechError::InvalidModel(format!(
                    "layout is {}x{}, lattice needs {}x{}",
                    layout.layers(),
                    layout.sites(),
                    self.layers(),
                    self.width
                )));
            }
            _ => {}
        }
        if let BottomBoundary::Pinned(g) = &self.bottom {
            if g.q() != self.q {
                return Err(ReplicaError::DegreeMismatch(g.q(), self.q).into());
            }
        }
        let r = factorial(self.q) as f64;
        let states = r.powi(self.width as i32);
        if states > STATE_SPACE_CAP as f64 {
            return Err(StatMechError::StateSpaceTooLarge { states, cap: STATE_SPACE_CAP });
        }
        Ok(())
    }

    /// Leg of `site` whose measurement slots are layers `lower..upper`.
    fn leg_key(&self, site: usize, lower: usize, upper: usize) -> usize {
        match &self.field {
            MeasurementField::Averaged(_) => upper - lower,
            MeasurementField::Fixed(layout) => {
                if (lower..upper).any(|l| layout.is_measured(l, site)) {
                    MEASURED
                } else {
                    0
                }
            }
        }
    }

    fn rate(&self) -> f64 {
        match &self.field {
            MeasurementField::Averaged(p) => *p,
            MeasurementField::Fixed(_) => 0.0,
        }
    }
}

/// Top boundary: `g_SWAP = (1 2 ... n)^{⊗k}` on `region`, identity elsewhere.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConfig {
    pub region: Region,
    pub n: usize,
    pub k: usize,
    /// Extra replica for Born weighting, `Q = nk + 1`.
    pub born_replica: bool,
}

impl BoundaryConfig {
    pub fn new(region: Region, n: usize, k: usize, born_replica: bool) -> StatMechResult<Self> {
        if !region.is_interval() {
            return Err(StatMechError::InvalidModel("boundary region must be contiguous".into()));
        }
        Permutation::cyclic_power(n, k, born_replica)?;
        Ok(Self { region, n, k, born_replica })
    }

    /// Two replicas, `g_SWAP` a transposition: the purity boundary.
    pub fn purity(region: Region) -> StatMechResult<Self> {
        Self::new(region, 2, 1, false)
    }

    pub fn q(&self) -> usize {
        self.n * self.k + usize::from(self.born_replica)
    }

    /// Same replica structure, identity everywhere (the `Z_0` boundary).
    pub fn trivial(&self) -> Self {
        Self { region: Region::new(Vec::new()), ..self.clone() }
    }

    pub fn top_spins(&self, width: usize) -> StatMechResult<Vec<Permutation>> {
        if self.region.sites().iter().any(|&s| s >= width) {
            return Err(StatMechError::InvalidModel(format!("boundary region leaves a lattice of width {width}")));
        }
        let swap = Permutation::cyclic_power(self.n, self.k, self.born_replica)?;
        let e = Permutation::identity(self.q());
        Ok((0..width).map(|s| if self.region.sites().contains(&s) { swap } else { e }).collect())
    }
}

/// `Z = sign * exp(log_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractResult {
    pub log_abs: f64,
    pub sign: f64,
}

impl ContractResult {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

/// Exact partition function of `model` with the top boundary of `boundary`.
pub fn contract(model: &LatticeModel, boundary: &BoundaryConfig) -> StatMechResult<ContractResult> {
    if boundary.q() != model.q {
        return Err(StatMechError::InvalidModel(format!("boundary has Q = {}, model Q = {}", boundary.q(), model.q)));
    }
    contract_with_top(model, &boundary.top_spins(model.width)?)
}

/// `ln(Z_A / Z_0)`; both partition functions must be positive.
pub fn log_ratio(model: &LatticeModel, boundary: &BoundaryConfig) -> StatMechResult<f64> {
    let za = contract(model, boundary)?;
    let z0 = contract(model, &boundary.trivial())?;
    for z in [za, z0] {
        if z.sign <= 0.0 {
            return Err(StatMechError::NonPositive { sign: z.sign });
        }
    }
    Ok(za.log_abs - z0.log_abs)
}

/// `ln(Z_A / Z_0)` of the two-replica random-tensor Ising model on the
/// brickwork geometry, free bottom.
pub fn rtn_ising_log_ratio(d: u64, width: usize, depth: usize, region: &Region) -> StatMechResult<f64> {
    let model = LatticeModel {
        q: 2,
        d,
        width,
        depth,
        kind: LatticeKind::RandomTensor,
        field: MeasurementField::Averaged(0.0),
        bottom: BottomBoundary::Free,
    };
    log_ratio(&model, &BoundaryConfig::purity(region.clone())?)
}

/// Kernel tables `R[a, b]` with `K(x, y; l) = R[x^{-1} y, x^{-1} l]`, cached
/// per pair of leg keys.
struct Kernels<'a> {
    model: &'a LatticeModel,
    group: SymmetricGroup,
    weingarten: Option<WeingartenTable>,
    p_exact: BigRational,
    cache: HashMap<(usize, usize), Vec<f64>>,
}

impl<'a> Kernels<'a> {
    fn new(model: &'a LatticeModel) -> StatMechResult<Self> {
        let group = SymmetricGroup::new(model.q)?;
        let weingarten = match model.kind {
            LatticeKind::HaarCircuit => Some(weingarten_table(model.q, model.d * model.d)?),
            _ => None,
        };
        let p_exact = BigRational::from_float(model.rate()).expect("validated rate");
        Ok(Self { model, group, weingarten, p_exact, cache: HashMap::new() })
    }

    fn exact(&self) -> bool {
        self.model.q <= EXACT_KERNEL_MAX_Q
    }

    fn u_exact(&self, key: usize) -> BigRational {
        if key == MEASURED {
            BigRational::zero()
        } else {
            num_traits::pow(BigRational::one() - &self.p_exact, key)
        }
    }

    fn u_float(&self, key: usize) -> f64 {
        if key == MEASURED {
            0.0
        } else {
            (1.0 - self.model.rate()).powi(key as i32)
        }
    }

    /// Weight of a leg as a function of the relative permutation of its ends.
    fn leg_weights<T: Num + Clone + FromPrimitive>(&self, u: &T) -> Vec<T> {
        let one = T::one();
        let d = T::from_u64(self.model.d).expect("representable");
        (0..self.group.order())
            .map(|g| match self.model.kind {
                LatticeKind::Potts => {
                    let delta = if g == 0 { one.clone() } else { T::zero() };
                    u.clone() * delta + (one.clone() - u.clone())
                }
                _ => u.clone() * num_traits::pow(d.clone(), self.group.cycle_count(g)) + (one.clone() - u.clone()) * d.clone(),
            })
            .collect()
    }

    fn table<T: Num + Clone + FromPrimitive>(&self, wx: &[T], wy: &[T], wg: Option<&[T]>) -> Vec<T> {
        let g = &self.group;
        let r = g.order();
        let mut out = vec![T::zero(); r * r];
        for a in 0..r {
            for b in 0..r {
                out[a * r + b] = match wg {
                    Some(wg) => (0..r).fold(T::zero(), |acc, k| {
                        acc + wx[k].clone() * wy[g.relative(a, k)].clone() * wg[g.relative(k, b)].clone()
                    }),
                    None => wx[b].clone() * wy[g.relative(a, b)].clone(),
                };
            }
        }
        out
    }

    fn kernel(&mut self, kx: usize, ky: usize) -> &[f64] {
        if !self.cache.contains_key(&(kx, ky)) {
            let table = if self.exact() {
                let wx = self.leg_weights(&self.u_exact(kx));
                let wy = self.leg_weights(&self.u_exact(ky));
                let wg: Option<Vec<BigRational>> =
                    self.weingarten.as_ref().map(|w| (0..self.group.order()).map(|i| w.exact_at(i).clone()).collect());
                self.table(&wx, &wy, wg.as_deref()).iter().map(rational_to_f64).collect()
            } else {
                let wx = self.leg_weights(&self.u_float(kx));
                let wy = self.leg_weights(&self.u_float(ky));
                let wg: Option<Vec<f64>> = self.weingarten.as_ref().map(|w| (0..self.group.order()).map(|i| w.value_at(i)).collect());
                self.table(&wx, &wy, wg.as_deref())
            };
            self.cache.insert((kx, ky), table);
        }
        &self.cache[&(kx, ky)]
    }

    /// Bottom-leg weights against the pinned permutation, by spin index.
    fn bottom_weights(&self, key: usize, pinned: &Permutation) -> Vec<f64> {
        let w = if self.exact() {
            self.leg_weights(&self.u_exact(key)).iter().map(rational_to_f64).collect()
        } else {
            self.leg_weights(&self.u_float(key))
        };
        let gb = self.group.index_of(pinned);
        (0..self.group.order()).map(|l| w[self.group.relative(gb, l)]).collect()
    }
}

/// Exact partition function with explicit top-boundary spins.
pub fn contract_with_top(model: &LatticeModel, top: &[Permutation]) -> StatMechResult<ContractResult> {
    model.validate()?;
    if top.len() != model.width {
        return Err(StatMechError::InvalidModel(format!("{} top spins for width {}", top.len(), model.width)));
    }
    if let Some(g) = top.iter().find(|g| g.q() != model.q) {
        return Err(ReplicaError::DegreeMismatch(g.q(), model.q).into());
    }
    let mut kernels = Kernels::new(model)?;
    let r = kernels.group.order();
    let bits = usize::BITS - (r - 1).leading_zeros();
    let bits = bits.max(1) as usize;
    let mask = (1u64 << bits) - 1;
    let digit = |key: u64, j: usize| ((key >> (j * bits)) & mask) as usize;

    let start = top.iter().enumerate().fold(0u64, |acc, (j, g)| acc | ((kernels.group.index_of(g) as u64) << (j * bits)));
    let mut row: RowMap<u64> = RowMap::default();
    row.insert(start, 1.0);
    let mut log_scale = 0.0;
    let layers = model.layers();
    let mut upper = vec![layers; model.width];

    for layer in (0..layers).rev() {
        for left in gate_left_sites(layer, model.width) {
            let kx = model.leg_key(left, layer, upper[left]);
            let ky = model.leg_key(left + 1, layer, upper[left + 1]);
            let table = kernels.kernel(kx, ky).to_vec();
            let group = &kernels.group;
            let clear = !((mask << (left * bits)) | (mask << ((left + 1) * bits)));
            let mut next: RowMap<u64> = RowMap::default();
            for (&key, &value) in &row {
                let (x, y) = (digit(key, left), digit(key, left + 1));
                let a = group.relative(x, y);
                for l in 0..r {
                    let coef = table[a * r + group.relative(x, l)];
                    if coef != 0.0 {
                        let nk = (key & clear) | ((l as u64) << (left * bits)) | ((l as u64) << ((left + 1) * bits));
                        *next.entry(nk).or_insert(0.0) += coef * value;
                    }
                }
            }
            next.retain(|_, v| *v != 0.0);
            let peak = next.values().fold(0.0f64, |m, v| m.max(v.abs()));
            if peak == 0.0 {
                return Ok(ContractResult { log_abs: f64::NEG_INFINITY, sign: 0.0 });
            }
            for v in next.values_mut() {
                *v /= peak;
            }
            log_scale += peak.ln();
            row = next;
            upper[left] = layer;
            upper[left + 1] = layer;
        }
    }

    let total: f64 = match &model.bottom {
        BottomBoundary::Free => {
            let mut values: Vec<(u64, f64)> = row.into_iter().collect();
            values.sort_unstable_by_key(|e| e.0);
            values.iter().map(|e| e.1).sum()
        }
        BottomBoundary::Pinned(g) => {
            let weights: Vec<Vec<f64>> = (0..model.width).map(|j| kernels.bottom_weights(model.leg_key(j, 0, upper[j]), g)).collect();
            let mut values: Vec<(u64, f64)> = row.into_iter().collect();
            values.sort_unstable_by_key(|e| e.0);
            values.iter().map(|&(key, v)| v * (0..model.width).map(|j| weights[j][digit(key, j)]).product::<f64>()).sum()
        }
    };
    if total == 0.0 {
        return Ok(ContractResult { log_abs: f64::NEG_INFINITY, sign: 0.0 });
    }
    Ok(ContractResult { log_abs: total.abs().ln() + log_scale, sign: total.signum() })
}

fn factorial(q: usize) -> u64 {
    (1..=q as u64).product()
}

/// Undirected multigraph carrying Potts spins on vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PottsGraph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl PottsGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> StatMechResult<Self> {
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= vertices || b >= vertices) {
            return Err(StatMechError::InvalidModel(format!("edge ({a}, {b}) leaves a graph of {vertices} vertices")));
        }
        Ok(Self { vertices, edges })
    }

    /// Open `rows x cols` square lattice, row-major vertex labels.
    pub fn square(rows: usize, cols: usize) -> Self {
        let at = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((at(r, c), at(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((at(r, c), at(r + 1, c)));
                }
            }
        }
        Self { vertices: rows * cols, edges }
    }

    /// Bond graph of the `d -> infinity` circuit model: one vertex per top
    /// boundary site (labels `0..width`) and per gate, each gate bonded to the
    /// nearest event above it on both of its sites. Bottom legs are free.
    pub fn brickwork(width: usize, depth: usize) -> Self {
        let mut upper: Vec<usize> = (0..width).collect();
        let mut vertices = width;
        let mut edges = Vec::new();
        for layer in (0..2 * depth).rev() {
            for left in gate_left_sites(layer, width) {
                let v = vertices;
                vertices += 1;
                edges.push((upper[left], v));
                edges.push((upper[left + 1], v));
                upper[left] = v;
                upper[left + 1] = v;
            }
        }
        Self { vertices, edges }
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Union-find with undo, for enumerating bond subsets depth first.
struct RollbackDsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<Option<usize>>,
    components: usize,
}

impl RollbackDsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n], history: Vec::new(), components: n }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            self.history.push(None);
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.components -= 1;
        self.history.push(Some(b));
    }

    fn undo(&mut self) {
        if let Some(Some(b)) = self.history.pop() {
            let a = self.parent[b];
            self.size[a] -= self.size[b];
            self.parent[b] = b;
            self.components += 1;
        }
    }
}

/// `ln Z` from the cluster expansion
/// `sum p^{#empty} (1-p)^{#occupied} (Q!)^{#clusters}`, exhaustively.
pub fn fk_partition_function(graph: &PottsGraph, p: f64, q: usize) -> StatMechResult<f64> {
    if graph.edges.len() > FK_LINK_CAP {
        return Err(StatMechError::TooManyLinks { links: graph.edges.len(), cap: FK_LINK_CAP });
    }
    let colors = factorial(q) as f64;
    let weights: Vec<f64> = (0..=graph.vertices).map(|c| colors.powi(c as i32)).collect();
    let mut dsu = RollbackDsu::new(graph.vertices);
    let total = fk_expand(&graph.edges, p, &weights, &mut dsu, 1.0);
    Ok(total.ln())
}

fn fk_expand(edges: &[(usize, usize)], p: f64, weights: &[f64], dsu: &mut RollbackDsu, w: f64) -> f64 {
    match edges.split_first() {
        None => w * weights[dsu.components],
        Some((&(a, b), rest)) => {
            let empty = if p == 0.0 { 0.0 } else { fk_expand(rest, p, weights, dsu, w * p) };
            let occupied = if p == 1.0 {
                0.0
            } else {
                dsu.union(a, b);
                let s = fk_expand(rest, p, weights, dsu, w * (1.0 - p));
                dsu.undo();
                s
            };
            empty + occupied
        }
    }
}

/// `ln Z` of the `Q!`-state Potts model with bond weight `(1-p) delta + p`,
/// by direct summation over spins. Vertices are eliminated in label order,
/// keeping only the colors of vertices that still have later neighbours.
pub fn potts_spin_sum(graph: &PottsGraph, p: f64, q: usize) -> StatMechResult<f64> {
    let colors = factorial(q) as usize;
    let n = graph.vertices;
    let mut last_use: Vec<usize> = (0..n).collect();
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &graph.edges {
        let (lo, hi) = (a.min(b), a.max(b));
        last_use[lo] = last_use[lo].max(hi);
        if lo != hi {
            earlier[hi].push(lo);
        }
    }
    let mut frontier: Vec<usize> = Vec::new();
    let mut states: RowMap<Vec<u16>> = RowMap::default();
    states.insert(Vec::new(), 1.0);
    for v in 0..n {
        let slots: Vec<usize> = earlier[v].iter().map(|u| frontier.iter().position(|f| f == u).expect("frontier holds live vertices")).collect();
        let mut grown: RowMap<Vec<u16>> = RowMap::default();
        for (assign, &w) in &states {
            for c in 0..colors {
                let differing = slots.iter().filter(|&&s| assign[s] as usize != c).count();
                let weight = w * p.powi(differing as i32);
                if weight != 0.0 {
                    let mut key = assign.clone();
                    key.push(c as u16);
                    *grown.entry(key).or_insert(0.0) += weight;
                }
            }
        }
        frontier.push(v);
        let keep: Vec<usize> = (0..frontier.len()).filter(|&i| last_use[frontier[i]] > v).collect();
        states = RowMap::default();
        for (assign, w) in grown {
            let key: Vec<u16> = keep.iter().map(|&i| assign[i]).collect();
            *states.entry(key).or_insert(0.0) += w;
        }
        frontier = keep.iter().map(|&i| frontier[i]).collect();
        if states.len() as u64 > STATE_SPACE_CAP {
            return Err(StatMechError::StateSpaceTooLarge { states: states.len() as f64, cap: STATE_SPACE_CAP });
        }
    }
    let total: f64 = states.values().sum();
    Ok(total.ln())
}
