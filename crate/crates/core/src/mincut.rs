//! Minimal cuts through brickwork circuits diluted by measurements.
//!
//! Cuts are computed as shortest paths in the planar dual. The faces of the
//! circuit network are cells: column `c` (between sites `c` and `c + 1`) is
//! split into `n_c + 1` cells by its `n_c` gates, and the regions left of
//! site 0 and right of site `L - 1` are one cell each. Every tensor leg joins
//! the two cells on either side of it; crossing it costs 1, or 0 when the leg
//! is measured. A region `[a, b)` is isolated by a dual path between the top
//! cells of columns `a - 1` and `b - 1`.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{gate_left_sites, CircuitSpec, MeasurementLayout};
use crate::haar::RandomStream;
use crate::qstate::Region;
use crate::stats::MeanEstimate;

#[derive(Debug, Error, PartialEq)]
pub enum CutError {
    #[error("layout is {got_layers}x{got_sites}, circuit needs {layers}x{sites}")]
    LayoutShape { layers: usize, sites: usize, got_layers: usize, got_sites: usize },
    #[error("region must be an interval inside 0..{0}")]
    BadRegion(usize),
    #[error("invalid scan: {0}")]
    BadScan(String),
}

/// What the bottom ends of the legs attach to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutBottom {
    /// Product initial state: bottom legs cost nothing to cut.
    Free,
    /// One shared reference tensor (purification): bottom legs cost 1.
    Pinned,
}

/// One tensor leg: site `site` between the event at layer `lower` (`None`
/// for the initial state) and the one at `upper` (`None` for the top).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Leg {
    pub site: usize,
    pub lower: Option<usize>,
    pub upper: Option<usize>,
    pub left_cell: usize,
    pub right_cell: usize,
    pub measured: bool,
    pub capacity: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutGraph {
    sites: usize,
    layers: usize,
    bottom: CutBottom,
    /// First cell of every column `-1..=L-1`, shifted by one.
    column_offset: Vec<usize>,
    cells: usize,
    legs: Vec<Leg>,
    adjacency: Vec<Vec<(usize, u32)>>,
}

impl CutGraph {
    pub fn new(sites: usize, depth: usize, layout: &MeasurementLayout, bottom: CutBottom) -> Result<Self, CutError> {
        let layers = 2 * depth;
        if layout.layers() != layers || layout.sites() != sites {
            return Err(CutError::LayoutShape { layers, sites, got_layers: layout.layers(), got_sites: layout.sites() });
        }
        // Columns -1 and L-1 are single cells; column c in 0..L-1 has one cell
        // more than it has gates.
        let mut column_offset = Vec::with_capacity(sites + 1);
        let mut cells = 0;
        for c in -1..sites as isize {
            column_offset.push(cells);
            cells += if c < 0 || c as usize + 1 >= sites { 1 } else { column_gates(c as usize, layers) + 1 };
        }
        let mut graph = Self { sites, layers, bottom, column_offset, cells, legs: Vec::new(), adjacency: vec![Vec::new(); cells] };
        for site in 0..sites {
            let mut events: Vec<usize> = (0..layers)
                .filter(|&l| gate_left_sites(l, sites).any(|left| left == site || left + 1 == site))
                .collect();
            events.sort_unstable();
            let mut lower = None;
            for upper in events.iter().copied().map(Some).chain(std::iter::once(None)) {
                let first_slot = lower.unwrap_or(0);
                let last_slot = upper.unwrap_or(layers);
                let measured = (first_slot..last_slot).any(|l| layout.is_measured(l, site));
                let capacity = match (measured, lower, bottom) {
                    (true, _, _) => 0,
                    (false, None, CutBottom::Free) => 0,
                    _ => 1,
                };
                let leg = Leg {
                    site,
                    lower,
                    upper,
                    left_cell: graph.cell(site as isize - 1, lower),
                    right_cell: graph.cell(site as isize, lower),
                    measured,
                    capacity,
                };
                graph.adjacency[leg.left_cell].push((leg.right_cell, capacity));
                graph.adjacency[leg.right_cell].push((leg.left_cell, capacity));
                graph.legs.push(leg);
                lower = upper;
            }
        }
        Ok(graph)
    }

    /// Cell of `column` just above the event at layer `lower`.
    fn cell(&self, column: isize, lower: Option<usize>) -> usize {
        let base = self.column_offset[(column + 1) as usize];
        if column < 0 || column as usize + 1 >= self.sites {
            return base;
        }
        let c = column as usize;
        base + lower.map_or(0, |a| (0..=a).filter(|l| l % 2 == c % 2).count())
    }

    fn top_cell(&self, column: isize) -> usize {
        self.cell(column, self.layers.checked_sub(1))
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn bottom(&self) -> CutBottom {
        self.bottom
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn num_cells(&self) -> usize {
        self.cells
    }
}

fn column_gates(c: usize, layers: usize) -> usize {
    (0..layers).filter(|l| l % 2 == c % 2).count()
}

/// Cut graph of the circuit geometry of `spec` with the given measurement
/// positions.
pub fn build_cut_graph(spec: &CircuitSpec, layout: &MeasurementLayout, bottom: CutBottom) -> Result<CutGraph, CutError> {
    CutGraph::new(spec.sites, spec.depth, layout, bottom)
}

/// Fewest unmeasured legs whose removal separates the top legs of the
/// interval `region` from the rest (and, for a pinned bottom, from the
/// reference).
pub fn minimal_cut(graph: &CutGraph, region: &Region) -> Result<u32, CutError> {
    let sites = region.sites();
    if !region.is_interval() || sites.last().is_some_and(|&s| s >= graph.sites) {
        return Err(CutError::BadRegion(graph.sites));
    }
    let (Some(&a), Some(&last)) = (sites.first(), sites.last()) else {
        return Ok(0);
    };
    let source = graph.top_cell(a as isize - 1);
    let target = graph.top_cell(last as isize);
    Ok(zero_one_bfs(&graph.adjacency, source, target))
}

fn zero_one_bfs(adjacency: &[Vec<(usize, u32)>], source: usize, target: usize) -> u32 {
    let mut dist = vec![u32::MAX; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        if v == target {
            break;
        }
        for &(w, c) in &adjacency[v] {
            let nd = dist[v] + c;
            if nd < dist[w] {
                dist[w] = nd;
                if c == 0 {
                    queue.push_front(w);
                } else {
                    queue.push_back(w);
                }
            }
        }
    }
    dist[target]
}

/// `S = l ln d`.
pub fn percolation_entropy(ell: u32, d: usize) -> f64 {
    ell as f64 * (d as f64).ln()
}

/// Mean minimal cut of `[0, L_A)` for each `L_A`, over random layouts at
/// rate `p` (sample `s` draws its layout from `stream.child(s)`).
pub fn mean_cut_curve(
    sites: usize,
    depth: usize,
    p: f64,
    sizes: &[usize],
    bottom: CutBottom,
    num_samples: usize,
    stream: RandomStream,
) -> Result<Vec<(usize, MeanEstimate)>, CutError> {
    if sizes.iter().any(|&s| s > sites) {
        return Err(CutError::BadRegion(sites));
    }
    let rows: Vec<Vec<f64>> = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| {
            let graph = random_graph(sites, depth, p, bottom, stream.child(s))?;
            sizes.iter().map(|&la| minimal_cut(&graph, &Region::interval(0, la)).map(f64::from)).collect()
        })
        .collect::<Result<_, CutError>>()?;
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(i, &la)| {
            let column: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            (la, MeanEstimate::from_samples(&column))
        })
        .collect())
}

fn random_graph(sites: usize, depth: usize, p: f64, bottom: CutBottom, stream: RandomStream) -> Result<CutGraph, CutError> {
    let spec = CircuitSpec::new(sites, 2, depth, p, stream, stream).map_err(|e| CutError::BadScan(e.to_string()))?;
    CutGraph::new(sites, depth, &MeasurementLayout::sample(&spec), bottom)
}

/// One point of the percolation scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanPoint {
    pub sites: usize,
    pub p: f64,
    pub samples: usize,
    /// Mean cut separating the whole chain from the reference.
    pub mean_cut: MeanEstimate,
    /// Fraction of layouts with a zero cut.
    pub zero_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcEstimate {
    pub p_c: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Crossing of each consecutive pair of sizes.
    pub pair_crossings: Vec<f64>,
    pub points: Vec<ScanPoint>,
}

pub const BOOTSTRAP_RESAMPLES: usize = 400;

/// Finite-size crossing estimate of the threshold.
///
/// Geometry: chain of `L` sites, `L / 2` steps, bottom pinned to a
/// reference, region the whole chain. The cut vanishes exactly when the
/// measured legs percolate across the chain, and the probability of that
/// event is compared between sizes. `p_c` is the mean crossing point of
/// consecutive sizes; the interval comes from a parametric bootstrap.
pub fn estimate_pc(sizes: &[usize], rates: &[f64], num_samples: usize, stream: RandomStream) -> Result<PcEstimate, CutError> {
    if sizes.len() < 2 || rates.len() < 2 {
        return Err(CutError::BadScan("need at least two sizes and two rates".into()));
    }
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CutError::BadScan("rates must be strictly increasing".into()));
    }
    let mut points = Vec::new();
    for (i, &sites) in sizes.iter().enumerate() {
        if sites < 2 {
            return Err(CutError::BadScan(format!("size {sites} too small")));
        }
        for (j, &p) in rates.iter().enumerate() {
            let point_stream = stream.child((i * rates.len() + j) as u64);
            let cuts: Vec<f64> = (0..num_samples as u64)
                .into_par_iter()
                .map(|s| {
                    let graph = random_graph(sites, sites / 2, p, CutBottom::Pinned, point_stream.child(s))?;
                    minimal_cut(&graph, &Region::interval(0, sites)).map(f64::from)
                })
                .collect::<Result<_, CutError>>()?;
            let zeros = cuts.iter().filter(|&&c| c == 0.0).count();
            points.push(ScanPoint {
                sites,
                p,
                samples: num_samples,
                mean_cut: MeanEstimate::from_samples(&cuts),
                zero_fraction: zeros as f64 / num_samples as f64,
            });
        }
    }
    let curve = |fractions: &[f64], i: usize| fractions[i * rates.len()..(i + 1) * rates.len()].to_vec();
    let observed: Vec<f64> = points.iter().map(|pt| pt.zero_fraction).collect();
    let crossings = |fractions: &[f64]| -> Vec<f64> {
        (0..sizes.len() - 1).filter_map(|i| crossing(rates, &curve(fractions, i), &curve(fractions, i + 1))).collect()
    };
    let pair_crossings = crossings(&observed);
    if pair_crossings.is_empty() {
        return Err(CutError::BadScan("curves do not cross inside the rate grid".into()));
    }
    let p_c = pair_crossings.iter().sum::<f64>() / pair_crossings.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(stream.child(u64::MAX).seed ^ stream.child(u64::MAX).stream_id);
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let resampled: Vec<f64> = observed
            .iter()
            .map(|&f| Binomial::new(num_samples as u64, f).expect("fraction in [0, 1]").sample(&mut rng) as f64 / num_samples as f64)
            .collect();
        let c = crossings(&resampled);
        if !c.is_empty() {
            boot.push(c.iter().sum::<f64>() / c.len() as f64);
        }
    }
    boot.sort_by(|a, b| a.total_cmp(b));
    let (ci_low, ci_high) = if boot.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let at = |q: f64| boot[((boot.len() - 1) as f64 * q).round() as usize];
        (at(0.025), at(0.975))
    };
    Ok(PcEstimate { p_c, ci_low, ci_high, pair_crossings, points })
}

/// First sign change of `a - b` along the grid, skipping exact ties and
/// interpolating linearly between the bracketing grid points.
fn crossing(rates: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let nonzero: Vec<(f64, f64)> = rates.iter().zip(a.iter().zip(b)).map(|(&p, (x, y))| (p, x - y)).filter(|e| e.1 != 0.0).collect();
    nonzero.windows(2).find(|w| w[0].1 * w[1].1 < 0.0).map(|w| {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        p0 + d0 / (d0 - d1) * (p1 - p0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Minimum over every assignment of gates (and the reference) to the two
    /// sides of the cut, straight from the tensor network.
    pub(crate) fn exhaustive_cut(sites: usize, depth: usize, layout: &MeasurementLayout, bottom: CutBottom, region: &Region) -> u32 {
        let layers = 2 * depth;
        let mut gates = Vec::new();
        for l in 0..layers {
            for left in gate_left_sites(l, sites) {
                gates.push((l, left));
            }
        }
        let gate_at = |layer: usize, site: usize| gates.iter().position(|&(l, left)| l == layer && (left == site || left + 1 == site));
        // Nodes: gates, then A-top, rest-top and the reference. Free bottom
        // legs end on dangling nodes and never need cutting.
        let n = gates.len();
        let (a_top, rest_top, reference) = (n, n + 1, n + 2);
        let mut edges = Vec::new();
        for site in 0..sites {
            let mut lower: Option<usize> = None;
            let events: Vec<usize> = (0..layers).filter(|&l| gate_at(l, site).is_some()).collect();
            for upper in events.iter().copied().map(Some).chain(std::iter::once(None)) {
                let first = lower.unwrap_or(0);
                let last = upper.unwrap_or(layers);
                let measured = (first..last).any(|l| layout.is_measured(l, site));
                let lo = match lower {
                    Some(l) => Some(gate_at(l, site).unwrap()),
                    None if bottom == CutBottom::Pinned => Some(reference),
                    None => None,
                };
                let hi = match upper {
                    Some(u) => gate_at(u, site).unwrap(),
                    None if region.sites().contains(&site) => a_top,
                    None => rest_top,
                };
                if let (Some(lo), false) = (lo, measured) {
                    edges.push((lo, hi));
                }
                lower = upper;
            }
        }
        let mut best = u32::MAX;
        for mask in 0u64..(1 << n) {
            // The reference belongs to the complement.
            let side = |v: usize| -> bool {
                if v == a_top {
                    true
                } else if v == rest_top || v == reference {
                    false
                } else {
                    mask >> v & 1 == 1
                }
            };
            let cost = edges.iter().filter(|&&(x, y)| side(x) != side(y)).count() as u32;
            best = best.min(cost);
        }
        best
    }

    fn spec(sites: usize, depth: usize, p: f64, seed: u64) -> CircuitSpec {
        let s = RandomStream::new(seed, 0);
        CircuitSpec::new(sites, 2, depth, p, s, s).unwrap()
    }

    #[test]
    fn leg_counts() {
        let g = CutGraph::new(4, 2, &MeasurementLayout::empty(4, 4), CutBottom::Free).unwrap();
        assert_eq!(g.legs().len(), 16);
        let g = CutGraph::new(5, 0, &MeasurementLayout::empty(0, 5), CutBottom::Free).unwrap();
        assert_eq!(g.legs().len(), 5);
        assert!(g.legs().iter().all(|l| l.lower.is_none() && l.upper.is_none()));
    }

    #[test]
    fn full_layout_flags_every_post_layer_leg() {
        let g = CutGraph::new(6, 2, &MeasurementLayout::full(4, 6), CutBottom::Pinned).unwrap();
        for leg in g.legs() {
            let first_slot = leg.lower.unwrap_or(0);
            let last_slot = leg.upper.unwrap_or(4);
            assert_eq!(leg.measured, last_slot > first_slot);
        }
        for a in 0..6 {
            for b in a + 1..=6 {
                assert_eq!(minimal_cut(&g, &Region::interval(a, b)).unwrap(), 0);
            }
        }
    }

    #[test]
    fn whole_chain_cuts() {
        for sites in [1, 4, 7] {
            let layout = MeasurementLayout::empty(6, sites);
            let pinned = CutGraph::new(sites, 3, &layout, CutBottom::Pinned).unwrap();
            let free = CutGraph::new(sites, 3, &layout, CutBottom::Free).unwrap();
            let all = Region::interval(0, sites);
            assert_eq!(minimal_cut(&pinned, &all).unwrap(), sites as u32);
            assert_eq!(minimal_cut(&free, &all).unwrap(), 0);
        }
    }

    #[test]
    fn unmeasured_half_chain_grows_with_time() {
        // Free bottom: the cut at the middle costs one leg per layer until it
        // can exit sideways.
        let sites = 16;
        for depth in 0..4 {
            let g = CutGraph::new(sites, depth, &MeasurementLayout::empty(2 * depth, sites), CutBottom::Free).unwrap();
            assert_eq!(minimal_cut(&g, &Region::interval(0, 8)).unwrap(), 2 * depth as u32);
        }
    }

    #[test]
    fn dual_path_matches_exhaustive_oracle() {
        let mut checked = 0;
        for seed in 0..500u64 {
            let sites = 3 + (seed % 3) as usize;
            let depth = 1 + (seed % 2) as usize;
            let spec = spec(sites, depth, 0.3, seed);
            let layout = MeasurementLayout::sample(&spec);
            for bottom in [CutBottom::Free, CutBottom::Pinned] {
                let g = CutGraph::new(sites, depth, &layout, bottom).unwrap();
                if g.legs().len() > 30 {
                    continue;
                }
                let a = (seed as usize) % sites;
                let b = a + 1 + (seed as usize / 7) % (sites - a);
                let region = Region::interval(a, b);
                assert_eq!(minimal_cut(&g, &region).unwrap(), exhaustive_cut(sites, depth, &layout, bottom, &region), "seed {seed}");
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn adding_measurements_never_increases_cut() {
        let sites = 8;
        let depth = 3;
        let mut layout = MeasurementLayout::empty(6, sites);
        let region = Region::interval(2, 6);
        let mut last = minimal_cut(&CutGraph::new(sites, depth, &layout, CutBottom::Pinned).unwrap(), &region).unwrap();
        let order = MeasurementLayout::full(6, sites).positions();
        for (i, &(l, s)) in order.iter().enumerate() {
            if i % 3 == 0 {
                layout.set(l, s, true);
                let now = minimal_cut(&CutGraph::new(sites, depth, &layout, CutBottom::Pinned).unwrap(), &region).unwrap();
                assert!(now <= last);
                last = now;
            }
        }
    }

    #[test]
    fn entropy_arithmetic() {
        assert_eq!(percolation_entropy(0, 2), 0.0);
        assert!((percolation_entropy(3, 2) - 3.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn crossing_interpolation() {
        let rates = [0.1, 0.2, 0.3];
        assert_eq!(crossing(&rates, &[1.0, 0.5, 0.0], &[1.0, 0.5, 0.0]), None);
        assert_eq!(crossing(&rates, &[0.0, 0.1, 0.2], &[0.0, 0.0, 0.3]), Some(0.25));
        let c = crossing(&rates, &[0.2, 0.6, 0.9], &[0.4, 0.5, 1.0]).unwrap();
        assert!((c - (0.1 + 0.2 / 0.3 * 0.1)).abs() < 1e-12);
    }
}
