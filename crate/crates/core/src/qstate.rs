//! Dense state vectors for chains of qudits.
//!
//! Basis index convention: site 0 is the most significant digit, so for
//! `L = 2, d = 2` the string `|1 0>` sits at index 2. Amplitudes are always
//! kept unit-normalized; the product of Born probabilities of the measurement
//! outcomes seen so far is tracked separately as `log_weight`.

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::C64;

/// Default cap on the dimension of a reduced density matrix.
pub const DEFAULT_RDM_CAP: usize = 4096;

/// Tolerance used when validating gates.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Eigenvalues below this are treated as exact zeros in entropy functionals.
pub const EIGEN_FLOOR: f64 = 1e-14;

/// Forced outcomes with Born probability below this are dead branches.
pub const DEAD_BRANCH_PROB: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("basis index {value} at site {site} is not below local dimension {dim}")]
    BasisIndexOutOfRange { site: usize, value: usize, dim: usize },
    #[error("expected {expected} basis indices, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("site {site} out of range for a chain of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("gate of shape {rows}x{cols} does not act on two qudits of dimension {dim}")]
    GateShape { rows: usize, cols: usize, dim: usize },
    #[error("gate is not unitary (max deviation {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("reduced density matrix dimension {dim} exceeds cap {cap}")]
    RegionTooLarge { dim: usize, cap: usize },
    #[error("region indices must be strictly increasing and below {sites}")]
    InvalidRegion { sites: usize },
    #[error("all outcome probabilities vanish at site {site}; state is corrupted")]
    Corrupted { site: usize },
    #[error("invalid chain: local dimension {dim} and {sites} sites")]
    InvalidChain { dim: usize, sites: usize },
    #[error("amplitude vector has zero norm")]
    ZeroNorm,
    #[error("outcome {outcome} is not below local dimension {dim}")]
    OutcomeOutOfRange { outcome: usize, dim: usize },
}

pub type StateResult<T> = Result<T, StateError>;

/// Subset of sites, strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(sites: Vec<usize>) -> Self {
        Self(sites)
    }

    /// Contiguous block `start..end`.
    pub fn interval(start: usize, end: usize) -> Self {
        Self((start..end).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True for `start..end` blocks (and the empty region).
    pub fn is_interval(&self) -> bool {
        self.0.windows(2).all(|w| w[1] == w[0] + 1)
    }

    pub fn complement(&self, num_sites: usize) -> Region {
        Region((0..num_sites).filter(|s| !self.0.contains(s)).collect())
    }

    fn validate(&self, num_sites: usize) -> StateResult<()> {
        let increasing = self.0.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.0.last().is_none_or(|&s| s < num_sites);
        if increasing && in_range {
            Ok(())
        } else {
            Err(StateError::InvalidRegion { sites: num_sites })
        }
    }
}

/// Rényi index: integer `n >= 0`, with `n = 1` meaning von Neumann.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenyiIndex {
    Order(u32),
    VonNeumann,
}

/// Outcome of imposing a measurement result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Branch {
    /// Branch survives; `log_prob` was added to the state's `log_weight`.
    Alive { log_prob: f64 },
    /// Born probability below [`DEAD_BRANCH_PROB`]; the state is untouched.
    Dead,
}

impl Branch {
    pub fn is_dead(&self) -> bool {
        matches!(self, Branch::Dead)
    }
}

/// Pure state of `num_sites` qudits of dimension `local_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    amplitudes: Vec<C64>,
    local_dim: usize,
    num_sites: usize,
    log_weight: f64,
}

impl QuditState {
    /// Computational-basis product state `|i_0 i_1 ... i_{L-1}>`.
    pub fn product(num_sites: usize, local_dim: usize, basis: &[usize]) -> StateResult<Self> {
        let len = checked_dim(local_dim, num_sites)?;
        if basis.len() != num_sites {
            return Err(StateError::WrongLength { expected: num_sites, got: basis.len() });
        }
        let mut index = 0usize;
        for (site, &value) in basis.iter().enumerate() {
            if value >= local_dim {
                return Err(StateError::BasisIndexOutOfRange { site, value, dim: local_dim });
            }
            index = index * local_dim + value;
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); len];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, local_dim, num_sites, log_weight: 0.0 })
    }

    /// All sites in `|0>`.
    pub fn zeros(num_sites: usize, local_dim: usize) -> StateResult<Self> {
        Self::product(num_sites, local_dim, &vec![0; num_sites])
    }

    /// Wraps (and normalizes) an arbitrary amplitude vector.
    pub fn from_amplitudes(num_sites: usize, local_dim: usize, mut amplitudes: Vec<C64>) -> StateResult<Self> {
        let len = checked_dim(local_dim, num_sites)?;
        if amplitudes.len() != len {
            return Err(StateError::WrongLength { expected: len, got: amplitudes.len() });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::ZeroNorm);
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { amplitudes, local_dim, num_sites, log_weight: 0.0 })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Natural log of the Born probability accumulated by measurements.
    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_site(&self, site: usize) -> StateResult<()> {
        if site < self.num_sites {
            Ok(())
        } else {
            Err(StateError::SiteOutOfRange { site, sites: self.num_sites })
        }
    }

    /// Applies a `d^2 x d^2` unitary to sites `(left_site, left_site + 1)`.
    /// Row/column index of the gate is `d * a + b` with `a` on `left_site`.
    pub fn apply_two_site_gate(&mut self, gate: &DMatrix<C64>, left_site: usize) -> StateResult<()> {
        let d2 = self.local_dim * self.local_dim;
        if gate.nrows() != d2 || gate.ncols() != d2 {
            return Err(StateError::GateShape { rows: gate.nrows(), cols: gate.ncols(), dim: self.local_dim });
        }
        if left_site + 1 >= self.num_sites {
            return Err(StateError::SiteOutOfRange { site: left_site + 1, sites: self.num_sites });
        }
        let deviation = unitarity_deviation(gate);
        if deviation > UNITARITY_TOL {
            return Err(StateError::NonUnitary { deviation });
        }
        self.apply_two_site_unchecked(gate, left_site);
        Ok(())
    }

    /// Gate application without validation; callers guarantee shape, range
    /// and unitarity.
    pub(crate) fn apply_two_site_unchecked(&mut self, gate: &DMatrix<C64>, left_site: usize) {
        let d = self.local_dim;
        let d2 = d * d;
        let stride = d.pow((self.num_sites - left_site - 2) as u32);
        let block = d2 * stride;
        // Row-major copy of the gate for the inner loop.
        let g: Vec<C64> = (0..d2).flat_map(|r| (0..d2).map(move |c| (r, c))).map(|(r, c)| gate[(r, c)]).collect();
        let mut buf = vec![C64::new(0.0, 0.0); d2];
        for base in (0..self.amplitudes.len()).step_by(block) {
            for lo in 0..stride {
                let start = base + lo;
                for (k, slot) in buf.iter_mut().enumerate() {
                    *slot = self.amplitudes[start + k * stride];
                }
                for r in 0..d2 {
                    let row = &g[r * d2..(r + 1) * d2];
                    let mut acc = C64::new(0.0, 0.0);
                    for (gk, &x) in row.iter().zip(&buf) {
                        acc += gk * x;
                    }
                    self.amplitudes[start + r * stride] = acc;
                }
            }
        }
    }

    /// Born probabilities of the `d` outcomes of a computational-basis
    /// measurement of `site`.
    pub fn outcome_probabilities(&self, site: usize) -> StateResult<Vec<f64>> {
        self.check_site(site)?;
        let d = self.local_dim;
        let stride = d.pow((self.num_sites - site - 1) as u32);
        let mut probs = vec![0.0; d];
        for (i, z) in self.amplitudes.iter().enumerate() {
            probs[(i / stride) % d] += z.norm_sqr();
        }
        Ok(probs)
    }

    /// Projects `site` onto `outcome` and renormalizes, assuming the Born
    /// probability `prob` is non-zero.
    fn project(&mut self, site: usize, outcome: usize, prob: f64) {
        let d = self.local_dim;
        let stride = d.pow((self.num_sites - site - 1) as u32);
        let scale = 1.0 / prob.sqrt();
        for (i, z) in self.amplitudes.iter_mut().enumerate() {
            if (i / stride) % d == outcome {
                *z *= scale;
            } else {
                *z = C64::new(0.0, 0.0);
            }
        }
        self.log_weight += prob.ln();
    }

    /// Born-sampled projective measurement of `site`.
    pub fn measure_site<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> StateResult<usize> {
        let probs = self.outcome_probabilities(site)?;
        let total: f64 = probs.iter().sum();
        if !(total > DEAD_BRANCH_PROB) {
            return Err(StateError::Corrupted { site });
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                outcome = k;
                break;
            }
        }
        self.project(site, outcome, probs[outcome] / total);
        Ok(outcome)
    }

    /// Imposes `outcome` on `site`. A branch whose Born probability is below
    /// [`DEAD_BRANCH_PROB`] is reported as dead and leaves the state as is.
    pub fn measure_site_forced(&mut self, site: usize, outcome: usize) -> StateResult<Branch> {
        if outcome >= self.local_dim {
            return Err(StateError::OutcomeOutOfRange { outcome, dim: self.local_dim });
        }
        let probs = self.outcome_probabilities(site)?;
        let prob = probs[outcome];
        if prob < DEAD_BRANCH_PROB {
            return Ok(Branch::Dead);
        }
        self.project(site, outcome, prob);
        Ok(Branch::Alive { log_prob: prob.ln() })
    }

    /// Amplitudes reshaped into a `d^|A| x d^|complement|` matrix.
    fn bipartition_matrix(&self, region: &Region) -> StateResult<DMatrix<C64>> {
        region.validate(self.num_sites)?;
        let d = self.local_dim;
        let rows = d.pow(region.len() as u32);
        let cols = self.amplitudes.len() / rows;
        let in_region: Vec<bool> = (0..self.num_sites).map(|s| region.sites().contains(&s)).collect();
        let mut m = DMatrix::<C64>::zeros(rows, cols);
        let mut digits = vec![0usize; self.num_sites];
        for (i, &z) in self.amplitudes.iter().enumerate() {
            let mut rest = i;
            for s in (0..self.num_sites).rev() {
                digits[s] = rest % d;
                rest /= d;
            }
            let (mut r, mut c) = (0usize, 0usize);
            for s in 0..self.num_sites {
                if in_region[s] {
                    r = r * d + digits[s];
                } else {
                    c = c * d + digits[s];
                }
            }
            m[(r, c)] = z;
        }
        Ok(m)
    }

    /// `rho_A = tr_{complement} |psi><psi|`, with the default dimension cap.
    pub fn reduced_density_matrix(&self, region: &Region) -> StateResult<DMatrix<C64>> {
        self.reduced_density_matrix_capped(region, DEFAULT_RDM_CAP)
    }

    pub fn reduced_density_matrix_capped(&self, region: &Region, cap: usize) -> StateResult<DMatrix<C64>> {
        region.validate(self.num_sites)?;
        let dim = self.local_dim.pow(region.len() as u32);
        if dim > cap {
            return Err(StateError::RegionTooLarge { dim, cap });
        }
        let m = self.bipartition_matrix(region)?;
        Ok(&m * m.adjoint())
    }

    /// Reduced density matrix of whichever of `region` and its complement is
    /// smaller; both carry the same non-zero spectrum.
    fn smaller_side_rdm(&self, region: &Region) -> StateResult<DMatrix<C64>> {
        region.validate(self.num_sites)?;
        let complement = region.complement(self.num_sites);
        let side = if region.len() <= complement.len() { region } else { &complement };
        self.reduced_density_matrix(side)
    }

    /// Entanglement spectrum (eigenvalues of `rho_A`), floored at
    /// [`EIGEN_FLOOR`] and sorted in decreasing order.
    pub fn entanglement_spectrum(&self, region: &Region) -> StateResult<Vec<f64>> {
        let rho = self.smaller_side_rdm(region)?;
        let mut eig: Vec<f64> = rho
            .symmetric_eigenvalues()
            .iter()
            .map(|&x| if x < EIGEN_FLOOR { 0.0 } else { x })
            .collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        Ok(eig)
    }

    /// Rényi entropy in nats.
    pub fn renyi_entropy(&self, region: &Region, index: RenyiIndex) -> StateResult<f64> {
        let spectrum = self.entanglement_spectrum(region)?;
        Ok(entropy_of_spectrum(&spectrum, index))
    }

    /// `tr rho_A^2`.
    pub fn purity(&self, region: &Region) -> StateResult<f64> {
        region.validate(self.num_sites)?;
        let complement = region.complement(self.num_sites);
        let side = if region.len() <= complement.len() { region } else { &complement };
        let m = self.bipartition_matrix(side)?;
        // M = X + iY. Re(MM^dag) = [X Y][X Y]^T, Im(MM^dag) = [Y -X][X Y]^T.
        let (rows, cols) = m.shape();
        let g1 = DMatrix::<f64>::from_fn(rows, 2 * cols, |i, j| if j < cols { m[(i, j)].re } else { m[(i, j - cols)].im });
        let g2 = DMatrix::<f64>::from_fn(rows, 2 * cols, |i, j| if j < cols { m[(i, j)].im } else { -m[(i, j - cols)].re });
        let re = &g1 * g1.transpose();
        let im = &g2 * g1.transpose();
        Ok(re.norm_squared() + im.norm_squared())
    }
}

/// Rényi entropy of a probability vector (already floored).
pub fn entropy_of_spectrum(spectrum: &[f64], index: RenyiIndex) -> f64 {
    let positive = spectrum.iter().copied().filter(|&x| x > 0.0);
    match index {
        RenyiIndex::Order(0) => (positive.count() as f64).ln(),
        RenyiIndex::Order(1) | RenyiIndex::VonNeumann => -positive.map(|x| x * x.ln()).sum::<f64>(),
        RenyiIndex::Order(n) => {
            let s: f64 = positive.map(|x| x.powi(n as i32)).sum();
            s.ln() / (1.0 - n as f64)
        }
    }
}

fn checked_dim(local_dim: usize, num_sites: usize) -> StateResult<usize> {
    if local_dim < 2 || num_sites == 0 {
        return Err(StateError::InvalidChain { dim: local_dim, sites: num_sites });
    }
    local_dim
        .checked_pow(num_sites as u32)
        .filter(|&n| n <= 1 << 30)
        .ok_or(StateError::InvalidChain { dim: local_dim, sites: num_sites })
}

/// `max |(U^dagger U - 1)_{ij}|`.
pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{sample_haar_state, sample_haar_unitary, RandomStream};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> QuditState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        QuditState::from_amplitudes(2, 2, vec![c(s), c(0.0), c(0.0), c(s)]).unwrap()
    }

    fn random_state(sites: usize, dim: usize, seed: u64) -> QuditState {
        let mut rng = RandomStream::new(seed, 0).rng();
        let amps = sample_haar_state(dim.pow(sites as u32), &mut rng);
        QuditState::from_amplitudes(sites, dim, amps).unwrap()
    }

    #[test]
    fn product_states_put_weight_on_one_index() {
        let s = QuditState::product(1, 2, &[0]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0), c(0.0)]);
        assert_eq!(s.log_weight(), 0.0);
        let s = QuditState::product(2, 2, &[1, 0]).unwrap();
        assert_eq!(s.amplitudes()[2], c(1.0));
        assert_eq!(s.amplitudes().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let s = QuditState::product(3, 3, &[2, 2, 2]).unwrap();
        assert_eq!(s.amplitudes()[26], c(1.0));
    }

    #[test]
    fn product_state_rejects_bad_index() {
        assert_eq!(
            QuditState::product(2, 2, &[0, 2]),
            Err(StateError::BasisIndexOutOfRange { site: 1, value: 2, dim: 2 })
        );
    }

    #[test]
    fn identity_and_swap_gates() {
        let mut s = random_state(3, 2, 1);
        let before = s.clone();
        s.apply_two_site_gate(&DMatrix::identity(4, 4), 1).unwrap();
        assert_eq!(s, before);

        let mut swap = DMatrix::<C64>::zeros(4, 4);
        for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(r, col)] = c(1.0);
        }
        let mut s = QuditState::product(2, 2, &[1, 0]).unwrap();
        s.apply_two_site_gate(&swap, 0).unwrap();
        assert_eq!(s, QuditState::product(2, 2, &[0, 1]).unwrap());
    }

    #[test]
    fn gate_validation() {
        let mut s = QuditState::zeros(3, 2).unwrap();
        let g = DMatrix::<C64>::identity(4, 4) * c(2.0);
        assert!(matches!(s.apply_two_site_gate(&g, 0), Err(StateError::NonUnitary { .. })));
        assert!(matches!(
            s.apply_two_site_gate(&DMatrix::identity(4, 4), 2),
            Err(StateError::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            s.apply_two_site_gate(&DMatrix::identity(9, 9), 0),
            Err(StateError::GateShape { .. })
        ));
    }

    #[test]
    fn haar_gates_preserve_norm() {
        let mut rng = RandomStream::new(2, 2).rng();
        let mut s = QuditState::zeros(6, 3).unwrap();
        for layer in 0..20 {
            for left in ((layer % 2)..5).step_by(2) {
                s.apply_two_site_gate(&sample_haar_unitary(9, &mut rng), left).unwrap();
            }
        }
        assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn measuring_eigenstate_is_certain() {
        let mut rng = RandomStream::new(0, 0).rng();
        let mut s = QuditState::zeros(1, 2).unwrap();
        assert_eq!(s.measure_site(0, &mut rng).unwrap(), 0);
        assert_eq!(s.log_weight(), 0.0);
    }

    #[test]
    fn measuring_plus_state_adds_ln_half() {
        let s0 = QuditState::from_amplitudes(1, 2, vec![c(1.0), c(1.0)]).unwrap();
        let mut seen = [false; 2];
        for seed in 0..40 {
            let mut s = s0.clone();
            let k = s.measure_site(0, &mut RandomStream::new(seed, 0).rng()).unwrap();
            seen[k] = true;
            assert!((s.log_weight() - 0.5f64.ln()).abs() < 1e-14);
            assert!((s.norm() - 1.0).abs() < 1e-14);
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn forced_measurements() {
        let mut s = QuditState::zeros(1, 2).unwrap();
        assert_eq!(s.measure_site_forced(0, 1).unwrap(), Branch::Dead);
        assert_eq!(s, QuditState::zeros(1, 2).unwrap());
        assert_eq!(s.measure_site_forced(0, 0).unwrap(), Branch::Alive { log_prob: 0.0 });
        assert_eq!(s, QuditState::zeros(1, 2).unwrap());
    }

    #[test]
    fn forced_outcome_weights_are_complete() {
        let s = random_state(4, 3, 9);
        for site in 0..4 {
            let total: f64 = (0..3)
                .map(|k| {
                    let mut t = s.clone();
                    match t.measure_site_forced(site, k).unwrap() {
                        Branch::Alive { log_prob } => log_prob.exp(),
                        Branch::Dead => 0.0,
                    }
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rdm_of_product_state_is_rank_one_projector() {
        let s = QuditState::product(3, 2, &[1, 0, 1]).unwrap();
        let rho = s.reduced_density_matrix(&Region::new(vec![0, 2])).unwrap();
        let mut expected = DMatrix::<C64>::zeros(4, 4);
        expected[(3, 3)] = c(1.0);
        assert_eq!(rho, expected);
    }

    #[test]
    fn rdm_of_bell_pair_is_maximally_mixed() {
        let rho = bell().reduced_density_matrix(&Region::new(vec![0])).unwrap();
        assert!((rho - DMatrix::<C64>::identity(2, 2) * c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn rdm_is_hermitian_psd_unit_trace() {
        let s = random_state(5, 2, 3);
        let rho = s.reduced_density_matrix(&Region::new(vec![1, 3, 4])).unwrap();
        assert!((&rho - rho.adjoint()).norm() < 1e-12);
        assert!((rho.trace() - c(1.0)).norm() < 1e-10);
        assert!(rho.symmetric_eigenvalues().iter().all(|&x| x > -1e-10));
    }

    #[test]
    fn spectrum_matches_svd_of_amplitude_matrix() {
        // Oracle: singular values of the 4x4 amplitude matrix, built directly
        // from the row-major convention.
        let s = random_state(4, 2, 17);
        let m = DMatrix::from_fn(4, 4, |r, col| s.amplitudes()[4 * r + col]);
        let mut schmidt: Vec<f64> = m.singular_values().iter().map(|x| x * x).collect();
        schmidt.sort_by(|a, b| b.total_cmp(a));
        let spectrum = s.entanglement_spectrum(&Region::new(vec![0, 1])).unwrap();
        for (a, b) in schmidt.iter().zip(&spectrum) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn region_cap_and_validation() {
        let s = QuditState::zeros(4, 2).unwrap();
        assert_eq!(
            s.reduced_density_matrix_capped(&Region::interval(0, 3), 4),
            Err(StateError::RegionTooLarge { dim: 8, cap: 4 })
        );
        assert!(matches!(
            s.reduced_density_matrix(&Region::new(vec![2, 1])),
            Err(StateError::InvalidRegion { .. })
        ));
        assert!(matches!(
            s.purity(&Region::new(vec![4])),
            Err(StateError::InvalidRegion { .. })
        ));
    }

    #[test]
    fn entropies_of_simple_states() {
        let p = QuditState::product(3, 2, &[0, 1, 1]).unwrap();
        let a = Region::new(vec![0]);
        for idx in [RenyiIndex::Order(0), RenyiIndex::Order(2), RenyiIndex::Order(3), RenyiIndex::VonNeumann] {
            assert!(p.renyi_entropy(&a, idx).unwrap().abs() < 1e-14);
            assert!((bell().renyi_entropy(&a, idx).unwrap() - 2f64.ln()).abs() < 1e-12);
        }
        assert!((p.purity(&a).unwrap() - 1.0).abs() < 1e-14);
        assert!((bell().purity(&a).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn renyi_ordering_symmetry_and_purity_consistency() {
        for seed in 0..100 {
            let s = random_state(5, 2, 1000 + seed);
            let a = Region::new(vec![0, 2]);
            let b = a.complement(5);
            let s0 = s.renyi_entropy(&a, RenyiIndex::Order(0)).unwrap();
            let s1 = s.renyi_entropy(&a, RenyiIndex::VonNeumann).unwrap();
            let s2 = s.renyi_entropy(&a, RenyiIndex::Order(2)).unwrap();
            let s3 = s.renyi_entropy(&a, RenyiIndex::Order(3)).unwrap();
            assert!(s3 <= s2 + 1e-9 && s2 <= s1 + 1e-9 && s1 <= s0 + 1e-9);
            for idx in [RenyiIndex::Order(2), RenyiIndex::Order(3), RenyiIndex::VonNeumann] {
                let sa = s.renyi_entropy(&a, idx).unwrap();
                let sb = s.renyi_entropy(&b, idx).unwrap();
                assert!((sa - sb).abs() < 1e-9);
            }
            let pa = s.purity(&a).unwrap();
            assert!((pa - s.purity(&b).unwrap()).abs() < 1e-10);
            assert!((s2 + pa.ln()).abs() < 1e-10);
        }
    }
}
