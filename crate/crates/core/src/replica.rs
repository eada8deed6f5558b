//! Permutation-group algebra behind the replica statistical mechanics:
//! cycle counting, permutation-state overlaps, Weingarten functions and the
//! Haar moment projector.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Largest replica count supported.
pub const MAX_REPLICAS: usize = 6;

/// Largest operator dimension `D^(2Q)` materialized by
/// [`haar_moment_projector`].
pub const PROJECTOR_DIM_CAP: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum ReplicaError {
    #[error("replica count {0} outside 1..={MAX_REPLICAS}")]
    ReplicaCount(usize),
    #[error("images do not form a permutation of 0..{0}")]
    NotBijective(usize),
    #[error("Gram matrix is singular for Q = {q}, D = {dim} (need D >= Q)")]
    SingularGram { q: usize, dim: u64 },
    #[error("projector dimension {dim} exceeds cap {cap}")]
    ProjectorTooLarge { dim: u128, cap: usize },
    #[error("permutations of different degree: {0} vs {1}")]
    DegreeMismatch(usize, usize),
}

/// Element of `S_Q` in one-line notation: `i -> images[i]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: [u8; MAX_REPLICAS],
    q: u8,
}

impl Permutation {
    pub fn identity(q: usize) -> Self {
        assert!((1..=MAX_REPLICAS).contains(&q), "replica count {q} unsupported");
        let mut images = [0u8; MAX_REPLICAS];
        for (i, x) in images.iter_mut().enumerate() {
            *x = i as u8;
        }
        Self { images, q: q as u8 }
    }

    pub fn from_images(images: &[usize]) -> Result<Self, ReplicaError> {
        let q = images.len();
        if !(1..=MAX_REPLICAS).contains(&q) {
            return Err(ReplicaError::ReplicaCount(q));
        }
        let mut seen = [false; MAX_REPLICAS];
        let mut out = Self::identity(q);
        for (i, &x) in images.iter().enumerate() {
            if x >= q || seen[x] {
                return Err(ReplicaError::NotBijective(q));
            }
            seen[x] = true;
            out.images[i] = x as u8;
        }
        Ok(out)
    }

    /// Transposition of replicas `a` and `b`.
    pub fn transposition(q: usize, a: usize, b: usize) -> Self {
        let mut g = Self::identity(q);
        g.images.swap(a, b);
        g
    }

    /// `(1 2 ... n)^{⊗k}`: `k` disjoint `n`-cycles on consecutive blocks,
    /// optionally followed by one extra fixed replica.
    pub fn cyclic_power(n: usize, k: usize, born_replica: bool) -> Result<Self, ReplicaError> {
        let q = n * k + usize::from(born_replica);
        if !(1..=MAX_REPLICAS).contains(&q) || n == 0 {
            return Err(ReplicaError::ReplicaCount(q));
        }
        let mut g = Self::identity(q);
        for block in 0..k {
            for r in 0..n {
                g.images[block * n + r] = (block * n + (r + 1) % n) as u8;
            }
        }
        Ok(g)
    }

    pub fn q(&self) -> usize {
        self.q as usize
    }

    pub fn images(&self) -> &[u8] {
        &self.images[..self.q()]
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    /// `self ∘ other`, i.e. `i -> self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.q, other.q, "composing permutations of different degree");
        let mut out = *self;
        for i in 0..self.q() {
            out.images[i] = self.images[other.images[i] as usize];
        }
        out
    }

    pub fn inverse(&self) -> Self {
        let mut out = *self;
        for i in 0..self.q() {
            out.images[self.images[i] as usize] = i as u8;
        }
        out
    }

    /// `g^{-1} h`.
    pub fn relative(&self, other: &Self) -> Self {
        self.inverse().compose(other)
    }

    pub fn is_identity(&self) -> bool {
        self.images().iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    /// Number of cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        self.cycle_type().len()
    }

    /// Cycle lengths in decreasing order; labels the conjugacy class.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = [false; MAX_REPLICAS];
        let mut lengths = Vec::new();
        for start in 0..self.q() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.apply(i);
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }
}

/// `<g|h> = d^{C(g^{-1} h)}`.
pub fn perm_overlap(g: &Permutation, h: &Permutation, d: u64) -> u64 {
    d.pow(g.relative(h).cycle_count() as u32)
}

/// All of `S_Q` in lexicographic order, with cached products, inverses,
/// cycle counts and conjugacy classes. Element 0 is the identity.
#[derive(Clone, Debug)]
pub struct SymmetricGroup {
    q: usize,
    elements: Vec<Permutation>,
    mul: Vec<u16>,
    inv: Vec<u16>,
    cycles: Vec<u8>,
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl SymmetricGroup {
    pub fn new(q: usize) -> Result<Self, ReplicaError> {
        if !(1..=MAX_REPLICAS).contains(&q) {
            return Err(ReplicaError::ReplicaCount(q));
        }
        let mut elements = Vec::new();
        let mut current: Vec<usize> = (0..q).collect();
        loop {
            elements.push(Permutation::from_images(&current)?);
            if !next_permutation(&mut current) {
                break;
            }
        }
        let r = elements.len();
        let mut group = Self {
            q,
            elements,
            mul: vec![0; r * r],
            inv: vec![0; r],
            cycles: vec![0; r],
            class_of: vec![0; r],
            classes: Vec::new(),
        };
        let mut class_index: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for i in 0..r {
            let g = group.elements[i];
            for j in 0..r {
                group.mul[i * r + j] = group.index_of(&g.compose(&group.elements[j])) as u16;
            }
            group.inv[i] = group.index_of(&g.inverse()) as u16;
            group.cycles[i] = g.cycle_count() as u8;
        }
        // Classes numbered by decreasing cycle type, so the identity class is 0.
        let mut types: Vec<Vec<usize>> = group.elements.iter().map(|g| g.cycle_type()).collect();
        let mut distinct = types.clone();
        distinct.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        distinct.dedup();
        for (c, t) in distinct.iter().enumerate() {
            class_index.insert(t.clone(), c);
        }
        group.classes = distinct;
        for (i, t) in types.drain(..).enumerate() {
            group.class_of[i] = class_index[&t];
        }
        Ok(group)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> Permutation {
        self.elements[i]
    }

    /// Lexicographic rank (Lehmer code).
    pub fn index_of(&self, g: &Permutation) -> usize {
        assert_eq!(g.q(), self.q);
        let imgs = g.images();
        let mut rank = 0;
        for i in 0..self.q {
            let smaller_later = imgs[i + 1..].iter().filter(|&&x| x < imgs[i]).count();
            rank = rank * (self.q - i) + smaller_later;
        }
        rank
    }

    /// Index of `e_i ∘ e_j`.
    pub fn mul(&self, i: usize, j: usize) -> usize {
        self.mul[i * self.order() + j] as usize
    }

    pub fn inv(&self, i: usize) -> usize {
        self.inv[i] as usize
    }

    /// Index of `e_i^{-1} e_j`.
    pub fn relative(&self, i: usize, j: usize) -> usize {
        self.mul(self.inv(i), j)
    }

    pub fn cycle_count(&self, i: usize) -> usize {
        self.cycles[i] as usize
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    /// Cycle types of the conjugacy classes, identity class first.
    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Weingarten function `Wg_D` on `S_Q`, stored exactly per conjugacy class.
#[derive(Clone, Debug)]
pub struct WeingartenTable {
    q: usize,
    dim: u64,
    group: SymmetricGroup,
    exact: Vec<BigRational>,
    values: Vec<f64>,
}

impl WeingartenTable {
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn group(&self) -> &SymmetricGroup {
        &self.group
    }

    pub fn exact(&self, g: &Permutation) -> &BigRational {
        &self.exact[self.group.class_of(self.group.index_of(g))]
    }

    pub fn value(&self, g: &Permutation) -> f64 {
        self.values[self.group.class_of(self.group.index_of(g))]
    }

    /// Value for the group element with index `i`.
    pub fn value_at(&self, i: usize) -> f64 {
        self.values[self.group.class_of(i)]
    }

    pub fn exact_at(&self, i: usize) -> &BigRational {
        &self.exact[self.group.class_of(i)]
    }

    /// `(cycle type, value)` for every class, identity class first.
    pub fn class_values(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.group.classes().iter().map(Vec::as_slice).zip(self.values.iter().copied())
    }
}

/// Solves `sum_h Wg(g^{-1} h) D^{C(h)} = delta_{g,e}` exactly, using that
/// `Wg` is a class function (one unknown per conjugacy class).
pub fn weingarten_table(q: usize, dim: u64) -> Result<WeingartenTable, ReplicaError> {
    let group = SymmetricGroup::new(q)?;
    if dim < q as u64 {
        return Err(ReplicaError::SingularGram { q, dim });
    }
    let nc = group.classes().len();
    let r = group.order();
    let d = BigInt::from(dim);
    let powers: Vec<BigInt> = (0..=q).map(|c| num_traits::pow(d.clone(), c)).collect();

    let mut reps = vec![usize::MAX; nc];
    for i in 0..r {
        let c = group.class_of(i);
        if reps[c] == usize::MAX {
            reps[c] = i;
        }
    }
    let mut a = vec![vec![BigRational::zero(); nc + 1]; nc];
    for (row, &g) in reps.iter().enumerate() {
        for h in 0..r {
            let c = group.class_of(group.relative(g, h));
            a[row][c] += BigRational::from_integer(powers[group.cycle_count(h)].clone());
        }
        if row == 0 {
            a[row][nc] = BigRational::one();
        }
    }
    let exact = solve_exact(a).ok_or(ReplicaError::SingularGram { q, dim })?;
    let values = exact.iter().map(rational_to_f64).collect();
    Ok(WeingartenTable { q, dim, group, exact, values })
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN))
}

/// Gauss–Jordan elimination on an augmented matrix over the rationals.
fn solve_exact(mut a: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x /= p.clone();
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    let delta = a[col][c].clone() * f.clone();
                    a[r][c] -= delta;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}

/// Explicit `E_U (U ⊗ U*)^{⊗Q}` for `U` Haar on `U(D)`.
///
/// Basis index digits are `(a_1, b_1, a_2, b_2, ..., a_Q, b_Q)`, most
/// significant first, with `a_r` the row index of the r-th `U` and `b_r` that
/// of the r-th `U*`. The permutation state `|g>` has unit entries where
/// `b_r = a_{g(r)}` for all `r`.
pub fn haar_moment_projector(q: usize, dim: usize) -> Result<DMatrix<f64>, ReplicaError> {
    let total = (dim as u128).checked_pow(2 * q as u32).unwrap_or(u128::MAX);
    if total > PROJECTOR_DIM_CAP as u128 {
        return Err(ReplicaError::ProjectorTooLarge { dim: total, cap: PROJECTOR_DIM_CAP });
    }
    let wg = weingarten_table(q, dim as u64)?;
    let group = wg.group();
    let supports: Vec<Vec<usize>> = group.elements().iter().map(|g| permutation_state_support(g, dim)).collect();
    let n = total as usize;
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in 0..group.order() {
        for j in 0..group.order() {
            let c = wg.value_at(group.relative(i, j));
            for &row in &supports[i] {
                for &col in &supports[j] {
                    p[(row, col)] += c;
                }
            }
        }
    }
    Ok(p)
}

/// Indices carrying a one in `|g>` (see [`haar_moment_projector`]).
pub fn permutation_state_support(g: &Permutation, dim: usize) -> Vec<usize> {
    let q = g.q();
    let count = dim.pow(q as u32);
    let mut out = Vec::with_capacity(count);
    let mut a = vec![0usize; q];
    for mut code in 0..count {
        for r in (0..q).rev() {
            a[r] = code % dim;
            code /= dim;
        }
        let mut index = 0;
        for r in 0..q {
            index = (index * dim + a[r]) * dim + a[g.apply(r)];
        }
        out.push(index);
    }
    out
}
