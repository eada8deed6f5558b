//! Haar-random unitaries and states, and the Porter–Thomas check.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::{stats, C64};

#[derive(Debug, Error, PartialEq)]
pub enum HaarError {
    #[error("Born probability {value} at position {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// Address of an independent, reproducible random stream.
///
/// The stream is a ChaCha8 generator keyed by `seed` with its 64-bit stream
/// selector set to `stream_id`; identical addresses replay identical draws on
/// every platform. Child streams are derived by hashing, so a tree of
/// `(seed, path)` addresses never collides in practice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Independent child stream, e.g. one per trajectory index.
    pub fn child(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard complex Gaussian with `E|z|^2 = 1`.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random element of `U(dim)`.
///
/// Draws a complex Ginibre matrix, takes its QR decomposition and multiplies
/// each column of `Q` by the phase of the matching diagonal entry of `R`,
/// which removes the gauge freedom of the factorization.
pub fn sample_haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    assert!(dim >= 1, "Haar unitary needs dim >= 1");
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random unit vector in `C^dim`.
pub fn sample_haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    assert!(dim >= 1, "Haar state needs dim >= 1");
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Two Haar-random states conditioned to be orthogonal: the second state is
/// the normalized component of a fresh Haar vector orthogonal to the first.
pub fn sample_orthogonal_pair<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> (Vec<C64>, Vec<C64>) {
    assert!(dim >= 2, "an orthogonal pair needs dim >= 2");
    let first = sample_haar_state(dim, rng);
    let a = DVector::from_vec(first.clone());
    loop {
        let b = DVector::from_vec(sample_haar_state(dim, rng));
        let overlap = a.dotc(&b);
        let perp = &b - &a * overlap;
        let norm = perp.norm();
        if norm > 1e-8 {
            return (first, (perp / C64::new(norm, 0.0)).iter().copied().collect());
        }
    }
}

/// Kolmogorov–Smirnov distance between the empirical law of `dim * x` over
/// the Born probabilities `samples` and the unit exponential.
pub fn porter_thomas_ks(samples: &[f64], dim: usize) -> Result<f64, HaarError> {
    if dim == 0 {
        return Err(HaarError::ZeroDimension);
    }
    if let Some((index, &value)) = samples
        .iter()
        .enumerate()
        .find(|(_, &x)| !(0.0..=1.0).contains(&x))
    {
        return Err(HaarError::ProbabilityOutOfRange { index, value });
    }
    let scaled: Vec<f64> = samples.iter().map(|x| x * dim as f64).collect();
    Ok(stats::ks_statistic(&scaled, |y| 1.0 - (-y).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
        let n = u.nrows();
        let prod = u.adjoint() * u;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn dimension_one_is_a_phase() {
        let mut rng = RandomStream::new(1, 0).rng();
        let u = sample_haar_unitary(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let s = sample_haar_state(1, &mut rng);
        assert!((s[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unitary_to_machine_precision() {
        let mut rng = RandomStream::new(7, 3).rng();
        for dim in [2, 3, 4, 9, 16] {
            for _ in 0..20 {
                let u = sample_haar_unitary(dim, &mut rng);
                assert!(unitarity_defect(&u) < 1e-12, "dim {dim}");
            }
        }
    }

    #[test]
    fn streams_reproduce_bit_for_bit() {
        let s = RandomStream::new(42, 9);
        let a = sample_haar_unitary(4, &mut s.rng());
        let b = sample_haar_unitary(4, &mut s.rng());
        assert_eq!(a, b);
        let c = sample_haar_unitary(4, &mut s.child(1).rng());
        assert_ne!(a, c);
        assert_eq!(s.child(5), s.child(5));
        assert_ne!(s.child(5), s.child(6));
    }

    #[test]
    fn orthogonal_pair_is_orthonormal() {
        let mut rng = RandomStream::new(3, 3).rng();
        let (a, b) = sample_orthogonal_pair(16, &mut rng);
        let ov: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        assert!(ov.norm() < 1e-12);
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        assert!((nb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn component_weights_average_to_one_over_dim() {
        let mut rng = RandomStream::new(11, 0).rng();
        let dim = 8;
        let n = 4000;
        let mut acc = vec![0.0; dim];
        for _ in 0..n {
            for (a, z) in acc.iter_mut().zip(sample_haar_state(dim, &mut rng)) {
                *a += z.norm_sqr();
            }
        }
        // Var |z|^2 = (D-1)/(D^2 (D+1)) for a Haar state.
        let se = (((dim - 1) as f64) / ((dim * dim * (dim + 1)) as f64) / n as f64).sqrt();
        for a in acc {
            assert!((a / n as f64 - 1.0 / dim as f64).abs() < 5.0 * se);
        }
    }

    #[test]
    fn porter_thomas_rejects_bad_probabilities() {
        assert_eq!(
            porter_thomas_ks(&[0.1, 1.5], 4),
            Err(HaarError::ProbabilityOutOfRange { index: 1, value: 1.5 })
        );
    }

    #[test]
    fn porter_thomas_constant_samples() {
        // All mass at y = 1: the step jumps from 0 to 1 where the exponential
        // CDF equals 1 - 1/e, so the distance is max(1 - 1/e, 1/e).
        let d = 64;
        let samples = vec![1.0 / d as f64; 1000];
        let ks = porter_thomas_ks(&samples, d).unwrap();
        let expected = (1.0 - (-1.0f64).exp()).max((-1.0f64).exp());
        assert!((ks - expected).abs() < 1e-12);
    }

    #[test]
    fn porter_thomas_self_test_shrinks() {
        use rand_distr::{Distribution, Exp1};
        let mut rng = RandomStream::new(5, 5).rng();
        let d = 100;
        let mut last = f64::INFINITY;
        for n in [100, 10_000, 200_000] {
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    let y: f64 = Exp1.sample(&mut rng);
                    (y / d as f64).min(1.0)
                })
                .collect();
            let ks = porter_thomas_ks(&xs, d).unwrap();
            assert!(ks < 2.0 / (n as f64).sqrt() + 1e-3);
            assert!(ks < last || n == 100);
            last = ks;
        }
    }
}
