//! Small statistical toolbox shared by the Monte-Carlo estimators.
//!
//! All reductions go through [`pairwise_sum`] over samples kept in a fixed
//! (sample-index) order, which makes every estimate independent of how the
//! samples were scheduled across threads.

/// Pairwise (cascade) summation. Deterministic for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Mean together with its standard error and the sample count, which is
/// enough to recombine or recompute error bars downstream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub count: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    /// Mean with its jackknife standard error.
    pub fn from_samples(values: &[f64]) -> Self {
        jackknife_mean(values)
    }

    /// `|self - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Delete-one jackknife: returns the full-sample estimate and the jackknife
/// standard error of `estimator`. O(n^2); use [`jackknife_mean`] for means.
pub fn jackknife<F>(values: &[f64], estimator: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = values.len();
    let full = estimator(values);
    if n < 2 {
        return (full, f64::NAN);
    }
    let mut buf = Vec::with_capacity(n - 1);
    let loo: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.extend_from_slice(&values[..i]);
            buf.extend_from_slice(&values[i + 1..]);
            estimator(&buf)
        })
        .collect();
    let loo_mean = mean(&loo);
    let dev: Vec<f64> = loo.iter().map(|x| (x - loo_mean).powi(2)).collect();
    let var = (n as f64 - 1.0) / n as f64 * pairwise_sum(&dev);
    (full, var.sqrt())
}

/// Jackknife error of the sample mean, in closed form (leave-one-out means
/// are affine in the deleted value, so this equals `s / sqrt(n)`).
pub fn jackknife_mean(values: &[f64]) -> MeanEstimate {
    let n = values.len();
    let m = mean(values);
    if n < 2 {
        return MeanEstimate { count: n, mean: m, stderr: f64::NAN };
    }
    let dev: Vec<f64> = values.iter().map(|x| (x - m).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n as f64 - 1.0);
    MeanEstimate { count: n, mean: m, stderr: (var / n as f64).sqrt() }
}

/// One-sample Kolmogorov–Smirnov distance between the empirical distribution
/// of `samples` and the continuous CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Ordinary least-squares line.
#[derive(Clone, Copy, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept, r_squared }
}

/// `ln(e^a + e^b)` without overflow; handles `-inf` arguments.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
