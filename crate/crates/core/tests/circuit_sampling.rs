use std::collections::HashMap;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use monitor_lab::circuit::{
    enumerate_branches, entanglement_growth_curve, replay_outcomes, run_realization, CircuitRealization, CircuitSpec, MeasurementLayout,
};
use monitor_lab::haar::RandomStream;
use monitor_lab::qstate::{QuditState, Region, RenyiIndex};

fn page_entropy(m: usize, n: usize) -> f64 {
    // m <= n
    let tail: f64 = (n + 1..=m * n).map(|k| 1.0 / k as f64).sum();
    tail - (m as f64 - 1.0) / (2.0 * n as f64)
}

#[test]
fn born_sampler_matches_enumeration() {
    let spec = CircuitSpec::new(4, 2, 2, 0.0, RandomStream::new(21, 0), RandomStream::new(21, 1)).unwrap();
    let layout = MeasurementLayout::from_positions(4, 4, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 2)]).unwrap();
    let real = CircuitRealization::with_layout(&spec, layout).unwrap();
    let initial = QuditState::zeros(4, 2).unwrap();
    let branches = enumerate_branches(&real, &initial).unwrap();
    let total: f64 = branches.iter().map(|b| b.born_prob).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let draws = 20_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut rng = RandomStream::new(21, 2).rng();
    for _ in 0..draws {
        let run = run_realization(&real, &initial, 0, &mut rng, |_, _| {}).unwrap();
        *counts.entry(run.record.outcomes()).or_default() += 1;
    }
    let mut chi2 = 0.0;
    let mut cells = 0;
    for b in &branches {
        let expected = b.born_prob * draws as f64;
        let seen = counts.remove(&b.record.outcomes()).unwrap_or(0) as f64;
        if expected >= 5.0 {
            chi2 += (seen - expected).powi(2) / expected;
            cells += 1;
        }
    }
    // The sampler never produces a record outside the enumeration.
    assert!(counts.is_empty());
    let p_value = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
    assert!(p_value > 1e-3, "chi2 {chi2} on {cells} cells, p = {p_value}");
}

#[test]
fn replay_agrees_with_enumerated_branches() {
    let spec = CircuitSpec::new(3, 3, 2, 0.4, RandomStream::new(22, 0), RandomStream::new(22, 1)).unwrap();
    let real = CircuitRealization::sample(&spec).unwrap();
    let initial = QuditState::zeros(3, 3).unwrap();
    for b in enumerate_branches(&real, &initial).unwrap() {
        let state = replay_outcomes(&real, &initial, 0, &b.record).unwrap().unwrap();
        assert!((state.log_weight().exp() - b.born_prob).abs() < 1e-12);
        let overlap: f64 = state.amplitudes().iter().zip(b.final_state.amplitudes()).map(|(x, y)| (x.conj() * y).re).sum();
        assert!((overlap - 1.0).abs() < 1e-10);
    }
}

#[test]
fn unitary_entanglement_saturates_at_page_value() {
    let sites = 8;
    let spec = CircuitSpec::new(sites, 2, 16, 0.0, RandomStream::new(23, 0), RandomStream::new(23, 1)).unwrap();
    let curve = entanglement_growth_curve(&spec, &Region::interval(0, 4), RenyiIndex::VonNeumann, 100, RandomStream::new(23, 2)).unwrap();
    let page = page_entropy(16, 16);
    let late = curve.last().unwrap().estimate;
    assert!((late.mean - page).abs() < 4.0 * late.stderr + 0.01, "{late:?} vs {page}");
    assert!(curve[0].estimate.mean.abs() < 1e-12);
    assert!(curve[1].estimate.mean < curve[2].estimate.mean);
}

#[test]
fn measurements_lower_late_time_entanglement() {
    let region = Region::interval(0, 4);
    let mut last = f64::INFINITY;
    for (i, p) in [0.0, 0.2, 0.6].into_iter().enumerate() {
        let spec = CircuitSpec::new(8, 2, 8, p, RandomStream::new(24, i as u64), RandomStream::new(25, i as u64)).unwrap();
        let curve = entanglement_growth_curve(&spec, &region, RenyiIndex::Order(2), 60, RandomStream::new(26, i as u64)).unwrap();
        let late = curve.last().unwrap().estimate.mean;
        assert!(late < last);
        last = late;
    }
}

#[test]
fn runs_are_reproducible() {
    let spec = CircuitSpec::new(6, 2, 4, 0.3, RandomStream::new(27, 0), RandomStream::new(27, 1)).unwrap();
    let region = Region::interval(0, 3);
    let a = entanglement_growth_curve(&spec, &region, RenyiIndex::Order(2), 20, RandomStream::new(27, 2)).unwrap();
    let b = entanglement_growth_curve(&spec, &region, RenyiIndex::Order(2), 20, RandomStream::new(27, 2)).unwrap();
    assert_eq!(a, b);
}
