use monitor_lab::circuit::{CircuitSpec, InitialPair};
use monitor_lab::haar::{sample_haar_state, RandomStream};
use monitor_lab::learn::{accuracy_curve, monitored_games, single_shot_games, DepthRule, GameStats};
use monitor_lab::stats::MeanEstimate;

#[test]
fn posterior_is_calibrated() {
    let games = single_shot_games(64, 100_000, RandomStream::new(41, 0)).unwrap();
    // Calibration: among games where the truth got credence c, the truth is
    // hypothesis 0 with frequency matching the posterior of hypothesis 0.
    let mut bins = vec![(0usize, 0usize, 0.0f64); 10];
    for g in &games {
        let post0 = if g.truth == 0 { g.posterior_correct } else { 1.0 - g.posterior_correct };
        let b = ((post0 * 10.0) as usize).min(9);
        bins[b].0 += 1;
        bins[b].1 += usize::from(g.truth == 0);
        bins[b].2 += post0;
    }
    for &(n, hits, sum) in &bins {
        if n < 50 {
            continue;
        }
        let c = sum / n as f64;
        let freq = hits as f64 / n as f64;
        let se = (c * (1.0 - c) / n as f64).sqrt();
        assert!((freq - c).abs() < 4.0 * se + 1e-3, "bin n={n} freq {freq} vs {c}");
    }
    assert!(bins.iter().map(|b| b.0).sum::<usize>() == games.len());
}

#[test]
fn labels_are_symmetric() {
    let games = single_shot_games(32, 40_000, RandomStream::new(42, 0)).unwrap();
    let split = |t: usize| -> Vec<f64> { games.iter().filter(|g| g.truth == t).map(|g| f64::from(u8::from(g.correct))).collect() };
    let (a, b) = (MeanEstimate::from_samples(&split(0)), MeanEstimate::from_samples(&split(1)));
    assert!((a.mean - b.mean).abs() < 4.0 * a.stderr.hypot(b.stderr));
    assert!((a.count as f64 / games.len() as f64 - 0.5).abs() < 0.01);
}

#[test]
fn small_dimension_matches_direct_integration() {
    let dim = 4;
    let games = GameStats::from_results(&single_shot_games(dim, 100_000, RandomStream::new(43, 0)).unwrap());
    let mut rng = RandomStream::new(43, 1).rng();
    let oracle: Vec<f64> = (0..200_000)
        .map(|_| {
            let (x, y) = (sample_haar_state(dim, &mut rng), sample_haar_state(dim, &mut rng));
            0.5 * x.iter().zip(&y).map(|(a, b)| a.norm_sqr().max(b.norm_sqr())).sum::<f64>()
        })
        .collect();
    let oracle = MeanEstimate::from_samples(&oracle);
    let gap = (games.accuracy.mean - oracle.mean).abs();
    assert!(gap < 4.0 * games.accuracy.stderr.hypot(oracle.stderr), "{games:?} vs {oracle:?}");
}

#[test]
fn accuracy_rises_with_measurement_rate() {
    let rates = [0.05, 0.25, 0.5, 0.75, 0.95];
    let rows = accuracy_curve(&[8], &rates, DepthRule::TimesSites(2), 2, InitialPair::HaarOrthogonal, 800, RandomStream::new(44, 0)).unwrap();
    for w in rows.windows(2) {
        let (a, b) = (w[0].stats.accuracy, w[1].stats.accuracy);
        assert!(b.mean >= a.mean - 3.0 * a.stderr.hypot(b.stderr), "{rows:?}");
    }
    for r in &rows {
        assert!(r.stats.accuracy.mean >= 0.5 - 3.0 * r.stats.accuracy.stderr);
        assert_eq!(r.depth, 16);
    }
    assert!(rows[4].stats.accuracy.mean > rows[0].stats.accuracy.mean);
}

#[test]
fn unmonitored_column_sits_at_one_half() {
    let rows = accuracy_curve(&[4, 6, 8], &[0.0], DepthRule::Fixed(4), 2, InitialPair::HaarOrthogonal, 600, RandomStream::new(45, 0)).unwrap();
    for r in &rows {
        assert!(r.stats.accuracy.within(0.5, 3.0), "{r:?}");
        assert_eq!(r.stats.credence.mean, 0.5);
    }
}

#[test]
fn games_are_reproducible() {
    let spec = CircuitSpec::new(5, 2, 3, 0.4, RandomStream::new(46, 0), RandomStream::new(46, 1)).unwrap();
    let a = monitored_games(&spec, InitialPair::HaarOrthogonal, 30, RandomStream::new(46, 2)).unwrap();
    let b = monitored_games(&spec, InitialPair::HaarOrthogonal, 30, RandomStream::new(46, 2)).unwrap();
    assert_eq!(a, b);
}
