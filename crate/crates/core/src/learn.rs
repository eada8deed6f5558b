//! Bayesian discrimination games between two hypothesis states.
//!
//! An observer is told that the system started in `|psi>` or `|phi>` with
//! equal prior odds, sees measurement outcomes, and guesses the hypothesis
//! with the larger likelihood. The posterior of the true hypothesis measures
//! how much the outcomes revealed.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{replay_outcomes, run_realization, CircuitError, CircuitRealization, CircuitSpec, InitialPair};
use crate::haar::{sample_haar_state, RandomStream};
use crate::qstate::{QuditState, StateError};
use crate::stats::MeanEstimate;
use crate::C64;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("hypothesis states have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("empty hypothesis state")]
    Empty,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Outcome of one game. Hypothesis 0 is `psi`, 1 is `phi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameResult {
    pub truth: usize,
    pub correct: bool,
    /// Posterior probability assigned to the true hypothesis.
    pub posterior_correct: f64,
    /// `(ln p(m | psi), ln p(m | phi))`; `-inf` for an impossible record.
    pub log_likelihoods: (f64, f64),
    /// The record is impossible under the false hypothesis.
    pub dead_branch: bool,
}

/// Bayes rule with equal priors, plus the max-likelihood guess (ties broken
/// by a fair coin from `rng`).
fn decide<R: Rng + ?Sized>(truth: usize, log_likelihoods: (f64, f64), rng: &mut R) -> GameResult {
    let (l0, l1) = log_likelihoods;
    let l_truth = if truth == 0 { l0 } else { l1 };
    let dead_branch = (if truth == 0 { l1 } else { l0 }) == f64::NEG_INFINITY;
    let l_other = if truth == 0 { l1 } else { l0 };
    let posterior_correct = 1.0 / (1.0 + (l_other - l_truth).exp());
    let guess = if l0 > l1 {
        0
    } else if l1 > l0 {
        1
    } else {
        usize::from(rng.random::<bool>())
    };
    GameResult { truth, correct: guess == truth, posterior_correct, log_likelihoods, dead_branch }
}

/// Single computational-basis measurement on one of two given states.
pub fn single_shot_game_with<R: Rng + ?Sized>(psi: &[C64], phi: &[C64], rng: &mut R) -> Result<GameResult, LearnError> {
    if psi.len() != phi.len() {
        return Err(LearnError::LengthMismatch(psi.len(), phi.len()));
    }
    if psi.is_empty() {
        return Err(LearnError::Empty);
    }
    let truth = usize::from(rng.random::<bool>());
    let state = if truth == 0 { psi } else { phi };
    let total: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    let mut target = rng.random::<f64>() * total;
    let mut outcome = state.len() - 1;
    for (m, z) in state.iter().enumerate() {
        let w = z.norm_sqr();
        if target < w {
            outcome = m;
            break;
        }
        target -= w;
    }
    let ll = (psi[outcome].norm_sqr().ln(), phi[outcome].norm_sqr().ln());
    Ok(decide(truth, ll, rng))
}

/// The single-shot game between two independent Haar states of `C^dim`.
pub fn single_shot_game<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<GameResult, LearnError> {
    if dim == 0 {
        return Err(LearnError::Empty);
    }
    let psi = sample_haar_state(dim, rng);
    let phi = sample_haar_state(dim, rng);
    single_shot_game_with(&psi, &phi, rng)
}

/// Monitored game: the circuit of `spec` runs on the true initial state with
/// Born-sampled outcomes; the other hypothesis is replayed along the same
/// record.
pub fn monitored_game<R: Rng + ?Sized>(spec: &CircuitSpec, pair: InitialPair, rng: &mut R) -> Result<GameResult, LearnError> {
    let realization = CircuitRealization::sample(spec)?;
    let (psi, phi) = pair.sample(spec.sites, spec.local_dim, rng);
    let states = [
        QuditState::from_amplitudes(spec.sites, spec.local_dim, psi)?,
        QuditState::from_amplitudes(spec.sites, spec.local_dim, phi)?,
    ];
    monitored_game_with(&realization, &states, rng)
}

/// Monitored game on a frozen realization with explicit hypothesis states.
pub fn monitored_game_with<R: Rng + ?Sized>(realization: &CircuitRealization, states: &[QuditState; 2], rng: &mut R) -> Result<GameResult, LearnError> {
    let truth = usize::from(rng.random::<bool>());
    let run = run_realization(realization, &states[truth], 0, rng, |_, _| {})?;
    let other = replay_outcomes(realization, &states[1 - truth], 0, &run.record)?;
    let l_other = other.map_or(f64::NEG_INFINITY, |s| s.log_weight() - states[1 - truth].log_weight());
    let ll = if truth == 0 { (run.log_born, l_other) } else { (l_other, run.log_born) };
    Ok(decide(truth, ll, rng))
}

/// Summary of many games.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameStats {
    pub accuracy: MeanEstimate,
    pub credence: MeanEstimate,
    pub dead_branches: usize,
}

impl GameStats {
    pub fn from_results(results: &[GameResult]) -> Self {
        let correct: Vec<f64> = results.iter().map(|r| f64::from(u8::from(r.correct))).collect();
        let posterior: Vec<f64> = results.iter().map(|r| r.posterior_correct).collect();
        Self {
            accuracy: MeanEstimate::from_samples(&correct),
            credence: MeanEstimate::from_samples(&posterior),
            dead_branches: results.iter().filter(|r| r.dead_branch).count(),
        }
    }
}

/// `num_games` single-shot games at dimension `dim`, game `g` on
/// `stream.child(g)`.
pub fn single_shot_games(dim: usize, num_games: usize, stream: RandomStream) -> Result<Vec<GameResult>, LearnError> {
    (0..num_games as u64).into_par_iter().map(|g| single_shot_game(dim, &mut stream.child(g).rng())).collect()
}

/// `num_games` monitored games, each on an independent circuit
/// `spec.child(g)` with game randomness from `stream.child(g)`.
pub fn monitored_games(spec: &CircuitSpec, pair: InitialPair, num_games: usize, stream: RandomStream) -> Result<Vec<GameResult>, LearnError> {
    spec.validate()?;
    (0..num_games as u64)
        .into_par_iter()
        .map(|g| monitored_game(&spec.child(g), pair, &mut stream.child(g).rng()))
        .collect()
}

/// Circuit depth as a function of the chain length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepthRule {
    Fixed(usize),
    /// `depth = factor * L`.
    TimesSites(usize),
}

impl DepthRule {
    pub fn depth(&self, sites: usize) -> usize {
        match *self {
            DepthRule::Fixed(t) => t,
            DepthRule::TimesSites(f) => f * sites,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccuracyRow {
    pub sites: usize,
    pub p: f64,
    pub depth: usize,
    pub stats: GameStats,
}

/// Accuracy and credence of the monitored game over an `(L, p)` grid.
#[allow(clippy::too_many_arguments)]
pub fn accuracy_curve(
    sizes: &[usize],
    rates: &[f64],
    depth_rule: DepthRule,
    local_dim: usize,
    pair: InitialPair,
    num_games: usize,
    stream: RandomStream,
) -> Result<Vec<AccuracyRow>, LearnError> {
    let mut rows = Vec::with_capacity(sizes.len() * rates.len());
    for (i, &sites) in sizes.iter().enumerate() {
        for (j, &p) in rates.iter().enumerate() {
            let point = stream.child((i * rates.len() + j) as u64);
            let depth = depth_rule.depth(sites);
            let spec = CircuitSpec::new(sites, local_dim, depth, p, point.child(0), point.child(1))?;
            let results = monitored_games(&spec, pair, num_games, point.child(2))?;
            rows.push(AccuracyRow { sites, p, depth, stats: GameStats::from_results(&results) });
        }
    }
    Ok(rows)
}
