//! Simulated annealing with a geometric cooling schedule.
//!
//! The engine is generic over the state type. Callers supply a scorer with
//! its optimization [`Direction`] and a neighbor sampler; the engine runs the
//! Metropolis loop and returns the best state it ever visited.

use std::io::Write;

use rand::Rng;

use crate::aggregation::{Direction, SearchSpace};
use crate::chord::ChordId;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, RNG_ALGORITHM};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealingConfig {
    pub iterations: usize,
    pub t_initial: f64,
    pub cooling: f64,
    pub seed: u64,
}

impl Default for AnnealingConfig {
    fn default() -> Self {
        AnnealingConfig {
            iterations: 1000,
            t_initial: 1.0,
            cooling: 0.995,
            seed: 0,
        }
    }
}

impl AnnealingConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        AnnealingConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("annealing needs at least one iteration".into()));
        }
        if !(self.t_initial > 0.0 && self.t_initial.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "initial temperature must be positive, got {}",
                self.t_initial
            )));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling
            )));
        }
        Ok(())
    }
}

/// Per-iteration record of one annealing run. Scores are in the objective's
/// own direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchTrace {
    pub direction: Direction,
    pub rng_algorithm: &'static str,
    pub seed: u64,
    pub initial_score: f64,
    pub current_scores: Vec<f64>,
    pub best_scores: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub accepted: usize,
}

impl SearchTrace {
    pub fn best_score(&self) -> f64 {
        self.best_scores.last().copied().unwrap_or(self.initial_score)
    }

    /// True when the best-so-far sequence never got worse.
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_score;
        self.best_scores.iter().all(|&b| {
            let ok = !self.direction.better(prev, b);
            prev = b;
            ok
        })
    }

    /// `iteration,current_score,best_score,temperature`, one row per step.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["iteration", "current_score", "best_score", "temperature"])?;
        for (i, ((cur, best), t)) in self
            .current_scores
            .iter()
            .zip(&self.best_scores)
            .zip(&self.temperatures)
            .enumerate()
        {
            writer.write_record([
                (i + 1).to_string(),
                cur.to_string(),
                best.to_string(),
                t.to_string(),
            ])?;
        }
        writer.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Runs annealing seeded from `config.seed`.
pub fn anneal<S, F, N>(
    initial: S,
    direction: Direction,
    score: F,
    neighbor: N,
    config: &AnnealingConfig,
) -> (S, SearchTrace)
where
    S: Clone,
    F: FnMut(&S) -> f64,
    N: FnMut(&S, &mut crate::rng::SimRng) -> S,
{
    let mut rng = rng_from_seed(config.seed);
    anneal_with_rng(initial, direction, score, neighbor, config, &mut rng)
}

/// Metropolis loop: improving moves are always taken, a move that worsens
/// the cost by `delta` is taken with probability `exp(-delta / T)`, and `T`
/// shrinks by `config.cooling` after every iteration.
pub fn anneal_with_rng<S, F, N, R>(
    initial: S,
    direction: Direction,
    mut score: F,
    mut neighbor: N,
    config: &AnnealingConfig,
    rng: &mut R,
) -> (S, SearchTrace)
where
    S: Clone,
    F: FnMut(&S) -> f64,
    N: FnMut(&S, &mut R) -> S,
    R: Rng,
{
    let cost_of = |s: f64| {
        let c = direction.to_cost(s);
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    };

    let initial_score = score(&initial);
    let mut current = initial;
    let mut current_score = initial_score;
    let mut best = current.clone();
    let mut best_score = initial_score;
    let mut temperature = config.t_initial;

    let mut trace = SearchTrace {
        direction,
        rng_algorithm: RNG_ALGORITHM,
        seed: config.seed,
        initial_score,
        current_scores: Vec::with_capacity(config.iterations),
        best_scores: Vec::with_capacity(config.iterations),
        temperatures: Vec::with_capacity(config.iterations),
        accepted: 0,
    };

    for _ in 0..config.iterations {
        let candidate = neighbor(&current, rng);
        let candidate_score = score(&candidate);
        let delta = cost_of(candidate_score) - cost_of(current_score);
        let accept = if delta <= 0.0 {
            true
        } else if delta.is_finite() {
            rng.random::<f64>() < (-delta / temperature).exp()
        } else {
            false
        };
        if accept {
            current = candidate;
            current_score = candidate_score;
            trace.accepted += 1;
            if cost_of(current_score) < cost_of(best_score) {
                best = current.clone();
                best_score = current_score;
            }
        }
        trace.current_scores.push(current_score);
        trace.best_scores.push(best_score);
        trace.temperatures.push(temperature);
        temperature *= config.cooling;
    }
    (best, trace)
}

/// Replaces the chord at one uniformly chosen position with a different
/// chord drawn uniformly from `space`. With a single-chord space there is no
/// different chord and the state is returned unchanged.
pub fn sequence_neighbor<R: Rng>(state: &[ChordId], space: &SearchSpace, rng: &mut R) -> Vec<ChordId> {
    let mut next = state.to_vec();
    if state.is_empty() {
        return next;
    }
    let position = rng.random_range(0..state.len());
    next[position] = different_chord(state[position], space, rng);
    next
}

pub(crate) fn different_chord<R: Rng>(current: ChordId, space: &SearchSpace, rng: &mut R) -> ChordId {
    let chords = space.chords();
    match chords.binary_search(&current) {
        Ok(_) if chords.len() == 1 => current,
        Ok(idx) => {
            let mut r = rng.random_range(0..chords.len() - 1);
            if r >= idx {
                r += 1;
            }
            chords[r]
        }
        Err(_) => chords[rng.random_range(0..chords.len())],
    }
}
