#![allow(dead_code)]

use harmonagg::aggregation::{Profile, SearchSpace};
use harmonagg::rng::SimRng;
use harmonagg::{ChordId, TransitionModel};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn seq(symbols: &str) -> Vec<ChordId> {
    symbols.split_whitespace().map(|s| s.parse().unwrap()).collect()
}

pub fn toy_profile() -> Profile {
    Profile::new(vec![
        seq("CMaj7 Dm7 G7 CMaj7"),
        seq("Am7 Dm7 E7 Am7"),
        seq("CMaj7 FMaj7 G7 Am7"),
    ])
    .unwrap()
}

/// `size` distinct chords drawn from the whole alphabet.
pub fn random_space(rng: &mut SimRng, size: usize) -> SearchSpace {
    let all: Vec<ChordId> = ChordId::all().collect();
    SearchSpace::restricted(all.choose_multiple(rng, size).copied()).unwrap()
}

pub fn random_profile(rng: &mut SimRng, space: &SearchSpace, n: usize, k: usize) -> Profile {
    let chords = space.chords();
    Profile::new(
        (0..n)
            .map(|_| (0..k).map(|_| *chords.choose(rng).unwrap()).collect())
            .collect(),
    )
    .unwrap()
}

/// A dense row-stochastic model with strictly positive entries.
pub fn random_model(rng: &mut SimRng) -> TransitionModel {
    let rows = (0..120)
        .map(|_| {
            let raw: Vec<f64> = (0..120).map(|_| 0.01 + rng.random::<f64>().powi(3)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    TransitionModel::from_rows(rows, 1.0, "random").unwrap()
}
