//! Voting-style aggregation of chord sequences.
//!
//! Several agents each propose a harmonization of the same melody, a
//! sequence of `k` chords from a fixed 120-chord alphabet. This crate merges
//! the proposals into one sequence under eight rules: plurality, Kemeny,
//! proportional (PAV-style) and clustered Kemeny, each alone or mixed with a
//! 2-gram chord-transition likelihood trained from a corpus.
//!
//! ```
//! use harmonagg::aggregation::{solve_plurality, Profile, SearchSpace};
//!
//! let profile = Profile::from_symbols(&[
//!     vec!["CMaj7", "Dm7", "G7", "CMaj7"],
//!     vec!["Am7", "Dm7", "E7", "Am7"],
//!     vec!["CMaj7", "FMaj7", "G7", "Am7"],
//! ])
//! .unwrap();
//! let w = solve_plurality(&profile, &SearchSpace::full());
//! assert_eq!(w.to_string(), "CMaj7 Dm7 G7 Am7");
//! ```

pub mod aggregation;
pub mod annealing;
pub mod chord;
pub mod corpus;
pub mod error;
pub mod rng;
pub mod simulation;
pub mod transition;

pub use aggregation::{
    aggregate, AggregateOptions, ObjectiveWeights, Profile, Rule, SearchSpace, Solution,
};
pub use annealing::{AnnealingConfig, SearchTrace};
pub use chord::{jaccard, parse_chord, Chord, ChordAlphabet, ChordId, DistanceMatrix};
pub use corpus::{Corpus, Song};
pub use error::{Error, Result};
pub use transition::{neg_log_likelihood, train, TransitionModel};
