//! 2-gram chord-transition model.
//!
//! `probs[u][v]` is the probability that chord `v` immediately follows chord
//! `u`, estimated by counting consecutive pairs inside each normalized song
//! with additive smoothing. Sequence costs are negative natural-log
//! likelihoods, so lower is more idiomatic.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chord::{ChordAlphabet, ChordId, ALPHABET_SIZE};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_SMOOTHING: f64 = 1e-6;

const M: usize = ALPHABET_SIZE;

/// Raw consecutive-pair counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionCounts {
    counts: Vec<u64>,
    fingerprint: String,
}

impl TransitionCounts {
    /// Counts pairs within songs; the last chord of one song is never paired
    /// with the first chord of the next.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut counts = vec![0u64; M * M];
        for song in &corpus.songs {
            for pair in song.normalized().windows(2) {
                counts[pair[0].index() * M + pair[1].index()] += 1;
            }
        }
        TransitionCounts {
            counts,
            fingerprint: corpus.fingerprint(),
        }
    }

    pub fn get(&self, from: ChordId, to: ChordId) -> u64 {
        self.counts[from.index() * M + to.index()]
    }

    pub fn row_total(&self, from: ChordId) -> u64 {
        self.counts[from.index() * M..(from.index() + 1) * M].iter().sum()
    }

    pub fn zero_rows(&self) -> Vec<ChordId> {
        ChordId::all().filter(|&c| self.row_total(c) == 0).collect()
    }
}

#[derive(Clone, Debug)]
pub struct TransitionModel {
    probs: Vec<f64>,
    /// `-ln probs`, `+inf` where the probability is zero.
    costs: Vec<f64>,
    alpha: f64,
    trained_on: String,
}

impl PartialEq for TransitionModel {
    fn eq(&self, other: &Self) -> bool {
        self.alpha.to_bits() == other.alpha.to_bits()
            && self.trained_on == other.trained_on
            && self
                .probs
                .iter()
                .zip(&other.probs)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Trains a smoothed model; see [`TransitionModel::from_counts`].
pub fn train(corpus: &Corpus, alpha: f64) -> Result<TransitionModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    TransitionModel::from_counts(&TransitionCounts::from_corpus(corpus), alpha, false)
}

impl TransitionModel {
    /// `p(v|u) = (count(u,v) + alpha) / (count(u,.) + 120 alpha)`.
    ///
    /// With `alpha == 0` a chord that never starts a pair has no defined row;
    /// that is an error unless `allow_zero_rows`, in which case the row is
    /// left all-zero.
    pub fn from_counts(counts: &TransitionCounts, alpha: f64, allow_zero_rows: bool) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "smoothing alpha must be finite and >= 0, got {alpha}"
            )));
        }
        let mut probs = vec![0.0; M * M];
        for from in ChordId::all() {
            let total = counts.row_total(from) as f64 + M as f64 * alpha;
            if total == 0.0 {
                if allow_zero_rows {
                    continue;
                }
                return Err(Error::DegenerateRow {
                    chord: from.to_string(),
                });
            }
            for to in ChordId::all() {
                probs[from.index() * M + to.index()] =
                    (counts.get(from, to) as f64 + alpha) / total;
            }
        }
        Ok(Self::assemble(probs, alpha, counts.fingerprint.clone()))
    }

    /// Every transition equally likely.
    pub fn uniform() -> Self {
        Self::assemble(vec![1.0 / M as f64; M * M], 0.0, "uniform".into())
    }

    /// Builds a model from an explicit 120x120 matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>, alpha: f64, trained_on: impl Into<String>) -> Result<Self> {
        if rows.len() != M || rows.iter().any(|r| r.len() != M) {
            return Err(Error::ModelFormat(format!(
                "expected a {M}x{M} probability matrix"
            )));
        }
        let probs: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ModelFormat(format!("probability {bad} outside [0, 1]")));
        }
        Ok(Self::assemble(probs, alpha, trained_on.into()))
    }

    fn assemble(probs: Vec<f64>, alpha: f64, trained_on: String) -> Self {
        let costs = probs
            .iter()
            .map(|&p| if p > 0.0 { -p.ln() } else { f64::INFINITY })
            .collect();
        TransitionModel {
            probs,
            costs,
            alpha,
            trained_on,
        }
    }

    #[inline]
    pub fn probability(&self, from: ChordId, to: ChordId) -> f64 {
        self.probs[from.index() * M + to.index()]
    }

    /// `-ln p(to | from)`.
    #[inline]
    pub fn cost(&self, from: ChordId, to: ChordId) -> f64 {
        self.costs[from.index() * M + to.index()]
    }

    pub fn row(&self, from: ChordId) -> &[f64] {
        &self.probs[from.index() * M..(from.index() + 1) * M]
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn trained_on(&self) -> &str {
        &self.trained_on
    }

    /// Chords whose row is identically zero.
    pub fn zero_rows(&self) -> Vec<ChordId> {
        ChordId::all()
            .filter(|&c| self.row(c).iter().all(|&p| p == 0.0))
            .collect()
    }

    /// The `n` most probable successors of `from`, ties by chord id.
    pub fn top_successors(&self, from: ChordId, n: usize) -> Vec<(ChordId, f64)> {
        let mut row: Vec<(ChordId, f64)> = ChordId::all().map(|to| (to, self.probability(from, to))).collect();
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        row.truncate(n);
        row
    }

    fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.alpha.to_bits().to_le_bytes());
        for p in &self.probs {
            hasher.update(p.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            alphabet_hash: ChordAlphabet::new().fingerprint(),
            alpha: self.alpha,
            trained_on: self.trained_on.clone(),
            checksum: self.checksum(),
            probs: self.probs.chunks(M).map(<[f64]>::to_vec).collect(),
        };
        serde_json::to_string(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| match e.classify() {
            serde_json::error::Category::Eof => Error::Checksum(format!("truncated model file: {e}")),
            _ => Error::ModelFormat(e.to_string()),
        })?;
        if file.version != MODEL_VERSION {
            return Err(Error::VersionMismatch(format!(
                "file version {}, expected {MODEL_VERSION}",
                file.version
            )));
        }
        if file.alphabet_hash != ChordAlphabet::new().fingerprint() {
            return Err(Error::VersionMismatch(
                "model was written for a different chord alphabet".into(),
            ));
        }
        let model = Self::from_rows(file.probs, file.alpha, file.trained_on)?;
        if model.checksum() != file.checksum {
            return Err(Error::Checksum("probability checksum does not match".into()));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    alphabet_hash: String,
    alpha: f64,
    trained_on: String,
    checksum: String,
    probs: Vec<Vec<f64>>,
}

pub fn save_model(model: &TransitionModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TransitionModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TransitionModel::from_json(&text)
}

/// `G(W) = -sum ln p(W[j] -> W[j+1])`. Sequences shorter than two chords
/// have no transitions and cost zero.
pub fn neg_log_likelihood(model: &TransitionModel, sequence: &[ChordId]) -> Result<f64> {
    let mut total = 0.0;
    for pair in sequence.windows(2) {
        let cost = model.cost(pair[0], pair[1]);
        if cost.is_infinite() {
            return Err(Error::ZeroProbabilityTransition {
                from: pair[0].to_string(),
                to: pair[1].to_string(),
            });
        }
        total += cost;
    }
    Ok(total)
}

/// The log-likelihood form, `-G(W)`; higher is more coherent.
pub fn log_likelihood(model: &TransitionModel, sequence: &[ChordId]) -> Result<f64> {
    neg_log_likelihood(model, sequence).map(|g| -g)
}
