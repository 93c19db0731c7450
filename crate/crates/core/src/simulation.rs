//! Semi-synthetic evaluation.
//!
//! Agents are simulated by perturbing a real (or synthetic) song: every agent
//! draws a replacement rate from its error range and then independently
//! swaps chords for harmonically close ones. Each rule aggregates the
//! resulting profile and the output is scored against the original song.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::aggregation::{aggregate, AggregateOptions, ClusterMode, ClusterOptions, ObjectiveWeights, Profile, Rule};
use crate::annealing::AnnealingConfig;
use crate::chord::{Chord, ChordId, ChordQuality, DistanceMatrix, PitchClass, ALPHABET_SIZE};
use crate::corpus::{Corpus, Song, SIMULATION_BARS};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, split_seed, SimRng};
use crate::transition::{neg_log_likelihood, TransitionModel};

/// Window length used by [`cluster_coherence`]: 16 positions after the
/// first, so every window sums 17 terms.
pub const COHERENCE_WINDOW: usize = 16;

/// An error-intensity label `(lo, hi)` with `0 <= lo < hi <= 4`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ErrorRange {
    lo: f64,
    hi: f64,
}

impl ErrorRange {
    pub const MAX: f64 = 4.0;

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= Self::MAX) {
            return Err(Error::InvalidConfig(format!(
                "error range ({lo}, {hi}) must satisfy 0 <= lo < hi <= 4"
            )));
        }
        Ok(ErrorRange { lo, hi })
    }

    /// (0,1), (1,2), (2,3), (3,4).
    pub fn standard() -> Vec<ErrorRange> {
        (0..4)
            .map(|i| ErrorRange::new(i as f64, i as f64 + 1.0).unwrap())
            .collect()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Per-position replacement probability bounds, `[lo/4, hi/4]`.
    pub fn rate_bounds(&self) -> (f64, f64) {
        (self.lo / Self::MAX, self.hi / Self::MAX)
    }

    /// Mean replacement rate, `(lo + hi) / 8`.
    pub fn mean_rate(&self) -> f64 {
        (self.lo + self.hi) / (2.0 * Self::MAX)
    }

    pub fn sample_rate<R: Rng>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.rate_bounds();
        a + (b - a) * rng.random::<f64>()
    }
}

impl fmt::Display for ErrorRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

impl FromStr for ErrorRange {
    type Err = Error;

    /// `lo,hi` or `lo-hi`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse error range `{s}`, expected lo,hi"));
        let (lo, hi) = s.split_once(',').or_else(|| s.split_once('-')).ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        ErrorRange::new(lo, hi)
    }
}

/// How an agent's proposal is derived from the original song.
pub trait Perturbation: Sync {
    fn perturb(&self, song: &[ChordId], range: ErrorRange, rng: &mut SimRng) -> Vec<ChordId>;
}

/// Replaces each position with probability `q ~ U[lo/4, hi/4]` (drawn once
/// per agent). The replacement is one of the other 119 chords, chosen with
/// probability proportional to `1 - jaccard(original, candidate)`.
pub struct JaccardReplacement {
    samplers: Vec<Option<WeightedIndex<f64>>>,
}

impl Default for JaccardReplacement {
    fn default() -> Self {
        Self::new()
    }
}

impl JaccardReplacement {
    pub fn new() -> Self {
        let d = DistanceMatrix::global();
        let samplers = ChordId::all()
            .map(|from| {
                let weights: Vec<f64> = ChordId::all()
                    .map(|to| if to == from { 0.0 } else { 1.0 - d.get(from, to) })
                    .collect();
                WeightedIndex::new(weights).ok()
            })
            .collect();
        JaccardReplacement { samplers }
    }

    pub fn replacement(&self, original: ChordId, rng: &mut SimRng) -> ChordId {
        match &self.samplers[original.index()] {
            Some(sampler) => ChordId::new(sampler.sample(rng)).expect("index within alphabet"),
            None => {
                let mut r = rng.random_range(0..ALPHABET_SIZE - 1);
                if r >= original.index() {
                    r += 1;
                }
                ChordId::new(r).expect("index within alphabet")
            }
        }
    }
}

impl Perturbation for JaccardReplacement {
    fn perturb(&self, song: &[ChordId], range: ErrorRange, rng: &mut SimRng) -> Vec<ChordId> {
        let q = range.sample_rate(rng);
        song.iter()
            .map(|&chord| {
                if rng.random::<f64>() < q {
                    self.replacement(chord, rng)
                } else {
                    chord
                }
            })
            .collect()
    }
}

/// One perturbed sequence.
pub fn perturb(song: &[ChordId], range: ErrorRange, rng: &mut SimRng) -> Vec<ChordId> {
    JaccardReplacement::new().perturb(song, range, rng)
}

/// `n` independent perturbations of `song`.
pub fn make_profile(
    perturbation: &dyn Perturbation,
    song: &[ChordId],
    n: usize,
    range: ErrorRange,
    rng: &mut SimRng,
) -> Result<Profile> {
    Profile::new((0..n).map(|_| perturbation.perturb(song, range, rng)).collect())
}

/// Position-wise distance to the original song: `(sum, sum / k)`.
pub fn song_similarity(sequence: &[ChordId], original: &[ChordId]) -> Result<(f64, f64)> {
    if sequence.len() != original.len() {
        return Err(Error::LengthMismatch {
            expected: original.len(),
            found: sequence.len(),
        });
    }
    let d = DistanceMatrix::global();
    let sum: f64 = sequence.iter().zip(original).map(|(&a, &b)| d.get(a, b)).sum();
    Ok((sum, sum / original.len().max(1) as f64))
}

/// `1 / ((k - 16) n) * sum_i sum_{j < k-16} sum_{t = j..=j+16} d(W[t], b_it)`.
pub fn cluster_coherence(profile: &Profile, sequence: &[ChordId]) -> Result<f64> {
    let k = profile.len();
    if sequence.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            found: sequence.len(),
        });
    }
    if k <= COHERENCE_WINDOW {
        return Err(Error::SequenceTooShort {
            len: k,
            min: COHERENCE_WINDOW,
        });
    }
    let d = DistanceMatrix::global();
    let windows = k - COHERENCE_WINDOW;
    let mut total = 0.0;
    for row in profile.rows() {
        let per_pos: Vec<f64> = row.iter().zip(sequence).map(|(&b, &w)| d.get(w, b)).collect();
        // Running window sum over per_pos[j..=j+16].
        let mut window: f64 = per_pos[..=COHERENCE_WINDOW].iter().sum();
        total += window;
        for j in 1..windows {
            window += per_pos[j + COHERENCE_WINDOW] - per_pos[j - 1];
            total += window;
        }
    }
    Ok(total / (windows * profile.agents()) as f64)
}

/// Geometric-mean transition probability, `exp(-G(W) / (k - 1))`, in (0, 1].
pub fn musical_coherence(model: &TransitionModel, sequence: &[ChordId]) -> Result<f64> {
    if sequence.len() < 2 {
        return Err(Error::SequenceTooShort {
            len: sequence.len(),
            min: 1,
        });
    }
    let g = neg_log_likelihood(model, sequence)?;
    Ok((-g / (sequence.len() - 1) as f64).exp())
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub agent_counts: Vec<usize>,
    pub error_ranges: Vec<ErrorRange>,
    pub rules: Vec<Rule>,
    pub weights: ObjectiveWeights,
    pub anneal: AnnealingConfig,
    pub cluster: ClusterOptions,
    pub seed: u64,
    /// Record wall-clock time per row. Off by default so output is
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            agent_counts: vec![8, 16, 32],
            error_ranges: ErrorRange::standard(),
            rules: Rule::ALL.to_vec(),
            weights: ObjectiveWeights::default(),
            anneal: AnnealingConfig::default(),
            cluster: ClusterOptions {
                x_max: 4,
                off_section_weight: 0.5,
                mode: ClusterMode::Anneal,
                ..ClusterOptions::default()
            },
            seed: 0,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.agent_counts.is_empty() || self.error_ranges.is_empty() || self.rules.is_empty() {
            return Err(Error::InvalidConfig(
                "agent counts, error ranges and rules must all be non-empty".into(),
            ));
        }
        if self.agent_counts.contains(&0) {
            return Err(Error::InvalidConfig("agent counts must be positive".into()));
        }
        if self.cluster.x_max > *self.agent_counts.iter().min().unwrap()
            && self.rules.iter().any(|r| r.base == crate::aggregation::BaseRule::Clustered)
        {
            return Err(Error::InvalidConfig(format!(
                "clustered rules need at least {} agents",
                self.cluster.x_max
            )));
        }
        self.weights.validate()?;
        self.anneal.validate()
    }
}

/// One (song, rule, range, agent count) result.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRow {
    pub song_id: usize,
    pub rule: Rule,
    pub range: ErrorRange,
    pub n_agents: usize,
    pub song_similarity_sum: f64,
    pub song_similarity_mean: f64,
    pub cluster_coherence: f64,
    pub musical_coherence: f64,
    pub wall_ms: u64,
    pub seed: u64,
}

/// A cell whose solver or metric failed.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub song_id: usize,
    pub rule: Rule,
    pub range: ErrorRange,
    pub n_agents: usize,
    pub reason: String,
}

/// Averages over songs for one (rule, range, agent count).
#[derive(Clone, Debug, PartialEq)]
pub struct CellAverage {
    pub rule: Rule,
    pub range: ErrorRange,
    pub n_agents: usize,
    pub songs: usize,
    pub song_similarity_sum: f64,
    pub song_similarity_mean: f64,
    pub cluster_coherence: f64,
    pub musical_coherence: f64,
}

#[derive(Clone, Debug, Default)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<CellFailure>,
}

pub const CSV_HEADER: [&str; 11] = [
    "song_id",
    "rule",
    "error_lo",
    "error_hi",
    "n_agents",
    "song_similarity_sum",
    "song_similarity_mean",
    "cluster_coherence",
    "musical_coherence",
    "wall_ms",
    "seed",
];

impl MetricsReport {
    /// Per-(rule, range, n) means, in config order.
    pub fn cell_averages(&self, config: &ExperimentConfig) -> Vec<CellAverage> {
        let mut out = Vec::new();
        for &rule in &config.rules {
            for &range in &config.error_ranges {
                for &n in &config.agent_counts {
                    let rows: Vec<&MetricsRow> = self
                        .rows
                        .iter()
                        .filter(|r| r.rule == rule && r.range == range && r.n_agents == n)
                        .collect();
                    if rows.is_empty() {
                        continue;
                    }
                    let mean = |f: fn(&MetricsRow) -> f64| {
                        rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
                    };
                    out.push(CellAverage {
                        rule,
                        range,
                        n_agents: n,
                        songs: rows.len(),
                        song_similarity_sum: mean(|r| r.song_similarity_sum),
                        song_similarity_mean: mean(|r| r.song_similarity_mean),
                        cluster_coherence: mean(|r| r.cluster_coherence),
                        musical_coherence: mean(|r| r.musical_coherence),
                    });
                }
            }
        }
        out
    }

    /// RFC-4180 CSV. Metric columns are multiplied by `scale` (1 keeps the
    /// raw values).
    pub fn write_csv<W: Write>(&self, out: W, scale: f64) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for row in &self.rows {
            writer.write_record([
                row.song_id.to_string(),
                row.rule.name().to_string(),
                row.range.lo().to_string(),
                row.range.hi().to_string(),
                row.n_agents.to_string(),
                (row.song_similarity_sum * scale).to_string(),
                (row.song_similarity_mean * scale).to_string(),
                (row.cluster_coherence * scale).to_string(),
                (row.musical_coherence * scale).to_string(),
                row.wall_ms.to_string(),
                row.seed.to_string(),
            ])?;
        }
        writer.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Seed of the profile for one (song, agent count, range) cell.
pub fn cell_seed(master: u64, song_id: usize, n_agents: usize, range_index: usize) -> u64 {
    split_seed(master, &[song_id as u64, n_agents as u64, range_index as u64])
}

/// Seed handed to a rule's annealer inside a cell.
pub fn rule_seed(cell: u64, rule: Rule) -> u64 {
    let index = Rule::ALL.iter().position(|&r| r == rule).unwrap_or(0);
    split_seed(cell, &[0x52554c45, index as u64])
}

/// Runs every (song, n, range) cell, in parallel on the current rayon pool.
/// All rules in a cell share one profile. Rows come back sorted by song,
/// range, agent count and rule, independent of scheduling.
pub fn run_experiment(
    config: &ExperimentConfig,
    songs: &[Song],
    model: &TransitionModel,
    progress: Option<&(dyn Fn(&str) + Sync)>,
) -> Result<MetricsReport> {
    config.validate()?;
    if songs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let perturbation = JaccardReplacement::new();
    let cells: Vec<(usize, usize, usize)> = (0..songs.len())
        .flat_map(|s| {
            (0..config.error_ranges.len())
                .flat_map(move |r| config.agent_counts.iter().map(move |&n| (s, r, n)))
        })
        .collect();

    let results: Vec<(Vec<MetricsRow>, Vec<CellFailure>)> = cells
        .par_iter()
        .map(|&(song_id, range_index, n)| {
            let out = run_cell(config, &perturbation, songs, model, song_id, range_index, n);
            if let Some(report) = progress {
                report(&format!(
                    "song {song_id} range {} agents {n}: {} rows",
                    config.error_ranges[range_index],
                    out.0.len()
                ));
            }
            out
        })
        .collect();

    let mut report = MetricsReport::default();
    for (rows, failures) in results {
        report.rows.extend(rows);
        report.failures.extend(failures);
    }
    let rule_order = |r: Rule| config.rules.iter().position(|&x| x == r).unwrap_or(usize::MAX);
    let range_order = |g: ErrorRange| config.error_ranges.iter().position(|&x| x == g).unwrap_or(usize::MAX);
    report.rows.sort_by_key(|r| (r.song_id, range_order(r.range), r.n_agents, rule_order(r.rule)));
    report
        .failures
        .sort_by_key(|f| (f.song_id, range_order(f.range), f.n_agents, rule_order(f.rule)));
    Ok(report)
}

fn run_cell(
    config: &ExperimentConfig,
    perturbation: &dyn Perturbation,
    songs: &[Song],
    model: &TransitionModel,
    song_id: usize,
    range_index: usize,
    n: usize,
) -> (Vec<MetricsRow>, Vec<CellFailure>) {
    let range = config.error_ranges[range_index];
    let original = songs[song_id].normalized();
    let seed = cell_seed(config.seed, song_id, n, range_index);
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let fail = |rule: Rule, reason: String| {
        log::warn!("song {song_id} rule {rule} range {range} agents {n}: {reason}");
        CellFailure {
            song_id,
            rule,
            range,
            n_agents: n,
            reason,
        }
    };

    let profile = match make_profile(perturbation, &original, n, range, &mut rng) {
        Ok(p) => p,
        Err(e) => {
            failures.extend(config.rules.iter().map(|&rule| fail(rule, e.to_string())));
            return (rows, failures);
        }
    };

    for &rule in &config.rules {
        let options = AggregateOptions {
            weights: config.weights,
            anneal: config.anneal.with_seed(rule_seed(seed, rule)),
            cluster: config.cluster,
            ..AggregateOptions::default()
        };
        let started = Instant::now();
        let evaluated = aggregate(rule, &profile, Some(model), &options).and_then(|out| {
            let w = &out.solution.chords;
            let (sum, mean) = song_similarity(w, &original)?;
            Ok((sum, mean, cluster_coherence(&profile, w)?, musical_coherence(model, w)?))
        });
        let wall_ms = if config.record_timing {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        match evaluated {
            Ok((sum, mean, cc, mc)) => rows.push(MetricsRow {
                song_id,
                rule,
                range,
                n_agents: n,
                song_similarity_sum: sum,
                song_similarity_mean: mean,
                cluster_coherence: cc,
                musical_coherence: mc,
                wall_ms,
                seed,
            }),
            Err(e) => failures.push(fail(rule, e.to_string())),
        }
    }
    (rows, failures)
}

/// Jazz-flavoured 32-bar songs from a small functional-harmony grammar:
/// diatonic motion around ii-V-I with secondary dominants and occasional
/// key changes. Bars hold one or two chords.
pub fn synthetic_corpus(songs: usize, seed: u64) -> Corpus {
    let mut rng = rng_from_seed(split_seed(seed, &[0x534f4e47]));
    let songs = (0..songs)
        .map(|i| {
            let chords = synthetic_progression(&mut rng);
            let mut bars = Vec::with_capacity(SIMULATION_BARS);
            let mut it = chords.into_iter();
            while bars.len() < SIMULATION_BARS {
                let first = it.next().expect("progression is long enough");
                if rng.random::<f64>() < 0.4 {
                    bars.push(vec![first]);
                } else {
                    bars.push(vec![first, it.next().expect("progression is long enough")]);
                }
            }
            Song::new(format!("synthetic {i:04}"), bars).expect("bars hold one or two chords")
        })
        .collect();
    Corpus::from_songs(songs)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Degree {
    One,
    Two,
    Three,
    Four,
    Five,
    Six,
    SixDominant,
    FourMinor,
    SevenHalfDim,
}

impl Degree {
    fn chord(self, key: u8) -> ChordId {
        use ChordQuality::*;
        let (offset, quality) = match self {
            Degree::One => (0, Major7),
            Degree::Two => (2, Minor7),
            Degree::Three => (4, Minor7),
            Degree::Four => (5, Major7),
            Degree::Five => (7, Dominant7),
            Degree::Six => (9, Minor7),
            Degree::SixDominant => (9, Dominant7),
            Degree::FourMinor => (5, Minor6),
            Degree::SevenHalfDim => (11, HalfDiminished7),
        };
        Chord::new(PitchClass::new(key + offset), quality).id()
    }

    fn next<R: Rng>(self, rng: &mut R) -> Degree {
        let options: &[(Degree, u32)] = match self {
            Degree::One => &[(Degree::Six, 3), (Degree::Two, 3), (Degree::Four, 2), (Degree::Three, 2)],
            Degree::Two => &[(Degree::Five, 9), (Degree::SevenHalfDim, 1)],
            Degree::Three => &[(Degree::Six, 2), (Degree::SixDominant, 3)],
            Degree::Four => &[(Degree::Two, 2), (Degree::Five, 2), (Degree::FourMinor, 2)],
            Degree::Five => &[(Degree::One, 8), (Degree::Six, 2)],
            Degree::Six => &[(Degree::Two, 4), (Degree::Four, 2)],
            Degree::SixDominant => &[(Degree::Two, 1)],
            Degree::FourMinor => &[(Degree::One, 1)],
            Degree::SevenHalfDim => &[(Degree::Three, 1)],
        };
        let total: u32 = options.iter().map(|o| o.1).sum();
        let mut pick = rng.random_range(0..total);
        for &(degree, w) in options {
            if pick < w {
                return degree;
            }
            pick -= w;
        }
        unreachable!("pick below total weight")
    }
}

fn synthetic_progression<R: Rng>(rng: &mut R) -> Vec<ChordId> {
    let mut key: u8 = rng.random_range(0..12);
    let mut degree = Degree::One;
    let mut chords = Vec::with_capacity(2 * SIMULATION_BARS);
    while chords.len() < 2 * SIMULATION_BARS {
        chords.push(degree.chord(key));
        degree = degree.next(rng);
        // Modulate on arrival at the tonic now and then.
        if degree == Degree::One && rng.random::<f64>() < 0.15 {
            key = (key + [5u8, 7, 3, 10][rng.random_range(0..4)]) % 12;
        }
    }
    chords
}
