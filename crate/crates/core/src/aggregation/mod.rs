//! Aggregating agents' chord sequences into one.
//!
//! An instance is a [`Profile`]: `n` agents each proposing a sequence of `k`
//! chords. Every rule scores a candidate sequence against the profile,
//! optionally mixed with a 2-gram likelihood term, and the solvers search for
//! the best candidate.

mod brute;
mod clustered;
mod exact;
mod objectives;
mod solve;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chord::{ChordId, ALPHABET_SIZE};
use crate::error::{Error, Result};

pub use brute::{brute_force_optimum, DEFAULT_BRUTE_FORCE_BUDGET};
pub use clustered::{
    solve_clustered_for_partition, solve_clustered_kemeny, ClusterAssignment, ClusterMode,
    ClusterOptions, ClusteredSolution, SectionPartition, TwoGramTerm,
};
pub use exact::{
    solve_kemeny, solve_kemeny_2gram_dp, solve_plurality, solve_plurality_2gram_dp,
};
pub use objectives::{
    combined_objective, satisfaction, score_clustered_kemeny, score_kemeny, score_pav,
    score_plurality, similarity, Objective,
};
pub use solve::{aggregate, solve_pav, AggregateOptions, Aggregated};

/// The n x k matrix of agent chord choices, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    n: usize,
    k: usize,
    cells: Vec<ChordId>,
}

impl Profile {
    pub fn new(rows: Vec<Vec<ChordId>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidProfile("profile needs at least one agent".into()));
        }
        let k = rows[0].len();
        if k == 0 {
            return Err(Error::InvalidProfile("sequences must be non-empty".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::InvalidProfile(format!(
                "agent {} has {} chords, expected {k}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Ok(Profile {
            n,
            k,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    /// Parses rows of chord symbols.
    pub fn from_symbols<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| s.as_ref().parse()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Profile::new(rows)
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    #[inline]
    pub fn get(&self, agent: usize, position: usize) -> ChordId {
        self.cells[agent * self.k + position]
    }

    pub fn row(&self, agent: usize) -> &[ChordId] {
        &self.cells[agent * self.k..(agent + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ChordId]> {
        self.cells.chunks(self.k)
    }

    pub fn column(&self, position: usize) -> impl Iterator<Item = ChordId> + '_ {
        (0..self.n).map(move |i| self.get(i, position))
    }

    /// Distinct chords used anywhere in the profile, ascending.
    pub fn chords_used(&self) -> Vec<ChordId> {
        let mut used: Vec<ChordId> = self.cells.clone();
        used.sort();
        used.dedup();
        used
    }

    pub(crate) fn check_len(&self, sequence: &[ChordId]) -> Result<()> {
        if sequence.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                found: sequence.len(),
            });
        }
        Ok(())
    }

    /// Profile file text: a `k=<int> n=<int>` header, then one agent per line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let format_err = |line: usize, message: String| Error::ProfileFormat { line, message };

        let (header_line, header) = lines
            .next()
            .ok_or_else(|| format_err(1, "missing `k=<int> n=<int>` header".into()))?;
        let mut k = None;
        let mut n = None;
        for token in header.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| format_err(header_line, format!("bad header token `{token}`")))?;
            let value: usize = value
                .parse()
                .map_err(|_| format_err(header_line, format!("bad integer in `{token}`")))?;
            match key {
                "k" => k = Some(value),
                "n" => n = Some(value),
                _ => return Err(format_err(header_line, format!("unknown header key `{key}`"))),
            }
        }
        let (k, n) = match (k, n) {
            (Some(k), Some(n)) => (k, n),
            _ => return Err(format_err(header_line, "header needs both k and n".into())),
        };

        let mut rows = Vec::with_capacity(n);
        for (line, body) in lines {
            let row = body
                .split_whitespace()
                .map(|s| {
                    s.parse::<ChordId>()
                        .map_err(|_| format_err(line, format!("unknown chord `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != k {
                return Err(format_err(line, format!("expected {k} chords, found {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(format_err(
                header_line,
                format!("header declares n={n} but {} agent rows follow", rows.len()),
            ));
        }
        Profile::new(rows).map_err(|e| format_err(header_line, e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Profile::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("k={} n={}\n", self.k, self.n);
        for row in self.rows() {
            out.push_str(&format_sequence(row));
            out.push('\n');
        }
        out
    }
}

/// Space-separated canonical chord symbols.
pub fn format_sequence(sequence: &[ChordId]) -> String {
    sequence
        .iter()
        .map(ChordId::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// An aggregated sequence with whatever scores were computed for it.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub chords: Vec<ChordId>,
    pub scores: BTreeMap<String, f64>,
}

impl Solution {
    pub fn new(chords: Vec<ChordId>) -> Self {
        Solution {
            chords,
            scores: BTreeMap::new(),
        }
    }

    pub fn with_score(mut self, name: &str, value: f64) -> Self {
        self.scores.insert(name.to_string(), value);
        self
    }

    pub fn len(&self) -> usize {
        self.chords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chords.is_empty()
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_sequence(&self.chords))
    }
}

/// Mixing weights between each base rule and the 2-gram term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub plurality: f64,
    pub kemeny: f64,
    pub pav: f64,
    pub clustered: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            plurality: 0.5,
            kemeny: 0.9,
            pav: 1.0 - 2e-4,
            clustered: 0.9,
        }
    }
}

impl ObjectiveWeights {
    /// All weights 1: every combined objective reduces to its base rule.
    pub fn base_only() -> Self {
        ObjectiveWeights {
            plurality: 1.0,
            kemeny: 1.0,
            pav: 1.0,
            clustered: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("plurality", self.plurality),
            ("kemeny", self.kemeny),
            ("pav", self.pav),
            ("clustered", self.clustered),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidConfig(format!("weight {name}={w} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn for_rule(&self, rule: BaseRule) -> f64 {
        match rule {
            BaseRule::Plurality => self.plurality,
            BaseRule::Kemeny => self.kemeny,
            BaseRule::Pav => self.pav,
            BaseRule::Clustered => self.clustered,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// Maps a score onto a cost where lower is always better.
    #[inline]
    pub fn to_cost(self, score: f64) -> f64 {
        match self {
            Direction::Minimize => score,
            Direction::Maximize => -score,
        }
    }

    pub fn better(self, a: f64, b: f64) -> bool {
        self.to_cost(a) < self.to_cost(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseRule {
    Plurality,
    Kemeny,
    Pav,
    Clustered,
}

impl BaseRule {
    pub fn direction(self) -> Direction {
        match self {
            BaseRule::Plurality | BaseRule::Pav => Direction::Maximize,
            BaseRule::Kemeny | BaseRule::Clustered => Direction::Minimize,
        }
    }
}

/// One of the eight aggregation rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub base: BaseRule,
    pub two_gram: bool,
}

impl Rule {
    pub const ALL: [Rule; 8] = [
        Rule::new(BaseRule::Plurality, false),
        Rule::new(BaseRule::Kemeny, false),
        Rule::new(BaseRule::Pav, false),
        Rule::new(BaseRule::Clustered, false),
        Rule::new(BaseRule::Plurality, true),
        Rule::new(BaseRule::Kemeny, true),
        Rule::new(BaseRule::Pav, true),
        Rule::new(BaseRule::Clustered, true),
    ];

    pub const fn new(base: BaseRule, two_gram: bool) -> Self {
        Rule { base, two_gram }
    }

    pub fn name(self) -> &'static str {
        match (self.base, self.two_gram) {
            (BaseRule::Plurality, false) => "plurality",
            (BaseRule::Kemeny, false) => "kemeny",
            (BaseRule::Pav, false) => "pav",
            (BaseRule::Clustered, false) => "clustered",
            (BaseRule::Plurality, true) => "plurality2",
            (BaseRule::Kemeny, true) => "kemeny2",
            (BaseRule::Pav, true) => "pav2",
            (BaseRule::Clustered, true) => "clustered2",
        }
    }

    pub fn direction(self) -> Direction {
        self.base.direction()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let alias = match lower.as_str() {
            "clustered-kemeny" => "clustered",
            "clustered-kemeny2" => "clustered2",
            other => other,
        };
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == alias)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown rule `{s}`")))
    }
}

/// Candidate chords a solver may place at any position, ascending by id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchSpace(Vec<ChordId>);

impl Default for SearchSpace {
    fn default() -> Self {
        Self::full()
    }
}

impl SearchSpace {
    pub fn full() -> Self {
        SearchSpace(ChordId::all().collect())
    }

    pub fn restricted(chords: impl IntoIterator<Item = ChordId>) -> Result<Self> {
        let mut chords: Vec<ChordId> = chords.into_iter().collect();
        chords.sort();
        chords.dedup();
        if chords.is_empty() {
            return Err(Error::InvalidConfig("search space is empty".into()));
        }
        Ok(SearchSpace(chords))
    }

    pub fn chords(&self) -> &[ChordId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.0.len() == ALPHABET_SIZE
    }

    pub fn contains(&self, chord: ChordId) -> bool {
        self.0.binary_search(&chord).is_ok()
    }
}
