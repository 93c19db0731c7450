//! Clustered-Kemeny: positions are cut into at most `x_max` contiguous
//! sections and each agent is assigned to one section. An agent's distances
//! count fully inside its section and are scaled by `off_section_weight`
//! everywhere else.
//!
//! For a fixed partition and assignment the best sequence is found exactly
//! (per position, or by the chain DP when the 2-gram term is active), so the
//! exact mode only has to enumerate partitions and assignments. That space
//! grows as `sum_s C(k-1, s-1) * s^n`; beyond the budget the joint state is
//! annealed instead.

use std::ops::Range;

use rand::Rng;

use crate::annealing::{anneal, different_chord, AnnealingConfig, SearchTrace};
use crate::chord::{ChordId, DistanceMatrix};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::transition::{neg_log_likelihood, TransitionModel};

use super::exact::{chain_dp, column_support, first_min, min_with_support, solve_plurality};
use super::objectives::score_clustered_kemeny;
use super::{Profile, SearchSpace, Solution};

/// Contiguous sections given by their start positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SectionPartition {
    k: usize,
    starts: Vec<usize>,
    x_max: usize,
}

impl SectionPartition {
    /// `starts` must begin at 0 and increase strictly below `k`.
    pub fn new(k: usize, starts: Vec<usize>, x_max: usize) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidPartition(m));
        if k == 0 {
            return invalid("sequence length must be positive".into());
        }
        if starts.first() != Some(&0) {
            return invalid("first section must start at position 0".into());
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("section starts {starts:?} are not strictly increasing"));
        }
        if *starts.last().unwrap() >= k {
            return invalid(format!("section start beyond sequence length {k}"));
        }
        if starts.len() > x_max {
            return invalid(format!("{} sections exceed the maximum of {x_max}", starts.len()));
        }
        Ok(SectionPartition { k, starts, x_max })
    }

    pub fn single(k: usize) -> Result<Self> {
        SectionPartition::new(k, vec![0], 1)
    }

    /// `sections` near-equal sections, longer ones first.
    pub fn even(k: usize, sections: usize, x_max: usize) -> Result<Self> {
        let sections = sections.clamp(1, k.max(1));
        let base = k / sections;
        let extra = k % sections;
        let mut starts = Vec::with_capacity(sections);
        let mut pos = 0;
        for s in 0..sections {
            starts.push(pos);
            pos += base + usize::from(s < extra);
        }
        SectionPartition::new(k, starts, x_max)
    }

    pub fn sections(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn x_max(&self) -> usize {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.starts.iter().enumerate().map(move |(s, &start)| {
            let end = self.starts.get(s + 1).copied().unwrap_or(self.k);
            start..end
        })
    }

    pub fn section_of(&self, position: usize) -> usize {
        self.starts.partition_point(|&s| s <= position) - 1
    }

    pub(crate) fn check_fits(&self, k: usize) -> Result<()> {
        if self.k != k {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} positions, sequence has {k}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Agent-to-section map plus the weight applied outside an agent's section.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    section_of: Vec<usize>,
    off_section_weight: f64,
}

impl ClusterAssignment {
    pub fn new(section_of: Vec<usize>, off_section_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&off_section_weight) {
            return Err(Error::InvalidConfig(format!(
                "off-section weight {off_section_weight} outside [0, 1]"
            )));
        }
        Ok(ClusterAssignment {
            section_of,
            off_section_weight,
        })
    }

    pub fn section_of(&self, agent: usize) -> usize {
        self.section_of[agent]
    }

    pub fn sections_by_agent(&self) -> &[usize] {
        &self.section_of
    }

    pub fn off_section_weight(&self) -> f64 {
        self.off_section_weight
    }

    #[inline]
    pub fn weight(&self, agent: usize, section: usize) -> f64 {
        if self.section_of[agent] == section {
            1.0
        } else {
            self.off_section_weight
        }
    }

    pub(crate) fn check_fits(&self, agents: usize, sections: usize) -> Result<()> {
        if self.section_of.len() < agents {
            return Err(Error::UnassignedAgent(self.section_of.len()));
        }
        if self.section_of.len() > agents {
            return Err(Error::InvalidPartition(format!(
                "assignment lists {} agents, profile has {agents}",
                self.section_of.len()
            )));
        }
        if let Some(agent) = self.section_of.iter().position(|&s| s >= sections) {
            return Err(Error::InvalidPartition(format!(
                "agent {agent} assigned to section {} of {sections}",
                self.section_of[agent]
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClusterMode {
    Exact,
    Anneal,
    /// Exact when within budget, otherwise anneal.
    #[default]
    Auto,
}

impl std::str::FromStr for ClusterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ClusterMode::Exact),
            "anneal" => Ok(ClusterMode::Anneal),
            "auto" => Ok(ClusterMode::Auto),
            _ => Err(Error::InvalidConfig(format!("unknown cluster mode `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterOptions {
    pub x_max: usize,
    pub off_section_weight: f64,
    pub mode: ClusterMode,
    /// Maximum number of (partition, assignment) pairs the exact mode visits.
    pub budget: u64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            x_max: 3,
            off_section_weight: 0.0,
            mode: ClusterMode::Auto,
            budget: 1_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClusteredSolution {
    pub solution: Solution,
    pub partition: SectionPartition,
    pub assignment: ClusterAssignment,
    pub score: f64,
    /// Present when the result came from annealing.
    pub trace: Option<SearchTrace>,
}

/// The optional 2-gram term: clustered weight `x_KC` and the model.
pub type TwoGramTerm<'a> = Option<(f64, &'a TransitionModel)>;

pub fn solve_clustered_kemeny(
    profile: &Profile,
    options: &ClusterOptions,
    two_gram: TwoGramTerm<'_>,
    anneal_config: &AnnealingConfig,
    space: &SearchSpace,
) -> Result<ClusteredSolution> {
    if options.x_max == 0 || options.x_max > profile.agents() {
        return Err(Error::InvalidPartition(format!(
            "section limit {} must lie in 1..={} (the agent count)",
            options.x_max,
            profile.agents()
        )));
    }
    let max_sections = options.x_max.min(profile.len());
    let needed = exact_search_size(profile.len(), profile.agents(), max_sections);
    let within_budget = needed <= options.budget as u128;
    match options.mode {
        ClusterMode::Exact if !within_budget => Err(Error::BudgetExceeded {
            needed,
            budget: options.budget,
        }),
        ClusterMode::Exact => Ok(exact(profile, options, two_gram, space, max_sections)),
        ClusterMode::Auto if within_budget => {
            Ok(exact(profile, options, two_gram, space, max_sections))
        }
        _ => annealed(profile, options, two_gram, anneal_config, space, max_sections),
    }
}

/// Best assignment and sequence for a fixed partition, by enumerating all
/// `sections^n` assignments.
pub fn solve_clustered_for_partition(
    profile: &Profile,
    partition: &SectionPartition,
    options: &ClusterOptions,
    two_gram: TwoGramTerm<'_>,
    space: &SearchSpace,
) -> Result<ClusteredSolution> {
    partition.check_fits(profile.len())?;
    let needed = pow_saturating(partition.sections() as u128, profile.agents());
    if needed > options.budget as u128 {
        return Err(Error::BudgetExceeded {
            needed,
            budget: options.budget,
        });
    }
    let table = DistanceTable::new(profile, space);
    let mut best: Option<Candidate> = None;
    search_assignments(&table, partition, options.off_section_weight, two_gram, space, &mut best);
    Ok(finish(profile, best.expect("at least one assignment"), options, two_gram))
}

fn pow_saturating(base: u128, exp: usize) -> u128 {
    (0..exp).try_fold(1u128, |acc, _| acc.checked_mul(base)).unwrap_or(u128::MAX)
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// `sum_{s=1..=max_sections} C(k-1, s-1) * s^n`.
fn exact_search_size(k: usize, n: usize, max_sections: usize) -> u128 {
    (1..=max_sections).fold(0u128, |acc, s| {
        acc.saturating_add(binomial(k - 1, s - 1).saturating_mul(pow_saturating(s as u128, n)))
    })
}

/// `dist[(j * s + c) * n + i] = d(b_ij, space[c])`, and
/// `support[j * s + c]` = votes for `space[c]` at position `j`.
struct DistanceTable {
    n: usize,
    k: usize,
    s: usize,
    dist: Vec<f64>,
    support: Vec<usize>,
}

impl DistanceTable {
    fn new(profile: &Profile, space: &SearchSpace) -> Self {
        let d = DistanceMatrix::global();
        let (n, k, s) = (profile.agents(), profile.len(), space.len());
        let mut dist = Vec::with_capacity(n * k * s);
        for j in 0..k {
            for &c in space.chords() {
                dist.extend((0..n).map(|i| d.get(profile.get(i, j), c)));
            }
        }
        let support = (0..k).flat_map(|j| column_support(profile, j, space)).collect();
        DistanceTable {
            n,
            k,
            s,
            dist,
            support,
        }
    }

    /// `unary[j][c] = scale * sum_i q(i, section(j)) * d(b_ij, c)`.
    fn unary(&self, partition: &SectionPartition, q: &[f64], scale: f64) -> Vec<Vec<f64>> {
        let sections = partition.sections();
        let mut unary = vec![vec![0.0; self.s]; self.k];
        for (z, range) in partition.ranges().enumerate() {
            for j in range {
                for (c, slot) in unary[j].iter_mut().enumerate() {
                    let base = (j * self.s + c) * self.n;
                    let mut total = 0.0;
                    for i in 0..self.n {
                        total += q[i * sections + z] * self.dist[base + i];
                    }
                    *slot = scale * total;
                }
            }
        }
        unary
    }
}

struct Candidate {
    chords: Vec<ChordId>,
    partition: SectionPartition,
    section_of: Vec<usize>,
    cost: f64,
}

/// Sequence minimizing the (weighted) objective for fixed partition and
/// agent weights, and its cost.
fn best_sequence(
    table: &DistanceTable,
    partition: &SectionPartition,
    q: &[f64],
    two_gram: TwoGramTerm<'_>,
    space: &SearchSpace,
) -> (Vec<ChordId>, f64) {
    match two_gram {
        Some((x, model)) if x < 1.0 => {
            let unary = table.unary(partition, q, x);
            let chords = chain_dp(&unary, 1.0 - x, model, space);
            let mut cost = 0.0;
            for (j, &c) in chords.iter().enumerate() {
                let idx = space.chords().binary_search(&c).expect("dp stays in space");
                cost += unary[j][idx];
            }
            let g = neg_log_likelihood(model, &chords).unwrap_or(f64::INFINITY);
            (chords, cost + (1.0 - x) * g)
        }
        _ => {
            let unary = table.unary(partition, q, 1.0);
            let mut cost = 0.0;
            let chords = unary
                .iter()
                .enumerate()
                .map(|(j, u)| {
                    let idx = min_with_support(u, &table.support[j * table.s..(j + 1) * table.s]);
                    cost += u[idx];
                    space.chords()[idx]
                })
                .collect();
            (chords, cost)
        }
    }
}

fn search_assignments(
    table: &DistanceTable,
    partition: &SectionPartition,
    off_weight: f64,
    two_gram: TwoGramTerm<'_>,
    space: &SearchSpace,
    best: &mut Option<Candidate>,
) {
    let n = table.n;
    let sections = partition.sections();
    let mut section_of = vec![0usize; n];
    let mut q = vec![0.0; n * sections];
    loop {
        for (i, &z) in section_of.iter().enumerate() {
            for s in 0..sections {
                q[i * sections + s] = if s == z { 1.0 } else { off_weight };
            }
        }
        let (chords, cost) = best_sequence(table, partition, &q, two_gram, space);
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            *best = Some(Candidate {
                chords,
                partition: partition.clone(),
                section_of: section_of.clone(),
                cost,
            });
        }
        // Next assignment, agent 0 most significant.
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            section_of[i] += 1;
            if section_of[i] < sections {
                break;
            }
            section_of[i] = 0;
        }
    }
}

/// All partitions of `0..k` into `sections` contiguous parts, cut points in
/// lexicographic order.
fn partitions_with(k: usize, sections: usize, x_max: usize) -> Vec<SectionPartition> {
    let cuts = sections - 1;
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (1..=cuts).collect();
    if cuts >= k {
        return out;
    }
    loop {
        let mut starts = vec![0];
        starts.extend_from_slice(&combo);
        out.push(SectionPartition::new(k, starts, x_max).expect("valid cuts"));
        // Advance the combination of `cuts` values from 1..k.
        let mut idx = cuts;
        loop {
            if idx == 0 {
                return out;
            }
            idx -= 1;
            if combo[idx] < k - (cuts - idx) {
                combo[idx] += 1;
                for t in idx + 1..cuts {
                    combo[t] = combo[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn exact(
    profile: &Profile,
    options: &ClusterOptions,
    two_gram: TwoGramTerm<'_>,
    space: &SearchSpace,
    max_sections: usize,
) -> ClusteredSolution {
    let table = DistanceTable::new(profile, space);
    let mut best: Option<Candidate> = None;
    for sections in 1..=max_sections {
        for partition in partitions_with(profile.len(), sections, options.x_max) {
            search_assignments(&table, &partition, options.off_section_weight, two_gram, space, &mut best);
        }
    }
    finish(profile, best.expect("k >= 1 gives at least one partition"), options, two_gram)
}

fn finish(
    profile: &Profile,
    best: Candidate,
    options: &ClusterOptions,
    two_gram: TwoGramTerm<'_>,
) -> ClusteredSolution {
    let assignment = ClusterAssignment::new(best.section_of, options.off_section_weight)
        .expect("weight validated by caller");
    let score = evaluate(profile, &best.chords, &best.partition, &assignment, two_gram);
    ClusteredSolution {
        solution: Solution::new(best.chords).with_score(rule_name(two_gram), score),
        partition: best.partition,
        assignment,
        score,
        trace: None,
    }
}

fn rule_name(two_gram: TwoGramTerm<'_>) -> &'static str {
    if two_gram.is_some() {
        "clustered2"
    } else {
        "clustered"
    }
}

fn evaluate(
    profile: &Profile,
    chords: &[ChordId],
    partition: &SectionPartition,
    assignment: &ClusterAssignment,
    two_gram: TwoGramTerm<'_>,
) -> f64 {
    let base = score_clustered_kemeny(profile, chords, partition, assignment)
        .expect("state kept consistent with the profile");
    match two_gram {
        Some((x, model)) if x < 1.0 => {
            let g = neg_log_likelihood(model, chords).unwrap_or(f64::INFINITY);
            x * base + (1.0 - x) * g
        }
        _ => base,
    }
}

#[derive(Clone, Debug)]
pub(crate) struct ClusterState {
    pub chords: Vec<ChordId>,
    pub partition: SectionPartition,
    pub section_of: Vec<usize>,
}

/// Chord, boundary or reassignment move with equal probability. Boundary and
/// reassignment moves are no-ops with a single section.
pub(crate) fn clustered_neighbor(state: &ClusterState, space: &SearchSpace, rng: &mut SimRng) -> ClusterState {
    let mut next = state.clone();
    let sections = state.partition.sections();
    match rng.random_range(0..3u8) {
        0 => {
            let j = rng.random_range(0..next.chords.len());
            next.chords[j] = different_chord(next.chords[j], space, rng);
        }
        1 if sections > 1 => {
            let b = rng.random_range(1..sections);
            let starts = state.partition.starts();
            let lo = starts[b - 1];
            let hi = starts.get(b + 1).copied().unwrap_or(state.partition.len());
            let shifts = if rng.random::<bool>() { [-1i64, 1] } else { [1, -1] };
            for shift in shifts {
                let moved = starts[b] as i64 + shift;
                if moved > lo as i64 && moved < hi as i64 {
                    let mut new_starts = starts.to_vec();
                    new_starts[b] = moved as usize;
                    next.partition =
                        SectionPartition::new(state.partition.len(), new_starts, state.partition.x_max())
                            .expect("boundary stays between neighbours");
                    break;
                }
            }
        }
        2 if sections > 1 => {
            let agent = rng.random_range(0..next.section_of.len());
            let mut z = rng.random_range(0..sections - 1);
            if z >= state.section_of[agent] {
                z += 1;
            }
            next.section_of[agent] = z;
        }
        _ => {}
    }
    next
}

fn annealed(
    profile: &Profile,
    options: &ClusterOptions,
    two_gram: TwoGramTerm<'_>,
    config: &AnnealingConfig,
    space: &SearchSpace,
    max_sections: usize,
) -> Result<ClusteredSolution> {
    config.validate()?;
    let chords = solve_plurality(profile, space).chords;
    let partition = SectionPartition::even(profile.len(), max_sections, options.x_max)?;
    let d = DistanceMatrix::global();
    let section_of = profile
        .rows()
        .map(|row| {
            let per_section: Vec<f64> = partition
                .ranges()
                .map(|r| r.map(|j| d.get(row[j], chords[j])).sum())
                .collect();
            let total: f64 = per_section.iter().sum();
            let cost: Vec<f64> = per_section
                .iter()
                .map(|inside| inside + options.off_section_weight * (total - inside))
                .collect();
            first_min(&cost)
        })
        .collect();
    let initial = ClusterState {
        chords,
        partition,
        section_of,
    };
    let weight = options.off_section_weight;
    let (best, trace) = anneal(
        initial,
        super::Direction::Minimize,
        |s: &ClusterState| {
            let asg = ClusterAssignment {
                section_of: s.section_of.clone(),
                off_section_weight: weight,
            };
            evaluate(profile, &s.chords, &s.partition, &asg, two_gram)
        },
        |s, rng| clustered_neighbor(s, space, rng),
        config,
    );
    let assignment = ClusterAssignment::new(best.section_of, weight)?;
    let score = evaluate(profile, &best.chords, &best.partition, &assignment, two_gram);
    Ok(ClusteredSolution {
        solution: Solution::new(best.chords).with_score(rule_name(two_gram), score),
        partition: best.partition,
        assignment,
        score,
        trace: Some(trace),
    })
}
