use crate::chord::{ChordId, DistanceMatrix};
use crate::error::{Error, Result};
use crate::transition::{neg_log_likelihood, TransitionModel};

use super::clustered::{ClusterAssignment, SectionPartition};
use super::{BaseRule, Direction, ObjectiveWeights, Profile, Rule};

/// Sum of Jaccard distances between agent `agent`'s sequence and `sequence`.
/// Zero means the agent got exactly what it proposed.
pub fn satisfaction(profile: &Profile, agent: usize, sequence: &[ChordId]) -> Result<f64> {
    profile.check_len(sequence)?;
    if agent >= profile.agents() {
        return Err(Error::InvalidProfile(format!(
            "agent {agent} out of range for {} agents",
            profile.agents()
        )));
    }
    let d = DistanceMatrix::global();
    Ok(profile
        .row(agent)
        .iter()
        .zip(sequence)
        .map(|(&b, &w)| d.get(b, w))
        .sum())
}

/// `k - satisfaction`: higher means closer. A reporting convenience only.
pub fn similarity(profile: &Profile, agent: usize, sequence: &[ChordId]) -> Result<f64> {
    satisfaction(profile, agent, sequence).map(|s| profile.len() as f64 - s)
}

/// Number of (agent, position) cells where the agent's chord equals `sequence`.
pub fn score_plurality(profile: &Profile, sequence: &[ChordId]) -> Result<u64> {
    profile.check_len(sequence)?;
    Ok(profile
        .rows()
        .map(|row| row.iter().zip(sequence).filter(|(a, b)| a == b).count() as u64)
        .sum())
}

/// Cumulative Jaccard distance over all agents and positions.
pub fn score_kemeny(profile: &Profile, sequence: &[ChordId]) -> Result<f64> {
    profile.check_len(sequence)?;
    let d = DistanceMatrix::global();
    Ok(profile
        .rows()
        .map(|row| row.iter().zip(sequence).map(|(&b, &w)| d.get(b, w)).sum::<f64>())
        .sum())
}

/// Harmonic-weighted utilities: each agent's per-position utilities
/// `1 - d` are sorted in descending order and the j-th largest is weighted
/// by `1/j`.
pub fn score_pav(profile: &Profile, sequence: &[ChordId]) -> Result<f64> {
    profile.check_len(sequence)?;
    let d = DistanceMatrix::global();
    let mut utilities = vec![0.0; profile.len()];
    let mut total = 0.0;
    for row in profile.rows() {
        for (u, (&b, &w)) in utilities.iter_mut().zip(row.iter().zip(sequence)) {
            *u = 1.0 - d.get(b, w);
        }
        utilities.sort_by(|a, b| b.total_cmp(a));
        total += utilities
            .iter()
            .enumerate()
            .map(|(j, u)| u / (j + 1) as f64)
            .sum::<f64>();
    }
    Ok(total)
}

/// Distance summed per section, where an agent counts fully inside its own
/// section and with `off_section_weight` elsewhere.
pub fn score_clustered_kemeny(
    profile: &Profile,
    sequence: &[ChordId],
    partition: &SectionPartition,
    assignment: &ClusterAssignment,
) -> Result<f64> {
    profile.check_len(sequence)?;
    partition.check_fits(profile.len())?;
    assignment.check_fits(profile.agents(), partition.sections())?;
    let d = DistanceMatrix::global();
    let mut total = 0.0;
    for (section, range) in partition.ranges().enumerate() {
        for (agent, row) in profile.rows().enumerate() {
            let q = assignment.weight(agent, section);
            if q == 0.0 {
                continue;
            }
            total += q * range.clone().map(|j| d.get(row[j], sequence[j])).sum::<f64>();
        }
    }
    Ok(total)
}

/// A base rule mixed with the 2-gram cost `G(W)`.
///
/// Minimized rules add the likelihood cost, maximized rules subtract it, so
/// in both cases an improbable progression is penalized:
///
/// * kemeny2 / clustered2: `x * base + (1 - x) * G`, minimized
/// * plurality2 / pav2: `x * base - (1 - x) * G`, maximized
///
/// At `x = 1` the value is the base objective exactly, and the likelihood
/// term is not evaluated.
pub fn combined_objective(
    rule: BaseRule,
    profile: &Profile,
    sequence: &[ChordId],
    weights: &ObjectiveWeights,
    model: &TransitionModel,
    clustering: Option<(&SectionPartition, &ClusterAssignment)>,
) -> Result<f64> {
    let base = base_score(rule, profile, sequence, clustering)?;
    let x = weights.for_rule(rule);
    if x == 1.0 {
        return Ok(base);
    }
    let g = neg_log_likelihood(model, sequence)?;
    Ok(match rule.direction() {
        Direction::Minimize => x * base + (1.0 - x) * g,
        Direction::Maximize => x * base - (1.0 - x) * g,
    })
}

fn base_score(
    rule: BaseRule,
    profile: &Profile,
    sequence: &[ChordId],
    clustering: Option<(&SectionPartition, &ClusterAssignment)>,
) -> Result<f64> {
    match rule {
        BaseRule::Plurality => score_plurality(profile, sequence).map(|m| m as f64),
        BaseRule::Kemeny => score_kemeny(profile, sequence),
        BaseRule::Pav => score_pav(profile, sequence),
        BaseRule::Clustered => {
            let (partition, assignment) = clustering.ok_or_else(|| {
                Error::InvalidConfig("clustered objective needs a partition and assignment".into())
            })?;
            score_clustered_kemeny(profile, sequence, partition, assignment)
        }
    }
}

/// Everything needed to score a candidate sequence under one of the eight
/// rules.
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub rule: Rule,
    pub weights: ObjectiveWeights,
    pub model: Option<&'a TransitionModel>,
    pub clustering: Option<(&'a SectionPartition, &'a ClusterAssignment)>,
}

impl<'a> Objective<'a> {
    pub fn base(rule: BaseRule) -> Self {
        Objective {
            rule: Rule::new(rule, false),
            weights: ObjectiveWeights::default(),
            model: None,
            clustering: None,
        }
    }

    pub fn two_gram(rule: BaseRule, weights: ObjectiveWeights, model: &'a TransitionModel) -> Self {
        Objective {
            rule: Rule::new(rule, true),
            weights,
            model: Some(model),
            clustering: None,
        }
    }

    pub fn with_clustering(mut self, partition: &'a SectionPartition, assignment: &'a ClusterAssignment) -> Self {
        self.clustering = Some((partition, assignment));
        self
    }

    pub fn direction(&self) -> Direction {
        self.rule.direction()
    }

    pub fn evaluate(&self, profile: &Profile, sequence: &[ChordId]) -> Result<f64> {
        if self.rule.two_gram {
            let model = self.model.ok_or_else(|| {
                Error::InvalidConfig(format!("rule {} needs a transition model", self.rule))
            })?;
            combined_objective(
                self.rule.base,
                profile,
                sequence,
                &self.weights,
                model,
                self.clustering,
            )
        } else {
            base_score(self.rule.base, profile, sequence, self.clustering)
        }
    }
}
