use crate::annealing::{anneal, sequence_neighbor, AnnealingConfig, SearchTrace};
use crate::error::{Error, Result};
use crate::transition::TransitionModel;

use super::clustered::{solve_clustered_kemeny, ClusterOptions, ClusteredSolution};
use super::exact::{solve_kemeny, solve_kemeny_2gram_dp, solve_plurality, solve_plurality_2gram_dp};
use super::objectives::Objective;
use super::{BaseRule, Direction, ObjectiveWeights, Profile, Rule, SearchSpace, Solution};

#[derive(Clone, Debug, Default)]
pub struct AggregateOptions {
    pub weights: ObjectiveWeights,
    pub anneal: AnnealingConfig,
    pub cluster: ClusterOptions,
    pub space: SearchSpace,
}

/// Output of [`aggregate`]. `clustering` is set for the clustered rules and
/// `trace` whenever annealing produced the result.
#[derive(Clone, Debug)]
pub struct Aggregated {
    pub rule: Rule,
    pub solution: Solution,
    pub score: f64,
    pub clustering: Option<ClusteredSolution>,
    pub trace: Option<SearchTrace>,
}

/// Annealing over PAV (or PAV with the 2-gram term when `model` is given),
/// starting from the plurality solution and returning the best sequence seen.
pub fn solve_pav(
    profile: &Profile,
    weights: &ObjectiveWeights,
    model: Option<&TransitionModel>,
    config: &AnnealingConfig,
    space: &SearchSpace,
) -> Result<(Solution, SearchTrace)> {
    config.validate()?;
    let objective = match model {
        Some(model) => Objective::two_gram(BaseRule::Pav, *weights, model),
        None => Objective::base(BaseRule::Pav),
    };
    let initial = solve_plurality(profile, space).chords;
    // A zero-probability transition scores -inf under pav2 and is never kept.
    let (best, trace) = anneal(
        initial,
        Direction::Maximize,
        |w: &Vec<_>| objective.evaluate(profile, w).unwrap_or(f64::NEG_INFINITY),
        |w, rng| sequence_neighbor(w, space, rng),
        config,
    );
    let score = objective.evaluate(profile, &best)?;
    Ok((Solution::new(best).with_score(objective.rule.name(), score), trace))
}

/// Runs any of the eight rules with its designated solver.
pub fn aggregate(
    rule: Rule,
    profile: &Profile,
    model: Option<&TransitionModel>,
    options: &AggregateOptions,
) -> Result<Aggregated> {
    options.weights.validate()?;
    let model = match (rule.two_gram, model) {
        (true, None) => {
            return Err(Error::InvalidConfig(format!(
                "rule {rule} needs a transition model"
            )))
        }
        (true, Some(m)) => Some(m),
        (false, _) => None,
    };
    let space = &options.space;
    let weights = &options.weights;

    let mut trace = None;
    let mut clustering = None;
    let solution = match (rule.base, model) {
        (BaseRule::Plurality, None) => solve_plurality(profile, space),
        (BaseRule::Plurality, Some(m)) => solve_plurality_2gram_dp(profile, weights.plurality, m, space),
        (BaseRule::Kemeny, None) => solve_kemeny(profile, space),
        (BaseRule::Kemeny, Some(m)) => solve_kemeny_2gram_dp(profile, weights.kemeny, m, space),
        (BaseRule::Pav, m) => {
            let (solution, t) = solve_pav(profile, weights, m, &options.anneal, space)?;
            trace = Some(t);
            solution
        }
        (BaseRule::Clustered, m) => {
            let two_gram = m.map(|m| (weights.clustered, m));
            let mut solved = solve_clustered_kemeny(profile, &options.cluster, two_gram, &options.anneal, space)?;
            trace = solved.trace.take();
            let solution = solved.solution.clone();
            clustering = Some(solved);
            solution
        }
    };

    let mut objective = Objective {
        rule,
        weights: *weights,
        model,
        clustering: None,
    };
    if let Some(c) = &clustering {
        objective.clustering = Some((&c.partition, &c.assignment));
    }
    let score = objective.evaluate(profile, &solution.chords)?;
    let solution = Solution::new(solution.chords).with_score(rule.name(), score);
    Ok(Aggregated {
        rule,
        solution,
        score,
        clustering,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::score_pav;
    use super::*;

    #[test]
    fn two_gram_rules_need_a_model() {
        let p = toy_profile();
        for rule in Rule::ALL.into_iter().filter(|r| r.two_gram) {
            assert!(aggregate(rule, &p, None, &AggregateOptions::default()).is_err());
        }
    }

    #[test]
    fn every_rule_runs_on_the_toy() {
        let p = toy_profile();
        let model = TransitionModel::uniform();
        for rule in Rule::ALL {
            let out = aggregate(rule, &p, Some(&model), &AggregateOptions::default()).unwrap();
            assert_eq!(out.solution.len(), 4);
            assert!(out.score.is_finite(), "{rule}");
            assert_eq!(out.clustering.is_some(), rule.base == BaseRule::Clustered);
        }
    }

    #[test]
    fn pav_single_agent_recovers_row() {
        let row = seq("CMaj7 Dm7 G7 Am7 FMaj7 E7");
        let p = Profile::new(vec![row.clone()]).unwrap();
        let (sol, trace) = solve_pav(
            &p,
            &ObjectiveWeights::default(),
            None,
            &AnnealingConfig::default(),
            &SearchSpace::full(),
        )
        .unwrap();
        assert_eq!(sol.chords, row);
        assert!(trace.is_monotone());
    }

    #[test]
    fn pav_never_below_plurality_start() {
        let p = toy_profile();
        let space = SearchSpace::full();
        let start = score_pav(&p, &solve_plurality(&p, &space).chords).unwrap();
        for seed in 0..5 {
            let config = AnnealingConfig::default().with_seed(seed);
            let (sol, _) = solve_pav(&p, &ObjectiveWeights::default(), None, &config, &space).unwrap();
            assert!(score_pav(&p, &sol.chords).unwrap() >= start);
        }
    }
}
