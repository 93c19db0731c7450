//! Polynomial-time exact solvers.
//!
//! Plurality and Kemeny decompose per position. Their 2-gram variants couple
//! neighbouring positions only through `p(a' -> a)`, so a Viterbi-style
//! dynamic program over (position, last chord) is exact.

use crate::chord::{ChordId, DistanceMatrix};
use crate::transition::TransitionModel;

use super::{Profile, SearchSpace, Solution};

/// Per-position mode; ties go to the lowest chord id.
pub fn solve_plurality(profile: &Profile, space: &SearchSpace) -> Solution {
    let chords = (0..profile.len())
        .map(|j| argmin_first(space, |c| -(count_at(profile, j, c) as f64)))
        .collect();
    Solution::new(chords)
}

/// Per-position minimizer of summed distance.
///
/// Distinct chords can share a pitch-class set (Dm7b5 and Fm6, or the four
/// dim7 spellings), so ties are common. They go to the chord with the most
/// votes in the column, then to the lowest id.
pub fn solve_kemeny(profile: &Profile, space: &SearchSpace) -> Solution {
    let unary = kemeny_unary(profile, space, 1.0);
    let chords = unary
        .iter()
        .enumerate()
        .map(|(j, costs)| space.chords()[min_with_support(costs, &column_support(profile, j, space))])
        .collect();
    Solution::new(chords)
}

/// Exact minimizer of `x_K * K(W) + (1 - x_K) * G(W)`.
pub fn solve_kemeny_2gram_dp(
    profile: &Profile,
    kemeny_weight: f64,
    model: &TransitionModel,
    space: &SearchSpace,
) -> Solution {
    let unary = kemeny_unary(profile, space, kemeny_weight);
    Solution::new(chain_dp(&unary, 1.0 - kemeny_weight, model, space))
}

/// Exact maximizer of `x_M * M(W) - (1 - x_M) * G(W)`, solved as the
/// minimization of its negation.
pub fn solve_plurality_2gram_dp(
    profile: &Profile,
    plurality_weight: f64,
    model: &TransitionModel,
    space: &SearchSpace,
) -> Solution {
    let unary: Vec<Vec<f64>> = (0..profile.len())
        .map(|j| {
            space
                .chords()
                .iter()
                .map(|&c| -plurality_weight * count_at(profile, j, c) as f64)
                .collect()
        })
        .collect();
    Solution::new(chain_dp(&unary, 1.0 - plurality_weight, model, space))
}

fn count_at(profile: &Profile, position: usize, chord: ChordId) -> usize {
    profile.column(position).filter(|&b| b == chord).count()
}

/// `unary[j][c] = weight * sum_i d(b_ij, space[c])`.
pub(crate) fn kemeny_unary(profile: &Profile, space: &SearchSpace, weight: f64) -> Vec<Vec<f64>> {
    let d = DistanceMatrix::global();
    (0..profile.len())
        .map(|j| {
            space
                .chords()
                .iter()
                .map(|&c| weight * profile.column(j).map(|b| d.get(b, c)).sum::<f64>())
                .collect()
        })
        .collect()
}

fn argmin_first(space: &SearchSpace, cost: impl Fn(ChordId) -> f64) -> ChordId {
    let costs: Vec<f64> = space.chords().iter().map(|&c| cost(c)).collect();
    space.chords()[first_min(&costs)]
}

/// `support[c]` = number of agents choosing `space[c]` at `position`.
pub(crate) fn column_support(profile: &Profile, position: usize, space: &SearchSpace) -> Vec<usize> {
    space.chords().iter().map(|&c| count_at(profile, position, c)).collect()
}

/// Index of the minimum of `costs`. Exact ties go to the largest `support`,
/// then to the first index.
pub(crate) fn min_with_support(costs: &[f64], support: &[usize]) -> usize {
    let mut best = 0;
    for i in 1..costs.len() {
        if costs[i] < costs[best] || (costs[i] == costs[best] && support[i] > support[best]) {
            best = i;
        }
    }
    best
}

/// Index of the first minimum.
pub(crate) fn first_min(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Minimizes `sum_j unary[j][a_j] + pair_weight * sum_j -ln p(a_{j-1}, a_j)`
/// over sequences drawn from `space`.
///
/// `T(0, a) = unary[0][a]`,
/// `T(j, a) = unary[j][a] + min_a' (T(j-1, a') + pair_weight * cost(a', a))`.
/// Ties keep the lowest predecessor id and the lowest final id.
pub(crate) fn chain_dp(
    unary: &[Vec<f64>],
    pair_weight: f64,
    model: &TransitionModel,
    space: &SearchSpace,
) -> Vec<ChordId> {
    let k = unary.len();
    if k == 0 {
        return Vec::new();
    }
    let chords = space.chords();
    let s = chords.len();
    if pair_weight == 0.0 {
        return unary.iter().map(|u| chords[first_min(u)]).collect();
    }

    // pair[a' * s + a] = pair_weight * -ln p(a' -> a)
    let pair: Vec<f64> = chords
        .iter()
        .flat_map(|&from| chords.iter().map(move |&to| pair_weight * model.cost(from, to)))
        .collect();

    let mut back = vec![0usize; k * s];
    let mut prev = unary[0].clone();
    let mut cur = vec![0.0; s];
    for j in 1..k {
        for a in 0..s {
            let mut best = 0;
            let mut best_val = prev[0] + pair[a];
            for a_prev in 1..s {
                let v = prev[a_prev] + pair[a_prev * s + a];
                if v < best_val {
                    best_val = v;
                    best = a_prev;
                }
            }
            back[j * s + a] = best;
            cur[a] = best_val + unary[j][a];
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut idx = first_min(&prev);
    let mut path = vec![chords[idx]; k];
    for j in (1..k).rev() {
        idx = back[j * s + idx];
        path[j - 1] = chords[idx];
    }
    path
}
