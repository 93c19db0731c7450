use crate::chord::ChordId;
use crate::error::{Error, Result};

use super::{Direction, SearchSpace, Solution};

pub const DEFAULT_BRUTE_FORCE_BUDGET: u64 = 1_000_000;

/// Enumerates every sequence in `space^k` in lexicographic order and returns
/// the first one with the best score.
///
/// Intended as a test oracle: it shares nothing with the solvers beyond the
/// objective it is handed.
pub fn brute_force_optimum<F>(
    mut objective: F,
    direction: Direction,
    space: &SearchSpace,
    k: usize,
    budget: u64,
) -> Result<(Solution, f64)>
where
    F: FnMut(&[ChordId]) -> f64,
{
    let s = space.len() as u128;
    let needed = (0..k).try_fold(1u128, |acc, _| acc.checked_mul(s)).unwrap_or(u128::MAX);
    if needed > budget as u128 {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let chords = space.chords();
    let mut digits = vec![0usize; k];
    let mut current: Vec<ChordId> = vec![chords[0]; k];
    let mut best = current.clone();
    let mut best_score = objective(&current);
    loop {
        // Odometer increment, last position fastest.
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok((Solution::new(best), best_score));
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < chords.len() {
                current[pos] = chords[digits[pos]];
                break;
            }
            digits[pos] = 0;
            current[pos] = chords[0];
        }
        let score = objective(&current);
        if direction.better(score, best_score) {
            best_score = score;
            best.copy_from_slice(&current);
        }
    }
}
