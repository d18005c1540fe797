//! Exhaustive grid search over channels, used as an oracle for `solve_irf`.

use rayon::prelude::*;

use super::{IrfProblem, IrfSolution, SolveStatus};
use crate::error::{Error, Result};
use crate::probcore::{self, Channel};

/// Largest source or reconstruction alphabet the oracle accepts.
pub const ORACLE_MAX_ALPHABET: usize = 3;

/// Largest number of grid channels the oracle will enumerate.
pub const ORACLE_MAX_GRID_POINTS: u64 = 400_000_000;

/// Feasibility slack on grid points, absorbing rounding in `c/K` entries.
const GRID_SLACK: f64 = 1e-12;

/// All rows `(c_0/K, …, c_{n-1}/K)` with non-negative integer `c` summing to `K`.
fn grid_rows(divisions: usize, n: usize) -> Vec<Vec<f64>> {
    fn fill(rest: usize, slots: usize, k: f64, prefix: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if slots == 1 {
            prefix.push(rest as f64 / k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=rest {
            prefix.push(c as f64 / k);
            fill(rest - c, slots - 1, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(
        divisions,
        n,
        divisions as f64,
        &mut Vec::with_capacity(n),
        &mut out,
    );
    out
}

/// Minimum mutual information over all channels whose rows lie on the grid of
/// spacing `grid_step`, subject to the problem's constraints. Returns status
/// `Infeasible` when no grid channel satisfies them.
pub fn brute_force_irf(problem: &IrfProblem, grid_step: f64) -> Result<IrfSolution> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step} must lie in (0, 0.5]"
        )));
    }
    let source = problem.source().probs();
    let m = source.len();
    let n = problem.recon_alphabet_size();
    if m > ORACLE_MAX_ALPHABET || n > ORACLE_MAX_ALPHABET {
        return Err(Error::TooLarge(format!(
            "{m}x{n} channel; the oracle handles at most {ORACLE_MAX_ALPHABET}x{ORACLE_MAX_ALPHABET}"
        )));
    }
    let divisions = (1.0 / grid_step).round() as usize;
    let rows = grid_rows(divisions, n);
    let points = (rows.len() as u64).checked_pow(m as u32);
    if points.is_none_or(|p| p > ORACLE_MAX_GRID_POINTS) {
        return Err(Error::TooLarge(format!(
            "{} rows per input gives more than {ORACLE_MAX_GRID_POINTS} grid channels",
            rows.len()
        )));
    }

    let active: Vec<_> = problem
        .constraints()
        .iter()
        .filter(|c| c.is_active())
        .collect();

    // Odometer over rows 1..m for each choice of row 0; ties keep the
    // lexicographically first channel so the result is deterministic.
    let best = (0..rows.len())
        .into_par_iter()
        .filter_map(|first| {
            let mut digits = vec![0usize; m];
            digits[0] = first;
            let mut flat = vec![0.0; m * n];
            let mut best: Option<(f64, Vec<usize>)> = None;
            loop {
                for (x, &d) in digits.iter().enumerate() {
                    flat[x * n..(x + 1) * n].copy_from_slice(&rows[d]);
                }
                let feasible = active.iter().all(|c| {
                    probcore::evaluate_functional_of(&c.functional, source, &flat, n)
                        <= c.threshold + GRID_SLACK
                });
                if feasible {
                    let mi = probcore::mutual_information_of(source, &flat, n);
                    if best.as_ref().is_none_or(|(b, _)| mi < *b) {
                        best = Some((mi, digits.clone()));
                    }
                }
                // Advance rows m-1, …, 1.
                let mut x = m - 1;
                loop {
                    if x == 0 {
                        return best;
                    }
                    digits[x] += 1;
                    if digits[x] < rows.len() {
                        break;
                    }
                    digits[x] = 0;
                    x -= 1;
                }
            }
        })
        .reduce_with(|a, b| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        });

    let (status, digits) = match best {
        Some((_, digits)) => (SolveStatus::Optimal, digits),
        None => (SolveStatus::Infeasible, vec![0; m]),
    };
    let channel = Channel::new(digits.iter().map(|&d| rows[d].clone()).collect())?;
    let achieved = problem.evaluate(&channel)?;
    let rate_bits = match status {
        SolveStatus::Optimal => probcore::mutual_information(problem.source(), &channel)?,
        _ => f64::INFINITY,
    };
    Ok(IrfSolution {
        rate_bits,
        channel,
        achieved,
        status,
        gap_estimate: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rows_are_compositions() {
        let rows = grid_rows(4, 3);
        // C(4 + 2, 2)
        assert_eq!(rows.len(), 15);
        for r in &rows {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(grid_rows(10, 1), vec![vec![1.0]]);
    }
}
