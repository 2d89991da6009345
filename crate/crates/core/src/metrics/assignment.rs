use serde::{Deserialize, Serialize};

use crate::error::{ReadoutError, Result};

/// Conditional assignment probabilities `P(assigned = i | prepared = j)`,
/// stored as `probabilities[i][j]` so that every column sums to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    pub probabilities: Vec<Vec<f64>>,
    /// Retained shots per prepared state.
    pub counts: Vec<usize>,
    /// Shots per prepared state dropped as overlap errors.
    pub discarded: Vec<usize>,
}

impl AssignmentMatrix {
    /// Builds a matrix from known probabilities (columns must sum to one).
    pub fn from_probabilities(probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let n = probabilities.len();
        if n == 0 || probabilities.iter().any(|row| row.len() != n) {
            return Err(ReadoutError::InvalidArgument(
                "assignment matrix must be square and non-empty".into(),
            ));
        }
        for j in 0..n {
            let mut total = 0.0;
            for row in &probabilities {
                if !(0.0..=1.0).contains(&row[j]) {
                    return Err(ReadoutError::InvalidArgument(format!(
                        "assignment probability {} outside [0, 1]",
                        row[j]
                    )));
                }
                total += row[j];
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(ReadoutError::InvalidArgument(format!(
                    "column {j} sums to {total}, not 1"
                )));
            }
        }
        Ok(AssignmentMatrix {
            probabilities,
            counts: vec![0; n],
            discarded: vec![0; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.probabilities.len()
    }

    /// `P(assigned | prepared)`.
    pub fn p(&self, assigned: usize, prepared: usize) -> f64 {
        self.probabilities[assigned][prepared]
    }

    /// Fraction of all shots discarded as overlap errors.
    pub fn discard_fraction(&self) -> f64 {
        let dropped: usize = self.discarded.iter().sum();
        let total = dropped + self.counts.iter().sum::<usize>();
        if total == 0 {
            0.0
        } else {
            dropped as f64 / total as f64
        }
    }

    /// Applies the matrix to a population vector.
    pub fn apply(&self, population: &[f64]) -> Vec<f64> {
        self.probabilities
            .iter()
            .map(|row| row.iter().zip(population).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Column-normalised frequencies from `(prepared, assigned)` pairs over `n`
/// states. `None` marks a discarded (overlap-error) shot.
pub fn assignment_matrix(
    outcomes: impl IntoIterator<Item = (usize, Option<usize>)>,
    n: usize,
) -> Result<AssignmentMatrix> {
    let mut hits = vec![vec![0usize; n]; n];
    let mut counts = vec![0usize; n];
    let mut discarded = vec![0usize; n];
    for (prepared, assigned) in outcomes {
        if prepared >= n {
            return Err(ReadoutError::InvalidArgument(format!(
                "prepared state {prepared} outside 0..{n}"
            )));
        }
        match assigned {
            Some(a) if a < n => {
                hits[a][prepared] += 1;
                counts[prepared] += 1;
            }
            Some(a) => {
                return Err(ReadoutError::InvalidArgument(format!(
                    "assigned state {a} outside 0..{n}"
                )))
            }
            None => discarded[prepared] += 1,
        }
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(ReadoutError::InvalidArgument(format!(
            "prepared state {j} has no retained shots"
        )));
    }
    let probabilities = hits
        .iter()
        .map(|row| {
            row.iter()
                .zip(&counts)
                .map(|(&h, &c)| h as f64 / c as f64)
                .collect()
        })
        .collect();
    Ok(AssignmentMatrix {
        probabilities,
        counts,
        discarded,
    })
}
