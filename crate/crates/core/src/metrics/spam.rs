use nalgebra::{DMatrix, DVector};

use super::assignment::AssignmentMatrix;
use crate::error::{ReadoutError, Result};

/// Smallest |pivot| ratio accepted before the matrix counts as singular.
const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Corrects measured populations for assignment errors.
///
/// Solves `m x = raw`; when `x` falls outside the probability simplex it is
/// replaced by the nearest simplex point in Euclidean distance.
pub fn spam_mitigate(raw: &[f64], m: &AssignmentMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    if raw.len() != n {
        return Err(ReadoutError::InvalidArgument(format!(
            "population vector has {} entries, matrix is {n}x{n}",
            raw.len()
        )));
    }
    let a = DMatrix::from_fn(n, n, |i, j| m.p(i, j));
    let lu = a.lu();
    let u = lu.u();
    let scale = u.diagonal().iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    if u.diagonal()
        .iter()
        .any(|d| d.abs() <= SINGULARITY_TOLERANCE * scale.max(1.0))
    {
        return Err(ReadoutError::Numeric(
            "assignment matrix is singular".into(),
        ));
    }
    let x = lu
        .solve(&DVector::from_column_slice(raw))
        .ok_or_else(|| ReadoutError::Numeric("assignment matrix is singular".into()))?;
    Ok(project_to_simplex(x.as_slice()))
}
