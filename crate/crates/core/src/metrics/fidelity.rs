use serde::{Deserialize, Serialize};

use super::assignment::AssignmentMatrix;
use crate::error::{ReadoutError, Result};

/// Summary of a readout calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub assignment_fidelity: f64,
    /// Overlap-limited fidelity at the measured SNR (two-state readout only).
    pub ideal_fidelity: Option<f64>,
    pub snr: Option<f64>,
    /// `conditional[i][j] = P(i | j)`.
    pub conditional: Vec<Vec<f64>>,
    pub overlap_discard_fraction: f64,
}

impl FidelityReport {
    pub fn from_matrix(m: &AssignmentMatrix, snr: Option<f64>) -> Result<Self> {
        let assignment_fidelity = if m.dim() == 2 {
            fidelity_two_state(m)?
        } else {
            fidelity_n_state(m)?
        };
        Ok(FidelityReport {
            assignment_fidelity,
            ideal_fidelity: snr.map(ideal_fidelity),
            snr,
            conditional: m.probabilities.clone(),
            overlap_discard_fraction: m.discard_fraction(),
        })
    }
}

/// `F_a = 1 - [P(0|1) + P(1|0)] / 2`.
pub fn fidelity_two_state(m: &AssignmentMatrix) -> Result<f64> {
    if m.dim() != 2 {
        return Err(ReadoutError::InvalidArgument(format!(
            "two-state fidelity needs a 2x2 matrix, got {0}x{0}",
            m.dim()
        )));
    }
    Ok(1.0 - (m.p(0, 1) + m.p(1, 0)) / 2.0)
}

/// Mean of the diagonal of the assignment matrix.
pub fn fidelity_n_state(m: &AssignmentMatrix) -> Result<f64> {
    let n = m.dim();
    if n == 0 {
        return Err(ReadoutError::InvalidArgument(
            "empty assignment matrix".into(),
        ));
    }
    Ok((0..n).map(|i| m.p(i, i)).sum::<f64>() / n as f64)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `|<S0> - <S1>| / sigma(S0)` with the sample standard deviation of the
/// ground-state set only.
pub fn snr(ground: &[f64], excited: &[f64]) -> Result<f64> {
    if ground.len() < 2 || excited.len() < 2 {
        return Err(ReadoutError::InvalidArgument(
            "SNR needs at least two outcomes per set".into(),
        ));
    }
    let m0 = mean(ground);
    let var = ground.iter().map(|x| (x - m0).powi(2)).sum::<f64>() / (ground.len() - 1) as f64;
    if !(var > 0.0) {
        return Err(ReadoutError::Numeric(
            "ground-state outcomes have zero variance".into(),
        ));
    }
    Ok((m0 - mean(excited)).abs() / var.sqrt())
}

/// `F_id = [1 + erf(sqrt(SNR^2 / 8))] / 2`.
pub fn ideal_fidelity(snr: f64) -> f64 {
    0.5 * (1.0 + libm::erf((snr * snr / 8.0).sqrt()))
}

/// Inverts [`ideal_fidelity`] by bisection; `fidelity` must lie in `[0.5, 1)`.
pub fn snr_for_ideal_fidelity(fidelity: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&fidelity) {
        return Err(ReadoutError::InvalidArgument(format!(
            "ideal fidelity {fidelity} outside [0.5, 1)"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while ideal_fidelity(hi) < fidelity {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ideal_fidelity(mid) < fidelity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two(p01: f64, p10: f64) -> AssignmentMatrix {
        AssignmentMatrix::from_probabilities(vec![vec![1.0 - p10, p01], vec![p10, 1.0 - p01]])
            .unwrap()
    }

    #[test]
    fn two_state_formula() {
        assert_eq!(fidelity_two_state(&two_by_two(0.0, 0.0)).unwrap(), 1.0);
        assert!((fidelity_two_state(&two_by_two(0.0092, 0.0008)).unwrap() - 0.995).abs() < 1e-12);
        assert!((fidelity_two_state(&two_by_two(0.5, 0.5)).unwrap() - 0.5).abs() < 1e-15);
        let three = AssignmentMatrix::from_probabilities(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(fidelity_two_state(&three).is_err());
    }

    #[test]
    fn two_state_fidelity_decreases_with_each_error() {
        let mut last = 1.0;
        for k in 1..50 {
            let f = fidelity_two_state(&two_by_two(k as f64 * 0.01, 0.02)).unwrap();
            assert!(f < last);
            last = f;
        }
    }

    #[test]
    fn n_state_is_diagonal_mean() {
        let uniform = AssignmentMatrix::from_probabilities(vec![vec![1.0 / 3.0; 3]; 3]);
        // 1/3 * 3 is not exactly 1 in floating point but within tolerance.
        assert!((fidelity_n_state(&uniform.unwrap()).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let d = AssignmentMatrix::from_probabilities(vec![
            vec![0.99, 0.01, 0.033],
            vec![0.005, 0.97, 0.02],
            vec![0.005, 0.02, 0.947],
        ])
        .unwrap();
        assert!((fidelity_n_state(&d).unwrap() - 0.969).abs() < 1e-12);
    }

    #[test]
    fn snr_arithmetic() {
        let ground = [-1.0, 1.0, -1.0, 1.0];
        let excited = [4.0, 4.0];
        // Sample std of ground is sqrt(4/3).
        let expected = 4.0 / (4.0f64 / 3.0).sqrt();
        assert!((snr(&ground, &excited).unwrap() - expected).abs() < 1e-12);
        assert_eq!(snr(&ground, &ground).unwrap(), 0.0);
        assert!(snr(&[1.0, 1.0], &excited).is_err());
        assert!(snr(&[1.0], &excited).is_err());
    }

    #[test]
    fn ideal_fidelity_limits_and_monotonicity() {
        assert_eq!(ideal_fidelity(0.0), 0.5);
        assert!((ideal_fidelity(50.0) - 1.0).abs() < 1e-15);
        let mut last = 0.5;
        for k in 1..200 {
            let f = ideal_fidelity(k as f64 * 0.05);
            assert!(f >= last && f <= 1.0);
            last = f;
        }
    }

    #[test]
    fn snr_for_threshold_fidelity() {
        let s = snr_for_ideal_fidelity(0.9995).unwrap();
        // erf(x) = 0.999 at x = 2.326753765513524; snr = 2 sqrt(2) x.
        assert!(
            (s - 2.0 * 2f64.sqrt() * 2.326_753_765_513_524).abs() < 1e-9,
            "{s}"
        );
        assert!((s - 6.58).abs() < 0.01);
        assert!((ideal_fidelity(s) - 0.9995).abs() < 1e-12);
        assert!(snr_for_ideal_fidelity(1.0).is_err());
    }
}
