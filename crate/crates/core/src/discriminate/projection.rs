use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::labels::PrimaryLabel;
use crate::error::{ReadoutError, Result};

/// Threshold discriminator along the line joining two blob means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionAxis {
    pub origin: Complex64,
    /// Unit vector pointing from the ground-state mean to the excited mean.
    pub direction: Complex64,
    pub threshold: f64,
}

impl ProjectionAxis {
    /// Coordinate of `point` along the axis, measured from `origin`.
    pub fn project(&self, point: Complex64) -> f64 {
        ((point - self.origin) * self.direction.conj()).re
    }

    /// Coordinates in units of the axis: `(along, across)`.
    pub fn coordinates(&self, point: Complex64) -> (f64, f64) {
        let z = (point - self.origin) * self.direction.conj();
        (z.re, z.im)
    }
}

pub(crate) fn mean(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

/// Fits the axis from calibration shots of the ground and excited states.
///
/// Assumes equal blob widths, so the threshold sits at the midpoint of the
/// projected means.
pub fn fit_projection(ground: &[Complex64], excited: &[Complex64]) -> Result<ProjectionAxis> {
    if ground.is_empty() || excited.is_empty() {
        return Err(ReadoutError::InvalidArgument(
            "projection fit needs shots of both states".into(),
        ));
    }
    let m0 = mean(ground);
    let m1 = mean(excited);
    let separation = (m1 - m0).norm();
    if !(separation > 0.0) {
        return Err(ReadoutError::Numeric(
            "calibration means coincide; states are not separated".into(),
        ));
    }
    Ok(ProjectionAxis {
        origin: m0,
        direction: (m1 - m0) / separation,
        threshold: separation / 2.0,
    })
}

/// `Zero` iff the projection lies strictly below the threshold; a shot exactly
/// on the threshold is `NotZero`.
pub fn classify_two_state(shot: Complex64, axis: &ProjectionAxis) -> PrimaryLabel {
    if axis.project(shot) < axis.threshold {
        PrimaryLabel::Zero
    } else {
        PrimaryLabel::NotZero
    }
}
