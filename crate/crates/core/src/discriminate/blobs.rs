use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::labels::SecondaryLabel;
use super::projection::mean;
use crate::error::{ReadoutError, Result};

/// Circular Gaussian cluster in the IQ plane; `sigma` is the per-quadrature
/// standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianBlob {
    pub mean: Complex64,
    pub sigma: f64,
}

impl GaussianBlob {
    pub fn new(mean: Complex64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(ReadoutError::InvalidArgument(format!(
                "blob width must be positive, got {sigma}"
            )));
        }
        Ok(GaussianBlob { mean, sigma })
    }

    /// Log density up to a constant shared by all blobs.
    fn log_likelihood(&self, x: Complex64) -> f64 {
        -(x - self.mean).norm_sqr() / (2.0 * self.sigma * self.sigma) - 2.0 * self.sigma.ln()
    }
}

/// Mean and pooled per-quadrature width of a set of shots.
pub fn fit_blob(points: &[Complex64]) -> Result<GaussianBlob> {
    if points.len() < 2 {
        return Err(ReadoutError::InvalidArgument(
            "blob fit needs at least two shots".into(),
        ));
    }
    let m = mean(points);
    let ss: f64 = points.iter().map(|p| (p - m).norm_sqr()).sum();
    let sigma = (ss / (2.0 * (points.len() - 1) as f64)).sqrt();
    GaussianBlob::new(m, sigma)
}

/// Most likely label for `x`. Ties go to the earliest entry of `blobs`.
///
/// With equal widths this is nearest-mean classification.
pub fn classify_nearest<L: Copy>(x: Complex64, blobs: &[(L, GaussianBlob)]) -> L {
    assert!(!blobs.is_empty(), "at least one blob is required");
    let equal_widths = blobs.iter().all(|(_, b)| b.sigma == blobs[0].1.sigma);
    let score = |b: &GaussianBlob| {
        if equal_widths {
            -(x - b.mean).norm_sqr()
        } else {
            b.log_likelihood(x)
        }
    };
    let mut best = 0;
    let mut best_score = score(&blobs[0].1);
    for (i, (_, b)) in blobs.iter().enumerate().skip(1) {
        let s = score(b);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    blobs[best].0
}

/// One blob per secondary-tone label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondaryBlobs {
    pub zero: GaussianBlob,
    pub one: GaussianBlob,
    pub tilde_two: GaussianBlob,
}

impl SecondaryBlobs {
    fn ordered(&self) -> [(SecondaryLabel, GaussianBlob); 3] {
        [
            (SecondaryLabel::Zero, self.zero),
            (SecondaryLabel::One, self.one),
            (SecondaryLabel::TildeTwo, self.tilde_two),
        ]
    }
}

/// Secondary-tone classification; equidistant shots resolve in the order
/// `Zero < One < TildeTwo`.
pub fn classify_secondary(shot: Complex64, blobs: &SecondaryBlobs) -> SecondaryLabel {
    classify_nearest(shot, &blobs.ordered())
}
