//! Auxiliary indexes: sensitivity gain over a baseline and direction of
//! intensity change.

use serde::{Deserialize, Serialize};

use crate::error::{IqaError, Result};
use crate::image::Image;
use crate::numeric::sum;

/// A sensitivity comparison between a baseline score and a candidate score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensiResult {
    pub baseline_score: f64,
    pub candidate_score: f64,
    pub sensi: f64,
}

impl SensiResult {
    pub fn new(baseline_score: f64, candidate_score: f64) -> Result<Self> {
        Ok(Self {
            baseline_score,
            candidate_score,
            sensi: sensi(baseline_score, candidate_score)?,
        })
    }
}

/// `(baseline - candidate) / (1 - baseline)`: positive when the candidate
/// reports a larger drop from identity than the baseline does.
pub fn sensi(baseline: f64, candidate: f64) -> Result<f64> {
    if baseline.is_nan() || baseline >= 1.0 {
        return Err(IqaError::UndefinedSensitivity(baseline));
    }
    Ok((baseline - candidate) / (1.0 - baseline))
}

/// Sign of the total intensity difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirecResult {
    pub direc: i8,
}

/// `1` when `x` carries more total intensity than `y`, `-1` when less, and
/// `0` when `|sum(x_i - y_i)| <= 1e-12 N`.
pub fn direc(x: &Image, y: &Image) -> Result<i8> {
    x.check_dims(y)?;
    let total = sum(x.pixels().iter().zip(y.pixels()).map(|(a, b)| a - b));
    let tol = 1e-12 * x.len() as f64;
    Ok(if total > tol {
        1
    } else if total < -tol {
        -1
    } else {
        0
    })
}
