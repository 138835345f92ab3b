use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IqaError, Result};
use crate::image::Image;
use crate::numeric::sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingKind {
    Gaussian,
    Tanh,
    Sigmoid,
}

impl WeightingKind {
    pub const ALL: [WeightingKind; 3] = [WeightingKind::Gaussian, WeightingKind::Tanh, WeightingKind::Sigmoid];

    pub fn as_str(&self) -> &'static str {
        match self {
            WeightingKind::Gaussian => "gaussian",
            WeightingKind::Tanh => "tanh",
            WeightingKind::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for WeightingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WeightingKind {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        WeightingKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| IqaError::Unknown {
                kind: "weighting",
                value: s.to_string(),
            })
    }
}

/// Intensity weighting function `g(z)`, increasing on `[0, 1]` with values
/// in `(0, 1)` on the open interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightingSpec {
    /// `exp(-(z - 1)^2 / (2 sigma^2))`
    Gaussian { sigma: f64 },
    /// `tanh(k z)`
    Tanh { k: f64 },
    /// `1 / (1 + exp(-k (z - center)))`
    Sigmoid { k: f64, center: f64 },
}

impl WeightingSpec {
    pub fn kind(&self) -> WeightingKind {
        match self {
            WeightingSpec::Gaussian { .. } => WeightingKind::Gaussian,
            WeightingSpec::Tanh { .. } => WeightingKind::Tanh,
            WeightingSpec::Sigmoid { .. } => WeightingKind::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightingSpec::Gaussian { sigma } => sigma > 0.0 && sigma.is_finite(),
            WeightingSpec::Tanh { k } => k > 0.0 && k.is_finite(),
            WeightingSpec::Sigmoid { k, center } => k > 0.0 && k.is_finite() && center.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(IqaError::InvalidParameter(format!("invalid weighting {self:?}")))
        }
    }

    #[inline]
    pub(crate) fn eval(&self, z: f64) -> f64 {
        match *self {
            WeightingSpec::Gaussian { sigma } => (-(z - 1.0) * (z - 1.0) / (2.0 * sigma * sigma)).exp(),
            WeightingSpec::Tanh { k } => (k * z).tanh(),
            WeightingSpec::Sigmoid { k, center } => 1.0 / (1.0 + (-k * (z - center)).exp()),
        }
    }
}

/// Evaluates `g(z)` for a normalized intensity.
pub fn weighting_function(z: f64, spec: WeightingSpec) -> Result<f64> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&z) {
        return Err(IqaError::InvalidParameter(format!(
            "weighting input must lie in [0, 1], got {z}"
        )));
    }
    Ok(spec.eval(z))
}

/// Per-pixel weighting factors `f(x_i) = g(x_i) / sum_j g(x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightingFactors {
    pub factors: Vec<f64>,
    /// Set when every `g(x_i)` was zero and uniform `1/N` factors were substituted.
    pub degenerate: bool,
}

pub(crate) fn factors_from(x: &Image, g: impl Fn(f64) -> f64) -> WeightingFactors {
    let raw: Vec<f64> = x.pixels().iter().map(|&z| g(z)).collect();
    let total = sum(raw.iter().copied());
    if total > 0.0 {
        WeightingFactors {
            factors: raw.iter().map(|v| v / total).collect(),
            degenerate: false,
        }
    } else {
        let n = x.len() as f64;
        WeightingFactors {
            factors: vec![1.0 / n; x.len()],
            degenerate: true,
        }
    }
}

/// Normalized weighting factors of a `[0, 1]` image.
pub fn weighting_factors(x: &Image, spec: WeightingSpec) -> Result<WeightingFactors> {
    spec.validate()?;
    x.check_unit_range()?;
    Ok(factors_from(x, |z| spec.eval(z)))
}
