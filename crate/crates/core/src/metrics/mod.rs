//! Full-reference similarity indexes.
//!
//! Every metric expects a pair that has already gone through
//! [`normalize_joint`](crate::image::normalize_joint); inputs with pixels
//! outside `[0, 1]` are rejected.

mod global;
mod gssim;
mod itw;
mod lisi;
mod ms_ssim;
mod weighting;
mod windowed;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{IqaError, Result};
use crate::image::Image;

pub use global::ssim_global;
pub use gssim::{g_ssim, sobel_magnitude};
pub use itw::{itw_ssim, itw_ssim_with_weighting};
pub use lisi::lisi;
pub use ms_ssim::{ms_ssim, MS_SSIM_EXPONENTS};
pub use weighting::{weighting_factors, weighting_function, WeightingFactors, WeightingKind, WeightingSpec};
pub use windowed::{ssim_windowed, GaussianWindow};

/// Stabilizing constants of the SSIM family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimConstants {
    pub c1: f64,
    pub c2: f64,
}

impl Default for SsimConstants {
    fn default() -> Self {
        Self { c1: 1e-4, c2: 9e-4 }
    }
}

impl SsimConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(IqaError::InvalidParameter(format!(
                "SSIM constants must be positive, got c1={c1}, c2={c2}"
            )));
        }
        Ok(Self { c1, c2 })
    }

    /// Combines first and second moments into an SSIM value.
    #[inline]
    pub(crate) fn combine(&self, mx: f64, my: f64, vx: f64, vy: f64, cov: f64) -> f64 {
        ((2.0 * mx * my + self.c1) * (2.0 * cov + self.c2)) / ((mx * mx + my * my + self.c1) * (vx + vy + self.c2))
    }
}

/// Constants of the low-information similarity index. `d` is always `c1 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LisiConstants {
    c1: f64,
    c2: f64,
    d: f64,
}

impl Default for LisiConstants {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 1e-4,
            d: 5e-5,
        }
    }
}

impl LisiConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(IqaError::InvalidParameter(format!(
                "LISI constants must be positive, got c1={c1}, c2={c2}"
            )));
        }
        Ok(Self { c1, c2, d: c1 / 2.0 })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn d(&self) -> f64 {
        self.d
    }
}

/// A named score plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub metric: String,
    pub score: f64,
    pub config: serde_json::Value,
}

impl MetricResult {
    pub(crate) fn new(metric: impl Into<String>, score: f64, config: serde_json::Value) -> Self {
        Self {
            metric: metric.into(),
            score,
            config,
        }
    }
}

/// Identifier of an implemented metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    SsimWindowed,
    SsimGlobal,
    MsSsim,
    GSsim,
    Itw(WeightingKind),
    Lisi,
}

impl MetricId {
    /// The default metric set, in reporting order.
    pub const ALL: [MetricId; 8] = [
        MetricId::SsimWindowed,
        MetricId::SsimGlobal,
        MetricId::MsSsim,
        MetricId::GSsim,
        MetricId::Itw(WeightingKind::Gaussian),
        MetricId::Itw(WeightingKind::Tanh),
        MetricId::Itw(WeightingKind::Sigmoid),
        MetricId::Lisi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::SsimWindowed => "ssim-windowed",
            MetricId::SsimGlobal => "ssim-global",
            MetricId::MsSsim => "ms-ssim",
            MetricId::GSsim => "g-ssim",
            MetricId::Itw(WeightingKind::Gaussian) => "itw:gaussian",
            MetricId::Itw(WeightingKind::Tanh) => "itw:tanh",
            MetricId::Itw(WeightingKind::Sigmoid) => "itw:sigmoid",
            MetricId::Lisi => "lisi",
        }
    }

    /// True for the SSIM family (everything except LISI).
    pub fn is_ssim_family(&self) -> bool {
        !matches!(self, MetricId::Lisi)
    }

    /// Parses a comma-separated list; `all` expands to [`MetricId::ALL`].
    pub fn parse_list(s: &str) -> Result<Vec<MetricId>> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "all" {
                out.extend(MetricId::ALL);
            } else {
                out.push(tok.parse()?);
            }
        }
        if out.is_empty() {
            return Err(IqaError::InvalidParameter("empty metric list".into()));
        }
        let mut seen = Vec::new();
        out.retain(|m| {
            if seen.contains(m) {
                false
            } else {
                seen.push(*m);
                true
            }
        });
        Ok(out)
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for MetricId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        MetricId::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .or(match s {
                "ssim" => Some(MetricId::SsimWindowed),
                "gssim" => Some(MetricId::GSsim),
                "msssim" => Some(MetricId::MsSsim),
                _ => None,
            })
            .ok_or_else(|| IqaError::Unknown {
                kind: "metric",
                value: s.to_string(),
            })
    }
}

/// Shape parameters for the three weighting kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingParams {
    pub gaussian_sigma: f64,
    pub tanh_k: f64,
    pub sigmoid_k: f64,
    pub sigmoid_center: f64,
}

impl Default for WeightingParams {
    fn default() -> Self {
        Self {
            gaussian_sigma: 0.5,
            tanh_k: 2.0,
            sigmoid_k: 10.0,
            sigmoid_center: 0.5,
        }
    }
}

impl WeightingParams {
    pub fn spec(&self, kind: WeightingKind) -> Result<WeightingSpec> {
        let spec = match kind {
            WeightingKind::Gaussian => WeightingSpec::Gaussian {
                sigma: self.gaussian_sigma,
            },
            WeightingKind::Tanh => WeightingSpec::Tanh { k: self.tanh_k },
            WeightingKind::Sigmoid => WeightingSpec::Sigmoid {
                k: self.sigmoid_k,
                center: self.sigmoid_center,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Every parameter needed to evaluate any metric by identifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricConfig {
    pub ssim: SsimConstants,
    pub lisi: LisiConstants,
    pub window: GaussianWindow,
    pub ms_levels: usize,
    pub weighting: WeightingParams,
    /// Shrink the window and MS-SSIM level count to fit small images
    /// instead of failing.
    pub fit_to_image: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            ssim: SsimConstants::default(),
            lisi: LisiConstants::default(),
            window: GaussianWindow::default(),
            ms_levels: 5,
            weighting: WeightingParams::default(),
            fit_to_image: true,
        }
    }
}

impl MetricConfig {
    /// The configuration actually applied to a `width` x `height` pair.
    pub fn fitted(&self, width: usize, height: usize) -> MetricConfig {
        if !self.fit_to_image {
            return *self;
        }
        let min_dim = width.min(height).max(1);
        let largest_odd = if min_dim % 2 == 1 { min_dim } else { min_dim - 1 };
        let mut out = *self;
        out.window.size = self.window.size.min(largest_odd);
        let mut levels = self.ms_levels.max(1);
        while levels > 1 && min_dim < out.window.size << (levels - 1) {
            levels -= 1;
        }
        out.ms_levels = levels;
        out
    }

    /// Evaluates one metric on a jointly normalized pair.
    pub fn evaluate(&self, id: MetricId, x: &Image, y: &Image) -> Result<MetricResult> {
        let cfg = self.fitted(x.width(), x.height());
        match id {
            MetricId::SsimWindowed => ssim_windowed(x, y, cfg.ssim, cfg.window),
            MetricId::SsimGlobal => ssim_global(x, y, cfg.ssim),
            MetricId::MsSsim => ms_ssim(x, y, cfg.ssim, cfg.window, cfg.ms_levels),
            MetricId::GSsim => g_ssim(x, y, cfg.ssim, cfg.window),
            MetricId::Itw(kind) => itw_ssim(x, y, cfg.weighting.spec(kind)?, cfg.ssim),
            MetricId::Lisi => lisi(x, y, cfg.lisi),
        }
    }

    /// Evaluates several metrics, stopping at the first failure.
    pub fn evaluate_all(&self, ids: &[MetricId], x: &Image, y: &Image) -> Result<Vec<MetricResult>> {
        ids.iter().map(|&id| self.evaluate(id, x, y)).collect()
    }

    /// Resolved parameters as JSON, for run echoes.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "ssim": { "c1": self.ssim.c1, "c2": self.ssim.c2 },
            "lisi": { "c1": self.lisi.c1, "c2": self.lisi.c2, "d": self.lisi.d },
            "window": { "size": self.window.size, "sigma": self.window.sigma },
            "ms_levels": self.ms_levels,
            "weighting": self.weighting,
            "fit_to_image": self.fit_to_image,
        })
    }
}

/// Shared input checks for pairwise metrics.
pub(crate) fn check_pair(x: &Image, y: &Image) -> Result<()> {
    x.check_dims(y)?;
    x.check_unit_range()?;
    y.check_unit_range()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names_round_trip() {
        for id in MetricId::ALL {
            assert_eq!(id.name().parse::<MetricId>().unwrap(), id);
        }
        assert!("iw-ssim".parse::<MetricId>().is_err());
        assert_eq!(MetricId::parse_list("all").unwrap(), MetricId::ALL.to_vec());
        assert_eq!(
            MetricId::parse_list("lisi, lisi,itw:tanh").unwrap(),
            vec![MetricId::Lisi, MetricId::Itw(WeightingKind::Tanh)]
        );
    }

    #[test]
    fn lisi_constants_tie_d_to_c1() {
        let c = LisiConstants::default();
        assert_eq!(c.d(), c.c1() / 2.0);
        assert_eq!(c.d(), 5e-5);
        let c = LisiConstants::new(2e-3, 1.0).unwrap();
        assert_eq!(c.d(), 1e-3);
        assert!(LisiConstants::new(0.0, 1.0).is_err());
        assert!(SsimConstants::new(1e-4, -1.0).is_err());
    }

    #[test]
    fn fitted_shrinks_window_and_levels() {
        let cfg = MetricConfig::default();
        let f = cfg.fitted(64, 64);
        assert_eq!(f.window.size, 11);
        assert_eq!(f.ms_levels, 3);
        let f = cfg.fitted(2, 1);
        assert_eq!(f.window.size, 1);
        let f = cfg.fitted(8, 30);
        assert_eq!(f.window.size, 7);
        assert_eq!(f.ms_levels, 1);
        let f = cfg.fitted(200, 180);
        assert_eq!((f.window.size, f.ms_levels), (11, 5));
        let strict = MetricConfig {
            fit_to_image: false,
            ..cfg
        };
        assert_eq!(strict.fitted(8, 8), strict);
    }
}
