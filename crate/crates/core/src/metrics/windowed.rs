use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_pair, MetricResult, SsimConstants};
use crate::error::{IqaError, Result};
use crate::image::Image;
use crate::numeric::sum;

/// Square Gaussian window used for local statistics.
///
/// Near the border the window is truncated to the image and its weights are
/// renormalized, so every pixel gets a local SSIM value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWindow {
    pub size: usize,
    pub sigma: f64,
}

impl Default for GaussianWindow {
    fn default() -> Self {
        Self { size: 11, sigma: 1.5 }
    }
}

impl GaussianWindow {
    pub fn new(size: usize, sigma: f64) -> Result<Self> {
        let w = Self { size, sigma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size.is_multiple_of(2) {
            return Err(IqaError::InvalidParameter(format!(
                "window size must be odd, got {}",
                self.size
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(IqaError::InvalidParameter(format!(
                "window sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Unnormalized 1-D taps, index `k` corresponding to offset `k - radius`.
    pub fn taps(&self) -> Vec<f64> {
        let r = self.radius() as f64;
        (0..self.size)
            .map(|k| {
                let d = k as f64 - r;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect()
    }

    pub(crate) fn check_fits(&self, width: usize, height: usize) -> Result<()> {
        self.validate()?;
        if self.size > width.min(height) {
            return Err(IqaError::ImageTooSmall {
                width,
                height,
                reason: format!("window {} exceeds the smaller dimension", self.size),
            });
        }
        Ok(())
    }

    /// Separable weighted mean at every pixel with truncated, renormalized taps.
    pub(crate) fn filter(&self, data: &[f64], width: usize, height: usize) -> Vec<f64> {
        let taps = self.taps();
        let r = self.radius();
        let mut tmp = vec![0.0; data.len()];
        for row in 0..height {
            let line = &data[row * width..(row + 1) * width];
            for col in 0..width {
                let lo = col.saturating_sub(r);
                let hi = (col + r).min(width - 1);
                let (mut acc, mut norm) = (0.0, 0.0);
                for j in lo..=hi {
                    let t = taps[j + r - col];
                    acc += t * line[j];
                    norm += t;
                }
                tmp[row * width + col] = acc / norm;
            }
        }
        let mut out = vec![0.0; data.len()];
        for row in 0..height {
            let lo = row.saturating_sub(r);
            let hi = (row + r).min(height - 1);
            let norm: f64 = (lo..=hi).map(|i| taps[i + r - row]).sum();
            for col in 0..width {
                let mut acc = 0.0;
                for i in lo..=hi {
                    acc += taps[i + r - row] * tmp[i * width + col];
                }
                out[row * width + col] = acc / norm;
            }
        }
        out
    }
}

/// Gaussian-weighted first and second moments of a pair at every pixel.
pub(crate) struct LocalMoments {
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
    pub cov: Vec<f64>,
}

impl LocalMoments {
    pub fn compute(x: &[f64], y: &[f64], width: usize, height: usize, window: &GaussianWindow) -> Self {
        let mean_x = window.filter(x, width, height);
        let mean_y = window.filter(y, width, height);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
        let exx = window.filter(&xx, width, height);
        let eyy = window.filter(&yy, width, height);
        let exy = window.filter(&xy, width, height);
        let var_x = exx.iter().zip(&mean_x).map(|(e, m)| e - m * m).collect();
        let var_y = eyy.iter().zip(&mean_y).map(|(e, m)| e - m * m).collect();
        let cov = exy
            .iter()
            .zip(mean_x.iter().zip(&mean_y))
            .map(|(e, (a, b))| e - a * b)
            .collect();
        Self {
            mean_x,
            mean_y,
            var_x,
            var_y,
            cov,
        }
    }

    pub fn luminance(&self, c1: f64) -> Vec<f64> {
        self.mean_x
            .iter()
            .zip(&self.mean_y)
            .map(|(a, b)| (2.0 * a * b + c1) / (a * a + b * b + c1))
            .collect()
    }

    pub fn contrast_structure(&self, c2: f64) -> Vec<f64> {
        self.var_x
            .iter()
            .zip(&self.var_y)
            .zip(&self.cov)
            .map(|((vx, vy), cxy)| (2.0 * cxy + c2) / (vx + vy + c2))
            .collect()
    }
}

pub(crate) fn map_mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Mean local SSIM under a sliding Gaussian window.
pub fn ssim_windowed(x: &Image, y: &Image, c: SsimConstants, window: GaussianWindow) -> Result<MetricResult> {
    check_pair(x, y)?;
    window.check_fits(x.width(), x.height())?;
    let m = LocalMoments::compute(x.pixels(), y.pixels(), x.width(), x.height(), &window);
    let l = m.luminance(c.c1);
    let cs = m.contrast_structure(c.c2);
    let map: Vec<f64> = l.iter().zip(&cs).map(|(a, b)| a * b).collect();
    Ok(MetricResult::new(
        "ssim-windowed",
        map_mean(&map),
        json!({ "c1": c.c1, "c2": c.c2, "window": window.size, "sigma": window.sigma }),
    ))
}
