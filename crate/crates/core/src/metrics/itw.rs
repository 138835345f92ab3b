use serde_json::json;

use super::weighting::factors_from;
use super::{check_pair, MetricResult, SsimConstants, WeightingSpec};
use crate::error::Result;
use crate::image::Image;
use crate::numeric::sum;

/// Intensity-weighted SSIM computed over the whole image.
///
/// Each pixel is rescaled by `f(x_i) N`, where `f` are the normalized
/// weighting factors, before taking `N - 1` variance and covariance
/// around the weighted mean `sum f(x_i) x_i`.
pub fn itw_ssim(x: &Image, y: &Image, spec: WeightingSpec, c: SsimConstants) -> Result<MetricResult> {
    spec.validate()?;
    let score = itw_ssim_with_weighting(x, y, |z| spec.eval(z), c)?;
    Ok(MetricResult::new(
        format!("itw:{}", spec.kind()),
        score,
        json!({ "c1": c.c1, "c2": c.c2, "weighting": spec }),
    ))
}

/// [`itw_ssim`] with an arbitrary weighting function.
pub fn itw_ssim_with_weighting(x: &Image, y: &Image, g: impl Fn(f64) -> f64, c: SsimConstants) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let fx = factors_from(x, &g).factors;
    let fy = factors_from(y, &g).factors;
    let (xs, ys) = (x.pixels(), y.pixels());
    let mx = sum(fx.iter().zip(xs).map(|(f, v)| f * v));
    let my = sum(fy.iter().zip(ys).map(|(f, v)| f * v));
    let ux: Vec<f64> = fx.iter().zip(xs).map(|(f, v)| f * n * v - mx).collect();
    let uy: Vec<f64> = fy.iter().zip(ys).map(|(f, v)| f * n * v - my).collect();
    let vx = sum(ux.iter().map(|u| u * u)) / (n - 1.0);
    let vy = sum(uy.iter().map(|u| u * u)) / (n - 1.0);
    let cov = sum(ux.iter().zip(&uy).map(|(a, b)| a * b)) / (n - 1.0);
    Ok(c.combine(mx, my, vx, vy, cov))
}
