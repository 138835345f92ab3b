use serde_json::json;

use super::{check_pair, MetricResult, SsimConstants};
use crate::error::Result;
use crate::image::Image;
use crate::numeric::sum;

/// SSIM over whole-image statistics. Variance and covariance use the
/// `N - 1` denominator.
pub fn ssim_global(x: &Image, y: &Image, c: SsimConstants) -> Result<MetricResult> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let (xs, ys) = (x.pixels(), y.pixels());
    let mx = sum(xs.iter().copied()) / n;
    let my = sum(ys.iter().copied()) / n;
    let vx = sum(xs.iter().map(|v| (v - mx) * (v - mx))) / (n - 1.0);
    let vy = sum(ys.iter().map(|v| (v - my) * (v - my))) / (n - 1.0);
    let cov = sum(xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my))) / (n - 1.0);
    let score = c.combine(mx, my, vx, vy, cov);
    Ok(MetricResult::new(
        "ssim-global",
        score,
        json!({ "c1": c.c1, "c2": c.c2 }),
    ))
}
