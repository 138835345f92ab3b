use serde_json::json;

use super::windowed::{map_mean, LocalMoments};
use super::{check_pair, GaussianWindow, MetricResult, SsimConstants};
use crate::error::Result;
use crate::image::Image;

/// Sobel gradient magnitude with replicated borders.
pub fn sobel_magnitude(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let at = |c: isize, r: isize| {
        let c = c.clamp(0, width as isize - 1) as usize;
        let r = r.clamp(0, height as isize - 1) as usize;
        data[r * width + c]
    };
    let mut out = Vec::with_capacity(data.len());
    for r in 0..height as isize {
        for c in 0..width as isize {
            let gx = (at(c + 1, r - 1) + 2.0 * at(c + 1, r) + at(c + 1, r + 1))
                - (at(c - 1, r - 1) + 2.0 * at(c - 1, r) + at(c - 1, r + 1));
            let gy = (at(c - 1, r + 1) + 2.0 * at(c, r + 1) + at(c + 1, r + 1))
                - (at(c - 1, r - 1) + 2.0 * at(c, r - 1) + at(c + 1, r - 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// Gradient-based SSIM: luminance from the intensities, contrast and
/// structure from Sobel gradient-magnitude maps, averaged over the window.
pub fn g_ssim(x: &Image, y: &Image, c: SsimConstants, window: GaussianWindow) -> Result<MetricResult> {
    check_pair(x, y)?;
    let (w, h) = (x.width(), x.height());
    window.check_fits(w, h)?;
    let gx = sobel_magnitude(x.pixels(), w, h);
    let gy = sobel_magnitude(y.pixels(), w, h);
    let intensity = LocalMoments::compute(x.pixels(), y.pixels(), w, h, &window);
    let gradient = LocalMoments::compute(&gx, &gy, w, h, &window);
    let l = intensity.luminance(c.c1);
    let cs = gradient.contrast_structure(c.c2);
    let map: Vec<f64> = l.iter().zip(&cs).map(|(a, b)| a * b).collect();
    Ok(MetricResult::new(
        "g-ssim",
        map_mean(&map),
        json!({ "c1": c.c1, "c2": c.c2, "window": window.size, "sigma": window.sigma, "gradient": "sobel" }),
    ))
}
