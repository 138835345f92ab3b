use serde_json::json;

use super::windowed::{map_mean, LocalMoments};
use super::{check_pair, GaussianWindow, MetricResult, SsimConstants};
use crate::error::{IqaError, Result};
use crate::image::Image;

/// Per-scale exponents, finest scale first.
pub const MS_SSIM_EXPONENTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

/// Exponents for `levels` scales. Five levels use the standard set verbatim;
/// fewer levels use its leading entries rescaled to sum to one.
fn exponents(levels: usize) -> Vec<f64> {
    let head = &MS_SSIM_EXPONENTS[..levels];
    if levels == MS_SSIM_EXPONENTS.len() {
        return head.to_vec();
    }
    let total: f64 = head.iter().sum();
    head.iter().map(|e| e / total).collect()
}

/// 2x2 box average; an odd trailing row or column is dropped.
fn downsample(data: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
    let (w2, h2) = (width / 2, height / 2);
    let mut out = Vec::with_capacity(w2 * h2);
    for r in 0..h2 {
        for c in 0..w2 {
            let i = 2 * r * width + 2 * c;
            out.push((data[i] + data[i + 1] + data[i + width] + data[i + width + 1]) / 4.0);
        }
    }
    (out, w2, h2)
}

/// Multi-scale SSIM: contrast-structure means at every scale, luminance at
/// the coarsest one. Negative per-scale terms are clamped to zero before
/// exponentiation when more than one scale is used.
pub fn ms_ssim(x: &Image, y: &Image, c: SsimConstants, window: GaussianWindow, levels: usize) -> Result<MetricResult> {
    check_pair(x, y)?;
    window.validate()?;
    if levels == 0 || levels > MS_SSIM_EXPONENTS.len() {
        return Err(IqaError::InvalidParameter(format!(
            "MS-SSIM supports 1 to {} levels, got {levels}",
            MS_SSIM_EXPONENTS.len()
        )));
    }
    let (w, h) = (x.width(), x.height());
    if w.min(h) < window.size << (levels - 1) {
        return Err(IqaError::ImageTooSmall {
            width: w,
            height: h,
            reason: format!(
                "{levels} MS-SSIM levels with window {} need at least {} pixels per side",
                window.size,
                window.size << (levels - 1)
            ),
        });
    }
    let exps = exponents(levels);
    let (mut xs, mut ys) = (x.pixels().to_vec(), y.pixels().to_vec());
    let (mut cw, mut ch) = (w, h);
    let mut score = 1.0;
    let mut per_scale = Vec::with_capacity(levels);
    for (level, &e) in exps.iter().enumerate() {
        let m = LocalMoments::compute(&xs, &ys, cw, ch, &window);
        let cs = m.contrast_structure(c.c2);
        let term = if level + 1 < levels {
            map_mean(&cs)
        } else {
            let l = m.luminance(c.c1);
            let full: Vec<f64> = l.iter().zip(&cs).map(|(a, b)| a * b).collect();
            map_mean(&full)
        };
        per_scale.push(term);
        score *= if levels == 1 { term } else { term.max(0.0).powf(e) };
        if level + 1 < levels {
            let (nx, nw, nh) = downsample(&xs, cw, ch);
            let (ny, _, _) = downsample(&ys, cw, ch);
            xs = nx;
            ys = ny;
            cw = nw;
            ch = nh;
        }
    }
    Ok(MetricResult::new(
        "ms-ssim",
        score,
        json!({
            "c1": c.c1, "c2": c.c2,
            "window": window.size, "sigma": window.sigma,
            "levels": levels, "exponents": exps,
        }),
    ))
}
