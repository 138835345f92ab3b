use serde_json::json;

use super::{check_pair, LisiConstants, MetricResult};
use crate::error::Result;
use crate::image::Image;
use crate::numeric::sum;

/// Low-information similarity index.
///
/// Pixels contribute `D |x + y| / (|x - y| + c1)`, i.e. close to their mean
/// intensity when the pair agrees and close to zero otherwise; the total is
/// divided by the larger image's total intensity. With `D = c1 / 2` each
/// term is at most `(x + y) / 2`, so the score stays below 1.
pub fn lisi(x: &Image, y: &Image, c: LisiConstants) -> Result<MetricResult> {
    check_pair(x, y)?;
    let (xs, ys) = (x.pixels(), y.pixels());
    let agreement = sum(xs.iter().zip(ys).map(|(a, b)| (a + b).abs() / ((a - b).abs() + c.c1())));
    let information = sum(xs.iter().copied()).max(sum(ys.iter().copied()));
    let score = c.d() * agreement / (information + c.c2());
    Ok(MetricResult::new(
        "lisi",
        score,
        json!({ "c1": c.c1(), "c2": c.c2(), "d": c.d() }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(v: &[f64]) -> Image {
        Image::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn zeros_score_zero() {
        let z = img(&[0.0, 0.0, 0.0]);
        assert_eq!(lisi(&z, &z, LisiConstants::default()).unwrap().score, 0.0);
    }

    #[test]
    fn ones_hand_value() {
        // numerator 5e-5 * (2 / 1e-4) * 2 = 2, denominator 2 + 1e-4
        let o = img(&[1.0, 1.0]);
        let s = lisi(&o, &o, LisiConstants::default()).unwrap().score;
        assert!((s - 2.0 / (2.0 + 1e-4)).abs() < 1e-12);
        assert!((s - 0.99995).abs() < 1e-6);
    }

    #[test]
    fn identity_equals_mass_ratio() {
        let x = img(&[0.1, 0.4, 0.9, 0.0, 0.33]);
        let s: f64 = x.pixels().iter().sum();
        let got = lisi(&x, &x, LisiConstants::default()).unwrap().score;
        assert!((got - s / (s + 1e-4)).abs() < 1e-12);
    }

    #[test]
    fn disagreement_drives_score_down() {
        let x = img(&[1.0, 0.0]);
        let y = img(&[0.0, 1.0]);
        let s = lisi(&x, &y, LisiConstants::default()).unwrap().score;
        assert!((0.0..1e-3).contains(&s));
    }
}
