//! Synthetic experiments: intensity-targeted noise injection, characteristic
//! curves and repeated noise groups summarized by `sensi`.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{IqaError, Result};
use crate::image::{intensity_mask, mask_count, normalize_joint, Band, Image};
use crate::indexes::sensi;
use crate::metrics::{MetricConfig, MetricId};
use crate::numeric::{mean, sample_std};

/// Name of the generator behind every seeded operation, echoed in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng";

/// Default band fraction for intensity-targeted experiments.
pub const DEFAULT_FRACTION: f64 = 0.35;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(1)))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    /// Additive, uniform on `[-a, a)`.
    Uniform,
    /// Additive, zero mean, standard deviation `a`.
    Gaussian,
    /// Additive and non-negative, Rayleigh with scale `a`.
    Rayleigh,
}

impl NoiseDistribution {
    pub const ALL: [NoiseDistribution; 3] = [
        NoiseDistribution::Uniform,
        NoiseDistribution::Gaussian,
        NoiseDistribution::Rayleigh,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseDistribution::Uniform => "uniform",
            NoiseDistribution::Gaussian => "gaussian",
            NoiseDistribution::Rayleigh => "rayleigh",
        }
    }

    /// One draw scaled by `amplitude`; the unit variate is drawn the same
    /// way for every amplitude, so a fixed stream scales linearly.
    fn sample<R: Rng>(&self, amplitude: f64, rng: &mut R) -> f64 {
        match self {
            NoiseDistribution::Uniform => amplitude * (2.0 * rng.random::<f64>() - 1.0),
            NoiseDistribution::Gaussian => amplitude * rng.sample::<f64, _>(StandardNormal),
            NoiseDistribution::Rayleigh => {
                let u: f64 = rng.random();
                amplitude * (-2.0 * (1.0 - u).ln()).sqrt()
            }
        }
    }
}

impl fmt::Display for NoiseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseDistribution {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        NoiseDistribution::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| IqaError::Unknown {
                kind: "noise distribution",
                value: s.to_string(),
            })
    }
}

/// Noise confined to the highest or lowest `fraction` of intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    pub amplitude: f64,
    pub band: Band,
    pub fraction: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(distribution: NoiseDistribution, amplitude: f64, band: Band, fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            distribution,
            amplitude,
            band,
            fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Amplitude zero is accepted and injects nothing.
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(IqaError::InvalidParameter(format!(
                "noise amplitude must be finite and non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(IqaError::InvalidParameter(format!(
                "band fraction must lie in (0, 1), got {}",
                self.fraction
            )));
        }
        Ok(())
    }
}

fn add_noise_at<R: Rng>(x: &Image, indices: &[usize], dist: NoiseDistribution, amplitude: f64, rng: &mut R) -> Image {
    let mut px = x.pixels().to_vec();
    if amplitude > 0.0 {
        for &i in indices {
            px[i] = (px[i] + dist.sample(amplitude, rng)).clamp(0.0, 1.0);
        }
    }
    x.with_pixels(px)
}

/// Adds seeded noise to every pixel of the spec's intensity band and clamps
/// to `[0, 1]`. Pixels outside the band are returned untouched.
pub fn inject_noise(x: &Image, spec: &NoiseSpec) -> Result<Image> {
    spec.validate()?;
    x.check_unit_range()?;
    let mask = intensity_mask(x, spec.band, spec.fraction)?;
    let mut rng = rng_from_seed(spec.seed);
    Ok(add_noise_at(
        x,
        &mask.indices(),
        spec.distribution,
        spec.amplitude,
        &mut rng,
    ))
}

/// Like [`inject_noise`], but only a random `coverage` share of the band
/// (drawn from the same seed) receives noise.
pub fn inject_noise_partial(x: &Image, spec: &NoiseSpec, coverage: f64) -> Result<Image> {
    spec.validate()?;
    x.check_unit_range()?;
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(IqaError::InvalidParameter(format!(
            "noise coverage must lie in (0, 1], got {coverage}"
        )));
    }
    let band = intensity_mask(x, spec.band, spec.fraction)?.indices();
    let mut rng = rng_from_seed(spec.seed);
    let take = mask_count(coverage, band.len()).min(band.len());
    let mut chosen: Vec<usize> = index::sample(&mut rng, band.len(), take)
        .into_iter()
        .map(|k| band[k])
        .collect();
    chosen.sort_unstable();
    Ok(add_noise_at(x, &chosen, spec.distribution, spec.amplitude, &mut rng))
}

/// A reference image, its perturbed counterpart and the share of band
/// pixels left untouched.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePair {
    pub reference: Image,
    pub perturbed: Image,
    pub similarity_level: f64,
}

/// Builds one pair per similarity level `s`: a share `1 - s` of the band's
/// pixels is replaced by uniform values on `[0, 1]`.
///
/// One seeded permutation of the band and one set of replacement values
/// serve every level, so the replaced sets are nested as `s` decreases.
pub fn generate_curve_pairs(
    base: &Image,
    levels: &[f64],
    band: Band,
    fraction: f64,
    seed: u64,
) -> Result<Vec<CurvePair>> {
    base.check_unit_range()?;
    if levels.is_empty() {
        return Err(IqaError::InvalidParameter("no similarity levels given".into()));
    }
    if let Some(bad) = levels.iter().find(|&&s| !(s > 0.0 && s <= 1.0)) {
        return Err(IqaError::InvalidParameter(format!(
            "similarity level {bad} outside (0, 1]"
        )));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(IqaError::InvalidParameter(
            "similarity levels must be strictly increasing".into(),
        ));
    }
    let members = intensity_mask(base, band, fraction)?.indices();
    let mut rng = rng_from_seed(seed);
    let order: Vec<usize> = index::sample(&mut rng, members.len(), members.len())
        .into_iter()
        .map(|k| members[k])
        .collect();
    let replacements: Vec<f64> = (0..order.len()).map(|_| rng.random::<f64>()).collect();
    Ok(levels
        .iter()
        .map(|&s| {
            let replaced = mask_count(1.0 - s, members.len()).min(members.len());
            let mut px = base.pixels().to_vec();
            for (&i, &v) in order[..replaced].iter().zip(&replacements) {
                px[i] = v;
            }
            CurvePair {
                reference: base.clone(),
                perturbed: base.with_pixels(px),
                similarity_level: s,
            }
        })
        .collect())
}

/// Scores of every requested metric at one similarity level and band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub similarity_level: f64,
    pub band: Band,
    pub scores: BTreeMap<String, f64>,
}

/// Evaluates the metrics on curve pairs for both bands, highest band first.
pub fn run_characteristic_curves(
    base: &Image,
    metrics: &[MetricId],
    config: &MetricConfig,
    levels: &[f64],
    fraction: f64,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if metrics.is_empty() {
        return Err(IqaError::InvalidParameter("no metrics requested".into()));
    }
    let mut points = Vec::new();
    for (b, band) in [Band::Highest, Band::Lowest].into_iter().enumerate() {
        let pairs = generate_curve_pairs(base, levels, band, fraction, derive_seed(seed, &[b as u64]))?;
        for pair in pairs {
            let (x, y) = normalize_joint(&pair.reference, &pair.perturbed)?;
            let mut scores = BTreeMap::new();
            for &m in metrics {
                scores.insert(m.name().to_string(), config.evaluate(m, &x, &y)?.score);
            }
            points.push(CurvePoint {
                similarity_level: pair.similarity_level,
                band,
                scores,
            });
        }
    }
    Ok(points)
}

/// CSV with columns `similarity_level,band,metric,score`.
pub fn curves_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("similarity_level,band,metric,score\n");
    for p in points {
        for (metric, score) in &p.scores {
            let _ = writeln!(out, "{},{},{},{}", p.similarity_level, p.band, metric, score);
        }
    }
    out
}

/// Renders one panel per metric with a line per band.
pub fn curves_to_svg(points: &[CurvePoint]) -> String {
    let mut metrics: Vec<&String> = points.iter().flat_map(|p| p.scores.keys()).collect();
    metrics.sort();
    metrics.dedup();
    let panels = metrics
        .iter()
        .map(|m| crate::plot::Panel {
            title: (*m).clone(),
            series: [Band::Highest, Band::Lowest]
                .iter()
                .map(|band| crate::plot::Series {
                    name: format!("{band} band"),
                    points: points
                        .iter()
                        .filter(|p| p.band == *band)
                        .filter_map(|p| p.scores.get(*m).map(|s| (p.similarity_level, *s)))
                        .collect(),
                })
                .collect(),
        })
        .collect::<Vec<_>>();
    crate::plot::render(&panels, "similarity level", "score")
}

/// Options for [`run_noise_groups`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseGroupOptions {
    pub repeats: usize,
    /// Share of band pixels that receive noise in each repeat; positions are redrawn per repeat.
    pub coverage: f64,
    pub baseline: MetricId,
    pub bins: usize,
}

impl Default for NoiseGroupOptions {
    fn default() -> Self {
        Self {
            repeats: 10,
            coverage: 0.5,
            baseline: MetricId::SsimWindowed,
            bins: 20,
        }
    }
}

/// One scored noisy image for one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub group: String,
    pub distribution: NoiseDistribution,
    pub amplitude: f64,
    pub band: Band,
    pub repeat: usize,
    pub metric: String,
    pub score: f64,
    /// `None` when the baseline scored exactly 1.
    pub sensi: Option<f64>,
}

/// A noise condition: rows, histograms and summaries are grouped by it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseGroup {
    pub distribution: NoiseDistribution,
    pub amplitude: f64,
    pub band: Band,
}

impl NoiseGroup {
    pub fn of(spec: &NoiseSpec) -> Self {
        Self {
            distribution: spec.distribution,
            amplitude: spec.amplitude,
            band: spec.band,
        }
    }

    fn matches(&self, row: &NoiseRow) -> bool {
        row.distribution == self.distribution && row.amplitude == self.amplitude && row.band == self.band
    }
}

/// Sensi histogram of one metric within one group. Edges are shared by all
/// groups of the same metric so the histograms can be overlaid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    #[serde(flatten)]
    pub group: NoiseGroup,
    pub metric: String,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensiSummary {
    #[serde(flatten)]
    pub group: NoiseGroup,
    pub metric: String,
    pub count: usize,
    pub undefined: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseGroupReport {
    pub rows: Vec<NoiseRow>,
    pub histograms: Vec<Histogram>,
    pub summary: Vec<SensiSummary>,
}

impl NoiseGroupReport {
    /// CSV with columns `group,distribution,amplitude,band,metric,score,sensi`;
    /// an undefined `sensi` is left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group,distribution,amplitude,band,metric,score,sensi\n");
        for r in &self.rows {
            let sensi = r.sensi.map(|s| s.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.group, r.distribution, r.amplitude, r.band, r.metric, r.score, sensi
            );
        }
        out
    }

    pub fn summary_for(&self, group: NoiseGroup, metric: &str) -> Option<&SensiSummary> {
        self.summary.iter().find(|s| s.group == group && s.metric == metric)
    }

    /// Plain-text mean/SD table, one line per group and metric. `undef`
    /// counts rows whose baseline scored exactly 1.
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:<9} {:>9} {:<8} {:<14} {:>5} {:>5} {:>12} {:>12}\n",
            "dist", "amplitude", "band", "metric", "n", "undef", "mean", "sd"
        );
        for s in &self.summary {
            let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<9} {:>9} {:<8} {:<14} {:>5} {:>5} {:>12} {:>12}",
                s.group.distribution.as_str(),
                s.group.amplitude,
                s.group.band.as_str(),
                s.metric,
                s.count,
                s.undefined,
                fmt(s.mean),
                fmt(s.sd)
            );
        }
        out
    }
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, Vec<usize>) {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    (edges, counts)
}

/// Scores every reference against repeated noisy copies of itself and
/// compares each metric with the baseline through `sensi`.
///
/// Each `(reference, spec, repeat)` gets its own seed derived from `seed`;
/// the band stays fixed by the reference while the noisy positions inside it
/// are redrawn per repeat. Rows are emitted in reference, spec, repeat,
/// metric order.
pub fn run_noise_groups(
    refs: &[(String, Image)],
    specs: &[NoiseSpec],
    metrics: &[MetricId],
    config: &MetricConfig,
    options: &NoiseGroupOptions,
    seed: u64,
) -> Result<NoiseGroupReport> {
    if options.repeats == 0 {
        return Err(IqaError::InvalidParameter("repeats must be at least 1".into()));
    }
    if metrics.is_empty() {
        return Err(IqaError::InvalidParameter("no metrics requested".into()));
    }
    if options.bins == 0 {
        return Err(IqaError::InvalidParameter("histogram needs at least one bin".into()));
    }
    let mut rows = Vec::new();
    for (ri, (label, reference)) in refs.iter().enumerate() {
        reference.check_unit_range()?;
        for (si, spec) in specs.iter().enumerate() {
            for repeat in 0..options.repeats {
                let run = NoiseSpec {
                    seed: derive_seed(seed, &[ri as u64, si as u64, repeat as u64]),
                    ..*spec
                };
                let noisy = inject_noise_partial(reference, &run, options.coverage)?;
                let (x, y) = match normalize_joint(reference, &noisy) {
                    Ok(pair) => pair,
                    Err(IqaError::DegenerateInput) => (reference.clone(), noisy),
                    Err(e) => return Err(e),
                };
                let baseline = config.evaluate(options.baseline, &x, &y)?.score;
                for &m in metrics {
                    let score = if m == options.baseline {
                        baseline
                    } else {
                        config.evaluate(m, &x, &y)?.score
                    };
                    rows.push(NoiseRow {
                        group: label.clone(),
                        distribution: spec.distribution,
                        amplitude: spec.amplitude,
                        band: spec.band,
                        repeat,
                        metric: m.name().to_string(),
                        score,
                        sensi: sensi(baseline, score).ok(),
                    });
                }
            }
        }
    }

    let mut groups: Vec<NoiseGroup> = Vec::new();
    for spec in specs {
        let g = NoiseGroup::of(spec);
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    let mut histograms = Vec::new();
    let mut summary = Vec::new();
    for &m in metrics {
        let name = m.name();
        let defined: Vec<f64> = rows
            .iter()
            .filter(|r| r.metric == name)
            .filter_map(|r| r.sensi)
            .collect();
        let lo = defined.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &group in &groups {
            let in_group: Vec<&NoiseRow> = rows.iter().filter(|r| r.metric == name && group.matches(r)).collect();
            if in_group.is_empty() {
                continue;
            }
            let values: Vec<f64> = in_group.iter().filter_map(|r| r.sensi).collect();
            if !values.is_empty() {
                let (edges, counts) = histogram(&values, lo, hi, options.bins);
                histograms.push(Histogram {
                    group,
                    metric: name.to_string(),
                    edges,
                    counts,
                });
            }
            summary.push(SensiSummary {
                group,
                metric: name.to_string(),
                count: values.len(),
                undefined: in_group.len() - values.len(),
                mean: mean(&values),
                sd: sample_std(&values),
            });
        }
    }
    Ok(NoiseGroupReport {
        rows,
        histograms,
        summary,
    })
}

/// A smooth, mostly dim scene with a handful of bright compact sources,
/// min-max normalized to `[0, 1]`. Used as a bundled reference when no
/// images are supplied.
pub fn synthetic_scene(width: usize, height: usize, seed: u64) -> Result<Image> {
    let mut rng = rng_from_seed(seed);
    let (w, h) = (width as f64, height as f64);
    let phase: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * std::f64::consts::TAU);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..6)
        .map(|_| {
            (
                rng.random::<f64>() * w,
                rng.random::<f64>() * h,
                0.03 * w.min(h) + rng.random::<f64>() * 0.08 * w.min(h),
                0.4 + 0.6 * rng.random::<f64>(),
            )
        })
        .collect();
    let mut px = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let (u, v) = (c as f64 / w, r as f64 / h);
            let mut val = 0.15
                + 0.06 * (std::f64::consts::TAU * 1.3 * u + phase[0]).sin()
                + 0.05 * (std::f64::consts::TAU * 0.9 * v + phase[1]).cos()
                + 0.03 * (std::f64::consts::TAU * 3.1 * (u + v) + phase[2]).sin() * (phase[3] + 5.0 * v).cos();
            for &(bx, by, s, a) in &blobs {
                let d2 = (c as f64 - bx).powi(2) + (r as f64 - by).powi(2);
                val += a * (-d2 / (2.0 * s * s)).exp();
            }
            val += 0.02 * rng.random::<f64>();
            px.push(val);
        }
    }
    let img = Image::new(width, height, px)?;
    let (lo, hi) = (img.min(), img.max());
    let pixels = img.pixels().iter().map(|v| (v - lo) / (hi - lo)).collect();
    Image::new(width, height, pixels)
}
