//! Change tracking over ordered image sequences.
//!
//! Each compared pair yields a similarity per metric and a direction from
//! [`direc`]. The signed step is `direc * (1 - similarity)`, so the running
//! sum rises while intensity falls and drops while intensity grows.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IqaError, Result};
use crate::image::{crop, normalize_joint, Image, Rect};
use crate::indexes::direc;
use crate::metrics::{MetricConfig, MetricId};
use crate::plot;

/// Which frame pairs are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// `(0,1), (1,2), ...`
    Adjacent,
    /// `(0,1), (0,2), ...`
    FirstVsEach,
}

impl FromStr for CompareMode {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(Self::Adjacent),
            "first-vs-each" => Ok(Self::FirstVsEach),
            _ => Err(IqaError::Unknown {
                kind: "compare mode",
                value: s.into(),
            }),
        }
    }
}

/// How frames are brought into `[0, 1]` before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Each compared pair is normalized jointly on its own.
    PerPair,
    /// One min-max over every frame of the sequence.
    Sequence,
}

impl FromStr for Normalization {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-pair" | "pair" => Ok(Self::PerPair),
            "sequence" => Ok(Self::Sequence),
            _ => Err(IqaError::Unknown {
                kind: "normalization",
                value: s.into(),
            }),
        }
    }
}

/// Whether `direc` sees raw or normalized intensities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirecSource {
    Raw,
    Normalized,
}

impl FromStr for DirecSource {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "normalized" => Ok(Self::Normalized),
            _ => Err(IqaError::Unknown {
                kind: "direc source",
                value: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequenceOptions {
    pub mode: CompareMode,
    pub normalization: Normalization,
    pub direc_on: DirecSource,
}

impl Default for SequenceOptions {
    fn default() -> Self {
        Self {
            mode: CompareMode::Adjacent,
            normalization: Normalization::PerPair,
            direc_on: DirecSource::Raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStep {
    pub metric: String,
    pub similarity: f64,
    pub signed_step: f64,
    pub cumulative: f64,
}

/// One compared pair. `step_index` starts at 1; index 0 is the implicit origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub step_index: usize,
    pub from: usize,
    pub to: usize,
    pub direc: i8,
    pub metrics: Vec<MetricStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub region: String,
    pub options: SequenceOptions,
    pub metrics: Vec<String>,
    pub steps: Vec<Step>,
}

impl SequenceReport {
    /// `(step_index, cumulative)` for one metric, starting from the origin.
    pub fn polyline(&self, metric: &str) -> Vec<(f64, f64)> {
        std::iter::once((0.0, 0.0))
            .chain(self.steps.iter().filter_map(|s| {
                s.metrics
                    .iter()
                    .find(|m| m.metric == metric)
                    .map(|m| (s.step_index as f64, m.cumulative))
            }))
            .collect()
    }
}

fn pairs(n: usize, mode: CompareMode) -> Vec<(usize, usize)> {
    match mode {
        CompareMode::Adjacent => (1..n).map(|i| (i - 1, i)).collect(),
        CompareMode::FirstVsEach => (1..n).map(|i| (0, i)).collect(),
    }
}

fn normalize_sequence(frames: &[Image]) -> Result<Vec<Image>> {
    let lo = frames.iter().map(Image::min).fold(f64::INFINITY, f64::min);
    let hi = frames.iter().map(Image::max).fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(IqaError::DegenerateInput);
    }
    frames
        .iter()
        .map(|f| {
            Image::new(
                f.width(),
                f.height(),
                f.pixels().iter().map(|v| (v - lo) / (hi - lo)).collect(),
            )
        })
        .collect()
}

fn compare_labeled(
    region: &str,
    frames: &[Image],
    metrics: &[MetricId],
    config: &MetricConfig,
    options: SequenceOptions,
) -> Result<SequenceReport> {
    if frames.len() < 2 {
        return Err(IqaError::InvalidParameter(format!(
            "a sequence needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    if metrics.is_empty() {
        return Err(IqaError::InvalidParameter("no metrics requested".into()));
    }
    for f in &frames[1..] {
        frames[0].check_dims(f)?;
    }
    let sequence_scaled = match options.normalization {
        Normalization::Sequence => Some(normalize_sequence(frames)?),
        Normalization::PerPair => None,
    };
    let mut cumulative = vec![0.0; metrics.len()];
    let mut steps = Vec::new();
    for (k, (a, b)) in pairs(frames.len(), options.mode).into_iter().enumerate() {
        let (x, y) = match &sequence_scaled {
            Some(s) => (s[a].clone(), s[b].clone()),
            None => normalize_joint(&frames[a], &frames[b])?,
        };
        let d = match options.direc_on {
            DirecSource::Raw => direc(&frames[a], &frames[b])?,
            DirecSource::Normalized => direc(&x, &y)?,
        };
        let mut per_metric = Vec::with_capacity(metrics.len());
        for (i, &m) in metrics.iter().enumerate() {
            let similarity = config.evaluate(m, &x, &y)?.score;
            let signed_step = d as f64 * (1.0 - similarity);
            cumulative[i] += signed_step;
            per_metric.push(MetricStep {
                metric: m.name().to_string(),
                similarity,
                signed_step,
                cumulative: cumulative[i],
            });
        }
        steps.push(Step {
            step_index: k + 1,
            from: a,
            to: b,
            direc: d,
            metrics: per_metric,
        });
    }
    Ok(SequenceReport {
        region: region.to_string(),
        options,
        metrics: metrics.iter().map(|m| m.name().to_string()).collect(),
        steps,
    })
}

/// Compares whole frames; the report's region is `"full"`.
pub fn compare_sequence(
    frames: &[Image],
    metrics: &[MetricId],
    config: &MetricConfig,
    options: SequenceOptions,
) -> Result<SequenceReport> {
    compare_labeled("full", frames, metrics, config, options)
}

/// A `rows` x `cols` partition of the frame. Cells share the integer part of
/// the split; remainder pixels go to the last row and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionGrid {
    rows: usize,
    cols: usize,
    labels: Option<Vec<String>>,
}

impl RegionGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(IqaError::InvalidParameter(format!("grid {rows}x{cols} has no cells")));
        }
        Ok(Self {
            rows,
            cols,
            labels: None,
        })
    }

    /// Row-major labels, one per cell.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.rows * self.cols {
            return Err(IqaError::InvalidParameter(format!(
                "{} labels for {} cells",
                labels.len(),
                self.rows * self.cols
            )));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(IqaError::InvalidParameter("grid labels must be unique".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Label of cell `(row, col)`: custom if given, otherwise a row letter
    /// and 1-based column number (`A1`, `B2`, ...).
    pub fn label(&self, row: usize, col: usize) -> String {
        match &self.labels {
            Some(l) => l[row * self.cols + col].clone(),
            None => {
                let mut letters = String::new();
                let mut r = row;
                loop {
                    letters.insert(0, (b'A' + (r % 26) as u8) as char);
                    if r < 26 {
                        break;
                    }
                    r = r / 26 - 1;
                }
                format!("{letters}{}", col + 1)
            }
        }
    }

    /// Labeled crop rectangles in row-major order.
    pub fn cells(&self, width: usize, height: usize) -> Result<Vec<(String, Rect)>> {
        if self.rows > height || self.cols > width {
            return Err(IqaError::ImageTooSmall {
                width,
                height,
                reason: format!("cannot split into a {}x{} grid", self.rows, self.cols),
            });
        }
        let split = |total: usize, parts: usize, i: usize| {
            let base = total / parts;
            let start = i * base;
            let len = if i + 1 == parts { total - start } else { base };
            (start, len)
        };
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            let (top, h) = split(height, self.rows, r);
            for c in 0..self.cols {
                let (left, w) = split(width, self.cols, c);
                out.push((self.label(r, c), Rect::new(left, top, w, h)));
            }
        }
        Ok(out)
    }
}

impl FromStr for RegionGrid {
    type Err = IqaError;

    /// Parses `RxC`, e.g. `3x4`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || IqaError::InvalidParameter(format!("grid must look like RxC, got {s:?}"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        RegionGrid::new(
            r.trim().parse().map_err(|_| bad())?,
            c.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// Runs [`compare_sequence`] on each grid cell, in row-major cell order.
pub fn compare_sequence_regions(
    frames: &[Image],
    grid: &RegionGrid,
    metrics: &[MetricId],
    config: &MetricConfig,
    options: SequenceOptions,
) -> Result<Vec<SequenceReport>> {
    let first = frames
        .first()
        .ok_or_else(|| IqaError::InvalidParameter("no frames".into()))?;
    for f in frames {
        first.check_dims(f)?;
    }
    grid.cells(first.width(), first.height())?
        .into_iter()
        .map(|(label, rect)| {
            let cropped = frames.iter().map(|f| crop(f, rect)).collect::<Result<Vec<_>>>()?;
            compare_labeled(&label, &cropped, metrics, config, options)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Svg => "svg",
        })
    }
}

impl FromStr for ReportFormat {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            _ => Err(IqaError::Unknown {
                kind: "report format",
                value: s.into(),
            }),
        }
    }
}

/// Serializes reports.
///
/// CSV has one row per region, step and metric with columns
/// `region,step_index,metric,similarity,direc,signed_step,cumulative`.
/// SVG stacks one panel per region with a polyline per metric.
pub fn emit_report(reports: &[SequenceReport], format: ReportFormat) -> Result<Vec<u8>> {
    if reports.is_empty() || reports.iter().any(|r| r.steps.is_empty()) {
        return Err(IqaError::EmptyReport);
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut out = String::from("region,step_index,metric,similarity,direc,signed_step,cumulative\n");
            for r in reports {
                for s in &r.steps {
                    for m in &s.metrics {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{},{}",
                            r.region, s.step_index, m.metric, m.similarity, s.direc, m.signed_step, m.cumulative
                        );
                    }
                }
            }
            out.into_bytes()
        }
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(reports).expect("reports serialize");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Svg => {
            let panels: Vec<plot::Panel> = reports
                .iter()
                .map(|r| plot::Panel {
                    title: format!("region {}", r.region),
                    series: r
                        .metrics
                        .iter()
                        .map(|m| plot::Series {
                            name: m.clone(),
                            points: r.polyline(m),
                        })
                        .collect(),
                })
                .collect();
            plot::render(&panels, "step", "cumulative signed difference").into_bytes()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(offset: f64) -> Image {
        Image::from_fn(12, 12, |c, r| offset + ((c * 3 + r * 5) % 7) as f64 / 7.0).unwrap()
    }

    #[test]
    fn grid_remainder_rule() {
        let grid = RegionGrid::new(2, 2).unwrap();
        let cells = grid.cells(5, 5).unwrap();
        let sizes: Vec<(usize, usize)> = cells.iter().map(|(_, r)| (r.height, r.width)).collect();
        assert_eq!(sizes, vec![(2, 2), (2, 3), (3, 2), (3, 3)]);
        let labels: Vec<&str> = cells.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(labels, vec!["A1", "A2", "B1", "B2"]);
        assert!(RegionGrid::new(0, 2).is_err());
        assert!(RegionGrid::new(6, 1).unwrap().cells(5, 5).is_err());
        assert_eq!("3x4".parse::<RegionGrid>().unwrap(), RegionGrid::new(3, 4).unwrap());
        assert!("3by4".parse::<RegionGrid>().is_err());
        assert_eq!(RegionGrid::new(30, 1).unwrap().label(27, 0), "AB1");
    }

    #[test]
    fn custom_labels_validated() {
        let g = RegionGrid::new(1, 2).unwrap();
        assert!(g.clone().with_labels(vec!["L".into()]).is_err());
        assert!(g.clone().with_labels(vec!["L".into(), "L".into()]).is_err());
        let g = g.with_labels(vec!["L".into(), "R".into()]).unwrap();
        assert_eq!(g.cells(4, 2).unwrap()[1].0, "R");
    }

    #[test]
    fn identical_frames_stay_flat() {
        let f = frame(0.0);
        let r = compare_sequence(
            &[f.clone(), f.clone(), f],
            &MetricId::ALL,
            &MetricConfig::default(),
            SequenceOptions::default(),
        )
        .unwrap();
        for s in &r.steps {
            assert_eq!(s.direc, 0);
            for m in &s.metrics {
                assert_eq!(m.cumulative, 0.0);
                if m.metric != "lisi" {
                    assert_eq!(m.similarity, 1.0);
                }
            }
        }
    }

    #[test]
    fn brighter_second_frame_steps_down() {
        let r = compare_sequence(
            &[frame(0.0), frame(0.3)],
            &MetricId::ALL,
            &MetricConfig::default(),
            SequenceOptions::default(),
        )
        .unwrap();
        assert_eq!(r.steps[0].direc, -1);
        assert!(r.steps[0].metrics.iter().all(|m| m.signed_step < 0.0));
    }

    #[test]
    fn first_vs_each_pairs() {
        assert_eq!(pairs(4, CompareMode::FirstVsEach), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(pairs(3, CompareMode::Adjacent), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn error_paths() {
        let cfg = MetricConfig::default();
        let opts = SequenceOptions::default();
        assert!(compare_sequence(&[frame(0.0)], &[MetricId::Lisi], &cfg, opts).is_err());
        let small = Image::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            compare_sequence(&[frame(0.0), small], &[MetricId::Lisi], &cfg, opts),
            Err(IqaError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            emit_report(&[], ReportFormat::Csv),
            Err(IqaError::EmptyReport)
        ));
        assert!("pdf".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn csv_row_count() {
        let r = compare_sequence(
            &[frame(0.0), frame(0.1), frame(0.05), frame(0.2)],
            &[MetricId::Lisi],
            &MetricConfig::default(),
            SequenceOptions::default(),
        )
        .unwrap();
        let csv = String::from_utf8(emit_report(&[r], ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn sequence_normalization_is_shared() {
        let frames = [frame(0.0), frame(1.0)];
        let opts = SequenceOptions {
            normalization: Normalization::Sequence,
            ..Default::default()
        };
        let a = compare_sequence(&frames, &[MetricId::SsimGlobal], &MetricConfig::default(), opts).unwrap();
        let b = compare_sequence(
            &frames,
            &[MetricId::SsimGlobal],
            &MetricConfig::default(),
            SequenceOptions::default(),
        )
        .unwrap();
        // Both normalizations span the same joint range for a two-frame sequence.
        assert_eq!(a.steps[0].metrics[0].similarity, b.steps[0].metrics[0].similarity);
    }
}
