use iqa_core::image::{crop, Image};
use iqa_core::metrics::{MetricConfig, MetricId};
use iqa_core::sequence::{
    compare_sequence, compare_sequence_regions, emit_report, CompareMode, MetricStep, RegionGrid, ReportFormat,
    SequenceOptions, SequenceReport, Step,
};
use iqa_core::synth::{rng_from_seed, synthetic_scene};
use proptest::prelude::*;
use rand::Rng;

fn frames(seed: u64, n: usize, w: usize, h: usize) -> Vec<Image> {
    let mut rng = rng_from_seed(seed);
    let base = synthetic_scene(w, h, seed).unwrap();
    (0..n)
        .map(|_| {
            let offset = rng.random_range(-0.2..0.2);
            let px = base
                .pixels()
                .iter()
                .map(|v| v + offset + 0.05 * rng.random::<f64>())
                .collect();
            Image::new(w, h, px).unwrap()
        })
        .collect()
}

fn metrics() -> Vec<MetricId> {
    MetricId::ALL.to_vec()
}

#[test]
fn reversing_frames_negates_direc_and_steps() {
    let fs = frames(11, 5, 24, 20);
    let mut rev = fs.clone();
    rev.reverse();
    let cfg = MetricConfig::default();
    let fwd = compare_sequence(&fs, &metrics(), &cfg, SequenceOptions::default()).unwrap();
    let bwd = compare_sequence(&rev, &metrics(), &cfg, SequenceOptions::default()).unwrap();
    let n = fwd.steps.len();
    for (k, s) in fwd.steps.iter().enumerate() {
        let r = &bwd.steps[n - 1 - k];
        assert_eq!(s.direc, -r.direc);
        for (a, b) in s.metrics.iter().zip(&r.metrics) {
            assert_eq!(a.metric, b.metric);
            assert!(
                (a.similarity - b.similarity).abs() < 1e-12,
                "{} not symmetric",
                a.metric
            );
            assert!((a.signed_step + b.signed_step).abs() < 1e-12);
        }
    }
}

#[test]
fn cumulative_matches_running_sum() {
    let fs = frames(12, 7, 16, 16);
    for mode in [CompareMode::Adjacent, CompareMode::FirstVsEach] {
        let opts = SequenceOptions {
            mode,
            ..Default::default()
        };
        let r = compare_sequence(&fs, &metrics(), &MetricConfig::default(), opts).unwrap();
        for (i, metric) in r.metrics.iter().enumerate() {
            let mut acc = 0.0;
            for s in &r.steps {
                assert_eq!(&s.metrics[i].metric, metric);
                acc += s.metrics[i].signed_step;
                assert!((acc - s.metrics[i].cumulative).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn grid_partition_covers_every_pixel_once() {
    for (w, h, rows, cols) in [(5, 5, 2, 2), (17, 9, 3, 4), (12, 12, 3, 4), (7, 3, 1, 7)] {
        let cells = RegionGrid::new(rows, cols).unwrap().cells(w, h).unwrap();
        let mut hits = vec![0u8; w * h];
        for (_, r) in &cells {
            for row in r.top..r.top + r.height {
                for col in r.left..r.left + r.width {
                    hits[row * w + col] += 1;
                }
            }
        }
        assert!(hits.iter().all(|&h| h == 1), "{w}x{h} on {rows}x{cols}");
    }
}

#[test]
fn grid_partition_preserves_pixel_multiset() {
    let img = synthetic_scene(13, 11, 5).unwrap();
    let mut from_cells: Vec<f64> = RegionGrid::new(3, 2)
        .unwrap()
        .cells(13, 11)
        .unwrap()
        .into_iter()
        .flat_map(|(_, r)| crop(&img, r).unwrap().into_pixels())
        .collect();
    let mut all = img.pixels().to_vec();
    from_cells.sort_by(f64::total_cmp);
    all.sort_by(f64::total_cmp);
    assert_eq!(from_cells, all);
}

#[test]
fn one_cell_grid_equals_full_frame() {
    let fs = frames(13, 4, 20, 18);
    let cfg = MetricConfig::default();
    let full = compare_sequence(&fs, &metrics(), &cfg, SequenceOptions::default()).unwrap();
    let grid = RegionGrid::new(1, 1).unwrap();
    let cells = compare_sequence_regions(&fs, &grid, &metrics(), &cfg, SequenceOptions::default()).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].region, "A1");
    assert_eq!(cells[0].steps, full.steps);
}

#[test]
fn perturbation_confined_to_one_cell() {
    let base = synthetic_scene(24, 24, 14).unwrap();
    let grid = RegionGrid::new(2, 2).unwrap();
    let target = grid.cells(24, 24).unwrap()[3].1;
    let bump = |amount: f64| {
        Image::from_fn(24, 24, |c, r| {
            let inside = c >= target.left && r >= target.top;
            base.get(c, r) + if inside { amount * ((c + r) % 3) as f64 } else { 0.0 }
        })
        .unwrap()
    };
    let fs = vec![bump(0.0), bump(0.1), bump(0.3)];
    let reports = compare_sequence_regions(
        &fs,
        &grid,
        &metrics(),
        &MetricConfig::default(),
        SequenceOptions::default(),
    )
    .unwrap();
    for r in &reports {
        let moved = r.steps.iter().any(|s| s.metrics.iter().any(|m| m.cumulative != 0.0));
        assert_eq!(moved, r.region == "B2", "region {}", r.region);
    }
}

#[test]
fn twelve_cell_grid_yields_twelve_reports() {
    let fs = frames(15, 3, 36, 27);
    let reports = compare_sequence_regions(
        &fs,
        &RegionGrid::new(3, 4).unwrap(),
        &[MetricId::SsimGlobal, MetricId::Lisi],
        &MetricConfig::default(),
        SequenceOptions::default(),
    )
    .unwrap();
    assert_eq!(reports.len(), 12);
    let labels: Vec<&str> = reports.iter().map(|r| r.region.as_str()).collect();
    assert_eq!(labels[..5], ["A1", "A2", "A3", "A4", "B1"]);
    let csv = String::from_utf8(emit_report(&reports, ReportFormat::Csv).unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12 * 2 * 2);
}

#[test]
fn empty_step_report_is_rejected() {
    let r = SequenceReport {
        region: "full".into(),
        options: SequenceOptions::default(),
        metrics: vec!["lisi".into()],
        steps: vec![],
    };
    for f in [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg] {
        assert!(emit_report(std::slice::from_ref(&r), f).is_err());
    }
}

fn frozen_report() -> Vec<SequenceReport> {
    let step = |i: usize, direc: i8, sims: [f64; 2], cum: [f64; 2]| Step {
        step_index: i,
        from: i - 1,
        to: i,
        direc,
        metrics: ["ssim-windowed", "lisi"]
            .iter()
            .zip(sims.iter().zip(cum))
            .map(|(m, (&s, c))| MetricStep {
                metric: m.to_string(),
                similarity: s,
                signed_step: direc as f64 * (1.0 - s),
                cumulative: c,
            })
            .collect(),
    };
    let report = |region: &str, steps| SequenceReport {
        region: region.into(),
        options: SequenceOptions::default(),
        metrics: vec!["ssim-windowed".into(), "lisi".into()],
        steps,
    };
    vec![
        report(
            "L",
            vec![
                step(1, -1, [0.75, 0.5], [-0.25, -0.5]),
                step(2, 1, [0.5, 0.25], [0.25, 0.25]),
                step(3, 0, [1.0, 0.875], [0.25, 0.25]),
            ],
        ),
        report("R", vec![step(1, 1, [0.875, 0.5], [0.125, 0.5])]),
    ]
}

#[test]
fn svg_matches_golden() {
    let svg = emit_report(&frozen_report(), ReportFormat::Svg).unwrap();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/sequence_report.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, &svg).unwrap();
    }
    let text = String::from_utf8(svg.clone()).unwrap();
    assert_eq!(text.matches("<polyline").count(), 4);
    assert!(text.contains("class=\"legend\""));
    assert_eq!(svg, std::fs::read(path).unwrap());
}

#[test]
fn json_round_trips_structure() {
    let json = emit_report(&frozen_report(), ReportFormat::Json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v[0]["region"], "L");
    assert_eq!(v[0]["options"]["normalization"], "per-pair");
    assert_eq!(v[0]["steps"][1]["metrics"][1]["cumulative"], 0.25);
    assert_eq!(v[1]["steps"][0]["direc"], 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn order_reversal_holds_for_random_sequences(seed in any::<u64>(), n in 2usize..5) {
        let fs = frames(seed, n, 12, 12);
        let mut rev = fs.clone();
        rev.reverse();
        let ids = [MetricId::SsimGlobal, MetricId::Lisi, MetricId::Itw(iqa_core::metrics::WeightingKind::Sigmoid)];
        let cfg = MetricConfig::default();
        let a = compare_sequence(&fs, &ids, &cfg, SequenceOptions::default()).unwrap();
        let b = compare_sequence(&rev, &ids, &cfg, SequenceOptions::default()).unwrap();
        let last = a.steps.len() - 1;
        for (k, s) in a.steps.iter().enumerate() {
            prop_assert_eq!(s.direc, -b.steps[last - k].direc);
            for (x, y) in s.metrics.iter().zip(&b.steps[last - k].metrics) {
                prop_assert!((x.signed_step + y.signed_step).abs() < 1e-12);
            }
        }
    }
}
