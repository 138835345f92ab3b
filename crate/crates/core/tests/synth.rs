use iqa_core::image::{intensity_mask, Band};
use iqa_core::metrics::{MetricConfig, MetricId, WeightingKind};
use iqa_core::numeric::sum;
use iqa_core::synth::{
    curves_to_csv, curves_to_svg, generate_curve_pairs, inject_noise, inject_noise_partial, run_characteristic_curves,
    run_noise_groups, synthetic_scene, NoiseDistribution, NoiseGroup, NoiseGroupOptions, NoiseSpec, DEFAULT_FRACTION,
};

const LEVELS: [f64; 6] = [0.1, 0.3, 0.5, 0.7, 0.9, 1.0];

#[test]
fn unit_level_curve_is_identity() {
    let base = synthetic_scene(32, 32, 1).unwrap();
    let points = run_characteristic_curves(
        &base,
        &MetricId::ALL,
        &MetricConfig::default(),
        &[1.0],
        DEFAULT_FRACTION,
        4,
    )
    .unwrap();
    assert_eq!(points.len(), 2);
    let s = sum(base.pixels().iter().copied());
    for p in &points {
        for (metric, &score) in &p.scores {
            let expect = if metric == "lisi" { s / (s + 1e-4) } else { 1.0 };
            assert!((score - expect).abs() < 1e-12, "{metric} {score}");
        }
    }
}

#[test]
fn curves_rise_with_similarity_level() {
    for seed in 0..4 {
        let base = synthetic_scene(48, 48, seed).unwrap();
        let points = run_characteristic_curves(
            &base,
            &MetricId::ALL,
            &MetricConfig::default(),
            &LEVELS,
            DEFAULT_FRACTION,
            seed,
        )
        .unwrap();
        for band in [Band::Highest, Band::Lowest] {
            let curve: Vec<_> = points.iter().filter(|p| p.band == band).collect();
            assert_eq!(curve.len(), LEVELS.len());
            for w in curve.windows(2) {
                for (metric, &lo) in &w[0].scores {
                    let hi = w[1].scores[metric];
                    assert!(hi >= lo - 1e-12, "seed {seed} {band} {metric}: {lo} then {hi}");
                }
            }
        }
    }
}

#[test]
fn lisi_penalizes_bright_replacement_more() {
    for seed in 0..4 {
        let base = synthetic_scene(48, 48, 10 + seed).unwrap();
        let points = run_characteristic_curves(
            &base,
            &[MetricId::Lisi],
            &MetricConfig::default(),
            &LEVELS[..4],
            DEFAULT_FRACTION,
            seed,
        )
        .unwrap();
        for level in &LEVELS[..4] {
            let at = |band| {
                points
                    .iter()
                    .find(|p| p.band == band && p.similarity_level == *level)
                    .unwrap()
                    .scores["lisi"]
            };
            assert!(at(Band::Highest) < at(Band::Lowest), "seed {seed} level {level}");
        }
    }
}

#[test]
fn curve_pairs_change_only_the_band() {
    let base = synthetic_scene(32, 32, 2).unwrap();
    for band in [Band::Highest, Band::Lowest] {
        let mask = intensity_mask(&base, band, DEFAULT_FRACTION).unwrap();
        let pairs = generate_curve_pairs(&base, &LEVELS, band, DEFAULT_FRACTION, 8).unwrap();
        let mut prev_changed = usize::MAX;
        for p in pairs.iter() {
            let changed: Vec<usize> = (0..base.len())
                .filter(|&i| p.perturbed.pixels()[i] != base.pixels()[i])
                .collect();
            assert!(changed.iter().all(|&i| mask.selected()[i]));
            // Higher similarity keeps more of the band intact.
            assert!(changed.len() <= prev_changed);
            prev_changed = changed.len();
        }
    }
}

#[test]
fn curve_artifacts_are_deterministic() {
    let base = synthetic_scene(24, 24, 3).unwrap();
    let run = || {
        run_characteristic_curves(
            &base,
            &MetricId::ALL,
            &MetricConfig::default(),
            &LEVELS,
            DEFAULT_FRACTION,
            99,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(curves_to_csv(&a), curves_to_csv(&b));
    let csv = curves_to_csv(&a);
    assert!(csv.starts_with("similarity_level,band,metric,score\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * LEVELS.len() * MetricId::ALL.len());
    let svg = curves_to_svg(&a);
    assert_eq!(svg, curves_to_svg(&b));
    assert_eq!(svg.matches("class=\"panel\"").count(), MetricId::ALL.len());
    assert_eq!(svg.matches("<polyline").count(), 2 * MetricId::ALL.len());
}

#[test]
fn partial_coverage_stays_inside_band() {
    let x = synthetic_scene(40, 40, 4).unwrap();
    let mask = intensity_mask(&x, Band::Lowest, DEFAULT_FRACTION).unwrap();
    let spec = NoiseSpec::new(NoiseDistribution::Gaussian, 0.2, Band::Lowest, DEFAULT_FRACTION, 5).unwrap();
    let y = inject_noise_partial(&x, &spec, 0.5).unwrap();
    let changed: Vec<usize> = (0..x.len()).filter(|&i| x.pixels()[i] != y.pixels()[i]).collect();
    assert!(changed.iter().all(|&i| mask.selected()[i]));
    assert!(changed.len() <= mask.count().div_ceil(2));
    assert!(changed.len() > mask.count() / 4);
}

#[test]
fn noise_report_shapes() {
    let refs = vec![
        ("a".to_string(), synthetic_scene(24, 24, 1).unwrap()),
        ("b".to_string(), synthetic_scene(24, 24, 2).unwrap()),
    ];
    let specs: Vec<NoiseSpec> = [Band::Highest, Band::Lowest]
        .map(|b| NoiseSpec::new(NoiseDistribution::Rayleigh, 0.05, b, DEFAULT_FRACTION, 0).unwrap())
        .to_vec();
    let metrics = [MetricId::SsimWindowed, MetricId::Lisi];
    let options = NoiseGroupOptions {
        repeats: 4,
        bins: 5,
        ..Default::default()
    };
    let report = run_noise_groups(&refs, &specs, &metrics, &MetricConfig::default(), &options, 3).unwrap();
    assert_eq!(report.rows.len(), 2 * 2 * 4 * 2);
    let csv = report.to_csv();
    assert!(csv.starts_with("group,distribution,amplitude,band,metric,score,sensi\n"));
    assert_eq!(csv.lines().count(), 1 + report.rows.len());
    assert_eq!(report.histograms.len(), 2 * 2);
    for h in &report.histograms {
        assert_eq!(h.edges.len(), 6);
        assert_eq!(h.counts.iter().sum::<usize>(), 2 * 4);
    }
    let table = report.summary_table();
    assert!(table.contains("lisi"));
    // The baseline measured against itself is exactly zero.
    let base = report.summary_for(NoiseGroup::of(&specs[0]), "ssim-windowed").unwrap();
    assert_eq!(base.mean, Some(0.0));
}

#[test]
fn bundled_scene_high_band_lisi_sensi_is_positive() {
    let refs = vec![("synthetic".to_string(), synthetic_scene(64, 64, 0).unwrap())];
    let spec = NoiseSpec::new(NoiseDistribution::Uniform, 0.1, Band::Highest, DEFAULT_FRACTION, 0).unwrap();
    let report = run_noise_groups(
        &refs,
        &[spec],
        &MetricId::ALL,
        &MetricConfig::default(),
        &NoiseGroupOptions::default(),
        2024,
    )
    .unwrap();
    let lisi = report.summary_for(NoiseGroup::of(&spec), "lisi").unwrap().mean.unwrap();
    assert!(lisi > 0.0, "mean sensi(lisi) = {lisi}");
}

/// Same unit draws, same amplitude, opposite bands: the bright-band copy must
/// lose more similarity. Symmetric distributions only, so clamping at 0 and 1
/// trims both bands alike.
#[test]
fn bright_band_noise_costs_more_similarity() {
    let cfg = MetricConfig::default();
    let ids = [
        MetricId::Lisi,
        MetricId::Itw(WeightingKind::Gaussian),
        MetricId::Itw(WeightingKind::Tanh),
        MetricId::Itw(WeightingKind::Sigmoid),
    ];
    for i in 0..20 {
        let x = synthetic_scene(64, 64, 300 + i).unwrap();
        for dist in [NoiseDistribution::Uniform, NoiseDistribution::Gaussian] {
            for amp in [0.02, 0.05, 0.1, 0.2] {
                let noisy =
                    |band| inject_noise(&x, &NoiseSpec::new(dist, amp, band, DEFAULT_FRACTION, i).unwrap()).unwrap();
                let (hi, lo) = (noisy(Band::Highest), noisy(Band::Lowest));
                for id in ids {
                    let h = cfg.evaluate(id, &x, &hi).unwrap().score;
                    let l = cfg.evaluate(id, &x, &lo).unwrap().score;
                    assert!(1.0 - h > 1.0 - l, "scene {i} {dist} {amp} {id}: high {h}, low {l}");
                }
            }
        }
    }
}

/// Averaged over 20 scenes at low similarity, the windowed and gradient SSIM
/// curves separate the bands less than LISI does.
#[test]
fn ssim_band_gap_is_small_next_to_lisi() {
    let levels = [0.1, 0.3];
    let ids = [MetricId::SsimWindowed, MetricId::GSsim, MetricId::Lisi];
    let mut gaps = [[0.0; 2]; 3];
    for seed in 0..20 {
        let base = synthetic_scene(64, 64, seed).unwrap();
        let points =
            run_characteristic_curves(&base, &ids, &MetricConfig::default(), &levels, DEFAULT_FRACTION, seed).unwrap();
        for (li, level) in levels.iter().enumerate() {
            let at = |band| {
                points
                    .iter()
                    .find(|p| p.band == band && p.similarity_level == *level)
                    .unwrap()
            };
            for (k, id) in ids.iter().enumerate() {
                let name = id.name();
                gaps[k][li] += (at(Band::Highest).scores[name] - at(Band::Lowest).scores[name]) / 20.0;
            }
        }
    }
    for li in 0..levels.len() {
        let lisi_gap = gaps[2][li].abs();
        for k in 0..2 {
            assert!(
                gaps[k][li].abs() < lisi_gap,
                "{} at {}: {} vs lisi {}",
                ids[k],
                levels[li],
                gaps[k][li],
                lisi_gap
            );
        }
    }
}

#[test]
fn groups_keep_conditions_apart() {
    let refs = vec![("a".to_string(), synthetic_scene(24, 24, 6).unwrap())];
    let specs: Vec<NoiseSpec> = [0.05, 0.2]
        .iter()
        .map(|&a| NoiseSpec::new(NoiseDistribution::Uniform, a, Band::Highest, DEFAULT_FRACTION, 0).unwrap())
        .collect();
    let options = NoiseGroupOptions {
        repeats: 3,
        ..Default::default()
    };
    let report = run_noise_groups(
        &refs,
        &specs,
        &[MetricId::SsimWindowed, MetricId::Lisi],
        &MetricConfig::default(),
        &options,
        1,
    )
    .unwrap();
    assert_eq!(report.summary.len(), 2 * 2);
    let weak = report.summary_for(NoiseGroup::of(&specs[0]), "lisi").unwrap();
    let strong = report.summary_for(NoiseGroup::of(&specs[1]), "lisi").unwrap();
    assert_eq!((weak.count, strong.count), (3, 3));
    assert_ne!(weak.mean, strong.mean);
    let json = serde_json::to_value(&report.histograms[0]).unwrap();
    assert_eq!(json["distribution"], "uniform");
    assert_eq!(json["band"], "highest");
    assert!(report.summary_table().lines().count() == 1 + 4);
}
