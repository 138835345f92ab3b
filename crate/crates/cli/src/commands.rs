use std::io::Write;
use std::path::{Path, PathBuf};

use iqa_core::image::{load_image, normalize_joint, Band, Image, ImageFormat};
use iqa_core::indexes::{direc, sensi};
use iqa_core::metrics::MetricId;
use iqa_core::sequence::{
    compare_sequence_regions, emit_report, CompareMode, DirecSource, Normalization, RegionGrid, ReportFormat,
    SequenceOptions,
};
use iqa_core::synth::{
    curves_to_csv, curves_to_svg, derive_seed, run_characteristic_curves, run_noise_groups, synthetic_scene,
    NoiseDistribution, NoiseGroupOptions, NoiseSpec, DEFAULT_FRACTION, RNG_ALGORITHM,
};
use iqa_core::IqaError;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::settings::{echo, parse_list, pick, pick_or, pick_switch, ConfigFile};
use crate::{CommonArgs, CompareArgs, CurvesArgs, NoiseArgs, SequenceArgs};

const DEFAULT_BASELINE: MetricId = MetricId::SsimWindowed;
const DEFAULT_SCENE_SIZE: usize = 64;

const IMAGE_EXTENSIONS: &[&str] = &["png", "txt", "tsv", "dat", "mat", "asc", "f64", "raw", "bin"];

struct Resolved {
    file: ConfigFile,
    seed: u64,
    format: Option<String>,
    input_format: Option<ImageFormat>,
}

fn resolve_common(common: &CommonArgs) -> CliResult<Resolved> {
    let file = ConfigFile::load(common.config.as_deref())?;
    Ok(Resolved {
        seed: pick_or(common.seed, &file, "seed", 0)?,
        format: pick(common.format.clone(), &file, "format")?,
        input_format: pick(common.input_format.clone(), &file, "input-format")?
            .map(|s| s.parse::<ImageFormat>())
            .transpose()?,
        file,
    })
}

fn load(path: &Path, format: Option<ImageFormat>) -> CliResult<Image> {
    let format = match format {
        Some(f) => f,
        None => ImageFormat::detect(path)?,
    };
    Ok(load_image(path, format)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn stdout_bytes(bytes: &[u8]) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("json values serialize");
    bytes.push(b'\n');
    bytes
}

fn out_dir(out: Option<&Path>) -> CliResult<PathBuf> {
    let dir = out
        .ok_or_else(|| CliError::Config("--out <DIR> is required for this command".into()))?
        .to_path_buf();
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn paths_json(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

/// Joint normalization, or the raw pair when both images are constant and
/// equal and already inside `[0, 1]`.
fn normalize_or_raw(x: &Image, y: &Image) -> CliResult<(Image, Image, bool)> {
    match normalize_joint(x, y) {
        Ok((a, b)) => Ok((a, b, true)),
        Err(IqaError::DegenerateInput) if x.check_unit_range().is_ok() && y.check_unit_range().is_ok() => {
            Ok((x.clone(), y.clone(), false))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let r = resolve_common(&args.common)?;
    let (metrics, config) = args.metrics.resolve(&r.file)?;
    let baseline =
        pick_or(args.baseline.clone(), &r.file, "baseline", DEFAULT_BASELINE.to_string())?.parse::<MetricId>()?;
    let format = r.format.as_deref().unwrap_or("json");
    if format != "json" && format != "csv" {
        return Err(CliError::Config(format!("compare writes json or csv, not {format:?}")));
    }
    let x = load(&args.reference, r.input_format)?;
    let y = load(&args.test, r.input_format)?;
    x.check_dims(&y)?;
    let (nx, ny, normalized) = normalize_or_raw(&x, &y)?;
    let results = config.evaluate_all(&metrics, &nx, &ny)?;
    let base_score = config.evaluate(baseline, &nx, &ny)?.score;
    let d = direc(&x, &y)?;
    let sensis: Vec<Value> = results
        .iter()
        .map(|m| {
            let s = sensi(base_score, m.score).ok();
            json!({ "metric": m.metric, "baseline": baseline.name(), "baseline_score": base_score, "candidate_score": m.score, "sensi": s })
        })
        .collect();
    let config_echo = echo(
        "compare",
        &r.file,
        &metrics,
        &config,
        json!({
            "baseline": baseline.name(),
            "seed": r.seed,
            "rng": RNG_ALGORITHM,
            "inputs": paths_json(&[args.reference.clone(), args.test.clone()]),
            "input_format": r.input_format.map(|f| f.to_string()),
            "normalized": normalized,
            "width": x.width(),
            "height": x.height(),
            "applied_metric_config": config.fitted(x.width(), x.height()).to_json(),
        }),
    );
    let bytes = if format == "json" {
        pretty(&json!({ "config": config_echo, "results": results, "direc": d, "sensi": sensis }))
    } else {
        // CSV has no room for the echo, so it travels on stderr.
        eprintln!("{}", json!({ "config": config_echo }));
        let mut csv = String::from("metric,score,baseline,sensi,direc\n");
        for (m, s) in results.iter().zip(&sensis) {
            let sv = s["sensi"].as_f64().map(|v| v.to_string()).unwrap_or_default();
            csv.push_str(&format!("{},{},{},{},{}\n", m.metric, m.score, baseline.name(), sv, d));
        }
        csv.into_bytes()
    };
    match &args.common.out {
        Some(path) => write_file(path, &bytes),
        None => stdout_bytes(&bytes),
    }
}

/// A lone directory expands to its image files in filename order; anything
/// else is taken as an explicit frame list.
fn frame_paths(inputs: &[PathBuf], any_extension: bool) -> CliResult<Vec<PathBuf>> {
    if let [dir] = inputs {
        if dir.is_dir() {
            let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            let mut files = Vec::new();
            for entry in entries {
                let entry = entry.map_err(|source| CliError::Io {
                    path: dir.clone(),
                    source,
                })?;
                let path = entry.path();
                let name = entry.file_name();
                let hidden = name.to_string_lossy().starts_with('.');
                let known = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
                if path.is_file() && !hidden && (known || any_extension) {
                    files.push(path);
                }
            }
            files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
            return Ok(files);
        }
    }
    Ok(inputs.to_vec())
}

pub fn sequence(args: &SequenceArgs) -> CliResult<()> {
    let r = resolve_common(&args.common)?;
    let (metrics, config) = args.metrics.resolve(&r.file)?;
    let options = SequenceOptions {
        mode: pick_or(args.mode.clone(), &r.file, "mode", "adjacent".to_string())?.parse::<CompareMode>()?,
        normalization: pick_or(args.normalize.clone(), &r.file, "normalize", "per-pair".to_string())?
            .parse::<Normalization>()?,
        direc_on: pick_or(args.direc_on.clone(), &r.file, "direc-on", "raw".to_string())?.parse::<DirecSource>()?,
    };
    let mut grid = pick_or(args.grid.clone(), &r.file, "grid", "1x1".to_string())?.parse::<RegionGrid>()?;
    if let Some(labels) = pick::<String>(args.labels.clone(), &r.file, "labels")? {
        grid = grid.with_labels(parse_list(&labels, "labels")?)?;
    }
    let svg = pick_switch(args.svg, &r.file, "svg")? || r.format.as_deref() == Some("svg");
    if let Some(f) = r.format.as_deref() {
        f.parse::<ReportFormat>()?;
    }
    let dir = out_dir(args.common.out.as_deref())?;
    let paths = frame_paths(&args.inputs, r.input_format.is_some())?;
    if paths.len() < 2 {
        return Err(CliError::Core(IqaError::InvalidParameter(format!(
            "a sequence needs at least 2 frames, found {}",
            paths.len()
        ))));
    }
    let frames = paths
        .iter()
        .map(|p| load(p, r.input_format))
        .collect::<CliResult<Vec<_>>>()?;
    let reports = compare_sequence_regions(&frames, &grid, &metrics, &config, options)?;
    let config_echo = echo(
        "sequence",
        &r.file,
        &metrics,
        &config,
        json!({
            "seed": r.seed,
            "rng": RNG_ALGORITHM,
            "inputs": paths_json(&paths),
            "input_format": r.input_format.map(|f| f.to_string()),
            "grid": format!("{}x{}", grid.rows(), grid.cols()),
            "regions": reports.iter().map(|rep| rep.region.clone()).collect::<Vec<_>>(),
            "options": options,
        }),
    );
    let mut written = vec![dir.join("sequence.csv"), dir.join("sequence.json")];
    write_file(&written[0], &emit_report(&reports, ReportFormat::Csv)?)?;
    let report_json: Value =
        serde_json::from_slice(&emit_report(&reports, ReportFormat::Json)?).expect("report json parses");
    write_file(
        &written[1],
        &pretty(&json!({ "config": config_echo, "reports": report_json })),
    )?;
    if svg {
        let path = dir.join("sequence.svg");
        write_file(&path, &emit_report(&reports, ReportFormat::Svg)?)?;
        written.push(path);
    }
    let config_path = dir.join("config.json");
    write_file(&config_path, &pretty(&config_echo))?;
    written.push(config_path);
    stdout_bytes(&pretty(
        &json!({ "config": config_echo, "files": paths_json(&written) }),
    ))
}

fn reference_or_scene(path: Option<&Path>, format: Option<ImageFormat>, size: usize, seed: u64) -> CliResult<Image> {
    match path {
        Some(p) => {
            let img = load(p, format)?;
            let (lo, hi) = (img.min(), img.max());
            if hi <= lo {
                return Err(IqaError::DegenerateInput.into());
            }
            Ok(Image::new(
                img.width(),
                img.height(),
                img.pixels().iter().map(|v| (v - lo) / (hi - lo)).collect(),
            )?)
        }
        None => Ok(synthetic_scene(size, size, seed)?),
    }
}

pub fn curves(args: &CurvesArgs) -> CliResult<()> {
    let r = resolve_common(&args.common)?;
    let (metrics, config) = args.metrics.resolve(&r.file)?;
    let levels: Vec<f64> = match pick::<String>(args.levels.clone(), &r.file, "levels")? {
        Some(s) => parse_list(&s, "levels")?,
        None => (1..=10).map(|i| i as f64 / 10.0).collect(),
    };
    let fraction = pick_or(args.fraction, &r.file, "fraction", DEFAULT_FRACTION)?;
    let size = pick_or(args.size, &r.file, "size", DEFAULT_SCENE_SIZE)?;
    if let Some(f) = r.format.as_deref().filter(|f| *f != "json") {
        return Err(CliError::Config(format!("synth curves reports in json, not {f:?}")));
    }
    let dir = out_dir(args.common.out.as_deref())?;
    let base = reference_or_scene(args.reference.as_deref(), r.input_format, size, r.seed)?;
    let points = run_characteristic_curves(&base, &metrics, &config, &levels, fraction, r.seed)?;
    let config_echo = echo(
        "synth curves",
        &r.file,
        &metrics,
        &config,
        json!({
            "seed": r.seed,
            "rng": RNG_ALGORITHM,
            "reference": args.reference.as_ref().map(|p| p.display().to_string()),
            "scene_size": args.reference.is_none().then_some(size),
            "levels": levels,
            "fraction": fraction,
        }),
    );
    let written = [dir.join("curves.csv"), dir.join("curves.svg"), dir.join("config.json")];
    write_file(&written[0], curves_to_csv(&points).as_bytes())?;
    write_file(&written[1], curves_to_svg(&points).as_bytes())?;
    write_file(&written[2], &pretty(&config_echo))?;
    stdout_bytes(&pretty(
        &json!({ "config": config_echo, "points": points.len(), "files": paths_json(&written) }),
    ))
}

fn parse_bands(s: &str) -> CliResult<Vec<Band>> {
    if s == "both" {
        return Ok(vec![Band::Highest, Band::Lowest]);
    }
    parse_list(s, "band")
}

pub fn noise(args: &NoiseArgs) -> CliResult<()> {
    let r = resolve_common(&args.common)?;
    let (metrics, config) = args.metrics.resolve(&r.file)?;
    let amplitudes: Vec<f64> = parse_list(
        &pick::<String>(args.amplitude.clone(), &r.file, "amplitude")?
            .ok_or_else(|| CliError::Config("--amplitude is required".into()))?,
        "amplitude",
    )?;
    let dists: Vec<NoiseDistribution> = parse_list(
        &pick_or(args.dist.clone(), &r.file, "dist", "uniform".to_string())?,
        "dist",
    )?;
    let bands = parse_bands(&pick_or(args.band.clone(), &r.file, "band", "both".to_string())?)?;
    let fraction = pick_or(args.fraction, &r.file, "fraction", DEFAULT_FRACTION)?;
    let defaults = NoiseGroupOptions::default();
    let options = NoiseGroupOptions {
        repeats: pick_or(args.repeats, &r.file, "repeats", defaults.repeats)?,
        coverage: pick_or(args.coverage, &r.file, "coverage", defaults.coverage)?,
        baseline: pick_or(args.baseline.clone(), &r.file, "baseline", DEFAULT_BASELINE.to_string())?
            .parse::<MetricId>()?,
        bins: pick_or(args.bins, &r.file, "bins", defaults.bins)?,
    };
    let format = r.format.as_deref().unwrap_or("table");
    if format != "table" && format != "json" {
        return Err(CliError::Config(format!(
            "synth noise prints a table or json, not {format:?}"
        )));
    }
    let size = pick_or(args.size, &r.file, "size", DEFAULT_SCENE_SIZE)?;
    let scenes = pick_or(args.scenes, &r.file, "scenes", 1)?;
    let mut specs = Vec::new();
    for &d in &dists {
        for &a in &amplitudes {
            for &b in &bands {
                specs.push(NoiseSpec::new(d, a, b, fraction, r.seed)?);
            }
        }
    }
    let dir = out_dir(args.common.out.as_deref())?;
    let refs: Vec<(String, Image)> = if args.references.is_empty() {
        (0..scenes)
            .map(|i| {
                let img = synthetic_scene(size, size, derive_seed(r.seed, &[i as u64]))?;
                Ok((format!("synthetic-{i}"), img))
            })
            .collect::<CliResult<_>>()?
    } else {
        args.references
            .iter()
            .map(|p| {
                let label = p
                    .file_stem()
                    .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok((label, reference_or_scene(Some(p), r.input_format, size, r.seed)?))
            })
            .collect::<CliResult<_>>()?
    };
    let report = run_noise_groups(&refs, &specs, &metrics, &config, &options, r.seed)?;
    let config_echo = echo(
        "synth noise",
        &r.file,
        &metrics,
        &config,
        json!({
            "seed": r.seed,
            "rng": RNG_ALGORITHM,
            "references": paths_json(&args.references),
            "synthetic_scenes": args.references.is_empty().then_some(json!({ "count": scenes, "size": size })),
            "distributions": dists,
            "amplitudes": amplitudes,
            "bands": bands,
            "fraction": fraction,
            "repeats": options.repeats,
            "coverage": options.coverage,
            "baseline": options.baseline.name(),
            "bins": options.bins,
        }),
    );
    let table = report.summary_table();
    let written = [
        dir.join("noise.csv"),
        dir.join("histograms.json"),
        dir.join("summary.txt"),
        dir.join("config.json"),
    ];
    write_file(&written[0], report.to_csv().as_bytes())?;
    write_file(
        &written[1],
        &pretty(&serde_json::to_value(&report.histograms).expect("histograms serialize")),
    )?;
    write_file(&written[2], table.as_bytes())?;
    write_file(&written[3], &pretty(&config_echo))?;
    if format == "json" {
        let summary = serde_json::to_value(&report.summary).expect("summary serializes");
        stdout_bytes(&pretty(
            &json!({ "config": config_echo, "summary": summary, "files": paths_json(&written) }),
        ))
    } else {
        stdout_bytes(table.as_bytes())
    }
}
