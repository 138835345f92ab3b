//! Flag and config-file resolution. A config file holds `key=value` lines
//! keyed by long flag names; flags win over the file, the file wins over
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use iqa_core::metrics::{GaussianWindow, LisiConstants, MetricConfig, MetricId, SsimConstants, WeightingParams};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// Bumped whenever an artifact layout changes.
pub const FORMAT_VERSION: u32 = 1;

const KNOWN_KEYS: &[&str] = &[
    "amplitude",
    "band",
    "baseline",
    "bins",
    "c1",
    "c2",
    "coverage",
    "direc-on",
    "dist",
    "exact-size",
    "format",
    "fraction",
    "grid",
    "input-format",
    "labels",
    "levels",
    "lisi-c1",
    "lisi-c2",
    "metrics",
    "mode",
    "ms-levels",
    "normalize",
    "repeats",
    "scenes",
    "seed",
    "size",
    "svg",
    "weighting-params",
    "window",
    "window-sigma",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, Some(path))
    }

    pub fn parse(text: &str, path: Option<&Path>) -> CliResult<Self> {
        let origin = path.map_or_else(|| "config".to_string(), |p| p.display().to_string());
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value", n + 1)))?;
            let key = key.trim().trim_start_matches("--").to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("{origin}:{}: unknown key {key:?}", n + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("{origin}:{}: duplicate key {key:?}", n + 1)));
            }
        }
        Ok(Self {
            path: path.map(Path::to_path_buf),
            values,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("config key {key}: {e}")))
            })
            .transpose()
    }
}

/// Flag value, else config-file value, else `None`.
pub fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> CliResult<Option<T>>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}

/// Like [`pick`] with a default.
pub fn pick_or<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> CliResult<T>
where
    T::Err: Display,
{
    Ok(pick(flag, file, key)?.unwrap_or(default))
}

/// A switch that can also be turned on from the file.
pub fn pick_switch(flag: bool, file: &ConfigFile, key: &str) -> CliResult<bool> {
    Ok(flag || file.get::<bool>(key)?.unwrap_or(false))
}

/// Comma-separated list parsing shared by several flags.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: Display,
{
    let items: Vec<T> = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| CliError::Config(format!("{what}: {e}"))))
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{what}: empty list")));
    }
    Ok(items)
}

/// Options that configure the metrics themselves.
#[derive(Debug, Args)]
pub struct MetricArgs {
    /// Comma-separated metric identifiers, or `all`.
    #[arg(long)]
    pub metrics: Option<String>,
    /// SSIM luminance constant.
    #[arg(long)]
    pub c1: Option<f64>,
    /// SSIM contrast-structure constant.
    #[arg(long)]
    pub c2: Option<f64>,
    /// LISI mean-term constant.
    #[arg(long = "lisi-c1")]
    pub lisi_c1: Option<f64>,
    /// LISI variance-term constant.
    #[arg(long = "lisi-c2")]
    pub lisi_c2: Option<f64>,
    /// Gaussian window size (odd).
    #[arg(long)]
    pub window: Option<usize>,
    /// Gaussian window standard deviation.
    #[arg(long = "window-sigma")]
    pub window_sigma: Option<f64>,
    /// MS-SSIM scale count (1 to 5).
    #[arg(long = "ms-levels")]
    pub ms_levels: Option<usize>,
    /// e.g. `gaussian-sigma=0.5,tanh-k=2,sigmoid-k=10,sigmoid-center=0.5`
    #[arg(long = "weighting-params")]
    pub weighting_params: Option<String>,
    /// Fail on images smaller than the window instead of shrinking it.
    #[arg(long = "exact-size")]
    pub exact_size: bool,
}

fn parse_weighting(s: &str, mut params: WeightingParams) -> CliResult<WeightingParams> {
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("weighting-params: expected name=value, got {part:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("weighting-params {k}: {e}")))?;
        match k.trim().replace('_', "-").as_str() {
            "gaussian-sigma" => params.gaussian_sigma = v,
            "tanh-k" => params.tanh_k = v,
            "sigmoid-k" => params.sigmoid_k = v,
            "sigmoid-center" => params.sigmoid_center = v,
            other => {
                return Err(CliError::Config(format!(
                    "weighting-params: unknown parameter {other:?}"
                )))
            }
        }
    }
    Ok(params)
}

impl MetricArgs {
    pub fn resolve(&self, file: &ConfigFile) -> CliResult<(Vec<MetricId>, MetricConfig)> {
        let metrics = match pick(self.metrics.clone(), file, "metrics")? {
            Some(list) => MetricId::parse_list(&list)?,
            None => MetricId::ALL.to_vec(),
        };
        let defaults = MetricConfig::default();
        let ssim = SsimConstants::new(
            pick_or(self.c1, file, "c1", defaults.ssim.c1)?,
            pick_or(self.c2, file, "c2", defaults.ssim.c2)?,
        )?;
        let lisi = LisiConstants::new(
            pick_or(self.lisi_c1, file, "lisi-c1", defaults.lisi.c1())?,
            pick_or(self.lisi_c2, file, "lisi-c2", defaults.lisi.c2())?,
        )?;
        let window = GaussianWindow::new(
            pick_or(self.window, file, "window", defaults.window.size)?,
            pick_or(self.window_sigma, file, "window-sigma", defaults.window.sigma)?,
        )?;
        let ms_levels = pick_or(self.ms_levels, file, "ms-levels", defaults.ms_levels)?;
        if !(1..=5).contains(&ms_levels) {
            return Err(CliError::Config(format!("ms-levels must be 1 to 5, got {ms_levels}")));
        }
        let weighting = match pick::<String>(self.weighting_params.clone(), file, "weighting-params")? {
            Some(s) => parse_weighting(&s, defaults.weighting)?,
            None => defaults.weighting,
        };
        for kind in iqa_core::metrics::WeightingKind::ALL {
            weighting.spec(kind)?;
        }
        let config = MetricConfig {
            ssim,
            lisi,
            window,
            ms_levels,
            weighting,
            fit_to_image: !pick_switch(self.exact_size, file, "exact-size")?,
        };
        Ok((metrics, config))
    }
}

/// The reproducibility record written with every run.
pub fn echo(command: &str, file: &ConfigFile, metrics: &[MetricId], config: &MetricConfig, extra: Value) -> Value {
    let mut v = json!({
        "tool": "iqa",
        "version": env!("CARGO_PKG_VERSION"),
        "format_version": FORMAT_VERSION,
        "command": command,
        "config_file": file.path().map(|p| p.display().to_string()),
        "metrics": metrics.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "metric_config": config.to_json(),
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
        base.extend(more);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_parsing() {
        let f = ConfigFile::parse("# comment\n\nseed = 7\n--c1=0.001\n", None).unwrap();
        assert_eq!(f.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(f.get::<f64>("c1").unwrap(), Some(0.001));
        assert_eq!(f.get::<f64>("c2").unwrap(), None);
        assert!(ConfigFile::parse("nonsense", None).is_err());
        assert!(ConfigFile::parse("colour=red", None).is_err());
        assert!(ConfigFile::parse("seed=1\nseed=2", None).is_err());
        assert!(ConfigFile::parse("seed=x", None).unwrap().get::<u64>("seed").is_err());
    }

    #[test]
    fn flags_override_file() {
        let f = ConfigFile::parse("seed=7", None).unwrap();
        assert_eq!(pick_or(Some(9u64), &f, "seed", 0).unwrap(), 9);
        assert_eq!(pick_or(None, &f, "seed", 0u64).unwrap(), 7);
        assert_eq!(pick_or(None, &ConfigFile::default(), "seed", 3u64).unwrap(), 3);
    }

    #[test]
    fn weighting_overrides() {
        let p = parse_weighting("tanh-k=3, sigmoid_center=0.4", WeightingParams::default()).unwrap();
        assert_eq!(p.tanh_k, 3.0);
        assert_eq!(p.sigmoid_center, 0.4);
        assert_eq!(p.gaussian_sigma, 0.5);
        assert!(parse_weighting("tanh-q=3", WeightingParams::default()).is_err());
        assert!(parse_weighting("tanh-k", WeightingParams::default()).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<f64>("0.1, 0.2", "x").unwrap(), vec![0.1, 0.2]);
        assert!(parse_list::<f64>(" , ", "x").is_err());
        assert!(parse_list::<f64>("a", "x").is_err());
    }
}
