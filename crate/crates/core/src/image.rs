//! Single-channel real-valued images, file I/O, joint normalization,
//! intensity-band masks and crops.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IqaError, Result};

/// A single-channel image of finite real intensities, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    /// Builds an image, checking the length, finiteness and minimum-size invariants.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(IqaError::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(IqaError::InvalidImage(format!(
                "{} pixels supplied for a {width}x{height} image",
                pixels.len()
            )));
        }
        if width * height < 2 {
            return Err(IqaError::InvalidImage("an image needs at least 2 pixels".to_string()));
        }
        if let Some(index) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(IqaError::InvalidImage(format!(
                "non-finite value {} at pixel {index}",
                pixels[index]
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Builds an image by evaluating `f(col, row)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(col, row));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Total pixel count.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    /// Always false; images hold at least two pixels.
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn min(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Errors unless `other` has the same dimensions.
    pub fn check_dims(&self, other: &Image) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(IqaError::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    /// Errors unless every pixel lies in `[0, 1]`.
    pub fn check_unit_range(&self) -> Result<()> {
        match self.pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            Some(index) => Err(IqaError::NotNormalized {
                index,
                value: self.pixels[index],
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn with_pixels(&self, pixels: Vec<f64>) -> Image {
        debug_assert_eq!(pixels.len(), self.pixels.len());
        Image {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Serializes as the raw float stream: `u32` width, `u32` height, then
    /// little-endian `f64` pixels.
    pub fn to_raw_f64(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * self.pixels.len());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.pixels {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Serializes as a whitespace-separated text matrix, one row per line.
    pub fn to_text_matrix(&self) -> String {
        let mut out = String::new();
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// On-disk encodings accepted by [`load_image`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageFormat {
    Png8,
    Png16,
    TextMatrix,
    RawF64,
}

impl ImageFormat {
    /// Guesses the format from the extension and, for PNG, the stored bit depth.
    pub fn detect(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "png" => {
                let img = open_png(path)?;
                match img.color() {
                    ::image::ColorType::L16 => Ok(Self::Png16),
                    _ => Ok(Self::Png8),
                }
            }
            "txt" | "tsv" | "dat" | "mat" | "asc" => Ok(Self::TextMatrix),
            "f64" | "raw" | "bin" => Ok(Self::RawF64),
            _ => Err(IqaError::Unknown {
                kind: "image format for file",
                value: path.display().to_string(),
            }),
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Png8 => "png8",
            Self::Png16 => "png16",
            Self::TextMatrix => "text-matrix",
            Self::RawF64 => "raw-f64",
        })
    }
}

impl FromStr for ImageFormat {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "png8" => Ok(Self::Png8),
            "png16" => Ok(Self::Png16),
            "text-matrix" | "text" => Ok(Self::TextMatrix),
            "raw-f64" | "raw" => Ok(Self::RawF64),
            _ => Err(IqaError::Unknown {
                kind: "image format",
                value: s.to_string(),
            }),
        }
    }
}

/// Loads a single-channel image. Integer PNG codes are divided by the
/// format's maximum code (255 or 65535); float formats are taken verbatim.
pub fn load_image(path: &Path, format: ImageFormat) -> Result<Image> {
    let decode_err = |reason: String| IqaError::Decode {
        path: path.to_path_buf(),
        reason,
    };
    match format {
        ImageFormat::Png8 | ImageFormat::Png16 => {
            let img = open_png(path)?;
            let (w, h) = (img.width() as usize, img.height() as usize);
            let pixels: Vec<f64> = match (format, img) {
                (ImageFormat::Png8, ::image::DynamicImage::ImageLuma8(buf)) => {
                    buf.into_raw().into_iter().map(|c| c as f64 / 255.0).collect()
                }
                (ImageFormat::Png16, ::image::DynamicImage::ImageLuma16(buf)) => {
                    buf.into_raw().into_iter().map(|c| c as f64 / 65535.0).collect()
                }
                (_, other) => {
                    return Err(decode_err(format!(
                        "expected single-channel {format}, found {:?}",
                        other.color()
                    )))
                }
            };
            Image::new(w, h, pixels)
        }
        ImageFormat::TextMatrix => {
            let text = fs::read_to_string(path).map_err(|source| IqaError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            parse_text_matrix(&text).map_err(|e| match e {
                IqaError::InvalidImage(reason) => decode_err(reason),
                other => other,
            })
        }
        ImageFormat::RawF64 => {
            let bytes = fs::read(path).map_err(|source| IqaError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            parse_raw_f64(&bytes).map_err(|e| match e {
                IqaError::InvalidImage(reason) => decode_err(reason),
                other => other,
            })
        }
    }
}

fn open_png(path: &Path) -> Result<::image::DynamicImage> {
    ::image::open(path).map_err(|e| match e {
        ::image::ImageError::IoError(source) => IqaError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => IqaError::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })
}

/// Parses a whitespace-separated matrix; blank lines are ignored.
pub fn parse_text_matrix(text: &str) -> Result<Image> {
    let mut width = None;
    let mut pixels = Vec::new();
    let mut height = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| IqaError::InvalidImage(format!("line {}: cannot parse {tok:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(IqaError::InvalidImage(format!(
                    "line {} has {} values, expected {w}",
                    lineno + 1,
                    row.len()
                )))
            }
            Some(_) => {}
        }
        pixels.extend(row);
        height += 1;
    }
    Image::new(width.unwrap_or(0), height, pixels)
}

/// Parses the raw float stream written by [`Image::to_raw_f64`].
pub fn parse_raw_f64(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 8 {
        return Err(IqaError::InvalidImage("missing dimension header".into()));
    }
    let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() != width * height * 8 {
        return Err(IqaError::InvalidImage(format!(
            "header declares {width}x{height} but payload holds {} bytes",
            body.len()
        )));
    }
    let pixels = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(width, height, pixels)
}

/// Maps both images through `(v - min) / (max - min)` with the pair's joint extrema.
pub fn normalize_joint(x: &Image, y: &Image) -> Result<(Image, Image)> {
    x.check_dims(y)?;
    let lo = x.min().min(y.min());
    let hi = x.max().max(y.max());
    let range = hi - lo;
    if range <= 0.0 {
        return Err(IqaError::DegenerateInput);
    }
    let map = |img: &Image| img.with_pixels(img.pixels.iter().map(|v| (v - lo) / range).collect());
    Ok((map(x), map(y)))
}

/// Which end of the intensity distribution a mask selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Highest,
    Lowest,
}

impl Band {
    pub fn as_str(&self) -> &'static str {
        match self {
            Band::Highest => "highest",
            Band::Lowest => "lowest",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = IqaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "highest" | "high" | "top" => Ok(Band::Highest),
            "lowest" | "low" | "bottom" => Ok(Band::Lowest),
            _ => Err(IqaError::Unknown {
                kind: "band",
                value: s.to_string(),
            }),
        }
    }
}

/// The pixels making up the highest or lowest `fraction` of an image's intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMask {
    width: usize,
    height: usize,
    selected: Vec<bool>,
    band: Band,
    fraction: f64,
}

impl IntensityMask {
    pub fn band(&self) -> Band {
        self.band
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn selected(&self) -> &[bool] {
        &self.selected
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    /// Selected pixel indices in ascending row-major order.
    pub fn indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }
}

/// Number of pixels a mask of `fraction` selects out of `n` (round half up).
pub fn mask_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

/// Selects the `round(fraction * N)` brightest (or darkest) pixels.
/// Equal intensities are ordered by row-major index, lowest index first.
pub fn intensity_mask(x: &Image, band: Band, fraction: f64) -> Result<IntensityMask> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(IqaError::InvalidParameter(format!(
            "mask fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = x.len();
    let count = mask_count(fraction, n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let px = x.pixels();
    order.sort_by(|&a, &b| {
        let by_value = match band {
            Band::Highest => px[b].partial_cmp(&px[a]),
            Band::Lowest => px[a].partial_cmp(&px[b]),
        }
        .unwrap_or(Ordering::Equal);
        by_value.then(a.cmp(&b))
    });
    let mut selected = vec![false; n];
    for &i in &order[..count] {
        selected[i] = true;
    }
    Ok(IntensityMask {
        width: x.width(),
        height: x.height(),
        selected,
        band,
        fraction,
    })
}

/// A crop rectangle in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub left: usize,
    pub top: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(left: usize, top: usize, width: usize, height: usize) -> Self {
        Self {
            left,
            top,
            width,
            height,
        }
    }
}

/// Extracts the sub-image covered by `rect`.
pub fn crop(x: &Image, rect: Rect) -> Result<Image> {
    let fits = rect.width > 0
        && rect.height > 0
        && rect.left.checked_add(rect.width).is_some_and(|r| r <= x.width())
        && rect.top.checked_add(rect.height).is_some_and(|b| b <= x.height());
    if !fits {
        return Err(IqaError::InvalidParameter(format!(
            "crop {rect:?} falls outside the {}x{} image",
            x.width(),
            x.height()
        )));
    }
    let mut pixels = Vec::with_capacity(rect.width * rect.height);
    for row in rect.top..rect.top + rect.height {
        let start = row * x.width() + rect.left;
        pixels.extend_from_slice(&x.pixels()[start..start + rect.width]);
    }
    Image::new(rect.width, rect.height, pixels)
}
