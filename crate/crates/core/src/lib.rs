//! Intensity-sensitive full-reference image similarity.
//!
//! The crate provides the SSIM family (global, windowed, multi-scale and
//! gradient-based), the intensity-weighted SSIM (`itw:*`) and the
//! low-information similarity index (LISI), together with the `sensi` and
//! `direc` auxiliary indexes, synthetic noise experiments and image-sequence
//! change reports.
//!
//! ```
//! use iqa_core::image::{normalize_joint, Image};
//! use iqa_core::metrics::{lisi, LisiConstants};
//!
//! let x = Image::new(2, 2, vec![0.0, 2.0, 4.0, 8.0]).unwrap();
//! let y = Image::new(2, 2, vec![0.0, 2.0, 4.0, 6.0]).unwrap();
//! let (x, y) = normalize_joint(&x, &y).unwrap();
//! let score = lisi(&x, &y, LisiConstants::default()).unwrap().score;
//! assert!(score > 0.0 && score < 1.0);
//! ```

pub mod error;
pub mod image;
pub mod indexes;
pub mod metrics;
pub mod numeric;
mod plot;
pub mod sequence;
pub mod synth;

pub use error::{IqaError, Result};
pub use image::{Band, Image};
pub use metrics::{MetricConfig, MetricId, MetricResult};
