//! Acoustic-physics feature pipeline for lung ultrasound (LUS).
//!
//! The pipeline stages are:
//!
//! 1. **rectify** – sector/convex acquisitions are resampled onto a
//!    rectangular grid so downstream features are probe-agnostic.
//! 2. **localphase** – monogenic signal via log-Gabor + Riesz filtering,
//!    reduced to a local phase image (LPI) that responds to line-like
//!    structure such as the pleura.
//! 3. **energymaps** – integrated backscatter (IBS), acoustic shadow (SH)
//!    and their product (SHIBS), which highlights the region below the
//!    pleura.
//! 4. **fusion** – sum of the original image, LPI and SHIBS.
//! 5. **scorer** – heuristic rule-based 5-class severity classification
//!    from the feature maps.
//!
//! The [`phantom`] module generates synthetic LUS frames with known ground
//! truth for the five severity classes, and [`eval`] provides the
//! quantitative evaluation formulas (loss, annotation similarity,
//! binomial confidence intervals, per-class metrics).

pub mod energymaps;
pub mod eval;
pub mod fft;
pub mod formats;
pub mod fusion;
pub mod image;
pub mod localphase;
pub mod phantom;
pub mod pipeline;
pub mod rectify;
pub mod scorer;

pub use image::{Image, ImageError, SeverityClass};
