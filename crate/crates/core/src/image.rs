//! Image container, normalization and the severity class taxonomy.
//!
//! Every operation in this crate works on [`Image`]: a dense row-major grid
//! of finite real intensities where the row index is depth (increasing
//! downward) and the column index is lateral position.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("non-finite value {value} at pixel ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("image dimensions must be at least 2x2, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },
    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength {
        len: usize,
        rows: usize,
        cols: usize,
    },
    #[error("dimension mismatch: {rows_a}x{cols_a} vs {rows_b}x{cols_b}")]
    DimMismatch {
        rows_a: usize,
        cols_a: usize,
        rows_b: usize,
        cols_b: usize,
    },
}

/// Dense 2D grid of finite intensities, row-major.
///
/// Row index = depth (increases downward), column index = lateral position.
/// Immutable after construction; all operations produce new images, so
/// values stay finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major data, rejecting bad dimensions and
    /// non-finite values (with the coordinate of the offending pixel).
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if rows < 2 || cols < 2 {
            return Err(ImageError::TooSmall { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(ImageError::DataLength {
                len: data.len(),
                rows,
                cols,
            });
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(ImageError::NonFinite {
                    row: i / cols,
                    col: i % cols,
                    value: v,
                });
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self, ImageError> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(rows * cols);
        for x in 0..rows {
            for y in 0..cols {
                data.push(f(x, y));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.rows && col < self.cols);
        self.data[row * self.cols + col]
    }

    pub fn same_dims(&self, other: &Image) -> Result<(), ImageError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(ImageError::DimMismatch {
                rows_a: self.rows,
                cols_a: self.cols,
                rows_b: other.rows,
                cols_b: other.cols,
            });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` pixel-wise. Panics in debug builds if `f` produces a
    /// non-finite value; callers keep `f` total on finite inputs.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        let data = self.data.iter().map(|&v| f(v)).collect::<Vec<_>>();
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Image {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Mean intensity of one row.
    pub fn row_mean(&self, row: usize) -> f64 {
        let start = row * self.cols;
        self.data[start..start + self.cols].iter().sum::<f64>() / self.cols as f64
    }

    /// Mean intensity of one column over the row range `rows` (half-open).
    pub fn col_mean(&self, col: usize, rows: std::ops::Range<usize>) -> f64 {
        let n = rows.len().max(1) as f64;
        rows.map(|x| self.at(x, col)).sum::<f64>() / n
    }

    /// Affine rescale to `[0, 1]`: `(v - min) / (max - min)`.
    ///
    /// A constant image maps to all zeros: a flat frame carries no signal
    /// and zeros propagate benignly through the energy maps.
    pub fn normalize(&self) -> Image {
        let lo = self.min();
        let hi = self.max();
        let range = hi - lo;
        if range <= 0.0 {
            return Image {
                rows: self.rows,
                cols: self.cols,
                data: vec![0.0; self.data.len()],
            };
        }
        self.map(|v| (v - lo) / range)
    }
}

/// Five-level LUS severity score. `1` is a healthy aerated lung with
/// A-lines, `5` is consolidation/effusion (C-lines).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SeverityClass(u8);

impl SeverityClass {
    pub fn new(value: u8) -> Result<Self, String> {
        if (1..=5).contains(&value) {
            Ok(Self(value))
        } else {
            Err(format!("severity class {value} outside 1..=5"))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> [SeverityClass; 5] {
        [Self(1), Self(2), Self(3), Self(4), Self(5)]
    }
}

impl TryFrom<u8> for SeverityClass {
    type Error = String;
    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<SeverityClass> for u8 {
    fn from(c: SeverityClass) -> u8 {
        c.0
    }
}

impl std::fmt::Display for SeverityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_with_coordinate() {
        let mut data = vec![0.0; 9];
        data[5] = f64::NAN;
        let err = Image::new(3, 3, data).unwrap_err();
        match err {
            ImageError::NonFinite { row, col, .. } => {
                assert_eq!((row, col), (1, 2));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn normalize_constant_image_is_zeros() {
        let img = Image::new(2, 2, vec![0.7; 4]).unwrap();
        assert!(img.normalize().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_identity_when_already_unit_range() {
        let img = Image::new(2, 2, vec![0.0, 0.5, 1.0, 1.0]).unwrap();
        assert_eq!(img.normalize(), img);
    }

    #[test]
    fn normalize_affine_map() {
        let img = Image::new(2, 2, vec![2.0, 4.0, 6.0, 6.0]).unwrap();
        let n = img.normalize();
        assert_eq!(n.data(), &[0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn severity_class_bounds() {
        assert!(SeverityClass::new(0).is_err());
        assert!(SeverityClass::new(6).is_err());
        assert_eq!(SeverityClass::new(3).unwrap().value(), 3);
    }
}
