//! Integrated backscatter (IBS), acoustic shadow (SH) and SHIBS maps.
//!
//! IBS is the cumulative down-column sum of squared intensity and grows
//! below strong reflectors. SH is a one-sided Gaussian-weighted average of
//! the intensities below each pixel. Their element-wise product (SHIBS)
//! highlights the region below the pleura.

use crate::image::{Image, ImageError};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShadowParamsError {
    #[error("sigma divisor {0} must be positive")]
    NonPositiveSigmaDivisor(f64),
}

/// Shadow map parameters: the Gaussian weight has `sigma = rows / sigma_divisor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowParams {
    sigma_divisor: f64,
    /// Audit switch: use the literal per-row integrand `I(x, y)` instead of
    /// the accumulating `I(k, y)`, which reduces SH to the identity map.
    pub literal_integrand: bool,
}

impl ShadowParams {
    pub fn new(sigma_divisor: f64) -> Result<Self, ShadowParamsError> {
        if !(sigma_divisor > 0.0) {
            return Err(ShadowParamsError::NonPositiveSigmaDivisor(sigma_divisor));
        }
        Ok(Self {
            sigma_divisor,
            literal_integrand: false,
        })
    }

    pub fn sigma_divisor(&self) -> f64 {
        self.sigma_divisor
    }

    pub fn sigma(&self, rows: usize) -> f64 {
        rows as f64 / self.sigma_divisor
    }
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self {
            sigma_divisor: 4.0,
            literal_integrand: false,
        }
    }
}

/// Unnormalized IBS: `raw(x, y) = sum_{k=0..=x} I(k, y)^2`.
/// Non-decreasing down every column.
pub fn ibs_raw(img: &Image) -> Image {
    let rows = img.rows();
    let cols = img.cols();
    let mut data = vec![0.0; rows * cols];
    for y in 0..cols {
        let mut acc = 0.0;
        for x in 0..rows {
            let v = img.at(x, y);
            acc += v * v;
            data[x * cols + y] = acc;
        }
    }
    Image::new(rows, cols, data).expect("finite input yields finite sums")
}

/// IBS map scaled by its global maximum (all zeros for a zero image).
pub fn ibs_map(img: &Image) -> Image {
    let raw = ibs_raw(img);
    let max = raw.max();
    if max <= 0.0 {
        return Image::zeros(img.rows(), img.cols()).unwrap();
    }
    raw.map(|v| v / max)
}

/// Shadow map: `SH(x, y) = sum_{k=x..R-1} G(k-x) I(k, y) / sum_k G(k-x)`
/// with `G(d) = exp(-d^2 / (2 sigma^2))`.
///
/// The one-sided weighted sums are evaluated per column as a linear
/// correlation via zero-padded FFTs; the weight normalizer depends only on
/// the row, so each output is a true weighted average bounded by the input
/// range.
pub fn shadow_map(img: &Image, params: &ShadowParams) -> Image {
    if params.literal_integrand {
        // Literal reading: the integrand is constant in k, so the weighted
        // average collapses to the pixel itself.
        return img.clone();
    }
    let rows = img.rows();
    let cols = img.cols();
    let sigma = params.sigma(rows);

    let weights: Vec<f64> = (0..rows)
        .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    // denom[x] = sum of weights for the rows at and below x.
    let denom: Vec<f64> = (0..rows)
        .map(|x| weights[..rows - x].iter().sum::<f64>())
        .collect();

    // corr(x) = sum_d w(d) I(x+d); zero padding to >= 2R-1 avoids wraparound.
    let len = (2 * rows).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut kernel: Vec<Complex<f64>> = weights
        .iter()
        .map(|&w| Complex::new(w, 0.0))
        .chain(std::iter::repeat(Complex::default()))
        .take(len)
        .collect();
    fwd.process(&mut kernel);

    let mut data = vec![0.0; rows * cols];
    let mut buf = vec![Complex::default(); len];
    for y in 0..cols {
        buf.iter_mut().for_each(|c| *c = Complex::default());
        for x in 0..rows {
            buf[x] = Complex::new(img.at(x, y), 0.0);
        }
        fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&kernel) {
            *b *= k.conj();
        }
        inv.process(&mut buf);
        let scale = 1.0 / len as f64;
        for x in 0..rows {
            data[x * cols + y] = buf[x].re * scale / denom[x];
        }
    }
    Image::new(rows, cols, data).expect("finite input yields finite averages")
}

/// SHIBS: element-wise product of the shadow and IBS maps, renormalized
/// to `[0, 1]`.
pub fn shibs(sh: &Image, ibs: &Image) -> Result<Image, ImageError> {
    sh.same_dims(ibs)?;
    let data = sh
        .data()
        .iter()
        .zip(ibs.data())
        .map(|(&a, &b)| a * b)
        .collect();
    Ok(Image::new(sh.rows(), sh.cols(), data)?.normalize())
}

/// Direct `O(R^2 C)` evaluation of the IBS definition; retained as the
/// independent reference for the cumulative implementation.
pub fn ibs_raw_reference(img: &Image) -> Image {
    Image::from_fn(img.rows(), img.cols(), |x, y| {
        (0..=x).map(|k| img.at(k, y).powi(2)).sum()
    })
    .unwrap()
}

/// Direct per-pixel evaluation of the shadow definition; retained as the
/// independent reference for the FFT implementation.
pub fn shadow_map_reference(img: &Image, params: &ShadowParams) -> Image {
    let rows = img.rows();
    let sigma = params.sigma(rows);
    let g = |d: usize| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp();
    Image::from_fn(rows, img.cols(), |x, y| {
        let mut num = 0.0;
        let mut den = 0.0;
        for k in x..rows {
            let w = g(k - x);
            let v = if params.literal_integrand {
                img.at(x, y)
            } else {
                img.at(k, y)
            };
            num += w * v;
            den += w;
        }
        num / den
    })
    .unwrap()
}
