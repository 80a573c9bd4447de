//! Monogenic signal and local phase image (LPI).
//!
//! The LPI responds to even-symmetric, line-like structure such as the
//! pleural line. It is computed from the three monogenic components
//! obtained by band-passing the image with an isotropic log-Gabor filter
//! and applying the two Riesz transfer functions in the frequency domain:
//!
//! ```text
//! LPI = 1 - (2/pi) * atan( sqrt(m2^2 + m3^2) / (|m1| + eps) )
//! ```
//!
//! The arctangent is normalized by `pi/2` so the LPI shares the `[0, 1]`
//! scale of the images it is fused with.

use crate::fft::{bin_freq, fft2d_forward, fft2d_inverse};
use crate::image::{Image, ImageError};
use rustfft::num_complex::Complex;
use thiserror::Error;

/// Regularizer for the `m1 -> 0` singularity of the phase ratio.
pub const LPI_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LogGaborError {
    #[error("center wavelength {0} must exceed 2 pixels (Nyquist)")]
    WavelengthTooShort(f64),
    #[error("sigma ratio {0} must lie in (0, 1)")]
    SigmaRatioOutOfRange(f64),
}

/// Radial log-Gabor band-pass parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGaborParams {
    wavelength0: f64,
    sigma_ratio: f64,
}

impl LogGaborParams {
    pub fn new(wavelength0: f64, sigma_ratio: f64) -> Result<Self, LogGaborError> {
        if !(wavelength0 > 2.0) {
            return Err(LogGaborError::WavelengthTooShort(wavelength0));
        }
        if !(sigma_ratio > 0.0 && sigma_ratio < 1.0) {
            return Err(LogGaborError::SigmaRatioOutOfRange(sigma_ratio));
        }
        Ok(Self {
            wavelength0,
            sigma_ratio,
        })
    }

    pub fn wavelength0(&self) -> f64 {
        self.wavelength0
    }

    pub fn sigma_ratio(&self) -> f64 {
        self.sigma_ratio
    }

    /// Center frequency in cycles per pixel.
    pub fn omega0(&self) -> f64 {
        1.0 / self.wavelength0
    }
}

impl Default for LogGaborParams {
    fn default() -> Self {
        // 32 px / 0.55 is a conventional single-scale bandwidth choice.
        Self {
            wavelength0: 32.0,
            sigma_ratio: 0.55,
        }
    }
}

/// The three monogenic images: `m1` even real part, `m2` odd real part
/// (depth direction), `m3` odd imaginary part (lateral direction).
#[derive(Debug, Clone)]
pub struct MonogenicComponents {
    pub m1: Image,
    pub m2: Image,
    pub m3: Image,
}

/// Contrast boost applied before the LPI: element-wise fourth power
/// ("squared twice"), renormalized to restore the `[0, 1]` contract.
pub fn enhance(img: &Image) -> Image {
    img.map(|v| v.powi(4)).normalize()
}

/// Radial log-Gabor transfer function value at normalized frequency `omega`.
/// Zero at DC by definition.
pub fn log_gabor_value(omega: f64, params: &LogGaborParams) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let ln_ratio = (omega / params.omega0()).ln();
    let ln_sigma = params.sigma_ratio.ln();
    (-(ln_ratio * ln_ratio) / (2.0 * ln_sigma * ln_sigma)).exp()
}

/// Row-major frequency-domain log-Gabor filter matching the unshifted
/// layout of [`fft2d_forward`].
pub fn log_gabor_spectrum(rows: usize, cols: usize, params: &LogGaborParams) -> Vec<f64> {
    let mut filt = vec![0.0; rows * cols];
    for ku in 0..rows {
        let fu = bin_freq(ku, rows);
        for kv in 0..cols {
            let fv = bin_freq(kv, cols);
            let omega = (fu * fu + fv * fv).sqrt();
            filt[ku * cols + kv] = log_gabor_value(omega, params);
        }
    }
    filt
}

/// Computes the three monogenic components by frequency-domain filtering:
/// band-pass for `m1`, band-pass times the Riesz transfer functions
/// `-i*u/|w|` and `-i*v/|w|` for `m2` and `m3` (`u` = depth frequency,
/// `v` = lateral frequency, zero at DC).
pub fn monogenic(img: &Image, params: &LogGaborParams) -> MonogenicComponents {
    let rows = img.rows();
    let cols = img.cols();
    let mut spectrum: Vec<Complex<f64>> =
        img.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2d_forward(rows, cols, &mut spectrum);

    let gabor = log_gabor_spectrum(rows, cols, params);

    let mut even = vec![Complex::default(); rows * cols];
    let mut odd_u = vec![Complex::default(); rows * cols];
    let mut odd_v = vec![Complex::default(); rows * cols];
    for ku in 0..rows {
        let fu = bin_freq(ku, rows);
        for kv in 0..cols {
            let fv = bin_freq(kv, cols);
            let idx = ku * cols + kv;
            let banded = spectrum[idx] * gabor[idx];
            even[idx] = banded;
            let norm = (fu * fu + fv * fv).sqrt();
            if norm > 0.0 {
                // -i * f / |f|
                let riesz_u = Complex::new(0.0, -fu / norm);
                let riesz_v = Complex::new(0.0, -fv / norm);
                odd_u[idx] = banded * riesz_u;
                odd_v[idx] = banded * riesz_v;
            }
        }
    }

    let real_image = |mut buf: Vec<Complex<f64>>| -> Image {
        fft2d_inverse(rows, cols, &mut buf);
        let data = buf.into_iter().map(|c| c.re).collect();
        Image::new(rows, cols, data).expect("inverse FFT of finite data is finite")
    };

    MonogenicComponents {
        m1: real_image(even),
        m2: real_image(odd_u),
        m3: real_image(odd_v),
    }
}

/// Local phase image from the monogenic components; every pixel in `[0, 1]`.
pub fn local_phase_image(mono: &MonogenicComponents) -> Result<Image, ImageError> {
    mono.m1.same_dims(&mono.m2)?;
    mono.m1.same_dims(&mono.m3)?;
    let data = mono
        .m1
        .data()
        .iter()
        .zip(mono.m2.data())
        .zip(mono.m3.data())
        .map(|((&m1, &m2), &m3)| {
            let odd = (m2 * m2 + m3 * m3).sqrt();
            1.0 - (2.0 / std::f64::consts::PI) * (odd / (m1.abs() + LPI_EPSILON)).atan()
        })
        .collect();
    Image::new(mono.m1.rows(), mono.m1.cols(), data)
}

/// Convenience: enhancement, monogenic filtering and LPI in one call.
pub fn lpi(img: &Image, params: &LogGaborParams) -> Image {
    let mono = monogenic(&enhance(img), params);
    local_phase_image(&mono).expect("components share dims by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn enhance_fixed_points() {
        let img = Image::new(2, 2, vec![1.0, 0.5, 0.0, 0.25]).unwrap();
        let e = enhance(&img);
        assert_eq!(e.at(0, 0), 1.0);
        assert!(close(e.at(0, 1), 0.0625, 1e-12));
    }

    #[test]
    fn enhance_renormalizes() {
        let img = Image::new(2, 2, vec![0.5, 0.9, 0.0, 0.0]).unwrap();
        let e = enhance(&img);
        assert!(close(e.at(0, 0), 0.0625 / 0.6561, 1e-12));
        assert_eq!(e.at(0, 1), 1.0);
    }

    #[test]
    fn log_gabor_peak_and_dc() {
        let p = LogGaborParams::default();
        assert!(close(log_gabor_value(p.omega0(), &p), 1.0, 1e-15));
        assert_eq!(log_gabor_value(0.0, &p), 0.0);
    }

    #[test]
    fn log_gabor_one_octave_value() {
        let p = LogGaborParams::new(32.0, 0.55).unwrap();
        let expected = (-(2f64.ln().powi(2)) / (2.0 * 0.55f64.ln().powi(2))).exp();
        assert!(close(expected, 0.5106, 5e-4));
        assert!(close(
            log_gabor_value(2.0 * p.omega0(), &p),
            expected,
            1e-12
        ));
    }

    #[test]
    fn monogenic_of_zero_image_is_zero() {
        let img = Image::zeros(16, 16).unwrap();
        let m = monogenic(&img, &LogGaborParams::default());
        for comp in [&m.m1, &m.m2, &m.m3] {
            assert!(comp.data().iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn horizontal_grating_has_no_lateral_odd_component() {
        // Stripes varying with depth at the filter's center wavelength.
        let p = LogGaborParams::new(16.0, 0.55).unwrap();
        let img = Image::from_fn(64, 64, |x, _| {
            0.5 + 0.5 * (2.0 * std::f64::consts::PI * x as f64 / 16.0).cos()
        })
        .unwrap();
        let m = monogenic(&img, &p);
        let max_m1 = m.m1.data().iter().fold(0f64, |a, &v| a.max(v.abs()));
        let max_m3 = m.m3.data().iter().fold(0f64, |a, &v| a.max(v.abs()));
        let max_m2 = m.m2.data().iter().fold(0f64, |a, &v| a.max(v.abs()));
        assert!(max_m3 < 1e-6 * max_m1);
        assert!(max_m2 > 0.1 * max_m1);
    }

    #[test]
    fn lpi_limit_cases() {
        let m1 = Image::new(2, 2, vec![0.5; 4]).unwrap();
        let zeros = Image::zeros(2, 2).unwrap();
        // Pure even structure.
        let lpi = local_phase_image(&MonogenicComponents {
            m1: m1.clone(),
            m2: zeros.clone(),
            m3: zeros.clone(),
        })
        .unwrap();
        assert!(lpi.data().iter().all(|&v| close(v, 1.0, 1e-12)));
        // Odd magnitude equal to |m1|.
        let lpi = local_phase_image(&MonogenicComponents {
            m1: m1.clone(),
            m2: m1.clone(),
            m3: zeros.clone(),
        })
        .unwrap();
        assert!(lpi.data().iter().all(|&v| close(v, 0.5, 1e-9)));
        // Odd-dominated.
        let lpi = local_phase_image(&MonogenicComponents {
            m1: Image::new(2, 2, vec![LPI_EPSILON; 4]).unwrap(),
            m2: Image::new(2, 2, vec![10.0; 4]).unwrap(),
            m3: zeros,
        })
        .unwrap();
        assert!(lpi.data().iter().all(|&v| v < 1e-6));
    }
}
