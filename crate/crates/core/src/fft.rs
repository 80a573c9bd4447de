//! Shared 2D FFT helpers on row-major complex buffers.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Signed normalized frequency (cycles per pixel) for DFT bin `k` of `n`.
/// Even `n` puts the Nyquist bin at -0.5.
#[inline]
pub fn bin_freq(k: usize, n: usize) -> f64 {
    if k < (n + 1) / 2 {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    }
}

/// In-place forward 2D FFT of a row-major buffer. Not normalized.
pub fn fft2d_forward(rows: usize, cols: usize, data: &mut [Complex<f64>]) {
    fft2d(rows, cols, data, rustfft::FftDirection::Forward);
}

/// In-place inverse 2D FFT, normalized by `1 / (rows * cols)` so that a
/// forward/inverse pair is the identity.
pub fn fft2d_inverse(rows: usize, cols: usize, data: &mut [Complex<f64>]) {
    fft2d(rows, cols, data, rustfft::FftDirection::Inverse);
    let scale = 1.0 / (rows * cols) as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

fn fft2d(rows: usize, cols: usize, data: &mut [Complex<f64>], dir: rustfft::FftDirection) {
    assert_eq!(data.len(), rows * cols);
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(cols, dir);
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    // Transpose, transform the former columns, transpose back.
    let mut t = vec![Complex::default(); rows * cols];
    transpose(rows, cols, data, &mut t);
    let col_fft = planner.plan_fft(rows, dir);
    for col in t.chunks_exact_mut(rows) {
        col_fft.process(col);
    }
    transpose(cols, rows, &t, data);
}

fn transpose(rows: usize, cols: usize, src: &[Complex<f64>], dst: &mut [Complex<f64>]) {
    for x in 0..rows {
        for y in 0..cols {
            dst[y * rows + x] = src[x * cols + y];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_round_trip() {
        let rows = 8;
        let cols = 6;
        let orig: Vec<Complex<f64>> = (0..rows * cols)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), 0.0))
            .collect();
        let mut buf = orig.clone();
        fft2d_forward(rows, cols, &mut buf);
        fft2d_inverse(rows, cols, &mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn bin_freq_conventions() {
        assert_eq!(bin_freq(0, 8), 0.0);
        assert_eq!(bin_freq(1, 8), 0.125);
        assert_eq!(bin_freq(4, 8), -0.5);
        assert_eq!(bin_freq(7, 8), -0.125);
        assert_eq!(bin_freq(3, 7), 3.0 / 7.0);
        assert_eq!(bin_freq(4, 7), -3.0 / 7.0);
    }
}
