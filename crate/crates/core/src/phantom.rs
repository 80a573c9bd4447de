//! Synthetic LUS phantoms with known ground truth.
//!
//! A phantom is a parametric rendering of the class phenomenology: a bright
//! pleural band with soft tissue above it, A-line reverberations at integer
//! multiples of the pleura depth (class 1), a thin bare pleura (class 2),
//! discrete or confluent vertical B-lines (classes 3 and 4), and an
//! irregular pleura with a subpleural consolidation patch (class 5).
//! Generation is deterministic for a given spec, including the seed.

use crate::image::{Image, SeverityClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
}

/// Subpleural consolidation patch: a depth band in row fractions of the
/// whole image, and the patch intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Consolidation {
    pub band: (f64, f64),
    pub intensity: f64,
}

/// Parametric description of one synthetic frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub rows: usize,
    pub cols: usize,
    pub class: SeverityClass,
    pub pleura_depth_frac: f64,
    pub pleura_thickness: usize,
    pub a_line_count: usize,
    pub a_line_decay: f64,
    /// `(center column, width in pixels)` per B-line.
    pub b_line_columns: Vec<(usize, usize)>,
    pub confluent_frac: f64,
    pub consolidation: Option<Consolidation>,
    pub speckle_sigma: f64,
    pub seed: u64,
}

/// What the generator actually drew, for scoring against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub pleura_row: usize,
    pub a_line_rows: Vec<usize>,
    pub b_line_columns: Vec<usize>,
    pub class: SeverityClass,
}

const TISSUE_ABOVE: f64 = 0.12;
const TISSUE_BELOW: f64 = 0.04;
const B_LINE_INTENSITY: f64 = 0.55;
const CLASS5_PLEURA_INTENSITY: f64 = 0.45;

impl PhantomSpec {
    /// Canonical spec for a class: geometry and artifact parameters are
    /// drawn deterministically from the seed within the documented ranges.
    pub fn sampled(
        class: SeverityClass,
        rows: usize,
        cols: usize,
        speckle_sigma: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(
            seed ^ (class.value() as u64).wrapping_mul(0x9E3779B97F4A7C15),
        );
        let pleura_depth_frac = rng.gen_range(0.16..0.26);
        let mut spec = PhantomSpec {
            rows,
            cols,
            class,
            pleura_depth_frac,
            pleura_thickness: 3,
            a_line_count: 0,
            a_line_decay: 0.6,
            b_line_columns: Vec::new(),
            confluent_frac: 0.0,
            consolidation: None,
            speckle_sigma,
            seed,
        };
        match class.value() {
            1 => {
                spec.a_line_count = 3;
            }
            2 => {
                spec.pleura_thickness = 2;
            }
            3 => {
                let n = rng.gen_range(1..=3usize);
                let margin = cols / 16 + 4;
                let mut centers: Vec<usize> = Vec::new();
                while centers.len() < n {
                    let c = rng.gen_range(margin..cols - margin);
                    if centers.iter().all(|&e| c.abs_diff(e) > cols / 8) {
                        centers.push(c);
                    }
                }
                centers.sort_unstable();
                spec.b_line_columns = centers
                    .into_iter()
                    .map(|c| (c, rng.gen_range(4..=7usize)))
                    .collect();
            }
            4 => {
                spec.confluent_frac = 0.7;
                let n = 5;
                let stride = cols / n;
                spec.b_line_columns = (0..n)
                    .map(|i| {
                        let jitter = rng.gen_range(0..stride / 4);
                        ((i * stride + stride / 2 + jitter).min(cols - 1), stride / 2)
                    })
                    .collect();
            }
            _ => {
                spec.consolidation = Some(Consolidation {
                    band: (pleura_depth_frac + 0.04, pleura_depth_frac + 0.30),
                    intensity: 0.30,
                });
            }
        }
        spec
    }

    fn validate(&self) -> Result<(), PhantomError> {
        let fail = |msg: String| Err(PhantomError::InvalidSpec(msg));
        if self.rows < 16 || self.cols < 16 {
            return fail(format!(
                "phantom needs >= 16x16, got {}x{}",
                self.rows, self.cols
            ));
        }
        if !(self.pleura_depth_frac > 0.1 && self.pleura_depth_frac < 0.5) {
            return fail(format!(
                "pleura_depth_frac {} outside (0.1, 0.5)",
                self.pleura_depth_frac
            ));
        }
        if self.pleura_thickness == 0 {
            return fail("pleura_thickness must be >= 1".into());
        }
        if !(self.a_line_decay > 0.0 && self.a_line_decay < 1.0) {
            return fail(format!("a_line_decay {} outside (0, 1)", self.a_line_decay));
        }
        if !(0.0..=1.0).contains(&self.confluent_frac) {
            return fail(format!(
                "confluent_frac {} outside [0, 1]",
                self.confluent_frac
            ));
        }
        if self.speckle_sigma < 0.0 {
            return fail("speckle_sigma must be >= 0".into());
        }
        for &(c, w) in &self.b_line_columns {
            if c >= self.cols {
                return fail(format!("B-line center {c} outside [0, {})", self.cols));
            }
            if w == 0 {
                return fail("B-line width must be >= 1".into());
            }
        }
        // Class-consistency rules.
        let has_b = !self.b_line_columns.is_empty();
        let has_cons = self.consolidation.is_some();
        match self.class.value() {
            1 => {
                if self.a_line_count == 0 || has_b || has_cons {
                    return fail("class 1 needs A-lines and no B-lines/consolidation".into());
                }
            }
            2 => {
                if self.a_line_count != 0 || has_b || has_cons {
                    return fail("class 2 has neither A- nor B-lines nor consolidation".into());
                }
            }
            3 | 4 => {
                if self.a_line_count != 0 || !has_b || has_cons {
                    return fail(format!(
                        "class {} needs B-lines and no A-lines/consolidation",
                        self.class
                    ));
                }
                if self.class.value() == 4 && self.confluent_frac <= 0.0 {
                    return fail("class 4 needs confluent_frac > 0".into());
                }
            }
            _ => {
                if !has_cons || self.a_line_count != 0 || has_b {
                    return fail("class 5 needs a consolidation and no A-/B-lines".into());
                }
            }
        }
        if let Some(c) = self.consolidation {
            if !(c.band.0 < c.band.1 && c.band.0 > 0.0 && c.band.1 < 1.0) {
                return fail(format!("consolidation band {:?} invalid", c.band));
            }
            if !(0.0..=1.0).contains(&c.intensity) {
                return fail(format!(
                    "consolidation intensity {} outside [0, 1]",
                    c.intensity
                ));
            }
        }
        Ok(())
    }
}

/// Renders the phantom and its ground truth. Deterministic: identical spec
/// (including seed) yields a bit-identical image.
pub fn generate(spec: &PhantomSpec) -> Result<(Image, GroundTruth), PhantomError> {
    spec.validate()?;
    let rows = spec.rows;
    let cols = spec.cols;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = ((spec.pleura_depth_frac * rows as f64).round() as usize).clamp(2, rows - 2);
    let t = spec.pleura_thickness.min(rows - p);

    let mut data = vec![0.0f64; rows * cols];
    for x in 0..rows {
        let base = if x < p { TISSUE_ABOVE } else { TISSUE_BELOW };
        for y in 0..cols {
            data[x * cols + y] = base;
        }
    }
    let paint_band = |data: &mut Vec<f64>, x0: usize, x1: usize, value: f64| {
        for x in x0..x1.min(rows) {
            for y in 0..cols {
                let v = &mut data[x * cols + y];
                *v = v.max(value);
            }
        }
    };

    let mut a_line_rows = Vec::new();
    let class = spec.class.value();

    if class != 5 {
        paint_band(&mut data, p, p + t, 1.0);
    }

    if class == 1 {
        let at = t.saturating_sub(1).max(1);
        for k in 2..2 + spec.a_line_count {
            let r = k * p;
            if r >= rows {
                break;
            }
            let intensity = spec.a_line_decay.powi((k - 1) as i32);
            paint_band(&mut data, r, r + at, intensity);
            a_line_rows.push(r);
        }
    }

    let mut b_centers = Vec::new();
    if class == 3 || class == 4 {
        let mut widths: Vec<usize> = spec.b_line_columns.iter().map(|&(_, w)| w).collect();
        // Class 4: widen until the lit union covers the requested fraction.
        if class == 4 {
            let target = (spec.confluent_frac * cols as f64).ceil() as usize;
            loop {
                let cov = coverage(cols, &spec.b_line_columns, &widths);
                if cov >= target || cov >= cols {
                    break;
                }
                for w in widths.iter_mut() {
                    *w += 2;
                }
            }
        }
        for (&(c, _), &w) in spec.b_line_columns.iter().zip(&widths) {
            let half = w / 2;
            let y0 = c.saturating_sub(half);
            let y1 = (c + half + 1).min(cols);
            for x in (p + t)..rows {
                for y in y0..y1 {
                    let v = &mut data[x * cols + y];
                    *v = v.max(B_LINE_INTENSITY);
                }
            }
            b_centers.push(c);
        }
    }

    if class == 5 {
        // Irregular pleura: a smoothed random walk of per-column depth offsets.
        let jitter_std = (rows as f64 / 32.0).max(3.0);
        let mut walk = vec![0.0f64; cols];
        let mut acc = 0.0;
        for w in walk.iter_mut() {
            acc += rng.gen_range(-1.0..1.0);
            *w = acc;
        }
        let smoothed: Vec<f64> = (0..cols)
            .map(|y| {
                let lo = y.saturating_sub(3);
                let hi = (y + 4).min(cols);
                walk[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        let mean = smoothed.iter().sum::<f64>() / cols as f64;
        let std = (smoothed
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f64>()
            / cols as f64)
            .sqrt()
            .max(1e-9);
        // Scale to a fixed depth spread so the irregularity is never subtle.
        let scale = jitter_std / std;
        for (y, &s) in smoothed.iter().enumerate() {
            let offset = (((s - mean) * scale)
                .clamp(-(rows as f64) / 6.0, rows as f64 / 6.0)
                .round()) as i64;
            let x0 = (p as i64 + offset).clamp(1, rows as i64 - 2) as usize;
            for x in x0..(x0 + t).min(rows) {
                let v = &mut data[x * cols + y];
                *v = v.max(CLASS5_PLEURA_INTENSITY);
            }
        }
        let cons = spec.consolidation.expect("validated for class 5");
        let x0 = ((cons.band.0 * rows as f64).round() as usize).min(rows - 1);
        let x1 = ((cons.band.1 * rows as f64).round() as usize).min(rows);
        for x in x0..x1 {
            for y in 0..cols {
                // Tissue-like mottled patch.
                let m = 1.0 + 0.3 * rng.gen_range(-1.0..1.0f64);
                let v = &mut data[x * cols + y];
                *v = v.max(cons.intensity * m);
            }
        }
    }

    if spec.speckle_sigma > 0.0 {
        for v in data.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *v *= (1.0 + spec.speckle_sigma * n).max(0.0);
        }
    }

    let img = Image::new(rows, cols, data)
        .expect("generator produces finite data")
        .normalize();
    let truth = GroundTruth {
        pleura_row: p,
        a_line_rows,
        b_line_columns: b_centers,
        class: spec.class,
    };
    Ok((img, truth))
}

fn coverage(cols: usize, lines: &[(usize, usize)], widths: &[usize]) -> usize {
    let mut lit = vec![false; cols];
    for (&(c, _), &w) in lines.iter().zip(widths) {
        let half = w / 2;
        for y in c.saturating_sub(half)..(c + half + 1).min(cols) {
            lit[y] = true;
        }
    }
    lit.iter().filter(|&&b| b).count()
}
