//! Heuristic 5-class severity scorer over the feature maps.
//!
//! The detectors read the artifact vocabulary straight off the maps: the
//! pleura from the LPI, A-line reverberations from the depth profile of
//! the image, B-lines from the column profile of the SHIBS map, and
//! consolidation from the pleural band's intensity deficit and
//! irregularity. A fixed-precedence rule table turns the summary into a
//! class. All thresholds live in [`Thresholds`] and are frozen defaults
//! calibrated on the noise-free phantom generator.

use crate::image::{Image, SeverityClass};
use crate::pipeline::{compute_features, FeatureMaps, FeatureParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("empty pleura search band ({0}, {1})")]
    EmptyBand(f64, f64),
}

/// Frozen decision thresholds and detector knobs. Loadable from JSON;
/// missing fields keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Consolidation score above this forces class 5.
    pub tau_consolidation: f64,
    /// Confluent fraction above this forces class 4.
    pub tau_confluent: f64,
    /// A-line score above this yields class 1 (else class 2).
    pub tau_a_line: f64,
    /// A column is lit when its SHIBS mean exceeds this fraction of the max.
    pub b_threshold_frac: f64,
    /// Max column mean must exceed this multiple of the 10th-percentile
    /// column mean, otherwise the column profile is flat (no B-lines).
    pub b_gate_ratio: f64,
    /// Pleura search band as depth fractions.
    pub pleura_band: (f64, f64),
    /// Exponential squash scale for the A-line harmonic ratio.
    pub a_squash_scale: f64,
    /// Consolidation score weights: pleural-band intensity deficit and
    /// per-column pleura-row irregularity.
    pub w_deficit: f64,
    pub w_irregularity: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_consolidation: 0.5,
            tau_confluent: 0.4,
            tau_a_line: 0.5,
            b_threshold_frac: 0.5,
            b_gate_ratio: 1.5,
            pleura_band: (0.05, 0.6),
            a_squash_scale: 3.0,
            w_deficit: 0.5,
            w_irregularity: 0.5,
        }
    }
}

/// Scalar artifact summary of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub pleura_row: usize,
    pub a_line_score: f64,
    pub b_line_count: usize,
    pub confluent_frac: f64,
    /// Artifact-defined consolidation proxy (intensity deficit plus pleura
    /// irregularity), not a calibrated C-line detector.
    pub consolidation_score: f64,
}

/// Row of maximum mean energy-weighted LPI within the search band (depth
/// fractions). Ties break to the smallest index.
///
/// The LPI ratio is contrast-blind, so an isolated bright line produces
/// phase sidelobes half a wavelength away that rival the line itself;
/// weighting each pixel's LPI by the image intensity keeps the argmax on
/// the actual reflector.
pub fn detect_pleura(lpi: &Image, img: &Image, band: (f64, f64)) -> Result<usize, ScorerError> {
    let (lo_frac, hi_frac) = band;
    if !(0.0..=1.0).contains(&lo_frac) || !(0.0..=1.0).contains(&hi_frac) || lo_frac >= hi_frac {
        return Err(ScorerError::EmptyBand(lo_frac, hi_frac));
    }
    let rows = lpi.rows();
    let cols = lpi.cols();
    let lo = ((lo_frac * rows as f64) as usize).min(rows - 1);
    let hi = ((hi_frac * rows as f64).ceil() as usize).clamp(lo + 1, rows);
    let mut best = lo;
    let mut best_val = f64::NEG_INFINITY;
    for x in lo..hi {
        let v = (0..cols).map(|y| lpi.at(x, y) * img.at(x, y)).sum::<f64>() / cols as f64;
        if v > best_val {
            best_val = v;
            best = x;
        }
    }
    Ok(best)
}

/// Walks from a row inside the pleural band up to the band's top row, so
/// reverberation harmonics land on integer multiples of the result.
fn refine_pleura_top(img: &Image, row: usize) -> usize {
    let anchor = img.row_mean(row);
    let mut top = row;
    while top > 1 && img.row_mean(top - 1) >= 0.7 * anchor {
        top -= 1;
    }
    top
}

/// A-line score in `[0, 1]`: mean depth-profile value at rows
/// `k * pleura_row` (k = 2..4, within one row) relative to the overall
/// below-pleura profile mean, squashed exponentially.
pub fn detect_a_lines(img: &Image, pleura_row: usize, params: &Thresholds) -> f64 {
    if pleura_row < 2 {
        return 0.0;
    }
    let rows = img.rows();
    let start = (pleura_row + 4).min(rows);
    if start + 2 >= rows {
        return 0.0;
    }
    let profile: Vec<f64> = (start..rows).map(|x| img.row_mean(x)).collect();
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;

    let mut harmonic_vals = Vec::new();
    for k in 2..=4usize {
        let r = k * pleura_row;
        let w_lo = r.saturating_sub(1).max(start);
        let w_hi = (r + 2).min(rows);
        if w_lo >= w_hi || r >= rows {
            continue;
        }
        let v = (w_lo..w_hi)
            .map(|x| profile[x - start])
            .fold(f64::NEG_INFINITY, f64::max);
        harmonic_vals.push(v);
    }
    if harmonic_vals.is_empty() {
        return 0.0;
    }
    let harmonic_mean = harmonic_vals.iter().sum::<f64>() / harmonic_vals.len() as f64;
    let ratio = harmonic_mean / (mean + 1e-9);
    1.0 - (-(ratio - 1.0).max(0.0) / params.a_squash_scale).exp()
}

/// B-line count and confluent (lit column) fraction from the SHIBS column
/// profile below the pleura. Lit columns are those above
/// `b_threshold_frac * max`; a flat profile (max within `b_gate_ratio` of
/// the 10th-percentile column) has no B-lines. Runs wider than 2 px count.
pub fn detect_b_lines(shibs: &Image, pleura_row: usize, params: &Thresholds) -> (usize, f64) {
    let rows = shibs.rows();
    let cols = shibs.cols();
    let start = (pleura_row + 4).min(rows - 1);
    let range = start..rows;
    let col_means: Vec<f64> = (0..cols)
        .map(|y| shibs.col_mean(y, range.clone()))
        .collect();
    let max = col_means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.05 {
        return (0, 0.0); // dark below the pleura
    }
    let mut sorted = col_means.clone();
    sorted.sort_by(f64::total_cmp);
    let q10 = sorted[cols / 10];
    if max <= params.b_gate_ratio * (q10 + 1e-9) {
        return (0, 0.0); // flat column profile: horizontal structure only
    }

    let lit: Vec<bool> = col_means
        .iter()
        .map(|&v| v > params.b_threshold_frac * max)
        .collect();
    let mut count = 0usize;
    let mut run = 0usize;
    for &l in &lit {
        if l {
            run += 1;
        } else {
            if run > 2 {
                count += 1;
            }
            run = 0;
        }
    }
    if run > 2 {
        count += 1;
    }
    let confluent = lit.iter().filter(|&&l| l).count() as f64 / cols as f64;
    (count, confluent)
}

/// Consolidation proxy: weighted sum of the pleural band's intensity
/// deficit (1 minus the best row mean) and the spread of the per-column
/// intensity argmax inside the band.
pub fn consolidation_score(img: &Image, params: &Thresholds) -> f64 {
    let rows = img.rows();
    let cols = img.cols();
    let lo = ((params.pleura_band.0 * rows as f64) as usize).min(rows - 2);
    let hi = ((params.pleura_band.1 * rows as f64).ceil() as usize).clamp(lo + 1, rows);

    let best_row_mean = (lo..hi)
        .map(|x| img.row_mean(x))
        .fold(f64::NEG_INFINITY, f64::max);
    let deficit = (1.0 - best_row_mean).clamp(0.0, 1.0);

    let argmax_rows: Vec<f64> = (0..cols)
        .map(|y| {
            let mut best = lo;
            let mut best_val = f64::NEG_INFINITY;
            for x in lo..hi {
                let v = img.at(x, y);
                if v > best_val {
                    best_val = v;
                    best = x;
                }
            }
            best as f64
        })
        .collect();
    let mean = argmax_rows.iter().sum::<f64>() / cols as f64;
    let std = (argmax_rows
        .iter()
        .map(|&r| (r - mean) * (r - mean))
        .sum::<f64>()
        / cols as f64)
        .sqrt();
    let irregularity = (std / 4.0).clamp(0.0, 1.0);

    params.w_deficit * deficit + params.w_irregularity * irregularity
}

/// Fixed-precedence rule table: consolidation, then confluence, then any
/// B-line, then A-lines, else class 2.
pub fn classify(fs: &FeatureSummary, params: &Thresholds) -> SeverityClass {
    let class = if fs.consolidation_score > params.tau_consolidation {
        5
    } else if fs.confluent_frac > params.tau_confluent {
        4
    } else if fs.b_line_count >= 1 {
        3
    } else if fs.a_line_score > params.tau_a_line {
        1
    } else {
        2
    };
    SeverityClass::new(class).unwrap()
}

/// Runs all detectors over precomputed feature maps.
pub fn summarize(maps: &FeatureMaps, params: &Thresholds) -> Result<FeatureSummary, ScorerError> {
    let detected = detect_pleura(&maps.lpi, &maps.normalized, params.pleura_band)?;
    let pleura_row = refine_pleura_top(&maps.normalized, detected);
    let a_line_score = detect_a_lines(&maps.normalized, pleura_row, params);
    let (b_line_count, confluent_frac) = detect_b_lines(&maps.shibs, pleura_row, params);
    let consolidation = consolidation_score(&maps.normalized, params);
    Ok(FeatureSummary {
        pleura_row,
        a_line_score,
        b_line_count,
        confluent_frac,
        consolidation_score: consolidation,
    })
}

/// Full per-frame scoring: features, summary, class.
pub fn score_frame(
    img: &Image,
    fp: &FeatureParams,
    params: &Thresholds,
) -> Result<(FeatureMaps, FeatureSummary, SeverityClass), ScorerError> {
    let maps = compute_features(img, fp);
    let summary = summarize(&maps, params)?;
    let class = classify(&summary, params);
    Ok((maps, summary, class))
}
