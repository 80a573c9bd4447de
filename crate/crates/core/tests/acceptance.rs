//! End-to-end acceptance gate. Each test covers one numbered criterion and
//! prints a single `criterion N ...: PASS`/`FAIL` line (visible with
//! `--nocapture`); a FAIL also fails the test.

use lus_core::energymaps::{
    ibs_raw, ibs_raw_reference, shadow_map, shadow_map_reference, ShadowParams,
};
use lus_core::eval::{
    acc_ci95, composite_loss, published_interval_check, similarity_score, AnnotationTriple,
    LossParams,
};
use lus_core::localphase::{lpi, monogenic, LogGaborParams};
use lus_core::phantom::{generate, PhantomSpec};
use lus_core::pipeline::{compute_features, FeatureParams};
use lus_core::rectify::{
    estimate_apex, rectify, render_fan, EdgeSegment, Point, RectifyError, SectorGeometry,
};
use lus_core::scorer::{score_frame, Thresholds};
use lus_core::{Image, SeverityClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(n: u32, desc: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("criterion {n} ({desc}): PASS"),
        Err(msg) => {
            println!("criterion {n} ({desc}): FAIL — {msg}");
            panic!("criterion {n} failed: {msg}");
        }
    }
}

fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Image {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.0..1.0)).collect();
    Image::new(rows, cols, data).unwrap()
}

fn max_rel_diff(a: &Image, b: &Image) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-12))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_1_energy_maps_match_reference() {
    report(
        1,
        "IBS/SH maps match direct-sum references",
        (|| {
            let start = Instant::now();
            let mut rng = ChaCha8Rng::seed_from_u64(101);
            let params = ShadowParams::default();
            for i in 0..100 {
                let rows = rng.gen_range(16..=64);
                let cols = rng.gen_range(16..=64);
                let img = random_image(&mut rng, rows, cols);
                let d_ibs = max_rel_diff(&ibs_raw(&img), &ibs_raw_reference(&img));
                if d_ibs > 1e-6 {
                    return Err(format!("IBS rel diff {d_ibs:.3e} on image {i}"));
                }
                let d_sh = max_rel_diff(
                    &shadow_map(&img, &params),
                    &shadow_map_reference(&img, &params),
                );
                if d_sh > 1e-6 {
                    return Err(format!("SH rel diff {d_sh:.3e} on image {i}"));
                }
            }
            let elapsed = start.elapsed();
            if elapsed.as_secs_f64() > 10.0 {
                return Err(format!("took {elapsed:?}, budget is 10s"));
            }
            Ok(())
        })(),
    );
}

/// Naive spatial-domain monogenic oracle: build each filter's spatial
/// kernel with a hand-rolled inverse DFT of the closed-form spectrum, then
/// circularly convolve, all without any FFT library.
mod spatial_oracle {
    use super::*;

    fn signed_freq(k: usize, n: usize) -> f64 {
        if k <= n / 2 {
            k as f64 / n as f64
        } else {
            k as f64 / n as f64 - 1.0
        }
    }

    /// Complex spectra of (even, riesz-row, riesz-col) at bin (kx, ky).
    fn filter_bins(
        kx: usize,
        ky: usize,
        rows: usize,
        cols: usize,
        p: &LogGaborParams,
    ) -> [(f64, f64); 3] {
        let u = signed_freq(kx, rows);
        let v = signed_freq(ky, cols);
        let omega = u.hypot(v);
        if omega == 0.0 {
            return [(0.0, 0.0); 3];
        }
        let g = (-((omega / p.omega0()).ln().powi(2)) / (2.0 * p.sigma_ratio().ln().powi(2))).exp();
        // Riesz multipliers are -i u/omega and -i v/omega.
        [(g, 0.0), (0.0, -g * u / omega), (0.0, -g * v / omega)]
    }

    /// Spatial kernels via direct inverse DFT (no FFT).
    fn kernels(rows: usize, cols: usize, p: &LogGaborParams) -> [Vec<(f64, f64)>; 3] {
        let n = (rows * cols) as f64;
        let mut out = [
            vec![(0.0, 0.0); rows * cols],
            vec![(0.0, 0.0); rows * cols],
            vec![(0.0, 0.0); rows * cols],
        ];
        for x in 0..rows {
            for y in 0..cols {
                let mut acc = [(0.0, 0.0); 3];
                for kx in 0..rows {
                    for ky in 0..cols {
                        let phase = 2.0
                            * std::f64::consts::PI
                            * (kx as f64 * x as f64 / rows as f64
                                + ky as f64 * y as f64 / cols as f64);
                        let (c, s) = (phase.cos(), phase.sin());
                        for (a, f) in acc.iter_mut().zip(filter_bins(kx, ky, rows, cols, p)) {
                            a.0 += f.0 * c - f.1 * s;
                            a.1 += f.0 * s + f.1 * c;
                        }
                    }
                }
                for (o, a) in out.iter_mut().zip(acc) {
                    o[x * cols + y] = (a.0 / n, a.1 / n);
                }
            }
        }
        out
    }

    /// Real part of the circular convolution of a real image with a
    /// complex kernel.
    fn circ_conv_re(img: &Image, kernel: &[(f64, f64)]) -> Image {
        let (rows, cols) = (img.rows(), img.cols());
        Image::from_fn(rows, cols, |x, y| {
            let mut acc = 0.0;
            for xp in 0..rows {
                for yp in 0..cols {
                    let kx = (x + rows - xp) % rows;
                    let ky = (y + cols - yp) % cols;
                    acc += img.at(xp, yp) * kernel[kx * cols + ky].0;
                }
            }
            acc
        })
        .unwrap()
    }

    pub fn monogenic_components(img: &Image, p: &LogGaborParams) -> [Image; 3] {
        let [k1, k2, k3] = kernels(img.rows(), img.cols(), p);
        [
            circ_conv_re(img, &k1),
            circ_conv_re(img, &k2),
            circ_conv_re(img, &k3),
        ]
    }
}

#[test]
fn criterion_2_local_phase_properties_and_oracle() {
    report(
        2,
        "LPI range/invariance and monogenic spatial oracle",
        (|| {
            let p = LogGaborParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(202);

            // Range and contrast invariance on random frames.
            for _ in 0..5 {
                let img = random_image(&mut rng, 48, 48);
                let a = lpi(&img, &p);
                if a.min() < 0.0 || a.max() > 1.0 {
                    return Err(format!("LPI out of [0,1]: [{}, {}]", a.min(), a.max()));
                }
                let b = lpi(&img.map(|v| 7.5 * v), &p);
                let d = a
                    .data()
                    .iter()
                    .zip(b.data())
                    .map(|(&x, &y)| (x - y).abs())
                    .fold(0.0, f64::max);
                if d > 1e-6 {
                    return Err(format!("contrast dependence {d:.3e}"));
                }
            }

            // A single bright horizontal line dominates the LPI row profile.
            let line_row = 40usize;
            let img =
                Image::from_fn(96, 96, |x, _| if x == line_row { 1.0 } else { 0.02 }).unwrap();
            let a = lpi(&img, &p);
            let weighted = |x: usize| (0..96).map(|y| a.at(x, y) * img.at(x, y)).sum::<f64>();
            let argmax = (0..96)
                .max_by(|&i, &j| weighted(i).total_cmp(&weighted(j)))
                .unwrap();
            if argmax.abs_diff(line_row) > 1 {
                return Err(format!("bright line at {line_row}, LPI peak at {argmax}"));
            }

            // Monogenic components against the no-FFT spatial oracle.
            let img = random_image(&mut rng, 32, 32);
            let m = monogenic(&img, &p);
            let oracle = spatial_oracle::monogenic_components(&img, &p);
            for (got, want) in [&m.m1, &m.m2, &m.m3].into_iter().zip(&oracle) {
                let d = got
                    .data()
                    .iter()
                    .zip(want.data())
                    .map(|(&x, &y)| (x - y).abs())
                    .fold(0.0, f64::max);
                if d > 1e-6 {
                    return Err(format!("monogenic component off by {d:.3e}"));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_3_rectification_geometry() {
    report(
        3,
        "arc-to-row mapping and linear-probe passthrough",
        (|| {
            let mut rng = ChaCha8Rng::seed_from_u64(303);
            for case in 0..20 {
                let apex = Point::new(rng.gen_range(-40.0..-5.0), rng.gen_range(100.0..156.0));
                let r0 = rng.gen_range(30.0..80.0);
                let r1 = rng.gen_range(r0 + 100.0..r0 + 200.0);
                let theta = rng.gen_range(0.25..0.7);
                let geo = SectorGeometry::new(apex, r0, r1, theta).unwrap();
                let r_star = rng.gen_range(r0 + 10.0..r1 - 10.0);
                let img = render_fan(&geo, 300, 300, |r, _| {
                    if (r - r_star).abs() <= 2.0 {
                        1.0
                    } else {
                        0.05
                    }
                });
                // One output row per pixel of radius, so +-1 row is +-1 px.
                let out_rows = (r1 - r0).round() as usize + 1;
                let out = rectify(&img, &geo, out_rows, 256).unwrap();
                let expected = ((r_star - r0) / (r1 - r0) * (out_rows - 1) as f64).round() as i64;
                let argmax = (0..out_rows)
                    .max_by(|&a, &b| out.row_mean(a).total_cmp(&out.row_mean(b)))
                    .unwrap() as i64;
                if (argmax - expected).abs() > 1 {
                    return Err(format!(
                        "case {case}: arc row {argmax} vs expected {expected}"
                    ));
                }
            }

            // Linear probe: parallel edges report no apex, so the frame passes
            // through untouched.
            let left = EdgeSegment::new(Point::new(0.0, 10.0), Point::new(100.0, 10.0)).unwrap();
            let right = EdgeSegment::new(Point::new(0.0, 90.0), Point::new(100.0, 90.0)).unwrap();
            match estimate_apex(&left, &right) {
                Err(RectifyError::NoApex { .. }) => Ok(()),
                other => Err(format!("parallel edges gave {other:?}")),
            }
        })(),
    );
}

#[test]
fn criterion_4_fused_map_localizes_pleura() {
    report(
        4,
        "fused-map row profile peaks at the pleura",
        (|| {
            for class in 1..=4u8 {
                for seed in 0..50u64 {
                    let spec = PhantomSpec::sampled(
                        SeverityClass::new(class).unwrap(),
                        128,
                        128,
                        0.05,
                        seed,
                    );
                    let (img, truth) = generate(&spec).map_err(|e| e.to_string())?;
                    let maps = compute_features(&img, &FeatureParams::default());
                    let argmax = (0..128)
                        .max_by(|&a, &b| maps.fused.row_mean(a).total_cmp(&maps.fused.row_mean(b)))
                        .unwrap();
                    if argmax.abs_diff(truth.pleura_row) > 2 {
                        return Err(format!(
                            "class {class} seed {seed}: fused peak {argmax} vs pleura {}",
                            truth.pleura_row
                        ));
                    }
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_5_published_interval_cells_reproduce() {
    report(
        5,
        "published accuracy ± cells reproduce at n = 200",
        (|| {
            let (consistent, _) = published_interval_check();
            if consistent.len() != 16 {
                return Err(format!(
                    "expected 16 consistent cells, got {}",
                    consistent.len()
                ));
            }
            for c in &consistent {
                if !c.matches {
                    return Err(format!(
                        "cell acc {} prints ±{} but computes ±{:.4}",
                        c.acc, c.printed_pm, c.computed_half_width
                    ));
                }
            }
            // Spot-check the formula itself against a hand value.
            let ci = acc_ci95(0.87, 200).unwrap();
            if (ci.half_width - 1.96 * (0.87f64 * 0.13 / 200.0).sqrt()).abs() > 1e-12 {
                return Err("half-width formula drifted".into());
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_6_similarity_score_values() {
    report(
        6,
        "inter-annotator similarity fractions",
        (|| {
            let c = |v| SeverityClass::new(v).unwrap();
            let agree = AnnotationTriple([c(2), c(2), c(4)]);
            let disagree = AnnotationTriple([c(1), c(3), c(5)]);
            for (n_agree, expected) in [(820usize, 0.82f64), (940, 0.94)] {
                let mut triples = vec![agree; n_agree];
                triples.extend(std::iter::repeat(disagree).take(1000 - n_agree));
                let s = similarity_score(&triples).map_err(|e| e.to_string())?;
                if (s - expected).abs() > 1e-12 {
                    return Err(format!("{n_agree}/1000 gave {s}, expected {expected}"));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_7_loss_values() {
    report(
        7,
        "composite loss fixed point and hand value",
        (|| {
            let params = LossParams::default();
            let img = Image::new(2, 2, vec![0.1, 0.4, 0.3, 0.9]).unwrap();
            let mut probs = [0.0; 5];
            probs[2] = 1.0;
            let zero = composite_loss(&img, &img, SeverityClass::new(3).unwrap(), &probs, &params)
                .map_err(|e| e.to_string())?;
            if zero != 0.0 {
                return Err(format!("perfect prediction gave loss {zero}"));
            }

            // MSE 0.01 (uniform 0.1 offset) and p_true = 0.5.
            let x = Image::zeros(4, 4).unwrap();
            let y = x.map(|_| 0.1);
            let probs = [0.1, 0.5, 0.2, 0.1, 0.1];
            let loss = composite_loss(&x, &y, SeverityClass::new(2).unwrap(), &probs, &params)
                .map_err(|e| e.to_string())?;
            let expected = 0.3 * 0.01 + 0.7 * std::f64::consts::LN_2;
            if (loss - expected).abs() > 1e-9 {
                return Err(format!("loss {loss} vs expected {expected}"));
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_8_classifier_accuracy_and_speed() {
    report(
        8,
        "per-class accuracy >= 90% and 512x512 under 200 ms",
        (|| {
            let fp = FeatureParams::default();
            let th = Thresholds::default();
            for class in 1..=5u8 {
                let truth = SeverityClass::new(class).unwrap();
                let mut correct = 0usize;
                let n = 500usize;
                for seed in 0..n as u64 {
                    let spec = PhantomSpec::sampled(truth, 128, 128, 0.05, seed);
                    let (img, _) = generate(&spec).map_err(|e| e.to_string())?;
                    let (_, _, got) = score_frame(&img, &fp, &th).map_err(|e| e.to_string())?;
                    if got == truth {
                        correct += 1;
                    }
                }
                let acc = correct as f64 / n as f64;
                if acc < 0.90 {
                    return Err(format!("class {class} accuracy {acc:.3}"));
                }
            }

            let spec = PhantomSpec::sampled(SeverityClass::new(3).unwrap(), 512, 512, 0.05, 9);
            let (img, _) = generate(&spec).map_err(|e| e.to_string())?;
            // Warm-up builds the FFT plans outside the timed run.
            score_frame(&img, &fp, &th).map_err(|e| e.to_string())?;
            let start = Instant::now();
            score_frame(&img, &fp, &th).map_err(|e| e.to_string())?;
            let elapsed = start.elapsed();
            if elapsed.as_millis() >= 200 {
                return Err(format!("512x512 scoring took {elapsed:?}"));
            }
            Ok(())
        })(),
    );
}
