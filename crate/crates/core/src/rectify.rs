//! Sector-to-rectangular scan conversion.
//!
//! Convex and sector probes produce a fan of scan lines radiating from an
//! apex that usually lies above the visible image. Rectification estimates
//! that apex from the fan edges, derives the radius range and half-angle,
//! and resamples the fan onto a rectangular grid with bilinear
//! interpolation so downstream features are probe-agnostic. Linear-probe
//! frames skip the whole step via the caller's identity path.

use crate::image::{Image, ImageError};
use thiserror::Error;

/// Pixel intensities above this count as fan content when deriving geometry.
const CONTENT_EPS: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum RectifyError {
    #[error("no apex: edges are near-parallel (angle between lines {angle:.3e} rad)")]
    NoApex { angle: f64 },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("degenerate edge segment: endpoints coincide")]
    DegenerateEdge,
    #[error("no fan content found along the bisector")]
    NoContent,
    #[error("output dimensions must be at least 2x2, got {rows}x{cols}")]
    BadOutputDims { rows: usize, cols: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// A point in real image coordinates, `(row, col)`. The row may be
/// negative: a fan apex typically sits above the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub row: f64,
    pub col: f64,
}

impl Point {
    pub fn new(row: f64, col: f64) -> Self {
        Self { row, col }
    }
}

fn cross(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn norm(a: (f64, f64)) -> f64 {
    a.0.hypot(a.1)
}

/// A straight fan edge given by two distinct points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSegment {
    pub p0: Point,
    pub p1: Point,
}

impl EdgeSegment {
    pub fn new(p0: Point, p1: Point) -> Result<Self, RectifyError> {
        if p0 == p1 {
            return Err(RectifyError::DegenerateEdge);
        }
        Ok(Self { p0, p1 })
    }

    fn direction(&self) -> (f64, f64) {
        (self.p1.row - self.p0.row, self.p1.col - self.p0.col)
    }
}

/// Single-apex fan geometry: radius range and half-angle about the
/// vertical axis through the apex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGeometry {
    pub apex: Point,
    pub r0: f64,
    pub r1: f64,
    pub theta_max: f64,
}

impl SectorGeometry {
    pub fn new(apex: Point, r0: f64, r1: f64, theta_max: f64) -> Result<Self, RectifyError> {
        if !(r0 >= 0.0 && r1 > r0) {
            return Err(RectifyError::InvalidGeometry(format!(
                "need r1 > r0 >= 0, got r0={r0}, r1={r1}"
            )));
        }
        if !(theta_max > 0.0 && theta_max < std::f64::consts::FRAC_PI_2) {
            return Err(RectifyError::InvalidGeometry(format!(
                "half-angle {theta_max} outside (0, pi/2)"
            )));
        }
        Ok(Self {
            apex,
            r0,
            r1,
            theta_max,
        })
    }
}

/// Intersects the infinite lines through the two fan edges.
///
/// Near-parallel edges (a linear probe) have no fan origin and yield
/// [`RectifyError::NoApex`] carrying the angle between the lines.
pub fn estimate_apex(left: &EdgeSegment, right: &EdgeSegment) -> Result<Point, RectifyError> {
    let dl = left.direction();
    let dr = right.direction();
    let sin_angle = cross(dl, dr).abs() / (norm(dl) * norm(dr));
    if sin_angle <= 1e-9 {
        return Err(RectifyError::NoApex {
            angle: sin_angle.asin(),
        });
    }
    let delta = (right.p0.row - left.p0.row, right.p0.col - left.p0.col);
    let t = cross(delta, dr) / cross(dl, dr);
    Ok(Point::new(left.p0.row + t * dl.0, left.p0.col + t * dl.1))
}

fn edge_direction_from_apex(apex: Point, edge: &EdgeSegment) -> (f64, f64) {
    // Point the direction at the endpoint farther from the apex so it
    // runs into the fan rather than back out of it.
    let d0 = norm((edge.p0.row - apex.row, edge.p0.col - apex.col));
    let d1 = norm((edge.p1.row - apex.row, edge.p1.col - apex.col));
    let far = if d1 >= d0 { edge.p1 } else { edge.p0 };
    let v = (far.row - apex.row, far.col - apex.col);
    let n = norm(v);
    (v.0 / n, v.1 / n)
}

/// Derives the sector geometry from the apex and the fan content:
/// `theta_max` is half the angle between the edge lines; `r0`/`r1` are the
/// nearest and farthest content radii sampled along the bisector.
pub fn derive_geometry(
    apex: Point,
    img: &Image,
    left: &EdgeSegment,
    right: &EdgeSegment,
) -> Result<SectorGeometry, RectifyError> {
    let content_top = (0..img.rows())
        .find(|&x| (0..img.cols()).any(|y| img.at(x, y) > CONTENT_EPS))
        .ok_or(RectifyError::NoContent)?;
    if apex.row >= content_top as f64 {
        return Err(RectifyError::InvalidGeometry(format!(
            "apex row {} is not above the first content row {}",
            apex.row, content_top
        )));
    }

    let dl = edge_direction_from_apex(apex, left);
    let dr = edge_direction_from_apex(apex, right);
    let theta_max = 0.5 * dot(dl, dr).clamp(-1.0, 1.0).acos();

    let mut bis = (dl.0 + dr.0, dl.1 + dr.1);
    let bn = norm(bis);
    if bn <= 1e-12 {
        return Err(RectifyError::InvalidGeometry(
            "edges are anti-parallel; bisector undefined".into(),
        ));
    }
    bis = (bis.0 / bn, bis.1 / bn);

    let r_max = norm((img.rows() as f64 - apex.row, img.cols() as f64)) + 1.0;
    let step = 0.25;
    let mut first = None;
    let mut last = None;
    let mut r = 0.0;
    while r <= r_max {
        let x = apex.row + r * bis.0;
        let y = apex.col + r * bis.1;
        if sample_bilinear(img, x, y) > CONTENT_EPS {
            if first.is_none() {
                first = Some(r);
            }
            last = Some(r);
        }
        r += step;
    }
    let (r0, r1) = match (first, last) {
        (Some(a), Some(b)) if b > a => (a, b),
        _ => return Err(RectifyError::NoContent),
    };
    SectorGeometry::new(apex, r0, r1, theta_max)
}

/// Bilinear sample with zero outside the image (the black background of a
/// clinical capture).
fn sample_bilinear(img: &Image, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let mut acc = 0.0;
    for (di, wi) in [(0i64, 1.0 - fx), (1, fx)] {
        for (dj, wj) in [(0i64, 1.0 - fy), (1, fy)] {
            let xi = x0 as i64 + di;
            let yj = y0 as i64 + dj;
            if xi >= 0 && (xi as usize) < img.rows() && yj >= 0 && (yj as usize) < img.cols() {
                acc += wi * wj * img.at(xi as usize, yj as usize);
            }
        }
    }
    acc
}

/// Resamples the fan onto a rectangular grid: output row `i` maps linearly
/// to radius `r0..r1`, output column `j` to angle `-theta_max..theta_max`,
/// sampling the input at `apex + r * (cos t, sin t)` with bilinear
/// interpolation.
pub fn rectify(
    img: &Image,
    geo: &SectorGeometry,
    out_rows: usize,
    out_cols: usize,
) -> Result<Image, RectifyError> {
    if out_rows < 2 || out_cols < 2 {
        return Err(RectifyError::BadOutputDims {
            rows: out_rows,
            cols: out_cols,
        });
    }
    let dr = (geo.r1 - geo.r0) / (out_rows - 1) as f64;
    let dt = 2.0 * geo.theta_max / (out_cols - 1) as f64;
    Ok(Image::from_fn(out_rows, out_cols, |i, j| {
        let r = geo.r0 + i as f64 * dr;
        let t = -geo.theta_max + j as f64 * dt;
        sample_bilinear(img, geo.apex.row + r * t.cos(), geo.apex.col + r * t.sin())
    })?)
}

/// Default output size policy: keep the input row count, take columns from
/// the arc length at the outer radius.
pub fn default_output_dims(img: &Image, geo: &SectorGeometry) -> (usize, usize) {
    let arc = 2.0 * geo.theta_max * geo.r1;
    (img.rows(), (arc.round() as usize).clamp(2, 4 * img.cols()))
}

/// Fits the left and right fan edges from the nonzero support of each row
/// (least-squares line through the per-row support boundaries).
pub fn auto_edges(img: &Image) -> Result<(EdgeSegment, EdgeSegment), RectifyError> {
    let mut lefts = Vec::new();
    let mut rights = Vec::new();
    for x in 0..img.rows() {
        let mut lo = None;
        let mut hi = None;
        for y in 0..img.cols() {
            if img.at(x, y) > CONTENT_EPS {
                if lo.is_none() {
                    lo = Some(y);
                }
                hi = Some(y);
            }
        }
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if hi > lo + 1 {
                lefts.push((x as f64, lo as f64));
                rights.push((x as f64, hi as f64));
            }
        }
    }
    if lefts.len() < 2 {
        return Err(RectifyError::NoContent);
    }
    let seg = |pts: &[(f64, f64)]| -> Result<EdgeSegment, RectifyError> {
        // Rows near the outer arc are bounded by the arc, not the straight
        // edge; trim large-residual rows and refit so they don't rotate
        // the line.
        let mut kept: Vec<(f64, f64)> = pts.to_vec();
        let mut fit = fit_line(&kept);
        for _ in 0..3 {
            let (a, b) = fit;
            let mut residuals: Vec<f64> =
                kept.iter().map(|p| (p.1 - (a * p.0 + b)).abs()).collect();
            residuals.sort_by(f64::total_cmp);
            let tol = (2.0 * residuals[residuals.len() / 2]).max(1.0);
            let trimmed: Vec<(f64, f64)> = kept
                .iter()
                .copied()
                .filter(|p| (p.1 - (a * p.0 + b)).abs() <= tol)
                .collect();
            if trimmed.len() < 2 || trimmed.len() == kept.len() {
                break;
            }
            kept = trimmed;
            fit = fit_line(&kept);
        }
        let (a, b) = fit;
        let x0 = kept.first().unwrap().0;
        let x1 = kept.last().unwrap().0;
        EdgeSegment::new(Point::new(x0, a * x0 + b), Point::new(x1, a * x1 + b))
    };
    Ok((seg(&lefts)?, seg(&rights)?))
}

/// Least-squares `col = a * row + b`.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return (0.0, sy / n);
    }
    let a = (n * sxy - sx * sy) / denom;
    (a, (sy - a * sx) / n)
}

/// Renders a synthetic fan: pixels inside the sector take `shade(r, theta)`,
/// everything else is zero. Used to exercise geometry recovery and the
/// arc-to-row mapping.
pub fn render_fan(
    geo: &SectorGeometry,
    rows: usize,
    cols: usize,
    shade: impl Fn(f64, f64) -> f64,
) -> Image {
    Image::from_fn(rows, cols, |x, y| {
        let dr = x as f64 - geo.apex.row;
        let dc = y as f64 - geo.apex.col;
        let r = dr.hypot(dc);
        let theta = dc.atan2(dr);
        if r >= geo.r0 && r <= geo.r1 && theta.abs() <= geo.theta_max {
            shade(r, theta)
        } else {
            0.0
        }
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(r0: f64, c0: f64, r1: f64, c1: f64) -> EdgeSegment {
        EdgeSegment::new(Point::new(r0, c0), Point::new(r1, c1)).unwrap()
    }

    #[test]
    fn symmetric_edges_meet_on_axis() {
        let apex =
            estimate_apex(&seg(100.0, 0.0, 0.0, 200.0), &seg(100.0, 400.0, 0.0, 200.0)).unwrap();
        assert!((apex.row - 0.0).abs() < 1e-9);
        assert!((apex.col - 200.0).abs() < 1e-9);
    }

    #[test]
    fn general_intersection() {
        // Oracle: solving the 2x2 system by hand gives (2, 2).
        let apex = estimate_apex(&seg(0.0, 0.0, 1.0, 1.0), &seg(0.0, 4.0, 1.0, 3.0)).unwrap();
        assert!((apex.row - 2.0).abs() < 1e-9);
        assert!((apex.col - 2.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_edges_have_no_apex() {
        let err =
            estimate_apex(&seg(0.0, 10.0, 100.0, 10.0), &seg(0.0, 90.0, 100.0, 90.0)).unwrap_err();
        assert!(matches!(err, RectifyError::NoApex { .. }));
    }

    #[test]
    fn geometry_recovered_from_rendered_fan() {
        let truth = SectorGeometry::new(
            Point::new(-20.0, 128.0),
            60.0,
            240.0,
            std::f64::consts::FRAC_PI_6,
        )
        .unwrap();
        let img = render_fan(&truth, 256, 256, |_, _| 0.8);
        let (left, right) = auto_edges(&img).unwrap();
        let apex = estimate_apex(&left, &right).unwrap();
        let geo = derive_geometry(apex, &img, &left, &right).unwrap();
        assert!((geo.apex.row - truth.apex.row).abs() < 4.0);
        assert!((geo.apex.col - truth.apex.col).abs() < 4.0);
        assert!((geo.r0 - truth.r0).abs() / truth.r0 < 0.05);
        assert!((geo.r1 - truth.r1).abs() / truth.r1 < 0.05);
        assert!((geo.theta_max - truth.theta_max).abs() / truth.theta_max < 0.05);
    }

    #[test]
    fn apex_below_content_rejected() {
        let truth = SectorGeometry::new(Point::new(-20.0, 64.0), 30.0, 120.0, 0.4).unwrap();
        let img = render_fan(&truth, 128, 128, |_, _| 0.8);
        let left = seg(20.0, 10.0, 100.0, 0.0);
        let right = seg(20.0, 118.0, 100.0, 127.0);
        let err = derive_geometry(Point::new(50.0, 64.0), &img, &left, &right).unwrap_err();
        assert!(matches!(err, RectifyError::InvalidGeometry(_)));
    }

    #[test]
    fn constant_fan_rectifies_to_constant_interior() {
        let geo = SectorGeometry::new(Point::new(-10.0, 100.0), 40.0, 180.0, 0.5).unwrap();
        let img = render_fan(&geo, 200, 200, |_, _| 0.6);
        let out = rectify(&img, &geo, 128, 128).unwrap();
        // Away from the sector boundary, interpolation of a constant is that constant.
        for i in 8..120 {
            for j in 8..120 {
                assert!(
                    (out.at(i, j) - 0.6).abs() < 0.05,
                    "pixel ({i},{j}) = {}",
                    out.at(i, j)
                );
            }
        }
    }

    #[test]
    fn bright_arc_maps_to_analytic_row() {
        let geo = SectorGeometry::new(Point::new(-15.0, 128.0), 50.0, 230.0, 0.45).unwrap();
        let r_star = 140.0;
        let img = render_fan(&geo, 256, 256, |r, _| {
            if (r - r_star).abs() <= 2.0 {
                1.0
            } else {
                0.05
            }
        });
        let out_rows = 200;
        let out = rectify(&img, &geo, out_rows, 200).unwrap();
        let expected =
            ((r_star - geo.r0) / (geo.r1 - geo.r0) * (out_rows - 1) as f64).round() as i64;
        let argmax = (0..out_rows)
            .max_by(|&a, &b| out.row_mean(a).total_cmp(&out.row_mean(b)))
            .unwrap() as i64;
        assert!(
            (argmax - expected).abs() <= 1,
            "argmax {argmax} vs {expected}"
        );
    }

    #[test]
    fn bilinear_never_overshoots() {
        let geo = SectorGeometry::new(Point::new(-5.0, 64.0), 20.0, 110.0, 0.6).unwrap();
        let img = render_fan(&geo, 128, 128, |r, t| 0.5 + 0.5 * (0.1 * r + t).sin());
        let out = rectify(&img, &geo, 64, 64).unwrap();
        assert!(out.max() <= img.max() + 1e-6);
    }

    #[test]
    fn radius_mapping_is_monotone() {
        let geo = SectorGeometry::new(Point::new(0.0, 50.0), 10.0, 90.0, 0.3).unwrap();
        let dr = (geo.r1 - geo.r0) / 63.0;
        let radii: Vec<f64> = (0..64).map(|i| geo.r0 + i as f64 * dr).collect();
        assert!(radii.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_output_dims_rejected() {
        let geo = SectorGeometry::new(Point::new(0.0, 0.0), 1.0, 2.0, 0.3).unwrap();
        let img = Image::zeros(8, 8).unwrap();
        assert!(matches!(
            rectify(&img, &geo, 1, 8),
            Err(RectifyError::BadOutputDims { .. })
        ));
    }
}
