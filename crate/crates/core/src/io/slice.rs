//! Two-dimensional slices `{base + s·u + t·v}` of a solution set, as CSV or SVG.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadratic::{NumericQuadratic, QuadraticSystem};
use crate::verify::numeric::{dot, max_value, norm, phase_one, ray_exit};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SliceError {
    #[error("slice spec: {0}")]
    InvalidSpec(String),
    #[error("the slice plane misses the interior of the set")]
    EmptySlice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub base_point: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub resolution: usize,
    /// Rays that stay inside longer than this are cut off here.
    pub extent: f64,
}

impl SliceSpec {
    pub fn validate(&self, dim: usize) -> Result<(), SliceError> {
        let bad = |m: &str| Err(SliceError::InvalidSpec(m.to_string()));
        if self.base_point.len() != dim || self.u.len() != dim || self.v.len() != dim {
            return bad(&format!("vectors must have length {dim}"));
        }
        if (norm(&self.u) - 1.0).abs() > 1e-12 || (norm(&self.v) - 1.0).abs() > 1e-12 {
            return bad("u and v must be unit vectors");
        }
        if dot(&self.u, &self.v).abs() > 1e-12 {
            return bad("u and v must be orthogonal");
        }
        if self.resolution < 8 {
            return bad("resolution must be at least 8");
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return bad("extent must be positive");
        }
        Ok(())
    }

    pub fn point(&self, s: f64, t: f64) -> Vec<f64> {
        self.base_point
            .iter()
            .zip(&self.u)
            .zip(&self.v)
            .map(|((b, u), v)| b + s * u + t * v)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlicePoint {
    pub theta: f64,
    pub s: f64,
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SliceCurve {
    pub points: Vec<SlicePoint>,
    /// Number of rays stopped at `extent` instead of at the boundary.
    pub clipped: usize,
}

/// The constraint restricted to the plane, as a quadratic in `(s, t)`.
fn restrict(q: &NumericQuadratic, spec: &SliceSpec) -> NumericQuadratic {
    let au = q.mat_vec(&spec.u);
    let av = q.mat_vec(&spec.v);
    let g = q.gradient(&spec.base_point);
    NumericQuadratic {
        matrix: vec![
            vec![dot(&spec.u, &au), dot(&spec.u, &av)],
            vec![dot(&spec.v, &au), dot(&spec.v, &av)],
        ],
        linear: vec![dot(&g, &spec.u) / 2.0, dot(&g, &spec.v) / 2.0],
        constant: q.value(&spec.base_point),
    }
}

/// Boundary of the slice traced by rays from an in-plane interior point.
pub fn emit_slice(s: &QuadraticSystem, spec: &SliceSpec) -> Result<SliceCurve, SliceError> {
    spec.validate(s.dim())?;
    let planar: Vec<NumericQuadratic> = s.numeric().iter().map(|q| restrict(q, spec)).collect();
    let center = phase_one(&planar, &[0.0, 0.0]).ok_or(SliceError::EmptySlice)?;
    if max_value(&planar, &center) >= 0.0 {
        return Err(SliceError::EmptySlice);
    }
    let mut clipped = 0;
    let points = (0..spec.resolution)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / spec.resolution as f64;
            let dir = [theta.cos(), theta.sin()];
            let r = match ray_exit(&planar, &center, &dir) {
                Some(r) if r <= spec.extent => r,
                _ => {
                    clipped += 1;
                    spec.extent
                }
            };
            let (ps, pt) = (center[0] + r * dir[0], center[1] + r * dir[1]);
            SlicePoint {
                theta,
                s: ps,
                t: pt,
                x: spec.point(ps, pt),
            }
        })
        .collect();
    Ok(SliceCurve { points, clipped })
}

pub fn to_csv(curve: &SliceCurve) -> String {
    let n = curve.points.first().map_or(0, |p| p.x.len());
    let mut out = String::from("theta,s,t");
    for i in 1..=n {
        write!(out, ",x{i}").unwrap();
    }
    out.push('\n');
    for p in &curve.points {
        write!(out, "{},{},{}", p.theta, p.s, p.t).unwrap();
        for x in &p.x {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn to_svg(curve: &SliceCurve) -> String {
    let (mut lo_s, mut hi_s, mut lo_t, mut hi_t) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &curve.points {
        lo_s = lo_s.min(p.s);
        hi_s = hi_s.max(p.s);
        lo_t = lo_t.min(p.t);
        hi_t = hi_t.max(p.t);
    }
    let pad = 0.05 * (hi_s - lo_s).max(hi_t - lo_t).max(1e-9);
    let (w, h) = (hi_s - lo_s + 2.0 * pad, hi_t - lo_t + 2.0 * pad);
    let mut path = String::new();
    for (k, p) in curve.points.iter().enumerate() {
        // SVG y grows downwards.
        write!(
            path,
            "{}{:.9} {:.9} ",
            if k == 0 { "M" } else { "L" },
            p.s,
            -p.t
        )
        .unwrap();
    }
    path.push('Z');
    format!(
        concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ",
            "viewBox=\"{:.9} {:.9} {:.9} {:.9}\" width=\"400\" height=\"{:.0}\">\n",
            "  <path d=\"{}\" fill=\"#c6d9ec\" stroke=\"#1f3b57\" stroke-width=\"{:.9}\"/>\n",
            "</svg>\n"
        ),
        lo_s - pad,
        -hi_t - pad,
        w,
        h,
        400.0 * h / w,
        path,
        w / 300.0
    )
}

/// True when every turn of the closed polyline has the same orientation (within `tol`).
pub fn is_convex_polyline(points: &[(f64, f64)], tol: f64) -> bool {
    let n = points.len();
    if n < 3 {
        return true;
    }
    let (mut pos, mut neg) = (false, false);
    for k in 0..n {
        let (a, b, c) = (points[k], points[(k + 1) % n], points[(k + 2) % n]);
        let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
        if cross > tol {
            pos = true;
        } else if cross < -tol {
            neg = true;
        }
    }
    !(pos && neg)
}
