//! Inner angles and aspect ratios (circumradius over shortest edge).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{signed_area, EmbeddedMesh, Point};

pub const ANGLE_BINS: usize = 36;
pub const ASPECT_BINS: usize = 40;
pub const ASPECT_RANGE: (f64, f64) = (0.5, 2.5);

/// Equal-width bins over `[lower, upper)`; values at or beyond `upper`
/// land in `overflow`. A value within `1e-9` bin widths of an edge counts
/// as lying on it, so rounding noise cannot move it between bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
    pub overflow: usize,
}

impl Histogram {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Self {
        Self {
            lower,
            upper,
            counts: vec![0; bins],
            overflow: 0,
        }
    }

    pub fn add(&mut self, value: f64) {
        let bins = self.counts.len();
        let t = (value - self.lower) / (self.upper - self.lower) * bins as f64;
        let t = if (t - t.round()).abs() < 1e-9 { t.round() } else { t };
        if t >= bins as f64 {
            self.overflow += 1;
        } else {
            self.counts[t.max(0.0) as usize] += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.overflow
    }

    /// Index of the first nonempty bin.
    pub fn lowest_occupied(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c > 0)
    }
}

/// Per-face and global quality measures of a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub face_count: usize,
    /// NaN for degenerate faces.
    pub face_min_angle: Vec<f64>,
    pub face_max_angle: Vec<f64>,
    pub face_aspect_ratio: Vec<f64>,
    pub min_angle: f64,
    pub max_angle: f64,
    pub min_aspect_ratio: f64,
    pub max_aspect_ratio: f64,
    /// All corner angles; the last bin is closed so that π is counted.
    pub angle_histogram: Histogram,
    pub aspect_histogram: Histogram,
    pub degenerate_faces: Vec<usize>,
}

fn corner_angles(p: [Point; 3]) -> [f64; 3] {
    [0, 1, 2].map(|c| {
        let u = p[(c + 1) % 3] - p[c];
        let v = p[(c + 2) % 3] - p[c];
        u.cross(v).abs().atan2(u.dot(v))
    })
}

pub fn aspect_ratio(p_a: Point, p_b: Point, p_c: Point) -> Result<f64> {
    let (a, b, c) = (p_b.distance(p_c), p_c.distance(p_a), p_a.distance(p_b));
    let area = signed_area(p_a, p_b, p_c).abs();
    let longest = a.max(b).max(c);
    if !(area > 1e-14 * longest * longest) {
        return Err(Error::DegenerateTriangle(area));
    }
    let circumradius = a * b * c / (4.0 * area);
    Ok(circumradius / a.min(b).min(c))
}

pub fn quality_report(mesh: &EmbeddedMesh) -> QualityReport {
    let nf = mesh.topology().face_count();
    let mut report = QualityReport {
        face_count: nf,
        face_min_angle: Vec::with_capacity(nf),
        face_max_angle: Vec::with_capacity(nf),
        face_aspect_ratio: Vec::with_capacity(nf),
        min_angle: f64::INFINITY,
        max_angle: f64::NEG_INFINITY,
        min_aspect_ratio: f64::INFINITY,
        max_aspect_ratio: f64::NEG_INFINITY,
        angle_histogram: Histogram::new(0.0, PI, ANGLE_BINS),
        aspect_histogram: Histogram::new(ASPECT_RANGE.0, ASPECT_RANGE.1, ASPECT_BINS),
        degenerate_faces: Vec::new(),
    };
    for f in 0..nf {
        let p = mesh.face_points(f);
        let Ok(aspect) = aspect_ratio(p[0], p[1], p[2]) else {
            report.degenerate_faces.push(f);
            report.face_min_angle.push(f64::NAN);
            report.face_max_angle.push(f64::NAN);
            report.face_aspect_ratio.push(f64::NAN);
            continue;
        };
        let angles = corner_angles(p);
        let lo = angles.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in angles {
            report.angle_histogram.add(x);
        }
        report.aspect_histogram.add(aspect);
        report.face_min_angle.push(lo);
        report.face_max_angle.push(hi);
        report.face_aspect_ratio.push(aspect);
        report.min_angle = report.min_angle.min(lo);
        report.max_angle = report.max_angle.max(hi);
        report.min_aspect_ratio = report.min_aspect_ratio.min(aspect);
        report.max_aspect_ratio = report.max_aspect_ratio.max(aspect);
    }
    let angles = &mut report.angle_histogram;
    let last = angles.counts.len() - 1;
    angles.counts[last] += std::mem::take(&mut angles.overflow);
    if !report.degenerate_faces.is_empty() {
        log::warn!("{} degenerate faces excluded from quality statistics", report.degenerate_faces.len());
    }
    report
}
