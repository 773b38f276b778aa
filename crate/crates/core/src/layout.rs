//! Re-embedding a mesh from an angle structure.
//!
//! Boundary vertices are pinned; every other vertex is placed by the law of
//! sines from an already placed edge of a neighboring face, in breadth-first
//! order over faces. A vertex keeps its first placement; later faces that
//! would place it elsewhere only raise `max_conflict`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::Serialize;

use crate::angles::AngleStructure;
use crate::error::{Error, Result};
use crate::mesh::{signed_area, MeshTopology, Point};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutResult {
    /// Unreached vertices hold NaN.
    pub coordinates: Vec<Point>,
    pub max_conflict: f64,
    pub unreached_count: usize,
    /// Faces whose laid-out signed area is not positive.
    pub inverted_faces: Vec<usize>,
    /// Crossing pairs among boundary edges (spot check only).
    pub boundary_crossings: usize,
}

/// Third vertex of the counterclockwise triangle `(a, b, c)` with the given
/// corner angles.
pub fn place_third_vertex(p_a: Point, p_b: Point, angle_a: f64, angle_b: f64, angle_c: f64) -> Result<Point> {
    if !(angle_a > 0.0 && angle_b > 0.0 && angle_c > 0.0) {
        return Err(Error::Precondition("triangle angles must be positive".into()));
    }
    if (angle_a + angle_b + angle_c - PI).abs() > 1e-8 {
        return Err(Error::Precondition(format!(
            "triangle angles sum to {}",
            angle_a + angle_b + angle_c
        )));
    }
    let ab = p_b - p_a;
    let len = ab.norm();
    if len == 0.0 {
        return Err(Error::Precondition("coincident base vertices".into()));
    }
    let sin_c = angle_c.sin();
    if sin_c < 1e-12 {
        return Err(Error::DegeneratePlacement(sin_c));
    }
    let side = len * angle_b.sin() / sin_c;
    Ok(p_a + (ab * (1.0 / len)).rotate(angle_a) * side)
}

/// Lay out `topo` with the angles `a`. `pins` fixes coordinates per vertex
/// and must cover every boundary vertex.
pub fn layout_mesh(topo: &MeshTopology, a: &AngleStructure, pins: &[Option<Point>]) -> Result<LayoutResult> {
    let n = topo.vertex_count();
    if pins.len() != n {
        return Err(Error::Precondition(format!("{} pins for {n} vertices", pins.len())));
    }
    if a.face_count() != topo.face_count() {
        return Err(Error::Precondition("angle structure does not match the mesh".into()));
    }
    if a.max_face_sum_error() > 1e-8 {
        return Err(Error::Precondition("angle structure violates face sums".into()));
    }
    if let Some(v) = (0..n).find(|&v| topo.is_boundary(v) && pins[v].is_none()) {
        return Err(Error::Precondition(format!("boundary vertex {v} is not pinned")));
    }

    let mut placed: Vec<Option<Point>> = pins.to_vec();
    let mut queued = vec![false; topo.face_count()];
    let mut queue = VecDeque::new();
    for (f, face) in topo.faces().iter().enumerate() {
        let on_boundary = (0..3).any(|c| topo.face_with_half_edge(face[(c + 1) % 3], face[c]).is_none());
        if on_boundary {
            queued[f] = true;
            queue.push_back(f);
        }
    }

    let mut max_conflict: f64 = 0.0;
    while let Some(f) = queue.pop_front() {
        let face = topo.face(f);
        let alpha = a.face(f);
        let missing: Vec<usize> = (0..3).filter(|&c| placed[face[c]].is_none()).collect();
        match missing.as_slice() {
            [] => {
                for k in 0..3 {
                    let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                    let alt = place_third_vertex(
                        placed[face[i]].unwrap(),
                        placed[face[j]].unwrap(),
                        alpha[i],
                        alpha[j],
                        alpha[k],
                    )?;
                    max_conflict = max_conflict.max(alt.distance(placed[face[k]].unwrap()));
                }
            }
            [k] => {
                let (i, j) = ((k + 1) % 3, (k + 2) % 3);
                let p = place_third_vertex(
                    placed[face[i]].unwrap(),
                    placed[face[j]].unwrap(),
                    alpha[i],
                    alpha[j],
                    alpha[*k],
                )?;
                placed[face[*k]] = Some(p);
            }
            _ => {
                // Every queued face shares a placed edge, so this cannot happen.
                continue;
            }
        }
        for g in topo.face_neighbors(f) {
            if !queued[g] {
                queued[g] = true;
                queue.push_back(g);
            }
        }
    }

    let unreached_count = placed.iter().filter(|p| p.is_none()).count();
    let coordinates: Vec<Point> = placed
        .iter()
        .map(|p| p.unwrap_or(Point::new(f64::NAN, f64::NAN)))
        .collect();
    let inverted_faces = topo
        .faces()
        .iter()
        .enumerate()
        .filter(|(_, face)| {
            let [p, q, r] = face.map(|v| coordinates[v]);
            !(signed_area(p, q, r) > 0.0)
        })
        .map(|(f, _)| f)
        .collect();
    let boundary_crossings = count_boundary_crossings(topo, &coordinates);
    if boundary_crossings > 0 {
        log::warn!("laid-out boundary has {boundary_crossings} crossing edge pairs");
    }
    Ok(LayoutResult {
        coordinates,
        max_conflict,
        unreached_count,
        inverted_faces,
        boundary_crossings,
    })
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = (p2 - p1).cross(q1 - p1);
    let d2 = (p2 - p1).cross(q2 - p1);
    let d3 = (q2 - q1).cross(p1 - q1);
    let d4 = (q2 - q1).cross(p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn count_boundary_crossings(topo: &MeshTopology, coords: &[Point]) -> usize {
    let segments: Vec<[usize; 2]> = topo
        .boundary_loops()
        .iter()
        .flat_map(|lp| (0..lp.len()).map(move |i| [lp[i], lp[(i + 1) % lp.len()]]))
        .collect();
    let mut count = 0;
    for (i, s) in segments.iter().enumerate() {
        for t in &segments[i + 1..] {
            if s.iter().any(|v| t.contains(v)) {
                continue;
            }
            if segments_cross(coords[s[0]], coords[s[1]], coords[t[0]], coords[t[1]]) {
                count += 1;
            }
        }
    }
    count
}
