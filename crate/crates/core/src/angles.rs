//! Angle structures, per-vertex angle sums and holonomies.
//!
//! Corner `c` of face `f` is the angle at the vertex `faces[f][c]`. For a
//! counterclockwise face `(i, j, k)` seen from `i`, the holonomy term is
//! `ln sin(angle at k) - ln sin(angle at j)`, i.e. `ln(|ij| / |ik|)` by the
//! law of sines. Around an interior vertex these ratios telescope to zero;
//! at a boundary vertex they leave `ln(|outgoing| / |incoming|)` for the two
//! boundary edges in counterclockwise boundary order.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lobachevsky::SINGULAR_EPS;
use crate::mesh::{EmbeddedMesh, MeshTopology};

/// Three corner angles per face, stored face-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleStructure {
    angles: Vec<f64>,
}

impl AngleStructure {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if !angles.len().is_multiple_of(3) {
            return Err(Error::Precondition(format!(
                "angle vector length {} is not a multiple of 3",
                angles.len()
            )));
        }
        Ok(Self { angles })
    }

    /// Every corner set to `value`.
    pub fn uniform(face_count: usize, value: f64) -> Self {
        Self {
            angles: vec![value; 3 * face_count],
        }
    }

    pub fn face_count(&self) -> usize {
        self.angles.len() / 3
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn get(&self, face: usize, corner: usize) -> f64 {
        self.angles[3 * face + corner]
    }

    pub fn face(&self, f: usize) -> [f64; 3] {
        [self.angles[3 * f], self.angles[3 * f + 1], self.angles[3 * f + 2]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.angles
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.angles
    }

    /// Largest `|α + β + γ - π|` over faces.
    pub fn max_face_sum_error(&self) -> f64 {
        self.angles
            .chunks_exact(3)
            .map(|c| (c[0] + c[1] + c[2] - PI).abs())
            .fold(0.0, f64::max)
    }

    /// Fail if any corner lies within [`SINGULAR_EPS`] of 0 or π.
    pub fn check_interior(&self) -> Result<()> {
        for &a in &self.angles {
            if !(a > SINGULAR_EPS && a < PI - SINGULAR_EPS) {
                return Err(Error::Singularity(a));
            }
        }
        Ok(())
    }

    pub fn min_angle(&self) -> f64 {
        self.angles.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_difference(&self, other: &AngleStructure) -> f64 {
        self.angles
            .iter()
            .zip(&other.angles)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-vertex angle-sum and holonomy targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub theta: Vec<f64>,
    pub holonomy_target: Vec<f64>,
}

/// Corner angles of every face, from `atan2(2·area, dot)`.
pub fn induce_angles(mesh: &EmbeddedMesh) -> Result<AngleStructure> {
    let eps = mesh.degeneracy_threshold();
    let topo = mesh.topology();
    let mut angles = Vec::with_capacity(3 * topo.face_count());
    for f in 0..topo.face_count() {
        let pts = mesh.face_points(f);
        let area = mesh.signed_area(f);
        if area.abs() <= eps {
            return Err(Error::Degenerate { face: f, area });
        }
        for c in 0..3 {
            let p = pts[c];
            let u = pts[(c + 1) % 3] - p;
            let v = pts[(c + 2) % 3] - p;
            angles.push(u.cross(v).abs().atan2(u.dot(v)));
        }
    }
    AngleStructure::new(angles)
}

/// Sum of the corner angles at vertex `i`.
pub fn angle_sum(i: usize, a: &AngleStructure, topo: &MeshTopology) -> f64 {
    topo.incident_corners(i)
        .iter()
        .map(|&(f, c)| a.get(f, c))
        .sum()
}

/// Angle sums at every vertex.
pub fn angle_sums(a: &AngleStructure, topo: &MeshTopology) -> Vec<f64> {
    let mut out = vec![0.0; topo.vertex_count()];
    for (f, face) in topo.faces().iter().enumerate() {
        for c in 0..3 {
            out[face[c]] += a.get(f, c);
        }
    }
    out
}

fn ln_sin(x: f64) -> Result<f64> {
    if !(x > SINGULAR_EPS && x < PI - SINGULAR_EPS) {
        return Err(Error::Singularity(x));
    }
    Ok(x.sin().ln())
}

/// Holonomy at vertex `i`.
pub fn holonomy(i: usize, a: &AngleStructure, topo: &MeshTopology) -> Result<f64> {
    let mut h = 0.0;
    for &(f, c) in topo.incident_corners(i) {
        h += ln_sin(a.get(f, (c + 2) % 3))? - ln_sin(a.get(f, (c + 1) % 3))?;
    }
    Ok(h)
}

/// Holonomy at every vertex.
pub fn holonomies(a: &AngleStructure, topo: &MeshTopology) -> Result<Vec<f64>> {
    let mut out = vec![0.0; topo.vertex_count()];
    for (f, face) in topo.faces().iter().enumerate() {
        let ls = [
            ln_sin(a.get(f, 0))?,
            ln_sin(a.get(f, 1))?,
            ln_sin(a.get(f, 2))?,
        ];
        for c in 0..3 {
            out[face[c]] += ls[(c + 2) % 3] - ls[(c + 1) % 3];
        }
    }
    Ok(out)
}

/// Angle-sum and holonomy targets read off the input embedding.
pub fn derive_targets(mesh: &EmbeddedMesh) -> Result<ConstraintSpec> {
    let a = induce_angles(mesh)?;
    let topo = mesh.topology();
    Ok(ConstraintSpec {
        theta: angle_sums(&a, topo),
        holonomy_target: holonomies(&a, topo)?,
    })
}
