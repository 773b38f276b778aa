//! The volume energy `𝓔`, the holonomy defect `𝓓`, and the linear
//! angle-sum constraint system.
//!
//! All quantities live in the full space of `3|F|` corner angles. There the
//! Hessian of `𝓔` is diagonal (`-cot α` per angle); concavity only holds on
//! the subspace where each face keeps summing to π.

use std::f64::consts::PI;

use crate::angles::{holonomies, AngleStructure, ConstraintSpec};
use crate::error::{Error, Result};
use crate::lobachevsky::{lob, SINGULAR_EPS};
use crate::mesh::MeshTopology;
use crate::sparse::SparseMatrix;

/// Value, gradient and Hessian of an energy over the corner angles.
#[derive(Debug, Clone)]
pub struct EnergyEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: SparseMatrix,
}

fn check_angle(a: f64) -> Result<()> {
    if a > SINGULAR_EPS && a < PI - SINGULAR_EPS {
        Ok(())
    } else {
        Err(Error::Singularity(a))
    }
}

/// `𝓔(A) = Σ Λ(α)` over all corners, without derivatives.
pub fn mesh_energy(a: &AngleStructure) -> Result<f64> {
    let mut total = 0.0;
    for &x in a.as_slice() {
        check_angle(x)?;
        total += lob(x)?;
    }
    Ok(total)
}

pub fn energy_e(a: &AngleStructure) -> Result<EnergyEvaluation> {
    let value = mesh_energy(a)?;
    let angles = a.as_slice();
    let gradient = angles.iter().map(|&x| -(2.0 * x.sin()).ln()).collect();
    let hessian = SparseMatrix::diagonal(angles.iter().map(|&x| -x.cos() / x.sin()).collect());
    Ok(EnergyEvaluation {
        value,
        gradient,
        hessian,
    })
}

/// Partial derivatives of the holonomies of a face's three vertices with
/// respect to its three corner angles: `rows[c][d] = ∂H(v_c)/∂α_d`.
pub(crate) fn face_holonomy_jacobian(angles: [f64; 3]) -> [[f64; 3]; 3] {
    let cot = angles.map(|x| x.cos() / x.sin());
    let mut rows = [[0.0; 3]; 3];
    for (c, row) in rows.iter_mut().enumerate() {
        row[(c + 2) % 3] = cot[(c + 2) % 3];
        row[(c + 1) % 3] = -cot[(c + 1) % 3];
    }
    rows
}

/// Holonomy Jacobian as a `|V| × 3|F|` matrix.
pub fn holonomy_jacobian(a: &AngleStructure, topo: &MeshTopology) -> Result<SparseMatrix> {
    let mut triplets = Vec::with_capacity(6 * topo.face_count());
    for (f, face) in topo.faces().iter().enumerate() {
        let fa = a.face(f);
        for &x in &fa {
            check_angle(x)?;
        }
        let jac = face_holonomy_jacobian(fa);
        for c in 0..3 {
            for d in 0..3 {
                if jac[c][d] != 0.0 {
                    triplets.push((face[c], 3 * f + d, jac[c][d]));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(topo.vertex_count(), a.len(), triplets))
}

/// `H(i, A) - H_i` for every vertex.
pub fn holonomy_residuals(a: &AngleStructure, spec: &ConstraintSpec, topo: &MeshTopology) -> Result<Vec<f64>> {
    let h = holonomies(a, topo)?;
    Ok(h.iter().zip(&spec.holonomy_target).map(|(h, t)| h - t).collect())
}

/// `𝓓(A) = Σ (H(i, A) - H_i)²` without derivatives.
pub fn defect(a: &AngleStructure, spec: &ConstraintSpec, topo: &MeshTopology) -> Result<f64> {
    Ok(holonomy_residuals(a, spec, topo)?.iter().map(|r| r * r).sum())
}

/// `𝓓` with its exact gradient `2 Jᵀ r` and Gauss–Newton Hessian `2 JᵀJ`.
pub fn energy_d(a: &AngleStructure, spec: &ConstraintSpec, topo: &MeshTopology) -> Result<EnergyEvaluation> {
    let r = holonomy_residuals(a, spec, topo)?;
    let jac = holonomy_jacobian(a, topo)?;
    let value = r.iter().map(|x| x * x).sum();
    let gradient = jac.mul_transpose_vec(&r).into_iter().map(|g| 2.0 * g).collect();

    // JᵀJ couples two angles whenever some vertex row touches both.
    let mut triplets = Vec::new();
    for row in 0..jac.nrows() {
        let entries: Vec<(usize, f64)> = jac.row(row).collect();
        for &(p, vp) in &entries {
            for &(q, vq) in &entries {
                triplets.push((p, q, 2.0 * vp * vq));
            }
        }
    }
    let hessian = SparseMatrix::from_triplets(a.len(), a.len(), triplets);
    Ok(EnergyEvaluation {
        value,
        gradient,
        hessian,
    })
}

/// Face-sum rows followed by vertex angle-sum rows.
#[derive(Debug, Clone)]
pub struct LinearConstraints {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Number of independent rows.
    pub rank: usize,
}

impl LinearConstraints {
    /// Largest absolute row residual of `A`.
    pub fn max_residual(&self, a: &AngleStructure) -> f64 {
        self.matrix
            .mul_vec(a.as_slice())
            .iter()
            .zip(&self.rhs)
            .map(|(lhs, rhs)| (lhs - rhs).abs())
            .fold(0.0, f64::max)
    }
}

pub fn build_linear_constraints(topo: &MeshTopology, spec: &ConstraintSpec) -> LinearConstraints {
    let nf = topo.face_count();
    let nv = topo.vertex_count();
    let mut triplets = Vec::with_capacity(6 * nf);
    for (f, face) in topo.faces().iter().enumerate() {
        for c in 0..3 {
            triplets.push((f, 3 * f + c, 1.0));
            triplets.push((nf + face[c], 3 * f + c, 1.0));
        }
    }
    let matrix = SparseMatrix::from_triplets(nf + nv, 3 * nf, triplets);
    let mut rhs = vec![PI; nf];
    rhs.extend_from_slice(&spec.theta);
    // Each connected component contributes one dependency (its face rows
    // and vertex rows have the same sum); isolated vertices give zero rows.
    let used = nv - topo.isolated_vertices().len();
    let rank = nf + used - topo.connected_components();
    LinearConstraints { matrix, rhs, rank }
}
