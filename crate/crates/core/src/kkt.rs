//! Equality-constrained quadratic subproblems over angle structures.
//!
//! Every step the optimizer takes solves
//!
//! ```text
//! minimize   ½ dᵀQ d + gᵀd + ½ ω ‖J d + r‖²
//! subject to (face rows) d = 0,  (vertex rows) d = c
//! ```
//!
//! The face rows are eliminated exactly by writing each face's step in an
//! orthonormal basis `Z` of the plane `d₀ + d₁ + d₂ = 0`, so `Q` becomes a
//! 2×2 block per face. The vertex rows and the `J` coupling are then
//! handled through a Schur complement with one (multiplier) or two
//! (multiplier, weighted residual) unknowns per vertex. That matrix is
//! symmetric positive definite once one multiplier per connected component
//! is pinned, and its sparsity is the mesh 1-skeleton.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{rcm_positions, EnvelopeMatrix};
use crate::mesh::MeshTopology;

const INV_SQRT_6: f64 = 0.408_248_290_463_863;

/// Rows of `Z`: the reduced coordinates contributed by each corner.
pub(crate) const BASIS: [[f64; 2]; 3] = [
    [FRAC_1_SQRT_2, INV_SQRT_6],
    [-FRAC_1_SQRT_2, INV_SQRT_6],
    [0.0, -2.0 * INV_SQRT_6],
];

/// Symmetric 2×2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Sym2 {
    pub(crate) const IDENTITY: Sym2 = Sym2 { a: 1.0, b: 0.0, d: 1.0 };

    /// `Zᵀ diag(h) Z`.
    pub(crate) fn from_diagonal(h: [f64; 3]) -> Self {
        let mut m = Sym2 { a: 0.0, b: 0.0, d: 0.0 };
        for c in 0..3 {
            let z = BASIS[c];
            m.a += h[c] * z[0] * z[0];
            m.b += h[c] * z[0] * z[1];
            m.d += h[c] * z[1] * z[1];
        }
        m
    }

    pub(crate) fn scale(self, s: f64) -> Self {
        Sym2 {
            a: self.a * s,
            b: self.b * s,
            d: self.d * s,
        }
    }

    pub(crate) fn mul(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.b * v[0] + self.d * v[1]]
    }

    fn inverse_pd(&self) -> Option<Sym2> {
        let det = self.a * self.d - self.b * self.b;
        if !(self.a > 0.0 && det > 0.0 && det.is_finite()) {
            return None;
        }
        Some(Sym2 {
            a: self.d / det,
            b: -self.b / det,
            d: self.a / det,
        })
    }
}

fn dot2(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

/// `Zᵀ v` for one face.
pub(crate) fn reduce(v: [f64; 3]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for c in 0..3 {
        out[0] += BASIS[c][0] * v[c];
        out[1] += BASIS[c][1] * v[c];
    }
    out
}

/// `Z y` for one face.
pub(crate) fn expand(y: [f64; 2]) -> [f64; 3] {
    [0, 1, 2].map(|c| dot2(BASIS[c], y))
}

/// Rows of `J Z` for one face, given `∂H(v_c)/∂α_d`.
pub(crate) fn reduce_jacobian(rows: [[f64; 3]; 3]) -> [[f64; 2]; 3] {
    rows.map(reduce)
}

/// Ordering and envelope structure for one mesh, reused across solves.
pub(crate) struct KktStructure {
    face_vertices: Vec<[usize; 3]>,
    vertex_count: usize,
    vertex_rows: bool,
    position: Vec<usize>,
    min_neighbor_position: Vec<usize>,
    /// Vertices whose multiplier is fixed at zero.
    pinned: Vec<bool>,
}

impl KktStructure {
    pub(crate) fn new(topo: &MeshTopology, vertex_rows: bool) -> Self {
        let adj = topo.vertex_neighbors();
        let position = rcm_positions(&adj);
        let min_neighbor_position = (0..topo.vertex_count())
            .map(|v| adj[v].iter().map(|&w| position[w]).fold(position[v], usize::min))
            .collect();

        let mut pinned = vec![false; topo.vertex_count()];
        let mut seen = vec![false; topo.vertex_count()];
        for start in 0..topo.vertex_count() {
            if seen[start] {
                continue;
            }
            pinned[start] = true;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }

        Self {
            face_vertices: topo.faces().to_vec(),
            vertex_count: topo.vertex_count(),
            vertex_rows,
            position,
            min_neighbor_position,
            pinned,
        }
    }

    pub(crate) fn face_count(&self) -> usize {
        self.face_vertices.len()
    }

    /// Factor the system for blocks `q` (one per face, positive definite) and
    /// an optional least-squares term `(J Z blocks, ω)`.
    pub(crate) fn factor<'s>(
        &'s self,
        q: &[Sym2],
        coupling: Option<(&'s [[[f64; 2]; 3]], f64)>,
    ) -> Result<KktFactor<'s>> {
        assert_eq!(q.len(), self.face_count());
        let inv: Vec<Sym2> = q
            .iter()
            .enumerate()
            .map(|(f, m)| {
                m.inverse_pd().ok_or_else(|| {
                    Error::LinearSolve(format!("face {f} curvature block is not positive definite"))
                })
            })
            .collect::<Result<_>>()?;

        if let Some((jac, omega)) = coupling {
            assert!(self.vertex_rows, "least-squares coupling requires vertex rows");
            assert_eq!(jac.len(), self.face_count());
            assert!(omega > 0.0);
        }
        if !self.vertex_rows {
            return Ok(KktFactor {
                structure: self,
                inv,
                coupling: None,
                matrix: None,
            });
        }

        let bs = if coupling.is_some() { 2 } else { 1 };
        let nu = bs - 1;
        let var = |v: usize, slot: usize| self.position[v] * bs + slot;
        let mut first = vec![0; self.vertex_count * bs];
        for v in 0..self.vertex_count {
            for slot in 0..bs {
                first[var(v, slot)] = self.min_neighbor_position[v] * bs;
            }
        }
        let mut m = EnvelopeMatrix::new(first);

        for (f, verts) in self.face_vertices.iter().enumerate() {
            let k = &inv[f];
            for p in 0..3 {
                let kz = k.mul(BASIS[p]);
                for qv in 0..=p {
                    m.add(var(verts[p], nu), var(verts[qv], nu), dot2(BASIS[qv], kz));
                }
                if let Some((jac, _)) = coupling {
                    let jp = jac[f][p];
                    let kj = k.mul(jp);
                    for qv in 0..3 {
                        // (t_p, ν_q) and, for qv <= p, (t_p, t_q).
                        m.add(var(verts[p], 0), var(verts[qv], nu), dot2(BASIS[qv], kj));
                        if qv <= p {
                            m.add(var(verts[p], 0), var(verts[qv], 0), dot2(jac[f][qv], kj));
                        }
                    }
                }
            }
        }
        if let Some((_, omega)) = coupling {
            for v in 0..self.vertex_count {
                m.add(var(v, 0), var(v, 0), 1.0 / omega);
            }
        }
        for v in 0..self.vertex_count {
            if self.pinned[v] {
                m.pin(var(v, nu));
            }
        }
        m.factor()?;
        Ok(KktFactor {
            structure: self,
            inv,
            coupling,
            matrix: Some(m),
        })
    }
}

pub(crate) struct KktFactor<'s> {
    structure: &'s KktStructure,
    inv: Vec<Sym2>,
    coupling: Option<(&'s [[[f64; 2]; 3]], f64)>,
    matrix: Option<EnvelopeMatrix>,
}

impl KktFactor<'_> {
    /// Step in reduced coordinates for gradient `g` (per face), vertex-row
    /// right-hand side `c`, and least-squares residual `r` (ignored without
    /// coupling).
    pub(crate) fn solve(&self, g: &[[f64; 2]], c: &[f64], r: Option<&[f64]>) -> Vec<[f64; 2]> {
        let s = self.structure;
        let Some(matrix) = &self.matrix else {
            return g
                .iter()
                .zip(&self.inv)
                .map(|(gf, k)| {
                    let d = k.mul(*gf);
                    [-d[0], -d[1]]
                })
                .collect();
        };
        let bs = if self.coupling.is_some() { 2 } else { 1 };
        let nu = bs - 1;
        let var = |v: usize, slot: usize| s.position[v] * bs + slot;

        let mut rhs = vec![0.0; matrix.dim()];
        for v in 0..s.vertex_count {
            rhs[var(v, nu)] = -c[v];
            if self.coupling.is_some() {
                rhs[var(v, 0)] = r.map_or(0.0, |r| r[v]);
            }
        }
        for (f, verts) in s.face_vertices.iter().enumerate() {
            let kg = self.inv[f].mul(g[f]);
            for p in 0..3 {
                rhs[var(verts[p], nu)] -= dot2(BASIS[p], kg);
                if let Some((jac, _)) = self.coupling {
                    rhs[var(verts[p], 0)] -= dot2(jac[f][p], kg);
                }
            }
        }
        for v in 0..s.vertex_count {
            if s.pinned[v] {
                rhs[var(v, nu)] = 0.0;
            }
        }
        matrix.solve_in_place(&mut rhs);

        s.face_vertices
            .iter()
            .enumerate()
            .map(|(f, verts)| {
                let mut w = g[f];
                for p in 0..3 {
                    let nu_p = rhs[var(verts[p], nu)];
                    w[0] += BASIS[p][0] * nu_p;
                    w[1] += BASIS[p][1] * nu_p;
                    if let Some((jac, _)) = self.coupling {
                        let t = rhs[var(verts[p], 0)];
                        w[0] += jac[f][p][0] * t;
                        w[1] += jac[f][p][1] * t;
                    }
                }
                let d = self.inv[f].mul(w);
                [-d[0], -d[1]]
            })
            .collect()
    }
}

/// Project `gradient` (full angle space) onto the null space of the face
/// and vertex rows and return the largest component of the projection.
pub(crate) fn projected_gradient_norm(structure: &KktStructure, gradient: &[f64]) -> Result<f64> {
    let g: Vec<[f64; 2]> = gradient
        .chunks_exact(3)
        .map(|c| reduce([c[0], c[1], c[2]]))
        .collect();
    let q = vec![Sym2::IDENTITY; structure.face_count()];
    let factor = structure.factor(&q, None)?;
    let zeros = vec![0.0; structure.vertex_count];
    let step = factor.solve(&g, &zeros, None);
    Ok(step
        .iter()
        .flat_map(|y| expand(*y))
        .fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Re-impose exact face sums after accumulated rounding.
pub(crate) fn renormalize_faces(x: &mut [f64]) {
    for face in x.chunks_exact_mut(3) {
        let err = (face[0] + face[1] + face[2] - PI) / 3.0;
        for a in face.iter_mut() {
            *a -= err;
        }
    }
}
