#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use anglemesh::angles::{holonomies, AngleStructure, ConstraintSpec};
use anglemesh::energy::{energy_d, LinearConstraints};
use anglemesh::generate::{generate, MeshKind};
use anglemesh::mesh::{EmbeddedMesh, MeshTopology, Point};
use rand::Rng;

pub const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

/// `ln(sin s / s)`, smooth on `[0, π/2]`.
fn log_sinc(s: f64) -> f64 {
    if s < 1e-4 {
        let s2 = s * s;
        -s2 / 6.0 - s2 * s2 / 180.0
    } else {
        (s.sin() / s).ln()
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `∫ₐᵇ ln(2 sin s) ds` for `0 ≤ a ≤ b ≤ π/2`, with the logarithmic
/// singularity at 0 integrated in closed form.
fn log_two_sin_integral(a: f64, b: f64) -> f64 {
    let primitive = |s: f64| if s == 0.0 { 0.0 } else { s * (2.0 * s).ln() - s };
    primitive(b) - primitive(a) + integrate(&log_sinc, a, b, 1e-15)
}

/// `Λ(x) = -∫₀ˣ ln|2 sin t| dt` on `[0, π]` by adaptive quadrature.
pub fn lob_oracle(x: f64) -> f64 {
    assert!((0.0..=PI).contains(&x));
    if x <= FRAC_PI_2 {
        -log_two_sin_integral(0.0, x)
    } else {
        // On [π/2, x] substitute s = π - t.
        -(log_two_sin_integral(0.0, FRAC_PI_2) + log_two_sin_integral(PI - x, FRAC_PI_2))
    }
}

pub fn mesh(kind: MeshKind, n: usize, jitter: f64, seed: u64) -> EmbeddedMesh {
    generate(kind, n, jitter, seed).unwrap()
}

/// The small meshes used for derivative checks: a disk with one interior
/// vertex, a jittered grid, and an annulus.
pub fn small_topologies() -> Vec<(&'static str, EmbeddedMesh)> {
    vec![
        ("fan", mesh(MeshKind::Fan, 0, 0.0, 0)),
        ("square4", mesh(MeshKind::Square, 4, 0.3, 5)),
        ("annulus8", mesh(MeshKind::Annulus8, 0, 0.0, 0)),
    ]
}

/// Per face, three angles in roughly `[0.3, 1.9]` summing to π.
pub fn random_face_angles(rng: &mut impl Rng, faces: usize) -> AngleStructure {
    let mut out = Vec::with_capacity(3 * faces);
    for _ in 0..faces {
        let w: [f64; 3] = [rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)];
        let s: f64 = w.iter().sum();
        out.extend(w.iter().map(|x| x / s * PI));
    }
    AngleStructure::new(out).unwrap()
}

pub fn similarity(mesh: &EmbeddedMesh, theta: f64, scale: f64, shift: Point) -> EmbeddedMesh {
    let coords = mesh.coords().iter().map(|&p| p.rotate(theta) * scale + shift).collect();
    mesh.with_coords(coords).unwrap()
}

/// Orthonormal basis of the row space of the constraint matrix, by
/// modified Gram–Schmidt; dependent rows are dropped.
pub fn row_space_basis(lc: &LinearConstraints) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in lc.matrix.to_dense() {
        let mut v = row;
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Remove the row-space component of `v`.
pub fn project_tangent(basis: &[Vec<f64>], v: &mut [f64]) {
    for _ in 0..2 {
        for b in basis {
            let d = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Directed Hausdorff distance from the points of `a` to the polyline
/// segments of `b`, both given as closed loops.
pub fn loop_distance(a: &[Point], b: &[Point]) -> f64 {
    let seg = |p: Point, s: Point, t: Point| {
        let d = t - s;
        let len2 = d.dot(d);
        let u = if len2 > 0.0 { ((p - s).dot(d) / len2).clamp(0.0, 1.0) } else { 0.0 };
        p.distance(s + d * u)
    };
    a.iter()
        .map(|&p| {
            (0..b.len())
                .map(|i| seg(p, b[i], b[(i + 1) % b.len()]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the boundary polylines of two
/// meshes sharing a topology.
pub fn boundary_hausdorff(a: &EmbeddedMesh, b: &EmbeddedMesh) -> f64 {
    let mut worst: f64 = 0.0;
    for lp in a.topology().boundary_loops() {
        let pa: Vec<Point> = lp.iter().map(|&v| a.point(v)).collect();
        let pb: Vec<Point> = lp.iter().map(|&v| b.point(v)).collect();
        worst = worst.max(loop_distance(&pa, &pb)).max(loop_distance(&pb, &pa));
    }
    worst
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    max_abs(&diff) / max_abs(numeric).max(1.0)
}

pub fn perturbed(a: &AngleStructure, k: usize, h: f64) -> AngleStructure {
    let mut v = a.clone().into_vec();
    v[k] += h;
    AngleStructure::new(v).unwrap()
}

pub fn fd_gradient(f: &dyn Fn(&AngleStructure) -> f64, a: &AngleStructure, h: f64) -> Vec<f64> {
    (0..a.len())
        .map(|k| (f(&perturbed(a, k, h)) - f(&perturbed(a, k, -h))) / (2.0 * h))
        .collect()
}

/// Columns of the Hessian by central differences of an analytic gradient.
pub fn fd_hessian(grad: &dyn Fn(&AngleStructure) -> Vec<f64>, a: &AngleStructure, h: f64) -> Vec<Vec<f64>> {
    (0..a.len())
        .map(|k| {
            let (p, m) = (grad(&perturbed(a, k, h)), grad(&perturbed(a, k, -h)));
            p.iter().zip(&m).map(|(x, y)| (x - y) / (2.0 * h)).collect()
        })
        .collect()
}

pub fn dense_column(m: &anglemesh::sparse::SparseMatrix, k: usize) -> Vec<f64> {
    (0..m.nrows()).map(|r| m.get(r, k)).collect()
}

/// Exact Hessian of `𝓓`: the Gauss–Newton part plus `2 Σ rᵢ ∇²Hᵢ`, where
/// `∂² ln sin α / ∂α² = -1/sin²α`.
pub fn exact_defect_hessian_column(a: &AngleStructure, spec: &ConstraintSpec, topo: &MeshTopology, k: usize) -> Vec<f64> {
    let gn = energy_d(a, spec, topo).unwrap().hessian;
    let mut col = dense_column(&gn, k);
    let r: Vec<f64> = holonomies(a, topo)
        .unwrap()
        .iter()
        .zip(&spec.holonomy_target)
        .map(|(h, t)| h - t)
        .collect();
    let (f, c) = (k / 3, k % 3);
    let face = topo.face(f);
    let csc2 = 1.0 / a.get(f, c).sin().powi(2);
    // Corner c enters H at face[(c+1)%3] with + and at face[(c+2)%3] with -.
    col[k] += 2.0 * (r[face[(c + 1) % 3]] * -csc2 - r[face[(c + 2) % 3]] * -csc2);
    col
}
