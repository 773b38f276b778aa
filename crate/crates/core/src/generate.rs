//! Test meshes: structured grids over planar regions, optionally with
//! interior vertices jittered, plus a few tiny fixed examples.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{signed_area, EmbeddedMesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshKind {
    /// `n × n` cells on the unit square, each split along one diagonal.
    Square,
    /// Unit square grid with a square hole in the middle third.
    Annulus,
    /// Unit square grid with three rectangular holes.
    Plate3,
    /// Unit square grid with notches cut from the top and bottom middle.
    HShape,
    /// Unit square grid without its upper right quadrant.
    LShape,
    /// Eight vertices around a square hole.
    Annulus8,
    /// Unit square split into four triangles around its center.
    Fan,
    /// Parallelogram of `n × n` equilateral triangle pairs.
    Equilateral,
}

impl MeshKind {
    pub const ALL: [MeshKind; 8] = [
        MeshKind::Square,
        MeshKind::Annulus,
        MeshKind::Plate3,
        MeshKind::HShape,
        MeshKind::LShape,
        MeshKind::Annulus8,
        MeshKind::Fan,
        MeshKind::Equilateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshKind::Square => "square",
            MeshKind::Annulus => "annulus",
            MeshKind::Plate3 => "plate3",
            MeshKind::HShape => "h-shape",
            MeshKind::LShape => "l-shape",
            MeshKind::Annulus8 => "annulus8",
            MeshKind::Fan => "fan",
            MeshKind::Equilateral => "equilateral",
        }
    }
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeshKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mesh kind {s:?}")))
    }
}

type Rect = [f64; 4];

const PLATE_HOLES: [Rect; 3] = [
    [0.15, 0.35, 0.2, 0.45],
    [0.55, 0.8, 0.15, 0.35],
    [0.4, 0.7, 0.6, 0.85],
];

fn inside(r: &Rect, x: f64, y: f64) -> bool {
    x >= r[0] && x < r[1] && y >= r[2] && y < r[3]
}

/// Generate a mesh. `n` is the grid resolution (ignored by the fixed
/// kinds); `jitter` moves each interior vertex uniformly within a disc of
/// radius `jitter · h`, where `h` is the grid spacing.
pub fn generate(kind: MeshKind, n: usize, jitter: f64, seed: u64) -> Result<EmbeddedMesh> {
    if !(0.0..=0.5).contains(&jitter) {
        return Err(Error::Config(format!("jitter must lie in [0, 0.5], got {jitter}")));
    }
    let keep: Box<dyn Fn(f64, f64) -> bool> = match kind {
        MeshKind::Square => Box::new(|_, _| true),
        MeshKind::Annulus => Box::new(|x, y| !inside(&[1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0], x, y)),
        MeshKind::Plate3 => Box::new(|x, y| !PLATE_HOLES.iter().any(|r| inside(r, x, y))),
        MeshKind::HShape => Box::new(|x, y| !((1.0 / 3.0..2.0 / 3.0).contains(&x) && !(1.0 / 3.0..2.0 / 3.0).contains(&y))),
        MeshKind::LShape => Box::new(|x, y| !(x >= 0.5 && y >= 0.5)),
        MeshKind::Annulus8 => return Ok(annulus8()),
        MeshKind::Fan => return Ok(fan()),
        MeshKind::Equilateral => return equilateral(n),
    };
    if n < 3 {
        return Err(Error::Config(format!("grid resolution must be at least 3, got {n}")));
    }
    let mesh = grid_region(n, keep.as_ref())?;
    Ok(jitter_interior(&mesh, jitter / n as f64, seed))
}

fn grid_region(n: usize, keep: &dyn Fn(f64, f64) -> bool) -> Result<EmbeddedMesh> {
    let h = 1.0 / n as f64;
    let kept = |i: usize, j: usize| keep((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
    let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut coords = Vec::new();
    let id = |i: usize, j: usize| j * (n + 1) + i;
    for j in 0..=n {
        for i in 0..=n {
            let used = (i.saturating_sub(1)..=i.min(n - 1))
                .any(|ci| (j.saturating_sub(1)..=j.min(n - 1)).any(|cj| kept(ci, cj)));
            if used {
                index[id(i, j)] = coords.len();
                coords.push(Point::new(i as f64 * h, j as f64 * h));
            }
        }
    }
    let mut faces = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if !kept(i, j) {
                continue;
            }
            let [v00, v10, v11, v01] = [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)].map(|k| index[k]);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    EmbeddedMesh::from_faces(coords, faces)
}

/// Move interior vertices in index order, redrawing any displacement that
/// would flip or flatten an incident face.
fn jitter_interior(mesh: &EmbeddedMesh, radius: f64, seed: u64) -> EmbeddedMesh {
    if radius == 0.0 {
        return mesh.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = mesh.topology();
    let mut coords = mesh.coords().to_vec();
    let min_area = 1e-3 * radius * radius;
    for v in 0..topo.vertex_count() {
        if !topo.is_interior(v) {
            continue;
        }
        let origin = coords[v];
        for _ in 0..100 {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = 2.0 * PI * rng.gen::<f64>();
            coords[v] = origin + Point::new(r * t.cos(), r * t.sin());
            let ok = topo.incident_corners(v).iter().all(|&(f, _)| {
                let [a, b, c] = topo.face(f).map(|w| coords[w]);
                signed_area(a, b, c) > min_area
            });
            if ok {
                break;
            }
            coords[v] = origin;
        }
    }
    mesh.with_coords(coords).expect("coordinate count unchanged")
}

fn annulus8() -> EmbeddedMesh {
    let pts = [
        (-1.5, -1.5),
        (1.5, -1.5),
        (1.5, 1.5),
        (-1.5, 1.5),
        (-0.5, -0.5),
        (0.5, -0.5),
        (0.5, 0.5),
        (-0.5, 0.5),
    ];
    let mut faces = Vec::new();
    for k in 0..4 {
        let (o0, o1) = (k, (k + 1) % 4);
        let (i0, i1) = (4 + k, 4 + (k + 1) % 4);
        faces.push([o0, o1, i1]);
        faces.push([o0, i1, i0]);
    }
    let coords = pts.iter().map(|&(x, y)| Point::new(x, y)).collect();
    EmbeddedMesh::from_faces(coords, faces).expect("fixed mesh is valid")
}

fn fan() -> EmbeddedMesh {
    let coords = vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
        Point::new(0.5, 0.5),
    ];
    let faces = (0..4).map(|k| [k, (k + 1) % 4, 4]).collect();
    EmbeddedMesh::from_faces(coords, faces).expect("fixed mesh is valid")
}

fn equilateral(n: usize) -> Result<EmbeddedMesh> {
    if n < 1 {
        return Err(Error::Config("equilateral patch needs n >= 1".into()));
    }
    let s = 3f64.sqrt() / 2.0;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut coords = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            coords.push(Point::new(i as f64 + 0.5 * j as f64, s * j as f64));
        }
    }
    let mut faces = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            faces.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    EmbeddedMesh::from_faces(coords, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::euler_characteristic;

    #[test]
    fn boundary_counts() {
        let cases = [
            (MeshKind::Square, 1),
            (MeshKind::Annulus, 2),
            (MeshKind::Plate3, 4),
            (MeshKind::HShape, 1),
            (MeshKind::LShape, 1),
            (MeshKind::Annulus8, 2),
            (MeshKind::Fan, 1),
            (MeshKind::Equilateral, 1),
        ];
        for (kind, loops) in cases {
            let m = generate(kind, 12, 0.0, 0).unwrap();
            let t = m.topology();
            assert_eq!(t.boundary_loops().len(), loops, "{kind}");
            assert_eq!(euler_characteristic(t), 2 - loops as i64, "{kind}");
            m.check_planar_region().unwrap();
        }
    }

    #[test]
    fn jitter_moves_only_interior_vertices() {
        let base = generate(MeshKind::Square, 6, 0.0, 0).unwrap();
        let m = generate(MeshKind::Square, 6, 0.3, 7).unwrap();
        let t = m.topology();
        for v in 0..t.vertex_count() {
            let d = m.point(v).distance(base.point(v));
            if t.is_boundary(v) {
                assert_eq!(d, 0.0);
            } else {
                assert!(d <= 0.3 / 6.0 + 1e-15);
            }
        }
        m.check_orientation().unwrap();
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let a = generate(MeshKind::Plate3, 15, 0.3, 42).unwrap();
        let b = generate(MeshKind::Plate3, 15, 0.3, 42).unwrap();
        assert_eq!(a.coords(), b.coords());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in MeshKind::ALL {
            assert_eq!(k.name().parse::<MeshKind>().unwrap(), k);
        }
    }
}
