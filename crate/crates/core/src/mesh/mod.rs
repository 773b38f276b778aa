//! Mesh combinatorics and planar embeddings.

mod io;
mod point;

use std::collections::BTreeMap;

pub use io::{parse_node_ele, parse_node_ele_with_meta, parse_off, write_node_ele, write_off, NodeEleMeta};
pub use point::{signed_area, Point};

use crate::error::{Error, Result};

/// Combinatorial structure of a triangle mesh.
///
/// Faces are ordered vertex triples. Edges, boundary loops and incidence
/// lists are derived once at construction and never change afterwards.
#[derive(Debug, Clone)]
pub struct MeshTopology {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<u8>,
    boundary_loops: Vec<Vec<usize>>,
    interior: Vec<bool>,
    /// (face, corner) pairs per vertex, ascending by face.
    incident: Vec<Vec<(usize, usize)>>,
    /// Directed edge -> face containing it in its stored order.
    half_edges: BTreeMap<(usize, usize), usize>,
    isolated: Vec<usize>,
}

impl MeshTopology {
    /// Derive edges, boundary loops and interior flags from a face list.
    ///
    /// Isolated vertices are kept and listed in [`MeshTopology::isolated_vertices`].
    pub fn build(faces: Vec<[usize; 3]>, vertex_count: usize) -> Result<Self> {
        let mut incident = vec![Vec::new(); vertex_count];
        let mut edge_map: BTreeMap<[usize; 2], u8> = BTreeMap::new();
        let mut half_edges = BTreeMap::new();

        for (f, face) in faces.iter().enumerate() {
            for c in 0..3 {
                let v = face[c];
                if v >= vertex_count {
                    return Err(Error::IndexOutOfRange {
                        face: f,
                        index: v,
                        count: vertex_count,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::Topology(format!(
                    "face {f} repeats a vertex: {face:?}"
                )));
            }
            for c in 0..3 {
                let (a, b) = (face[c], face[(c + 1) % 3]);
                incident[a].push((f, c));
                *edge_map.entry(sorted_pair(a, b)).or_insert(0) += 1;
                half_edges.insert((a, b), f);
            }
        }

        let mut edges = Vec::with_capacity(edge_map.len());
        let mut edge_faces = Vec::with_capacity(edge_map.len());
        let mut boundary_adj: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for (&e, &count) in &edge_map {
            if count > 2 {
                return Err(Error::NonManifold(format!(
                    "edge ({}, {}) is shared by {count} faces",
                    e[0], e[1]
                )));
            }
            if count == 1 {
                boundary_adj[e[0]].push(e[1]);
                boundary_adj[e[1]].push(e[0]);
            }
            edges.push(e);
            edge_faces.push(count);
        }

        let mut interior = vec![true; vertex_count];
        let mut isolated = Vec::new();
        for v in 0..vertex_count {
            if incident[v].is_empty() {
                log::warn!("vertex {v} is not referenced by any face");
                isolated.push(v);
                interior[v] = false;
                continue;
            }
            match boundary_adj[v].len() {
                0 => {}
                2 => interior[v] = false,
                n => {
                    return Err(Error::NonManifold(format!(
                        "vertex {v} touches {n} boundary edges"
                    )))
                }
            }
        }

        let boundary_loops = trace_boundary_loops(&boundary_adj, &half_edges)?;

        Ok(Self {
            vertex_count,
            faces,
            edges,
            edge_faces,
            boundary_loops,
            interior,
            incident,
            half_edges,
            isolated,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    /// Undirected edges as sorted pairs, in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Number of faces bordering each entry of [`MeshTopology::edges`].
    pub fn edge_face_counts(&self) -> &[u8] {
        &self.edge_faces
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        !self.interior[v] && !self.incident[v].is_empty()
    }

    pub fn interior_flags(&self) -> &[bool] {
        &self.interior
    }

    /// `(face, corner)` pairs at which `v` appears, ascending by face.
    pub fn incident_corners(&self, v: usize) -> &[(usize, usize)] {
        &self.incident[v]
    }

    pub fn isolated_vertices(&self) -> &[usize] {
        &self.isolated
    }

    /// Face whose stored vertex order contains the directed edge `a -> b`.
    pub fn face_with_half_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.half_edges.get(&(a, b)).copied()
    }

    /// Vertex-to-vertex adjacency along mesh edges, each list ascending.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Faces sharing an edge with `f`, ascending.
    pub fn face_neighbors(&self, f: usize) -> Vec<usize> {
        let face = self.faces[f];
        let mut out: Vec<usize> = (0..3)
            .filter_map(|c| self.face_with_half_edge(face[(c + 1) % 3], face[c]))
            .filter(|&g| g != f)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of connected components of the face-vertex incidence graph,
    /// ignoring isolated vertices.
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.vertex_count];
        let adj = self.vertex_neighbors();
        let mut count = 0;
        for start in 0..self.vertex_count {
            if seen[start] || self.incident[start].is_empty() {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Walk the boundary graph into loops. Each loop starts at its smallest
/// vertex and follows the direction of the face that owns its first edge.
fn trace_boundary_loops(
    boundary_adj: &[Vec<usize>],
    half_edges: &BTreeMap<(usize, usize), usize>,
) -> Result<Vec<Vec<usize>>> {
    let n = boundary_adj.len();
    let mut visited = vec![false; n];
    let mut loops = Vec::new();
    for start in 0..n {
        if visited[start] || boundary_adj[start].is_empty() {
            continue;
        }
        let (a, b) = (boundary_adj[start][0], boundary_adj[start][1]);
        // Boundary half-edges have no twin; pick the neighbor reached by one.
        let next = if half_edges.contains_key(&(start, a)) {
            a
        } else {
            b
        };
        let mut walk = vec![start];
        visited[start] = true;
        let (mut prev, mut cur) = (start, next);
        while cur != start {
            if visited[cur] {
                return Err(Error::NonManifold(format!(
                    "boundary walk revisits vertex {cur}"
                )));
            }
            visited[cur] = true;
            walk.push(cur);
            let nbrs = &boundary_adj[cur];
            let step = if nbrs[0] != prev { nbrs[0] } else { nbrs[1] };
            prev = cur;
            cur = step;
        }
        loops.push(walk);
    }
    Ok(loops)
}

/// `|V| - |E| + |F|`.
pub fn euler_characteristic(topo: &MeshTopology) -> i64 {
    topo.vertex_count() as i64 - topo.edge_count() as i64 + topo.face_count() as i64
}

/// Topology plus planar coordinates.
#[derive(Debug, Clone)]
pub struct EmbeddedMesh {
    topology: MeshTopology,
    coords: Vec<Point>,
}

impl EmbeddedMesh {
    pub fn new(topology: MeshTopology, coords: Vec<Point>) -> Result<Self> {
        if coords.len() != topology.vertex_count() {
            return Err(Error::Format(format!(
                "{} coordinates for {} vertices",
                coords.len(),
                topology.vertex_count()
            )));
        }
        Ok(Self { topology, coords })
    }

    /// Build topology from raw faces and wrap it with coordinates.
    pub fn from_faces(coords: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let topology = MeshTopology::build(faces, coords.len())?;
        Self::new(topology, coords)
    }

    pub fn topology(&self) -> &MeshTopology {
        &self.topology
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn point(&self, v: usize) -> Point {
        self.coords[v]
    }

    pub fn face_points(&self, f: usize) -> [Point; 3] {
        let [a, b, c] = self.topology.face(f);
        [self.coords[a], self.coords[b], self.coords[c]]
    }

    pub fn signed_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_points(f);
        signed_area(a, b, c)
    }

    /// Replace the coordinates, keeping the combinatorics.
    pub fn with_coords(&self, coords: Vec<Point>) -> Result<Self> {
        Self::new(self.topology.clone(), coords)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bbox(&self) -> (Point, Point) {
        bbox(&self.coords)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Area below which a face counts as degenerate: `1e-14 · diag²`.
    pub fn degeneracy_threshold(&self) -> f64 {
        let d = self.bbox_diagonal();
        1e-14 * d * d
    }

    /// Reject meshes whose faces are not all strictly counterclockwise.
    pub fn check_orientation(&self) -> Result<()> {
        let eps = self.degeneracy_threshold();
        for f in 0..self.topology.face_count() {
            let area = self.signed_area(f);
            if area <= eps {
                return Err(Error::Degenerate { face: f, area });
            }
        }
        Ok(())
    }

    /// Check the assumptions of the improvement pipeline: a single connected
    /// planar region, no isolated vertices, and `χ = 2 - b`.
    pub fn check_planar_region(&self) -> Result<()> {
        let topo = &self.topology;
        if topo.face_count() == 0 {
            return Err(Error::Topology("mesh has no faces".into()));
        }
        if let Some(&v) = topo.isolated_vertices().first() {
            return Err(Error::Topology(format!("vertex {v} is isolated")));
        }
        if topo.connected_components() != 1 {
            return Err(Error::Disconnected);
        }
        let b = topo.boundary_loops().len() as i64;
        if b == 0 {
            return Err(Error::Topology("mesh has no boundary".into()));
        }
        let chi = euler_characteristic(topo);
        if chi != 2 - b {
            return Err(Error::Topology(format!(
                "Euler characteristic {chi} does not match a planar region with {b} boundary loops"
            )));
        }
        Ok(())
    }
}

pub(crate) fn bbox(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Permute every clockwise face so that its signed area is positive.
///
/// The first vertex of each face is kept; only the other two are swapped.
pub fn normalize_orientation(mesh: &EmbeddedMesh) -> Result<EmbeddedMesh> {
    let eps = mesh.degeneracy_threshold();
    let mut faces = mesh.topology.faces().to_vec();
    for (f, face) in faces.iter_mut().enumerate() {
        let area = mesh.signed_area(f);
        if area.abs() <= eps {
            return Err(Error::Degenerate { face: f, area });
        }
        if area < 0.0 {
            face.swap(1, 2);
        }
    }
    EmbeddedMesh::from_faces(mesh.coords.clone(), faces)
}

/// Maps each vertex of a cut mesh to the vertex of the original mesh it
/// was copied from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutMap {
    origin: Vec<usize>,
    original_count: usize,
}

impl CutMap {
    pub fn identity(n: usize) -> Self {
        Self {
            origin: (0..n).collect(),
            original_count: n,
        }
    }

    pub fn from_origins(origin: Vec<usize>, original_count: usize) -> Self {
        Self {
            origin,
            original_count,
        }
    }

    pub fn origin(&self, v: usize) -> usize {
        self.origin[v]
    }

    pub fn origins(&self) -> &[usize] {
        &self.origin
    }

    pub fn original_count(&self) -> usize {
        self.original_count
    }

    pub fn is_identity(&self) -> bool {
        self.origin.len() == self.original_count
            && self.origin.iter().enumerate().all(|(i, &o)| i == o)
    }

    /// Compose with a map from a further cut: `later` maps the newest mesh
    /// onto the mesh this map starts from.
    pub fn then(&self, later: &CutMap) -> CutMap {
        CutMap {
            origin: later.origin.iter().map(|&v| self.origin[v]).collect(),
            original_count: self.original_count,
        }
    }

    /// Copies of each original vertex, ascending.
    pub fn copies(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.original_count];
        for (v, &o) in self.origin.iter().enumerate() {
            out[o].push(v);
        }
        out
    }
}
