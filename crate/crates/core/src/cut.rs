//! Cutting a multiply connected planar mesh into a topological disk.
//!
//! Every vertex is labeled with its nearest boundary component by a
//! multi-source Dijkstra on the edge-length weighted 1-skeleton. The
//! shortest path between two differently labeled components runs through
//! one mesh edge whose endpoints carry the two labels. Cutting along it
//! merges the two boundary loops; repeating `k - 1` times leaves a disk.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::mesh::{euler_characteristic, CutMap, EmbeddedMesh, MeshTopology};

/// Result of [`label_nearest_component`].
#[derive(Debug, Clone, PartialEq)]
pub struct NearestComponents {
    /// Index into [`MeshTopology::boundary_loops`].
    pub labels: Vec<usize>,
    pub dists: Vec<f64>,
    /// Next vertex toward the labeled boundary; boundary vertices point to
    /// themselves.
    pub preds: Vec<usize>,
}

/// A shortest path joining two boundary components.
#[derive(Debug, Clone, PartialEq)]
pub struct Bridge {
    pub from: usize,
    pub to: usize,
    pub length: f64,
    /// Starts on component `from`, ends on component `to`.
    pub path: Vec<usize>,
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    label: usize,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap pops the maximum.
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.label.cmp(&self.label))
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn label_nearest_component(mesh: &EmbeddedMesh) -> Result<NearestComponents> {
    let topo = mesh.topology();
    let n = topo.vertex_count();
    if topo.boundary_loops().is_empty() {
        return Err(Error::Precondition("mesh has no boundary".into()));
    }
    let adj = topo.vertex_neighbors();
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![f64::INFINITY; n];
    let mut preds = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for (k, lp) in topo.boundary_loops().iter().enumerate() {
        for &v in lp {
            labels[v] = k;
            dists[v] = 0.0;
            preds[v] = v;
            heap.push(HeapEntry {
                dist: 0.0,
                label: k,
                vertex: v,
            });
        }
    }
    while let Some(HeapEntry { dist, label, vertex }) = heap.pop() {
        if dist > dists[vertex] || label != labels[vertex] {
            continue;
        }
        for &w in &adj[vertex] {
            let nd = dist + mesh.point(vertex).distance(mesh.point(w));
            if nd < dists[w] || (nd == dists[w] && label < labels[w]) {
                dists[w] = nd;
                labels[w] = label;
                preds[w] = vertex;
                heap.push(HeapEntry {
                    dist: nd,
                    label,
                    vertex: w,
                });
            }
        }
    }
    if labels.contains(&usize::MAX) {
        return Err(Error::Disconnected);
    }
    Ok(NearestComponents { labels, dists, preds })
}

fn chain_to_boundary(preds: &[usize], mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while preds[v] != v {
        v = preds[v];
        out.push(v);
    }
    out
}

/// The cheapest path between two different components, through one
/// bridging edge.
pub fn shortest_bridge_path(nearest: &NearestComponents, mesh: &EmbeddedMesh) -> Result<Bridge> {
    let labels = &nearest.labels;
    let components = labels.iter().copied().max().map_or(0, |m| m + 1);
    if components < 2 {
        return Err(Error::Precondition("need at least two boundary components".into()));
    }
    let mut best: Option<(f64, usize, usize, usize, usize)> = None;
    for &[a, b] in mesh.topology().edges() {
        if labels[a] == labels[b] {
            continue;
        }
        let (u, v) = if labels[a] < labels[b] { (a, b) } else { (b, a) };
        let cost = nearest.dists[u] + mesh.point(u).distance(mesh.point(v)) + nearest.dists[v];
        let key = (cost, labels[u], labels[v], u, v);
        let better = match best {
            None => true,
            Some(cur) => key.0.total_cmp(&cur.0).then((key.1, key.2, key.3, key.4).cmp(&(cur.1, cur.2, cur.3, cur.4))) == Ordering::Less,
        };
        if better {
            best = Some(key);
        }
    }
    let (length, from, to, u, v) =
        best.ok_or_else(|| Error::Topology("no edge joins two boundary components".into()))?;
    let mut path = chain_to_boundary(&nearest.preds, u);
    path.reverse();
    path.extend(chain_to_boundary(&nearest.preds, v));
    Ok(Bridge { from, to, length, path })
}

/// `(a, b)` such that face `f` reads `(v, a, b)` counterclockwise.
fn around(topo: &MeshTopology, f: usize, v: usize) -> (usize, usize) {
    let face = topo.face(f);
    let c = face.iter().position(|&x| x == v).expect("face contains vertex");
    (face[(c + 1) % 3], face[(c + 2) % 3])
}

/// Faces around `path[t]` on the left of the directed path.
fn left_faces(topo: &MeshTopology, path: &[usize], t: usize) -> Result<Vec<usize>> {
    let v = path[t];
    let m = path.len() - 1;
    let limit = topo.incident_corners(v).len();
    let mut out = Vec::new();
    if t < m {
        let mut f = topo
            .face_with_half_edge(v, path[t + 1])
            .ok_or_else(|| Error::Precondition(format!("path edge {v}-{} has no face on its left", path[t + 1])))?;
        loop {
            out.push(f);
            let (_, b) = around(topo, f, v);
            if t > 0 && b == path[t - 1] {
                break;
            }
            match topo.face_with_half_edge(v, b) {
                Some(g) => f = g,
                None if t == 0 => break,
                None => return Err(Error::Precondition(format!("path vertex {v} reached the boundary"))),
            }
            if out.len() > limit {
                return Err(Error::Precondition(format!("path does not separate faces around {v}")));
            }
        }
    } else {
        let mut f = topo
            .face_with_half_edge(path[m - 1], v)
            .ok_or_else(|| Error::Precondition(format!("path edge {}-{v} has no face on its left", path[m - 1])))?;
        loop {
            out.push(f);
            let (a, _) = around(topo, f, v);
            match topo.face_with_half_edge(a, v) {
                Some(g) => f = g,
                None => break,
            }
            if out.len() > limit {
                return Err(Error::Precondition(format!("path does not separate faces around {v}")));
            }
        }
    }
    Ok(out)
}

fn check_path(topo: &MeshTopology, path: &[usize]) -> Result<()> {
    if path.len() < 2 {
        return Err(Error::Precondition("cut path needs at least two vertices".into()));
    }
    let mut seen = vec![false; topo.vertex_count()];
    for &v in path {
        if v >= topo.vertex_count() {
            return Err(Error::Precondition(format!("path vertex {v} out of range")));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::Precondition(format!("path visits vertex {v} twice")));
        }
    }
    for w in path.windows(2) {
        let e = [w[0].min(w[1]), w[0].max(w[1])];
        if topo.edges().binary_search(&e).is_err() {
            return Err(Error::Precondition(format!("{}-{} is not a mesh edge", w[0], w[1])));
        }
    }
    let loop_of = |v: usize| topo.boundary_loops().iter().position(|l| l.contains(&v));
    let (start, end) = (path[0], path[path.len() - 1]);
    match (loop_of(start), loop_of(end)) {
        (Some(i), Some(j)) if i != j => {}
        _ => {
            return Err(Error::Precondition(
                "cut path must join two distinct boundary components".into(),
            ))
        }
    }
    if let Some(&v) = path[1..path.len() - 1].iter().find(|&&v| topo.is_boundary(v)) {
        return Err(Error::Precondition(format!("cut path touches the boundary at {v}")));
    }
    Ok(())
}

/// Duplicate every vertex of `path` and reattach the faces on its left to
/// the copies, appended after the existing vertices.
pub fn cut_along_path(mesh: &EmbeddedMesh, path: &[usize]) -> Result<(EmbeddedMesh, CutMap)> {
    let topo = mesh.topology();
    check_path(topo, path)?;
    let n = topo.vertex_count();
    let mut faces = topo.faces().to_vec();
    for t in 0..path.len() {
        for f in left_faces(topo, path, t)? {
            for v in faces[f].iter_mut() {
                if *v == path[t] {
                    *v = n + t;
                }
            }
        }
    }
    let mut coords = mesh.coords().to_vec();
    coords.extend(path.iter().map(|&v| mesh.point(v)));
    let mut origin: Vec<usize> = (0..n).collect();
    origin.extend_from_slice(path);
    let cut = EmbeddedMesh::from_faces(coords, faces)?;
    Ok((cut, CutMap::from_origins(origin, n)))
}

/// A disk-shaped cut of a planar mesh.
#[derive(Debug, Clone)]
pub struct DiskCut {
    pub mesh: EmbeddedMesh,
    pub map: CutMap,
    /// Cut paths in original vertex indices, in cutting order.
    pub paths: Vec<Vec<usize>>,
}

/// Cut along shortest bridges until a single boundary loop remains.
pub fn cut_to_disk(mesh: &EmbeddedMesh) -> Result<DiskCut> {
    let mut current = mesh.clone();
    let mut map = CutMap::identity(mesh.topology().vertex_count());
    let mut paths = Vec::new();
    while current.topology().boundary_loops().len() > 1 {
        let nearest = label_nearest_component(&current)?;
        let bridge = shortest_bridge_path(&nearest, &current)?;
        let chi = euler_characteristic(current.topology());
        let (next, step) = cut_along_path(&current, &bridge.path)?;
        if euler_characteristic(next.topology()) != chi + 1 {
            return Err(Error::Topology("cut did not raise the Euler characteristic by one".into()));
        }
        paths.push(bridge.path.iter().map(|&v| map.origin(v)).collect());
        log::debug!("cut {} joins boundary components {} and {}", paths.len(), bridge.from, bridge.to);
        map = map.then(&step);
        current = next;
    }
    Ok(DiskCut {
        mesh: current,
        map,
        paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point;

    /// Unit-square hole inside a 3×3 square; 8 vertices, 8 faces.
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
        EmbeddedMesh::from_faces(coords, faces).unwrap()
    }

    #[test]
    fn disk_is_left_alone() {
        let m = EmbeddedMesh::from_faces(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let nearest = label_nearest_component(&m).unwrap();
        assert_eq!(nearest.labels, vec![0; 3]);
        assert_eq!(nearest.preds, vec![0, 1, 2]);
        let cut = cut_to_disk(&m).unwrap();
        assert!(cut.map.is_identity());
        assert!(cut.paths.is_empty());
    }

    #[test]
    fn annulus_radial_cut_counts() {
        let m = annulus8();
        assert_eq!(euler_characteristic(m.topology()), 0);
        let (cut, map) = cut_along_path(&m, &[0, 4]).unwrap();
        let t = cut.topology();
        assert_eq!((t.vertex_count(), t.edge_count(), t.face_count()), (10, 17, 8));
        assert_eq!(euler_characteristic(t), 1);
        assert_eq!(t.boundary_loops().len(), 1);
        assert_eq!(map.origin(8), 0);
        assert_eq!(map.origin(9), 4);
        assert_eq!(cut.point(8), cut.point(0));
    }

    #[test]
    fn annulus_cut_to_disk() {
        let cut = cut_to_disk(&annulus8()).unwrap();
        assert_eq!(cut.paths.len(), 1);
        assert_eq!(cut.paths[0].len(), 2);
        assert_eq!(euler_characteristic(cut.mesh.topology()), 1);
    }

    #[test]
    fn path_must_join_distinct_components() {
        let m = annulus8();
        assert!(cut_along_path(&m, &[0, 1]).is_err());
        assert!(cut_along_path(&m, &[0, 5, 4]).is_err());
    }
}
