mod common;

use std::f64::consts::PI;

use anglemesh::angles::{angle_sums, derive_targets, holonomies, induce_angles, AngleStructure};
use anglemesh::cut::{cut_along_path, cut_to_disk, label_nearest_component, shortest_bridge_path};
use anglemesh::generate::MeshKind;
use anglemesh::layout::layout_mesh;
use anglemesh::mesh::{
    euler_characteristic, normalize_orientation, parse_node_ele, parse_off, write_node_ele, write_off, EmbeddedMesh,
    NodeEleMeta, Point,
};
use anglemesh::quality::{aspect_ratio, quality_report};
use common::{mesh, random_face_angles, similarity};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GRID_KINDS: [MeshKind; 5] = [
    MeshKind::Square,
    MeshKind::Annulus,
    MeshKind::Plate3,
    MeshKind::HShape,
    MeshKind::LShape,
];

fn any_mesh() -> impl Strategy<Value = EmbeddedMesh> {
    (0..GRID_KINDS.len(), 3usize..10, 0.0f64..0.45, any::<u64>())
        .prop_map(|(k, n, jitter, seed)| mesh(GRID_KINDS[k], n, jitter, seed))
}

fn pins(m: &EmbeddedMesh) -> Vec<Option<Point>> {
    let t = m.topology();
    (0..t.vertex_count()).map(|v| t.is_boundary(v).then(|| m.point(v))).collect()
}

/// `(incoming, outgoing)` boundary edge lengths at every boundary vertex,
/// following the counterclockwise face orientation.
fn boundary_edge_lengths(m: &EmbeddedMesh) -> Vec<Option<(f64, f64)>> {
    let t = m.topology();
    let mut out: Vec<(Option<f64>, Option<f64>)> = vec![(None, None); t.vertex_count()];
    for face in t.faces() {
        for c in 0..3 {
            let (a, b) = (face[c], face[(c + 1) % 3]);
            if t.face_with_half_edge(b, a).is_none() {
                let len = m.point(a).distance(m.point(b));
                out[a].1 = Some(len);
                out[b].0 = Some(len);
            }
        }
    }
    out.into_iter().map(|(i, o)| i.zip(o)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn node_ele_and_off_round_trip(m in any_mesh(), base in 0usize..2) {
        let meta = NodeEleMeta { index_base: base, markers: None };
        let (node, ele) = write_node_ele(&m, &meta);
        let back = parse_node_ele(&node, &ele).unwrap();
        prop_assert_eq!(back.topology().faces(), m.topology().faces());
        let off = parse_off(&write_off(&m)).unwrap();
        prop_assert_eq!(off.topology().faces(), m.topology().faces());
        for v in 0..m.coords().len() {
            prop_assert!(back.point(v).distance(m.point(v)) <= 1e-12);
            prop_assert!(off.point(v).distance(m.point(v)) <= 1e-12);
        }
    }

    #[test]
    fn euler_characteristic_of_planar_regions(m in any_mesh()) {
        let t = m.topology();
        prop_assert_eq!(euler_characteristic(t), 2 - t.boundary_loops().len() as i64);
    }

    #[test]
    fn normalized_orientation_is_positive(m in any_mesh(), flips in proptest::collection::vec(any::<bool>(), 200)) {
        let faces: Vec<[usize; 3]> = m
            .topology()
            .faces()
            .iter()
            .enumerate()
            .map(|(f, &[a, b, c])| if flips[f % flips.len()] { [a, c, b] } else { [a, b, c] })
            .collect();
        let mixed = EmbeddedMesh::from_faces(m.coords().to_vec(), faces).unwrap();
        let fixed = normalize_orientation(&mixed).unwrap();
        let min = (0..fixed.topology().face_count()).map(|f| fixed.signed_area(f)).fold(f64::INFINITY, f64::min);
        prop_assert!(min > 0.0);
        prop_assert_eq!(fixed.topology().edges(), m.topology().edges());
    }

    #[test]
    fn angle_and_holonomy_sums(m in any_mesh(), seed in any::<u64>()) {
        let t = m.topology();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_face_angles(&mut rng, t.face_count());
        let total: f64 = a.as_slice().iter().sum();
        prop_assert!((total - PI * t.face_count() as f64).abs() <= 1e-10 * t.face_count() as f64);
        let h: f64 = holonomies(&a, t).unwrap().iter().sum();
        prop_assert!(h.abs() <= 1e-10);

        let spec = derive_targets(&m).unwrap();
        let theta: f64 = spec.theta.iter().sum();
        prop_assert!((theta - PI * t.face_count() as f64).abs() <= 1e-10 * t.face_count() as f64);
        prop_assert!(spec.holonomy_target.iter().sum::<f64>().abs() <= 1e-10);
    }

    #[test]
    fn induced_angles_are_similarity_invariant(
        m in any_mesh(),
        theta in -PI..PI,
        scale in 0.01f64..100.0,
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
    ) {
        let a = induce_angles(&m).unwrap();
        let b = induce_angles(&similarity(&m, theta, scale, Point::new(dx, dy))).unwrap();
        prop_assert!(a.max_abs_difference(&b) <= 1e-10);
    }

    #[test]
    fn boundary_holonomy_is_edge_log_ratio(m in any_mesh()) {
        let spec = derive_targets(&m).unwrap();
        let t = m.topology();
        for (v, lens) in boundary_edge_lengths(&m).into_iter().enumerate() {
            match lens {
                Some((incoming, outgoing)) => {
                    prop_assert!((spec.holonomy_target[v] - (outgoing / incoming).ln()).abs() <= 1e-9);
                }
                None => {
                    prop_assert!(t.is_interior(v));
                    prop_assert!(spec.holonomy_target[v].abs() <= 1e-9);
                    prop_assert!((spec.theta[v] - 2.0 * PI).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn aspect_ratio_is_similarity_invariant(
        pts in proptest::array::uniform6(-1.0f64..1.0),
        theta in -PI..PI,
        scale in 0.1f64..10.0,
        dx in -10.0f64..10.0,
        dy in -10.0f64..10.0,
    ) {
        let p = [Point::new(pts[0], pts[1]), Point::new(pts[2], pts[3]), Point::new(pts[4], pts[5])];
        let area = anglemesh::mesh::signed_area(p[0], p[1], p[2]).abs();
        prop_assume!(area > 1e-3);
        let q = p.map(|x| x.rotate(theta) * scale + Point::new(dx, dy));
        let r0 = aspect_ratio(p[0], p[1], p[2]).unwrap();
        let r1 = aspect_ratio(q[0], q[1], q[2]).unwrap();
        prop_assert!((r0 - r1).abs() <= 1e-12 * r0.max(1.0));
    }

    #[test]
    fn histograms_agree_with_extremes(m in any_mesh()) {
        let r = quality_report(&m);
        let h = &r.angle_histogram;
        prop_assert_eq!(h.total(), 3 * m.topology().face_count());
        prop_assert_eq!(r.aspect_histogram.total(), m.topology().face_count());
        let bin = h.lowest_occupied().unwrap();
        let width = (h.upper - h.lower) / h.counts.len() as f64;
        prop_assert!(r.min_angle >= h.lower + bin as f64 * width - 1e-12);
        prop_assert!(r.min_angle < h.lower + (bin + 1) as f64 * width + 1e-12);
    }

    #[test]
    fn layout_round_trip(m in any_mesh()) {
        let a = induce_angles(&m).unwrap();
        let out = layout_mesh(m.topology(), &a, &pins(&m)).unwrap();
        let scale = m.bbox_diagonal();
        prop_assert_eq!(out.unreached_count, 0);
        prop_assert!(out.max_conflict <= 1e-9 * scale);
        for v in 0..m.coords().len() {
            prop_assert!(out.coordinates[v].distance(m.point(v)) <= 1e-9 * scale);
        }
        prop_assert!(out.inverted_faces.is_empty());
    }
}

#[test]
fn equilateral_quality() {
    let m = mesh(MeshKind::Equilateral, 5, 0.0, 0);
    let r = quality_report(&m);
    assert!(r.face_aspect_ratio.iter().all(|x| (x - 1.0 / 3f64.sqrt()).abs() < 1e-12));
    let h = &r.angle_histogram;
    let occupied: Vec<usize> = (0..h.counts.len()).filter(|&i| h.counts[i] > 0).collect();
    assert_eq!(occupied.len(), 1);
    let width = PI / h.counts.len() as f64;
    let lo = occupied[0] as f64 * width;
    assert!(lo - 1e-12 <= PI / 3.0 && PI / 3.0 <= lo + width + 1e-12);
}

#[test]
fn one_based_and_zero_based_files_agree() {
    let node0 = "4 2 0 0\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n";
    let ele0 = "2 3 0\n0 0 1 2\n1 0 2 3\n";
    let node1 = "4 2 0 0\n1 0.0 0.0\n2 1 0\n3 1 1\n4 0 1\n";
    let ele1 = "2 3 0\n1 1 2 3\n2 1 3 4\n";
    let a = parse_node_ele(node0, ele0).unwrap();
    let b = parse_node_ele(node1, ele1).unwrap();
    assert_eq!(a.topology().faces(), b.topology().faces());
    assert_eq!(a.coords(), b.coords());
}

fn annulus_with_short_spoke() -> EmbeddedMesh {
    let m = mesh(MeshKind::Annulus8, 0, 0.0, 0);
    let mut coords = m.coords().to_vec();
    // Pull the outer corner 2 toward inner corner 6.
    coords[2] = Point::new(1.2, 1.2);
    m.with_coords(coords).unwrap()
}

#[test]
fn shortest_spoke_is_chosen() {
    let m = annulus_with_short_spoke();
    let nearest = label_nearest_component(&m).unwrap();
    let bridge = shortest_bridge_path(&nearest, &m).unwrap();
    let mut path = bridge.path.clone();
    path.sort();
    assert_eq!(path, vec![2, 6]);
    assert!((bridge.length - m.point(2).distance(m.point(6))).abs() < 1e-15);
}

#[test]
fn equal_bridges_break_ties_lexicographically() {
    let m = mesh(MeshKind::Annulus8, 0, 0.0, 0);
    let nearest = label_nearest_component(&m).unwrap();
    let bridge = shortest_bridge_path(&nearest, &m).unwrap();
    let mut path = bridge.path.clone();
    path.sort();
    // Four spokes of equal length; the one with the smallest endpoints wins.
    assert_eq!(path, vec![0, 4]);
    for &end in [bridge.path[0], *bridge.path.last().unwrap()].iter() {
        assert_eq!(nearest.dists[end], 0.0);
        assert_eq!(nearest.preds[end], end);
    }
}

/// Distances from one boundary loop by plain O(V²) Dijkstra.
fn distances_from(m: &EmbeddedMesh, sources: &[usize]) -> Vec<f64> {
    let adj = m.topology().vertex_neighbors();
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for &s in sources {
        dist[s] = 0.0;
    }
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&v| !done[v]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])) else {
            break;
        };
        done[u] = true;
        for &w in &adj[u] {
            dist[w] = dist[w].min(dist[u] + m.point(u).distance(m.point(w)));
        }
    }
    dist
}

#[test]
fn labels_follow_the_nearest_loop() {
    for m in [mesh(MeshKind::Annulus, 9, 0.3, 4), mesh(MeshKind::Plate3, 12, 0.2, 8), mesh(MeshKind::Annulus8, 0, 0.0, 0)] {
        let loops = m.topology().boundary_loops();
        let per_loop: Vec<Vec<f64>> = loops.iter().map(|lp| distances_from(&m, lp)).collect();
        let nearest = label_nearest_component(&m).unwrap();
        for v in 0..m.coords().len() {
            let best = per_loop.iter().map(|d| d[v]).fold(f64::INFINITY, f64::min);
            assert!((nearest.dists[v] - best).abs() <= 1e-12);
            assert!(per_loop[nearest.labels[v]][v] - best <= 1e-12);
            let rivals = per_loop.iter().filter(|d| d[v] - best <= 1e-12).count();
            if rivals == 1 {
                assert!(per_loop[nearest.labels[v]][v] == best);
            }
        }
        for (k, lp) in loops.iter().enumerate() {
            for &v in lp {
                assert_eq!((nearest.labels[v], nearest.dists[v], nearest.preds[v]), (k, 0.0, v));
            }
        }
    }
}

#[test]
fn cuts_raise_euler_characteristic_one_at_a_time() {
    for (kind, holes) in [(MeshKind::Annulus, 1), (MeshKind::Plate3, 3), (MeshKind::Annulus8, 1)] {
        let m = mesh(kind, 24, 0.3, 9);
        let disk = cut_to_disk(&m).unwrap();
        assert_eq!(disk.paths.len(), holes, "{kind}");
        assert_eq!(euler_characteristic(disk.mesh.topology()), 1);
        assert_eq!(disk.mesh.topology().boundary_loops().len(), 1);
        assert_eq!(disk.mesh.topology().face_count(), m.topology().face_count());

        // Replaying the recorded paths one by one.
        let mut current = m.clone();
        let mut map = anglemesh::mesh::CutMap::identity(m.coords().len());
        for path in &disk.paths {
            let local: Vec<usize> = path
                .iter()
                .map(|&o| {
                    let copies = map.copies();
                    copies[o][0]
                })
                .collect();
            let chi = euler_characteristic(current.topology());
            let (next, step) = cut_along_path(&current, &local).unwrap();
            assert_eq!(euler_characteristic(next.topology()), chi + 1);
            assert_eq!(next.topology().face_count(), current.topology().face_count());
            map = map.then(&step);
            current = next;
        }
        assert_eq!(current.topology().faces(), disk.mesh.topology().faces());
    }
}

#[test]
fn cut_map_is_surjective_and_copies_coincide() {
    let m = mesh(MeshKind::Plate3, 20, 0.3, 2);
    let disk = cut_to_disk(&m).unwrap();
    let copies = disk.map.copies();
    assert_eq!(copies.len(), m.coords().len());
    for (o, cs) in copies.iter().enumerate() {
        assert!(!cs.is_empty());
        assert_eq!(cs[0], o);
        for &c in cs {
            assert_eq!(disk.mesh.point(c), m.point(o));
        }
    }
    for path in &disk.paths {
        for &v in path {
            assert!(copies[v].len() >= 2);
        }
    }
}

#[test]
fn cutting_keeps_every_corner_angle() {
    let m = mesh(MeshKind::Plate3, 20, 0.3, 3);
    let disk = cut_to_disk(&m).unwrap();
    let before = induce_angles(&m).unwrap();
    let after = induce_angles(&disk.mesh).unwrap();
    assert_eq!(before.as_slice(), after.as_slice());
    let sums = angle_sums(&after, disk.mesh.topology());
    let orig = angle_sums(&before, m.topology());
    for (o, cs) in disk.map.copies().iter().enumerate() {
        let total: f64 = cs.iter().map(|&c| sums[c]).sum();
        assert!((total - orig[o]).abs() < 1e-12);
    }
}

#[test]
fn gross_holonomy_violation_shows_as_conflict() {
    let m = EmbeddedMesh::from_faces(
        vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.4, 0.55),
        ],
        (0..4).map(|k| [k, (k + 1) % 4, 4]).collect(),
    )
    .unwrap();
    let t = m.topology();
    let mut a = induce_angles(&m).unwrap().into_vec();
    // Shift angle between the two base corners of face 0.
    a[0] += 0.1;
    a[1] -= 0.1;
    let a = AngleStructure::new(a).unwrap();
    let spec = derive_targets(&m).unwrap();
    let worst = holonomies(&a, t)
        .unwrap()
        .iter()
        .zip(&spec.holonomy_target)
        .fold(0.0f64, |w, (h, s)| w.max((h - s).abs()));
    assert!(worst > 0.05);
    let out = layout_mesh(t, &a, &pins(&m)).unwrap();
    assert!(out.max_conflict > 1e-3 * m.bbox_diagonal());
    let inverted: Vec<usize> = (0..4)
        .filter(|&f| {
            let [p, q, r] = t.face(f).map(|v| out.coordinates[v]);
            anglemesh::mesh::signed_area(p, q, r) <= 0.0
        })
        .collect();
    assert_eq!(out.inverted_faces, inverted);
}
