mod common;

use std::f64::consts::{FRAC_PI_3, PI};

use anglemesh::angles::{derive_targets, holonomies, induce_angles, AngleStructure};
use anglemesh::energy::{build_linear_constraints, defect, mesh_energy};
use anglemesh::generate::MeshKind;
use anglemesh::mesh::{EmbeddedMesh, Point};
use anglemesh::optimizer::{
    argmax, argmax_relaxed, maximize_energy, maximize_energy_face_sums, minimize_defect, Phase, SolveTrace,
    SolverConfig, ENERGY_MONOTONE_TOL, INTERIOR_MARGIN,
};
use anglemesh::pipeline::trace_json;
use common::{lob_oracle, mesh};

fn setup(m: &EmbeddedMesh) -> (AngleStructure, anglemesh::angles::ConstraintSpec) {
    (induce_angles(m).unwrap(), derive_targets(m).unwrap())
}

fn check_trace(trace: &SolveTrace) {
    for r in &trace.records {
        assert!(r.max_constraint_residual <= 1e-10, "{:?}", r);
        assert!(r.min_angle > INTERIOR_MARGIN && r.max_angle < PI - INTERIOR_MARGIN, "{:?}", r);
    }
    let energies: Vec<f64> = trace.phase_records(Phase::MaximizeEnergy).map(|r| r.energy).collect();
    for w in energies.windows(2) {
        assert!(w[1] >= w[0] - ENERGY_MONOTONE_TOL * (1.0 + w[0].abs()), "energy fell {} -> {}", w[0], w[1]);
    }
    let defects: Vec<f64> = trace.phase_records(Phase::MinimizeDefect).map(|r| r.defect).collect();
    for w in defects.windows(2) {
        assert!(w[1] <= w[0], "defect rose {} -> {}", w[0], w[1]);
    }
}

#[test]
fn face_sums_alone_give_equilateral_angles() {
    let cfg = SolverConfig::default();
    let max_face = 3.0 * lob_oracle(FRAC_PI_3);
    for m in [
        mesh(MeshKind::Square, 10, 0.3, 1),
        mesh(MeshKind::Plate3, 24, 0.4, 2),
        mesh(MeshKind::Annulus8, 0, 0.0, 0),
    ] {
        let (a0, _) = setup(&m);
        let (a, trace) = maximize_energy_face_sums(m.topology(), &a0, &cfg).unwrap();
        let worst = a.as_slice().iter().fold(0.0f64, |w, x| w.max((x - FRAC_PI_3).abs()));
        assert!(worst <= 1e-6, "worst angle error {worst:e}");
        let nf = m.topology().face_count() as f64;
        assert!((mesh_energy(&a).unwrap() - nf * max_face).abs() <= 1e-8);
        check_trace(&trace);
    }
}

#[test]
fn phase_one_is_a_certified_fixed_point() {
    let cfg = SolverConfig::default();
    let m = mesh(MeshKind::Square, 12, 0.3, 4);
    let (a0, spec) = setup(&m);
    let topo = m.topology();
    let (a1, trace) = maximize_energy(topo, &a0, &spec, &cfg).unwrap();
    check_trace(&trace);
    assert!(trace.stationarity.unwrap() <= cfg.kkt_tolerance);
    let e1 = mesh_energy(&a1).unwrap();
    assert!(e1 > mesh_energy(&a0).unwrap());
    assert!(build_linear_constraints(topo, &spec).max_residual(&a1) <= cfg.constraint_tolerance);

    let (again, _) = maximize_energy(topo, &a1, &spec, &cfg).unwrap();
    assert!((mesh_energy(&again).unwrap() - e1).abs() <= 1e-10);

    let h = holonomies(&a1, topo).unwrap();
    for v in (0..topo.vertex_count()).filter(|&v| topo.is_interior(v)) {
        assert!(h[v].abs() <= 1e-5, "interior holonomy {} at {v}", h[v]);
    }
}

#[test]
fn single_face_is_left_alone() {
    let m = EmbeddedMesh::from_faces(
        vec![Point::new(0.0, 0.0), Point::new(3.0, 0.0), Point::new(0.5, 2.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let (a0, spec) = setup(&m);
    let cfg = SolverConfig::default();
    let (a1, _) = maximize_energy(m.topology(), &a0, &spec, &cfg).unwrap();
    assert!(a1.max_abs_difference(&a0) <= 1e-12);
    let (a2, trace) = minimize_defect(m.topology(), &a0, &spec, &cfg).unwrap();
    assert!(a2.max_abs_difference(&a0) <= 1e-12);
    assert!(trace.converged);
}

#[test]
fn defect_minimization_examples() {
    let cfg = SolverConfig::default();
    let m = mesh(MeshKind::Square, 12, 0.3, 6);
    let topo = m.topology();
    let (a0, spec) = setup(&m);

    let (same, _) = minimize_defect(topo, &a0, &spec, &cfg).unwrap();
    assert!(same.max_abs_difference(&a0) <= 1e-12);

    let (a1, _) = maximize_energy(topo, &a0, &spec, &cfg).unwrap();
    let (a2, trace) = minimize_defect(topo, &a1, &spec, &cfg).unwrap();
    check_trace(&trace);
    assert!(trace.converged);
    assert!(defect(&a2, &spec, topo).unwrap() <= 1e-12 * topo.vertex_count() as f64);
    let h = holonomies(&a2, topo).unwrap();
    for (v, t) in spec.holonomy_target.iter().enumerate() {
        assert!((h[v] - t).abs() <= 1e-6);
    }
}

#[test]
fn equilateral_input_is_the_maximizer() {
    let cfg = SolverConfig::default();
    let m = mesh(MeshKind::Equilateral, 6, 0.0, 0);
    let (a0, spec) = setup(&m);
    let (a, trace) = argmax(m.topology(), &a0, &spec, &cfg).unwrap();
    assert!(a.max_abs_difference(&a0) <= 1e-10);
    assert!(trace.converged);
    let (r, trace) = argmax_relaxed(m.topology(), &a0, &spec, &cfg, 1e-2).unwrap();
    assert!(r.max_abs_difference(&a0) <= 1e-10);
    assert!(trace.converged);
}

#[test]
fn argmax_improves_the_smallest_angle() {
    let cfg = SolverConfig::default();
    let m = mesh(MeshKind::Square, 12, 0.3, 7);
    let (a0, spec) = setup(&m);
    let (a, trace) = argmax(m.topology(), &a0, &spec, &cfg).unwrap();
    check_trace(&trace);
    assert!(trace.converged);
    assert!(a.min_angle() > a0.min_angle());
    assert!(trace.max_holonomy_residual <= cfg.holonomy_tolerance);
    assert_eq!(trace.energy_not_below_initial, trace.energy_final >= trace.energy_initial - 1e-9);
}

#[test]
fn relaxed_strategy_halves_delta() {
    let cfg = SolverConfig::default();
    let m = mesh(MeshKind::Square, 8, 0.3, 8);
    let topo = m.topology();
    let (a0, spec) = setup(&m);
    let (a, trace) = argmax_relaxed(topo, &a0, &spec, &cfg, 1e-2).unwrap();
    assert!(trace.converged);
    assert!(defect(&a, &spec, topo).unwrap() <= cfg.holonomy_tolerance.powi(2));
    assert_eq!(trace.deltas[0], 1e-2);
    for w in trace.deltas.windows(2) {
        assert_eq!(w[1], w[0] / 2.0);
    }
    assert!(*trace.deltas.last().unwrap() >= cfg.holonomy_tolerance.powi(2));
    assert!(trace.deltas.last().unwrap() / 2.0 < cfg.holonomy_tolerance.powi(2));
    for r in &trace.records {
        assert!(r.max_constraint_residual <= 1e-10);
        assert!(r.min_angle > INTERIOR_MARGIN);
    }
    let (_, standard) = argmax(topo, &a0, &spec, &cfg).unwrap();
    assert!(trace.total_iterations() > standard.total_iterations());
}

#[test]
fn identical_runs_give_identical_traces() {
    let cfg = SolverConfig::default();
    let m = mesh(MeshKind::Annulus, 9, 0.3, 10);
    let (a0, spec) = setup(&m);
    let (a, t) = argmax(m.topology(), &a0, &spec, &cfg).unwrap();
    let (b, u) = argmax(m.topology(), &a0, &spec, &cfg).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
    assert_eq!(trace_json(&t), trace_json(&u));
}

#[test]
fn infeasible_or_invalid_starts_are_rejected() {
    let m = mesh(MeshKind::Square, 4, 0.2, 1);
    let (a0, spec) = setup(&m);
    let mut bad = a0.clone().into_vec();
    bad[0] += 1e-3;
    bad[1] -= 1e-3;
    bad[3] += 1e-3;
    bad[4] -= 1e-3;
    let bad = AngleStructure::new(bad).unwrap();
    let cfg = SolverConfig::default();
    // Face sums still hold, vertex sums do not.
    assert!(maximize_energy(m.topology(), &bad, &spec, &cfg).is_err());
    let cfg = SolverConfig {
        barrier_shrink: 1.5,
        ..SolverConfig::default()
    };
    assert!(argmax(m.topology(), &a0, &spec, &cfg).is_err());
    assert!(argmax_relaxed(m.topology(), &a0, &spec, &SolverConfig::default(), -1.0).is_err());
}

