//! Maximizing the volume energy over angle structures.
//!
//! [`argmax`] runs two phases. The first maximizes `𝓔` over the angle
//! structures with prescribed face and vertex angle sums (a concave program)
//! by a log-barrier interior-point method with Newton steps. The second
//! restores the holonomy targets by minimizing `𝓓 = Σ (H(i, A) - H_i)²`
//! over the same linear constraints with Levenberg–Marquardt.
//!
//! [`argmax_relaxed`] instead alternates maximizing `𝓔` subject to `𝓓 < δ`
//! with reducing `𝓓` to `δ/4`, halving `δ` each round. Its maximization
//! steps work on `𝓔 - λ𝓓` with the multiplier `λ` searched per round.
//!
//! Steps are computed in per-face tangent coordinates (see [`crate::kkt`]),
//! so face sums hold to rounding at every iterate and vertex sums are
//! restored by every Newton or LM step.

use std::f64::consts::PI;

use serde::Serialize;

use crate::angles::{angle_sums, holonomies, AngleStructure, ConstraintSpec};
use crate::energy::{face_holonomy_jacobian, mesh_energy};
use crate::error::{Error, Result};
use crate::kkt::{expand, projected_gradient_norm, reduce, reduce_jacobian, renormalize_faces, KktStructure, Sym2};
use crate::mesh::MeshTopology;

/// Iterates never move an angle closer than this to 0 or π.
pub const INTERIOR_MARGIN: f64 = 1e-9;

/// Tolerance on `𝓔` decrease between accepted phase-1 iterates, relative
/// to `1 + |𝓔|`; absorbs rounding in the energy sum.
pub const ENERGY_MONOTONE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Iteration cap per phase (per round for the relaxed strategy).
    pub max_iterations: usize,
    /// Infinity norm of the projected gradient of the barrier objective.
    pub kkt_tolerance: f64,
    /// Largest allowed residual of the linear face and vertex rows.
    pub constraint_tolerance: f64,
    /// Largest allowed `|H(i, A) - H_i|`.
    pub holonomy_tolerance: f64,
    pub barrier_initial: f64,
    pub barrier_shrink: f64,
    pub fraction_to_boundary: f64,
    pub lm_damping_initial: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            kkt_tolerance: 1e-9,
            constraint_tolerance: 1e-10,
            holonomy_tolerance: 1e-6,
            barrier_initial: 1e-2,
            barrier_shrink: 0.2,
            fraction_to_boundary: 0.995,
            lm_damping_initial: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kkt_tolerance", self.kkt_tolerance),
            ("constraint_tolerance", self.constraint_tolerance),
            ("holonomy_tolerance", self.holonomy_tolerance),
            ("barrier_initial", self.barrier_initial),
            ("lm_damping_initial", self.lm_damping_initial),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.barrier_shrink > 0.0 && self.barrier_shrink < 1.0) {
            return Err(Error::Config("barrier_shrink must lie in (0, 1)".into()));
        }
        if !(self.fraction_to_boundary > 0.0 && self.fraction_to_boundary < 1.0) {
            return Err(Error::Config("fraction_to_boundary must lie in (0, 1)".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    MaximizeEnergy,
    MinimizeDefect,
    /// Maximize `𝓔` inside `𝓓 < δ` (relaxed strategy).
    RelaxedMaximize,
    /// Reduce `𝓓` to `δ/4` (relaxed strategy).
    RelaxedReduce,
}

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub phase: Phase,
    pub energy: f64,
    pub defect: f64,
    /// Barrier weight in phase 1, LM damping in defect reduction, or the
    /// defect multiplier in relaxed maximization.
    pub barrier: f64,
    pub step_norm: f64,
    pub max_constraint_residual: f64,
    pub min_angle: f64,
    pub max_angle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    /// Newton or LM steps attempted, per phase.
    pub maximize_iterations: usize,
    pub minimize_iterations: usize,
    pub relaxed_iterations: usize,
    /// `δ` at the start of each relaxed round.
    pub deltas: Vec<f64>,
    pub converged: bool,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub defect_final: f64,
    pub max_holonomy_residual: f64,
    pub max_constraint_residual: f64,
    /// Projected gradient of `𝓔` at the end of phase 1, if it ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity: Option<f64>,
    /// Whether `𝓔(A*) ≥ 𝓔(A₀) - 1e-9`; recorded, not enforced.
    pub energy_not_below_initial: bool,
}

impl SolveTrace {
    pub fn total_iterations(&self) -> usize {
        self.maximize_iterations + self.minimize_iterations + self.relaxed_iterations
    }

    pub fn phase_records(&self, phase: Phase) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }

    fn absorb(&mut self, other: SolveTrace) {
        self.records.extend(other.records);
        self.maximize_iterations += other.maximize_iterations;
        self.minimize_iterations += other.minimize_iterations;
        self.relaxed_iterations += other.relaxed_iterations;
        self.deltas.extend(other.deltas);
        if other.stationarity.is_some() {
            self.stationarity = other.stationarity;
        }
    }
}

/// Shared state for one optimization problem.
struct Problem<'a> {
    topo: &'a MeshTopology,
    theta: Option<&'a [f64]>,
    holonomy_target: Option<&'a [f64]>,
    kkt: KktStructure,
}

impl<'a> Problem<'a> {
    fn new(topo: &'a MeshTopology, spec: Option<&'a ConstraintSpec>) -> Result<Self> {
        if let Some(spec) = spec {
            if spec.theta.len() != topo.vertex_count() || spec.holonomy_target.len() != topo.vertex_count() {
                return Err(Error::Precondition(format!(
                    "constraint targets sized {}/{} for {} vertices",
                    spec.theta.len(),
                    spec.holonomy_target.len(),
                    topo.vertex_count()
                )));
            }
        }
        Ok(Self {
            topo,
            theta: spec.map(|s| s.theta.as_slice()),
            holonomy_target: spec.map(|s| s.holonomy_target.as_slice()),
            kkt: KktStructure::new(topo, spec.is_some()),
        })
    }

    fn wrap(&self, x: &[f64]) -> AngleStructure {
        AngleStructure::new(x.to_vec()).expect("angle vector length is a multiple of 3")
    }

    /// `Θ_i - Θ(i, x)` for every vertex (zeros without vertex rows).
    fn vertex_residual(&self, x: &[f64]) -> Vec<f64> {
        match self.theta {
            Some(theta) => {
                let sums = angle_sums(&self.wrap(x), self.topo);
                theta.iter().zip(sums).map(|(t, s)| t - s).collect()
            }
            None => vec![0.0; self.topo.vertex_count()],
        }
    }

    fn max_linear_residual(&self, x: &[f64]) -> f64 {
        let faces = x
            .chunks_exact(3)
            .map(|c| (c[0] + c[1] + c[2] - PI).abs())
            .fold(0.0, f64::max);
        let verts = self.vertex_residual(x).iter().fold(0.0, |m: f64, r| m.max(r.abs()));
        faces.max(verts)
    }

    fn holonomy_residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let h = holonomies(&self.wrap(x), self.topo)?;
        Ok(match self.holonomy_target {
            Some(t) => h.iter().zip(t).map(|(h, t)| h - t).collect(),
            None => h,
        })
    }

    fn energy(&self, x: &[f64]) -> Result<f64> {
        mesh_energy(&self.wrap(x))
    }

    fn defect(&self, x: &[f64]) -> Result<f64> {
        if self.holonomy_target.is_none() {
            return Ok(0.0);
        }
        Ok(self.holonomy_residual(x)?.iter().map(|r| r * r).sum())
    }

    /// Reduced holonomy Jacobian blocks (`J Z`) per face.
    fn jacobian_blocks(&self, x: &[f64]) -> Vec<[[f64; 2]; 3]> {
        x.chunks_exact(3)
            .map(|c| reduce_jacobian(face_holonomy_jacobian([c[0], c[1], c[2]])))
            .collect()
    }

    /// `Zᵀ Jᵀ r` per face.
    fn reduced_jt_r(&self, jac: &[[[f64; 2]; 3]], r: &[f64]) -> Vec<[f64; 2]> {
        self.topo
            .faces()
            .iter()
            .zip(jac)
            .map(|(face, j)| {
                let mut out = [0.0; 2];
                for c in 0..3 {
                    out[0] += j[c][0] * r[face[c]];
                    out[1] += j[c][1] * r[face[c]];
                }
                out
            })
            .collect()
    }

    fn record(&self, phase: Phase, x: &[f64], energy: f64, barrier: f64, step: f64, delta: Option<f64>) -> Result<IterationRecord> {
        Ok(IterationRecord {
            phase,
            energy,
            defect: self.defect(x)?,
            barrier,
            step_norm: step,
            max_constraint_residual: self.max_linear_residual(x),
            min_angle: x.iter().copied().fold(f64::INFINITY, f64::min),
            max_angle: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            delta,
        })
    }

    fn check_start(&self, x: &[f64], cfg: &SolverConfig) -> Result<()> {
        cfg.validate()?;
        if x.len() != 3 * self.topo.face_count() {
            return Err(Error::Precondition(format!(
                "{} angles for {} faces",
                x.len(),
                self.topo.face_count()
            )));
        }
        self.wrap(x).check_interior()?;
        let residual = self.max_linear_residual(x);
        if residual > cfg.constraint_tolerance {
            return Err(Error::Infeasible { residual });
        }
        Ok(())
    }

    fn initial_barrier(&self, x: &[f64], cfg: &SolverConfig) -> f64 {
        let mean_grad = x.iter().map(|&a| (2.0 * a.sin()).ln().abs()).sum::<f64>() / x.len().max(1) as f64;
        cfg.barrier_initial * mean_grad.max(1e-3)
    }
}

fn apply_step(x: &[f64], dy: &[[f64; 2]], alpha: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    for (f, y) in dy.iter().enumerate() {
        let d = expand(*y);
        for c in 0..3 {
            out[3 * f + c] += alpha * d[c];
        }
    }
    out
}

fn step_inf_norm(dy: &[[f64; 2]]) -> f64 {
    dy.iter()
        .flat_map(|y| expand(*y))
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Largest `α ≤ 1` keeping every angle above `(1 - τ)` of its value.
fn max_step_to_boundary(x: &[f64], dy: &[[f64; 2]], tau: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    for (f, y) in dy.iter().enumerate() {
        let d = expand(*y);
        for c in 0..3 {
            if d[c] < 0.0 {
                alpha = alpha.min(-tau * x[3 * f + c] / d[c]);
            }
        }
    }
    alpha
}

fn strictly_interior(x: &[f64]) -> bool {
    x.iter().all(|&a| a > INTERIOR_MARGIN && a < PI - INTERIOR_MARGIN)
}

fn barrier_log_sum(x: &[f64]) -> f64 {
    x.iter().map(|a| a.ln()).sum()
}

/// Phase 1 on a prepared problem.
fn run_maximize(problem: &Problem, x0: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, SolveTrace)> {
    problem.check_start(x0, cfg)?;
    let mut x = x0.to_vec();
    let mut energy = problem.energy(&x)?;
    let mut trace = SolveTrace {
        energy_initial: energy,
        ..Default::default()
    };
    let mut mu = problem.initial_barrier(&x, cfg);
    let mu_final = cfg.kkt_tolerance * 1e-3;
    let mut converged = false;

    while trace.maximize_iterations < cfg.max_iterations {
        let (q, g): (Vec<Sym2>, Vec<[f64; 2]>) = x
            .chunks_exact(3)
            .map(|c| {
                let h = [0, 1, 2].map(|k| c[k].cos() / c[k].sin() + mu / (c[k] * c[k]));
                let grad = [0, 1, 2].map(|k| (2.0 * c[k].sin()).ln() - mu / c[k]);
                (Sym2::from_diagonal(h), reduce(grad))
            })
            .unzip();
        let c = problem.vertex_residual(&x);
        let factor = problem.kkt.factor(&q, None)?;
        let dy = factor.solve(&g, &c, None);

        let stationarity = dy
            .iter()
            .zip(&q)
            .flat_map(|(y, qf)| expand(qf.mul(*y)))
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let infeasibility = c.iter().fold(0.0, |m: f64, r| m.max(r.abs()));
        if stationarity <= cfg.kkt_tolerance && infeasibility <= cfg.constraint_tolerance {
            if mu <= mu_final {
                converged = true;
                break;
            }
            mu *= cfg.barrier_shrink;
            continue;
        }

        trace.maximize_iterations += 1;
        let phi0 = -energy - mu * barrier_log_sum(&x);
        let slope: f64 = g.iter().zip(&dy).map(|(gf, d)| gf[0] * d[0] + gf[1] * d[1]).sum();
        let rounding = 1e-14 * (1.0 + phi0.abs());
        let energy_floor = energy - ENERGY_MONOTONE_TOL * (1.0 + energy.abs());

        let mut alpha = max_step_to_boundary(&x, &dy, cfg.fraction_to_boundary);
        let mut accepted = None;
        while alpha > 1e-12 {
            let trial = apply_step(&x, &dy, alpha);
            if strictly_interior(&trial) {
                let e = problem.energy(&trial)?;
                let phi = -e - mu * barrier_log_sum(&trial);
                if phi <= phi0 + 1e-4 * alpha * slope + rounding && e >= energy_floor {
                    accepted = Some((trial, e));
                    break;
                }
            }
            alpha *= 0.5;
        }

        match accepted {
            Some((mut trial, e)) => {
                renormalize_faces(&mut trial);
                x = trial;
                energy = e;
                let rec = problem.record(Phase::MaximizeEnergy, &x, e, mu, alpha * step_inf_norm(&dy), None)?;
                trace.records.push(rec);
            }
            None if mu > mu_final => mu = (mu * cfg.barrier_shrink).max(mu_final),
            None => {
                log::debug!("phase 1 line search stalled at stationarity {stationarity:e}");
                break;
            }
        }
    }

    let stationarity = energy_stationarity(problem, &x)?;
    trace.stationarity = Some(stationarity);
    trace.converged = converged || stationarity <= cfg.kkt_tolerance;
    if !trace.converged {
        log::warn!("energy maximization did not converge (stationarity {stationarity:e})");
    }
    finish_trace(problem, &x, &mut trace)?;
    Ok((x, trace))
}

/// Infinity norm of `∇𝓔` projected onto the tangent space of the linear rows.
fn energy_stationarity(problem: &Problem, x: &[f64]) -> Result<f64> {
    let grad: Vec<f64> = x.iter().map(|&a| -(2.0 * a.sin()).ln()).collect();
    projected_gradient_norm(&problem.kkt, &grad)
}

fn finish_trace(problem: &Problem, x: &[f64], trace: &mut SolveTrace) -> Result<()> {
    trace.energy_final = problem.energy(x)?;
    trace.defect_final = problem.defect(x)?;
    trace.max_holonomy_residual = if problem.holonomy_target.is_some() {
        problem.holonomy_residual(x)?.iter().fold(0.0, |m: f64, r| m.max(r.abs()))
    } else {
        0.0
    };
    trace.max_constraint_residual = problem.max_linear_residual(x);
    trace.energy_not_below_initial = trace.energy_final >= trace.energy_initial - 1e-9;
    Ok(())
}

/// When a Levenberg–Marquardt run should stop.
#[derive(Clone, Copy)]
enum DefectGoal {
    /// Every residual at most this.
    MaxResidual(f64),
    /// `𝓓` at most this.
    Defect(f64),
}

/// Levenberg–Marquardt on the holonomy residuals within the linear rows.
///
/// The damping metric is the reduced Hessian of `-𝓔`, so small steps move
/// angles the way the energy prefers.
fn run_minimize(
    problem: &Problem,
    x0: &[f64],
    cfg: &SolverConfig,
    goal: DefectGoal,
    phase: Phase,
    delta: Option<f64>,
) -> Result<(Vec<f64>, SolveTrace, bool)> {
    problem.check_start(x0, cfg)?;
    let mut x = x0.to_vec();
    let mut r = problem.holonomy_residual(&x)?;
    let mut d = r.iter().map(|v| v * v).sum::<f64>();
    let mut trace = SolveTrace {
        energy_initial: problem.energy(&x)?,
        ..Default::default()
    };
    let mut lambda = cfg.lm_damping_initial;
    let mut history = vec![d];
    let mut stalled = false;

    let reached = |r: &[f64], d: f64| match goal {
        DefectGoal::MaxResidual(t) => r.iter().all(|v| v.abs() <= t),
        DefectGoal::Defect(t) => d <= t,
    };

    let mut iterations = 0;
    while iterations < cfg.max_iterations && !reached(&r, d) {
        iterations += 1;
        let jac = problem.jacobian_blocks(&x);
        let q: Vec<Sym2> = x
            .chunks_exact(3)
            .map(|c| Sym2::from_diagonal([0, 1, 2].map(|k| c[k].cos() / c[k].sin())).scale(lambda))
            .collect();
        let c = problem.vertex_residual(&x);
        let g = vec![[0.0; 2]; x.len() / 3];
        let dy = problem
            .kkt
            .factor(&q, Some((&jac, 1.0)))
            .map(|f| f.solve(&g, &c, Some(&r)));

        let mut accepted = false;
        if let Ok(dy) = dy {
            let trial = apply_step(&x, &dy, 1.0);
            if strictly_interior(&trial) {
                let r_trial = problem.holonomy_residual(&trial)?;
                let d_trial: f64 = r_trial.iter().map(|v| v * v).sum();
                if d_trial < d {
                    let mut trial = trial;
                    renormalize_faces(&mut trial);
                    x = trial;
                    r = problem.holonomy_residual(&x)?;
                    d = r.iter().map(|v| v * v).sum();
                    lambda = (lambda / 3.0).max(1e-20);
                    accepted = true;
                    let e = problem.energy(&x)?;
                    trace.records.push(problem.record(phase, &x, e, lambda, step_inf_norm(&dy), delta)?);
                }
            }
        }
        if !accepted {
            lambda *= 2.0;
        }
        history.push(d);
        if history.len() > 20 {
            let old = history[history.len() - 21];
            if old - d < 1e-16 && !reached(&r, d) {
                stalled = true;
                break;
            }
        }
        if lambda > 1e20 {
            stalled = true;
            break;
        }
    }
    match phase {
        Phase::RelaxedReduce => trace.relaxed_iterations = iterations,
        _ => trace.minimize_iterations = iterations,
    }
    let ok = reached(&r, d);
    if !ok {
        log::warn!("defect minimization stopped with D = {d:e} (stalled: {stalled})");
    }
    finish_trace(problem, &x, &mut trace)?;
    Ok((x, trace, ok))
}

/// Maximize `𝓔 - λ𝓓` over the linear rows from `x0` by Gauss–Newton steps.
/// Returns the iterate and its holonomy residuals.
fn maximize_penalized(
    problem: &Problem,
    x0: &[f64],
    lambda: f64,
    delta: f64,
    cfg: &SolverConfig,
    trace: &mut SolveTrace,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = x0.to_vec();
    let mut r = problem.holonomy_residual(&x)?;
    let psi = |e: f64, r: &[f64]| -e + lambda * r.iter().map(|v| v * v).sum::<f64>();
    let mut value = psi(problem.energy(&x)?, &r);
    for _ in 0..PENALTY_INNER_ITERATIONS {
        let jac = problem.jacobian_blocks(&x);
        let (q, g): (Vec<Sym2>, Vec<[f64; 2]>) = x
            .chunks_exact(3)
            .map(|c| {
                let h = [0, 1, 2].map(|k| c[k].cos() / c[k].sin());
                (Sym2::from_diagonal(h), reduce([0, 1, 2].map(|k| (2.0 * c[k].sin()).ln())))
            })
            .unzip();
        let c = problem.vertex_residual(&x);
        let dy = if lambda > 0.0 {
            problem.kkt.factor(&q, Some((&jac, 2.0 * lambda)))?.solve(&g, &c, Some(&r))
        } else {
            problem.kkt.factor(&q, None)?.solve(&g, &c, None)
        };
        let step = step_inf_norm(&dy);
        let infeasibility = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if step <= cfg.kkt_tolerance && infeasibility <= cfg.constraint_tolerance {
            break;
        }
        trace.relaxed_iterations += 1;
        // Directional derivative of ψ along the step.
        let jt_r = problem.reduced_jt_r(&jac, &r);
        let slope: f64 = dy
            .iter()
            .zip(&g)
            .zip(&jt_r)
            .map(|((d, gf), jr)| d[0] * (gf[0] + 2.0 * lambda * jr[0]) + d[1] * (gf[1] + 2.0 * lambda * jr[1]))
            .sum();
        let rounding = 1e-14 * (1.0 + value.abs());
        let mut alpha = max_step_to_boundary(&x, &dy, cfg.fraction_to_boundary);
        let mut accepted = None;
        while alpha > 1e-12 {
            let trial = apply_step(&x, &dy, alpha);
            if strictly_interior(&trial) {
                let r_t = problem.holonomy_residual(&trial)?;
                let e_t = problem.energy(&trial)?;
                let v_t = psi(e_t, &r_t);
                if v_t <= value + 1e-4 * alpha * slope.min(0.0) + rounding {
                    accepted = Some((trial, e_t, v_t));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((mut trial, e, v)) = accepted else {
            break;
        };
        renormalize_faces(&mut trial);
        x = trial;
        r = problem.holonomy_residual(&x)?;
        value = v;
        trace
            .records
            .push(problem.record(Phase::RelaxedMaximize, &x, e, lambda, alpha * step, Some(delta))?);
        if alpha * step <= cfg.kkt_tolerance {
            break;
        }
    }
    Ok((x, r))
}

const PENALTY_INNER_ITERATIONS: usize = 50;

/// Maximize `𝓔` subject to face sums, vertex sums `Θ`, and `𝓓 < δ`.
///
/// The active inequality is handled through its multiplier: `𝓔 - λ𝓓` is
/// maximized for increasing `λ` until `𝓓` drops below `δ`, then `λ` is
/// bisected (geometrically) to bring `𝓓` into `[0.8 δ, δ)`. `lambda` carries
/// the multiplier between rounds.
fn run_relaxed_maximize(
    problem: &Problem,
    x0: &[f64],
    cfg: &SolverConfig,
    delta: f64,
    lambda: &mut f64,
) -> Result<(Vec<f64>, SolveTrace)> {
    let mut trace = SolveTrace::default();
    let defect = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    // Once a multiplier was needed, smaller δ need one too.
    if *lambda == 0.0 {
        let (x_free, r_free) = maximize_penalized(problem, x0, 0.0, delta, cfg, &mut trace)?;
        if defect(&r_free) < delta {
            return Ok((x_free, trace));
        }
    }

    // Feasible (𝓓 < δ) and infeasible multipliers and iterates.
    let mut hi: Option<(f64, Vec<f64>, f64)> = None;
    let mut lo = 0.0;
    let mut probe = if *lambda > 0.0 { 2.0 * *lambda } else { 1.0 };
    let mut x = x0.to_vec();
    for _ in 0..PENALTY_SEARCH_STEPS {
        let (x_l, r_l) = maximize_penalized(problem, &x, probe, delta, cfg, &mut trace)?;
        let d = defect(&r_l);
        if d < delta {
            let done = d >= 0.8 * delta;
            hi = Some((probe, x_l.clone(), d));
            if done {
                break;
            }
        } else {
            lo = probe;
            x = x_l;
        }
        probe = match &hi {
            None => 4.0 * probe,
            Some((h, ..)) if lo == 0.0 => h / 2.0,
            Some((h, ..)) => (lo * h).sqrt(),
        };
        if let Some((h, ..)) = &hi {
            if lo > 0.0 && h / lo < 1.0 + 1e-6 {
                break;
            }
        }
    }
    let (l, x_best, _) = hi.ok_or_else(|| {
        Error::Precondition(format!("no multiplier brought the defect below {delta:e}"))
    })?;
    *lambda = l;
    Ok((x_best, trace))
}

const PENALTY_SEARCH_STEPS: usize = 40;

/// Maximize `𝓔` over angle structures with the face sums and the vertex
/// angle sums of `spec`.
pub fn maximize_energy(
    topo: &MeshTopology,
    a0: &AngleStructure,
    spec: &ConstraintSpec,
    cfg: &SolverConfig,
) -> Result<(AngleStructure, SolveTrace)> {
    let problem = Problem::new(topo, Some(spec))?;
    let (x, trace) = run_maximize(&problem, a0.as_slice(), cfg)?;
    Ok((problem.wrap(&x), trace))
}

/// Maximize `𝓔` with only the face-sum rows imposed.
pub fn maximize_energy_face_sums(
    topo: &MeshTopology,
    a0: &AngleStructure,
    cfg: &SolverConfig,
) -> Result<(AngleStructure, SolveTrace)> {
    let problem = Problem::new(topo, None)?;
    let (x, trace) = run_maximize(&problem, a0.as_slice(), cfg)?;
    Ok((problem.wrap(&x), trace))
}

/// Minimize `𝓓` over angle structures with the linear rows of `spec`.
pub fn minimize_defect(
    topo: &MeshTopology,
    a1: &AngleStructure,
    spec: &ConstraintSpec,
    cfg: &SolverConfig,
) -> Result<(AngleStructure, SolveTrace)> {
    let problem = Problem::new(topo, Some(spec))?;
    // Converge well past the tolerance while progress is cheap.
    let goal = DefectGoal::MaxResidual(cfg.holonomy_tolerance * 1e-3);
    let (x, mut trace, _) = run_minimize(&problem, a1.as_slice(), cfg, goal, Phase::MinimizeDefect, None)?;
    trace.converged = trace.max_holonomy_residual <= cfg.holonomy_tolerance
        && trace.max_constraint_residual <= cfg.constraint_tolerance;
    Ok((problem.wrap(&x), trace))
}

/// Phase 1 followed by phase 2.
pub fn argmax(
    topo: &MeshTopology,
    a0: &AngleStructure,
    spec: &ConstraintSpec,
    cfg: &SolverConfig,
) -> Result<(AngleStructure, SolveTrace)> {
    let (a1, t1) = maximize_energy(topo, a0, spec, cfg)?;
    let (a2, t2) = minimize_defect(topo, &a1, spec, cfg)?;
    Ok((a2, combine(t1, t2)))
}

fn combine(first: SolveTrace, second: SolveTrace) -> SolveTrace {
    let mut out = first;
    let energy_initial = out.energy_initial;
    let first_converged = out.converged;
    let (converged, ef, df, mh, mc) = (
        second.converged,
        second.energy_final,
        second.defect_final,
        second.max_holonomy_residual,
        second.max_constraint_residual,
    );
    out.absorb(second);
    out.converged = first_converged && converged;
    out.energy_initial = energy_initial;
    out.energy_final = ef;
    out.defect_final = df;
    out.max_holonomy_residual = mh;
    out.max_constraint_residual = mc;
    out.energy_not_below_initial = ef >= energy_initial - 1e-9;
    out
}

/// Alternate maximizing `𝓔` within `𝓓 < δ` and reducing `𝓓` to `δ/4`,
/// halving `δ` until it drops below `holonomy_tolerance²`.
pub fn argmax_relaxed(
    topo: &MeshTopology,
    a0: &AngleStructure,
    spec: &ConstraintSpec,
    cfg: &SolverConfig,
    delta0: f64,
) -> Result<(AngleStructure, SolveTrace)> {
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(Error::Config(format!("delta0 must be positive, got {delta0}")));
    }
    let problem = Problem::new(topo, Some(spec))?;
    let mut x = a0.as_slice().to_vec();
    problem.check_start(&x, cfg)?;
    let mut trace = SolveTrace {
        energy_initial: problem.energy(&x)?,
        ..Default::default()
    };
    let stop = cfg.holonomy_tolerance * cfg.holonomy_tolerance;
    let mut delta = delta0;
    let mut lambda = 0.0;
    let mut converged = true;
    while delta >= stop {
        trace.deltas.push(delta);
        if problem.defect(&x)? < delta {
            let (next, t) = run_relaxed_maximize(&problem, &x, cfg, delta, &mut lambda)?;
            x = next;
            trace.absorb(t);
        }
        let (next, t, ok) = run_minimize(&problem, &x, cfg, DefectGoal::Defect(delta / 4.0), Phase::RelaxedReduce, Some(delta))?;
        x = next;
        trace.absorb(t);
        if !ok {
            converged = false;
            break;
        }
        delta /= 2.0;
    }
    // Final polish of the holonomy residuals.
    let goal = DefectGoal::MaxResidual(cfg.holonomy_tolerance * 1e-3);
    let (next, t, _) = run_minimize(&problem, &x, cfg, goal, Phase::MinimizeDefect, None)?;
    x = next;
    trace.absorb(t);
    finish_trace(&problem, &x, &mut trace)?;
    trace.converged = converged
        && trace.max_holonomy_residual <= cfg.holonomy_tolerance
        && trace.max_constraint_residual <= cfg.constraint_tolerance;
    Ok((problem.wrap(&x), trace))
}
