//! End-to-end mesh improvement: read, cut to a disk, optimize the angles,
//! lay the mesh back out, merge the cut copies and write the results.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::angles::{derive_targets, induce_angles, AngleStructure};
use crate::cut::cut_to_disk;
use crate::error::Error;
use crate::layout::layout_mesh;
use crate::mesh::{
    normalize_orientation, parse_node_ele_with_meta, parse_off, write_node_ele, write_off, EmbeddedMesh,
    NodeEleMeta, Point,
};
use crate::optimizer::{argmax, argmax_relaxed, SolveTrace, SolverConfig};
use crate::quality::{quality_report, QualityReport};

/// Largest holonomy residual the layout is attempted with.
pub const LAYOUT_HOLONOMY_LIMIT: f64 = 1e-3;

/// Layout conflicts above this fraction of the bounding-box diagonal fail
/// the run.
pub const CONFLICT_LIMIT: f64 = 1e-3;

pub const DEFAULT_RELAXED_DELTA0: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Strategy {
    /// Maximize `𝓔` under the angle sums, then restore the holonomies.
    Standard,
    /// Alternate `𝓔` maximization under `𝓓 < δ` with `𝓓` reduction.
    Relaxed { delta0: f64 },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Standard => "standard",
            Strategy::Relaxed { .. } => "relaxed",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "standard" => Ok(Strategy::Standard),
            "relaxed" => Ok(Strategy::Relaxed {
                delta0: DEFAULT_RELAXED_DELTA0,
            }),
            _ => Err(Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    NodeEle,
    Off,
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "node-ele" | "node" | "ele" => Ok(MeshFormat::NodeEle),
            "off" => Ok(MeshFormat::Off),
            _ => Err(Error::Config(format!("unknown mesh format {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshInput {
    NodeEle { node: PathBuf, ele: PathBuf },
    Off(PathBuf),
}

impl MeshInput {
    pub fn format(&self) -> MeshFormat {
        match self {
            MeshInput::NodeEle { .. } => MeshFormat::NodeEle,
            MeshInput::Off(_) => MeshFormat::Off,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: MeshInput,
    /// For `.node`/`.ele` output this is the base name; a trailing `.node`
    /// or `.ele` extension is dropped.
    pub output: PathBuf,
    /// Defaults to the input format.
    pub output_format: Option<MeshFormat>,
    pub solver: SolverConfig,
    pub strategy: Strategy,
    pub svg: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(input: MeshInput, output: impl Into<PathBuf>) -> Self {
        Self {
            input,
            output: output.into(),
            output_format: None,
            solver: SolverConfig::default(),
            strategy: Strategy::Standard,
            svg: None,
            report: None,
            trace: None,
        }
    }
}

/// Pipeline failures, one per exit code.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("cannot parse input: {0}")]
    Parse(#[source] Error),

    #[error("invalid configuration: {0}")]
    Config(#[source] Error),

    #[error("unsupported input mesh: {0}")]
    Topology(#[source] Error),

    #[error("solver did not converge: {reason}")]
    NonConvergence {
        reason: String,
        max_holonomy_residual: f64,
    },

    #[error("layout conflict: {reason}")]
    LayoutConflict {
        reason: String,
        max_conflict: f64,
        threshold: f64,
        unreached: usize,
        inverted: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Parse(_) | PipelineError::Config(_) => 2,
            PipelineError::Topology(_) => 3,
            PipelineError::NonConvergence { .. } => 4,
            PipelineError::LayoutConflict { .. } => 5,
            PipelineError::Io { .. } => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Parse(_) => "parse",
            PipelineError::Config(_) => "config",
            PipelineError::Topology(_) => "topology",
            PipelineError::NonConvergence { .. } => "nonconvergence",
            PipelineError::LayoutConflict { .. } => "layout_conflict",
            PipelineError::Io { .. } => "io",
        }
    }

    /// One JSON object describing the failure.
    pub fn diagnostic(&self) -> serde_json::Value {
        let mut d = json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            PipelineError::NonConvergence {
                max_holonomy_residual, ..
            } => {
                d["max_holonomy_residual"] = json!(max_holonomy_residual);
            }
            PipelineError::LayoutConflict {
                max_conflict,
                threshold,
                unreached,
                inverted,
                ..
            } => {
                d["max_conflict"] = json!(max_conflict);
                d["threshold"] = json!(threshold);
                d["unreached_vertices"] = json!(unreached);
                d["inverted_faces"] = json!(inverted);
            }
            _ => {}
        }
        d
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Sort a library error raised while reading or checking the input.
    fn from_input(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Format(_) | Error::IndexOutOfRange { .. } => PipelineError::Parse(e),
            Error::Io(source) => PipelineError::Io {
                path: PathBuf::new(),
                source,
            },
            Error::Config(_) => PipelineError::Config(e),
            _ => PipelineError::Topology(e),
        }
    }
}

/// Result of [`improve_mesh`].
#[derive(Debug, Clone)]
pub struct Improvement {
    /// The input combinatorics (face lists untouched) with new coordinates.
    pub mesh: EmbeddedMesh,
    /// Optimized angles on the cut mesh.
    pub angles: AngleStructure,
    pub trace: SolveTrace,
    /// Cut paths in input vertex indices.
    pub cut_paths: Vec<Vec<usize>>,
    /// Largest layout discrepancy, including distances between the copies
    /// of a cut vertex.
    pub max_conflict: f64,
    pub before: QualityReport,
    pub after: QualityReport,
}

/// Run the improvement on a mesh in memory.
pub fn improve_mesh(
    mesh: &EmbeddedMesh,
    solver: &SolverConfig,
    strategy: Strategy,
) -> Result<Improvement, PipelineError> {
    solver.validate().map_err(PipelineError::Config)?;
    let oriented = normalize_orientation(mesh).map_err(PipelineError::Topology)?;
    oriented.check_planar_region().map_err(PipelineError::Topology)?;
    let disk = cut_to_disk(&oriented).map_err(PipelineError::Topology)?;
    let cut = &disk.mesh;
    let topo = cut.topology();

    let nonconvergence = |e: Error| PipelineError::NonConvergence {
        reason: e.to_string(),
        max_holonomy_residual: f64::NAN,
    };
    let spec = derive_targets(cut).map_err(PipelineError::Topology)?;
    let a0 = induce_angles(cut).map_err(PipelineError::Topology)?;
    let (angles, trace) = match strategy {
        Strategy::Standard => argmax(topo, &a0, &spec, solver),
        Strategy::Relaxed { delta0 } => argmax_relaxed(topo, &a0, &spec, solver, delta0),
    }
    .map_err(nonconvergence)?;
    log::info!(
        "{} solve: {} iterations, max holonomy residual {:.3e}",
        strategy.name(),
        trace.total_iterations(),
        trace.max_holonomy_residual
    );
    if !trace.converged || !(trace.max_holonomy_residual <= LAYOUT_HOLONOMY_LIMIT) {
        return Err(PipelineError::NonConvergence {
            reason: format!(
                "max holonomy residual {:.3e}, max constraint residual {:.3e}",
                trace.max_holonomy_residual, trace.max_constraint_residual
            ),
            max_holonomy_residual: trace.max_holonomy_residual,
        });
    }

    let threshold = CONFLICT_LIMIT * mesh.bbox_diagonal();
    let conflict = |reason: String, max_conflict: f64, unreached: usize, inverted: usize| {
        PipelineError::LayoutConflict {
            reason,
            max_conflict,
            threshold,
            unreached,
            inverted,
        }
    };
    let pins: Vec<Option<Point>> = (0..topo.vertex_count())
        .map(|v| topo.is_boundary(v).then(|| cut.point(v)))
        .collect();
    let layout = layout_mesh(topo, &angles, &pins).map_err(|e| conflict(e.to_string(), f64::NAN, 0, 0))?;

    let mut max_conflict = layout.max_conflict;
    let mut coords = Vec::with_capacity(mesh.coords().len());
    for copies in disk.map.copies() {
        let first = layout.coordinates[copies[0]];
        for &c in &copies[1..] {
            max_conflict = max_conflict.max(first.distance(layout.coordinates[c]));
        }
        coords.push(first);
    }
    let laid_out = oriented.with_coords(coords.clone()).map_err(PipelineError::Topology)?;
    let inverted = (0..laid_out.topology().face_count())
        .filter(|&f| !(laid_out.signed_area(f) > 0.0))
        .count();
    if layout.unreached_count > 0 || inverted > 0 || !(max_conflict <= threshold) {
        return Err(conflict(
            format!(
                "max conflict {max_conflict:.3e} (limit {threshold:.3e}), {} unreached vertices, {inverted} inverted faces",
                layout.unreached_count
            ),
            max_conflict,
            layout.unreached_count,
            inverted,
        ));
    }

    let output = mesh.with_coords(coords).map_err(PipelineError::Topology)?;
    Ok(Improvement {
        before: quality_report(mesh),
        after: quality_report(&output),
        mesh: output,
        angles,
        trace,
        cut_paths: disk.paths,
        max_conflict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeforeAfter<T> {
    pub before: T,
    pub after: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationCounts {
    pub maximize_energy: usize,
    pub minimize_defect: usize,
    pub relaxed: usize,
    pub total: usize,
}

/// The JSON report written by [`write_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub strategy: String,
    pub converged: bool,
    pub min_angle: BeforeAfter<f64>,
    pub max_angle: BeforeAfter<f64>,
    pub min_aspect_ratio: BeforeAfter<f64>,
    pub max_aspect_ratio: BeforeAfter<f64>,
    pub iterations: IterationCounts,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_defect: f64,
    pub max_holonomy_residual: f64,
    pub max_constraint_residual: f64,
    pub max_conflict: f64,
    pub energy_not_below_initial: bool,
    pub cut_paths: Vec<Vec<usize>>,
    /// Full quality report of the input mesh, histograms included.
    pub input: QualityReport,
    pub output: QualityReport,
}

impl PipelineReport {
    pub fn new(improvement: &Improvement, strategy: Strategy) -> Self {
        let (b, a, t) = (&improvement.before, &improvement.after, &improvement.trace);
        let pair = |f: fn(&QualityReport) -> f64| BeforeAfter {
            before: f(b),
            after: f(a),
        };
        Self {
            strategy: strategy.name().to_string(),
            converged: t.converged,
            min_angle: pair(|r| r.min_angle),
            max_angle: pair(|r| r.max_angle),
            min_aspect_ratio: pair(|r| r.min_aspect_ratio),
            max_aspect_ratio: pair(|r| r.max_aspect_ratio),
            iterations: IterationCounts {
                maximize_energy: t.maximize_iterations,
                minimize_defect: t.minimize_iterations,
                relaxed: t.relaxed_iterations,
                total: t.total_iterations(),
            },
            initial_energy: t.energy_initial,
            final_energy: t.energy_final,
            final_defect: t.defect_final,
            max_holonomy_residual: t.max_holonomy_residual,
            max_constraint_residual: t.max_constraint_residual,
            max_conflict: improvement.max_conflict,
            energy_not_below_initial: t.energy_not_below_initial,
            cut_paths: improvement.cut_paths.clone(),
            input: b.clone(),
            output: a.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|e| PipelineError::io(path, e))
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

pub fn write_report(report: &PipelineReport, path: &Path) -> Result<(), PipelineError> {
    write_file(path, &report.to_json())
}

pub fn trace_json(trace: &SolveTrace) -> String {
    let mut s = serde_json::to_string_pretty(trace).expect("trace serializes");
    s.push('\n');
    s
}

pub fn write_trace(trace: &SolveTrace, path: &Path) -> Result<(), PipelineError> {
    write_file(path, &trace_json(trace))
}

struct SvgLayer<'a> {
    mesh: &'a EmbeddedMesh,
    stroke: &'a str,
}

fn render_svg(layers: &[SvgLayer<'_>]) -> Result<String, Error> {
    if layers.iter().any(|l| l.mesh.topology().face_count() == 0) {
        return Err(Error::Precondition("cannot draw a mesh without faces".into()));
    }
    let points: Vec<Point> = layers.iter().flat_map(|l| l.mesh.coords().iter().copied()).collect();
    let (lo, hi) = crate::mesh::bbox(&points);
    let size = (hi.x - lo.x).max(hi.y - lo.y);
    let size = if size > 0.0 { size } else { 1.0 };
    let margin = 0.02 * size;
    let stroke_width = 1e-3 * size;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">",
        lo.x - margin,
        -hi.y - margin,
        hi.x - lo.x + 2.0 * margin,
        hi.y - lo.y + 2.0 * margin
    );
    for layer in layers {
        let _ = writeln!(
            out,
            "<g fill=\"none\" stroke=\"{}\" stroke-width=\"{:.6}\" stroke-linejoin=\"round\">",
            layer.stroke, stroke_width
        );
        for f in 0..layer.mesh.topology().face_count() {
            let [a, b, c] = layer.mesh.face_points(f);
            let _ = writeln!(
                out,
                "<polygon points=\"{:.6},{:.6} {:.6},{:.6} {:.6},{:.6}\"/>",
                a.x, -a.y, b.x, -b.y, c.x, -c.y
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Stroke-only SVG of the mesh, y axis pointing up.
pub fn svg_string(mesh: &EmbeddedMesh) -> Result<String, Error> {
    render_svg(&[SvgLayer { mesh, stroke: "black" }])
}

/// The input mesh in gray under the improved mesh in black.
pub fn svg_overlay(before: &EmbeddedMesh, after: &EmbeddedMesh) -> Result<String, Error> {
    render_svg(&[
        SvgLayer {
            mesh: before,
            stroke: "#b0b0b0",
        },
        SvgLayer {
            mesh: after,
            stroke: "black",
        },
    ])
}

/// Write [`svg_string`] to `path`; nothing is created for an empty mesh.
pub fn write_svg(mesh: &EmbeddedMesh, path: &Path) -> Result<(), Error> {
    let svg = svg_string(mesh)?;
    fs::write(path, svg)?;
    Ok(())
}

/// `.node` and `.ele` paths for an output base name.
pub fn node_ele_paths(base: &Path) -> (PathBuf, PathBuf) {
    let stem = match base.extension().and_then(|e| e.to_str()) {
        Some("node" | "ele") => base.with_extension(""),
        _ => base.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s: OsString = stem.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".node"), with(".ele"))
}

/// A mesh as read from disk.
#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: EmbeddedMesh,
    /// Present for `.node`/`.ele` input.
    pub meta: Option<NodeEleMeta>,
}

pub fn read_mesh(input: &MeshInput) -> Result<LoadedMesh, PipelineError> {
    match input {
        MeshInput::NodeEle { node, ele } => {
            let (node_text, ele_text) = (read_file(node)?, read_file(ele)?);
            let (mesh, meta) = parse_node_ele_with_meta(&node_text, &ele_text).map_err(PipelineError::from_input)?;
            Ok(LoadedMesh { mesh, meta: Some(meta) })
        }
        MeshInput::Off(path) => {
            let mesh = parse_off(&read_file(path)?).map_err(PipelineError::from_input)?;
            Ok(LoadedMesh { mesh, meta: None })
        }
    }
}

/// Write `mesh` in `format`, reusing `meta` for `.node`/`.ele` output.
/// Returns the files written.
pub fn write_mesh(
    mesh: &EmbeddedMesh,
    meta: Option<&NodeEleMeta>,
    format: MeshFormat,
    out: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    match format {
        MeshFormat::NodeEle => {
            let default = NodeEleMeta {
                index_base: 0,
                markers: None,
            };
            let (node, ele) = write_node_ele(mesh, meta.unwrap_or(&default));
            let (node_path, ele_path) = node_ele_paths(out);
            write_file(&node_path, &node)?;
            write_file(&ele_path, &ele)?;
            Ok(vec![node_path, ele_path])
        }
        MeshFormat::Off => {
            write_file(out, &write_off(mesh))?;
            Ok(vec![out.to_path_buf()])
        }
    }
}

/// Run the whole pipeline on files. On solver or layout failure the input
/// mesh is written unchanged to the output before the error is returned.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let loaded = read_mesh(&cfg.input)?;
    let format = cfg.output_format.unwrap_or(cfg.input.format());
    let improvement = match improve_mesh(&loaded.mesh, &cfg.solver, cfg.strategy) {
        Ok(imp) => imp,
        Err(e) => {
            if matches!(e, PipelineError::NonConvergence { .. } | PipelineError::LayoutConflict { .. }) {
                write_mesh(&loaded.mesh, loaded.meta.as_ref(), format, &cfg.output)?;
            }
            return Err(e);
        }
    };
    write_mesh(&improvement.mesh, loaded.meta.as_ref(), format, &cfg.output)?;
    let report = PipelineReport::new(&improvement, cfg.strategy);
    if let Some(path) = &cfg.report {
        write_report(&report, path)?;
    }
    if let Some(path) = &cfg.trace {
        write_trace(&improvement.trace, path)?;
    }
    if let Some(path) = &cfg.svg {
        let svg = svg_overlay(&loaded.mesh, &improvement.mesh).map_err(PipelineError::from_input)?;
        write_file(path, &svg)?;
    }
    Ok(report)
}
