use std::path::PathBuf;
use std::process::ExitCode;

use anglemesh::generate::{generate, MeshKind};
use anglemesh::optimizer::SolverConfig;
use anglemesh::pipeline::{
    run_pipeline, write_mesh, MeshFormat, MeshInput, PipelineConfig, PipelineError, Strategy,
    DEFAULT_RELAXED_DELTA0,
};
use clap::{ArgGroup, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anglemesh", version, about = "Improve planar triangle meshes by volume maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Improve a mesh, keeping its connectivity and boundary.
    #[command(group(ArgGroup::new("input").required(true).args(["node", "off"])))]
    Improve {
        #[arg(long, requires = "ele")]
        node: Option<PathBuf>,
        #[arg(long, requires = "node")]
        ele: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["node", "ele"])]
        off: Option<PathBuf>,
        /// Output file (OFF) or base name (`.node`/`.ele`).
        #[arg(long)]
        out: PathBuf,
        /// `node-ele` or `off`; defaults to the input format.
        #[arg(long)]
        out_format: Option<MeshFormat>,
        /// `standard` or `relaxed`.
        #[arg(long, default_value = "standard")]
        strategy: Strategy,
        /// Starting defect bound of the relaxed strategy.
        #[arg(long, default_value_t = DEFAULT_RELAXED_DELTA0)]
        delta0: f64,
        #[arg(long)]
        tol_holonomy: Option<f64>,
        /// Iteration cap per solver phase.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Overlay of input and output meshes.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// JSON quality and solver report.
        #[arg(long)]
        report: Option<PathBuf>,
        /// JSON iteration trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a generated test mesh.
    Generate {
        /// square, annulus, plate3, h-shape, l-shape, annulus8, fan or equilateral.
        kind: MeshKind,
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Interior vertex displacement as a fraction of the grid spacing.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "off")]
        format: MeshFormat,
    },
}

fn fail(e: &PipelineError) -> ExitCode {
    eprintln!("{}", e.diagnostic());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Improve {
            node,
            ele,
            off,
            out,
            out_format,
            strategy,
            delta0,
            tol_holonomy,
            max_iter,
            svg,
            report,
            trace,
        } => {
            let input = match (node, ele, off) {
                (Some(node), Some(ele), None) => MeshInput::NodeEle { node, ele },
                (None, None, Some(off)) => MeshInput::Off(off),
                _ => unreachable!("clap enforces one input format"),
            };
            let mut solver = SolverConfig::default();
            if let Some(t) = tol_holonomy {
                solver.holonomy_tolerance = t;
            }
            if let Some(m) = max_iter {
                solver.max_iterations = m;
            }
            let strategy = match strategy {
                Strategy::Relaxed { .. } => Strategy::Relaxed { delta0 },
                s => s,
            };
            let cfg = PipelineConfig {
                output_format: out_format,
                solver,
                strategy,
                svg,
                report,
                trace,
                ..PipelineConfig::new(input, out)
            };
            match run_pipeline(&cfg) {
                Ok(report) => {
                    let summary = serde_json::json!({
                        "status": "ok",
                        "min_angle": report.min_angle,
                        "max_aspect_ratio": report.max_aspect_ratio,
                        "iterations": report.iterations.total,
                        "max_holonomy_residual": report.max_holonomy_residual,
                    });
                    println!("{summary}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Generate {
            kind,
            n,
            jitter,
            seed,
            out,
            format,
        } => {
            let mesh = match generate(kind, n, jitter, seed) {
                Ok(m) => m,
                Err(e) => return fail(&PipelineError::Config(e)),
            };
            match write_mesh(&mesh, None, format, &out) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
    }
}
