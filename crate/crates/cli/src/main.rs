//! `sczm`: classification, grain assignment, SCZM solves, MMS studies and conformalization.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Mesh(#[from] sczm::mesh::MeshError),
    #[error(transparent)]
    Geometry(#[from] sczm::geometry::GeometryError),
    #[error(transparent)]
    Surrogate(#[from] sczm::surrogate::SurrogateError),
    #[error(transparent)]
    Solver(#[from] sczm::solver::SolverError),
    #[error(transparent)]
    Mms(#[from] sczm::mms::MmsError),
    #[error(transparent)]
    Conformalize(#[from] sczm::conformalize::ConformalizeError),
}

impl CliError {
    pub fn config(key: &str, msg: impl Into<String>) -> Self {
        CliError::Config { key: key.to_string(), msg: msg.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Mesh(_) | CliError::Geometry(_) | CliError::Surrogate(_) => 4,
            CliError::Solver(_) | CliError::Mms(_) => 5,
            CliError::Conformalize(_) => 6,
        }
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Parser)]
#[command(name = "sczm", version, about = "Shifted cohesive zone method laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify points IN/OUT/ON against a closed boundary; writes CSV `x y [z] sideness`.
    Classify {
        #[arg(long)]
        boundary: PathBuf,
        /// Whitespace-separated coordinates, one point per line.
        #[arg(long)]
        points: PathBuf,
        /// Use the single-ray scan over every facet instead of the indexed classifier.
        #[arg(long)]
        brute_force: bool,
        #[arg(long, default_value = "classify.csv")]
        out: PathBuf,
    },
    /// Label each mesh element with its dominant grain id.
    Assign {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        grains: PathBuf,
        #[arg(long, default_value = "assigned.mesh")]
        out: PathBuf,
    },
    /// Quasi-static SCZM solve from a TOML configuration; writes `steps.csv` and requested fields.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study; writes `mms_convergence.csv`.
    Mms {
        /// `quadratic` (jump g = a x² + b) or `linear` (g = a x + b).
        #[arg(long)]
        case: String,
        /// Inclusive level range `a..b`; level L uses 2^L + 1 cells per side.
        #[arg(long, default_value = "3..6")]
        levels: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Interface-fitted remeshing of a labelled mesh against grain polygons.
    Conformalize {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        grains: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project a nodal field from a source mesh onto a conformalized mesh.
    Project {
        #[arg(long)]
        ifm: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Indexed vs brute-force classification timing on airfoils; writes `classify_bench.csv`.
    BenchClassify {
        /// Boundary facet counts N_T.
        #[arg(long, value_delimiter = ',', default_value = "100,400,1600")]
        sizes: Vec<usize>,
        /// Query grid resolution per side.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify { boundary, points, brute_force, out } => commands::classify(&boundary, &points, brute_force, &out),
        Command::Assign { mesh, grains, out } => commands::assign(&mesh, &grains, &out),
        Command::Solve { config, out_dir } => commands::solve(&config, out_dir.as_deref()),
        Command::Mms { case, levels, out_dir } => commands::mms(&case, &levels, &out_dir),
        Command::Conformalize { mesh, grains, out } => commands::conformalize(&mesh, &grains, &out),
        Command::Project { ifm, source, field, out } => commands::project(&ifm, &source, &field, &out),
        Command::BenchClassify { sizes, grid, out_dir } => commands::bench_classify(&sizes, grid, &out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
