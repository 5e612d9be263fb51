//! `cat1`: verification suites and single queries over the tree and disk models.

mod input;
mod queries;
mod report;
mod suites;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Report;

#[derive(Parser, Debug)]
#[command(name = "cat1", version, about = "Boundary geometry of CAT(-1) model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Add the wall time to the report (which then is no longer reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Precision of the interval certification of exponentials.
    #[arg(long = "precision-bits", default_value_t = cat1_boundary::boundary::DEFAULT_PRECISION)]
    pub precision_bits: u32,
    /// Replaces the default tolerance of every floating-point property.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Orbit horizon.
    #[arg(long = "N", default_value_t = 50)]
    pub horizon: usize,
    /// Circle grid size for sup computations.
    #[arg(long, default_value_t = 4096)]
    pub samples: usize,
}

impl Common {
    pub fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Core,
    Tree,
    Disk,
    Schwarzian,
    Extension,
    Classify,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Halfplane,
    Disk,
    Tree,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a property suite on seeded random cases.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Cases per suite (each suite has its own default).
        #[arg(long)]
        cases: Option<usize>,
        /// Run only this case index (as printed in a reproducer).
        #[arg(long)]
        case: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Nearest point of a model to a boundary metric.
    Project {
        #[arg(long, conflicts_with = "disk")]
        tree: Option<String>,
        #[arg(long, requires = "tree")]
        metric: Option<String>,
        /// Project a seeded admissible metric on the disk boundary.
        #[arg(long)]
        disk: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Extend a boundary map to the model and report its defects.
    Extend {
        #[arg(long, requires_all = ["target", "ends"])]
        tree: Option<String>,
        #[arg(long)]
        target: Option<String>,
        /// Target end labels, listed in the order of the source ends.
        #[arg(long, num_args = 1..)]
        ends: Vec<String>,
        #[arg(long, num_args = 4, allow_negative_numbers = true)]
        matrix: Vec<f64>,
        #[arg(long = "disk-matrix", num_args = 4, allow_negative_numbers = true)]
        disk_matrix: Vec<f64>,
        #[arg(long)]
        diffeo: Option<String>,
        /// Number of sampled points.
        #[arg(long)]
        cases: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Elliptic, parabolic or hyperbolic, from the orbit of a basepoint.
    Classify {
        #[arg(long, num_args = 4, allow_negative_numbers = true)]
        matrix: Vec<f64>,
        #[arg(long, value_enum, default_value = "halfplane")]
        model: ModelKind,
        #[arg(long)]
        tree: Option<String>,
        /// Image labels of the ends, in the order of the tree's ends.
        #[arg(long, num_args = 1..)]
        ends: Vec<String>,
        /// Basepoint in the half-plane as `re im`.
        #[arg(long, num_args = 2, allow_negative_numbers = true)]
        basepoint: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Integrated Schwarzian of a circle diffeomorphism.
    Schwarzian {
        #[arg(long)]
        diffeo: String,
        #[arg(long, num_args = 2, allow_negative_numbers = true, required = true)]
        pair: Vec<f64>,
        #[arg(long, num_args = 4, allow_negative_numbers = true)]
        quad: Vec<f64>,
        /// Times at which to print the distance difference profile.
        #[arg(long, num_args = 1..)]
        profile: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Log cross-ratio of four ends of a tree.
    Crossratio {
        #[arg(long)]
        tree: String,
        /// Metric to evaluate in (default: visual metric from the first vertex).
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, num_args = 4, required = true)]
        quad: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut report = match cli.command {
        Command::Verify { suite, cases, case, common } => suites::verify(suite, cases, case, &common),
        Command::Project { tree, metric, disk, common } => queries::project(tree, metric, disk, &common),
        Command::Extend { tree, target, ends, matrix, disk_matrix, diffeo, cases, common } => {
            queries::extend(queries::ExtendArgs { tree, target, ends, matrix, disk_matrix, diffeo, cases }, &common)
        }
        Command::Classify { matrix, model, tree, ends, basepoint, common } => {
            queries::classify(matrix, model, tree, ends, basepoint, &common)
        }
        Command::Schwarzian { diffeo, pair, quad, profile, common } => {
            queries::schwarzian(diffeo, pair, quad, profile, &common)
        }
        Command::Crossratio { tree, metric, quad } => queries::crossratio(tree, metric, quad),
    };
    if cli.timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    report.finish();
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    // A closed pipe is not worth a panic.
    let _ = writeln!(std::io::stdout(), "{text}");
    ExitCode::from(report.exit_code())
}

/// Builds a report around a fallible body.
pub fn with_report(command: &str, seed: Option<u64>, body: impl FnOnce(&mut Report) -> input::CliResult<()>) -> Report {
    let mut report = Report::new(command, seed);
    if let Err(e) = body(&mut report) {
        report.fail_with(e);
    }
    report
}
