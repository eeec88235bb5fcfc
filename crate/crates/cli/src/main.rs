//! `keygraph`: build models, detect them in scenes, benchmark against a
//! dataset with ground truth and track over frame sequences.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use keygraph::keygraph::Structure;

#[derive(Parser)]
#[command(name = "keygraph", version, about = "Keygraph object detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect model keypoints, enumerate keygraphs and store their arc descriptors.
    BuildModel {
        image: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Find a stored model in a scene image and print its pose.
    Detect {
        store: PathBuf,
        scene: PathBuf,
        /// Directory for pose.txt, correspondences.txt, timings.txt and config.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Recall-precision curves and RANSAC iteration counts over a dataset.
    Benchmark {
        dataset: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Structures to compare, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "tri")]
        structures: Vec<Structure>,
        /// Random model crops per subset.
        #[arg(long, default_value_t = 10)]
        crops: usize,
        /// Points on the threshold grid.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Largest threshold on the grid.
        #[arg(long, default_value_t = 1.0)]
        max_threshold: f64,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Mean of several curve CSV files at their shared thresholds.
    Aggregate {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Detect a stored model in every frame of a directory.
    Track {
        store: PathBuf,
        frames: PathBuf,
        /// Directory for poses.txt, summary.txt and config.txt.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Write synthetic fixtures.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Print the arc descriptors of an image's model keygraphs.
    Describe {
        image: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
}

#[derive(Subcommand)]
enum SynthKind {
    /// A dataset of subsets, each with a reference image and warped views.
    Dataset {
        dir: PathBuf,
        #[arg(long, default_value_t = 2)]
        subsets: usize,
        #[arg(long, default_value_t = 3)]
        views: usize,
        #[arg(long, default_value_t = 320)]
        width: usize,
        #[arg(long, default_value_t = 240)]
        height: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A model image and a sequence of frames with the model moving.
    Sequence {
        dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Settings shared by the commands. Unset values keep the defaults, or for
/// commands reading a model store, the values stored with the model.
#[derive(Args, Clone, Debug, Default)]
struct Tuning {
    /// Keygraph structure: pair, tri or quad.
    #[arg(long)]
    structure: Option<Structure>,
    /// Minimum Chebyshev distance between keygraph vertices.
    #[arg(long)]
    min_dist: Option<i64>,
    /// Maximum Chebyshev arc length in model keygraphs.
    #[arg(long)]
    max_dist: Option<i64>,
    /// Intensity profile length.
    #[arg(long)]
    profile_len: Option<usize>,
    /// Fourier coefficients kept per arc.
    #[arg(long)]
    coeffs: Option<usize>,
    /// Arc dissimilarity threshold.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    ransac_conf: Option<f64>,
    /// Inlier tolerance in pixels.
    #[arg(long)]
    inlier_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Model keypoints as "x y" lines instead of detected corners.
    #[arg(long)]
    keypoints_file: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildModel { image, output, tuning } => commands::build_model(&image, &output, &tuning),
        Command::Detect { store, scene, out, tuning } => commands::detect(&store, &scene, out.as_deref(), &tuning),
        Command::Benchmark { dataset, output, structures, crops, steps, max_threshold, tuning } => {
            let plan = commands::BenchmarkPlan { structures, crops, steps, max_threshold };
            commands::benchmark(&dataset, &output, &plan, &tuning)
        }
        Command::Aggregate { curves, output } => commands::aggregate(&curves, &output),
        Command::Track { store, frames, out, tuning } => commands::track(&store, &frames, out.as_deref(), &tuning),
        Command::Synth { kind: SynthKind::Dataset { dir, subsets, views, width, height, seed } } => {
            commands::synth_dataset(&dir, subsets, views, (width, height), seed)
        }
        Command::Synth { kind: SynthKind::Sequence { dir, frames, seed } } => commands::synth_sequence(&dir, frames, seed),
        Command::Describe { image, tuning } => commands::describe(&image, &tuning),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn structure_list_parses() {
        let cli = Cli::try_parse_from(["keygraph", "benchmark", "d", "-o", "o", "--structures", "pair,tri"]).unwrap();
        let Command::Benchmark { structures, .. } = cli.command else { panic!() };
        assert_eq!(structures, vec![Structure::Pair2, Structure::Circuit3]);
        assert!(Cli::try_parse_from(["keygraph", "detect", "s", "i", "--structure", "hex"]).is_err());
    }
}
