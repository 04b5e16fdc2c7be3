//! `deformnet` command-line interface.

mod commands;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "deformnet", version, about = "Point cloud autoencoding by sphere deformation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample every manifest entry and write `<id>.xyz` and `<id>.obj`.
    GenData {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train on every `.xyz` file in a directory.
    Train(TrainArgs),
    /// Reconstruct a cloud through the forward network.
    Reconstruct {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sphere sample size; defaults to the checkpoint's setting, then
        /// to the input size.
        #[arg(long)]
        sphere_points: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Export a mesh by deforming icosphere vertices.
    Mesh {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 3)]
        subdivisions: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a manifest; writes the report and `<report>.json`.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Also count self-intersections of meshes exported at this level.
        #[arg(long)]
        subdivisions: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the finite-difference gradient suite.
    Gradcheck {
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plot up to three clouds as an SVG.
    Plot {
        #[arg(long, num_args = 1..=3, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
pub struct TrainArgs {
    /// `key = value` config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data_dir: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Continue from this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Loss history CSV; defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Reuse one sphere sample per shape.
    #[arg(long)]
    fixed_sphere: bool,
    #[arg(long)]
    backward_conditioned: Option<bool>,
    /// Progress line interval on stderr; 0 silences it.
    #[arg(long, default_value_t = 100)]
    log_every: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::GenData { manifest, out_dir } => commands::gen_data(&manifest, &out_dir),
        Command::Train(args) => commands::train(args),
        Command::Reconstruct { checkpoint, input, out, sphere_points, seed } => {
            commands::reconstruct(&checkpoint, &input, &out, sphere_points, seed)
        }
        Command::Mesh { checkpoint, input, subdivisions, out } => {
            commands::mesh(&checkpoint, &input, subdivisions, &out)
        }
        Command::Eval { checkpoint, manifest, report, subdivisions, seed } => {
            commands::eval(&checkpoint, &manifest, &report, subdivisions, seed)
        }
        Command::Gradcheck { instances, seed } => commands::gradcheck(instances, seed),
        Command::Plot { input, out } => commands::plot(&input, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::FAILURE
        }
    }
}

/// Joins the error chain on one line, skipping causes the previous message
/// already quotes.
fn one_line(e: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !msg.ends_with(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg.replace('\n', " ")
}
