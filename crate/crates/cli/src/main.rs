use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use omnisynth::camera::list_models;
use omnisynth::config::JobConfig;
use omnisynth::groundtruth::{
    layout_metrics, read_trajectory, trajectory_errors, LayoutMetrics, Mask,
};
use omnisynth::job::{run_job, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "omnisynth",
    version,
    about = "Synthesize omnidirectional images and their ground truth"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render every frame described by a job config.
    #[command(after_help = format!(
        "Worker threads default to ${WORKERS_ENV}, then to the number of CPUs.\n\
         Camera orientation is camera-to-world R = Rz(yaw) Ry(-pitch) Rx(roll), angles in degrees."
    ))]
    Render { config: PathBuf },
    /// List the camera models with their parameters and defaults.
    Models,
    /// Score a predicted layout map against ground truth (CSV).
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Per-frame translation and rotation errors of an estimated trajectory.
    TrajError {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        est: PathBuf,
    },
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"))
}

fn run(cli: Cli) -> omnisynth::Result<()> {
    match cli.command {
        Command::Render { config } => {
            let cfg = JobConfig::load(&config)?;
            let report = run_job(&cfg)?;
            println!(
                "{} frame(s), {} file(s) written to {}",
                report.frames,
                report.files.len(),
                report.out_dir.display()
            );
        }
        Command::Models => print!("{}", list_models()),
        Command::Metrics { pred, gt } => {
            let m = layout_metrics(&Mask::load(&pred)?, &Mask::load(&gt)?)?;
            println!("{}", LayoutMetrics::CSV_HEADER);
            println!("{}", m.csv_row());
        }
        Command::TrajError { gt, est } => {
            let report = trajectory_errors(&read_trajectory(&gt)?, &read_trajectory(&est)?)?;
            println!("id,translation_deg,rotation_deg");
            for f in &report.frames {
                println!(
                    "{},{},{:.6}",
                    f.id,
                    fmt_opt(f.translation_deg),
                    f.rotation_deg
                );
            }
            println!(
                "mean,{},{}",
                fmt_opt(report.mean_translation_deg()),
                fmt_opt(report.mean_rotation_deg())
            );
            let skipped = report.skipped_translation();
            if !skipped.is_empty() {
                eprintln!("translation error undefined for frames {skipped:?} (zero translation)");
            }
            if !report.missing.is_empty() {
                eprintln!("no estimate for frames {:?}", report.missing);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omnisynth: {e}");
            ExitCode::FAILURE
        }
    }
}
