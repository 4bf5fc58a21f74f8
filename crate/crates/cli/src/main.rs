use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use traj_uncert::synth::SceneKind;
use traj_uncert_cli::commands::{
    cmd_correlate, cmd_decompose, cmd_experiment, cmd_metrics, cmd_perturb, cmd_synth_gen, cmd_synth_predict,
};
use traj_uncert_cli::config::{FileConfig, RunConfig, SynthConfig, SEED_ENV};
use traj_uncert_cli::error::CliResult;
use traj_uncert_cli::experiment::Suite;

#[derive(Parser)]
#[command(
    name = "traj-uncert",
    version,
    about = "Uncertainty decomposition for trajectory-prediction ensembles"
)]
struct Cli {
    #[command(flatten)]
    flags: RunFlags,
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the config-file keys; flags win over the file.
#[derive(Args, Clone)]
struct RunFlags {
    /// Flat TOML file with any of the flag names (snake_case) as keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; falls back to the config file, then TRAJ_UNCERT_SEED, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo samples drawn per member
    #[arg(long, global = true)]
    n_per_model: Option<usize>,
    /// Isotropic per-mode variance (m²)
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    /// Comma-separated k values, ascending
    #[arg(long, global = true, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Worker threads
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct SynthFlags {
    #[arg(long)]
    kind: Option<SceneKind>,
    #[arg(long)]
    n_scenes: Option<usize>,
    #[arg(long)]
    n_agents: Option<usize>,
    #[arg(long)]
    n_lanes: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    members: Option<usize>,
    #[arg(long)]
    skill_sigma: Option<f64>,
    #[arg(long)]
    context_sensitivity: Option<f64>,
    #[arg(long)]
    mode_count: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Uncertainty decomposition, RIP and metrics per scene → report CSV + JSONL
    Decompose {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Report path; `.csv` and `.jsonl` are written side by side
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply perturbations to a scene file
    Perturb {
        /// Comma-separated ops: revert_ego, scramble_ego, blackout, lane_deletion
        #[arg(long)]
        ops: String,
        #[arg(long, required_unless_present = "input")]
        scenes: Option<PathBuf>,
        #[arg(long, required_unless_present = "output")]
        out: Option<PathBuf>,
        #[arg(conflicts_with = "scenes")]
        input: Option<PathBuf>,
        #[arg(conflicts_with = "out")]
        output: Option<PathBuf>,
    },
    /// minADE/minFDE per scene → JSONL
    Metrics {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation table of a report → JSON
    Correlate {
        /// Report written by `decompose` (.csv or .jsonl)
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment suite end to end → JSON summary
    Experiment {
        suite: Suite,
        /// Holds optional scenes.jsonl and config.toml; receives report.{csv,jsonl}
        #[arg(long, default_value = ".")]
        workdir: PathBuf,
        /// Summary path (default: <workdir>/summary_<suite>.json)
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        synth: SynthFlags,
    },
    /// Synthetic data
    Synth {
        #[command(subcommand)]
        command: SynthCommand,
    },
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Generate scenes
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        synth: SynthFlags,
    },
    /// Predict with a synthetic ensemble
    Predict {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        synth: SynthFlags,
    },
}

fn resolve(run: &RunFlags, synth: &SynthFlags, extra_file: Option<&Path>) -> CliResult<(RunConfig, SynthConfig)> {
    let mut file = FileConfig::default();
    if let Some(p) = extra_file.filter(|p| p.exists()) {
        file = file.overlay(FileConfig::load(p)?);
    }
    if let Some(p) = &run.config {
        file = file.overlay(FileConfig::load(p)?);
    }
    let flags = FileConfig {
        n_per_model: run.n_per_model,
        bandwidth: run.bandwidth,
        seed: run.seed,
        k_values: run.k.clone(),
        parallelism: run.parallelism,
        kind: synth.kind,
        n_scenes: synth.n_scenes,
        n_agents: synth.n_agents,
        n_lanes: synth.n_lanes,
        noise_sigma: synth.noise_sigma,
        members: synth.members,
        skill_sigma: synth.skill_sigma,
        context_sensitivity: synth.context_sensitivity,
        mode_count: synth.mode_count,
    };
    let env = std::env::var(SEED_ENV).ok();
    file.overlay(flags).resolve(env.as_deref())
}

fn run(cli: Cli) -> CliResult<()> {
    let flags = cli.flags;
    let none = SynthFlags::default();
    match cli.command {
        Command::Decompose {
            scenes,
            predictions,
            out,
        } => {
            let (cfg, _) = resolve(&flags, &none, None)?;
            let report = cmd_decompose(&scenes, &predictions, &out, &cfg)?;
            eprintln!("{} rows", report.rows.len());
        }
        Command::Perturb {
            ops,
            scenes,
            out,
            input,
            output,
        } => {
            let (cfg, _) = resolve(&flags, &none, None)?;
            let (input, output) = (
                scenes.or(input).expect("clap enforces"),
                out.or(output).expect("clap enforces"),
            );
            let n = cmd_perturb(&input, &output, &ops, cfg.seed)?;
            eprintln!("{n} scenes");
        }
        Command::Metrics {
            scenes,
            predictions,
            out,
        } => {
            let (cfg, _) = resolve(&flags, &none, None)?;
            let recs = cmd_metrics(&scenes, &predictions, &out, &cfg)?;
            eprintln!("{} records", recs.len());
        }
        Command::Correlate { report, out } => {
            let (cfg, _) = resolve(&flags, &none, None)?;
            cmd_correlate(&report, &out, &cfg.k_values)?;
        }
        Command::Experiment {
            suite,
            workdir,
            out,
            synth,
        } => {
            let (cfg, synth) = resolve(&flags, &synth, Some(&workdir.join("config.toml")))?;
            let out = out.unwrap_or_else(|| workdir.join(format!("summary_{suite}.json")));
            cmd_experiment(suite, &workdir, &out, &cfg, &synth)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Synth { command } => match command {
            SynthCommand::Gen { out, synth } => {
                let (cfg, synth) = resolve(&flags, &synth, None)?;
                let n = cmd_synth_gen(&out, &synth, cfg.seed)?;
                eprintln!("{n} scenes");
            }
            SynthCommand::Predict { scenes, out, synth } => {
                let (cfg, synth) = resolve(&flags, &synth, None)?;
                let n = cmd_synth_predict(&scenes, &out, &synth, &cfg)?;
                eprintln!("{n} predictions");
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
