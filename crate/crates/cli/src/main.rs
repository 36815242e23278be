// SPDX-License-Identifier: Apache-2.0

//! `aafv`: run experiments, audit the privacy mechanisms, generate data.

use std::path::PathBuf;
use std::process::ExitCode;

use aafv_core::commands::{
    cmd_audit_ldp, cmd_run, cmd_synth, load_synth_spec, AuditArgs, CommandError, RunArgs, DEFAULT_AUDIT_SLACK,
};
use aafv_core::dataio::SynthSpec;
use aafv_core::metrics::render_table;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "aafv", version, about = "Abstention-aware federated voting simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every seed and scenario of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads; 0 uses one per core.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
    },
    /// Empirically check the epsilon bound of a mechanism.
    AuditLdp {
        #[arg(long, default_value = "piecewise")]
        mechanism: String,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_AUDIT_SLACK)]
        slack: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `audit.json`; printed to stdout when absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Accepted for symmetry with `run`; the audit is sequential.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
    },
    /// Write a synthetic biased-shard dataset as CSV files.
    Synth {
        /// TOML synth spec; flags below are ignored when given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        spec: SynthFlags,
        #[arg(long, default_value_t = 0)]
        parallel: usize,
    },
}

#[derive(Args, Debug)]
struct SynthFlags {
    #[arg(long, default_value_t = SynthSpec::default().n_samples)]
    n_samples: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_features)]
    n_features: usize,
    #[arg(long, default_value_t = SynthSpec::default().n_clients)]
    n_clients: usize,
    #[arg(long, default_value_t = SynthSpec::default().bias_strength)]
    bias_strength: f64,
    #[arg(long, default_value_t = SynthSpec::default().label_noise)]
    label_noise: f64,
    #[arg(long, default_value_t = SynthSpec::default().seed)]
    seed: u64,
}

impl From<SynthFlags> for SynthSpec {
    fn from(f: SynthFlags) -> Self {
        SynthSpec {
            n_samples: f.n_samples,
            n_features: f.n_features,
            n_clients: f.n_clients,
            bias_strength: f.bias_strength,
            seed: f.seed,
            label_noise: f.label_noise,
        }
    }
}

fn execute(command: Command) -> Result<(), CommandError> {
    match command {
        Command::Run {
            config,
            out_dir,
            parallel,
        } => {
            let (report, dir) = cmd_run(&RunArgs {
                config,
                out_dir,
                parallel,
            })?;
            print!("{}", render_table(&report));
            eprintln!("wrote {}", dir.display());
        }
        Command::AuditLdp {
            mechanism,
            epsilon,
            samples,
            bins,
            slack,
            seed,
            out_dir,
            parallel: _,
        } => {
            let out = match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)
                        .map_err(|e| CommandError::Runtime(format!("{}: {e}", dir.display())))?;
                    Some(dir.join("audit.json"))
                }
                None => None,
            };
            let report = cmd_audit_ldp(&AuditArgs {
                mechanism,
                epsilon,
                samples,
                bins,
                slack,
                seed,
                out,
            })?;
            eprintln!(
                "audit passed: worst log-ratio {:.4} <= {:.4}",
                report.worst_log_ratio.unwrap_or(f64::NAN),
                report.limit
            );
        }
        Command::Synth {
            config,
            out_dir,
            spec,
            parallel: _,
        } => {
            let spec = match config {
                Some(path) => load_synth_spec(&path)?,
                None => spec.into(),
            };
            for path in cmd_synth(&spec, &out_dir)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
