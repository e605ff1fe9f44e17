//! Monte-Carlo benchmark CLI.
//!
//! Runs a campaign described by a JSON config (or a built-in preset),
//! with command-line overrides, and writes per-link CSV plus summary JSON.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ibcsim::algorithms::AlgorithmMode;
use ibcsim::bench::{self, CampaignConfig, Engine};

#[derive(Parser, Debug)]
#[command(
    name = "ibc-bench",
    about = "Monte-Carlo benchmark for MIMO interference-broadcast-channel beamforming with QoS management",
    after_help = "Without --config, the desk-scale preset runs (3 TXs, 6 RXs, 50 drops).\n\
                  Example: ibc-bench --qos 0.5,1.5,2.5 --drops 50 --out-dir results"
)]
struct Cli {
    /// JSON campaign config; omit to use a preset.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Preset when no config file is given: "desk" or "full".
    #[arg(long, default_value = "desk")]
    preset: String,

    /// Algorithms to run (comma-separated: wmmse, qos_hard, proposed).
    #[arg(long, value_delimiter = ',')]
    algorithm: Option<Vec<AlgorithmMode>>,

    /// QoS sweep points in bits/s/Hz (comma-separated).
    #[arg(long, value_delimiter = ',')]
    qos: Option<Vec<f64>>,

    /// Number of Monte-Carlo drops.
    #[arg(long)]
    drops: Option<usize>,

    /// Base seed; drop seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Execution engine: centralized or decentralized.
    #[arg(long)]
    engine: Option<Engine>,

    /// Pilot noise variance for the decentralized engine.
    #[arg(long)]
    pilot_noise: Option<f64>,

    /// Output directory for results.csv and summary.json.
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Worker threads (0 = rayon default).
    #[arg(long)]
    threads: Option<usize>,
}

fn build_config(cli: &Cli) -> ibcsim::Result<CampaignConfig> {
    let mut config = match &cli.config {
        Some(path) => CampaignConfig::from_json_file(path)?,
        None => match cli.preset.as_str() {
            "desk" => CampaignConfig::desk_preset(),
            "full" => CampaignConfig::default(),
            other => {
                return Err(ibcsim::Error::Config(format!(
                    "unknown preset '{other}' (expected desk or full)"
                )))
            }
        },
    };
    if let Some(algorithms) = &cli.algorithm {
        config.algorithms = algorithms.clone();
    }
    if let Some(qos) = &cli.qos {
        config.qos_sweep = qos.clone();
    }
    if let Some(drops) = cli.drops {
        config.drops = drops;
    }
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    if let Some(engine) = cli.engine {
        config.engine = engine;
    }
    if let Some(noise) = cli.pilot_noise {
        config.pilot_noise_var = noise;
    }
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    eprintln!(
        "campaign: {} drops x {} qos points x {:?} ({:?} engine)",
        config.drops,
        config.qos_sweep.len(),
        config.algorithms,
        config.engine
    );
    let results = match bench::run_campaign(&config) {
        Ok(results) => results,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match bench::write_results(&results, &config.out_dir.clone()) {
        Ok((csv, summary)) => {
            eprintln!("wrote {} and {}", csv.display(), summary.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
