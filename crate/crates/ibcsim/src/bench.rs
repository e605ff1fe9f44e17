//! Monte-Carlo campaign driver: config ingestion, parallel drops,
//! algorithm sweeps over QoS targets, CSV/JSON emission.
//!
//! Pairing discipline: the drop seed depends only on `(base_seed, drop)`,
//! never on the algorithm or the QoS point, so every algorithm sees the
//! identical channel realization. Results are keyed and sorted, making the
//! output byte-identical regardless of the worker count.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{self, AlgorithmMode, AlgorithmParams};
use crate::error::{Error, Result};
use crate::metrics::{self, DropMetrics, Ecdf};
use crate::runtime;
use crate::scenario::{self, ScenarioConfig};

pub const CSV_HEADER: &str =
    "drop,seed,algorithm,qos,user,rate_bps_hz,degradation,satisfied,deactivated,iterations,converged";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Engine {
    Centralized,
    Decentralized,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CENTRALIZED" => Ok(Engine::Centralized),
            "DECENTRALIZED" => Ok(Engine::Decentralized),
            other => Err(Error::config(format!("unknown engine '{other}'"))),
        }
    }
}

/// Solver constants shared by every run of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub penalty_slope: f64,
    pub multiplier_step: f64,
    pub max_iters: usize,
    pub obj_tol: f64,
    pub power_tol: f64,
    pub deactivation_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = AlgorithmParams::new(AlgorithmMode::Proposed, 1);
        SolverConfig {
            penalty_slope: p.penalty_slope,
            multiplier_step: p.multiplier_step,
            max_iters: p.max_iters,
            obj_tol: p.obj_tol,
            power_tol: p.power_tol,
            deactivation_eps: p.deactivation_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<AlgorithmMode>,
    /// Common minimum-rate requirement per sweep point (bits/s/Hz).
    pub qos_sweep: Vec<f64>,
    pub drops: usize,
    pub base_seed: u64,
    pub engine: Engine,
    #[serde(default)]
    pub pilot_noise_var: f64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 picks the rayon default.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Default for CampaignConfig {
    /// Full-scale campaign mirroring the evaluation protocol: 400 drops of
    /// the 10-transmitter deployment over a rate-requirement sweep.
    fn default() -> Self {
        CampaignConfig {
            scenario: ScenarioConfig::default(),
            algorithms: AlgorithmMode::ALL.to_vec(),
            qos_sweep: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
            drops: 400,
            base_seed: 1,
            engine: Engine::Centralized,
            pilot_noise_var: 0.0,
            out_dir: PathBuf::from("results"),
            threads: 0,
            solver: SolverConfig::default(),
        }
    }
}

impl CampaignConfig {
    /// Desk-scale preset: 3 transmitters, 2 receivers each, 50 drops —
    /// a full sweep in well under two minutes.
    pub fn desk_preset() -> Self {
        CampaignConfig {
            scenario: ScenarioConfig::desk_preset(),
            qos_sweep: vec![0.5, 1.5, 2.5],
            drops: 50,
            ..CampaignConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.drops == 0 {
            return Err(Error::config("drops must be at least 1"));
        }
        if self.qos_sweep.is_empty() {
            return Err(Error::config("qos_sweep must be non-empty"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("algorithms must be non-empty"));
        }
        if !(self.pilot_noise_var >= 0.0) {
            return Err(Error::config("pilot_noise_var must be non-negative"));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: CampaignConfig = serde_json::from_str(&text)?;
        Ok(config)
    }

    fn params_for(&self, mode: AlgorithmMode, qos: f64) -> AlgorithmParams {
        let num_rx = self.scenario.dims.num_rx;
        let mut params = AlgorithmParams::new(mode, num_rx).with_uniform_qos(qos);
        params.penalty_slope = self.solver.penalty_slope;
        params.multiplier_step = self.solver.multiplier_step;
        params.max_iters = self.solver.max_iters;
        params.obj_tol = self.solver.obj_tol;
        params.power_tol = self.solver.power_tol;
        params.deactivation_eps = self.solver.deactivation_eps;
        params
    }
}

/// One CSV row: a single link of a single run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkRow {
    pub drop: usize,
    pub seed: u64,
    pub algorithm: AlgorithmMode,
    pub qos: f64,
    pub user: usize,
    pub rate_bps_hz: f64,
    pub degradation: f64,
    pub satisfied: bool,
    pub deactivated: bool,
    pub iterations: usize,
    pub converged: bool,
}

/// Aggregates of one (algorithm, qos) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub algorithm: AlgorithmMode,
    pub qos: f64,
    pub avg_degradation_unsatisfied: f64,
    pub deactivated_fraction: f64,
    pub mean_sum_rate: f64,
    /// Empirical CDF of the unsatisfied links' degradations; empty when
    /// every link met its requirement.
    pub cdf_support: Vec<f64>,
    pub cdf_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CampaignResults {
    pub config: CampaignConfig,
    pub rows: Vec<LinkRow>,
    pub summary: Vec<SummaryEntry>,
    /// Per (algorithm, qos) drop records, aligned with `summary`.
    pub metrics: Vec<Vec<DropMetrics>>,
}

fn run_one(
    config: &CampaignConfig,
    qos: f64,
    drop: usize,
) -> Result<Vec<(AlgorithmMode, DropMetrics, Vec<LinkRow>)>> {
    let seed = scenario::derive_seed(config.base_seed, drop as u64);
    let scenario_config = ScenarioConfig {
        seed,
        ..config.scenario.clone()
    };
    let scenario = scenario::generate(&scenario_config)?;
    let mut out = Vec::with_capacity(config.algorithms.len());
    for &mode in &config.algorithms {
        let params = config.params_for(mode, qos);
        let result = match config.engine {
            Engine::Centralized => algorithms::run(&scenario, &params)?,
            Engine::Decentralized => {
                runtime::run_decentralized(&scenario, &params, config.pilot_noise_var)?.0
            }
        };
        let drop_metrics =
            DropMetrics::from_result(&result, &params.qos, params.deactivation_eps, mode, seed)?;
        let rows = (0..result.rates.len())
            .map(|u| LinkRow {
                drop,
                seed,
                algorithm: mode,
                qos,
                user: u,
                rate_bps_hz: result.rates[u],
                degradation: drop_metrics.degradation[u],
                satisfied: result.satisfied[u],
                deactivated: result.deactivated[u],
                iterations: result.iterations_used,
                converged: result.converged,
            })
            .collect();
        out.push((mode, drop_metrics, rows));
    }
    Ok(out)
}

/// Runs the full campaign. Deterministic given `(config, base_seed)`
/// regardless of the worker count.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResults> {
    config.validate()?;
    let tasks: Vec<(usize, usize)> = (0..config.qos_sweep.len())
        .flat_map(|qi| (0..config.drops).map(move |d| (qi, d)))
        .collect();

    let execute = || -> Result<Vec<_>> {
        tasks
            .par_iter()
            .map(|&(qi, drop)| {
                let per_alg = run_one(config, config.qos_sweep[qi], drop)?;
                Ok(((qi, drop), per_alg))
            })
            .collect()
    };
    let mut outcomes = if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(execute)?
    } else {
        execute()?
    };
    outcomes.sort_by_key(|&((qi, drop), _)| (qi, drop));

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut metrics_cells = Vec::new();
    for (qi, &qos) in config.qos_sweep.iter().enumerate() {
        for &mode in &config.algorithms {
            let cell: Vec<DropMetrics> = outcomes
                .iter()
                .filter(|&&((q, _), _)| q == qi)
                .flat_map(|(_, per_alg)| per_alg.iter())
                .filter(|(m, _, _)| *m == mode)
                .map(|(_, dm, _)| dm.clone())
                .collect();
            let unsatisfied: Vec<f64> = cell
                .iter()
                .flat_map(|dm| dm.degradation.iter().copied())
                .filter(|&d| d > 0.0)
                .collect();
            let (cdf_support, cdf_values) = if unsatisfied.is_empty() {
                (Vec::new(), Vec::new())
            } else {
                let Ecdf {
                    support,
                    cumulative,
                } = metrics::empirical_cdf(&unsatisfied)?;
                (support, cumulative)
            };
            summary.push(SummaryEntry {
                algorithm: mode,
                qos,
                avg_degradation_unsatisfied: metrics::average_degradation_unsatisfied(&cell)?,
                deactivated_fraction: metrics::deactivated_fraction(
                    &cell,
                    config.solver.deactivation_eps,
                )?,
                mean_sum_rate: cell.iter().map(|dm| dm.sum_rate).sum::<f64>() / cell.len() as f64,
                cdf_support,
                cdf_values,
            });
            metrics_cells.push(cell);
        }
        for ((_, _), per_alg) in outcomes.iter().filter(|&&((q, _), _)| q == qi) {
            for (_, _, link_rows) in per_alg {
                rows.extend(link_rows.iter().cloned());
            }
        }
        eprintln!(
            "qos {:>5}: {} drops x {} algorithms done",
            qos,
            config.drops,
            config.algorithms.len()
        );
    }

    Ok(CampaignResults {
        config: config.clone(),
        rows,
        summary,
        metrics: metrics_cells,
    })
}

/// Renders the per-link CSV document.
pub fn render_csv(rows: &[LinkRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.drop,
            r.seed,
            r.algorithm,
            r.qos,
            r.user,
            r.rate_bps_hz,
            r.degradation,
            r.satisfied,
            r.deactivated,
            r.iterations,
            r.converged
        ));
    }
    out
}

/// Renders the summary JSON document.
pub fn render_summary(results: &CampaignResults) -> Result<String> {
    #[derive(Serialize)]
    struct SummaryDoc<'a> {
        config: &'a CampaignConfig,
        cells: &'a [SummaryEntry],
    }
    Ok(serde_json::to_string_pretty(&SummaryDoc {
        config: &results.config,
        cells: &results.summary,
    })?)
}

/// Writes `results.csv` and `summary.json` under `out_dir`; returns both
/// paths.
pub fn write_results(results: &CampaignResults, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    if results.rows.is_empty() {
        return Err(Error::domain("no results to write"));
    }
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("results.csv");
    let summary_path = out_dir.join("summary.json");
    let mut csv = std::fs::File::create(&csv_path)?;
    csv.write_all(render_csv(&results.rows).as_bytes())?;
    let mut summary = std::fs::File::create(&summary_path)?;
    summary.write_all(render_summary(results)?.as_bytes())?;
    summary.write_all(b"\n")?;
    Ok((csv_path, summary_path))
}
