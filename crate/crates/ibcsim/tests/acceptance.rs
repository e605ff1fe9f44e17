//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Run with `cargo test -p ibcsim --test acceptance -- --nocapture`.

use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use ibcsim::algorithms::{self, AlgorithmMode, AlgorithmParams, AllocationResult};
use ibcsim::bench::{self, CampaignConfig, Engine, SolverConfig};
use ibcsim::model::{self, ChannelSet, Dimensions};
use ibcsim::runtime;
use ibcsim::scenario::{self, Scenario, ScenarioConfig, Topology};

const QOS_POINTS: [f64; 3] = [0.5, 1.5, 2.5];
const DROPS: usize = 50;
const BASE_SEED: u64 = 20240229;

type C64 = Complex<f64>;

fn criterion(name: &str, ok: bool, detail: &str) {
    println!(
        "acceptance: {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{name}: {detail}");
}

fn desk_scenario(drop: usize) -> Scenario {
    let config = ScenarioConfig {
        seed: scenario::derive_seed(BASE_SEED, drop as u64),
        ..ScenarioConfig::desk_preset()
    };
    scenario::generate(&config).expect("desk scenario")
}

struct PairedCampaign {
    /// results[qos_idx][drop][alg_idx], algorithms in `AlgorithmMode::ALL`
    /// order, identical scenario per (qos, drop) across algorithms.
    results: Vec<Vec<Vec<AllocationResult>>>,
    /// Zero-QoS point: [drop][alg_idx].
    zero_qos: Vec<Vec<AllocationResult>>,
}

static CAMPAIGN: OnceLock<PairedCampaign> = OnceLock::new();

fn campaign() -> &'static PairedCampaign {
    CAMPAIGN.get_or_init(|| {
        let run_point = |qos: f64| -> Vec<Vec<AllocationResult>> {
            (0..DROPS)
                .into_par_iter()
                .map(|drop| {
                    let scenario = desk_scenario(drop);
                    AlgorithmMode::ALL
                        .iter()
                        .map(|&mode| {
                            let params = AlgorithmParams::new(mode, 6).with_uniform_qos(qos);
                            algorithms::run(&scenario, &params).expect("run")
                        })
                        .collect()
                })
                .collect()
        };
        PairedCampaign {
            results: QOS_POINTS.iter().map(|&q| run_point(q)).collect(),
            zero_qos: run_point(0.0),
        }
    })
}

fn alg_index(mode: AlgorithmMode) -> usize {
    AlgorithmMode::ALL.iter().position(|&m| m == mode).unwrap()
}

/// Pooled mean degradation over unsatisfied links for one algorithm at one
/// qos point.
fn pooled_avg_degradation(point: &[Vec<AllocationResult>], alg: usize, qos: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for drop in point {
        for &r in &drop[alg].rates {
            let d = if r >= qos - 1e-6 { 0.0 } else { qos - r };
            if d > 0.0 {
                sum += d;
                count += 1;
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// One-sided exact sign test: probability of at least `wins` successes in
/// `n` fair coin flips.
fn sign_test_p(wins: usize, n: usize) -> f64 {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_half = 0.5f64.ln();
    (wins..=n)
        .map(|i| (ln_fact[n] - ln_fact[i] - ln_fact[n - i] + n as f64 * ln_half).exp())
        .sum()
}

#[test]
fn zero_qos_reduction() {
    let data = campaign();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for drop in &data.zero_qos {
        let base = drop[0].sum_rate;
        for r in &drop[1..] {
            if r.sum_rate != base {
                ok = false;
                worst = worst.max((r.sum_rate - base).abs());
            }
        }
    }
    criterion(
        "zero-qos reduction (identical per-drop sum rates)",
        ok,
        &format!("{DROPS} drops, max |difference| = {worst:e}"),
    );
}

#[test]
fn degradation_ordering() {
    let data = campaign();
    let proposed = alg_index(AlgorithmMode::Proposed);
    let mut all_ok = true;
    let mut details = Vec::new();
    for (qi, &qos) in QOS_POINTS.iter().enumerate() {
        let point = &data.results[qi];
        let avg_p = pooled_avg_degradation(point, proposed, qos);
        for baseline in [AlgorithmMode::Wmmse, AlgorithmMode::QosHard] {
            let b = alg_index(baseline);
            let avg_b = pooled_avg_degradation(point, b, qos);
            // Paired per-link sign test: identical channels per (drop, user).
            let mut wins = 0usize;
            let mut n = 0usize;
            for drop in point {
                for u in 0..drop[proposed].rates.len() {
                    let deg = |r: f64| if r >= qos - 1e-6 { 0.0 } else { qos - r };
                    let dp = deg(drop[proposed].rates[u]);
                    let db = deg(drop[b].rates[u]);
                    if dp != db {
                        n += 1;
                        if dp < db {
                            wins += 1;
                        }
                    }
                }
            }
            let p_value = if n == 0 { 1.0 } else { sign_test_p(wins, n) };
            let ok = avg_p < avg_b && p_value < 0.05;
            all_ok &= ok;
            details.push(format!(
                "qos={qos} vs {baseline}: avg {avg_p:.3} < {avg_b:.3}, wins {wins}/{n}, p={p_value:.2e}"
            ));
        }
    }
    criterion(
        "degradation ordering (Fig 5a trend)",
        all_ok,
        &details.join("; "),
    );
}

#[test]
fn sum_rate_sacrifice_bounded() {
    let data = campaign();
    let proposed = alg_index(AlgorithmMode::Proposed);
    let wmmse = alg_index(AlgorithmMode::Wmmse);
    let mut all_ok = true;
    let mut details = Vec::new();
    let mut check = |label: String, point: &[Vec<AllocationResult>]| {
        let mean =
            |alg: usize| point.iter().map(|d| d[alg].sum_rate).sum::<f64>() / point.len() as f64;
        let ratio = mean(proposed) / mean(wmmse);
        all_ok &= ratio >= 0.85;
        details.push(format!("{label}: ratio {ratio:.3}"));
    };
    check("qos=0".into(), &data.zero_qos);
    for (qi, &qos) in QOS_POINTS.iter().enumerate() {
        check(format!("qos={qos}"), &data.results[qi]);
    }
    criterion(
        "sum-rate sacrifice bounded (>= 85% of WMMSE)",
        all_ok,
        &details.join("; "),
    );
}

#[test]
fn deactivation_trend() {
    let data = campaign();
    let proposed = alg_index(AlgorithmMode::Proposed);
    let hard = alg_index(AlgorithmMode::QosHard);
    let point = &data.results[0]; // qos = 0.5
    let fraction = |alg: usize| {
        let mut dead = 0usize;
        let mut total = 0usize;
        for drop in point {
            for &r in &drop[alg].rates {
                if r < 1e-3 {
                    dead += 1;
                }
                total += 1;
            }
        }
        dead as f64 / total as f64
    };
    let f_p = fraction(proposed);
    let f_h = fraction(hard);
    criterion(
        "deactivation trend at qos=0.5 (PROPOSED <= QOS_HARD)",
        f_p <= f_h,
        &format!("proposed {f_p:.3} vs hard {f_h:.3}"),
    );
}

#[test]
fn wmmse_monotone_objective() {
    let violations: Vec<String> = (0..100usize)
        .into_par_iter()
        .filter_map(|k| {
            let config = ScenarioConfig {
                seed: scenario::derive_seed(BASE_SEED ^ 0xABCD, k as u64),
                ..ScenarioConfig::desk_preset()
            };
            let scenario = scenario::generate(&config).unwrap();
            let params = AlgorithmParams::new(AlgorithmMode::Wmmse, 6);
            let result = algorithms::run(&scenario, &params).unwrap();
            for (i, pair) in result.objective_history.windows(2).enumerate() {
                if pair[1] < pair[0] - 1e-9 * pair[0].abs().max(1.0) {
                    return Some(format!("instance {k} iter {i}: {} -> {}", pair[0], pair[1]));
                }
            }
            None
        })
        .collect();
    criterion(
        "wmmse monotone objective (100 instances)",
        violations.is_empty(),
        &format!(
            "{} violations{}",
            violations.len(),
            violations
                .first()
                .map(|v| format!(", first: {v}"))
                .unwrap_or_default()
        ),
    );
}

#[test]
fn power_feasibility() {
    let data = campaign();
    let mut worst: f64 = 0.0;
    for point in data.results.iter().chain(std::iter::once(&data.zero_qos)) {
        for drop in point {
            for result in drop {
                worst = worst.max(result.max_power_ratio);
            }
        }
    }
    criterion(
        "power feasibility (every iteration, every run)",
        worst <= 1.0 + 1e-6,
        &format!("max per-TX power / budget = {worst:.9}"),
    );
}

#[test]
fn mmse_identity() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    let mut rng = StdRng::seed_from_u64(0x1D);
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    while checked < 1000 {
        let num_tx = rng.random_range(1..=3);
        let num_rx = rng.random_range(1..=4usize).max(num_tx);
        let n_t = rng.random_range(1..=4);
        let n_r = rng.random_range(1..=3);
        let dims = Dimensions {
            num_tx,
            num_rx,
            tx_antennas: n_t,
            rx_antennas: n_r,
            streams_per_rx: vec![1; num_rx],
            serving: (0..num_rx).map(|u| u % num_tx).collect(),
        };
        let mut draw_matrix = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            })
        };
        let gains: Vec<Vec<DMatrix<C64>>> = (0..num_tx)
            .map(|_| (0..num_rx).map(|_| draw_matrix(n_r, n_t)).collect())
            .collect();
        let channels = ChannelSet {
            dims: dims.clone(),
            gains,
            noise_power: vec![rng.random_range(0.01..2.0); num_rx],
        };
        let tx: Vec<Vec<DVector<C64>>> = (0..num_rx)
            .map(|_| {
                vec![DVector::from_fn(n_t, |_, _| {
                    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                })]
            })
            .collect();
        for u in 0..num_rx {
            let w = model::mmse_receiver(&channels, &tx, (u, 0)).unwrap();
            let beams = model::BeamformerSet {
                tx: tx.clone(),
                rx: (0..num_rx)
                    .map(|v| {
                        vec![if v == u {
                            w.clone()
                        } else {
                            DVector::zeros(n_r)
                        }]
                    })
                    .collect(),
            };
            let e = model::stream_mse(&channels, &beams, (u, 0)).unwrap();
            let sinr = model::compute_sinr(&channels, &beams, (u, 0)).unwrap();
            worst = worst.max((e - 1.0 / (1.0 + sinr)).abs());
            checked += 1;
        }
    }
    criterion(
        "mmse identity |e - 1/(1+sinr)| <= 1e-9 (1000 streams)",
        worst <= 1e-9,
        &format!("{checked} streams, worst deviation {worst:.2e}"),
    );
}

#[test]
fn centralized_decentralized_equivalence() {
    let outcomes: Vec<(usize, f64, f64)> = (0..20usize)
        .into_par_iter()
        .map(|drop| {
            let scenario = desk_scenario(1000 + drop);
            let params = AlgorithmParams::new(AlgorithmMode::Proposed, 6).with_uniform_qos(1.5);
            let central = algorithms::run(&scenario, &params).unwrap();
            let (dist, _) = runtime::run_decentralized(&scenario, &params, 0.0).unwrap();
            let mut worst = 0.0f64;
            let mut worst_power: f64 = central.max_power_ratio.max(dist.max_power_ratio);
            for u in 0..6 {
                worst = worst.max((central.rates[u] - dist.rates[u]).abs());
            }
            worst_power = worst_power.max(dist.max_power_ratio);
            (drop, worst, worst_power)
        })
        .collect();
    let worst = outcomes.iter().map(|&(_, w, _)| w).fold(0.0, f64::max);
    let worst_power = outcomes.iter().map(|&(_, _, p)| p).fold(0.0, f64::max);
    assert!(
        worst_power <= 1.0 + 1e-6,
        "decentralized power ratio {worst_power}"
    );
    criterion(
        "centralized/decentralized equivalence (20 noiseless drops)",
        worst <= 1e-6,
        &format!("max per-user rate difference {worst:.2e}"),
    );
}

#[test]
fn small_instance_optimality() {
    // 2-user scalar infeasible fixture; oracle = exhaustive 100x100 grid
    // over both transmit powers with closed-form rates and relaxations.
    let h = [[1.0, 0.4], [0.4, 1.0]];
    let (noise, budget) = (0.1f64, 1.0f64);
    let qos = [2.8, 1.8];
    let rho = 4.0;

    let dims = Dimensions {
        num_tx: 2,
        num_rx: 2,
        tx_antennas: 1,
        rx_antennas: 1,
        streams_per_rx: vec![1; 2],
        serving: vec![0, 1],
    };
    let gains = h
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| DMatrix::from_element(1, 1, C64::new(v, 0.0)))
                .collect()
        })
        .collect();
    let config = ScenarioConfig {
        dims: dims.clone(),
        tx_power_dbm: 30.0,
        noise_dbm: 10.0 * noise.log10() + 30.0,
        ..ScenarioConfig::default()
    };
    let scenario = Scenario {
        topology: Topology {
            tx_positions: vec![[0.0, 0.0]; 2],
            rx_positions: vec![[0.0, 0.0]; 2],
            serving: vec![0, 1],
        },
        channels: ChannelSet {
            dims,
            gains,
            noise_power: vec![noise; 2],
        },
        config,
    };

    let grid = 100;
    let mut oracle = f64::NEG_INFINITY;
    for i in 0..grid {
        for j in 0..grid {
            let p0 = budget * i as f64 / (grid - 1) as f64;
            let p1 = budget * j as f64 / (grid - 1) as f64;
            let r0 = (1.0 + p0 * h[0][0] * h[0][0] / (p1 * h[1][0] * h[1][0] + noise)).log2();
            let r1 = (1.0 + p1 * h[1][1] * h[1][1] / (p0 * h[0][1] * h[0][1] + noise)).log2();
            let obj = r0 + r1
                - rho * ((qos[0] - r0).clamp(0.0, qos[0]) + (qos[1] - r1).clamp(0.0, qos[1]));
            oracle = oracle.max(obj);
        }
    }

    let mut params = AlgorithmParams::new(AlgorithmMode::Proposed, 2);
    params.qos = qos.to_vec();
    params.max_iters = 400;
    params.multiplier_step = 0.3;
    let result = algorithms::run(&scenario, &params).unwrap();
    let ok = result.penalized_objective >= oracle - 0.02 * oracle.abs();
    criterion(
        "small-instance optimality (within 2% of grid oracle)",
        ok,
        &format!(
            "achieved {:.4} vs oracle {oracle:.4} ({:+.2}%)",
            result.penalized_objective,
            100.0 * (result.penalized_objective - oracle) / oracle.abs()
        ),
    );
}

/// Full-scale variant of the trend criteria (10 TXs with 8 antennas, 20
/// RXs with 4). Takes a couple of minutes; run with `--ignored`. 40-drop
/// samples are too noisy to separate PROPOSED from QOS_HARD at the
/// hardest target, hence the larger count.
#[test]
#[ignore]
fn full_scale_trends() {
    let config = CampaignConfig {
        drops: 120,
        base_seed: BASE_SEED,
        ..CampaignConfig::default()
    };
    let config = CampaignConfig { qos_sweep: vec![0.5, 1.5, 2.5], ..config };
    let results = bench::run_campaign(&config).unwrap();
    let cell = |mode: AlgorithmMode, qos: f64| {
        results
            .summary
            .iter()
            .find(|c| c.algorithm == mode && c.qos == qos)
            .unwrap()
    };
    let mut ok = true;
    let mut details = Vec::new();
    for &qos in &[0.5, 1.5, 2.5] {
        let p = cell(AlgorithmMode::Proposed, qos);
        let w = cell(AlgorithmMode::Wmmse, qos);
        let h = cell(AlgorithmMode::QosHard, qos);
        ok &= p.avg_degradation_unsatisfied < w.avg_degradation_unsatisfied;
        ok &= p.avg_degradation_unsatisfied < h.avg_degradation_unsatisfied;
        ok &= p.mean_sum_rate >= 0.85 * w.mean_sum_rate;
        details.push(format!(
            "qos={qos}: deg P/H/W = {:.3}/{:.3}/{:.3}, sumrate ratio {:.3}",
            p.avg_degradation_unsatisfied,
            h.avg_degradation_unsatisfied,
            w.avg_degradation_unsatisfied,
            p.mean_sum_rate / w.mean_sum_rate
        ));
    }
    criterion("full-scale trends (120 drops)", ok, &details.join("; "));
}

#[test]
fn campaign_determinism() {
    let mut config = CampaignConfig {
        drops: 10,
        qos_sweep: vec![0.5, 1.5],
        solver: SolverConfig {
            max_iters: 60,
            ..SolverConfig::default()
        },
        engine: Engine::Centralized,
        base_seed: 77,
        ..CampaignConfig::desk_preset()
    };
    config.threads = 1;
    let single = bench::run_campaign(&config).unwrap();
    config.threads = 4;
    let multi = bench::run_campaign(&config).unwrap();
    let csv_single = bench::render_csv(&single.rows);
    let csv_multi = bench::render_csv(&multi.rows);
    criterion(
        "campaign determinism (1-thread vs 4-thread byte-identical CSV)",
        csv_single == csv_multi,
        &format!("{} bytes each", csv_single.len()),
    );
}
