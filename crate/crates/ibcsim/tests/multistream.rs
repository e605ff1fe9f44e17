//! End-to-end checks with multiple spatial streams per receiver, including
//! heterogeneous stream counts, on both engines.

use ibcsim::algorithms::{self, AlgorithmMode, AlgorithmParams};
use ibcsim::model::Dimensions;
use ibcsim::runtime;
use ibcsim::scenario::{self, ScenarioConfig};

fn two_stream_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        dims: Dimensions::uniform(2, 2, 4, 2, 2).unwrap(),
        seed,
        ..ScenarioConfig::desk_preset()
    }
}

fn mixed_stream_config(seed: u64) -> ScenarioConfig {
    let dims = Dimensions {
        num_tx: 2,
        num_rx: 4,
        tx_antennas: 4,
        rx_antennas: 2,
        streams_per_rx: vec![2, 1, 1, 2],
        serving: vec![0, 0, 1, 1],
    };
    ScenarioConfig {
        dims,
        seed,
        ..ScenarioConfig::desk_preset()
    }
}

#[test]
fn two_streams_all_modes_run_clean() {
    let scenario = scenario::generate(&two_stream_config(3)).unwrap();
    for mode in AlgorithmMode::ALL {
        let params = AlgorithmParams::new(mode, 4).with_uniform_qos(1.0);
        let result = algorithms::run(&scenario, &params).unwrap();
        assert!(result.rates.iter().all(|&r| r.is_finite() && r >= 0.0));
        assert!(result.max_power_ratio <= 1.0 + 1e-6, "{mode}: {}", result.max_power_ratio);
        for (u, &d) in result.relaxations.iter().enumerate() {
            assert!((0.0..=1.0).contains(&d), "{mode} user {u}: d = {d}");
        }
    }
}

#[test]
fn two_streams_decentralized_matches_centralized() {
    for seed in [5u64, 11] {
        let scenario = scenario::generate(&two_stream_config(seed)).unwrap();
        let params = AlgorithmParams::new(AlgorithmMode::Proposed, 4).with_uniform_qos(1.5);
        let central = algorithms::run(&scenario, &params).unwrap();
        let (dist, _) = runtime::run_decentralized(&scenario, &params, 0.0).unwrap();
        for u in 0..4 {
            let diff = (central.rates[u] - dist.rates[u]).abs();
            assert!(
                diff <= 1e-6 * central.rates[u].max(1.0),
                "seed {seed} user {u}: {} vs {}",
                central.rates[u],
                dist.rates[u]
            );
        }
        assert_eq!(central.iterations_used, dist.iterations_used);
    }
}

#[test]
fn mixed_stream_counts_run_and_account() {
    let scenario = scenario::generate(&mixed_stream_config(7)).unwrap();
    let params = AlgorithmParams::new(AlgorithmMode::Proposed, 4).with_uniform_qos(1.0);
    let central = algorithms::run(&scenario, &params).unwrap();
    let (dist, trace) = runtime::run_decentralized(&scenario, &params, 0.0).unwrap();
    for u in 0..4 {
        let diff = (central.rates[u] - dist.rates[u]).abs();
        assert!(diff <= 1e-6 * central.rates[u].max(1.0));
    }
    // Message counts depend on node counts, not stream counts.
    let (b, u) = (2, 4);
    assert_eq!(trace.len(), dist.iterations_used * (2 * b + u) + b);
}

#[test]
fn mixed_streams_zero_qos_reduction_holds() {
    let scenario = scenario::generate(&mixed_stream_config(9)).unwrap();
    let results: Vec<_> = AlgorithmMode::ALL
        .iter()
        .map(|&mode| algorithms::run(&scenario, &AlgorithmParams::new(mode, 4)).unwrap())
        .collect();
    assert_eq!(results[0].rates, results[1].rates);
    assert_eq!(results[0].rates, results[2].rates);
}

#[test]
fn stream_count_above_antenna_limit_rejected() {
    assert!(Dimensions::uniform(2, 2, 4, 2, 3).is_err());
}

#[test]
fn user_rate_sums_stream_rates() {
    let scenario = scenario::generate(&two_stream_config(13)).unwrap();
    let params = AlgorithmParams::new(AlgorithmMode::Wmmse, 4);
    let beams = algorithms::init_beamformers_mrt(&scenario, &params).unwrap();
    for u in 0..4 {
        let total = ibcsim::model::user_rate(&scenario.channels, &beams, u).unwrap();
        let mut manual = 0.0;
        for s in 0..2 {
            let sinr = ibcsim::model::compute_sinr(&scenario.channels, &beams, (u, s)).unwrap();
            manual += ibcsim::model::stream_rate(sinr).unwrap();
        }
        assert_eq!(total, manual);
    }
}

#[test]
fn asymmetric_priorities_shift_allocation() {
    // Raising one user's priority raises the cap on its multiplier and
    // must not violate any domain constraint.
    let scenario = scenario::generate(&two_stream_config(17)).unwrap();
    let mut params = AlgorithmParams::new(AlgorithmMode::Proposed, 4).with_uniform_qos(2.0);
    params.priorities = vec![4.0, 1.0, 1.0, 1.0];
    let favored = algorithms::run(&scenario, &params).unwrap();
    let baseline = algorithms::run(
        &scenario,
        &AlgorithmParams::new(AlgorithmMode::Proposed, 4).with_uniform_qos(2.0),
    )
    .unwrap();
    assert!(favored.max_power_ratio <= 1.0 + 1e-6);
    assert!(favored.rates[0] >= baseline.rates[0] - 1e-9,
        "favored {:.4} vs baseline {:.4}", favored.rates[0], baseline.rates[0]);
}
