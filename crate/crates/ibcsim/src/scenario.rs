//! Reproducible random network drops: geometry, pathloss and fading.
//!
//! A drop places transmitters and receivers uniformly in a disc, associates
//! each receiver with its serving transmitter by construction, and draws
//! i.i.d. Rayleigh-faded channel matrices scaled by a log-distance pathloss.
//! Everything is a deterministic function of `(config, seed)`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::model::{ChannelSet, Dimensions};

/// Sub-stream tags so topology and channel draws stay independently
/// reproducible from one scenario seed.
const TOPOLOGY_STREAM: u64 = 0;
const CHANNEL_STREAM: u64 = 1;

const REJECTION_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub dims: Dimensions,
    /// Radius of the deployment disc (m).
    pub drop_radius: f64,
    /// Minimum distance between a receiver and its serving transmitter (m);
    /// also the near-field clamp of the pathloss curve.
    pub min_pair_distance: f64,
    /// Per-transmitter power budget (dBm).
    pub tx_power_dbm: f64,
    /// Per-receiver noise power (dBm).
    pub noise_dbm: f64,
    /// Pathloss at the 1 m reference distance (dB).
    pub pathloss_ref_db: f64,
    /// Pathloss exponent.
    pub pathloss_exponent: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    /// Full-scale deployment: 10 transmitters with 8 antennas, 2 receivers
    /// each with 4 antennas, dropped in a 400 m disc, 35 dBm budgets.
    fn default() -> Self {
        ScenarioConfig {
            dims: Dimensions::uniform(10, 2, 8, 4, 1).expect("static dims"),
            drop_radius: 400.0,
            min_pair_distance: 3.0,
            tx_power_dbm: 35.0,
            noise_dbm: -100.0,
            pathloss_ref_db: 41.0,
            pathloss_exponent: 3.5,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    /// Small deployment that keeps full sweeps fast while staying
    /// interference-limited: 3 transmitters with 4 antennas, 2 receivers
    /// each with 2 antennas, single stream.
    pub fn desk_preset() -> Self {
        ScenarioConfig {
            dims: Dimensions::uniform(3, 2, 4, 2, 1).expect("static dims"),
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if !(self.drop_radius > 0.0) {
            return Err(Error::config("drop_radius must be positive"));
        }
        if !(self.min_pair_distance > 0.0) {
            return Err(Error::config("min_pair_distance must be positive"));
        }
        if self.min_pair_distance >= 2.0 * self.drop_radius {
            return Err(Error::config(format!(
                "min_pair_distance {} cannot be met inside a disc of radius {}",
                self.min_pair_distance, self.drop_radius
            )));
        }
        if self.pathloss_exponent < 2.0 {
            return Err(Error::config("pathloss_exponent must be at least 2"));
        }
        Ok(())
    }

    /// Per-transmitter power budget in Watts.
    pub fn power_budget_watts(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Per-receiver noise power in Watts.
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Node placement of one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub tx_positions: Vec<[f64; 2]>,
    pub rx_positions: Vec<[f64; 2]>,
    /// Serving transmitter of each receiver.
    pub serving: Vec<usize>,
}

/// One fully drawn drop.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: Topology,
    pub channels: ChannelSet,
}

/// Mixes an index into a base seed (splitmix64 finalizer) so derived
/// streams are decorrelated but fully reproducible.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn uniform_in_disc(rng: &mut ChaCha8Rng, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    [r * theta.cos(), r * theta.sin()]
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Drops transmitters uniformly in the disc and each receiver uniformly in
/// the disc, re-drawn until it clears `min_pair_distance` from its serving
/// transmitter.
pub fn generate_topology(config: &ScenarioConfig) -> Result<Topology> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, TOPOLOGY_STREAM));
    let tx_positions: Vec<[f64; 2]> = (0..config.dims.num_tx)
        .map(|_| uniform_in_disc(&mut rng, config.drop_radius))
        .collect();
    let mut rx_positions = Vec::with_capacity(config.dims.num_rx);
    for u in 0..config.dims.num_rx {
        let serving_pos = tx_positions[config.dims.serving[u]];
        let mut attempts = 0;
        let pos = loop {
            let candidate = uniform_in_disc(&mut rng, config.drop_radius);
            if distance(candidate, serving_pos) >= config.min_pair_distance {
                break candidate;
            }
            attempts += 1;
            if attempts >= REJECTION_LIMIT {
                return Err(Error::config(format!(
                    "could not place receiver {u} at least {} m from its transmitter",
                    config.min_pair_distance
                )));
            }
        };
        rx_positions.push(pos);
    }
    Ok(Topology {
        tx_positions,
        rx_positions,
        serving: config.dims.serving.clone(),
    })
}

/// Log-distance pathloss in dB, clamped at `min_pair_distance`.
pub fn pathloss_db(distance_m: f64, config: &ScenarioConfig) -> f64 {
    let d = distance_m.max(config.min_pair_distance);
    config.pathloss_ref_db + 10.0 * config.pathloss_exponent * d.log10()
}

/// Draws the full channel set for a topology: every matrix is
/// `sqrt(linear pathloss gain)` times an i.i.d. unit-variance
/// circularly-symmetric complex Gaussian matrix.
pub fn draw_channels(topology: &Topology, config: &ScenarioConfig) -> Result<ChannelSet> {
    config.validate()?;
    let dims = &config.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, CHANNEL_STREAM));
    let mut gains = Vec::with_capacity(dims.num_tx);
    for b in 0..dims.num_tx {
        let mut row = Vec::with_capacity(dims.num_rx);
        for u in 0..dims.num_rx {
            let d = distance(topology.tx_positions[b], topology.rx_positions[u]);
            let amplitude = (10f64.powf(-pathloss_db(d, config) / 10.0) / 2.0).sqrt();
            let h = CMatrix::from_fn(dims.rx_antennas, dims.tx_antennas, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(amplitude * re, amplitude * im)
            });
            row.push(h);
        }
        gains.push(row);
    }
    let channels = ChannelSet {
        dims: dims.clone(),
        gains,
        noise_power: vec![config.noise_watts(); dims.num_rx],
    };
    channels.validate()?;
    Ok(channels)
}

/// Generates one drop: topology plus channels.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    let topology = generate_topology(config)?;
    let channels = draw_channels(&topology, config)?;
    Ok(Scenario {
        config: config.clone(),
        topology,
        channels,
    })
}

// --- JSON fixtures -------------------------------------------------------
//
// Channel matrices are stored flattened row-major as [re, im] pairs so the
// fixture format stays language-neutral.

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl MatrixJson {
    fn from_matrix(m: &CMatrix) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows())
                .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
                .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
                .collect(),
        }
    }

    fn into_matrix(self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::config("matrix payload length mismatch"));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            C64::new(re, im)
        }))
    }
}

#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    config: ScenarioConfig,
    tx_positions: Vec<[f64; 2]>,
    rx_positions: Vec<[f64; 2]>,
    serving: Vec<usize>,
    noise_power: Vec<f64>,
    channels: Vec<Vec<MatrixJson>>,
}

impl Scenario {
    pub fn to_json(&self) -> Result<String> {
        let doc = ScenarioJson {
            config: self.config.clone(),
            tx_positions: self.topology.tx_positions.clone(),
            rx_positions: self.topology.rx_positions.clone(),
            serving: self.topology.serving.clone(),
            noise_power: self.channels.noise_power.clone(),
            channels: self
                .channels
                .gains
                .iter()
                .map(|row| row.iter().map(MatrixJson::from_matrix).collect())
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioJson = serde_json::from_str(text)?;
        let mut gains = Vec::with_capacity(doc.channels.len());
        for row in doc.channels {
            let mut out = Vec::with_capacity(row.len());
            for m in row {
                out.push(m.into_matrix()?);
            }
            gains.push(out);
        }
        let channels = ChannelSet {
            dims: doc.config.dims.clone(),
            gains,
            noise_power: doc.noise_power,
        };
        channels.validate()?;
        let scenario = Scenario {
            topology: Topology {
                tx_positions: doc.tx_positions,
                rx_positions: doc.rx_positions,
                serving: doc.serving,
            },
            config: doc.config,
            channels,
        };
        Ok(scenario)
    }
}
