//! Decentralized message-passing execution of the solvers.
//!
//! Nodes never see channel matrices other than through the air: the medium
//! (which owns the true channels) turns each transmission into per-node
//! observations of *effective* vectors. A configuration frame is
//!
//! 1. `FORWARD` — every TX sends precoded pilots; RX `u` observes
//!    `H_{b_i,u} m_{i,j}` for every stream.
//! 2. Each RX computes receivers, MSEs and its rate, updates its QoS
//!    control factors and stages a backward pilot.
//! 3. `BACKWARD` — every RX sends `sqrt(t) w` pilots; TX `b` observes
//!    `sqrt(t) H_{b,u}^H w` per stream via reciprocity, and the serving TX
//!    additionally receives the scalar factors `(t, lambda, d)`.
//! 4. `INTER_TX` — transmitters re-broadcast their served streams' dynamic
//!    weights over the backhaul.
//! 5. Each TX rebuilds its update covariance purely from backward-pilot
//!    outer products and re-solves its beams under the power budget.
//!
//! With noiseless pilots the arithmetic is identical to
//! [`crate::algorithms::run`], operation for operation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::algorithms::{
    self, penalized_objective_value, AlgorithmMode, AlgorithmParams, AllocationResult,
};
use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};
use crate::model;
use crate::scenario::{derive_seed, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Tx,
    Rx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Forward,
    Backward,
    InterTx,
}

/// Stream key `(u, s)`.
pub type StreamKey = (usize, usize);

/// Effective pilot vectors for one stream as observed at one node.
#[derive(Debug, Clone)]
pub struct ObservedStream {
    pub stream: StreamKey,
    pub vector: CVector,
}

/// Forward pilot of one TX: per receiver, the effective vectors of this
/// transmitter's streams as seen at that receiver's antennas.
#[derive(Debug, Clone)]
pub struct ForwardPilot {
    pub per_rx: Vec<Vec<ObservedStream>>,
}

/// Backward pilot of one RX: per transmitter, the sqrt(t)-weighted receive
/// filters pushed through the reciprocal channels, plus the QoS control
/// scalars readable only by the serving TX.
#[derive(Debug, Clone)]
pub struct BackwardPilot {
    pub per_tx: Vec<Vec<ObservedStream>>,
    pub stream_weights: Vec<(usize, f64)>,
    pub multiplier: f64,
    pub relaxation: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightEntry {
    pub rx: usize,
    pub stream: usize,
    pub weight: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone)]
pub struct InterTxWeights {
    pub entries: Vec<WeightEntry>,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Forward(ForwardPilot),
    Backward(BackwardPilot),
    InterTx(InterTxWeights),
}

#[derive(Debug, Clone)]
pub struct Message {
    pub phase: Phase,
    pub sender: NodeId,
    pub payload: Payload,
}

impl Message {
    /// In-flight payload size: 16 bytes per complex entry, 8 per scalar.
    pub fn payload_bytes(&self) -> usize {
        match &self.payload {
            Payload::Forward(p) => p.per_rx.iter().flatten().map(|o| o.vector.len() * 16).sum(),
            Payload::Backward(p) => {
                let pilots: usize = p.per_tx.iter().flatten().map(|o| o.vector.len() * 16).sum();
                pilots + (p.stream_weights.len() + 2) * 8
            }
            Payload::InterTx(p) => p.entries.len() * 32,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub phase: Phase,
    pub sender_kind: NodeKind,
    pub sender_index: usize,
    pub payload_bytes: usize,
}

/// Audit log of every transmitted message.
#[derive(Debug, Clone, Default)]
pub struct EventTrace {
    pub records: Vec<TraceRecord>,
}

impl EventTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Newline-delimited JSON, one record per line.
    pub fn write_ndjson<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Receiver node: only locally observable quantities. The channel shows up
/// exclusively as filtered effective vectors.
#[derive(Debug, Clone)]
pub struct RxNodeState {
    pub id: NodeId,
    pub serving_tx: usize,
    pub noise_power: f64,
    pub qos: f64,
    pub priority: f64,
    mode: AlgorithmMode,
    multiplier_step: f64,
    penalty_slope: f64,
    /// Latest forward observations, every stream, canonical order.
    pub observed: Vec<ObservedStream>,
    pub receivers: Vec<CVector>,
    pub mses: Vec<f64>,
    pub rate: f64,
    pub multiplier: f64,
    pub relaxation: f64,
    pub stream_weights: Vec<f64>,
    staged_backward: Option<BackwardEmission>,
}

/// Raw backward transmission before the medium applies reciprocity.
#[derive(Debug, Clone)]
struct BackwardEmission {
    /// sqrt(t)-scaled receive filters per own stream.
    pilots: Vec<CVector>,
    stream_weights: Vec<(usize, f64)>,
    multiplier: f64,
    relaxation: f64,
}

/// Per-frame receiver report consumed by the simulation driver.
#[derive(Debug, Clone, Copy)]
pub struct RxReport {
    pub rx: usize,
    pub rate: f64,
    /// Relaxation in effect when the frame started (pairs with this rate).
    pub relaxation_prev: f64,
}

/// Transmitter node: its own beams plus message-derived state.
#[derive(Debug, Clone)]
pub struct TxNodeState {
    pub id: NodeId,
    pub power_budget: f64,
    pub power_tol: f64,
    /// Served streams in canonical order.
    pub served: Vec<StreamKey>,
    /// Current transmit vectors, one per served stream.
    pub beams: Vec<CVector>,
    /// Latest backward observations, every stream, canonical order.
    pub backward_obs: Vec<ObservedStream>,
    /// Dynamic weights of the served streams (backward side info).
    pub served_weights: Vec<(StreamKey, f64)>,
    /// Served users' multipliers (backward side info).
    pub served_multipliers: Vec<(usize, f64)>,
    /// Weight tuples from the latest inter-TX exchange.
    pub weight_table: Vec<WeightEntry>,
}

/// One receiver frame step: ingest forward observations, recompute
/// receivers/MSEs/rate, report, then update the QoS control factors and
/// stage the backward pilot.
pub fn rx_step(node: &mut RxNodeState, observed: Vec<ObservedStream>) -> Result<RxReport> {
    node.observed = observed;
    let vectors: Vec<&CVector> = node.observed.iter().map(|o| &o.vector).collect();
    let own_base = node
        .observed
        .iter()
        .position(|o| o.stream.0 == node.id.index)
        .ok_or_else(|| Error::protocol("forward observations miss this receiver's streams"))?;

    let num_streams = node.receivers.len();
    let mut rate = 0.0;
    let observed_owned: Vec<CVector> = vectors.iter().map(|v| (*v).clone()).collect();
    for s in 0..num_streams {
        let own = own_base + s;
        let w = model::mmse_filter(&observed_owned, own, node.noise_power)?;
        node.mses[s] = model::mse_from_observed(&observed_owned, own, &w, node.noise_power);
        let sinr = if w.norm_squared() == 0.0 {
            0.0
        } else {
            model::sinr_from_observed(&observed_owned, own, &w, node.noise_power)?
        };
        rate += model::stream_rate(sinr)?;
        node.receivers[s] = w;
    }
    node.rate = rate;

    let report = RxReport {
        rx: node.id.index,
        rate,
        relaxation_prev: node.relaxation,
    };

    let cap = algorithms::multiplier_cap(node.mode, node.priority, node.penalty_slope);
    let step = algorithms::multiplier_step_for(node.mode, node.multiplier_step);
    node.multiplier = algorithms::next_multiplier(node.multiplier, node.qos, rate, step, cap);
    node.relaxation = algorithms::relaxation_value(node.mode, node.qos, rate);
    let mut pilots = Vec::with_capacity(num_streams);
    let mut weights = Vec::with_capacity(num_streams);
    for s in 0..num_streams {
        let t = algorithms::stream_weight_value(node.priority, node.multiplier, node.mses[s])?;
        node.stream_weights[s] = t;
        pilots.push(&node.receivers[s] * C64::new(t.sqrt(), 0.0));
        weights.push((s, t));
    }
    node.staged_backward = Some(BackwardEmission {
        pilots,
        stream_weights: weights,
        multiplier: node.multiplier,
        relaxation: node.relaxation,
    });
    Ok(report)
}

/// One transmitter frame step: rebuild the update covariance from backward
/// pilot outer products, run the power bisection, install the new beams
/// (the next forward pilot). Returns the emitted power.
pub fn tx_step(node: &mut TxNodeState) -> Result<f64> {
    if node.backward_obs.is_empty() {
        return Err(Error::protocol("transmit step before any backward phase"));
    }
    let weighted: Vec<CVector> = node.backward_obs.iter().map(|o| o.vector.clone()).collect();
    let served: Vec<(usize, f64)> = node
        .served
        .iter()
        .map(|key| {
            let idx = node
                .backward_obs
                .iter()
                .position(|o| o.stream == *key)
                .ok_or_else(|| Error::protocol(format!("missing backward pilot for {key:?}")))?;
            let t = node
                .served_weights
                .iter()
                .find(|(k, _)| k == key)
                .map(|&(_, t)| t)
                .ok_or_else(|| Error::protocol(format!("missing stream weight for {key:?}")))?;
            Ok((idx, t.sqrt()))
        })
        .collect::<Result<_>>()?;
    let (beams, _mu) =
        algorithms::solve_tx_beamformers(&weighted, &served, node.power_budget, node.power_tol)?;
    let power = beams.iter().map(|m| m.norm_squared()).sum();
    node.beams = beams;
    Ok(power)
}

/// Outcome of one full frame.
fn pilot_noise(rng: &mut ChaCha8Rng, variance: f64, len: usize) -> Option<CVector> {
    if variance == 0.0 {
        return None;
    }
    let amp = (variance / 2.0).sqrt();
    Some(CVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(amp * re, amp * im)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOutcome {
    /// Beams were updated; the loop continues.
    Running,
    /// Objective streak satisfied; beams from the previous frame stand.
    Converged,
    /// Iteration budget exhausted.
    MaxIters,
}

/// The over-the-air medium plus both node populations.
pub struct DecentralizedSim<'a> {
    scenario: &'a Scenario,
    params: &'a AlgorithmParams,
    pub tx_nodes: Vec<TxNodeState>,
    pub rx_nodes: Vec<RxNodeState>,
    pilot_noise_var: f64,
    /// Inter-TX reach; `None` broadcasts to every transmitter.
    pub neighbor_radius: Option<f64>,
    rng: ChaCha8Rng,
    expected_phase: Phase,
    pub trace: EventTrace,
    frame: usize,
    completed_frames: usize,
    objective_history: Vec<f64>,
    streak: usize,
    converged: bool,
    last_rates: Vec<f64>,
    last_relaxations: Vec<f64>,
    max_power_ratio: f64,
}

impl<'a> DecentralizedSim<'a> {
    pub fn new(
        scenario: &'a Scenario,
        params: &'a AlgorithmParams,
        pilot_noise_var: f64,
    ) -> Result<Self> {
        let dims = &scenario.config.dims;
        params.validate(dims.num_rx)?;
        if !(pilot_noise_var >= 0.0) {
            return Err(Error::config("pilot noise variance must be non-negative"));
        }

        // TX nodes start from the same MRT initialization as the
        // centralized solver; serving-link CSI at setup time is local
        // knowledge under TDD reciprocity.
        let init = algorithms::init_beamformers_mrt(scenario, params)?;
        let budget = scenario.config.power_budget_watts();
        let tx_nodes = (0..dims.num_tx)
            .map(|b| {
                let served: Vec<StreamKey> = dims
                    .streams()
                    .filter(|&(u, _)| dims.serving[u] == b)
                    .collect();
                let beams = served.iter().map(|&(u, s)| init.tx[u][s].clone()).collect();
                TxNodeState {
                    id: NodeId {
                        kind: NodeKind::Tx,
                        index: b,
                    },
                    power_budget: budget,
                    power_tol: params.power_tol,
                    served,
                    beams,
                    backward_obs: Vec::new(),
                    served_weights: Vec::new(),
                    served_multipliers: Vec::new(),
                    weight_table: Vec::new(),
                }
            })
            .collect();
        let rx_nodes = (0..dims.num_rx)
            .map(|u| {
                let s_u = dims.streams_per_rx[u];
                RxNodeState {
                    id: NodeId {
                        kind: NodeKind::Rx,
                        index: u,
                    },
                    serving_tx: dims.serving[u],
                    noise_power: scenario.channels.noise_power[u],
                    qos: params.qos[u],
                    priority: params.priorities[u],
                    mode: params.mode,
                    multiplier_step: params.multiplier_step,
                    penalty_slope: params.penalty_slope,
                    observed: Vec::new(),
                    receivers: vec![CVector::zeros(dims.rx_antennas); s_u],
                    mses: vec![1.0; s_u],
                    rate: 0.0,
                    multiplier: 0.0,
                    relaxation: 0.0,
                    stream_weights: vec![1.0; s_u],
                    staged_backward: None,
                }
            })
            .collect();
        Ok(DecentralizedSim {
            scenario,
            params,
            tx_nodes,
            rx_nodes,
            pilot_noise_var,
            neighbor_radius: None,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(scenario.config.seed, 0x70_69_6c_6f_74)),
            expected_phase: Phase::Forward,
            trace: EventTrace::default(),
            frame: 0,
            completed_frames: 0,
            objective_history: Vec::new(),
            streak: 0,
            converged: false,
            last_rates: vec![0.0; dims.num_rx],
            last_relaxations: vec![0.0; dims.num_rx],
            max_power_ratio: 0.0,
        })
    }

    fn check_phase(&mut self, phase: Phase) -> Result<()> {
        if phase != self.expected_phase {
            return Err(Error::protocol(format!(
                "phase {phase:?} requested, expected {:?}",
                self.expected_phase
            )));
        }
        self.expected_phase = match phase {
            Phase::Forward => Phase::Backward,
            Phase::Backward => Phase::InterTx,
            Phase::InterTx => Phase::Forward,
        };
        Ok(())
    }

    /// Executes one signaling phase: builds the messages, logs them, and
    /// delivers to each node only what is observable at its position.
    pub fn run_frame_phase(&mut self, phase: Phase) -> Result<Vec<Message>> {
        self.check_phase(phase)?;
        let dims = &self.scenario.config.dims;
        let mut messages = Vec::new();
        match phase {
            Phase::Forward => {
                // Per RX: accumulated observations over every TX's pilots,
                // canonical stream order.
                let mut inboxes: Vec<Vec<ObservedStream>> =
                    vec![Vec::with_capacity(dims.total_streams()); dims.num_rx];
                for b in 0..dims.num_tx {
                    let mut per_rx = Vec::with_capacity(dims.num_rx);
                    for u in 0..dims.num_rx {
                        let channel = &self.scenario.channels.gains[b][u];
                        let mut observed = Vec::with_capacity(self.tx_nodes[b].served.len());
                        for (key, m) in self.tx_nodes[b]
                            .served
                            .iter()
                            .zip(self.tx_nodes[b].beams.iter())
                        {
                            let mut v = channel * m;
                            if let Some(noise) =
                                pilot_noise(&mut self.rng, self.pilot_noise_var, v.len())
                            {
                                v += noise;
                            }
                            observed.push(ObservedStream {
                                stream: *key,
                                vector: v,
                            });
                        }
                        per_rx.push(observed);
                    }
                    for (u, inbox) in inboxes.iter_mut().enumerate() {
                        inbox.extend(per_rx[u].iter().cloned());
                    }
                    messages.push(Message {
                        phase,
                        sender: NodeId {
                            kind: NodeKind::Tx,
                            index: b,
                        },
                        payload: Payload::Forward(ForwardPilot { per_rx }),
                    });
                }
                for (u, mut inbox) in inboxes.into_iter().enumerate() {
                    inbox.sort_by_key(|o| o.stream);
                    self.rx_nodes[u].observed = inbox;
                }
            }
            Phase::Backward => {
                let mut tx_inboxes: Vec<Vec<ObservedStream>> =
                    vec![Vec::with_capacity(dims.total_streams()); dims.num_tx];
                for u in 0..dims.num_rx {
                    let emission = self.rx_nodes[u].staged_backward.take().ok_or_else(|| {
                        Error::protocol(format!("receiver {u} has no staged backward pilot"))
                    })?;
                    let mut per_tx = Vec::with_capacity(dims.num_tx);
                    for b in 0..dims.num_tx {
                        let channel = &self.scenario.channels.gains[b][u];
                        let mut observed = Vec::with_capacity(emission.pilots.len());
                        for (s, pilot) in emission.pilots.iter().enumerate() {
                            let mut v = channel.adjoint() * pilot;
                            if let Some(noise) =
                                pilot_noise(&mut self.rng, self.pilot_noise_var, v.len())
                            {
                                v += noise;
                            }
                            observed.push(ObservedStream {
                                stream: (u, s),
                                vector: v,
                            });
                        }
                        per_tx.push(observed);
                    }
                    for (b, inbox) in tx_inboxes.iter_mut().enumerate() {
                        inbox.extend(per_tx[b].iter().cloned());
                    }
                    let serving = self.rx_nodes[u].serving_tx;
                    let tx = &mut self.tx_nodes[serving];
                    tx.served_weights.retain(|(key, _)| key.0 != u);
                    tx.served_weights
                        .extend(emission.stream_weights.iter().map(|&(s, t)| ((u, s), t)));
                    tx.served_weights.sort_by_key(|&(key, _)| key);
                    tx.served_multipliers.retain(|&(rx, _)| rx != u);
                    tx.served_multipliers.push((u, emission.multiplier));
                    tx.served_multipliers.sort_by_key(|&(rx, _)| rx);
                    messages.push(Message {
                        phase,
                        sender: NodeId {
                            kind: NodeKind::Rx,
                            index: u,
                        },
                        payload: Payload::Backward(BackwardPilot {
                            per_tx,
                            stream_weights: emission.stream_weights,
                            multiplier: emission.multiplier,
                            relaxation: emission.relaxation,
                        }),
                    });
                }
                for (b, mut inbox) in tx_inboxes.into_iter().enumerate() {
                    inbox.sort_by_key(|o| o.stream);
                    self.tx_nodes[b].backward_obs = inbox;
                }
            }
            Phase::InterTx => {
                for b in 0..dims.num_tx {
                    self.tx_nodes[b].weight_table.clear();
                }
                for b in 0..dims.num_tx {
                    let entries: Vec<WeightEntry> = self.tx_nodes[b]
                        .served_weights
                        .iter()
                        .map(|&((u, s), t)| WeightEntry {
                            rx: u,
                            stream: s,
                            weight: t,
                            multiplier: self.tx_nodes[b]
                                .served_multipliers
                                .iter()
                                .find(|&&(rx, _)| rx == u)
                                .map(|&(_, l)| l)
                                .unwrap_or(0.0),
                        })
                        .collect();
                    for other in 0..dims.num_tx {
                        if !self.within_backhaul_reach(b, other) {
                            continue;
                        }
                        self.tx_nodes[other]
                            .weight_table
                            .extend(entries.iter().copied());
                    }
                    messages.push(Message {
                        phase,
                        sender: NodeId {
                            kind: NodeKind::Tx,
                            index: b,
                        },
                        payload: Payload::InterTx(InterTxWeights { entries }),
                    });
                }
            }
        }
        for m in &messages {
            self.trace.records.push(TraceRecord {
                iter: self.frame,
                phase: m.phase,
                sender_kind: m.sender.kind,
                sender_index: m.sender.index,
                payload_bytes: m.payload_bytes(),
            });
        }
        Ok(messages)
    }

    fn within_backhaul_reach(&self, from: usize, to: usize) -> bool {
        match self.neighbor_radius {
            None => true,
            Some(radius) => {
                let a = self.scenario.topology.tx_positions[from];
                let b = self.scenario.topology.tx_positions[to];
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() <= radius
            }
        }
    }

    /// Runs one frame: forward pilots, receiver steps, stopping check, and
    /// (when continuing) backward pilots, inter-TX exchange, transmit steps.
    pub fn step_frame(&mut self) -> Result<FrameOutcome> {
        self.frame += 1;
        self.run_frame_phase(Phase::Forward)?;
        let mut reports = Vec::with_capacity(self.rx_nodes.len());
        for u in 0..self.rx_nodes.len() {
            let observed = std::mem::take(&mut self.rx_nodes[u].observed);
            reports.push(rx_step(&mut self.rx_nodes[u], observed)?);
        }
        for report in &reports {
            self.last_rates[report.rx] = report.rate;
            self.last_relaxations[report.rx] = report.relaxation_prev;
        }
        let obj = penalized_objective_value(
            &self.last_rates,
            &self.last_relaxations,
            &self.params.priorities,
            self.params.penalty_slope,
        );
        if let Some(&prev) = self.objective_history.last() {
            if (obj - prev).abs() < self.params.obj_tol {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.objective_history.push(obj);
        if self.streak >= 5 {
            self.converged = true;
            self.expected_phase = Phase::Forward;
            return Ok(FrameOutcome::Converged);
        }
        if self.completed_frames >= self.params.max_iters {
            self.expected_phase = Phase::Forward;
            return Ok(FrameOutcome::MaxIters);
        }

        self.run_frame_phase(Phase::Backward)?;
        self.run_frame_phase(Phase::InterTx)?;
        for b in 0..self.tx_nodes.len() {
            let power = tx_step(&mut self.tx_nodes[b])?;
            let ratio = power / self.tx_nodes[b].power_budget;
            if ratio > self.max_power_ratio {
                self.max_power_ratio = ratio;
            }
        }
        self.completed_frames += 1;
        Ok(FrameOutcome::Running)
    }

    /// Current transmit beams as `[u][s]`, for comparison against the
    /// centralized engine.
    pub fn tx_beams(&self) -> Vec<Vec<CVector>> {
        let dims = &self.scenario.config.dims;
        let mut beams: Vec<Vec<CVector>> = dims
            .streams_per_rx
            .iter()
            .map(|&s| vec![CVector::zeros(dims.tx_antennas); s])
            .collect();
        for node in &self.tx_nodes {
            for (key, m) in node.served.iter().zip(node.beams.iter()) {
                beams[key.0][key.1] = m.clone();
            }
        }
        beams
    }

    pub fn completed_frames(&self) -> usize {
        self.completed_frames
    }

    pub fn objective_history(&self) -> &[f64] {
        &self.objective_history
    }

    /// Achieved rates measured over the true channels with the nodes'
    /// receive filters. With noiseless pilots this reproduces the nodes'
    /// own estimates bit for bit; with noisy pilots it is the honest
    /// performance measurement (node estimates are inflated by pilot
    /// noise energy).
    fn true_rates(&self) -> Result<Vec<f64>> {
        let dims = &self.scenario.config.dims;
        let beams = self.tx_beams();
        let mut rates = Vec::with_capacity(dims.num_rx);
        for u in 0..dims.num_rx {
            let observed = model::effective_rx_vectors(&self.scenario.channels, &beams, u);
            let noise = self.scenario.channels.noise_power[u];
            let mut rate = 0.0;
            for s in 0..dims.streams_per_rx[u] {
                let own = model::stream_flat_index(dims, (u, s));
                let w = &self.rx_nodes[u].receivers[s];
                let sinr = if w.norm_squared() == 0.0 {
                    0.0
                } else {
                    model::sinr_from_observed(&observed, own, w, noise)?
                };
                rate += model::stream_rate(sinr)?;
            }
            rates.push(rate);
        }
        Ok(rates)
    }

    fn into_result(self) -> Result<(AllocationResult, EventTrace)> {
        let rates = self.true_rates()?;
        let result = AllocationResult::from_final_rates(
            rates,
            self.objective_history,
            self.completed_frames,
            self.converged,
            self.max_power_ratio,
            self.params,
        );
        Ok((result, self.trace))
    }
}

/// Runs the decentralized engine to completion.
///
/// Stops under the same rule as the centralized solver; the final frame
/// transmits forward pilots only (the handover to data transmission), so
/// the trace holds `completed_frames * (2B + U) + B` messages.
pub fn run_decentralized(
    scenario: &Scenario,
    params: &AlgorithmParams,
    pilot_noise_var: f64,
) -> Result<(AllocationResult, EventTrace)> {
    let mut sim = DecentralizedSim::new(scenario, params, pilot_noise_var)?;
    while sim.step_frame()? == FrameOutcome::Running {}
    sim.into_result()
}
