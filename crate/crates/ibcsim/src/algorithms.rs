//! Centralized reference solvers: WMMSE, hard-QoS WMMSE, and penalized
//! QoS relaxation.
//!
//! All three share one block-coordinate loop — MMSE receivers, rate
//! multipliers, relaxation variables, dynamic stream weights, then a
//! power-constrained transmit update — and differ only in how the per-user
//! multiplier `lambda_u` is capped:
//!
//! - `Wmmse`: lambda pinned at zero; plain weighted sum-rate maximization.
//! - `QosHard`: lambda effectively unbounded; the solver keeps chasing every
//!   rate target no matter the cost.
//! - `Proposed`: lambda capped at `beta_u * penalty_slope`. The cap is the
//!   stationarity value of the linear relaxation penalty, so chronically
//!   infeasible users stop escalating and either settle for a partially
//!   relaxed rate or fade out entirely.
//!
//! The scalar update rules and the transmit solve are exposed so the
//! decentralized runtime executes bit-identical arithmetic from message
//! payloads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::model::{self, BeamformerSet};
use crate::scenario::Scenario;

/// Natural log of 2; stream weights convert nats to bits.
const LN_2: f64 = std::f64::consts::LN_2;

/// Multiplier cap standing in for "unbounded" in hard-QoS mode.
pub const LAMBDA_BIG: f64 = 1e6;

/// Rate slack below which a user still counts as satisfied.
pub const SATISFACTION_EPS: f64 = 1e-6;

/// Iterations the objective must stay within `obj_tol` to declare
/// convergence.
const CONVERGENCE_STREAK: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AlgorithmMode {
    Wmmse,
    QosHard,
    Proposed,
}

impl AlgorithmMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmMode::Wmmse => "WMMSE",
            AlgorithmMode::QosHard => "QOS_HARD",
            AlgorithmMode::Proposed => "PROPOSED",
        }
    }

    pub const ALL: [AlgorithmMode; 3] = [
        AlgorithmMode::Wmmse,
        AlgorithmMode::QosHard,
        AlgorithmMode::Proposed,
    ];
}

impl std::fmt::Display for AlgorithmMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AlgorithmMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "WMMSE" => Ok(AlgorithmMode::Wmmse),
            "QOS_HARD" => Ok(AlgorithmMode::QosHard),
            "PROPOSED" => Ok(AlgorithmMode::Proposed),
            other => Err(Error::config(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmParams {
    pub mode: AlgorithmMode,
    /// Priority weight beta_u per user.
    pub priorities: Vec<f64>,
    /// Minimum rate target per user (bits/s/Hz); ignored in WMMSE mode.
    pub qos: Vec<f64>,
    /// Slope of the linear relaxation penalty (rho).
    pub penalty_slope: f64,
    /// Subgradient step for the rate multipliers (gamma).
    pub multiplier_step: f64,
    pub max_iters: usize,
    pub obj_tol: f64,
    pub power_tol: f64,
    /// Rate below which a link counts as deactivated.
    pub deactivation_eps: f64,
}

impl AlgorithmParams {
    pub fn new(mode: AlgorithmMode, num_rx: usize) -> Self {
        AlgorithmParams {
            mode,
            priorities: vec![1.0; num_rx],
            qos: vec![0.0; num_rx],
            penalty_slope: 4.0,
            multiplier_step: 1.0,
            max_iters: 200,
            obj_tol: 1e-4,
            power_tol: 1e-6,
            deactivation_eps: 1e-3,
        }
    }

    pub fn with_uniform_qos(mut self, qos: f64) -> Self {
        self.qos.iter_mut().for_each(|q| *q = qos);
        self
    }

    pub fn validate(&self, num_rx: usize) -> Result<()> {
        if self.priorities.len() != num_rx || self.qos.len() != num_rx {
            return Err(Error::config(
                "priorities/qos length must match the receiver count",
            ));
        }
        if self.priorities.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::config("priorities must be positive"));
        }
        if self.qos.iter().any(|&q| !(q >= 0.0)) {
            return Err(Error::config("qos targets must be non-negative"));
        }
        if !(self.penalty_slope > 0.0) {
            return Err(Error::config("penalty_slope must be positive"));
        }
        if !(self.multiplier_step > 0.0) {
            return Err(Error::config("multiplier_step must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        if !(self.obj_tol > 0.0) || !(self.power_tol > 0.0) {
            return Err(Error::config("tolerances must be positive"));
        }
        if !(self.deactivation_eps >= 0.0) {
            return Err(Error::config("deactivation_eps must be non-negative"));
        }
        Ok(())
    }
}

/// Mutable solver state across iterations.
#[derive(Debug, Clone)]
pub struct AlgorithmState {
    pub beams: BeamformerSet,
    /// Dynamic stream weights `t[u][s]`.
    pub stream_weights: Vec<Vec<f64>>,
    /// Rate multipliers lambda_u.
    pub multipliers: Vec<f64>,
    /// Relaxation variables d_u in [0, qos_u].
    pub relaxations: Vec<f64>,
    /// Per-stream MSEs `e[u][s]`.
    pub mses: Vec<Vec<f64>>,
    /// Achieved per-user rates for the current beams.
    pub rates: Vec<f64>,
    pub iter: usize,
    pub objective_history: Vec<f64>,
    /// Largest per-TX power-to-budget ratio seen so far.
    pub max_power_ratio: f64,
}

impl AlgorithmState {
    pub fn new(scenario: &Scenario, beams: BeamformerSet) -> Self {
        let dims = &scenario.config.dims;
        AlgorithmState {
            beams,
            stream_weights: dims.streams_per_rx.iter().map(|&s| vec![1.0; s]).collect(),
            multipliers: vec![0.0; dims.num_rx],
            relaxations: vec![0.0; dims.num_rx],
            mses: dims.streams_per_rx.iter().map(|&s| vec![1.0; s]).collect(),
            rates: vec![0.0; dims.num_rx],
            iter: 0,
            objective_history: Vec::new(),
            max_power_ratio: 0.0,
        }
    }
}

/// Final allocation of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    pub rates: Vec<f64>,
    pub relaxations: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub deactivated: Vec<bool>,
    pub sum_rate: f64,
    pub penalized_objective: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
    pub max_power_ratio: f64,
}

impl AllocationResult {
    /// Builds the report for a final set of rates. Relaxations and the
    /// penalized objective are re-derived from those rates so the reported
    /// allocation is self-consistent (the in-loop relaxations pair with the
    /// previous iterate).
    pub fn from_final_rates(
        rates: Vec<f64>,
        objective_history: Vec<f64>,
        iterations_used: usize,
        converged: bool,
        max_power_ratio: f64,
        params: &AlgorithmParams,
    ) -> Self {
        let relaxations: Vec<f64> = rates
            .iter()
            .zip(&params.qos)
            .map(|(&r, &q)| relaxation_value(params.mode, q, r))
            .collect();
        let satisfied = rates
            .iter()
            .zip(&params.qos)
            .map(|(&r, &q)| r >= q - SATISFACTION_EPS)
            .collect();
        let deactivated = rates
            .iter()
            .map(|&r| is_deactivated(r, params.deactivation_eps))
            .collect();
        let sum_rate = rates.iter().sum();
        let penalized_objective = penalized_objective_value(
            &rates,
            &relaxations,
            &params.priorities,
            params.penalty_slope,
        );
        AllocationResult {
            rates,
            relaxations,
            satisfied,
            deactivated,
            sum_rate,
            penalized_objective,
            iterations_used,
            converged,
            objective_history,
            max_power_ratio,
        }
    }
}

/// Deactivation predicate. With `eps == 0` only an exactly-zero rate
/// counts; otherwise the comparison is strict.
pub fn is_deactivated(rate: f64, eps: f64) -> bool {
    if eps == 0.0 {
        rate == 0.0
    } else {
        rate < eps
    }
}

// --- Scalar update rules (shared with the decentralized runtime) ----------

/// Upper bound on lambda_u for the given mode.
pub fn multiplier_cap(mode: AlgorithmMode, beta: f64, penalty_slope: f64) -> f64 {
    match mode {
        AlgorithmMode::Wmmse => 0.0,
        AlgorithmMode::QosHard => LAMBDA_BIG,
        AlgorithmMode::Proposed => beta * penalty_slope,
    }
}

/// Projected subgradient step on the rate constraint.
pub fn next_multiplier(current: f64, qos: f64, rate: f64, step: f64, cap: f64) -> f64 {
    (current + step * (qos - rate)).clamp(0.0, cap)
}

/// Tight-clamp relaxation: make the relaxed constraint exactly binding.
pub fn relaxation_value(mode: AlgorithmMode, qos: f64, rate: f64) -> f64 {
    match mode {
        AlgorithmMode::Proposed => (qos - rate).clamp(0.0, qos),
        AlgorithmMode::Wmmse | AlgorithmMode::QosHard => 0.0,
    }
}

/// Dynamic stream weight t = (beta + lambda) / (e * ln 2).
pub fn stream_weight_value(beta: f64, lambda: f64, mse: f64) -> Result<f64> {
    if !(mse > 0.0) {
        return Err(Error::numerical(format!("non-positive stream MSE {mse}")));
    }
    Ok((beta + lambda) / mse / LN_2)
}

/// Weighted penalized objective: sum_u beta_u (r_u - rho d_u).
pub fn penalized_objective_value(
    rates: &[f64],
    relaxations: &[f64],
    priorities: &[f64],
    penalty_slope: f64,
) -> f64 {
    rates
        .iter()
        .zip(relaxations)
        .zip(priorities)
        .map(|((&r, &d), &beta)| beta * (r - penalty_slope * d))
        .sum()
}

// --- Power-constrained transmit solve --------------------------------------

fn try_tx_solve(a0: &CMatrix, rhs: &[CVector], mu: f64) -> Option<(Vec<CVector>, f64)> {
    let mut a = a0.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += C64::new(mu, 0.0);
    }
    let mut beams = Vec::with_capacity(rhs.len());
    let mut power = 0.0;
    for r in rhs {
        let m = linalg::hermitian_solve(&a, r)?;
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        power += m.norm_squared();
        beams.push(m);
    }
    Some((beams, power))
}

/// Solves one transmitter's beamformer update under its power budget.
///
/// `weighted_vectors[k] = sqrt(t_k) * H^H w_k` for every stream in the
/// network (canonical order), exactly what a backward pilot phase delivers.
/// `served` pairs each of this transmitter's streams with its index into
/// `weighted_vectors` and `sqrt(t)`, so the right-hand side
/// `t * H^H w = sqrt(t) * v` needs no channel knowledge.
///
/// Returns the new transmit vectors (in `served` order) and the Lagrange
/// level `mu >= 0`, the smallest value keeping the emitted power within the
/// budget. `mu = 0` when the unconstrained solve already fits.
pub fn solve_tx_beamformers(
    weighted_vectors: &[CVector],
    served: &[(usize, f64)],
    power_budget: f64,
    power_tol: f64,
) -> Result<(Vec<CVector>, f64)> {
    if weighted_vectors.is_empty() || served.is_empty() {
        return Err(Error::domain("transmit solve needs at least one stream"));
    }
    if !(power_budget > 0.0) {
        return Err(Error::domain("power budget must be positive"));
    }
    let n_t = weighted_vectors[0].len();
    let mut a0 = CMatrix::zeros(n_t, n_t);
    for v in weighted_vectors {
        linalg::add_outer(&mut a0, v);
    }
    let rhs: Vec<CVector> = served
        .iter()
        .map(|&(idx, sqrt_t)| &weighted_vectors[idx] * C64::new(sqrt_t, 0.0))
        .collect();
    let rhs_norm_sq: f64 = rhs.iter().map(|r| r.norm_squared()).sum();
    if rhs_norm_sq == 0.0 {
        return Ok((vec![CVector::zeros(n_t); rhs.len()], 0.0));
    }

    if let Some((beams, power)) = try_tx_solve(&a0, &rhs, 0.0) {
        if power <= power_budget * (1.0 + power_tol) {
            return Ok((beams, 0.0));
        }
    }

    // ||(A + mu I)^{-1} r|| <= ||r|| / mu, so this start already brackets;
    // the doubling loop is numerical insurance only.
    let mut hi = (rhs_norm_sq / power_budget).sqrt();
    let mut bracket = None;
    for _ in 0..128 {
        if let Some((beams, power)) = try_tx_solve(&a0, &rhs, hi) {
            if power <= power_budget {
                bracket = Some((beams, power));
                break;
            }
        }
        hi *= 2.0;
    }
    let (mut best, _) =
        bracket.ok_or_else(|| Error::numerical("transmit power bisection failed to bracket"))?;
    let mut best_mu = hi;
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match try_tx_solve(&a0, &rhs, mid) {
            Some((beams, power)) if power <= power_budget => {
                hi = mid;
                best = beams;
                best_mu = mid;
                if power >= power_budget * (1.0 - 1e-9) {
                    break;
                }
            }
            _ => lo = mid,
        }
    }
    let _ = power_tol;
    Ok((best, best_mu))
}

// --- Block-coordinate iteration --------------------------------------------

/// Maximum-ratio transmission start: each stream along a dominant right
/// singular direction of its serving channel, splitting the budget evenly
/// over the transmitter's streams. Receive vectors start at their MMSE
/// values.
pub fn init_beamformers_mrt(
    scenario: &Scenario,
    params: &AlgorithmParams,
) -> Result<BeamformerSet> {
    let dims = &scenario.config.dims;
    params.validate(dims.num_rx)?;
    let budget = scenario.config.power_budget_watts();
    let mut beams = BeamformerSet::zeros(dims);
    for b in 0..dims.num_tx {
        let per_stream = budget / dims.tx_stream_count(b) as f64;
        let amplitude = C64::new(per_stream.sqrt(), 0.0);
        for u in dims.served_by(b) {
            let s_u = dims.streams_per_rx[u];
            let directions =
                linalg::dominant_right_singular_vectors(&scenario.channels.gains[b][u], s_u)?;
            for (s, v) in directions.into_iter().enumerate() {
                beams.tx[u][s] = v * amplitude;
            }
        }
    }
    for (u, s) in dims.streams() {
        beams.rx[u][s] = model::mmse_receiver(&scenario.channels, &beams.tx, (u, s))?;
    }
    Ok(beams)
}

/// Refreshes receive filters, per-stream MSEs and per-user rates for the
/// current transmit beams.
pub fn update_receivers_and_mse(state: &mut AlgorithmState, scenario: &Scenario) -> Result<()> {
    let dims = &scenario.config.dims;
    for u in 0..dims.num_rx {
        let observed = model::effective_rx_vectors(&scenario.channels, &state.beams.tx, u);
        let noise = scenario.channels.noise_power[u];
        let mut rate = 0.0;
        for s in 0..dims.streams_per_rx[u] {
            let own = model::stream_flat_index(dims, (u, s));
            let w = model::mmse_filter(&observed, own, noise)?;
            state.mses[u][s] = model::mse_from_observed(&observed, own, &w, noise);
            let sinr = if w.norm_squared() == 0.0 {
                0.0
            } else {
                model::sinr_from_observed(&observed, own, &w, noise)?
            };
            rate += model::stream_rate(sinr)?;
            state.beams.rx[u][s] = w;
        }
        state.rates[u] = rate;
    }
    Ok(())
}

/// Effective multiplier step for a mode. Hard-QoS enforcement reacts
/// immediately (the rate targets are treated as binding constraints, not
/// soft penalties), so its step is effectively infinite; the capped modes
/// use the configured subgradient step.
pub fn multiplier_step_for(mode: AlgorithmMode, configured: f64) -> f64 {
    match mode {
        AlgorithmMode::QosHard => LAMBDA_BIG,
        AlgorithmMode::Wmmse | AlgorithmMode::Proposed => configured,
    }
}

/// One projected subgradient step on every user's rate multiplier.
pub fn update_multipliers(state: &mut AlgorithmState, params: &AlgorithmParams) {
    let step = multiplier_step_for(params.mode, params.multiplier_step);
    for u in 0..state.multipliers.len() {
        let cap = multiplier_cap(params.mode, params.priorities[u], params.penalty_slope);
        state.multipliers[u] = next_multiplier(
            state.multipliers[u],
            params.qos[u],
            state.rates[u],
            step,
            cap,
        );
    }
}

/// Tight-clamp update of the relaxation variables.
pub fn update_relaxation(state: &mut AlgorithmState, params: &AlgorithmParams) {
    for u in 0..state.relaxations.len() {
        state.relaxations[u] = relaxation_value(params.mode, params.qos[u], state.rates[u]);
    }
}

/// Recomputes every dynamic stream weight from the current MSEs and
/// multipliers.
pub fn update_stream_weights(state: &mut AlgorithmState, params: &AlgorithmParams) -> Result<()> {
    for u in 0..state.stream_weights.len() {
        for s in 0..state.stream_weights[u].len() {
            state.stream_weights[u][s] =
                stream_weight_value(params.priorities[u], state.multipliers[u], state.mses[u][s])?;
        }
    }
    Ok(())
}

/// Per-transmitter power-constrained beamformer update.
pub fn transmit_update(
    state: &mut AlgorithmState,
    scenario: &Scenario,
    params: &AlgorithmParams,
) -> Result<()> {
    let dims = &scenario.config.dims;
    let budget = scenario.config.power_budget_watts();
    for b in 0..dims.num_tx {
        // sqrt(t) is applied to w before the channel adjoint, matching the
        // backward-pilot path bit for bit.
        let weighted: Vec<CVector> = dims
            .streams()
            .map(|(i, j)| {
                let scaled =
                    &state.beams.rx[i][j] * C64::new(state.stream_weights[i][j].sqrt(), 0.0);
                scenario.channels.gains[b][i].adjoint() * scaled
            })
            .collect();
        let served: Vec<(usize, f64)> = dims
            .streams()
            .enumerate()
            .filter(|&(_, (u, _))| dims.serving[u] == b)
            .map(|(k, (u, s))| (k, state.stream_weights[u][s].sqrt()))
            .collect();
        let (new_beams, _mu) = solve_tx_beamformers(&weighted, &served, budget, params.power_tol)?;
        let mut power = 0.0;
        for ((_, (u, s)), m) in dims
            .streams()
            .enumerate()
            .filter(|&(_, (u, _))| dims.serving[u] == b)
            .zip(new_beams)
        {
            power += m.norm_squared();
            state.beams.tx[u][s] = m;
        }
        state.max_power_ratio = state.max_power_ratio.max(power / budget);
    }
    Ok(())
}

/// Penalized objective for the current state.
pub fn penalized_objective(state: &AlgorithmState, params: &AlgorithmParams) -> f64 {
    penalized_objective_value(
        &state.rates,
        &state.relaxations,
        &params.priorities,
        params.penalty_slope,
    )
}

/// Runs the selected solver on one drop.
///
/// Stops after `max_iters` transmit updates or once the objective moved by
/// less than `obj_tol` for five consecutive iterations. Non-convergence is
/// reported, not an error.
pub fn run(scenario: &Scenario, params: &AlgorithmParams) -> Result<AllocationResult> {
    let dims = &scenario.config.dims;
    params.validate(dims.num_rx)?;
    scenario.channels.validate()?;

    let beams = init_beamformers_mrt(scenario, params)?;
    let mut state = AlgorithmState::new(scenario, beams);
    update_receivers_and_mse(&mut state, scenario)?;
    state
        .objective_history
        .push(penalized_objective(&state, params));

    let mut converged = false;
    let mut streak = 0;
    while state.iter < params.max_iters && !converged {
        state.iter += 1;
        update_multipliers(&mut state, params);
        update_relaxation(&mut state, params);
        update_stream_weights(&mut state, params)?;
        transmit_update(&mut state, scenario, params)?;
        update_receivers_and_mse(&mut state, scenario)?;

        let obj = penalized_objective(&state, params);
        let prev = *state.objective_history.last().expect("seeded history");
        state.objective_history.push(obj);
        if (obj - prev).abs() < params.obj_tol {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= CONVERGENCE_STREAK {
            converged = true;
        }
    }

    Ok(AllocationResult::from_final_rates(
        state.rates,
        state.objective_history,
        state.iter,
        converged,
        state.max_power_ratio,
        params,
    ))
}
