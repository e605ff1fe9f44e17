//! Physical-layer domain types and closed-form signal math.
//!
//! Everything here is a pure function of its inputs: per-stream SINR, the
//! Shannon stream rate, MMSE receive filters and per-stream MSE. The solvers
//! in [`crate::algorithms`] and the message-passing runtime in
//! [`crate::runtime`] both reduce to these primitives, so the two execution
//! paths stay numerically identical.
//!
//! Streams are indexed by the pair `(u, s)`: receiver `u`, spatial stream
//! `s < streams_per_rx[u]`. Where a flat ordering is needed (covariance
//! accumulation, message payloads) streams are enumerated in ascending
//! `(u, s)` order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};

/// Network dimensions and the receiver-to-transmitter association.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    /// Number of transmitters (B).
    pub num_tx: usize,
    /// Number of receivers (U).
    pub num_rx: usize,
    /// Antennas per transmitter (N_T).
    pub tx_antennas: usize,
    /// Antennas per receiver (N_R).
    pub rx_antennas: usize,
    /// Spatial streams allocated to each receiver (S_u).
    pub streams_per_rx: Vec<usize>,
    /// Serving transmitter of each receiver (b_u).
    pub serving: Vec<usize>,
}

impl Dimensions {
    /// Uniform layout: `num_tx` transmitters each serving `rx_per_tx`
    /// consecutive receivers, all with `streams` spatial streams.
    pub fn uniform(
        num_tx: usize,
        rx_per_tx: usize,
        tx_antennas: usize,
        rx_antennas: usize,
        streams: usize,
    ) -> Result<Self> {
        let num_rx = num_tx * rx_per_tx;
        let dims = Dimensions {
            num_tx,
            num_rx,
            tx_antennas,
            rx_antennas,
            streams_per_rx: vec![streams; num_rx],
            serving: (0..num_rx).map(|u| u / rx_per_tx.max(1)).collect(),
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_tx == 0 || self.num_rx == 0 || self.tx_antennas == 0 || self.rx_antennas == 0 {
            return Err(Error::config("all dimension counts must be positive"));
        }
        if self.streams_per_rx.len() != self.num_rx {
            return Err(Error::config(format!(
                "streams_per_rx has {} entries, expected {}",
                self.streams_per_rx.len(),
                self.num_rx
            )));
        }
        if self.serving.len() != self.num_rx {
            return Err(Error::config(format!(
                "serving map has {} entries, expected {}",
                self.serving.len(),
                self.num_rx
            )));
        }
        let max_streams = self.tx_antennas.min(self.rx_antennas);
        for (u, &s) in self.streams_per_rx.iter().enumerate() {
            if s == 0 || s > max_streams {
                return Err(Error::config(format!(
                    "receiver {u}: {s} streams outside 1..={max_streams}"
                )));
            }
        }
        for (u, &b) in self.serving.iter().enumerate() {
            if b >= self.num_tx {
                return Err(Error::config(format!(
                    "receiver {u} served by unknown transmitter {b}"
                )));
            }
        }
        Ok(())
    }

    /// All streams in canonical ascending `(u, s)` order.
    pub fn streams(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.streams_per_rx
            .iter()
            .enumerate()
            .flat_map(|(u, &s_u)| (0..s_u).map(move |s| (u, s)))
    }

    pub fn total_streams(&self) -> usize {
        self.streams_per_rx.iter().sum()
    }

    /// Receivers served by transmitter `b`, ascending.
    pub fn served_by(&self, b: usize) -> Vec<usize> {
        (0..self.num_rx).filter(|&u| self.serving[u] == b).collect()
    }

    /// Total streams carried by transmitter `b`.
    pub fn tx_stream_count(&self, b: usize) -> usize {
        self.served_by(b)
            .iter()
            .map(|&u| self.streams_per_rx[u])
            .sum()
    }
}

/// Channel matrices between every transmitter and receiver plus per-receiver
/// noise power.
///
/// `gains[b][u]` is the `rx_antennas x tx_antennas` matrix from transmitter
/// `b` to receiver `u`; `noise_power[u]` is the linear noise power (W).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub dims: Dimensions,
    pub gains: Vec<Vec<CMatrix>>,
    pub noise_power: Vec<f64>,
}

impl ChannelSet {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if self.gains.len() != self.dims.num_tx {
            return Err(Error::config("channel set missing transmitter rows"));
        }
        for (b, row) in self.gains.iter().enumerate() {
            if row.len() != self.dims.num_rx {
                return Err(Error::config(format!(
                    "transmitter {b} has channels to {} receivers, expected {}",
                    row.len(),
                    self.dims.num_rx
                )));
            }
            for (u, h) in row.iter().enumerate() {
                if h.nrows() != self.dims.rx_antennas || h.ncols() != self.dims.tx_antennas {
                    return Err(Error::config(format!(
                        "channel ({b},{u}) has shape {}x{}, expected {}x{}",
                        h.nrows(),
                        h.ncols(),
                        self.dims.rx_antennas,
                        self.dims.tx_antennas
                    )));
                }
                if !linalg::all_finite(h) {
                    return Err(Error::config(format!(
                        "channel ({b},{u}) has non-finite entries"
                    )));
                }
            }
        }
        if self.noise_power.len() != self.dims.num_rx {
            return Err(Error::config("noise power vector length mismatch"));
        }
        if self.noise_power.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::config("noise power must be positive"));
        }
        Ok(())
    }

    /// Channel from the serving transmitter of `u` to receiver `u`.
    pub fn serving_channel(&self, u: usize) -> &CMatrix {
        &self.gains[self.dims.serving[u]][u]
    }
}

/// Transmit vectors `m[u][s]` (length N_T) and receive vectors `w[u][s]`
/// (length N_R) for every stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub tx: Vec<Vec<CVector>>,
    pub rx: Vec<Vec<CVector>>,
}

impl BeamformerSet {
    /// All-zero beamformers matching `dims`.
    pub fn zeros(dims: &Dimensions) -> Self {
        let tx = dims
            .streams_per_rx
            .iter()
            .map(|&s| vec![CVector::zeros(dims.tx_antennas); s])
            .collect();
        let rx = dims
            .streams_per_rx
            .iter()
            .map(|&s| vec![CVector::zeros(dims.rx_antennas); s])
            .collect();
        BeamformerSet { tx, rx }
    }
}

fn check_stream(dims: &Dimensions, stream: (usize, usize)) -> Result<()> {
    let (u, s) = stream;
    if u >= dims.num_rx || s >= dims.streams_per_rx[u] {
        return Err(Error::domain(format!("stream ({u},{s}) out of range")));
    }
    Ok(())
}

fn check_tx_shapes(dims: &Dimensions, tx_beams: &[Vec<CVector>]) -> Result<()> {
    if tx_beams.len() != dims.num_rx {
        return Err(Error::domain("transmit beam map does not cover every receiver"));
    }
    for (u, per_user) in tx_beams.iter().enumerate() {
        if per_user.len() != dims.streams_per_rx[u] {
            return Err(Error::domain(format!(
                "receiver {u} has {} transmit vectors, expected {}",
                per_user.len(),
                dims.streams_per_rx[u]
            )));
        }
        for m in per_user {
            if m.len() != dims.tx_antennas {
                return Err(Error::domain(format!(
                    "transmit vector for receiver {u} has length {}, expected {}",
                    m.len(),
                    dims.tx_antennas
                )));
            }
        }
    }
    Ok(())
}

fn check_rx_shape(dims: &Dimensions, w: &CVector) -> Result<()> {
    if w.len() != dims.rx_antennas {
        return Err(Error::domain(format!(
            "receive vector has length {}, expected {}",
            w.len(),
            dims.rx_antennas
        )));
    }
    Ok(())
}

/// Effective vectors `H_{b_i,u} m_{i,j}` observed at receiver `u`, one per
/// stream in canonical order. This is exactly what a forward pilot phase
/// delivers, so receiver-side math built on it is engine-agnostic.
pub fn effective_rx_vectors(
    channels: &ChannelSet,
    tx_beams: &[Vec<CVector>],
    u: usize,
) -> Vec<CVector> {
    channels
        .dims
        .streams()
        .map(|(i, j)| &channels.gains[channels.dims.serving[i]][u] * &tx_beams[i][j])
        .collect()
}

/// MMSE receive filter from observed effective vectors.
///
/// `observed[k]` ranges over every stream in the network; `own` indexes the
/// desired stream. The filter is the solve of the full received covariance
/// (signal + interference + noise) against the desired effective vector.
pub fn mmse_filter(observed: &[CVector], own: usize, noise_power: f64) -> Result<CVector> {
    let n = observed[own].len();
    let mut cov = CMatrix::from_diagonal_element(n, n, C64::new(noise_power, 0.0));
    for f in observed {
        linalg::add_outer(&mut cov, f);
    }
    linalg::hermitian_solve(&cov, &observed[own])
        .ok_or_else(|| Error::numerical("received covariance not positive definite"))
}

/// Per-stream SINR from observed effective vectors:
/// `|w^H f_own|^2 / (sum_{k != own} |w^H f_k|^2 + noise * ||w||^2)`.
///
/// The ratio is invariant to the scale of `w`, so the filter is normalized
/// first; otherwise a starved stream (vanishing beam, hence vanishing MMSE
/// filter) underflows both numerator and denominator to 0/0.
pub fn sinr_from_observed(
    observed: &[CVector],
    own: usize,
    w: &CVector,
    noise_power: f64,
) -> Result<f64> {
    let w_norm_sq = w.norm_squared();
    if w_norm_sq == 0.0 {
        return Err(Error::domain("zero receive vector"));
    }
    let wn = w * C64::new(1.0 / w_norm_sq.sqrt(), 0.0);
    let mut interference = 0.0;
    let mut desired = 0.0;
    for (k, f) in observed.iter().enumerate() {
        let gain = wn.dotc(f).norm_sqr();
        if k == own {
            desired = gain;
        } else {
            interference += gain;
        }
    }
    Ok(desired / (interference + noise_power))
}

/// Per-stream MSE from observed effective vectors:
/// `1 - 2 Re(w^H f_own) + sum_k |w^H f_k|^2 + noise * ||w||^2`.
pub fn mse_from_observed(observed: &[CVector], own: usize, w: &CVector, noise_power: f64) -> f64 {
    let mut quad = noise_power * w.norm_squared();
    for f in observed {
        quad += w.dotc(f).norm_sqr();
    }
    1.0 - 2.0 * w.dotc(&observed[own]).re + quad
}

/// SINR of stream `(u, s)` under the given channels and beamformers.
///
/// Scale-invariant in the receive vector; errors on a zero receive vector
/// or an out-of-range stream.
pub fn compute_sinr(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    stream: (usize, usize),
) -> Result<f64> {
    check_stream(&channels.dims, stream)?;
    check_tx_shapes(&channels.dims, &beams.tx)?;
    let (u, s) = stream;
    check_rx_shape(&channels.dims, &beams.rx[u][s])?;
    let observed = effective_rx_vectors(channels, &beams.tx, u);
    let own = stream_flat_index(&channels.dims, stream);
    sinr_from_observed(&observed, own, &beams.rx[u][s], channels.noise_power[u])
}

/// Shannon rate of a single stream in bits/s/Hz.
pub fn stream_rate(sinr: f64) -> Result<f64> {
    if sinr < 0.0 || sinr.is_nan() {
        return Err(Error::domain(format!("negative SINR {sinr}")));
    }
    Ok((1.0 + sinr).log2())
}

/// MMSE receive filter for stream `(u, s)` given the transmit beamformers.
pub fn mmse_receiver(
    channels: &ChannelSet,
    tx_beams: &[Vec<CVector>],
    stream: (usize, usize),
) -> Result<CVector> {
    check_stream(&channels.dims, stream)?;
    check_tx_shapes(&channels.dims, tx_beams)?;
    let (u, _) = stream;
    let observed = effective_rx_vectors(channels, tx_beams, u);
    let own = stream_flat_index(&channels.dims, stream);
    mmse_filter(&observed, own, channels.noise_power[u])
}

/// MSE of stream `(u, s)` under the given channels and beamformers.
pub fn stream_mse(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    stream: (usize, usize),
) -> Result<f64> {
    check_stream(&channels.dims, stream)?;
    check_tx_shapes(&channels.dims, &beams.tx)?;
    let (u, s) = stream;
    check_rx_shape(&channels.dims, &beams.rx[u][s])?;
    let observed = effective_rx_vectors(channels, &beams.tx, u);
    let own = stream_flat_index(&channels.dims, stream);
    Ok(mse_from_observed(
        &observed,
        own,
        &beams.rx[u][s],
        channels.noise_power[u],
    ))
}

/// Achieved rate of receiver `u`: sum of its stream rates.
pub fn user_rate(channels: &ChannelSet, beams: &BeamformerSet, u: usize) -> Result<f64> {
    let mut rate = 0.0;
    for s in 0..channels.dims.streams_per_rx[u] {
        rate += stream_rate(compute_sinr(channels, beams, (u, s))?)?;
    }
    Ok(rate)
}

/// Position of `(u, s)` in the canonical stream ordering.
pub fn stream_flat_index(dims: &Dimensions, stream: (usize, usize)) -> usize {
    let (u, s) = stream;
    dims.streams_per_rx[..u].iter().sum::<usize>() + s
}
