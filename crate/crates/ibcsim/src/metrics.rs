//! Evaluation quantities: QoS degradation, its distribution, deactivation
//! and satisfaction statistics.

use serde::{Deserialize, Serialize};

use crate::algorithms::{is_deactivated, AlgorithmMode, AllocationResult, SATISFACTION_EPS};
use crate::error::{Error, Result};

/// Per-drop evaluation record for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropMetrics {
    pub algorithm: AlgorithmMode,
    pub seed: u64,
    /// Per-link achieved rates.
    pub rates: Vec<f64>,
    /// Per-link degradation; exactly zero for satisfied links.
    pub degradation: Vec<f64>,
    pub satisfied_count: usize,
    pub deactivated_count: usize,
    pub sum_rate: f64,
}

impl DropMetrics {
    /// Builds the record from a solver result. Links within the
    /// satisfaction tolerance report exactly zero degradation so
    /// floating-point boundary cases cannot leak into the unsatisfied set.
    pub fn from_result(
        result: &AllocationResult,
        qos: &[f64],
        deactivation_eps: f64,
        algorithm: AlgorithmMode,
        seed: u64,
    ) -> Result<Self> {
        if result.rates.len() != qos.len() {
            return Err(Error::domain("rates/qos length mismatch"));
        }
        let degradation: Vec<f64> = result
            .rates
            .iter()
            .zip(qos)
            .map(|(&r, &q)| {
                if r >= q - SATISFACTION_EPS {
                    0.0
                } else {
                    q - r
                }
            })
            .collect();
        let satisfied_count = degradation.iter().filter(|&&d| d == 0.0).count();
        let deactivated_count = result
            .rates
            .iter()
            .filter(|&&r| is_deactivated(r, deactivation_eps))
            .count();
        Ok(DropMetrics {
            algorithm,
            seed,
            rates: result.rates.clone(),
            degradation,
            satisfied_count,
            deactivated_count,
            sum_rate: result.sum_rate,
        })
    }
}

/// Per-link degradation `max(0, qos_u - r_u)`.
pub fn qos_degradation(rates: &[f64], qos: &[f64]) -> Result<Vec<f64>> {
    if rates.len() != qos.len() {
        return Err(Error::domain(format!(
            "rates has {} entries, qos has {}",
            rates.len(),
            qos.len()
        )));
    }
    Ok(rates
        .iter()
        .zip(qos)
        .map(|(&r, &q)| (q - r).max(0.0))
        .collect())
}

/// Mean degradation over the links that miss their requirement, pooled
/// across drops; zero when every link is satisfied.
pub fn average_degradation_unsatisfied(drops: &[DropMetrics]) -> Result<f64> {
    if drops.is_empty() {
        return Err(Error::domain("no drops to average"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for drop in drops {
        for &d in &drop.degradation {
            if d > 0.0 {
                sum += d;
                count += 1;
            }
        }
    }
    if count == 0 {
        Ok(0.0)
    } else {
        Ok(sum / count as f64)
    }
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    /// Sorted distinct sample values.
    pub support: Vec<f64>,
    /// Cumulative fraction at each support point.
    pub cumulative: Vec<f64>,
}

impl Ecdf {
    pub fn eval(&self, x: f64) -> f64 {
        match self.support.partition_point(|&v| v <= x) {
            0 => 0.0,
            k => self.cumulative[k - 1],
        }
    }
}

pub fn empirical_cdf(values: &[f64]) -> Result<Ecdf> {
    if values.is_empty() {
        return Err(Error::domain("empirical CDF of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut support = Vec::new();
    let mut cumulative = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if support.last() == Some(&v) {
            *cumulative.last_mut().expect("non-empty") = (i + 1) as f64 / n;
        } else {
            support.push(v);
            cumulative.push((i + 1) as f64 / n);
        }
    }
    Ok(Ecdf {
        support,
        cumulative,
    })
}

/// Fraction of links allocated (near-)zero rate across all drops. With
/// `eps == 0` only exactly-zero rates count.
pub fn deactivated_fraction(drops: &[DropMetrics], eps: f64) -> Result<f64> {
    if drops.is_empty() {
        return Err(Error::domain("no drops to aggregate"));
    }
    let mut dead = 0usize;
    let mut total = 0usize;
    for drop in drops {
        for &r in &drop.rates {
            if is_deactivated(r, eps) {
                dead += 1;
            }
            total += 1;
        }
    }
    Ok(dead as f64 / total as f64)
}
