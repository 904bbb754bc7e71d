//! Repair traffic volumes and star-topology regeneration times.
//!
//! Units throughout: data in Mb, bandwidth in Mbps, time in seconds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CodeParams;

/// Convention for the per-provider volume under uniform traffic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    /// `M / (k (d - k + 1))`, the minimum-storage point.
    #[default]
    Msr,
    /// `M / (d (d - k + 1))`.
    Eval,
}

impl BetaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BetaMode::Msr => "msr",
            BetaMode::Eval => "eval",
        }
    }
}

impl std::str::FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "msr" => Ok(BetaMode::Msr),
            "eval" => Ok(BetaMode::Eval),
            other => Err(Error::param(format!(
                "unknown beta mode {other:?} (expected msr or eval)"
            ))),
        }
    }
}

/// Per-provider volumes in Mb, aligned with a plan's provider list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrafficVector(Vec<f64>);

impl TrafficVector {
    pub fn new(amounts: Vec<f64>) -> Result<Self> {
        if let Some(b) = amounts.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::param(format!(
                "traffic amounts must be non-negative, got {b}"
            )));
        }
        Ok(TrafficVector(amounts))
    }

    pub fn uniform(beta: f64, d: usize) -> Self {
        TrafficVector(vec![beta; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// The common amount if every entry is equal.
    pub fn uniform_amount(&self) -> Option<f64> {
        let first = *self.0.first()?;
        self.0.iter().all(|&b| b == first).then_some(first)
    }
}

pub fn uniform_beta(code: &CodeParams, mode: BetaMode) -> f64 {
    let m = code.file_size();
    let slack = code.slack() as f64;
    match mode {
        BetaMode::Msr => m / (code.k() as f64 * slack),
        BetaMode::Eval => m / (code.d() as f64 * slack),
    }
}

fn check_capacities(capacities: &[f64], code: &CodeParams) -> Result<()> {
    if capacities.len() != code.d() {
        return Err(Error::param(format!(
            "expected d = {} capacities, got {}",
            code.d(),
            capacities.len()
        )));
    }
    if let Some(c) = capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::param(format!(
            "capacities must be positive, got {c}"
        )));
    }
    Ok(())
}

/// Positions of `capacities` in ascending capacity order, ties by position.
fn ascending_order(capacities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..capacities.len()).collect();
    order.sort_by(|&a, &b| capacities[a].total_cmp(&capacities[b]).then(a.cmp(&b)));
    order
}

/// Sum of the `d - k + 1` smallest capacities.
fn slack_sum(capacities: &[f64], order: &[usize], slack: usize) -> f64 {
    order[..slack].iter().map(|&i| capacities[i]).sum()
}

/// Flexible per-provider volumes minimizing the star regeneration time.
///
/// With capacities sorted as `c_1 <= ... <= c_d` and `s = d - k + 1`, the
/// `s` slowest providers send `c_i M / (k sum_{r<=s} c_r)` and every faster
/// provider sends what the `s`-th one does. The result is returned in the
/// caller's order.
pub fn flexible_beta(capacities: &[f64], code: &CodeParams) -> Result<TrafficVector> {
    check_capacities(capacities, code)?;
    let order = ascending_order(capacities);
    let slack = code.slack();
    let denom = code.k() as f64 * slack_sum(capacities, &order, slack);
    let m = code.file_size();
    let cap_at_slack = capacities[order[slack - 1]];
    let mut beta = vec![0.0; capacities.len()];
    for (rank, &i) in order.iter().enumerate() {
        let c = if rank < slack {
            capacities[i]
        } else {
            cap_at_slack
        };
        beta[i] = c * m / denom;
    }
    TrafficVector::new(beta)
}

/// `max_i traffic_i / capacity_i`.
pub fn star_regen_time(traffic: &TrafficVector, capacities: &[f64]) -> Result<f64> {
    if traffic.len() != capacities.len() {
        return Err(Error::param(format!(
            "{} traffic amounts for {} links",
            traffic.len(),
            capacities.len()
        )));
    }
    if let Some(c) = capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::param(format!(
            "capacities must be positive, got {c}"
        )));
    }
    Ok(traffic
        .as_slice()
        .iter()
        .zip(capacities)
        .map(|(b, c)| b / c)
        .fold(0.0, f64::max))
}

/// `M / (k * sum of the d - k + 1 smallest capacities)`.
pub fn flexible_regen_time(capacities: &[f64], code: &CodeParams) -> Result<f64> {
    check_capacities(capacities, code)?;
    let order = ascending_order(capacities);
    Ok(code.file_size() / (code.k() as f64 * slack_sum(capacities, &order, code.slack())))
}
