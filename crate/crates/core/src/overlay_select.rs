//! Newcomer and provider selection on the overlay bipartite graph.
//!
//! `V_p` (provider candidates) and `V_n` (newcomer candidates) form a
//! complete bipartite graph weighted by available bandwidth. A repair plan
//! picks one newcomer and `d` providers; under uniform traffic its time is
//! set by the slowest chosen link, under flexible traffic by the sum of the
//! `d - k + 1` slowest chosen links.
//!
//! Sorting ties are broken by (bandwidth descending, provider id ascending,
//! newcomer id ascending) everywhere, so results are reproducible and
//! invariant under exact rescaling of the bandwidth matrix.

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CodeParams, NodeId, OverlayNetwork};
use crate::traffic::{self, BetaMode, TrafficVector};

/// Largest `C(n-1, d) * |V_n|` the exhaustive oracles will enumerate.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "RS")]
    Rs,
    #[serde(rename = "SPSN")]
    Spsn,
    #[serde(rename = "FRS")]
    Frs,
    #[serde(rename = "FLEX")]
    Flex,
    #[serde(rename = "RS-F")]
    RsF,
    #[serde(rename = "SPSN-F")]
    SpsnF,
    #[serde(rename = "ORACLE")]
    Oracle,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Rs,
        Scheme::Spsn,
        Scheme::Frs,
        Scheme::Flex,
        Scheme::RsF,
        Scheme::SpsnF,
        Scheme::Oracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Rs => "RS",
            Scheme::Spsn => "SPSN",
            Scheme::Frs => "FRS",
            Scheme::Flex => "FLEX",
            Scheme::RsF => "RS-F",
            Scheme::SpsnF => "SPSN-F",
            Scheme::Oracle => "ORACLE",
        }
    }

    /// Whether the scheme runs on a fat-tree rather than an overlay.
    pub fn is_fattree(&self) -> bool {
        matches!(self, Scheme::RsF | Scheme::SpsnF)
    }

    /// Whether the scheme sends flexible (capacity-proportional) traffic.
    pub fn is_flexible(&self) -> bool {
        matches!(self, Scheme::Frs | Scheme::Flex)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown scheme {s:?}")))
    }
}

/// A chosen newcomer, its `d` providers and what each provider sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairPlan {
    pub scheme: Scheme,
    pub newcomer: NodeId,
    pub providers: Vec<NodeId>,
    pub traffic: TrafficVector,
}

impl RepairPlan {
    pub fn new(
        scheme: Scheme,
        newcomer: NodeId,
        providers: Vec<NodeId>,
        traffic: TrafficVector,
    ) -> Result<Self> {
        if providers.len() != traffic.len() {
            return Err(Error::param(format!(
                "{} providers but {} traffic amounts",
                providers.len(),
                traffic.len()
            )));
        }
        if !providers.iter().all_unique() {
            return Err(Error::param("providers must be distinct"));
        }
        if providers.contains(&newcomer) {
            return Err(Error::param("newcomer cannot also be a provider"));
        }
        Ok(RepairPlan {
            scheme,
            newcomer,
            providers,
            traffic,
        })
    }

    /// Checks membership in the overlay's candidate sets and `|providers| = d`.
    pub fn check_overlay(&self, net: &OverlayNetwork, code: &CodeParams) -> Result<()> {
        if self.providers.len() != code.d() {
            return Err(Error::param(format!(
                "plan has {} providers, d = {}",
                self.providers.len(),
                code.d()
            )));
        }
        if net.newcomer_pos(self.newcomer).is_none() {
            return Err(Error::param(format!(
                "node {} is not a newcomer candidate",
                self.newcomer
            )));
        }
        if let Some(p) = self
            .providers
            .iter()
            .find(|&&p| net.provider_pos(p).is_none())
        {
            return Err(Error::param(format!(
                "node {p} is not a provider candidate"
            )));
        }
        Ok(())
    }
}

/// Plan plus its evaluated time, as emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    #[serde(flatten)]
    pub plan: RepairPlan,
    pub time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bottleneck_mbps: Option<f64>,
}

/// Bandwidth of each provider's link to the newcomer, in plan order.
pub fn plan_capacities(net: &OverlayNetwork, plan: &RepairPlan) -> Result<Vec<f64>> {
    let j = net.newcomer_pos(plan.newcomer).ok_or_else(|| {
        Error::param(format!(
            "node {} is not a newcomer candidate",
            plan.newcomer
        ))
    })?;
    plan.providers
        .iter()
        .map(|&p| {
            net.provider_pos(p)
                .map(|i| net.bandwidth(i, j))
                .ok_or_else(|| Error::param(format!("node {p} is not a provider candidate")))
        })
        .collect()
}

/// Smallest link bandwidth in the plan's star.
pub fn bottleneck(net: &OverlayNetwork, plan: &RepairPlan) -> Result<f64> {
    Ok(plan_capacities(net, plan)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Star regeneration time of the plan with its own traffic vector.
pub fn evaluate(net: &OverlayNetwork, plan: &RepairPlan) -> Result<PlanReport> {
    let caps = plan_capacities(net, plan)?;
    let time_s = traffic::star_regen_time(&plan.traffic, &caps)?;
    let bottleneck_mbps = caps.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(PlanReport {
        plan: plan.clone(),
        time_s,
        bottleneck_mbps: Some(bottleneck_mbps),
    })
}

fn check_candidates(net: &OverlayNetwork, code: &CodeParams) -> Result<()> {
    if net.provider_candidates().len() < code.d() {
        return Err(Error::param(format!(
            "{} provider candidates cannot supply d = {}",
            net.provider_candidates().len(),
            code.d()
        )));
    }
    Ok(())
}

/// Uniformly random newcomer and `d`-subset of providers (partial
/// Fisher-Yates over `V_p`). Providers are returned in id order.
fn random_nodes<R: Rng + ?Sized>(
    net: &OverlayNetwork,
    code: &CodeParams,
    rng: &mut R,
) -> (NodeId, Vec<NodeId>) {
    let newcomers = net.newcomer_candidates();
    let newcomer = newcomers[rng.gen_range(0..newcomers.len())];
    let mut pool = net.provider_candidates().to_vec();
    let (chosen, _) = pool.partial_shuffle(rng, code.d());
    let mut providers = chosen.to_vec();
    providers.sort_unstable();
    (newcomer, providers)
}

/// RS: random newcomer and providers, uniform traffic.
pub fn select_rs<R: Rng + ?Sized>(
    net: &OverlayNetwork,
    code: &CodeParams,
    mode: BetaMode,
    rng: &mut R,
) -> Result<RepairPlan> {
    check_candidates(net, code)?;
    let (newcomer, providers) = random_nodes(net, code, rng);
    let beta = traffic::uniform_beta(code, mode);
    RepairPlan::new(
        Scheme::Rs,
        newcomer,
        providers,
        TrafficVector::uniform(beta, code.d()),
    )
}

/// FRS: the RS node choice with flexible traffic. Returns the plan and its
/// flexible regeneration time.
pub fn select_frs<R: Rng + ?Sized>(
    net: &OverlayNetwork,
    code: &CodeParams,
    rng: &mut R,
) -> Result<(RepairPlan, f64)> {
    check_candidates(net, code)?;
    let (newcomer, providers) = random_nodes(net, code, rng);
    flexible_plan(net, code, Scheme::Frs, newcomer, providers)
}

fn flexible_plan(
    net: &OverlayNetwork,
    code: &CodeParams,
    scheme: Scheme,
    newcomer: NodeId,
    providers: Vec<NodeId>,
) -> Result<(RepairPlan, f64)> {
    let mut plan = RepairPlan::new(
        scheme,
        newcomer,
        providers,
        TrafficVector::uniform(0.0, code.d()),
    )?;
    let caps = plan_capacities(net, &plan)?;
    plan.traffic = traffic::flexible_beta(&caps, code)?;
    let time = traffic::flexible_regen_time(&caps, code)?;
    Ok((plan, time))
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    bandwidth: f64,
    provider: NodeId,
    newcomer: NodeId,
    newcomer_pos: usize,
}

fn edge_order(a: &Edge, b: &Edge) -> Ordering {
    b.bandwidth
        .total_cmp(&a.bandwidth)
        .then(a.provider.cmp(&b.provider))
        .then(a.newcomer.cmp(&b.newcomer))
}

/// SPSN scan. Returns the newcomer, its providers in scan order and how many
/// sorted links were read.
fn spsn_scan(net: &OverlayNetwork, d: usize) -> (NodeId, Vec<NodeId>, usize) {
    let providers = net.provider_candidates();
    let newcomers = net.newcomer_candidates();
    let mut edges = Vec::with_capacity(providers.len() * newcomers.len());
    for (i, &p) in providers.iter().enumerate() {
        for (j, &v) in newcomers.iter().enumerate() {
            edges.push(Edge {
                bandwidth: net.bandwidth(i, j),
                provider: p,
                newcomer: v,
                newcomer_pos: j,
            });
        }
    }
    edges.sort_unstable_by(edge_order);

    let mut chosen: Vec<Vec<NodeId>> = vec![Vec::new(); newcomers.len()];
    for (t, e) in edges.iter().enumerate() {
        let set = &mut chosen[e.newcomer_pos];
        set.push(e.provider);
        if set.len() >= d {
            return (e.newcomer, std::mem::take(set), t + 1);
        }
    }
    unreachable!("every newcomer candidate has |V_p| >= d incident links")
}

/// SPSN: scans bipartite links in descending bandwidth, crediting each to its
/// newcomer endpoint, and stops at the first newcomer with `d` providers.
/// That star has the largest achievable bottleneck.
pub fn select_spsn(net: &OverlayNetwork, code: &CodeParams, mode: BetaMode) -> Result<RepairPlan> {
    check_candidates(net, code)?;
    let (newcomer, mut providers, _) = spsn_scan(net, code.d());
    providers.sort_unstable();
    let beta = traffic::uniform_beta(code, mode);
    RepairPlan::new(
        Scheme::Spsn,
        newcomer,
        providers,
        TrafficVector::uniform(beta, code.d()),
    )
}

/// FLEX: for each newcomer candidate, keep its `d` highest-bandwidth links
/// and evaluate the flexible time; return the candidate with the smallest.
///
/// Only each candidate's top `d` links matter, so no global sort is needed.
pub fn select_flex(net: &OverlayNetwork, code: &CodeParams) -> Result<(RepairPlan, f64)> {
    check_candidates(net, code)?;
    let d = code.d();
    let providers = net.provider_candidates();
    let mut best: Option<(f64, NodeId, Vec<NodeId>)> = None;
    let mut column: Vec<(f64, NodeId)> = Vec::with_capacity(providers.len());
    for (j, &v) in net.newcomer_candidates().iter().enumerate() {
        column.clear();
        column.extend(
            providers
                .iter()
                .enumerate()
                .map(|(i, &p)| (net.bandwidth(i, j), p)),
        );
        column.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let top = &column[..d];
        let caps: Vec<f64> = top.iter().map(|e| e.0).collect();
        let t = traffic::flexible_regen_time(&caps, code)?;
        if best.as_ref().is_none_or(|(bt, _, _)| t < *bt) {
            best = Some((t, v, top.iter().map(|e| e.1).collect()));
        }
    }
    let (_, newcomer, mut chosen) = best.expect("at least one newcomer candidate");
    chosen.sort_unstable();
    flexible_plan(net, code, Scheme::Flex, newcomer, chosen)
}

fn enumeration_size(net: &OverlayNetwork, code: &CodeParams) -> Result<()> {
    let p = net.provider_candidates().len() as u128;
    let d = code.d() as u128;
    let mut subsets: u128 = 1;
    for i in 0..d {
        subsets = subsets * (p - i) / (i + 1);
        if subsets > ENUMERATION_LIMIT {
            break;
        }
    }
    let total = subsets.saturating_mul(net.newcomer_candidates().len() as u128);
    if total > ENUMERATION_LIMIT {
        return Err(Error::Size(format!(
            "C({p}, {d}) x {} newcomers exceeds {ENUMERATION_LIMIT}",
            net.newcomer_candidates().len()
        )));
    }
    Ok(())
}

/// Visits every (newcomer, provider subset) pair in (newcomer id,
/// lexicographic provider ids) order with the subset's bandwidths.
fn for_each_star(net: &OverlayNetwork, d: usize, mut visit: impl FnMut(NodeId, &[NodeId], &[f64])) {
    let providers: Vec<(NodeId, usize)> = net
        .provider_candidates()
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .sorted()
        .collect();
    let newcomers: Vec<(NodeId, usize)> = net
        .newcomer_candidates()
        .iter()
        .enumerate()
        .map(|(j, &v)| (v, j))
        .sorted()
        .collect();
    let mut ids = Vec::with_capacity(d);
    let mut caps = Vec::with_capacity(d);
    for &(v, j) in &newcomers {
        for subset in providers.iter().combinations(d) {
            ids.clear();
            caps.clear();
            for &&(p, i) in &subset {
                ids.push(p);
                caps.push(net.bandwidth(i, j));
            }
            visit(v, &ids, &caps);
        }
    }
}

/// Exhaustive oracle for uniform traffic: the plan maximizing the bottleneck
/// bandwidth, first in (newcomer id, lexicographic providers) order on ties.
pub fn brute_force_uniform(
    net: &OverlayNetwork,
    code: &CodeParams,
    mode: BetaMode,
) -> Result<RepairPlan> {
    check_candidates(net, code)?;
    enumeration_size(net, code)?;
    let mut best: Option<(f64, NodeId, Vec<NodeId>)> = None;
    for_each_star(net, code.d(), |v, ids, caps| {
        let neck = caps.iter().cloned().fold(f64::INFINITY, f64::min);
        if best.as_ref().is_none_or(|(b, _, _)| neck > *b) {
            best = Some((neck, v, ids.to_vec()));
        }
    });
    let (_, newcomer, providers) = best.expect("non-empty enumeration");
    let beta = traffic::uniform_beta(code, mode);
    RepairPlan::new(
        Scheme::Oracle,
        newcomer,
        providers,
        TrafficVector::uniform(beta, code.d()),
    )
}

/// Exhaustive oracle for flexible traffic: minimizes
/// `M / (k * sum of the d - k + 1 smallest selected bandwidths)` over every
/// provider subset of every newcomer.
pub fn brute_force_flex(net: &OverlayNetwork, code: &CodeParams) -> Result<(RepairPlan, f64)> {
    check_candidates(net, code)?;
    enumeration_size(net, code)?;
    let slack = code.slack();
    let scale = code.file_size() / code.k() as f64;
    let mut sorted = Vec::with_capacity(code.d());
    let mut best: Option<(f64, NodeId, Vec<NodeId>)> = None;
    for_each_star(net, code.d(), |v, ids, caps| {
        sorted.clear();
        sorted.extend_from_slice(caps);
        sorted.sort_by(f64::total_cmp);
        let t = scale / sorted[..slack].iter().sum::<f64>();
        if best.as_ref().is_none_or(|(b, _, _)| t < *b) {
            best = Some((t, v, ids.to_vec()));
        }
    });
    let (time, newcomer, providers) = best.expect("non-empty enumeration");
    let (plan, _) = flexible_plan(net, code, Scheme::Oracle, newcomer, providers)?;
    Ok((plan, time))
}
