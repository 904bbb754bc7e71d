//! Repair on a fat-tree where provider flows share physical links.
//!
//! Flows receive max-min fair rates. Between two consecutive flow
//! completions (an epoch) every rate is constant; when a flow finishes its
//! capacity is released and the remaining flows are reallocated.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CodeParams, FatTreeNetwork, FatTreeRoles, NodeId, Path};
use crate::overlay_select::{RepairPlan, Scheme, ENUMERATION_LIMIT};
use crate::traffic::{self, BetaMode, TrafficVector};

/// Default step of [`fluid_oracle`], in seconds.
pub const DEFAULT_DT: f64 = 1e-3;

/// Progress of one provider's flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub path: Path,
    /// Mb still to send.
    pub remaining: f64,
    /// Current allocation in Mbps.
    pub rate: f64,
    pub done_at: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRate {
    pub provider: NodeId,
    pub rate_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub duration_s: f64,
    /// Rates of every flow active during the epoch.
    pub rates: Vec<FlowRate>,
    /// Provider whose flow completes at the end of the epoch.
    pub finished: NodeId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenReport {
    pub scheme: Scheme,
    pub beta_mode: BetaMode,
    pub total_time_s: f64,
    pub epochs: Vec<Epoch>,
    pub finish_order: Vec<NodeId>,
}

/// Progressive-filling max-min allocation.
///
/// `paths` are link-id lists of the active flows, `capacity` the available
/// bandwidth of every link they use and `counts` the number of active paths
/// crossing each link. Repeatedly takes the link with the smallest fair
/// share `c(l) / q(l)` (ties by link id), gives that share to every
/// still-unassigned path through it and charges those paths' other links.
pub fn maxmin_allocate(
    paths: &[&[usize]],
    capacity: &BTreeMap<usize, f64>,
    counts: &BTreeMap<usize, usize>,
) -> Result<Vec<f64>> {
    let mut observed: BTreeMap<usize, usize> = BTreeMap::new();
    for path in paths {
        for &l in *path {
            *observed.entry(l).or_default() += 1;
        }
    }
    for (&l, &q) in &observed {
        match capacity.get(&l) {
            Some(c) if c.is_finite() && *c > 0.0 => {}
            Some(c) => return Err(Error::param(format!("link {l} has capacity {c}"))),
            None => return Err(Error::Consistency(format!("link {l} has no capacity"))),
        }
        if counts.get(&l).copied().unwrap_or(0) != q {
            return Err(Error::Consistency(format!(
                "link {l}: count {} but {q} active paths",
                counts.get(&l).copied().unwrap_or(0)
            )));
        }
    }
    if let Some((l, _)) = counts
        .iter()
        .find(|(l, q)| **q > 0 && !observed.contains_key(l))
    {
        return Err(Error::Consistency(format!(
            "link {l} counted but crossed by no active path"
        )));
    }

    let mut cap: BTreeMap<usize, f64> = observed.keys().map(|l| (*l, capacity[l])).collect();
    let mut q = observed;
    let mut rates: Vec<Option<f64>> = vec![None; paths.len()];
    let mut unassigned = paths.len();
    while unassigned > 0 {
        let (link, share) = q
            .iter()
            .filter(|(_, n)| **n > 0)
            .map(|(l, n)| (*l, cap[l] / *n as f64))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Consistency("unassigned paths but no loaded link".into()))?;
        for (i, path) in paths.iter().enumerate() {
            if rates[i].is_some() || !path.contains(&link) {
                continue;
            }
            rates[i] = Some(share);
            unassigned -= 1;
            for l in path.iter() {
                let c = cap.get_mut(l).unwrap();
                *c = (*c - share).max(0.0);
                *q.get_mut(l).unwrap() -= 1;
            }
        }
    }
    Ok(rates.into_iter().map(|r| r.unwrap()).collect())
}

fn route_plan(net: &FatTreeNetwork, plan: &RepairPlan) -> Result<Vec<Path>> {
    if !net.is_host(plan.newcomer) {
        return Err(Error::param(format!(
            "newcomer {} is not a host",
            plan.newcomer
        )));
    }
    if plan.providers.is_empty() {
        return Err(Error::param("plan has no providers"));
    }
    plan.providers
        .iter()
        .map(|&p| net.route(p, plan.newcomer))
        .collect()
}

/// Regeneration time of a uniform-traffic plan on the fat-tree.
///
/// Runs `d` epochs. In each, rates come from [`maxmin_allocate`] over the
/// unfinished flows; the flow with the smallest `remaining / rate` finishes
/// (smallest provider id on exact ties, leaving a zero-length epoch for the
/// other), every flow is advanced by the epoch length, and the finished
/// flow's links are released.
pub fn regen_time_fattree(
    net: &FatTreeNetwork,
    plan: &RepairPlan,
    beta_mode: BetaMode,
) -> Result<RegenReport> {
    let beta = plan
        .traffic
        .uniform_amount()
        .ok_or_else(|| Error::param("fat-tree evaluation requires uniform traffic"))?;
    let paths = route_plan(net, plan)?;
    let mut flows: Vec<FlowState> = paths
        .into_iter()
        .map(|path| FlowState {
            path,
            remaining: beta,
            rate: 0.0,
            done_at: None,
        })
        .collect();

    let capacity: BTreeMap<usize, f64> = flows
        .iter()
        .flat_map(|f| f.path.links.iter())
        .map(|&l| (l, net.capacity(l)))
        .collect();
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &flows {
        for &l in &f.path.links {
            *counts.entry(l).or_default() += 1;
        }
    }

    let mut active: Vec<usize> = (0..flows.len())
        .sorted_by_key(|&i| flows[i].path.provider)
        .collect();
    let mut epochs = Vec::with_capacity(flows.len());
    let mut finish_order = Vec::with_capacity(flows.len());
    let mut elapsed = 0.0;
    while !active.is_empty() {
        let rates = {
            let paths: Vec<&[usize]> = active
                .iter()
                .map(|&i| flows[i].path.links.as_slice())
                .collect();
            maxmin_allocate(&paths, &capacity, &counts)?
        };
        for (&i, &r) in active.iter().zip(&rates) {
            flows[i].rate = r;
        }
        // `active` is in provider order, so the first minimum wins ties
        let (pos, duration) = active
            .iter()
            .map(|&i| flows[i].remaining / flows[i].rate)
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        for &i in &active {
            let f = &mut flows[i];
            f.remaining = (f.remaining - duration * f.rate).max(0.0);
        }
        elapsed += duration;
        let snapshot = active.clone();
        let done = active.remove(pos);
        let f = &mut flows[done];
        f.remaining = 0.0;
        f.done_at = Some(elapsed);
        for l in &f.path.links {
            let q = counts.get_mut(l).unwrap();
            *q -= 1;
            if *q == 0 {
                counts.remove(l);
            }
        }
        epochs.push(Epoch {
            duration_s: duration,
            rates: snapshot
                .iter()
                .zip(&rates)
                .map(|(&i, &r)| FlowRate {
                    provider: flows[i].path.provider,
                    rate_mbps: r,
                })
                .collect(),
            finished: flows[done].path.provider,
        });
        finish_order.push(flows[done].path.provider);
    }

    Ok(RegenReport {
        scheme: plan.scheme,
        beta_mode,
        total_time_s: elapsed,
        epochs,
        finish_order,
    })
}

/// Classic water-filling: raise every unfrozen flow's rate by the same
/// increment until some link saturates, freeze the flows crossing saturated
/// links, repeat. Written independently of [`maxmin_allocate`].
fn water_fill(net: &FatTreeNetwork, paths: &[&Path]) -> Vec<f64> {
    let links: Vec<usize> = paths
        .iter()
        .flat_map(|p| p.links.iter().copied())
        .sorted()
        .dedup()
        .collect();
    let mut residual: Vec<f64> = links.iter().map(|&l| net.capacity(l)).collect();
    let index = |l: usize| links.binary_search(&l).unwrap();
    let mut rate = vec![0.0; paths.len()];
    let mut frozen = vec![false; paths.len()];
    while frozen.iter().any(|f| !f) {
        let mut users = vec![0usize; links.len()];
        for (p, path) in paths.iter().enumerate() {
            if !frozen[p] {
                for &l in &path.links {
                    users[index(l)] += 1;
                }
            }
        }
        let increment = links
            .iter()
            .enumerate()
            .filter(|(x, _)| users[*x] > 0)
            .map(|(x, _)| residual[x] / users[x] as f64)
            .fold(f64::INFINITY, f64::min);
        for x in 0..links.len() {
            residual[x] -= increment * users[x] as f64;
        }
        let saturated: Vec<bool> = (0..links.len())
            .map(|x| users[x] > 0 && residual[x] <= 1e-12 * net.capacity(links[x]))
            .collect();
        for (p, path) in paths.iter().enumerate() {
            if frozen[p] {
                continue;
            }
            rate[p] += increment;
            if path.links.iter().any(|&l| saturated[index(l)]) {
                frozen[p] = true;
            }
        }
    }
    rate
}

/// Time-stepped fluid simulation of a plan, used to cross-check
/// [`regen_time_fattree`].
///
/// Every step recomputes water-filling rates from scratch for the unfinished
/// flows and advances them by `dt`, except that a step is cut short at the
/// earliest completion so finish times are exact rather than rounded to `dt`.
pub fn fluid_oracle(net: &FatTreeNetwork, plan: &RepairPlan, dt: f64) -> Result<f64> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    let paths = route_plan(net, plan)?;
    let mut remaining: Vec<f64> = plan.traffic.as_slice().to_vec();
    let tolerance: Vec<f64> = remaining.iter().map(|b| b * 1e-12).collect();
    let mut active: Vec<usize> = (0..paths.len()).filter(|&i| remaining[i] > 0.0).collect();
    let mut now = 0.0;
    while !active.is_empty() {
        let view: Vec<&Path> = active.iter().map(|&i| &paths[i]).collect();
        let rates = water_fill(net, &view);
        let next = active
            .iter()
            .zip(&rates)
            .map(|(&i, r)| remaining[i] / r)
            .fold(f64::INFINITY, f64::min);
        let step = next.min(dt);
        for (&i, r) in active.iter().zip(&rates) {
            remaining[i] -= r * step;
        }
        now += step;
        if step == next {
            for &i in &active {
                if remaining[i] <= tolerance[i] {
                    remaining[i] = 0.0;
                }
            }
        }
        active.retain(|&i| remaining[i] > 0.0);
    }
    Ok(now)
}

/// RS-F: uniformly random newcomer among the newcomer hosts and `d`-subset
/// of the provider hosts, uniform traffic.
pub fn select_rs_f<R: Rng + ?Sized>(
    net: &FatTreeNetwork,
    code: &CodeParams,
    roles: &FatTreeRoles,
    mode: BetaMode,
    rng: &mut R,
) -> Result<RepairPlan> {
    roles.validate(net, code)?;
    let newcomer = roles.newcomers[rng.gen_range(0..roles.newcomers.len())];
    let mut pool = roles.providers.clone();
    let (chosen, _) = pool.partial_shuffle(rng, code.d());
    let mut providers = chosen.to_vec();
    providers.sort_unstable();
    let beta = traffic::uniform_beta(code, mode);
    RepairPlan::new(
        Scheme::RsF,
        newcomer,
        providers,
        TrafficVector::uniform(beta, code.d()),
    )
}

/// Newcomer host with the largest host-edge capacity (smallest id on ties).
fn spsn_f_newcomer(net: &FatTreeNetwork, roles: &FatTreeRoles) -> NodeId {
    let mut best = roles.newcomers[0];
    for &h in &roles.newcomers[1..] {
        let (c, b) = (
            net.capacity(net.host_edge_link(h)),
            net.capacity(net.host_edge_link(best)),
        );
        if c > b || (c == b && h < best) {
            best = h;
        }
    }
    best
}

/// Deletion loop of SPSN-F. Returns surviving providers (id order) and the
/// deleted ones in deletion order.
fn spsn_f_prune(
    net: &FatTreeNetwork,
    newcomer: NodeId,
    providers: &[NodeId],
    d: usize,
) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    let mut candidates: Vec<Path> = providers
        .iter()
        .map(|&p| net.route(p, newcomer))
        .try_collect()?;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for path in &candidates {
        for &l in &path.links {
            *counts.entry(l).or_default() += 1;
        }
    }
    let mut deleted = Vec::new();
    while candidates.len() > d {
        // links ascending by fair share, then id; rank 0 is the most significant bit
        let ranked: Vec<usize> = counts
            .iter()
            .map(|(&l, &q)| (l, net.capacity(l) / q as f64))
            .sorted_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(l, _)| l)
            .collect();
        let rank: BTreeMap<usize, usize> =
            ranked.iter().enumerate().map(|(r, &l)| (l, r)).collect();
        let eta = |path: &Path| {
            let mut bits = vec![false; ranked.len()];
            for l in &path.links {
                bits[rank[l]] = true;
            }
            bits
        };
        let victim = candidates
            .iter()
            .enumerate()
            .map(|(i, p)| (eta(p), p.provider, i))
            .max()
            .map(|(_, _, i)| i)
            .unwrap();
        let path = candidates.remove(victim);
        for l in &path.links {
            let q = counts.get_mut(l).unwrap();
            *q -= 1;
            if *q == 0 {
                counts.remove(l);
            }
        }
        deleted.push(path.provider);
    }
    let mut kept: Vec<NodeId> = candidates.iter().map(|p| p.provider).collect();
    kept.sort_unstable();
    Ok((kept, deleted))
}

/// SPSN-F heuristic.
///
/// The newcomer is the candidate host with the best host-edge link. Starting
/// from every provider candidate, it then repeatedly ranks the links of all
/// candidate paths by fair share `c(l) / q(l)` and deletes the candidate
/// whose path covers the worst links: each path is encoded as a bit string
/// whose most significant bit marks the smallest-share link, and the largest
/// string (larger provider id on ties) is removed until `d` remain.
pub fn select_spsn_f(
    net: &FatTreeNetwork,
    code: &CodeParams,
    roles: &FatTreeRoles,
    mode: BetaMode,
) -> Result<RepairPlan> {
    roles.validate(net, code)?;
    let newcomer = spsn_f_newcomer(net, roles);
    let (providers, _) = spsn_f_prune(net, newcomer, &roles.providers, code.d())?;
    let beta = traffic::uniform_beta(code, mode);
    RepairPlan::new(
        Scheme::SpsnF,
        newcomer,
        providers,
        TrafficVector::uniform(beta, code.d()),
    )
}

/// Exhaustive search over every newcomer and provider subset, scored with
/// [`regen_time_fattree`]. Only meant for tiny test fixtures.
pub fn brute_force_fattree(
    net: &FatTreeNetwork,
    code: &CodeParams,
    roles: &FatTreeRoles,
    mode: BetaMode,
) -> Result<(RepairPlan, f64)> {
    roles.validate(net, code)?;
    let (p, d) = (roles.providers.len() as u128, code.d() as u128);
    let subsets = (0..d).fold(1u128, |acc, i| acc * (p - i) / (i + 1));
    if subsets.saturating_mul(roles.newcomers.len() as u128) > ENUMERATION_LIMIT / 100 {
        return Err(Error::Size(format!(
            "C({p}, {d}) x {} newcomers",
            roles.newcomers.len()
        )));
    }
    let beta = traffic::uniform_beta(code, mode);
    let mut best: Option<(f64, RepairPlan)> = None;
    for &v in &roles.newcomers {
        for subset in roles.providers.iter().copied().combinations(code.d()) {
            let plan = RepairPlan::new(
                Scheme::Oracle,
                v,
                subset,
                TrafficVector::uniform(beta, code.d()),
            )?;
            let t = regen_time_fattree(net, &plan, mode)?.total_time_s;
            if best.as_ref().is_none_or(|(b, _)| t < *b) {
                best = Some((t, plan));
            }
        }
    }
    let (t, plan) = best.expect("non-empty enumeration");
    Ok((plan, t))
}
