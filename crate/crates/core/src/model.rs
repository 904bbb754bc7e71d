//! The world the selection algorithms operate on: code parameters, the
//! overlay bandwidth matrix, and the fat-tree with its static routing.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Dense node id. In generated overlays the failed node is 0; in a fat-tree
/// node ids coincide with host ids.
pub type NodeId = usize;

/// Regenerating-code system description `(N, n, k, d, M, alpha)`.
///
/// Storage per node sits at the MDS point `alpha = M / k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodeParamsRepr", into = "CodeParamsRepr")]
pub struct CodeParams {
    n_total: usize,
    n: usize,
    k: usize,
    d: usize,
    file_size_mb: f64,
}

#[derive(Serialize, Deserialize)]
struct CodeParamsRepr {
    n_total: usize,
    n: usize,
    k: usize,
    d: usize,
    file_size_mb: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_mb: Option<f64>,
}

impl TryFrom<CodeParamsRepr> for CodeParams {
    type Error = Error;

    fn try_from(r: CodeParamsRepr) -> Result<Self> {
        let code = CodeParams::new(r.n_total, r.n, r.k, r.d, r.file_size_mb)?;
        if let Some(alpha) = r.alpha_mb {
            if (alpha - code.alpha()).abs() > 1e-9 * code.alpha() {
                return Err(Error::param(format!(
                    "alpha_mb {alpha} disagrees with M/k = {}",
                    code.alpha()
                )));
            }
        }
        Ok(code)
    }
}

impl From<CodeParams> for CodeParamsRepr {
    fn from(c: CodeParams) -> Self {
        CodeParamsRepr {
            n_total: c.n_total,
            n: c.n,
            k: c.k,
            d: c.d,
            file_size_mb: c.file_size_mb,
            alpha_mb: Some(c.alpha()),
        }
    }
}

impl CodeParams {
    /// Requires `1 <= k <= d <= n - 1 < n_total` and a positive finite file size.
    pub fn new(n_total: usize, n: usize, k: usize, d: usize, file_size_mb: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k must be at least 1"));
        }
        if d < k {
            return Err(Error::param(format!("d = {d} is smaller than k = {k}")));
        }
        if n == 0 || d > n - 1 {
            return Err(Error::param(format!(
                "d = {d} exceeds n - 1 = {}",
                n.saturating_sub(1)
            )));
        }
        if n >= n_total {
            return Err(Error::param(format!(
                "n = {n} must be smaller than N = {n_total}"
            )));
        }
        if !(file_size_mb.is_finite() && file_size_mb > 0.0) {
            return Err(Error::param(format!(
                "file size must be positive, got {file_size_mb}"
            )));
        }
        Ok(CodeParams {
            n_total,
            n,
            k,
            d,
            file_size_mb,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn file_size(&self) -> f64 {
        self.file_size_mb
    }

    /// Per-node storage, `M / k`.
    pub fn alpha(&self) -> f64 {
        self.file_size_mb / self.k as f64
    }

    /// `d - k + 1`, the number of slowest links that carry the repair
    /// bottleneck under flexible traffic.
    pub fn slack(&self) -> usize {
        self.d - self.k + 1
    }

    pub fn with_d(&self, d: usize) -> Result<Self> {
        CodeParams::new(self.n_total, self.n, self.k, d, self.file_size_mb)
    }
}

/// Uniform bandwidth interval `[low, high]` in Mbps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct BandwidthDistribution {
    low: f64,
    high: f64,
}

#[derive(Serialize, Deserialize)]
struct DistRepr {
    low: f64,
    high: f64,
}

impl TryFrom<DistRepr> for BandwidthDistribution {
    type Error = Error;

    fn try_from(r: DistRepr) -> Result<Self> {
        BandwidthDistribution::new(r.low, r.high)
    }
}

impl From<BandwidthDistribution> for DistRepr {
    fn from(d: BandwidthDistribution) -> Self {
        DistRepr {
            low: d.low,
            high: d.high,
        }
    }
}

impl BandwidthDistribution {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low > 0.0 && low <= high) {
            return Err(Error::param(format!(
                "need 0 < low <= high, got [{low}, {high}]"
            )));
        }
        Ok(BandwidthDistribution { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        BandwidthDistribution::new(self.low * factor, self.high * factor)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            return self.low;
        }
        rng.gen_range(self.low..=self.high)
    }
}

/// Overlay network: roles plus the available bandwidth between every
/// provider candidate and every newcomer candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OverlayRepr", into = "OverlayRepr")]
pub struct OverlayNetwork {
    failed_node: NodeId,
    provider_candidates: Vec<NodeId>,
    newcomer_candidates: Vec<NodeId>,
    // row-major, rows = provider candidates
    bandwidth: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct OverlayRepr {
    failed_node: NodeId,
    provider_candidates: Vec<NodeId>,
    newcomer_candidates: Vec<NodeId>,
    bandwidth: Vec<Vec<f64>>,
}

impl TryFrom<OverlayRepr> for OverlayNetwork {
    type Error = Error;

    fn try_from(r: OverlayRepr) -> Result<Self> {
        OverlayNetwork::new(
            r.failed_node,
            r.provider_candidates,
            r.newcomer_candidates,
            r.bandwidth,
        )
    }
}

impl From<OverlayNetwork> for OverlayRepr {
    fn from(o: OverlayNetwork) -> Self {
        let bandwidth = o.rows().map(<[f64]>::to_vec).collect();
        OverlayRepr {
            failed_node: o.failed_node,
            provider_candidates: o.provider_candidates,
            newcomer_candidates: o.newcomer_candidates,
            bandwidth,
        }
    }
}

impl OverlayNetwork {
    /// `bandwidth[i][j]` is the bandwidth between `providers[i]` and
    /// `newcomers[j]`.
    pub fn new(
        failed_node: NodeId,
        providers: Vec<NodeId>,
        newcomers: Vec<NodeId>,
        bandwidth: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if providers.is_empty() || newcomers.is_empty() {
            return Err(Error::param(
                "overlay needs at least one provider and one newcomer candidate",
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(failed_node);
        for &id in providers.iter().chain(&newcomers) {
            if !seen.insert(id) {
                return Err(Error::param(format!(
                    "node {id} appears in more than one role"
                )));
            }
        }
        if bandwidth.len() != providers.len() {
            return Err(Error::param(format!(
                "bandwidth matrix has {} rows, expected {}",
                bandwidth.len(),
                providers.len()
            )));
        }
        let mut flat = Vec::with_capacity(providers.len() * newcomers.len());
        for row in &bandwidth {
            if row.len() != newcomers.len() {
                return Err(Error::param(format!(
                    "bandwidth row has {} entries, expected {}",
                    row.len(),
                    newcomers.len()
                )));
            }
            for &b in row {
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::param(format!(
                        "bandwidth entries must be positive, got {b}"
                    )));
                }
            }
            flat.extend_from_slice(row);
        }
        Ok(OverlayNetwork {
            failed_node,
            provider_candidates: providers,
            newcomer_candidates: newcomers,
            bandwidth: flat,
        })
    }

    pub fn failed_node(&self) -> NodeId {
        self.failed_node
    }

    pub fn provider_candidates(&self) -> &[NodeId] {
        &self.provider_candidates
    }

    pub fn newcomer_candidates(&self) -> &[NodeId] {
        &self.newcomer_candidates
    }

    /// Bandwidth by position in the candidate lists.
    pub fn bandwidth(&self, provider_pos: usize, newcomer_pos: usize) -> f64 {
        self.bandwidth[provider_pos * self.newcomer_candidates.len() + newcomer_pos]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.bandwidth.chunks(self.newcomer_candidates.len())
    }

    pub fn provider_pos(&self, id: NodeId) -> Option<usize> {
        self.provider_candidates.iter().position(|&p| p == id)
    }

    pub fn newcomer_pos(&self, id: NodeId) -> Option<usize> {
        self.newcomer_candidates.iter().position(|&p| p == id)
    }

    /// Bandwidth between two node ids, if they are a provider/newcomer pair.
    pub fn bandwidth_between(&self, provider: NodeId, newcomer: NodeId) -> Option<f64> {
        Some(self.bandwidth(self.provider_pos(provider)?, self.newcomer_pos(newcomer)?))
    }

    /// Checks role sizes against the code: `|V_p| = n - 1`, `|V_n| = N - n`.
    pub fn check_code(&self, code: &CodeParams) -> Result<()> {
        if self.provider_candidates.len() != code.n() - 1 {
            return Err(Error::param(format!(
                "overlay has {} provider candidates but n - 1 = {}",
                self.provider_candidates.len(),
                code.n() - 1
            )));
        }
        if self.newcomer_candidates.len() != code.n_total() - code.n() {
            return Err(Error::param(format!(
                "overlay has {} newcomer candidates but N - n = {}",
                self.newcomer_candidates.len(),
                code.n_total() - code.n()
            )));
        }
        Ok(())
    }

    /// Multiplies every bandwidth by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rows = self
            .rows()
            .map(|r| r.iter().map(|b| b * factor).collect())
            .collect();
        OverlayNetwork::new(
            self.failed_node,
            self.provider_candidates.clone(),
            self.newcomer_candidates.clone(),
            rows,
        )
    }
}

/// Node 0 fails, nodes `1..n` are provider candidates and the remaining
/// `N - n` nodes are newcomer candidates. Bandwidths are i.i.d. draws from
/// `dist`, filled row by row.
pub fn gen_overlay(code: &CodeParams, dist: &BandwidthDistribution, seed: u64) -> OverlayNetwork {
    let mut rng = seed::rng(seed, Stream::Topology);
    let providers: Vec<NodeId> = (1..code.n()).collect();
    let newcomers: Vec<NodeId> = (code.n()..code.n_total()).collect();
    let bandwidth = providers
        .iter()
        .map(|_| newcomers.iter().map(|_| dist.sample(&mut rng)).collect())
        .collect();
    OverlayNetwork::new(0, providers, newcomers, bandwidth)
        .expect("valid code params give a valid overlay")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    HostEdge,
    EdgeAgg,
    AggCore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Device {
    Host(usize),
    Edge(usize),
    Agg(usize),
    Core(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Host {
    pub id: NodeId,
    pub pod: usize,
    /// Edge switch index within the pod.
    pub edge: usize,
    /// Port on that edge switch.
    pub port: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub id: usize,
    pub endpoints: [Device; 2],
    pub tier: Tier,
    /// Available bandwidth in Mbps.
    pub capacity: f64,
}

/// Per-tier capacity distributions of a fat-tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierDistributions {
    pub host_edge: BandwidthDistribution,
    pub edge_agg: BandwidthDistribution,
    pub agg_core: BandwidthDistribution,
}

impl TierDistributions {
    /// Bottom tier `bottom`; the upper tiers scale the interval endpoints by
    /// `middle` and `top`.
    pub fn scaled(bottom: BandwidthDistribution, middle: f64, top: f64) -> Result<Self> {
        Ok(TierDistributions {
            host_edge: bottom,
            edge_agg: bottom.scaled(middle)?,
            agg_core: bottom.scaled(top)?,
        })
    }

    pub fn for_tier(&self, tier: Tier) -> &BandwidthDistribution {
        match tier {
            Tier::HostEdge => &self.host_edge,
            Tier::EdgeAgg => &self.edge_agg,
            Tier::AggCore => &self.agg_core,
        }
    }
}

impl Default for TierDistributions {
    /// U[1,120] at the bottom, five and ten times that above.
    fn default() -> Self {
        let bottom = BandwidthDistribution::new(1.0, 120.0).unwrap();
        TierDistributions::scaled(bottom, 5.0, 10.0).unwrap()
    }
}

/// K-ary three-tier fat-tree.
///
/// Hosts are numbered `(pod * K/2 + edge) * K/2 + port`. Link ids are laid
/// out tier by tier, `K^3/4` links per tier:
///
/// * host-edge: link id = host id;
/// * edge-agg: `K^3/4 + (pod * K/2 + edge) * K/2 + agg`;
/// * agg-core: `K^3/2 + (pod * K/2 + agg) * K/2 + port`, where aggregation
///   switch `agg` of every pod reaches core switches `agg * K/2 + port`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FatTreeRepr", into = "FatTreeRepr")]
pub struct FatTreeNetwork {
    k: usize,
    hosts: Vec<Host>,
    links: Vec<LinkRecord>,
}

#[derive(Serialize, Deserialize)]
struct FatTreeRepr {
    k: usize,
    hosts: Vec<Host>,
    links: Vec<LinkRecord>,
}

impl TryFrom<FatTreeRepr> for FatTreeNetwork {
    type Error = Error;

    fn try_from(r: FatTreeRepr) -> Result<Self> {
        let capacities: Vec<f64> = r.links.iter().map(|l| l.capacity).collect();
        let net = FatTreeNetwork::with_capacities(r.k, capacities)?;
        if net.hosts != r.hosts {
            return Err(Error::param(
                "host list does not match the canonical fat-tree layout",
            ));
        }
        for (ours, theirs) in net.links.iter().zip(&r.links) {
            if ours.id != theirs.id
                || ours.endpoints != theirs.endpoints
                || ours.tier != theirs.tier
            {
                return Err(Error::param(format!(
                    "link {} does not match the canonical fat-tree wiring",
                    theirs.id
                )));
            }
        }
        Ok(net)
    }
}

impl From<FatTreeNetwork> for FatTreeRepr {
    fn from(n: FatTreeNetwork) -> Self {
        FatTreeRepr {
            k: n.k,
            hosts: n.hosts,
            links: n.links,
        }
    }
}

fn check_arity(k: usize) -> Result<()> {
    if k < 4 || !k.is_multiple_of(2) {
        return Err(Error::param(format!(
            "fat-tree arity must be even and at least 4, got {k}"
        )));
    }
    Ok(())
}

impl FatTreeNetwork {
    /// Canonical wiring with capacities given in link-id order.
    pub fn with_capacities(k: usize, capacities: Vec<f64>) -> Result<Self> {
        check_arity(k)?;
        let half = k / 2;
        let per_tier = k * half * half;
        if capacities.len() != 3 * per_tier {
            return Err(Error::param(format!(
                "fat-tree with K = {k} has {} links, got {} capacities",
                3 * per_tier,
                capacities.len()
            )));
        }
        if let Some(c) = capacities.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::param(format!(
                "link capacities must be positive, got {c}"
            )));
        }

        let mut hosts = Vec::with_capacity(per_tier);
        for pod in 0..k {
            for edge in 0..half {
                for port in 0..half {
                    hosts.push(Host {
                        id: hosts.len(),
                        pod,
                        edge,
                        port,
                    });
                }
            }
        }

        let mut links = Vec::with_capacity(3 * per_tier);
        for h in &hosts {
            links.push((
                [Device::Host(h.id), Device::Edge(h.pod * half + h.edge)],
                Tier::HostEdge,
            ));
        }
        for pod in 0..k {
            for edge in 0..half {
                for agg in 0..half {
                    links.push((
                        [
                            Device::Edge(pod * half + edge),
                            Device::Agg(pod * half + agg),
                        ],
                        Tier::EdgeAgg,
                    ));
                }
            }
        }
        for pod in 0..k {
            for agg in 0..half {
                for port in 0..half {
                    links.push((
                        [
                            Device::Agg(pod * half + agg),
                            Device::Core(agg * half + port),
                        ],
                        Tier::AggCore,
                    ));
                }
            }
        }
        let links = links
            .into_iter()
            .zip(capacities)
            .enumerate()
            .map(|(id, ((endpoints, tier), capacity))| LinkRecord {
                id,
                endpoints,
                tier,
                capacity,
            })
            .collect();
        Ok(FatTreeNetwork { k, hosts, links })
    }

    /// Same capacity on every link.
    pub fn uniform(k: usize, capacity: f64) -> Result<Self> {
        check_arity(k)?;
        FatTreeNetwork::with_capacities(k, vec![capacity; 3 * k * k * k / 4])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn half(&self) -> usize {
        self.k / 2
    }

    pub fn hosts(&self) -> &[Host] {
        &self.hosts
    }

    pub fn host_count(&self) -> usize {
        self.hosts.len()
    }

    pub fn edge_switch_count(&self) -> usize {
        self.k * self.half()
    }

    pub fn agg_switch_count(&self) -> usize {
        self.k * self.half()
    }

    pub fn core_switch_count(&self) -> usize {
        self.half() * self.half()
    }

    pub fn links(&self) -> &[LinkRecord] {
        &self.links
    }

    pub fn link(&self, id: usize) -> &LinkRecord {
        &self.links[id]
    }

    pub fn capacity(&self, link: usize) -> f64 {
        self.links[link].capacity
    }

    pub fn set_capacity(&mut self, link: usize, capacity: f64) -> Result<()> {
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(Error::param(format!(
                "link capacity must be positive, got {capacity}"
            )));
        }
        let l = self
            .links
            .get_mut(link)
            .ok_or_else(|| Error::param(format!("no link {link}")))?;
        l.capacity = capacity;
        Ok(())
    }

    pub fn is_host(&self, id: NodeId) -> bool {
        id < self.hosts.len()
    }

    pub fn host_edge_link(&self, host: NodeId) -> usize {
        host
    }

    pub fn edge_agg_link(&self, pod: usize, edge: usize, agg: usize) -> usize {
        let half = self.half();
        self.hosts.len() + (pod * half + edge) * half + agg
    }

    pub fn agg_core_link(&self, pod: usize, agg: usize, port: usize) -> usize {
        let half = self.half();
        2 * self.hosts.len() + (pod * half + agg) * half + port
    }

    /// Up-down path from `src` to `dst`.
    ///
    /// When several aggregation switches (and, above them, core ports) are
    /// equally short, index `(src + dst) mod K/2` is used for both choices,
    /// which makes the link set symmetric in the two endpoints.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Result<Path> {
        if !self.is_host(src) || !self.is_host(dst) {
            return Err(Error::param(format!(
                "route endpoints {src} -> {dst} must be hosts"
            )));
        }
        if src == dst {
            return Err(Error::param(format!("cannot route host {src} to itself")));
        }
        let (s, t) = (self.hosts[src], self.hosts[dst]);
        let pick = (src + dst) % self.half();
        let links = if s.pod == t.pod && s.edge == t.edge {
            vec![self.host_edge_link(src), self.host_edge_link(dst)]
        } else if s.pod == t.pod {
            vec![
                self.host_edge_link(src),
                self.edge_agg_link(s.pod, s.edge, pick),
                self.edge_agg_link(t.pod, t.edge, pick),
                self.host_edge_link(dst),
            ]
        } else {
            vec![
                self.host_edge_link(src),
                self.edge_agg_link(s.pod, s.edge, pick),
                self.agg_core_link(s.pod, pick, pick),
                self.agg_core_link(t.pod, pick, pick),
                self.edge_agg_link(t.pod, t.edge, pick),
                self.host_edge_link(dst),
            ]
        };
        Ok(Path {
            provider: src,
            newcomer: dst,
            links,
        })
    }
}

/// Draws each link's capacity from its tier's distribution, in link-id order.
pub fn build_fattree(k: usize, tiers: &TierDistributions, seed: u64) -> Result<FatTreeNetwork> {
    check_arity(k)?;
    let mut rng = seed::rng(seed, Stream::Topology);
    let per_tier = k * k * k / 4;
    let capacities = [Tier::HostEdge, Tier::EdgeAgg, Tier::AggCore]
        .iter()
        .flat_map(|t| std::iter::repeat_n(*t, per_tier))
        .map(|t| tiers.for_tier(t).sample(&mut rng))
        .collect();
    FatTreeNetwork::with_capacities(k, capacities)
}

/// Physical links from a provider host up to the nearest common ancestor and
/// down to the newcomer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    pub provider: NodeId,
    pub newcomer: NodeId,
    pub links: Vec<usize>,
}

/// Role partition of fat-tree hosts for one repair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FatTreeRoles {
    pub failed: NodeId,
    pub providers: Vec<NodeId>,
    pub newcomers: Vec<NodeId>,
}

impl FatTreeRoles {
    /// Checks the partition covers the hosts of `net` exactly once and that
    /// a repair with `code` is possible.
    pub fn validate(&self, net: &FatTreeNetwork, code: &CodeParams) -> Result<()> {
        let mut seen = vec![false; net.host_count()];
        for &id in std::iter::once(&self.failed)
            .chain(&self.providers)
            .chain(&self.newcomers)
        {
            if !net.is_host(id) {
                return Err(Error::param(format!("role member {id} is not a host")));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::param(format!("host {id} has more than one role")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::param("roles do not cover every host"));
        }
        if self.providers.len() < code.d() {
            return Err(Error::param(format!(
                "{} provider candidates cannot supply d = {}",
                self.providers.len(),
                code.d()
            )));
        }
        if self.newcomers.is_empty() {
            return Err(Error::param("no newcomer candidates"));
        }
        Ok(())
    }
}

/// Places the `n` coded-block holders on uniformly random distinct hosts.
/// The first one drawn fails; the others become provider candidates and all
/// remaining hosts are newcomer candidates. Both lists are in id order.
pub fn fattree_roles(net: &FatTreeNetwork, code: &CodeParams, seed: u64) -> Result<FatTreeRoles> {
    let hosts = net.host_count();
    if code.n() > hosts {
        return Err(Error::param(format!(
            "n = {} exceeds the {hosts} hosts",
            code.n()
        )));
    }
    if code.n() == hosts {
        return Err(Error::param(
            "n equals the host count, leaving no newcomer candidates",
        ));
    }
    let mut rng = seed::rng(seed, Stream::Placement);
    let mut ids: Vec<NodeId> = (0..hosts).collect();
    let (chosen, _) = ids.partial_shuffle(&mut rng, code.n());
    let failed = chosen[0];
    let mut providers = chosen[1..].to_vec();
    providers.sort_unstable();
    let mut holder = vec![false; hosts];
    holder[failed] = true;
    for &p in &providers {
        holder[p] = true;
    }
    let newcomers = (0..hosts).filter(|&h| !holder[h]).collect();
    Ok(FatTreeRoles {
        failed,
        providers,
        newcomers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code(n_total: usize, n: usize, k: usize, d: usize) -> CodeParams {
        CodeParams::new(n_total, n, k, d, 100.0).unwrap()
    }

    #[test]
    fn code_params_bounds() {
        assert!(CodeParams::new(20, 6, 2, 3, 100.0).is_ok());
        assert!(CodeParams::new(20, 6, 4, 3, 100.0).is_err());
        assert!(CodeParams::new(20, 6, 2, 6, 100.0).is_err());
        assert!(CodeParams::new(6, 6, 2, 3, 100.0).is_err());
        assert!(CodeParams::new(20, 6, 0, 3, 100.0).is_err());
        assert!(CodeParams::new(20, 6, 2, 3, 0.0).is_err());
        let c = CodeParams::new(20, 6, 2, 3, 480.0).unwrap();
        assert_eq!(c.alpha(), 240.0);
        assert_eq!(c.slack(), 2);
    }

    #[test]
    fn code_params_json_rejects_invalid() {
        let bad = r#"{"n_total":20,"n":6,"k":4,"d":3,"file_size_mb":100.0}"#;
        assert!(serde_json::from_str::<CodeParams>(bad).is_err());
        let wrong_alpha =
            r#"{"n_total":20,"n":6,"k":2,"d":3,"file_size_mb":100.0,"alpha_mb":10.0}"#;
        assert!(serde_json::from_str::<CodeParams>(wrong_alpha).is_err());
    }

    #[test]
    fn reference_overlay_dimensions() {
        let c = CodeParams::new(1000, 14, 8, 10, 100.0).unwrap();
        let dist = BandwidthDistribution::new(10.0, 120.0).unwrap();
        let net = gen_overlay(&c, &dist, 3);
        assert_eq!(net.provider_candidates().len(), 13);
        assert_eq!(net.newcomer_candidates().len(), 986);
        assert_eq!(net.failed_node(), 0);
        net.check_code(&c).unwrap();
    }

    #[test]
    fn degenerate_interval_is_constant() {
        let dist = BandwidthDistribution::new(50.0, 50.0).unwrap();
        let net = gen_overlay(&code(20, 6, 2, 3), &dist, 11);
        assert!(net.rows().flatten().all(|&b| b == 50.0));
    }

    #[test]
    fn overlay_is_deterministic_per_seed() {
        let dist = BandwidthDistribution::new(10.0, 120.0).unwrap();
        let c = code(30, 8, 3, 5);
        assert_eq!(gen_overlay(&c, &dist, 42), gen_overlay(&c, &dist, 42));
        assert_ne!(gen_overlay(&c, &dist, 42), gen_overlay(&c, &dist, 43));
    }

    #[test]
    fn overlay_rejects_bad_input() {
        assert!(OverlayNetwork::new(0, vec![1], vec![2], vec![vec![0.0]]).is_err());
        assert!(OverlayNetwork::new(0, vec![1], vec![2], vec![vec![f64::INFINITY]]).is_err());
        assert!(OverlayNetwork::new(0, vec![1], vec![1], vec![vec![1.0]]).is_err());
        assert!(OverlayNetwork::new(0, vec![0], vec![1], vec![vec![1.0]]).is_err());
        assert!(OverlayNetwork::new(0, vec![1, 2], vec![3], vec![vec![1.0]]).is_err());
        assert!(OverlayNetwork::new(0, vec![1], vec![], vec![vec![]]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(BandwidthDistribution::new(0.0, 1.0).is_err());
        assert!(BandwidthDistribution::new(2.0, 1.0).is_err());
        assert!(BandwidthDistribution::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn fattree_k4_counts() {
        let net = build_fattree(4, &TierDistributions::default(), 1).unwrap();
        assert_eq!(net.host_count(), 16);
        assert_eq!(net.edge_switch_count(), 8);
        assert_eq!(net.agg_switch_count(), 8);
        assert_eq!(net.core_switch_count(), 4);
        for tier in [Tier::HostEdge, Tier::EdgeAgg, Tier::AggCore] {
            assert_eq!(net.links().iter().filter(|l| l.tier == tier).count(), 16);
        }
    }

    #[test]
    fn fattree_k8_hosts() {
        assert_eq!(FatTreeNetwork::uniform(8, 1.0).unwrap().host_count(), 128);
    }

    #[test]
    fn fattree_rejects_bad_arity() {
        for k in [0, 2, 3, 5, 7] {
            assert!(
                build_fattree(k, &TierDistributions::default(), 1).is_err(),
                "k = {k}"
            );
        }
    }

    #[test]
    fn fattree_degree_structure() {
        for k in [4usize, 6, 8, 10, 12, 14] {
            let net = FatTreeNetwork::uniform(k, 1.0).unwrap();
            let half = k / 2;
            assert_eq!(net.host_count(), k * k * k / 4);
            assert_eq!(net.edge_switch_count(), k * k / 2);
            assert_eq!(net.core_switch_count(), k * k / 4);
            let mut degree = std::collections::BTreeMap::<Device, (usize, usize)>::new();
            for l in net.links() {
                let [a, b] = l.endpoints;
                degree.entry(a).or_default().1 += 1;
                degree.entry(b).or_default().0 += 1;
            }
            for (dev, (down, up)) in degree {
                match dev {
                    Device::Host(_) => assert_eq!((down, up), (0, 1)),
                    Device::Edge(_) => assert_eq!((down, up), (half, half)),
                    Device::Agg(_) => assert_eq!((down, up), (half, half)),
                    Device::Core(_) => assert_eq!((down, up), (k, 0)),
                }
            }
        }
    }

    #[test]
    fn tier_capacities_within_intervals() {
        let tiers = TierDistributions::default();
        let net = build_fattree(6, &tiers, 9).unwrap();
        for l in net.links() {
            let d = tiers.for_tier(l.tier);
            assert!(l.capacity >= d.low() && l.capacity <= d.high());
        }
        assert_eq!(net, build_fattree(6, &tiers, 9).unwrap());
    }

    #[test]
    fn route_lengths() {
        let net = FatTreeNetwork::uniform(4, 1.0).unwrap();
        // hosts 0,1 share edge 0 of pod 0; host 2 is on edge 1; host 4 is pod 1
        assert_eq!(net.route(0, 1).unwrap().links, vec![0, 1]);
        assert_eq!(net.route(0, 2).unwrap().links.len(), 4);
        let cross = net.route(0, 4).unwrap();
        assert_eq!(cross.links.len(), 6);
        let cores: Vec<_> = cross.links[2..4]
            .iter()
            .map(|&l| net.link(l).endpoints[1])
            .collect();
        assert_eq!(cores[0], cores[1]);
        assert!(matches!(cores[0], Device::Core(_)));
        assert!(net.route(3, 3).is_err());
        assert!(net.route(0, 16).is_err());
    }

    #[test]
    fn fattree_json_roundtrip_and_tamper() {
        let net = build_fattree(4, &TierDistributions::default(), 5).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        let back: FatTreeNetwork = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        let tampered = json.replacen("\"core\":0", "\"core\":1", 1);
        assert!(serde_json::from_str::<FatTreeNetwork>(&tampered).is_err());
    }

    #[test]
    fn roles_k8() {
        let net = FatTreeNetwork::uniform(8, 1.0).unwrap();
        let c = CodeParams::new(128, 14, 8, 10, 100.0).unwrap();
        let roles = fattree_roles(&net, &c, 17).unwrap();
        assert_eq!(roles.providers.len(), 13);
        assert_eq!(roles.newcomers.len(), 114);
        roles.validate(&net, &c).unwrap();
        assert_eq!(roles, fattree_roles(&net, &c, 17).unwrap());
    }

    #[test]
    fn roles_reject_full_placement() {
        let net = FatTreeNetwork::uniform(4, 1.0).unwrap();
        let c = CodeParams::new(17, 16, 2, 3, 100.0).unwrap();
        assert!(fattree_roles(&net, &c, 1).is_err());
        let c = CodeParams::new(40, 20, 2, 3, 100.0).unwrap();
        assert!(fattree_roles(&net, &c, 1).is_err());
    }

    fn device_of(net: &FatTreeNetwork, link: usize) -> [Device; 2] {
        net.link(link).endpoints
    }

    proptest! {
        #[test]
        fn route_is_symmetric_and_connected(k in prop::sample::select(vec![4usize, 6, 8]), a in 0usize..512, b in 0usize..512) {
            let net = FatTreeNetwork::uniform(k, 1.0).unwrap();
            let (a, b) = (a % net.host_count(), b % net.host_count());
            prop_assume!(a != b);
            let ab = net.route(a, b).unwrap();
            let ba = net.route(b, a).unwrap();
            let mut x = ab.links.clone();
            let mut y = ba.links.clone();
            x.sort_unstable();
            y.sort_unstable();
            prop_assert_eq!(x, y);
            prop_assert!([2, 4, 6].contains(&ab.links.len()));
            prop_assert!(device_of(&net, ab.links[0]).contains(&Device::Host(a)));
            prop_assert!(device_of(&net, *ab.links.last().unwrap()).contains(&Device::Host(b)));
            for w in ab.links.windows(2) {
                let (p, q) = (device_of(&net, w[0]), device_of(&net, w[1]));
                prop_assert!(p.iter().any(|d| q.contains(d)));
            }
        }

        #[test]
        fn overlay_samples_stay_in_interval(low in 0.1f64..100.0, width in 0.0f64..100.0, seed in any::<u64>()) {
            let dist = BandwidthDistribution::new(low, low + width).unwrap();
            let net = gen_overlay(&code(12, 5, 2, 3), &dist, seed);
            prop_assert!(net.rows().flatten().all(|&b| b >= low && b <= low + width));
        }

        #[test]
        fn role_partition_is_exact(seed in any::<u64>(), n in 4usize..30) {
            let net = FatTreeNetwork::uniform(6, 1.0).unwrap();
            let c = CodeParams::new(54, n, 2, 3, 1.0).unwrap();
            let roles = fattree_roles(&net, &c, seed).unwrap();
            prop_assert_eq!(roles.providers.len() + roles.newcomers.len() + 1, 54);
            prop_assert!(roles.validate(&net, &c).is_ok());
        }
    }
}
