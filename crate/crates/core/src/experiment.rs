//! Seeded trials and parameter sweeps.
//!
//! A trial draws a topology from its seed, runs one selection scheme and
//! evaluates the plan: the star formula on overlays, the epoch model on
//! fat-trees. Times come from a fluid flow model; CSV output carries a
//! `model=fluid` column to say so.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fattree;
use crate::model::{self, BandwidthDistribution, CodeParams, TierDistributions};
use crate::overlay_select::{self, Scheme};
use crate::seed::{self, Stream, RNG_ALGORITHM};
use crate::traffic::BetaMode;

pub const MODEL_TAG: &str = "fluid";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Overlay,
    Fattree,
}

impl TopologyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Overlay => "overlay",
            TopologyKind::Fattree => "fattree",
        }
    }

    fn supports(&self, scheme: Scheme) -> bool {
        match self {
            TopologyKind::Overlay => matches!(
                scheme,
                Scheme::Rs | Scheme::Spsn | Scheme::Frs | Scheme::Flex
            ),
            TopologyKind::Fattree => scheme.is_fattree(),
        }
    }
}

fn default_trials() -> usize {
    100
}

fn default_file_size() -> f64 {
    100.0
}

fn default_tier_scale() -> [f64; 2] {
    [5.0, 10.0]
}

/// Sweep description. Points are the Cartesian product of the axes, ordered
/// with the first-listed axis outermost: `n_total` (or `fattree_k`), `n`,
/// `k`, `d`, `distributions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub topology: TopologyKind,
    /// System sizes; overlay only.
    #[serde(default)]
    pub n_total: Vec<usize>,
    /// Fat-tree arities; fat-tree only. `N` is `K^3 / 4`.
    #[serde(default)]
    pub fattree_k: Vec<usize>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub d: Vec<usize>,
    /// Link distributions; for fat-trees, the bottom tier.
    pub distributions: Vec<BandwidthDistribution>,
    /// Middle and top tier multipliers of the bottom-tier interval.
    #[serde(default = "default_tier_scale")]
    pub tier_scale: [f64; 2],
    pub schemes: Vec<Scheme>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub beta_mode: BetaMode,
    #[serde(default = "default_file_size")]
    pub file_size_mb: f64,
}

/// One parameter combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub topology: TopologyKind,
    pub n_total: usize,
    pub fattree_k: Option<usize>,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub distribution: BandwidthDistribution,
    pub tier_scale: [f64; 2],
    pub file_size_mb: f64,
}

impl SweepPoint {
    pub fn overlay(code: &CodeParams, distribution: BandwidthDistribution) -> Self {
        SweepPoint {
            topology: TopologyKind::Overlay,
            n_total: code.n_total(),
            fattree_k: None,
            n: code.n(),
            k: code.k(),
            d: code.d(),
            distribution,
            tier_scale: default_tier_scale(),
            file_size_mb: code.file_size(),
        }
    }

    pub fn fattree(
        arity: usize,
        n: usize,
        k: usize,
        d: usize,
        bottom: BandwidthDistribution,
    ) -> Self {
        SweepPoint {
            topology: TopologyKind::Fattree,
            n_total: arity * arity * arity / 4,
            fattree_k: Some(arity),
            n,
            k,
            d,
            distribution: bottom,
            tier_scale: default_tier_scale(),
            file_size_mb: default_file_size(),
        }
    }

    pub fn code(&self) -> Result<CodeParams> {
        CodeParams::new(self.n_total, self.n, self.k, self.d, self.file_size_mb)
    }

    fn tiers(&self) -> Result<TierDistributions> {
        TierDistributions::scaled(self.distribution, self.tier_scale[0], self.tier_scale[1])
    }

    fn check(&self) -> Result<()> {
        self.code()?;
        if let Some(k) = self.fattree_k {
            if k < 4 || k % 2 != 0 {
                return Err(Error::param(format!(
                    "fat-tree arity must be even and at least 4, got {k}"
                )));
            }
            self.tiers()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub time_s: f64,
    /// Smallest link bandwidth of the chosen star; overlay only.
    pub bottleneck_mbps: Option<f64>,
}

/// Runs every scheme on the topology drawn from `seed`.
fn run_schemes(
    point: &SweepPoint,
    schemes: &[Scheme],
    seed: u64,
    mode: BetaMode,
) -> Result<Vec<TrialOutcome>> {
    let code = point.code()?;
    match point.topology {
        TopologyKind::Overlay => {
            let net = model::gen_overlay(&code, &point.distribution, seed);
            schemes
                .iter()
                .map(|&scheme| {
                    let mut rng = seed::rng(seed, Stream::Selection);
                    let (plan, time) = match scheme {
                        Scheme::Rs => {
                            let p = overlay_select::select_rs(&net, &code, mode, &mut rng)?;
                            let t = overlay_select::evaluate(&net, &p)?.time_s;
                            (p, t)
                        }
                        Scheme::Spsn => {
                            let p = overlay_select::select_spsn(&net, &code, mode)?;
                            let t = overlay_select::evaluate(&net, &p)?.time_s;
                            (p, t)
                        }
                        Scheme::Frs => overlay_select::select_frs(&net, &code, &mut rng)?,
                        Scheme::Flex => overlay_select::select_flex(&net, &code)?,
                        other => {
                            return Err(Error::param(format!("{other} does not run on an overlay")))
                        }
                    };
                    Ok(TrialOutcome {
                        time_s: time,
                        bottleneck_mbps: Some(overlay_select::bottleneck(&net, &plan)?),
                    })
                })
                .collect()
        }
        TopologyKind::Fattree => {
            let arity = point
                .fattree_k
                .ok_or_else(|| Error::param("fat-tree point without arity"))?;
            let net = model::build_fattree(arity, &point.tiers()?, seed)?;
            let roles = model::fattree_roles(&net, &code, seed)?;
            schemes
                .iter()
                .map(|&scheme| {
                    let plan = match scheme {
                        Scheme::RsF => {
                            let mut rng = seed::rng(seed, Stream::Selection);
                            fattree::select_rs_f(&net, &code, &roles, mode, &mut rng)?
                        }
                        Scheme::SpsnF => fattree::select_spsn_f(&net, &code, &roles, mode)?,
                        other => {
                            return Err(Error::param(format!("{other} does not run on a fat-tree")))
                        }
                    };
                    let report = fattree::regen_time_fattree(&net, &plan, mode)?;
                    Ok(TrialOutcome {
                        time_s: report.total_time_s,
                        bottleneck_mbps: None,
                    })
                })
                .collect()
        }
    }
}

/// One scheme on the topology drawn from `seed`. Deterministic per
/// `(point, scheme, seed, mode)`.
pub fn run_trial(
    point: &SweepPoint,
    scheme: Scheme,
    seed: u64,
    mode: BetaMode,
) -> Result<TrialOutcome> {
    point.check()?;
    if !point.topology.supports(scheme) {
        return Err(Error::param(format!(
            "{scheme} does not run on a {} topology",
            point.topology.as_str()
        )));
    }
    Ok(run_schemes(point, &[scheme], seed, mode)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub time_s: f64,
    pub bottleneck_mbps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point_index: usize,
    pub point: SweepPoint,
    pub scheme: Scheme,
    pub mean_time_s: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std_time_s: f64,
    pub min_time_s: f64,
    pub max_time_s: f64,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub records: Vec<PointRecord>,
}

impl SweepSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(s)?;
        spec.points()?;
        Ok(spec)
    }

    /// Expands and validates the sweep's points.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::param("no schemes"));
        }
        if let Some(s) = self.schemes.iter().find(|s| !self.topology.supports(**s)) {
            return Err(Error::param(format!(
                "{s} does not run on a {} topology",
                self.topology.as_str()
            )));
        }
        let outer: Vec<(usize, Option<usize>)> = match self.topology {
            TopologyKind::Overlay => {
                if !self.fattree_k.is_empty() {
                    return Err(Error::param("fattree_k given for an overlay sweep"));
                }
                self.n_total.iter().map(|&n| (n, None)).collect()
            }
            TopologyKind::Fattree => {
                if !self.n_total.is_empty() {
                    return Err(Error::param(
                        "n_total is derived from fattree_k for fat-tree sweeps",
                    ));
                }
                self.fattree_k
                    .iter()
                    .map(|&k| (k * k * k / 4, Some(k)))
                    .collect()
            }
        };
        let mut points = Vec::new();
        for &(n_total, fattree_k) in &outer {
            for &n in &self.n {
                for &k in &self.k {
                    for &d in &self.d {
                        for &distribution in &self.distributions {
                            let p = SweepPoint {
                                topology: self.topology,
                                n_total,
                                fattree_k,
                                n,
                                k,
                                d,
                                distribution,
                                tier_scale: self.tier_scale,
                                file_size_mb: self.file_size_mb,
                            };
                            p.check()?;
                            points.push(p);
                        }
                    }
                }
            }
        }
        if points.is_empty() {
            return Err(Error::param("sweep has no points"));
        }
        Ok(points)
    }
}

fn stats(times: &[f64]) -> (f64, f64, f64, f64) {
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = if times.len() > 1 {
        times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // keep mean inside [min, max] despite rounding
    (mean.clamp(min, max), var.sqrt(), min, max)
}

/// Runs every point of the sweep. Trial `t` of point `p` uses
/// [`seed::trial_seed`]`(base_seed, p, t)` for every scheme, so schemes are
/// compared on identical topologies. Trials run in parallel; results are
/// keyed by index, not completion order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let points = spec.points()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    let outcomes: Vec<Vec<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(p, t)| {
            let s = seed::trial_seed(spec.base_seed, p as u64, t as u64);
            run_schemes(&points[p], &spec.schemes, s, spec.beta_mode)
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(points.len() * spec.schemes.len());
    for (p, point) in points.iter().enumerate() {
        for (si, &scheme) in spec.schemes.iter().enumerate() {
            let trials: Vec<TrialRecord> = (0..spec.trials)
                .map(|t| {
                    let o = outcomes[p * spec.trials + t][si];
                    TrialRecord {
                        trial: t,
                        seed: seed::trial_seed(spec.base_seed, p as u64, t as u64),
                        time_s: o.time_s,
                        bottleneck_mbps: o.bottleneck_mbps,
                    }
                })
                .collect();
            let times: Vec<f64> = trials.iter().map(|t| t.time_s).collect();
            let (mean, std, min, max) = stats(&times);
            records.push(PointRecord {
                point_index: p,
                point: *point,
                scheme,
                mean_time_s: mean,
                std_time_s: std,
                min_time_s: min,
                max_time_s: max,
                trials,
            });
        }
    }
    Ok(SweepResult {
        spec: spec.clone(),
        records,
    })
}

/// Expected minimum of `d` i.i.d. uniform draws on `[low, high]`.
pub fn analytic_rs_bottleneck(dist: &BandwidthDistribution, d: usize) -> f64 {
    dist.low() + (dist.high() - dist.low()) / (d as f64 + 1.0)
}

fn header_line(spec: &SweepSpec) -> String {
    format!(
        "# rng={RNG_ALGORITHM} base_seed={} seed_derivation=splitmix64(splitmix64(splitmix64(base_seed)^point)^trial) model={MODEL_TAG} beta_mode={}\n",
        spec.base_seed,
        spec.beta_mode.as_str()
    )
}

fn point_fields(p: &SweepPoint) -> Vec<String> {
    vec![
        p.topology.as_str().to_string(),
        p.n_total.to_string(),
        p.fattree_k.map(|k| k.to_string()).unwrap_or_default(),
        p.n.to_string(),
        p.k.to_string(),
        p.d.to_string(),
        p.distribution.low().to_string(),
        p.distribution.high().to_string(),
    ]
}

const POINT_COLUMNS: [&str; 8] = [
    "topology",
    "n_total",
    "fattree_k",
    "n",
    "k",
    "d",
    "dist_low",
    "dist_high",
];

/// One row per trial and scheme, preceded by a `#` header naming the RNG.
pub fn write_trials_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    out.write_all(header_line(&result.spec).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = POINT_COLUMNS.to_vec();
    header.extend([
        "scheme",
        "trial",
        "seed",
        "time_s",
        "bottleneck_mbps",
        "model",
        "beta_mode",
    ]);
    w.write_record(&header)?;
    for r in &result.records {
        for t in &r.trials {
            let mut row = point_fields(&r.point);
            row.extend([
                r.scheme.to_string(),
                t.trial.to_string(),
                t.seed.to_string(),
                t.time_s.to_string(),
                t.bottleneck_mbps.map(|b| b.to_string()).unwrap_or_default(),
                MODEL_TAG.to_string(),
                result.spec.beta_mode.as_str().to_string(),
            ]);
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per (point, scheme) with aggregate statistics.
pub fn write_summary_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    out.write_all(header_line(&result.spec).as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = POINT_COLUMNS.to_vec();
    header.extend([
        "scheme",
        "trials",
        "mean_time_s",
        "std_time_s",
        "min_time_s",
        "max_time_s",
        "model",
        "beta_mode",
    ]);
    w.write_record(&header)?;
    for r in &result.records {
        let mut row = point_fields(&r.point);
        row.extend([
            r.scheme.to_string(),
            r.trials.len().to_string(),
            r.mean_time_s.to_string(),
            r.std_time_s.to_string(),
            r.min_time_s.to_string(),
            r.max_time_s.to_string(),
            MODEL_TAG.to_string(),
            result.spec.beta_mode.as_str().to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn point_label(p: &SweepPoint) -> String {
    let size = match p.fattree_k {
        Some(k) => format!("K={k}"),
        None => format!("N={}", p.n_total),
    };
    format!(
        "{size} n={} k={} d={} U[{},{}]",
        p.n,
        p.k,
        p.d,
        p.distribution.low(),
        p.distribution.high()
    )
}

/// Plain-text table of the per-point means.
pub fn format_summary(result: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<40} {:<7} {:>12} {:>12}",
        "point", "scheme", "mean_s", "std_s"
    );
    for r in &result.records {
        let _ = writeln!(
            s,
            "{:<40} {:<7} {:>12.6} {:>12.6}",
            point_label(&r.point),
            r.scheme.as_str(),
            r.mean_time_s,
            r.std_time_s
        );
    }
    s
}

/// Minimal SVG line chart: x is the point index, y the mean time, one line
/// per scheme.
pub fn render_svg(result: &SweepResult) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
    ];
    let points = result
        .records
        .iter()
        .map(|r| r.point_index)
        .max()
        .unwrap_or(0)
        + 1;
    let ymax = result
        .records
        .iter()
        .map(|r| r.mean_time_s)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let x = |i: usize| {
        if points == 1 {
            W / 2.0
        } else {
            PAD + (W - 2.0 * PAD) * i as f64 / (points - 1) as f64
        }
    };
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * v / ymax;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="5" y="{}" font-size="12">{ymax:.4} s</text>"#,
        PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12">point</text>"#,
        W / 2.0,
        H - 15.0
    );
    for (si, scheme) in result.spec.schemes.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let coords: Vec<String> = result
            .records
            .iter()
            .filter(|r| r.scheme == *scheme)
            .map(|r| format!("{:.2},{:.2}", x(r.point_index), y(r.mean_time_s)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
            W - PAD - 60.0,
            PAD + 15.0 * si as f64,
            scheme.as_str()
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(low: f64, high: f64) -> BandwidthDistribution {
        BandwidthDistribution::new(low, high).unwrap()
    }

    fn overlay_spec() -> SweepSpec {
        SweepSpec {
            topology: TopologyKind::Overlay,
            n_total: vec![60],
            fattree_k: vec![],
            n: vec![10],
            k: vec![3],
            d: vec![5],
            distributions: vec![dist(10.0, 120.0), dist(50.0, 120.0)],
            tier_scale: [5.0, 10.0],
            schemes: vec![Scheme::Rs, Scheme::Spsn, Scheme::Frs, Scheme::Flex],
            trials: 8,
            base_seed: 3,
            beta_mode: BetaMode::Msr,
            file_size_mb: 100.0,
        }
    }

    #[test]
    fn homogeneous_overlay_time() {
        let code = CodeParams::new(40, 10, 3, 5, 100.0).unwrap();
        let point = SweepPoint::overlay(&code, dist(50.0, 50.0));
        let beta = 100.0 / (3.0 * 3.0);
        for scheme in [Scheme::Rs, Scheme::Spsn, Scheme::Frs, Scheme::Flex] {
            let t = run_trial(&point, scheme, 1, BetaMode::Msr).unwrap().time_s;
            assert!((t - beta / 50.0).abs() < 1e-15, "{scheme}: {t}");
        }
    }

    #[test]
    fn rs_frs_same_seed() {
        let code = CodeParams::new(40, 10, 3, 5, 100.0).unwrap();
        let point = SweepPoint::overlay(&code, dist(10.0, 120.0));
        for s in 0..20 {
            let rs = run_trial(&point, Scheme::Rs, s, BetaMode::Msr).unwrap();
            let frs = run_trial(&point, Scheme::Frs, s, BetaMode::Msr).unwrap();
            assert_eq!(rs.bottleneck_mbps, frs.bottleneck_mbps);
            assert!(frs.time_s <= rs.time_s);
        }
    }

    #[test]
    fn scheme_topology_mismatch() {
        let code = CodeParams::new(40, 10, 3, 5, 100.0).unwrap();
        let point = SweepPoint::overlay(&code, dist(10.0, 120.0));
        assert!(run_trial(&point, Scheme::SpsnF, 1, BetaMode::Msr).is_err());
        let ft = SweepPoint::fattree(4, 6, 2, 3, dist(1.0, 120.0));
        assert!(run_trial(&ft, Scheme::Spsn, 1, BetaMode::Msr).is_err());
        assert!(run_trial(&ft, Scheme::SpsnF, 1, BetaMode::Msr).is_ok());
    }

    #[test]
    fn single_point_single_trial_matches_run_trial() {
        let mut spec = overlay_spec();
        spec.distributions.truncate(1);
        spec.schemes = vec![Scheme::Spsn];
        spec.trials = 1;
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.records.len(), 1);
        let r = &result.records[0];
        let seed = seed::trial_seed(3, 0, 0);
        let direct = run_trial(&r.point, Scheme::Spsn, seed, BetaMode::Msr).unwrap();
        assert_eq!(r.mean_time_s, direct.time_s);
        assert_eq!(r.std_time_s, 0.0);
        assert_eq!(r.trials[0].seed, seed);
    }

    #[test]
    fn sweep_shape_and_ordering() {
        let result = run_sweep(&overlay_spec()).unwrap();
        assert_eq!(result.records.len(), 2 * 4);
        for r in &result.records {
            assert!(r.min_time_s <= r.mean_time_s && r.mean_time_s <= r.max_time_s);
            assert_eq!(r.trials.len(), 8);
        }
        // per-trial dominance FLEX <= SPSN <= RS on shared topologies
        for p in 0..2 {
            let by = |s: Scheme| {
                result
                    .records
                    .iter()
                    .find(|r| r.point_index == p && r.scheme == s)
                    .unwrap()
            };
            for t in 0..8 {
                let rs = by(Scheme::Rs).trials[t].time_s;
                let spsn = by(Scheme::Spsn).trials[t].time_s;
                let flex = by(Scheme::Flex).trials[t].time_s;
                assert!(flex <= spsn * (1.0 + 1e-12) && spsn <= rs);
            }
        }
    }

    #[test]
    fn csv_is_byte_identical_across_runs() {
        let spec = overlay_spec();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_trials_csv(&run_sweep(&spec).unwrap(), &mut a).unwrap();
        write_trials_csv(&run_sweep(&spec).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# rng=chacha8 base_seed=3"));
        assert_eq!(
            lines.next().unwrap(),
            "topology,n_total,fattree_k,n,k,d,dist_low,dist_high,scheme,trial,seed,time_s,bottleneck_mbps,model,beta_mode"
        );
        assert_eq!(text.lines().count(), 2 + 2 * 4 * 8);
        assert!(text.lines().nth(2).unwrap().contains(",fluid,msr"));
    }

    #[test]
    fn spec_validation() {
        let mut spec = overlay_spec();
        spec.trials = 0;
        assert!(spec.points().is_err());
        let mut spec = overlay_spec();
        spec.schemes.push(Scheme::RsF);
        assert!(spec.points().is_err());
        let mut spec = overlay_spec();
        spec.d = vec![2];
        assert!(spec.points().is_err());
        let mut spec = overlay_spec();
        spec.fattree_k = vec![4];
        assert!(spec.points().is_err());
        assert!(SweepSpec::from_json("{\"topology\":\"overlay\"}").is_err());
    }

    #[test]
    fn spec_json_defaults() {
        let json = r#"{"topology":"fattree","fattree_k":[4,6],"n":[6],"k":[2],"d":[3],
            "distributions":[{"low":1,"high":120}],"schemes":["RS-F","SPSN-F"]}"#;
        let spec = SweepSpec::from_json(json).unwrap();
        assert_eq!(spec.trials, 100);
        assert_eq!(spec.beta_mode, BetaMode::Msr);
        assert_eq!(spec.tier_scale, [5.0, 10.0]);
        let points = spec.points().unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[1].n_total, 54);
    }

    #[test]
    fn analytic_bottleneck_cases() {
        assert!((analytic_rs_bottleneck(&dist(10.0, 120.0), 10) - 20.0).abs() < 1e-12);
        assert_eq!(analytic_rs_bottleneck(&dist(7.0, 7.0), 4), 7.0);
        assert_eq!(analytic_rs_bottleneck(&dist(10.0, 20.0), 1), 15.0);
    }

    #[test]
    fn analytic_bottleneck_monte_carlo() {
        use rand::Rng;
        let d = dist(10.0, 120.0);
        let mut rng = seed::rng(99, Stream::Selection);
        let samples = 1_000_000;
        let mean = (0..samples)
            .map(|_| {
                (0..10)
                    .map(|_| rng.gen_range(10.0..=120.0))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum::<f64>()
            / samples as f64;
        // sd of the minimum is about 9.6, so the standard error is ~0.01
        assert!(
            (mean - analytic_rs_bottleneck(&d, 10)).abs() < 0.05,
            "{mean}"
        );
    }

    #[test]
    fn svg_has_one_line_per_scheme() {
        let svg = render_svg(&run_sweep(&overlay_spec()).unwrap());
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.starts_with("<svg"));
    }
}
