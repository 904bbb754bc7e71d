//! Statistical trends of the overlay schemes on fixed seed ladders.
//!
//! Every point is run as its own sweep with the same base seed so all
//! points share trial seeds.

use regensel::experiment::{self, SweepSpec, TopologyKind};
use regensel::{BandwidthDistribution, BetaMode, Scheme};

const LADDER: u64 = 4242;

fn overlay_spec(n_total: usize, n: usize, d: usize, schemes: Vec<Scheme>) -> SweepSpec {
    SweepSpec {
        topology: TopologyKind::Overlay,
        n_total: vec![n_total],
        fattree_k: vec![],
        n: vec![n],
        k: vec![8],
        d: vec![d],
        distributions: vec![BandwidthDistribution::new(10.0, 120.0).unwrap()],
        tier_scale: [5.0, 10.0],
        schemes,
        trials: 100,
        base_seed: LADDER,
        beta_mode: BetaMode::Msr,
        file_size_mb: 100.0,
    }
}

fn means(specs: impl IntoIterator<Item = SweepSpec>, scheme_count: usize) -> Vec<Vec<f64>> {
    let results: Vec<_> = specs
        .into_iter()
        .map(|s| experiment::run_sweep(&s).unwrap())
        .collect();
    (0..scheme_count)
        .map(|si| results.iter().map(|r| r.records[si].mean_time_s).collect())
        .collect()
}

#[test]
fn spsn_mean_falls_as_newcomer_pool_grows() {
    // the gain per extra newcomer is small, so this needs a long ladder
    let sizes = [200, 400, 600, 800, 1000];
    let m = means(
        sizes.map(|n_total| SweepSpec {
            trials: 1000,
            ..overlay_spec(n_total, 14, 10, vec![Scheme::Spsn])
        }),
        1,
    );
    assert!(m[0].windows(2).all(|w| w[1] <= w[0]), "{:?}", m[0]);
}

#[test]
fn every_scheme_mean_falls_as_d_grows() {
    let schemes = vec![Scheme::Rs, Scheme::Spsn, Scheme::Frs, Scheme::Flex];
    let ds = [8, 10, 12, 14, 16];
    let m = means(
        ds.map(|d| overlay_spec(1000, 20, d, schemes.clone())),
        schemes.len(),
    );
    for (scheme, series) in schemes.iter().zip(&m) {
        assert!(
            series.windows(2).all(|w| w[1] < w[0]),
            "{scheme}: {series:?}"
        );
    }
}

#[test]
fn spsn_mean_rises_when_d_nears_provider_pool() {
    // with n = 20 only 19 providers exist; at d = 18 the star must take
    // almost every provider link and the weaker bottleneck outweighs the
    // smaller per-provider volume
    let m = means(
        [16, 18].map(|d| overlay_spec(1000, 20, d, vec![Scheme::Rs, Scheme::Spsn])),
        2,
    );
    assert!(m[0][1] < m[0][0], "RS: {:?}", m[0]);
    assert!(m[1][1] > m[1][0], "SPSN: {:?}", m[1]);
}

#[test]
fn scheme_means_are_ordered() {
    let spec = overlay_spec(
        1000,
        14,
        10,
        vec![Scheme::Rs, Scheme::Frs, Scheme::Spsn, Scheme::Flex],
    );
    let r = experiment::run_sweep(&spec).unwrap();
    let m: Vec<f64> = r.records.iter().map(|p| p.mean_time_s).collect();
    assert!(m[1] <= m[0] && m[2] < m[1] && m[3] <= m[2], "{m:?}");
}

#[test]
fn random_mean_bottleneck_tracks_order_statistics_per_d() {
    for d in [8, 10, 14] {
        let mut spec = overlay_spec(200, 20, d, vec![Scheme::Rs]);
        spec.trials = 10_000;
        let r = experiment::run_sweep(&spec).unwrap();
        let trials = &r.records[0].trials;
        let mean = trials
            .iter()
            .map(|t| t.bottleneck_mbps.unwrap())
            .sum::<f64>()
            / trials.len() as f64;
        let expected = experiment::analytic_rs_bottleneck(&spec.distributions[0], d);
        assert!(
            (mean - expected).abs() / expected < 0.02,
            "d={d}: {mean} vs {expected}"
        );
    }
}
