use proptest::prelude::*;

use dcec::analytic::{self, gamma_sum};
use dcec::antenna::AntennaPattern;
use dcec::geometry::{Boundary, Point, Region, SbsIndex};
use dcec::params::SystemParams;
use dcec::popularity::{
    build_placement, dcec_hit_ratios, CacheConfig, ContentCatalog, Policy, RequestCategory, UserRole,
};
use dcec::special::{gamma, ln_gamma};

/// Brute-force sum and the sum of term magnitudes (the cancellation scale).
fn brute_gamma_sum(beta: f64, n: usize) -> (f64, f64) {
    (1..=n)
        .map(|j| {
            let z = j as f64 - beta;
            if z > 0.0 {
                (ln_gamma(z).unwrap() - ln_gamma(j as f64).unwrap()).exp()
            } else {
                gamma(z).unwrap() / gamma(j as f64).unwrap()
            }
        })
        .fold((0.0, 0.0), |(s, m), t| (s + t, m + t.abs()))
}

fn midpoint_average_gain(p: &AntennaPattern, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|i| p.gain(-std::f64::consts::PI + (i as f64 + 0.5) * h)).sum::<f64>() / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn zipf_normalized_and_nonincreasing(n in 1usize..5000, xi in 0.0f64..3.0) {
        let c = ContentCatalog::zipf(n, xi).unwrap();
        let sum: f64 = c.popularity().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(c.popularity().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((c.mass(1, n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_cdf_hits_the_right_bucket(n in 1usize..500, xi in 0.0f64..2.0, u in 0.0f64..1.0) {
        let c = ContentCatalog::zipf(n, xi).unwrap();
        let r = c.rank_for_uniform(u);
        prop_assert!(r >= 1 && r <= n);
        prop_assert!(c.mass(1, r) >= u - 1e-12);
        if r > 1 {
            prop_assert!(c.mass(1, r - 1) <= u + 1e-12);
        }
    }

    #[test]
    fn hit_ratio_ordering(n in 2usize..3000, xi in 0.0f64..2.5, frac in 0.0f64..0.5) {
        let cu = ((n as f64 * frac) as usize).max(1).min(n / 2);
        let c = ContentCatalog::zipf(n, xi).unwrap();
        let h = dcec_hit_ratios(&c, &CacheConfig { user_capacity: cu, sbs_capacity: 0, cluster_size: 1 }).unwrap();
        let eps = 1e-12;
        prop_assert!(h.paired <= h.unpaired + eps);
        prop_assert!(h.unpaired <= 2.0 * h.paired + eps);
    }

    /// The closed-form request split matches counting categories over the catalog.
    #[test]
    fn request_probabilities_match_placement(
        xi in 0.0f64..1.5, cu in 1usize..40, cs in 0usize..40, k in 1usize..6, delta in 0.0f64..=1.0,
    ) {
        let c = ContentCatalog::zipf(500, xi).unwrap();
        let cache = CacheConfig { user_capacity: cu, sbs_capacity: cs, cluster_size: k };
        let p = Policy::Dcec.request_probabilities(&c, &cache, delta).unwrap();
        let pl = build_placement(&c, &cache, Policy::Dcec).unwrap();
        let mut got = [0.0; 4];
        for rank in 1..=500 {
            for (role, w) in [(UserRole::PairA, 0.5 * delta), (UserRole::PairB, 0.5 * delta), (UserRole::Unpaired, 1.0 - delta)] {
                let slot = match pl.categorize(rank, role) {
                    RequestCategory::Local => 0,
                    RequestCategory::D2d => 1,
                    RequestCategory::Cluster => 2,
                    RequestCategory::Miss => 3,
                };
                got[slot] += w * c.q(rank);
            }
        }
        let want = [p.local, p.d2d, p.cluster, p.miss];
        for (g, w) in got.iter().zip(want) {
            prop_assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    /// With most users paired, DCEC offloads at least as much as MPC. At δ = 0
    /// this fails: DCEC leaves ranks Cu+1..2Cu uncached for unpaired users.
    #[test]
    fn dcec_offloads_at_least_mpc(xi in 0.0f64..1.5, k in 1usize..8, full in any::<bool>()) {
        let delta = if full { 1.0 } else { 0.8 };
        let c = ContentCatalog::zipf(2000, xi).unwrap();
        let cache = CacheConfig { cluster_size: k, ..CacheConfig::default() };
        let f_dcec = Policy::Dcec.request_probabilities(&c, &cache, delta).unwrap().offloading_gain();
        let f_mpc = Policy::Mpc.request_probabilities(&c, &cache, delta).unwrap().offloading_gain();
        prop_assert!(f_dcec >= f_mpc - 1e-12, "{f_dcec} < {f_mpc}");
    }

    #[test]
    fn gamma_sum_identity(beta in 0.05f64..3.0, n in 1usize..500) {
        prop_assume!((beta - beta.round()).abs() > 1e-3);
        let (want, scale) = brute_gamma_sum(beta, n);
        let got = gamma_sum(beta, n).unwrap();
        prop_assert!((got - want).abs() < 1e-8 * want.abs() + 1e-14 * scale, "beta={beta} n={n}: {got} vs {want}");
    }

    #[test]
    fn average_gain_matches_quadrature(
        main in 5.0f64..30.0, side in -15.0f64..0.0, hp in 3.0f64..60.0, c in 0.05f64..1.0,
    ) {
        let Ok(p) = AntennaPattern::from_db(main, side, hp, None, c) else { return Ok(()) };
        let q = midpoint_average_gain(&p, 400_000);
        prop_assert!((p.average_gain() / q - 1.0).abs() < 1e-6);
        prop_assert!(p.average_gain() <= p.main_gain && p.average_gain() >= p.side_gain.min(p.main_gain));
    }

    #[test]
    fn knn_matches_brute_force(
        pts in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..120),
        q in (0.0f64..100.0, 0.0f64..100.0),
        k in 1usize..12,
        torus in any::<bool>(),
    ) {
        let region = Region::new(1e4, if torus { Boundary::Torus } else { Boundary::Truncated });
        let points: Vec<Point> = pts.iter().map(|&(x, y)| Point { x, y }).collect();
        let index = SbsIndex::new(&points, region);
        let p = Point { x: q.0, y: q.1 };
        let mut got = Vec::new();
        index.k_nearest_into(p, k, &mut got);
        let mut want: Vec<(usize, f64)> =
            points.iter().enumerate().map(|(i, &s)| (i, region.distance_sq(p, s))).collect();
        want.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        want.truncate(k);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn wrap_stays_inside(x in -1e4f64..1e4, y in -1e4f64..1e4, torus in any::<bool>()) {
        let region = Region::new(1e6, if torus { Boundary::Torus } else { Boundary::Truncated });
        let w = region.wrap(Point { x, y });
        prop_assert!(w.x >= 0.0 && w.x < 1000.0 && w.y >= 0.0 && w.y < 1000.0, "{w:?}");
    }

    /// More backhaul never slows content retrieval.
    #[test]
    fn delay_nonincreasing_in_backhaul(b1 in 1e8f64..2e10, b2 in 1e8f64..2e10, k in 1usize..8) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        let c = ContentCatalog::zipf(2000, 0.56).unwrap();
        let cache = CacheConfig { cluster_size: k, ..CacheConfig::default() };
        let d = |b: f64| {
            let p = SystemParams { backhaul_capacity: b, ..SystemParams::default() };
            analytic::evaluate(&p, &c, &cache, Policy::Dcec).unwrap().delay.total
        };
        prop_assert!(d(hi) <= d(lo));
    }

    #[test]
    fn bounds_nonnegative(alpha in 1.05f64..4.0, lambda in 20.0f64..600.0, k in 1usize..8) {
        let p = SystemParams {
            pathloss_exp: alpha,
            sbs_density: lambda * 1e-6,
            ue_density: 10.0 * lambda * 1e-6,
            ..SystemParams::default()
        };
        let c = ContentCatalog::zipf(2000, 0.56).unwrap();
        let cache = CacheConfig { cluster_size: k, ..CacheConfig::default() };
        if let Ok(a) = analytic::evaluate(&p, &c, &cache, Policy::Dcec) {
            prop_assert!(a.rates.nearest >= 0.0 && a.rates.cluster >= 0.0);
            prop_assert!(a.rates.d2d.is_none_or(|r| r >= 0.0));
            prop_assert!(a.delay.total > 0.0);
        }
    }
}
