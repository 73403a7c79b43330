//! Zipf content popularity, DCEC/MPC cache placement, hit ratios and the
//! request-category probabilities that weight each delay leg.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank-ordered content popularity.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentCatalog {
    skewness: f64,
    popularity: Vec<f64>,
    /// prefix[i] = Σ_{j < i} q_j
    prefix: Vec<f64>,
}

impl ContentCatalog {
    /// Zipf popularity `q_i ∝ i^(-ξ)` over `size` contents.
    pub fn zipf(size: usize, skewness: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("catalog size must be at least 1"));
        }
        if !(skewness >= 0.0 && skewness.is_finite()) {
            return Err(Error::invalid(format!("skewness must be >= 0, got {skewness}")));
        }
        let weights: Vec<f64> = (1..=size).map(|i| (i as f64).powf(-skewness)).collect();
        // Smallest terms first.
        let total: f64 = weights.iter().rev().sum();
        let popularity: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let mut prefix = Vec::with_capacity(size + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for q in &popularity {
            acc += q;
            prefix.push(acc);
        }
        Ok(ContentCatalog { skewness, popularity, prefix })
    }

    pub fn size(&self) -> usize {
        self.popularity.len()
    }

    pub fn skewness(&self) -> f64 {
        self.skewness
    }

    pub fn popularity(&self) -> &[f64] {
        &self.popularity
    }

    /// Popularity of the content with 1-based `rank`.
    pub fn q(&self, rank: usize) -> f64 {
        self.popularity[rank - 1]
    }

    /// Rank whose cumulative popularity interval contains `u ∈ [0, 1)` (inverse-CDF sampling).
    pub fn rank_for_uniform(&self, u: f64) -> usize {
        let cdf = &self.prefix[1..];
        (cdf.partition_point(|&c| c <= u) + 1).min(self.size())
    }

    /// Total popularity of ranks `first..=last` (1-based, inclusive). Empty if `last < first`.
    pub fn mass(&self, first: usize, last: usize) -> f64 {
        if last < first {
            return 0.0;
        }
        let last = last.min(self.size());
        self.prefix[last] - self.prefix[first - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "DCEC")]
    Dcec,
    #[serde(rename = "MPC")]
    Mpc,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Dcec => "DCEC",
            Policy::Mpc => "MPC",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "DCEC" => Ok(Policy::Dcec),
            "MPC" => Ok(Policy::Mpc),
            other => Err(Error::invalid(format!("unknown caching policy `{other}`"))),
        }
    }
}

/// Per-node cache capacities in whole contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub user_capacity: usize,
    pub sbs_capacity: usize,
    pub cluster_size: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { user_capacity: 150, sbs_capacity: 200, cluster_size: 2 }
    }
}

impl CacheConfig {
    /// Number of distinct contents the policy places.
    pub fn cached_contents(&self, policy: Policy) -> usize {
        match policy {
            Policy::Dcec => 2 * self.user_capacity + self.cluster_size * self.sbs_capacity,
            Policy::Mpc => self.user_capacity + self.sbs_capacity,
        }
    }

    pub fn check(&self, catalog: &ContentCatalog, policy: Policy) -> Result<()> {
        if self.cluster_size == 0 {
            return Err(Error::invalid("cluster size K must be at least 1"));
        }
        let needed = self.cached_contents(policy);
        if needed > catalog.size() {
            return Err(Error::CapacityOverflow { needed, catalog: catalog.size() });
        }
        Ok(())
    }
}

/// Hit ratios of a paired user, an unpaired user, and one cluster SBS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitRatios {
    pub paired: f64,
    pub unpaired: f64,
    pub sbs: f64,
}

pub fn dcec_hit_ratios(catalog: &ContentCatalog, cache: &CacheConfig) -> Result<HitRatios> {
    cache.check(catalog, Policy::Dcec)?;
    let cu = cache.user_capacity;
    let k = cache.cluster_size;
    Ok(HitRatios {
        paired: 0.5 * catalog.mass(1, 2 * cu),
        unpaired: catalog.mass(1, cu),
        sbs: catalog.mass(2 * cu + 1, 2 * cu + k * cache.sbs_capacity) / k as f64,
    })
}

/// Backhaul offloading gain of DCEC.
pub fn offloading_gain_dcec(hits: &HitRatios, cluster_size: usize, paired_fraction: f64) -> f64 {
    hits.unpaired * (1.0 - paired_fraction)
        + 2.0 * hits.paired * paired_fraction
        + cluster_size as f64 * hits.sbs
}

/// Offloading gain of most-popular caching: the user holds ranks 1..Cu and its SBS the next Cs.
pub fn offloading_gain_mpc(catalog: &ContentCatalog, cache: &CacheConfig) -> Result<f64> {
    cache.check(catalog, Policy::Mpc)?;
    Ok(catalog.mass(1, cache.user_capacity + cache.sbs_capacity))
}

pub fn miss_probability(offloading_gain: f64) -> f64 {
    1.0 - offloading_gain
}

/// Population-averaged probabilities of where a request is served.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RequestProbabilities {
    /// Served from the requester's own cache.
    pub local: f64,
    /// Served by the D2D peer (P_d).
    pub d2d: f64,
    /// Served by a cluster SBS (P_s). Under MPC: the associated SBS.
    pub cluster: f64,
    /// Fetched over the backhaul (P_m).
    pub miss: f64,
}

impl RequestProbabilities {
    pub fn offloading_gain(&self) -> f64 {
        1.0 - self.miss
    }

    /// Probability that a request is served over the cellular band (P_m + P_s).
    pub fn cellular(&self) -> f64 {
        self.miss + self.cluster
    }
}

pub fn request_probabilities(
    catalog: &ContentCatalog,
    cache: &CacheConfig,
    paired_fraction: f64,
) -> Result<RequestProbabilities> {
    let hits = dcec_hit_ratios(catalog, cache)?;
    let f = offloading_gain_dcec(&hits, cache.cluster_size, paired_fraction);
    let cluster = cache.cluster_size as f64 * hits.sbs;
    let d2d = paired_fraction * hits.paired;
    Ok(RequestProbabilities { local: f - cluster - d2d, d2d, cluster, miss: miss_probability(f) })
}

pub fn mpc_request_probabilities(
    catalog: &ContentCatalog,
    cache: &CacheConfig,
) -> Result<RequestProbabilities> {
    let f = offloading_gain_mpc(catalog, cache)?;
    let cu = cache.user_capacity;
    Ok(RequestProbabilities {
        local: catalog.mass(1, cu),
        d2d: 0.0,
        cluster: catalog.mass(cu + 1, cu + cache.sbs_capacity),
        miss: miss_probability(f),
    })
}

impl Policy {
    pub fn request_probabilities(
        self,
        catalog: &ContentCatalog,
        cache: &CacheConfig,
        paired_fraction: f64,
    ) -> Result<RequestProbabilities> {
        match self {
            Policy::Dcec => request_probabilities(catalog, cache, paired_fraction),
            Policy::Mpc => mpc_request_probabilities(catalog, cache),
        }
    }
}

/// Cache role of a user device.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserRole {
    /// First member of a D2D pair (holds odd ranks of the pair tier).
    PairA,
    /// Second member of a D2D pair (holds even ranks).
    PairB,
    Unpaired,
}

/// Where a single request is served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RequestCategory {
    Local,
    D2d,
    Cluster,
    Miss,
}

/// Explicit content-to-node assignment. Ranks are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CachePlacement {
    pub policy: Policy,
    pub cache: CacheConfig,
    pub user_set_a: Vec<usize>,
    pub user_set_b: Vec<usize>,
    pub sbs_sets: Vec<Vec<usize>>,
    /// h_p, h_u, h_s. Under MPC `paired == unpaired` and `sbs` is the single SBS's mass.
    pub hits: HitRatios,
}

pub fn build_placement(
    catalog: &ContentCatalog,
    cache: &CacheConfig,
    policy: Policy,
) -> Result<CachePlacement> {
    cache.check(catalog, policy)?;
    let cu = cache.user_capacity;
    let cs = cache.sbs_capacity;
    match policy {
        Policy::Dcec => {
            let k = cache.cluster_size;
            let user_set_a = (1..=2 * cu).step_by(2).collect();
            let user_set_b = (2..=2 * cu).step_by(2).collect();
            let mut sbs_sets = vec![Vec::with_capacity(cs); k];
            for (j, rank) in (2 * cu + 1..=2 * cu + k * cs).enumerate() {
                sbs_sets[j % k].push(rank);
            }
            Ok(CachePlacement {
                policy,
                cache: *cache,
                user_set_a,
                user_set_b,
                sbs_sets,
                hits: dcec_hit_ratios(catalog, cache)?,
            })
        }
        Policy::Mpc => {
            let user_set_a: Vec<usize> = (1..=cu).collect();
            let sbs_set: Vec<usize> = (cu + 1..=cu + cs).collect();
            let user_mass = catalog.mass(1, cu);
            Ok(CachePlacement {
                policy,
                cache: *cache,
                user_set_a,
                user_set_b: Vec::new(),
                sbs_sets: vec![sbs_set],
                hits: HitRatios {
                    paired: user_mass,
                    unpaired: user_mass,
                    sbs: catalog.mass(cu + 1, cu + cs),
                },
            })
        }
    }
}

impl CachePlacement {
    /// Serving category for a request of `rank` made by a user with `role`.
    pub fn categorize(&self, rank: usize, role: UserRole) -> RequestCategory {
        let cu = self.cache.user_capacity;
        let cs = self.cache.sbs_capacity;
        match self.policy {
            Policy::Mpc => {
                if rank <= cu {
                    RequestCategory::Local
                } else if rank <= cu + cs {
                    RequestCategory::Cluster
                } else {
                    RequestCategory::Miss
                }
            }
            Policy::Dcec => {
                let pair_tier = 2 * cu;
                if rank <= pair_tier {
                    let odd = rank % 2 == 1;
                    match role {
                        UserRole::PairA if odd => RequestCategory::Local,
                        UserRole::PairB if !odd => RequestCategory::Local,
                        UserRole::PairA | UserRole::PairB => RequestCategory::D2d,
                        UserRole::Unpaired if rank <= cu => RequestCategory::Local,
                        UserRole::Unpaired => RequestCategory::Miss,
                    }
                } else if rank <= pair_tier + self.cache.cluster_size * cs {
                    RequestCategory::Cluster
                } else {
                    RequestCategory::Miss
                }
            }
        }
    }

    /// Index of the cluster SBS (in distance order) that caches `rank`, if any.
    pub fn cluster_slot(&self, rank: usize) -> Option<usize> {
        self.sbs_sets.iter().position(|set| set.binary_search(&rank).is_ok())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_when_unskewed() {
        let c = ContentCatalog::zipf(4, 0.0).unwrap();
        for &q in c.popularity() {
            assert!((q - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_contents_unit_skew() {
        let c = ContentCatalog::zipf(2, 1.0).unwrap();
        assert!((c.q(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.q(2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn table_catalog_head_probability() {
        // Extended-precision direct summation.
        let c = ContentCatalog::zipf(2000, 0.56).unwrap();
        assert!((c.q(1) - 0.015_950_074_035_625_787).abs() < 1e-15);
    }

    #[test]
    fn inverse_cdf_sampling() {
        let c = ContentCatalog::zipf(3, 0.0).unwrap();
        assert_eq!(c.rank_for_uniform(0.0), 1);
        assert_eq!(c.rank_for_uniform(0.34), 2);
        assert_eq!(c.rank_for_uniform(0.999_999), 3);
        assert_eq!(c.rank_for_uniform(1.0), 3);
    }

    #[test]
    fn empty_catalog_rejected() {
        assert!(ContentCatalog::zipf(0, 0.5).is_err());
        assert!(ContentCatalog::zipf(10, -0.1).is_err());
    }

    #[test]
    fn uniform_hit_ratios() {
        let c = ContentCatalog::zipf(100, 0.0).unwrap();
        let cache = CacheConfig { user_capacity: 10, sbs_capacity: 10, cluster_size: 2 };
        let h = dcec_hit_ratios(&c, &cache).unwrap();
        for v in [h.paired, h.unpaired, h.sbs] {
            assert!((v - 0.10).abs() < 1e-12);
        }
        let f = offloading_gain_dcec(&h, 2, 0.8);
        assert!((f - 0.38).abs() < 1e-12);
        assert!((miss_probability(f) - 0.62).abs() < 1e-12);
        assert!((offloading_gain_mpc(&c, &cache).unwrap() - 0.20).abs() < 1e-12);
    }

    #[test]
    fn empty_user_cache() {
        let c = ContentCatalog::zipf(100, 0.7).unwrap();
        let cache = CacheConfig { user_capacity: 0, sbs_capacity: 10, cluster_size: 2 };
        let h = dcec_hit_ratios(&c, &cache).unwrap();
        assert_eq!(h.paired, 0.0);
        assert_eq!(h.unpaired, 0.0);
    }

    #[test]
    fn table_hit_ratios() {
        let c = ContentCatalog::zipf(2000, 0.56).unwrap();
        let cache = CacheConfig { user_capacity: 150, sbs_capacity: 200, cluster_size: 3 };
        let h = dcec_hit_ratios(&c, &cache).unwrap();
        assert!((h.paired - 0.209_331_981_944_975_63).abs() < 1e-13);
        assert!((h.unpaired - 0.301_605_578_519_819_9).abs() < 1e-13);
        assert!((h.sbs - 0.092_335_918_724_618_68).abs() < 1e-13);
        let mpc = offloading_gain_mpc(&c, &cache).unwrap();
        assert!((mpc - 0.449_930_362_421_412_8).abs() < 1e-13);
    }

    #[test]
    fn offloading_gain_extremes() {
        let h = HitRatios { paired: 0.2, unpaired: 0.3, sbs: 0.1 };
        assert!((offloading_gain_dcec(&h, 3, 1.0) - (0.4 + 0.3)).abs() < 1e-15);
        assert!((offloading_gain_dcec(&h, 3, 0.0) - (0.3 + 0.3)).abs() < 1e-15);
        assert_eq!(miss_probability(1.0), 0.0);
        assert_eq!(miss_probability(0.0), 1.0);
    }

    #[test]
    fn full_catalog_mpc() {
        let c = ContentCatalog::zipf(30, 0.9).unwrap();
        let cache = CacheConfig { user_capacity: 10, sbs_capacity: 20, cluster_size: 1 };
        assert!((offloading_gain_mpc(&c, &cache).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overflow_rejected() {
        let c = ContentCatalog::zipf(100, 0.5).unwrap();
        let cache = CacheConfig { user_capacity: 30, sbs_capacity: 20, cluster_size: 3 };
        assert!(matches!(dcec_hit_ratios(&c, &cache), Err(Error::CapacityOverflow { .. })));
        let cache = CacheConfig { user_capacity: 60, sbs_capacity: 50, cluster_size: 1 };
        assert!(offloading_gain_mpc(&c, &cache).is_err());
    }

    #[test]
    fn uniform_request_probabilities() {
        let c = ContentCatalog::zipf(100, 0.0).unwrap();
        let cache = CacheConfig { user_capacity: 10, sbs_capacity: 10, cluster_size: 2 };
        let p = request_probabilities(&c, &cache, 0.8).unwrap();
        assert!((p.cluster - 0.20).abs() < 1e-12);
        assert!((p.d2d - 0.08).abs() < 1e-12);
        assert!((p.miss - 0.62).abs() < 1e-12);
        assert!((p.local - 0.10).abs() < 1e-12);
        let p0 = request_probabilities(&c, &cache, 0.0).unwrap();
        assert_eq!(p0.d2d, 0.0);
    }

    #[test]
    fn zero_cluster_size_rejected() {
        let c = ContentCatalog::zipf(100, 0.0).unwrap();
        let cache = CacheConfig { user_capacity: 10, sbs_capacity: 10, cluster_size: 0 };
        assert!(request_probabilities(&c, &cache, 0.8).is_err());
    }

    #[test]
    fn placement_alternating_deal() {
        let c = ContentCatalog::zipf(2, 0.0).unwrap();
        let cache = CacheConfig { user_capacity: 1, sbs_capacity: 0, cluster_size: 1 };
        let p = build_placement(&c, &cache, Policy::Dcec).unwrap();
        assert_eq!(p.user_set_a, vec![1]);
        assert_eq!(p.user_set_b, vec![2]);
    }

    #[test]
    fn placement_round_robin_cluster() {
        let c = ContentCatalog::zipf(10, 0.5).unwrap();
        let cache = CacheConfig { user_capacity: 2, sbs_capacity: 2, cluster_size: 2 };
        let p = build_placement(&c, &cache, Policy::Dcec).unwrap();
        assert_eq!(p.user_set_a, vec![1, 3]);
        assert_eq!(p.user_set_b, vec![2, 4]);
        assert_eq!(p.sbs_sets, vec![vec![5, 7], vec![6, 8]]);
        assert_eq!(p.cluster_slot(7), Some(0));
        assert_eq!(p.cluster_slot(8), Some(1));
        assert_eq!(p.cluster_slot(9), None);
    }

    #[test]
    fn placement_uniform_masses() {
        let c = ContentCatalog::zipf(100, 0.0).unwrap();
        let cache = CacheConfig { user_capacity: 10, sbs_capacity: 7, cluster_size: 3 };
        let p = build_placement(&c, &cache, Policy::Dcec).unwrap();
        let mass = |set: &[usize]| set.iter().map(|&r| c.q(r)).sum::<f64>();
        assert!((mass(&p.user_set_a) - 0.10).abs() < 1e-12);
        assert!((mass(&p.user_set_b) - 0.10).abs() < 1e-12);
        for set in &p.sbs_sets {
            assert!((mass(set) - 0.07).abs() < 1e-12);
        }
    }

    #[test]
    fn placement_sets_disjoint_and_cover() {
        let c = ContentCatalog::zipf(500, 0.8).unwrap();
        let cache = CacheConfig { user_capacity: 21, sbs_capacity: 13, cluster_size: 5 };
        let p = build_placement(&c, &cache, Policy::Dcec).unwrap();
        let mut all: Vec<usize> = p.user_set_a.iter().chain(&p.user_set_b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (1..=42).collect::<Vec<_>>());
        let mut cluster: Vec<usize> = p.sbs_sets.concat();
        cluster.sort_unstable();
        assert_eq!(cluster, (43..=42 + 65).collect::<Vec<_>>());
        // Alternating deal keeps the two pair members within one content of each other.
        let mass = |set: &[usize]| set.iter().map(|&r| c.q(r)).sum::<f64>();
        let gap = mass(&p.user_set_a) - mass(&p.user_set_b);
        assert!(gap >= 0.0 && gap <= c.q(1));
    }

    /// Exact expected hit rate of a request stream against the explicit sets.
    fn enumerate_offload(c: &ContentCatalog, p: &CachePlacement, delta: f64) -> RequestProbabilities {
        let mut out = RequestProbabilities { local: 0.0, d2d: 0.0, cluster: 0.0, miss: 0.0 };
        let roles = [(UserRole::PairA, delta / 2.0), (UserRole::PairB, delta / 2.0), (UserRole::Unpaired, 1.0 - delta)];
        for rank in 1..=c.size() {
            for (role, w) in roles {
                let in_a = p.user_set_a.contains(&rank);
                let in_b = p.user_set_b.contains(&rank);
                let in_sbs = p.sbs_sets.iter().any(|s| s.contains(&rank));
                let own = match role {
                    UserRole::PairA => in_a,
                    UserRole::PairB => in_b,
                    UserRole::Unpaired => rank <= p.cache.user_capacity,
                };
                let peer = match role {
                    UserRole::PairA => in_b,
                    UserRole::PairB => in_a,
                    UserRole::Unpaired => false,
                };
                let m = c.q(rank) * w;
                if own {
                    out.local += m;
                } else if peer {
                    out.d2d += m;
                } else if in_sbs {
                    out.cluster += m;
                } else {
                    out.miss += m;
                }
                assert_eq!(
                    p.categorize(rank, role),
                    if own {
                        RequestCategory::Local
                    } else if peer {
                        RequestCategory::D2d
                    } else if in_sbs {
                        RequestCategory::Cluster
                    } else {
                        RequestCategory::Miss
                    }
                );
            }
        }
        out
    }

    #[test]
    fn placement_matches_closed_form_by_enumeration() {
        for (size, xi, cu, cs, k, delta) in [
            (50, 0.0, 5, 4, 3, 0.8),
            (50, 0.56, 6, 5, 2, 0.8),
            (40, 1.2, 3, 2, 4, 0.3),
            (20, 0.9, 2, 3, 1, 1.0),
            (30, 0.4, 4, 1, 5, 0.0),
        ] {
            let c = ContentCatalog::zipf(size, xi).unwrap();
            let cache = CacheConfig { user_capacity: cu, sbs_capacity: cs, cluster_size: k };
            let p = build_placement(&c, &cache, Policy::Dcec).unwrap();
            let brute = enumerate_offload(&c, &p, delta);
            let closed = request_probabilities(&c, &cache, delta).unwrap();
            // The alternating deal splits the pair tier within one content, and
            // the D2D leg is weighted by the average of the two halves.
            assert!((brute.miss - closed.miss).abs() < 1e-12, "{brute:?} {closed:?}");
            assert!((brute.cluster - closed.cluster).abs() < 1e-12);
            assert!((brute.d2d - closed.d2d).abs() < 1e-12);
            assert!((brute.local - closed.local).abs() < 1e-12);
        }
    }

    #[test]
    fn mpc_categories() {
        let c = ContentCatalog::zipf(100, 0.6).unwrap();
        let cache = CacheConfig { user_capacity: 10, sbs_capacity: 20, cluster_size: 4 };
        let p = build_placement(&c, &cache, Policy::Mpc).unwrap();
        assert_eq!(p.categorize(10, UserRole::PairA), RequestCategory::Local);
        assert_eq!(p.categorize(11, UserRole::Unpaired), RequestCategory::Cluster);
        assert_eq!(p.categorize(31, UserRole::PairB), RequestCategory::Miss);
        let probs = mpc_request_probabilities(&c, &cache).unwrap();
        assert!((probs.local + probs.cluster + probs.miss - 1.0).abs() < 1e-12);
        assert_eq!(probs.d2d, 0.0);
    }

    #[test]
    fn policy_parse() {
        assert_eq!("dcec".parse::<Policy>().unwrap(), Policy::Dcec);
        assert_eq!("MPC".parse::<Policy>().unwrap(), Policy::Mpc);
        assert!("lru".parse::<Policy>().is_err());
    }
}
