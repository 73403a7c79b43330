//! Closed-form model: expected loads, backhaul rate, rate lower bounds for the
//! nearest SBS, the SBS cluster and D2D links, and the retrieval delay.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::popularity::{CacheConfig, ContentCatalog, Policy, RequestProbabilities};
use crate::special::{exp_integral_e1, gamma, gamma_ratio, incomplete_gamma_upper, EULER_GAMMA};

/// `x·(1 − (1 + x/κ)^(−(κ+1)))`, the Gamma-cell-area load form.
fn gamma_cell_load(x: f64, kappa: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    x * -(-(kappa + 1.0) * (x / kappa).ln_1p()).exp_m1()
}

/// Mean number of backhaul users per SBS.
pub fn expected_backhaul_load(params: &SystemParams, p_m: f64) -> f64 {
    gamma_cell_load(p_m * params.users_per_sbs(), params.cell_area_shape)
}

/// Mean number of users sharing an SBS's airtime, for cellular request probability `p`.
pub fn expected_cell_load(params: &SystemParams, p: f64) -> f64 {
    gamma_cell_load(p * params.users_per_sbs(), params.cell_area_shape)
}

/// Mean backhaul rate per user. Infinite when nothing is fetched over the backhaul.
pub fn backhaul_rate(params: &SystemParams, p_m: f64) -> f64 {
    if p_m <= 0.0 {
        return f64::INFINITY;
    }
    let m = p_m * params.users_per_sbs();
    let kappa = params.cell_area_shape;
    // x^(κ+1) / (x^(κ+1) − 1) = 1 / (1 − x^−(κ+1))
    let tail = -(-(kappa + 1.0) * (m / kappa).ln_1p()).exp_m1();
    params.backhaul_capacity / (m * tail)
}

/// `Γ(n+1−β) / ((1−β)Γ(n))`, the closed form of `Σ_{j=1}^{n} Γ(j−β)/Γ(j)`.
pub fn gamma_sum(beta: f64, n: usize) -> Result<f64> {
    Ok(gamma_ratio(n as f64, 1.0 - beta)? / (1.0 - beta))
}

fn check_station_count(n_bs: usize, alpha: f64) -> Result<()> {
    if n_bs < 2 {
        return Err(Error::invalid(format!("need at least 2 SBSs, got {n_bs}")));
    }
    if alpha != 2.0 && (n_bs as f64) <= alpha / 2.0 {
        return Err(Error::invalid(format!("N_BS = {n_bs} must exceed alpha/2 = {}", alpha / 2.0)));
    }
    Ok(())
}

/// Interference sum term of the nearest-SBS bound.
pub fn j1(alpha: f64, n_bs: usize) -> Result<f64> {
    check_station_count(n_bs, alpha)?;
    if alpha == 2.0 {
        return Ok(((n_bs - 1) as f64).ln() + EULER_GAMMA);
    }
    let b = alpha / 2.0;
    Ok(gamma_sum(b, n_bs)? - gamma(1.0 - b)?)
}

/// `E[ln r_k]` for the k-th nearest point of a PPP with density `lambda`.
pub fn expected_ln_rk(k: usize, lambda: f64) -> f64 {
    let harmonic: f64 = (1..k).map(|i| 1.0 / i as f64).sum();
    -0.5 * (EULER_GAMMA + (PI * lambda).ln() - harmonic)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::invalid("cluster rank k must be at least 1"))
    } else {
        Ok(())
    }
}

pub fn j3(alpha: f64, k: usize, r0: f64) -> Result<f64> {
    check_k(k)?;
    let b = alpha / 2.0;
    if k == 1 {
        incomplete_gamma_upper(1.0 - b, r0)
    } else {
        gamma_ratio(k as f64, -b)
    }
}

pub fn j4(k: usize, r0: f64) -> Result<f64> {
    check_k(k)?;
    if k == 1 {
        exp_integral_e1(r0)
    } else {
        Ok(1.0 / (k - 1) as f64)
    }
}

/// Interference sum term for the k-th nearest serving SBS. `r0 = πλ_BS·d0²`.
pub fn j2(alpha: f64, k: usize, n_bs: usize, r0: f64) -> Result<f64> {
    check_k(k)?;
    check_station_count(n_bs, alpha)?;
    let b = alpha / 2.0;
    if alpha < 2.0 {
        Ok(gamma_sum(b, n_bs)? - gamma_ratio(k as f64, -b)?)
    } else if alpha == 2.0 {
        Ok(exp_integral_e1(r0)? + ((n_bs - 1) as f64).ln() + EULER_GAMMA - j4(k, r0)?)
    } else {
        Ok(incomplete_gamma_upper(1.0 - b, r0)? + gamma_sum(b, n_bs)? - gamma(1.0 - b)?
            - j3(alpha, k, r0)?)
    }
}

/// Interference sum term of the D2D bound; `radius` is the equivalent cell radius.
pub fn j5(alpha: f64, radius: f64, d0: f64) -> f64 {
    let b = 1.0 - alpha / 2.0;
    if alpha < 2.0 {
        radius.powf(2.0 - alpha) / b
    } else if alpha == 2.0 {
        2.0 * (radius / d0).ln()
    } else {
        (radius.powf(2.0 - alpha) - d0.powf(2.0 - alpha)) / b
    }
}

fn clamp_bound(name: &str, value: f64) -> f64 {
    if value > 0.0 {
        value
    } else {
        log::warn!("{name} rate bound degenerate ({value:.3e} bit/s), clamped to 0");
        0.0
    }
}

fn cellular_prefactor(params: &SystemParams, p_m: f64, p_s: f64) -> Result<f64> {
    let load = expected_cell_load(params, p_m + p_s);
    if !(load > 0.0) {
        return Err(Error::invalid("expected cell load is zero; no cellular traffic"));
    }
    Ok((1.0 - params.d2d_fraction) * params.bandwidth / (load * LN_2))
}

fn antenna_term(main_gain: f64, average_gain: f64, alpha: f64) -> f64 {
    2.0 * (main_gain / average_gain).ln() + (alpha - 2.0) * EULER_GAMMA / 2.0
}

/// Lower bound on the mean rate from the nearest SBS.
pub fn nearest_rate_lb(params: &SystemParams, p_m: f64, p_s: f64) -> Result<f64> {
    let pre = cellular_prefactor(params, p_m, p_s)?;
    let alpha = params.pathloss_exp;
    let ant = &params.sbs_antenna;
    let inner = antenna_term(ant.main_gain, ant.average_gain(), alpha) - j1(alpha, params.sbs_count())?.ln();
    Ok(clamp_bound("nearest-SBS", pre * inner))
}

/// Lower bound on the mean rate from an SBS drawn uniformly from the K nearest.
pub fn cluster_rate_lb(params: &SystemParams, cluster_size: usize, p_m: f64, p_s: f64) -> Result<f64> {
    if cluster_size == 0 {
        return Err(Error::invalid("cluster size K must be at least 1"));
    }
    let n_bs = params.sbs_count();
    if cluster_size > n_bs {
        return Err(Error::NotEnoughStations { requested: cluster_size, available: n_bs });
    }
    let pre = cellular_prefactor(params, p_m, p_s)?;
    let alpha = params.pathloss_exp;
    let r0 = PI * params.sbs_density * params.ref_distance.powi(2);
    let kf = cluster_size as f64;
    let mut harmonic_sum = 0.0;
    let mut harmonic = 0.0;
    let mut ln_j2 = 0.0;
    for k in 1..=cluster_size {
        harmonic_sum += harmonic;
        harmonic += 1.0 / k as f64;
        ln_j2 += j2(alpha, k, n_bs, r0)?.ln();
    }
    let ant = &params.sbs_antenna;
    let inner = antenna_term(ant.main_gain, ant.average_gain(), alpha)
        - alpha / (2.0 * kf) * harmonic_sum
        - ln_j2 / kf;
    Ok(clamp_bound("SBS-cluster", pre * inner))
}

/// Lower bound on the mean D2D rate with `n_d` transmitters of density `lambda_d` (per m²).
pub fn d2d_rate_lb(params: &SystemParams, lambda_d: f64, n_d: usize) -> Result<f64> {
    if !(lambda_d > 0.0) {
        return Err(Error::invalid(format!("D2D density must be positive, got {lambda_d}")));
    }
    if n_d < 2 {
        return Err(Error::invalid(format!("need at least 2 D2D transmitters, got {n_d}")));
    }
    let alpha = params.pathloss_exp;
    let radius = (n_d as f64 / (PI * lambda_d)).sqrt();
    let ant = &params.ue_antenna;
    let inner = 2.0 * (ant.main_gain / ant.average_gain()).ln()
        - EULER_GAMMA
        - alpha * (params.max_d2d_distance.ln() - 0.5)
        - (PI * lambda_d).ln()
        - j5(alpha, radius, params.ref_distance).ln();
    Ok(clamp_bound("D2D", params.d2d_fraction * params.bandwidth / LN_2 * inner))
}

/// Mean rates feeding the four delay legs, bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBounds {
    pub backhaul: f64,
    pub nearest: f64,
    /// Rate of the leg serving SBS-cached contents. Under MPC this is the nearest SBS.
    pub cluster: f64,
    /// Absent when there is no D2D traffic.
    pub d2d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayBreakdown {
    pub backhaul: f64,
    pub nearest: f64,
    pub cluster: f64,
    pub d2d: f64,
    pub total: f64,
}

fn leg(name: &'static str, probability: f64, size: f64, rate: Option<f64>) -> Result<f64> {
    if probability == 0.0 {
        return Ok(0.0);
    }
    match rate {
        Some(r) if r > 0.0 => Ok(probability * size / r),
        _ => Err(Error::MissingRate { leg: name, probability }),
    }
}

/// Population-averaged retrieval delay. Misses pay both the backhaul and the
/// nearest-SBS leg; local hits cost nothing.
pub fn content_delay(
    params: &SystemParams,
    probs: &RequestProbabilities,
    rates: &RateBounds,
) -> Result<DelayBreakdown> {
    let nu = params.content_size;
    let backhaul = leg("backhaul", probs.miss, nu, Some(rates.backhaul))?;
    let nearest = leg("nearest", probs.miss, nu, Some(rates.nearest))?;
    let cluster = leg("cluster", probs.cluster, nu, Some(rates.cluster))?;
    let d2d = leg("d2d", probs.d2d, nu, rates.d2d)?;
    Ok(DelayBreakdown { backhaul, nearest, cluster, d2d, total: backhaul + nearest + cluster + d2d })
}

/// Everything the closed-form model says about one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticPoint {
    pub policy: Policy,
    pub probs: RequestProbabilities,
    pub backhaul_load: f64,
    pub cell_load: f64,
    pub rates: RateBounds,
    pub delay: DelayBreakdown,
}

impl AnalyticPoint {
    pub fn offloading_gain(&self) -> f64 {
        self.probs.offloading_gain()
    }
}

/// D2D transmitter density `P_d·λ_UE` and its rounded count over the region.
pub fn d2d_density(params: &SystemParams, p_d: f64) -> (f64, usize) {
    let lambda_d = p_d * params.ue_density;
    (lambda_d, (lambda_d * params.area).round() as usize)
}

/// Evaluates offloading, loads, rate bounds and delay for one policy.
pub fn evaluate(
    params: &SystemParams,
    catalog: &ContentCatalog,
    cache: &CacheConfig,
    policy: Policy,
) -> Result<AnalyticPoint> {
    let probs = policy.request_probabilities(catalog, cache, params.paired_fraction)?;
    let cellular = probs.cellular();
    let (nearest, cluster) = if cellular > 0.0 {
        let nearest = nearest_rate_lb(params, probs.miss, probs.cluster)?;
        let cluster = match policy {
            Policy::Dcec => cluster_rate_lb(params, cache.cluster_size, probs.miss, probs.cluster)?,
            Policy::Mpc => nearest,
        };
        (nearest, cluster)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    let d2d = if probs.d2d > 0.0 {
        let (lambda_d, n_d) = d2d_density(params, probs.d2d);
        Some(d2d_rate_lb(params, lambda_d, n_d)?)
    } else {
        None
    };
    let rates = RateBounds { backhaul: backhaul_rate(params, probs.miss), nearest, cluster, d2d };
    let delay = content_delay(params, &probs, &rates)?;
    Ok(AnalyticPoint {
        policy,
        probs,
        backhaul_load: expected_backhaul_load(params, probs.miss),
        cell_load: expected_cell_load(params, cellular),
        rates,
        delay,
    })
}

/// The cluster size in `k_range` minimizing the DCEC delay; ties go to the smaller K.
pub fn optimal_cluster_size(
    params: &SystemParams,
    catalog: &ContentCatalog,
    cache: &CacheConfig,
    k_range: impl IntoIterator<Item = usize>,
) -> Result<(usize, DelayBreakdown)> {
    let mut best: Option<(usize, DelayBreakdown)> = None;
    for k in k_range {
        let c = CacheConfig { cluster_size: k, ..*cache };
        let d = evaluate(params, catalog, &c, Policy::Dcec)?.delay;
        if best.is_none_or(|(_, b)| d.total < b.total) {
            best = Some((k, d));
        }
    }
    best.ok_or_else(|| Error::invalid("empty cluster-size range"))
}
