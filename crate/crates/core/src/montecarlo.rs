//! Drop-based Monte Carlo estimator of the per-class rates, loads and delay.
//!
//! Each drop samples a PPP topology and tags a typical user at the window
//! center for every link class (nearest SBS, SBS cluster, D2D). Random draws
//! live in [`DropRealization`]; [`DropRealization::evaluate`] turns them into
//! rates for a given link budget and cache placement, so one realization can be
//! scored under several path-loss exponents or cluster sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{DelayBreakdown, RateBounds};
use crate::antenna::AntennaPattern;
use crate::error::{Error, Result};
use crate::geometry::{associate_and_load, sample_ppp, Boundary, NetworkDrop, Point, Region};
use crate::params::SystemParams;
use crate::popularity::{CachePlacement, ContentCatalog, Policy, RequestCategory, RequestProbabilities};

/// How interferer antenna gains and fading are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    /// Independent uniform angles at both ends and Exp(1) fading per interferer.
    #[default]
    Sampled,
    /// Every interferer gets gain Ḡ² and unit fading.
    MeanGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    pub interference_mode: InterferenceMode,
    pub boundary: Boundary,
}

/// Random draws attached to one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Draw {
    fading: f64,
    /// Product of transmit and receive gains at the sampled angles.
    gain: f64,
}

fn sample_draw<R: Rng + ?Sized>(pattern: &AntennaPattern, rng: &mut R) -> Draw {
    let fading: f64 = Exp1.sample(rng);
    let tx = rng.random::<f64>() * std::f64::consts::TAU;
    let rx = rng.random::<f64>() * std::f64::consts::TAU;
    Draw { fading, gain: pattern.gain(tx) * pattern.gain(rx) }
}

/// One SBS as seen from the typical user.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SbsLink {
    sbs: usize,
    distance: f64,
    draw: Draw,
}

/// Everything random about one drop.
#[derive(Debug, Clone)]
pub struct DropRealization {
    pub drop: NetworkDrop,
    pub typical: Point,
    /// Links from every SBS to the typical user, ascending by (distance, index).
    links: Vec<SbsLink>,
    /// Per-user uniforms: content request and cluster-SBS pick.
    request_u: Vec<f64>,
    cluster_u: Vec<f64>,
    /// Per-user draws used when the user transmits D2D.
    user_draws: Vec<Draw>,
    /// Typical user's cluster pick, D2D peer distance and D2D fading.
    typical_cluster_u: f64,
    typical_pair_distance: f64,
    typical_d2d_fading: f64,
}

/// Rates and loads seen by the typical users of one drop. Classes that do not
/// exist in the drop are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DropResult {
    pub nearest: Option<f64>,
    pub cluster: Option<f64>,
    pub d2d: Option<f64>,
    /// Backhaul share of a miss user at the typical user's nearest SBS.
    pub backhaul: Option<f64>,
    /// Users sharing the typical nearest-SBS user's cell, itself included.
    pub tagged_cell_load: Option<f64>,
    pub tagged_backhaul_load: Option<f64>,
    /// Per-SBS loads averaged over all SBSs of the drop.
    pub mean_cell_load: Option<f64>,
    pub mean_backhaul_load: Option<f64>,
}

fn check_geometry_match(a: &SystemParams, b: &SystemParams) -> Result<()> {
    let same = a.area == b.area
        && a.sbs_density == b.sbs_density
        && a.ue_density == b.ue_density
        && a.paired_fraction == b.paired_fraction
        && a.max_d2d_distance == b.max_d2d_distance
        && a.sbs_antenna == b.sbs_antenna
        && a.ue_antenna == b.ue_antenna;
    if same {
        Ok(())
    } else {
        Err(Error::invalid(
            "evaluations sharing drops must agree on area, densities, pairing and antennas",
        ))
    }
}

impl DropRealization {
    /// Samples a topology plus all fading, angle and request draws.
    /// `k_max` bounds the cluster sizes the realization can be evaluated with.
    pub fn sample<R: Rng + ?Sized>(
        params: &SystemParams,
        options: &SimOptions,
        k_max: usize,
        rng: &mut R,
    ) -> Self {
        let region = Region::new(params.area, options.boundary);
        let drop = NetworkDrop::sample(
            region,
            params.sbs_density,
            params.ue_density,
            params.paired_fraction,
            params.max_d2d_distance,
            k_max.max(1),
            rng,
        );
        let typical = region.center();
        let mut links: Vec<SbsLink> = drop
            .sbs
            .points()
            .iter()
            .enumerate()
            .map(|(i, &p)| SbsLink {
                sbs: i,
                distance: region.distance(typical, p),
                draw: sample_draw(&params.sbs_antenna, rng),
            })
            .collect();
        links.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.sbs.cmp(&b.sbs)));
        let n = drop.users.len();
        let mut request_u = Vec::with_capacity(n);
        let mut cluster_u = Vec::with_capacity(n);
        let mut user_draws = Vec::with_capacity(n);
        for _ in 0..n {
            request_u.push(rng.random::<f64>());
            cluster_u.push(rng.random::<f64>());
            user_draws.push(sample_draw(&params.ue_antenna, rng));
        }
        let typical_cluster_u = rng.random::<f64>();
        let typical_pair_distance = params.max_d2d_distance * rng.random::<f64>().sqrt();
        let typical_d2d_fading = Exp1.sample(rng);
        DropRealization {
            drop,
            typical,
            links,
            request_u,
            cluster_u,
            user_draws,
            typical_cluster_u,
            typical_pair_distance,
            typical_d2d_fading,
        }
    }

    /// The same realization with SBS `i` relabeled as `perm[i]`; each SBS keeps its draws.
    pub fn relabel_sbs(&self, perm: &[usize]) -> Result<Self> {
        let n = self.drop.sbs.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&j| j >= n || std::mem::replace(&mut seen[j], true)) {
            return Err(Error::invalid("relabeling must be a permutation of the SBS indices"));
        }
        let mut points = vec![Point::new(0.0, 0.0); n];
        for (i, p) in self.drop.sbs.points().iter().enumerate() {
            points[perm[i]] = *p;
        }
        let drop = NetworkDrop::from_parts(
            self.drop.region,
            points,
            self.drop.users.clone(),
            self.drop.pairing.clone(),
            self.drop.neighbors_per_user(),
        );
        let mut links: Vec<SbsLink> =
            self.links.iter().map(|l| SbsLink { sbs: perm[l.sbs], ..*l }).collect();
        links.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.sbs.cmp(&b.sbs)));
        Ok(DropRealization { drop, links, ..self.clone() })
    }

    /// Distances from the typical user to its nearest SBSs, ascending.
    pub fn sbs_distances(&self) -> impl Iterator<Item = f64> + '_ {
        self.links.iter().map(|l| l.distance)
    }

    /// Request category of every user under `placement`.
    pub fn categories(&self, catalog: &ContentCatalog, placement: &CachePlacement) -> Vec<RequestCategory> {
        (0..self.drop.users.len())
            .map(|u| {
                let rank = catalog.rank_for_uniform(self.request_u[u]);
                placement.categorize(rank, self.drop.pairing.role(u))
            })
            .collect()
    }

    /// Received power `P·g·h·C·max(r, d0)^(−α)`.
    fn received(params: &SystemParams, tx_power: f64, gain: f64, fading: f64, distance: f64) -> f64 {
        let r = distance.max(params.ref_distance);
        tx_power * gain * fading * params.pathloss_constant() * r.powf(-params.pathloss_exp)
    }

    fn interferer(mode: InterferenceMode, pattern: &AntennaPattern, draw: Draw) -> (f64, f64) {
        match mode {
            InterferenceMode::Sampled => (draw.gain, draw.fading),
            InterferenceMode::MeanGain => {
                let g = pattern.average_gain();
                (g * g, 1.0)
            }
        }
    }

    /// Total cellular interference at the typical user, skipping the SBS at
    /// distance rank `serving` (0-based) if given.
    pub fn cellular_interference(&self, params: &SystemParams, mode: InterferenceMode, serving: Option<usize>) -> f64 {
        self.links
            .iter()
            .enumerate()
            .filter(|(rank, _)| Some(*rank) != serving)
            .map(|(_, l)| {
                let (g, h) = Self::interferer(mode, &params.sbs_antenna, l.draw);
                Self::received(params, params.sbs_tx_power, g, h, l.distance)
            })
            .sum()
    }

    fn cellular_rate(&self, params: &SystemParams, mode: InterferenceMode, rank: usize, load: f64) -> f64 {
        let serving = self.links[rank];
        let gm = params.sbs_antenna.main_gain;
        let signal =
            Self::received(params, params.sbs_tx_power, gm * gm, serving.draw.fading, serving.distance);
        let interference = self.cellular_interference(params, mode, Some(rank));
        let band = (1.0 - params.d2d_fraction) * params.bandwidth;
        let noise = band * params.noise_psd;
        band / load * (signal / (interference + noise)).log2_1p()
    }

    fn d2d_rate(
        &self,
        params: &SystemParams,
        mode: InterferenceMode,
        transmitters: impl Iterator<Item = (Point, usize)>,
    ) -> f64 {
        let region = self.drop.region;
        let interference: f64 = transmitters
            .map(|(p, u)| {
                let (g, h) = Self::interferer(mode, &params.ue_antenna, self.user_draws[u]);
                Self::received(params, params.ue_tx_power, g, h, region.distance(self.typical, p))
            })
            .sum();
        let gm = params.ue_antenna.main_gain;
        let signal = Self::received(
            params,
            params.ue_tx_power,
            gm * gm,
            self.typical_d2d_fading,
            self.typical_pair_distance,
        );
        let band = params.d2d_fraction * params.bandwidth;
        band * (signal / (interference + band * params.noise_psd)).log2_1p()
    }

    /// Scores the realization for one link budget and placement.
    pub fn evaluate(
        &self,
        params: &SystemParams,
        catalog: &ContentCatalog,
        placement: &CachePlacement,
        mode: InterferenceMode,
    ) -> Result<DropResult> {
        let k = match placement.policy {
            Policy::Dcec => placement.cache.cluster_size,
            Policy::Mpc => 1,
        };
        let categories = self.categories(catalog, placement);
        let loads = associate_and_load(&self.drop, &categories, k, &self.cluster_u)?;
        let mut out = DropResult::default();
        let n_sbs = self.links.len();
        if n_sbs > 0 {
            let cells = loads.cell.iter().map(|&x| x as f64);
            out.mean_cell_load = Some(cells.sum::<f64>() / n_sbs as f64);
            out.mean_backhaul_load =
                Some(loads.backhaul.iter().map(|&x| x as f64).sum::<f64>() / n_sbs as f64);

            let nearest = self.links[0].sbs;
            let cell = 1.0 + loads.cell[nearest] as f64;
            let backhaul = 1.0 + loads.backhaul[nearest] as f64;
            out.tagged_cell_load = Some(cell);
            out.tagged_backhaul_load = Some(backhaul);
            out.backhaul = Some(params.backhaul_capacity / backhaul);
            out.nearest = Some(self.cellular_rate(params, mode, 0, cell));
            out.cluster = match placement.policy {
                Policy::Mpc => out.nearest,
                Policy::Dcec => {
                    let rank = ((self.typical_cluster_u * k as f64) as usize).min(k - 1);
                    (rank < n_sbs).then(|| {
                        let load = 1.0 + loads.cell[self.links[rank].sbs] as f64;
                        self.cellular_rate(params, mode, rank, load)
                    })
                }
            };
        }
        let has_d2d = placement.policy == Policy::Dcec
            && params.paired_fraction > 0.0
            && placement.hits.paired > 0.0;
        if has_d2d {
            let users = &self.drop.users;
            let peers = &self.drop.pairing.peer;
            let tx = categories
                .iter()
                .enumerate()
                .filter(|(_, c)| **c == RequestCategory::D2d)
                .filter_map(|(u, _)| peers[u].map(|p| (users[p], p)));
            out.d2d = Some(self.d2d_rate(params, mode, tx));
        }
        Ok(out)
    }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// One drop: sample, then evaluate.
pub fn simulate_drop<R: Rng + ?Sized>(
    params: &SystemParams,
    catalog: &ContentCatalog,
    placement: &CachePlacement,
    options: &SimOptions,
    rng: &mut R,
) -> Result<DropResult> {
    let k = placement.cache.cluster_size;
    DropRealization::sample(params, options, k, rng).evaluate(params, catalog, placement, options.interference_mode)
}

/// Random stream of drop `index` under `base_seed`.
pub fn drop_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// Sample mean with a normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Estimate {
    pub count: u64,
    pub mean: f64,
    /// Sample standard deviation.
    pub std_dev: f64,
}

impl Estimate {
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.std_dev / (self.count as f64).sqrt()
        }
    }

    /// Half-width of the 95% interval.
    pub fn ci_half_width(&self) -> f64 {
        1.96 * self.stderr()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Welford accumulator. Feeding samples in drop order keeps results
/// independent of how drops were scheduled.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn push_opt(&mut self, x: Option<f64>) {
        if let Some(x) = x {
            self.push(x);
        }
    }

    pub fn estimate(&self) -> Estimate {
        let var = if self.count > 1 { self.m2 / (self.count - 1) as f64 } else { 0.0 };
        Estimate {
            count: self.count,
            mean: if self.count > 0 { self.mean } else { f64::NAN },
            std_dev: var.sqrt(),
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub drops: u64,
    pub fingerprint: String,
    pub nearest: Estimate,
    pub cluster: Estimate,
    pub d2d: Estimate,
    pub backhaul: Estimate,
    pub tagged_cell_load: Estimate,
    pub tagged_backhaul_load: Estimate,
    pub mean_cell_load: Estimate,
    pub mean_backhaul_load: Estimate,
}

impl SimulationSummary {
    pub fn from_drops(drops: &[DropResult], fingerprint: String) -> Self {
        let mut m = [Moments::default(); 8];
        for d in drops {
            let fields = [
                d.nearest,
                d.cluster,
                d.d2d,
                d.backhaul,
                d.tagged_cell_load,
                d.tagged_backhaul_load,
                d.mean_cell_load,
                d.mean_backhaul_load,
            ];
            for (acc, x) in m.iter_mut().zip(fields) {
                acc.push_opt(x);
            }
        }
        let e = m.map(|x| x.estimate());
        SimulationSummary {
            drops: drops.len() as u64,
            fingerprint,
            nearest: e[0],
            cluster: e[1],
            d2d: e[2],
            backhaul: e[3],
            tagged_cell_load: e[4],
            tagged_backhaul_load: e[5],
            mean_cell_load: e[6],
            mean_backhaul_load: e[7],
        }
    }

    /// Mean rates in the shape the delay formula takes.
    pub fn rates(&self) -> RateBounds {
        let mean = |e: &Estimate| if e.is_empty() { 0.0 } else { e.mean };
        RateBounds {
            backhaul: mean(&self.backhaul),
            nearest: mean(&self.nearest),
            cluster: mean(&self.cluster),
            d2d: (!self.d2d.is_empty()).then_some(self.d2d.mean),
        }
    }
}

/// Hex SHA-256 over the JSON of everything that determines an experiment's output.
pub fn fingerprint<T: Serialize + ?Sized>(inputs: &T) -> String {
    let json = serde_json::to_vec(inputs).expect("serializable inputs");
    let digest = Sha256::digest(&json);
    hex::encode(&digest[..8])
}

/// One scoring of every drop: a link budget plus a placement.
#[derive(Debug, Clone)]
pub struct Evaluation<'a> {
    pub params: &'a SystemParams,
    pub placement: &'a CachePlacement,
}

/// Runs `n_drops` drops and scores each under every evaluation. The
/// evaluations must share the geometry of `base`.
pub fn run_experiments(
    base: &SystemParams,
    catalog: &ContentCatalog,
    evaluations: &[Evaluation<'_>],
    options: &SimOptions,
    n_drops: u64,
    base_seed: u64,
) -> Result<Vec<SimulationSummary>> {
    if n_drops == 0 {
        return Err(Error::invalid("need at least one drop"));
    }
    for e in evaluations {
        check_geometry_match(base, e.params)?;
    }
    let per_drop = score_drops(base, catalog, evaluations, options, n_drops, base_seed)?;
    Ok(evaluations
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let column: Vec<DropResult> = per_drop.iter().map(|d| d[j]).collect();
            let fp = fingerprint(&(
                e.params,
                e.placement.policy,
                e.placement.cache,
                catalog.size(),
                catalog.skewness(),
                options,
                n_drops,
                base_seed,
            ));
            SimulationSummary::from_drops(&column, fp)
        })
        .collect())
}

/// Per-drop results, `[drop][evaluation]`, in drop order.
fn score_drops(
    base: &SystemParams,
    catalog: &ContentCatalog,
    evaluations: &[Evaluation<'_>],
    options: &SimOptions,
    n_drops: u64,
    base_seed: u64,
) -> Result<Vec<Vec<DropResult>>> {
    let k_max = evaluations
        .iter()
        .map(|e| e.placement.cache.cluster_size)
        .max()
        .unwrap_or(1);
    (0..n_drops)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(base_seed, i);
            let real = DropRealization::sample(base, options, k_max, &mut rng);
            evaluations
                .iter()
                .map(|e| real.evaluate(e.params, catalog, e.placement, options.interference_mode))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Raw per-drop results of one placement, in drop order. Same drops as
/// [`run_experiment`] with the same seed.
pub fn simulate_drops(
    params: &SystemParams,
    catalog: &ContentCatalog,
    placement: &CachePlacement,
    options: &SimOptions,
    n_drops: u64,
    base_seed: u64,
) -> Result<Vec<DropResult>> {
    if n_drops == 0 {
        return Err(Error::invalid("need at least one drop"));
    }
    let eval = [Evaluation { params, placement }];
    Ok(score_drops(params, catalog, &eval, options, n_drops, base_seed)?
        .into_iter()
        .map(|mut d| d.remove(0))
        .collect())
}

/// Writes `drop,class,rate_bps,load` rows. `load` counts the users sharing
/// the serving link, the tagged user included, and is empty for D2D.
pub fn write_drop_samples<W: std::io::Write>(drops: &[DropResult], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["drop", "class", "rate_bps", "load"])?;
    for (i, d) in drops.iter().enumerate() {
        let rows = [
            ("nearest", d.nearest, d.tagged_cell_load),
            ("cluster", d.cluster, None),
            ("d2d", d.d2d, None),
            ("backhaul", d.backhaul, d.tagged_backhaul_load),
        ];
        for (class, rate, load) in rows {
            let Some(rate) = rate else { continue };
            let load = load.map(|l| l.to_string()).unwrap_or_default();
            w.write_record([i.to_string(), class.to_string(), rate.to_string(), load])?;
        }
    }
    w.flush().map_err(|e| Error::io("<samples>", e))?;
    Ok(())
}

pub fn run_experiment(
    params: &SystemParams,
    catalog: &ContentCatalog,
    placement: &CachePlacement,
    options: &SimOptions,
    n_drops: u64,
    base_seed: u64,
) -> Result<SimulationSummary> {
    let eval = [Evaluation { params, placement }];
    Ok(run_experiments(params, catalog, &eval, options, n_drops, base_seed)?.remove(0))
}

/// D2D rate at the typical receiver when transmitters form a PPP of density
/// `lambda_d` (per m²), independent of the cache model.
pub fn run_d2d_experiment(
    params: &SystemParams,
    lambda_d: f64,
    options: &SimOptions,
    n_drops: u64,
    base_seed: u64,
) -> Result<Estimate> {
    if n_drops == 0 {
        return Err(Error::invalid("need at least one drop"));
    }
    let region = Region::new(params.area, options.boundary);
    let rates: Vec<f64> = (0..n_drops)
        .into_par_iter()
        .map(|i| {
            let mut rng = drop_rng(base_seed, i);
            let tx = sample_ppp(lambda_d, &region, &mut rng);
            let draws: Vec<Draw> = tx.iter().map(|_| sample_draw(&params.ue_antenna, &mut rng)).collect();
            let pair_distance = params.max_d2d_distance * rng.random::<f64>().sqrt();
            let fading: f64 = Exp1.sample(&mut rng);
            let real = DropRealization {
                drop: NetworkDrop::from_parts(region, Vec::new(), tx.clone(), crate::geometry::Pairing::unpaired(tx.len()), 0),
                typical: region.center(),
                links: Vec::new(),
                request_u: Vec::new(),
                cluster_u: Vec::new(),
                user_draws: draws,
                typical_cluster_u: 0.0,
                typical_pair_distance: pair_distance,
                typical_d2d_fading: fading,
            };
            real.d2d_rate(params, options.interference_mode, tx.iter().copied().zip(0..))
        })
        .collect();
    Ok(rates.into_iter().collect::<Moments>().estimate())
}

/// Delay with the simulated mean rates substituted, plus a delta-method 95%
/// half-width that treats the legs as independent.
pub fn estimate_delay(
    params: &SystemParams,
    summary: &SimulationSummary,
    probs: &RequestProbabilities,
) -> Result<(DelayBreakdown, f64)> {
    let rates = summary.rates();
    let delay = crate::analytic::content_delay(params, probs, &rates)?;
    let nu = params.content_size;
    let var = |p: f64, e: &Estimate| {
        if p == 0.0 || e.is_empty() {
            0.0
        } else {
            let d = p * nu / (e.mean * e.mean);
            (d * e.stderr()).powi(2)
        }
    };
    let total_var = var(probs.miss, &summary.backhaul)
        + var(probs.miss, &summary.nearest)
        + var(probs.cluster, &summary.cluster)
        + var(probs.d2d, &summary.d2d);
    Ok((delay, 1.96 * total_var.sqrt()))
}
