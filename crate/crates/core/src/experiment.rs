//! Named parameter sweeps, the bound-validation report and the optimal
//! cluster-size table, all emitted as CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{self, AnalyticPoint, DelayBreakdown};
use crate::config::{Scenario, ScenarioConfig};
use crate::error::{Error, Result};
use crate::montecarlo::{self, Evaluation, SimulationSummary};
use crate::popularity::{build_placement, CacheConfig, Policy, RequestProbabilities};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptVariable {
    #[serde(rename = "xi")]
    Xi,
    #[serde(rename = "lambda_BS")]
    LambdaBs,
    #[serde(rename = "lambda_UE")]
    LambdaUe,
    K,
    B,
    #[serde(rename = "C_s")]
    Cs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    fn expand(self) -> &'static [Mode] {
        match self {
            Mode::Analytic => &[Mode::Analytic],
            Mode::Simulate => &[Mode::Simulate],
            Mode::Both => &[Mode::Analytic, Mode::Simulate],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Both => "both",
        }
    }
}

/// One sweep. `scenario` replaces the base configuration when present;
/// `cluster_size` then pins K on top of whichever base is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub swept_variable: SweptVariable,
    pub values: Vec<f64>,
    pub policies: Vec<Policy>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_drops: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub cluster_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioConfig>,
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
}

fn make(
    name: &str,
    var: SweptVariable,
    values: Vec<f64>,
    policies: &[Policy],
    mode: Mode,
    cluster_size: Option<usize>,
) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        swept_variable: var,
        values,
        policies: policies.to_vec(),
        mode,
        n_drops: None,
        seed: None,
        cluster_size,
        scenario: None,
    }
}

/// Built-in sweeps, one per figure dataset.
pub fn presets() -> Vec<ExperimentSpec> {
    use Policy::{Dcec, Mpc};
    use SweptVariable::*;
    let densities = vec![80.0, 160.0, 240.0, 320.0, 400.0];
    vec![
        make("offloading_vs_xi", Xi, range(0.1, 1.2, 0.1), &[Dcec, Mpc], Mode::Analytic, None),
        make("offloading_vs_cluster_size", K, range(1.0, 8.0, 1.0), &[Dcec], Mode::Analytic, None),
        make(
            "offloading_vs_sbs_capacity",
            Cs,
            range(100.0, 800.0, 100.0),
            &[Dcec, Mpc],
            Mode::Analytic,
            None,
        ),
        make("rate_vs_density", LambdaBs, densities.clone(), &[Dcec], Mode::Both, None),
        make(
            "rate_vs_ue_density",
            LambdaUe,
            vec![250.0, 500.0, 1000.0, 2000.0, 4000.0, 4800.0],
            &[Dcec],
            Mode::Both,
            None,
        ),
        make("delay_vs_xi", Xi, range(0.1, 1.2, 0.1), &[Dcec, Mpc], Mode::Analytic, Some(4)),
        make("delay_vs_density", LambdaBs, densities, &[Dcec, Mpc], Mode::Both, Some(4)),
        make("delay_vs_cluster_size", K, range(1.0, 8.0, 1.0), &[Dcec], Mode::Analytic, None),
        make(
            "delay_vs_backhaul",
            B,
            vec![1e9, 2e9, 3e9, 4e9, 8e9, 16e9],
            &[Dcec, Mpc],
            Mode::Analytic,
            Some(4),
        ),
    ]
}

pub fn preset(name: &str) -> Option<ExperimentSpec> {
    presets().into_iter().find(|p| p.name == name)
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let ident = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !ident {
            return Err(Error::Config(format!("sweep name `{}` is not an identifier", self.name)));
        }
        if self.values.is_empty() {
            return Err(Error::Config(format!("sweep `{}` has no values", self.name)));
        }
        if self.policies.is_empty() {
            return Err(Error::Config(format!("sweep `{}` has no policies", self.name)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("sweep `{}` has a non-finite value", self.name)));
        }
        if matches!(self.swept_variable, SweptVariable::K | SweptVariable::Cs)
            && self.values.iter().any(|v| *v < 0.0 || v.fract() != 0.0)
        {
            return Err(Error::Config(format!(
                "sweep `{}`: K and C_s take non-negative integers",
                self.name
            )));
        }
        Ok(())
    }

    /// Base configuration with the swept variable set to `value`. Density
    /// sweeps keep λ_UE/λ_BS fixed unless λ_UE is pinned in the base.
    pub fn apply(&self, base: &ScenarioConfig, value: f64) -> Result<Scenario> {
        let mut cfg = base.clone();
        cfg.popularity.policies = self.policies.clone();
        if let Some(k) = self.cluster_size {
            cfg.popularity.cluster_size = k;
        }
        match self.swept_variable {
            SweptVariable::Xi => cfg.popularity.skewness = value,
            SweptVariable::LambdaBs => cfg.core.sbs_density_per_km2 = value,
            SweptVariable::LambdaUe => cfg.core.ue_density_per_km2 = Some(value),
            SweptVariable::K => cfg.popularity.cluster_size = value as usize,
            SweptVariable::B => cfg.core.backhaul_capacity_bps = value,
            SweptVariable::Cs => cfg.popularity.sbs_capacity = value as usize,
        }
        cfg.to_scenario()
    }
}

/// One CSV row. Rates in bit/s, delays in seconds; `ci_*` are 95% half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub offloading_gain: f64,
    pub p_miss: f64,
    pub rates: analytic::RateBounds,
    pub delay: DelayBreakdown,
    pub ci: Option<RowCi>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowCi {
    pub backhaul: f64,
    pub nearest: f64,
    pub cluster: f64,
    pub d2d: Option<f64>,
    pub delay: f64,
}

pub const SWEEP_HEADER: [&str; 17] = [
    "sweep_value", "F", "P_m", "R_B", "R_N", "R_C", "R_D", "D_total", "D_backhaul", "D_nearest",
    "D_cluster", "D_d2d", "ci_R_B", "ci_R_N", "ci_R_C", "ci_R_D", "ci_D_total",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let ci = self.ci;
        vec![
            num(self.sweep_value),
            num(self.offloading_gain),
            num(self.p_miss),
            num(self.rates.backhaul),
            num(self.rates.nearest),
            num(self.rates.cluster),
            opt(self.rates.d2d),
            num(self.delay.total),
            num(self.delay.backhaul),
            num(self.delay.nearest),
            num(self.delay.cluster),
            num(self.delay.d2d),
            opt(ci.map(|c| c.backhaul)),
            opt(ci.map(|c| c.nearest)),
            opt(ci.map(|c| c.cluster)),
            opt(ci.and_then(|c| c.d2d)),
            opt(ci.map(|c| c.delay)),
        ]
    }

    pub fn from_analytic(value: f64, point: &AnalyticPoint) -> Self {
        SweepRow {
            sweep_value: value,
            offloading_gain: point.offloading_gain(),
            p_miss: point.probs.miss,
            rates: point.rates,
            delay: point.delay,
            ci: None,
        }
    }

    pub fn from_simulation(
        value: f64,
        scenario: &Scenario,
        probs: &RequestProbabilities,
        summary: &SimulationSummary,
    ) -> Result<Self> {
        let (delay, delay_ci) = montecarlo::estimate_delay(&scenario.params, summary, probs)?;
        Ok(SweepRow {
            sweep_value: value,
            offloading_gain: probs.offloading_gain(),
            p_miss: probs.miss,
            rates: summary.rates(),
            delay,
            ci: Some(RowCi {
                backhaul: summary.backhaul.ci_half_width(),
                nearest: summary.nearest.ci_half_width(),
                cluster: summary.cluster.ci_half_width(),
                d2d: (!summary.d2d.is_empty()).then(|| summary.d2d.ci_half_width()),
                delay: delay_ci,
            }),
        })
    }
}

/// Writes rows as LF-terminated CSV.
pub fn write_csv<W: std::io::Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), header, rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Simulates one policy of a scenario.
pub fn simulate_scenario(
    scenario: &Scenario,
    policy: Policy,
    n_drops: u64,
    seed: u64,
) -> Result<(RequestProbabilities, SimulationSummary)> {
    let catalog = scenario.catalog()?;
    let placement = build_placement(&catalog, &scenario.cache, policy)?;
    let probs = policy.request_probabilities(&catalog, &scenario.cache, scenario.params.paired_fraction)?;
    let summary =
        montecarlo::run_experiment(&scenario.params, &catalog, &placement, &scenario.sim, n_drops, seed)?;
    Ok((probs, summary))
}

/// Rows of one (policy, mode) dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDataset {
    pub policy: Policy,
    pub mode: Mode,
    pub rows: Vec<SweepRow>,
}

impl SweepDataset {
    pub fn file_name(&self, sweep: &str) -> String {
        format!("{sweep}_{}_{}.csv", self.policy.name().to_ascii_lowercase(), self.mode.name())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        let rows: Vec<Vec<String>> = self.rows.iter().map(SweepRow::record).collect();
        write_csv(&mut buf, &SWEEP_HEADER, &rows).expect("in-memory CSV");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Runs every (policy, mode) combination of a sweep.
pub fn run(spec: &ExperimentSpec, base: &ScenarioConfig, n_drops: Option<u64>, seed: Option<u64>) -> Result<Vec<SweepDataset>> {
    spec.validate()?;
    let base = spec.scenario.as_ref().unwrap_or(base);
    let mut out = Vec::new();
    for &policy in &spec.policies {
        for &mode in spec.mode.expand() {
            let mut rows = Vec::with_capacity(spec.values.len());
            for &value in &spec.values {
                let scenario = spec.apply(base, value)?;
                let catalog = scenario.catalog()?;
                match mode {
                    Mode::Analytic => {
                        let point = analytic::evaluate(&scenario.params, &catalog, &scenario.cache, policy)?;
                        rows.push(SweepRow::from_analytic(value, &point));
                    }
                    _ => {
                        let drops = n_drops.or(spec.n_drops).unwrap_or(scenario.drops);
                        let seed = seed.or(spec.seed).unwrap_or(scenario.seed);
                        log::info!("{}: {policy} {} = {value}, {drops} drops", spec.name, var_name(spec.swept_variable));
                        let (probs, summary) = simulate_scenario(&scenario, policy, drops, seed)?;
                        rows.push(SweepRow::from_simulation(value, &scenario, &probs, &summary)?);
                    }
                }
            }
            out.push(SweepDataset { policy, mode, rows });
        }
    }
    Ok(out)
}

fn var_name(v: SweptVariable) -> &'static str {
    match v {
        SweptVariable::Xi => "xi",
        SweptVariable::LambdaBs => "lambda_BS",
        SweptVariable::LambdaUe => "lambda_UE",
        SweptVariable::K => "K",
        SweptVariable::B => "B",
        SweptVariable::Cs => "C_s",
    }
}

/// Writes each dataset to `dir` and returns the paths.
pub fn write_datasets(dir: &Path, sweep: &str, datasets: &[SweepDataset]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for d in datasets {
        let path = dir.join(d.file_name(sweep));
        std::fs::write(&path, d.to_csv_string()).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

/// Points of the bound-validation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundGrid {
    pub alphas: Vec<f64>,
    /// SBS densities, per km².
    pub densities: Vec<f64>,
    pub cluster_sizes: Vec<usize>,
}

impl Default for BoundGrid {
    fn default() -> Self {
        BoundGrid {
            alphas: vec![1.4, 1.6, 2.0],
            densities: vec![80.0, 160.0, 240.0, 320.0, 400.0],
            cluster_sizes: vec![1, 2, 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RateClass {
    #[serde(rename = "R_N")]
    Nearest,
    #[serde(rename = "R_C")]
    Cluster,
    #[serde(rename = "R_D")]
    D2d,
}

impl RateClass {
    pub fn name(self) -> &'static str {
        match self {
            RateClass::Nearest => "R_N",
            RateClass::Cluster => "R_C",
            RateClass::D2d => "R_D",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub alpha: f64,
    pub lambda_bs: f64,
    pub cluster_size: usize,
    pub class: RateClass,
    pub bound: f64,
    pub sim_mean: f64,
    pub sim_stderr: f64,
    /// (sim − bound) / sim, percent.
    pub gap_pct: f64,
}

impl BoundRow {
    /// The bound may exceed the simulated mean by at most two standard errors.
    pub fn holds(&self) -> bool {
        self.bound <= self.sim_mean + 2.0 * self.sim_stderr
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            num(self.alpha),
            num(self.lambda_bs),
            self.cluster_size.to_string(),
            self.class.name().to_string(),
            num(self.bound),
            num(self.sim_mean),
            num(self.sim_stderr),
            num(1.96 * self.sim_stderr),
            num(self.gap_pct),
            if self.holds() { "pass" } else { "FAIL" }.to_string(),
        ]
    }
}

pub const BOUND_HEADER: [&str; 10] =
    ["alpha", "lambda_BS", "K", "class", "bound", "sim_mean", "sim_stderr", "ci", "gap_pct", "status"];

/// Analytic bound against simulated mean for every grid point and rate class
/// under DCEC. Drops are shared across α and K at each density.
pub fn validate_bounds(base: &ScenarioConfig, grid: &BoundGrid, n_drops: u64, seed: u64) -> Result<Vec<BoundRow>> {
    if grid.alphas.is_empty() || grid.densities.is_empty() || grid.cluster_sizes.is_empty() {
        return Err(Error::Config("bound grid needs at least one alpha, density and K".into()));
    }
    let mut rows = Vec::new();
    for &density in &grid.densities {
        let mut cfg = base.clone();
        cfg.core.sbs_density_per_km2 = density;
        cfg.popularity.policies = vec![Policy::Dcec];
        let scenario = cfg.to_scenario()?;
        let catalog = scenario.catalog()?;
        let param_set: Vec<_> = grid
            .alphas
            .iter()
            .map(|&a| crate::params::SystemParams { pathloss_exp: a, ..scenario.params.clone() }.validate())
            .collect::<Result<_>>()?;
        let placements: Vec<_> = grid
            .cluster_sizes
            .iter()
            .map(|&k| build_placement(&catalog, &CacheConfig { cluster_size: k, ..scenario.cache }, Policy::Dcec))
            .collect::<Result<_>>()?;
        let mut evals = Vec::new();
        for p in &param_set {
            for pl in &placements {
                evals.push(Evaluation { params: p, placement: pl });
            }
        }
        log::info!("validate-bounds: lambda_BS = {density}, {} evaluations, {n_drops} drops", evals.len());
        let sums = montecarlo::run_experiments(&scenario.params, &catalog, &evals, &scenario.sim, n_drops, seed)?;
        for (e, s) in evals.iter().zip(&sums) {
            let a = analytic::evaluate(e.params, &catalog, &e.placement.cache, Policy::Dcec)?;
            let classes = [
                (RateClass::Nearest, Some(a.rates.nearest), &s.nearest),
                (RateClass::Cluster, Some(a.rates.cluster), &s.cluster),
                (RateClass::D2d, a.rates.d2d, &s.d2d),
            ];
            for (class, bound, est) in classes {
                let (Some(bound), false) = (bound, est.is_empty()) else { continue };
                rows.push(BoundRow {
                    alpha: e.params.pathloss_exp,
                    lambda_bs: density,
                    cluster_size: e.placement.cache.cluster_size,
                    class,
                    bound,
                    sim_mean: est.mean,
                    sim_stderr: est.stderr(),
                    gap_pct: 100.0 * (est.mean - bound) / est.mean,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalKRow {
    pub backhaul_capacity: f64,
    pub k_star: usize,
    pub delay: f64,
}

pub const OPTIMAL_K_HEADER: [&str; 3] = ["B", "K_star", "D_total"];

impl OptimalKRow {
    pub fn record(&self) -> Vec<String> {
        vec![num(self.backhaul_capacity), self.k_star.to_string(), num(self.delay)]
    }
}

/// Delay-minimizing cluster size for each backhaul capacity (bit/s).
pub fn optimal_k_report(base: &ScenarioConfig, k_range: &[usize], b_values: &[f64]) -> Result<Vec<OptimalKRow>> {
    if k_range.is_empty() || b_values.is_empty() {
        return Err(Error::Config("optimal-k needs a K range and at least one B".into()));
    }
    b_values
        .iter()
        .map(|&b| {
            let mut cfg = base.clone();
            cfg.core.backhaul_capacity_bps = b;
            cfg.popularity.policies = vec![Policy::Dcec];
            cfg.popularity.cluster_size = k_range[0];
            let s = cfg.to_scenario()?;
            let (k_star, d) =
                analytic::optimal_cluster_size(&s.params, &s.catalog()?, &s.cache, k_range.iter().copied())?;
            Ok(OptimalKRow { backhaul_capacity: b, k_star, delay: d.total })
        })
        .collect()
}

/// Fixed-width text table of a bound report.
pub fn format_bound_report(rows: &[BoundRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>9} {:>3} {:>5} {:>12} {:>12} {:>10} {:>8}  status",
        "alpha", "lambda_BS", "K", "class", "bound", "sim_mean", "ci", "gap_%"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>5} {:>9} {:>3} {:>5} {:>12.4e} {:>12.4e} {:>10.2e} {:>8.2}  {}",
            r.alpha,
            r.lambda_bs,
            r.cluster_size,
            r.class.name(),
            r.bound,
            r.sim_mean,
            1.96 * r.sim_stderr,
            r.gap_pct,
            if r.holds() { "pass" } else { "FAIL" }
        );
    }
    s
}
