//! JSON scenario configuration in user-facing units (dBm, per km², degrees).
//!
//! Every section rejects unknown keys. Field names follow the code; the
//! usual symbol names (`alpha`, `lambda_BS`, `P_B_dBm`, …) are accepted as aliases.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::antenna::AntennaPattern;
use crate::error::{Error, Result};
use crate::geometry::Boundary;
use crate::montecarlo::{InterferenceMode, SimOptions};
use crate::params::{dbm_to_watts, per_km2, PathlossConvention, SystemParams};
use crate::popularity::{CacheConfig, ContentCatalog, Policy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoreSection {
    #[serde(alias = "area")]
    pub area_m2: f64,
    #[serde(alias = "W")]
    pub bandwidth_hz: f64,
    #[serde(alias = "phi")]
    pub d2d_fraction: f64,
    #[serde(alias = "f")]
    pub carrier_freq_hz: f64,
    #[serde(alias = "alpha")]
    pub pathloss_exp: f64,
    #[serde(alias = "P_B_dBm")]
    pub sbs_tx_power_dbm: f64,
    #[serde(alias = "P_U_dBm")]
    pub ue_tx_power_dbm: f64,
    #[serde(alias = "d0")]
    pub ref_distance_m: f64,
    #[serde(alias = "r_d_max")]
    pub max_d2d_distance_m: f64,
    #[serde(alias = "lambda_BS")]
    pub sbs_density_per_km2: f64,
    /// Defaults to `users_per_sbs × sbs_density_per_km2`.
    #[serde(alias = "lambda_UE")]
    pub ue_density_per_km2: Option<f64>,
    pub users_per_sbs: f64,
    #[serde(alias = "delta")]
    pub paired_fraction: f64,
    #[serde(alias = "B")]
    pub backhaul_capacity_bps: f64,
    #[serde(alias = "N_o_dBm_Hz")]
    pub noise_psd_dbm_hz: f64,
    #[serde(alias = "kappa")]
    pub cell_area_shape: f64,
    #[serde(alias = "nu")]
    pub content_size_bits: f64,
    #[serde(alias = "pathloss_constant_convention")]
    pub pathloss_convention: PathlossConvention,
}

impl Default for CoreSection {
    fn default() -> Self {
        CoreSection {
            area_m2: 1e6,
            bandwidth_hz: 2.16e9,
            d2d_fraction: 0.2,
            carrier_freq_hz: 60e9,
            pathloss_exp: 1.6,
            sbs_tx_power_dbm: 30.0,
            ue_tx_power_dbm: 20.0,
            ref_distance_m: 1.0,
            max_d2d_distance_m: 10.0,
            sbs_density_per_km2: 80.0,
            ue_density_per_km2: None,
            users_per_sbs: 10.0,
            paired_fraction: 0.8,
            backhaul_capacity_bps: 3e9,
            noise_psd_dbm_hz: -174.0,
            cell_area_shape: 3.5,
            content_size_bits: 100e6,
            pathloss_convention: PathlossConvention::D0Cubed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    #[serde(alias = "G_m_dB")]
    pub main_gain_db: f64,
    #[serde(alias = "G_s_dB")]
    pub side_gain_db: f64,
    #[serde(alias = "omega_m_deg")]
    pub halfpower_deg: f64,
    /// Omitted: the width where the main lobe meets the side-lobe level.
    #[serde(alias = "theta_m_deg", default)]
    pub mainlobe_deg: Option<f64>,
    #[serde(alias = "c", default = "default_rolloff")]
    pub rolloff: f64,
}

fn default_rolloff() -> f64 {
    0.3
}

impl PatternConfig {
    pub fn to_pattern(&self) -> Result<AntennaPattern> {
        AntennaPattern::from_db(
            self.main_gain_db,
            self.side_gain_db,
            self.halfpower_deg,
            self.mainlobe_deg,
            self.rolloff,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSection {
    pub sbs: PatternConfig,
    pub ue: PatternConfig,
}

impl Default for AntennaSection {
    fn default() -> Self {
        AntennaSection {
            sbs: PatternConfig {
                main_gain_db: 18.0,
                side_gain_db: -2.0,
                halfpower_deg: 10.0,
                mainlobe_deg: None,
                rolloff: 0.3,
            },
            ue: PatternConfig {
                main_gain_db: 9.0,
                side_gain_db: -2.0,
                halfpower_deg: 10.0,
                mainlobe_deg: None,
                rolloff: 0.3,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopularitySection {
    #[serde(alias = "F")]
    pub catalog_size: usize,
    #[serde(alias = "xi")]
    pub skewness: f64,
    #[serde(alias = "C_u")]
    pub user_capacity: usize,
    #[serde(alias = "C_s")]
    pub sbs_capacity: usize,
    #[serde(alias = "K")]
    pub cluster_size: usize,
    pub policies: Vec<Policy>,
}

impl Default for PopularitySection {
    fn default() -> Self {
        PopularitySection {
            catalog_size: 2000,
            skewness: 0.56,
            user_capacity: 150,
            sbs_capacity: 200,
            cluster_size: 2,
            policies: vec![Policy::Dcec, Policy::Mpc],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub drops: u64,
    pub seed: u64,
    pub interference_mode: InterferenceMode,
    pub boundary: Boundary,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            drops: 10_000,
            seed: 1,
            interference_mode: InterferenceMode::default(),
            boundary: Boundary::default(),
        }
    }
}

/// Whole configuration file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub core: CoreSection,
    pub antenna: AntennaSection,
    pub popularity: PopularitySection,
    pub montecarlo: MonteCarloSection,
}

/// Validated, SI-unit form of a [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub params: SystemParams,
    pub catalog_size: usize,
    pub skewness: f64,
    pub cache: CacheConfig,
    pub policies: Vec<Policy>,
    pub drops: u64,
    pub seed: u64,
    pub sim: SimOptions,
}

impl Default for Scenario {
    fn default() -> Self {
        ScenarioConfig::default().to_scenario().expect("default scenario is valid")
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let c = &self.core;
        let ue_per_km2 = c
            .ue_density_per_km2
            .unwrap_or(c.users_per_sbs * c.sbs_density_per_km2);
        let params = SystemParams {
            area: c.area_m2,
            bandwidth: c.bandwidth_hz,
            d2d_fraction: c.d2d_fraction,
            carrier_freq: c.carrier_freq_hz,
            pathloss_exp: c.pathloss_exp,
            sbs_tx_power: dbm_to_watts(c.sbs_tx_power_dbm),
            ue_tx_power: dbm_to_watts(c.ue_tx_power_dbm),
            sbs_antenna: self.antenna.sbs.to_pattern()?,
            ue_antenna: self.antenna.ue.to_pattern()?,
            ref_distance: c.ref_distance_m,
            max_d2d_distance: c.max_d2d_distance_m,
            sbs_density: per_km2(c.sbs_density_per_km2),
            ue_density: per_km2(ue_per_km2),
            paired_fraction: c.paired_fraction,
            backhaul_capacity: c.backhaul_capacity_bps,
            noise_psd: dbm_to_watts(c.noise_psd_dbm_hz),
            cell_area_shape: c.cell_area_shape,
            content_size: c.content_size_bits,
            pathloss_convention: c.pathloss_convention,
        }
        .validate()?;
        let p = &self.popularity;
        if p.policies.is_empty() {
            return Err(Error::Config("popularity.policies must not be empty".into()));
        }
        let scenario = Scenario {
            params,
            catalog_size: p.catalog_size,
            skewness: p.skewness,
            cache: CacheConfig {
                user_capacity: p.user_capacity,
                sbs_capacity: p.sbs_capacity,
                cluster_size: p.cluster_size,
            },
            policies: p.policies.clone(),
            drops: self.montecarlo.drops,
            seed: self.montecarlo.seed,
            sim: SimOptions {
                interference_mode: self.montecarlo.interference_mode,
                boundary: self.montecarlo.boundary,
            },
        };
        let catalog = scenario.catalog()?;
        for &policy in &scenario.policies {
            scenario.cache.check(&catalog, policy)?;
        }
        Ok(scenario)
    }
}

impl Scenario {
    pub fn catalog(&self) -> Result<ContentCatalog> {
        ContentCatalog::zipf(self.catalog_size, self.skewness)
    }
}
