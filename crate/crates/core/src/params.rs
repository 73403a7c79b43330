//! System-wide physical and network parameters.
//!
//! Everything here is linear scale and SI units; dB/dBm and per-km² inputs
//! are converted once when the config is loaded.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::antenna::AntennaPattern;
use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Which closed form to use for the path-loss constant `C` in `β = C·r^(-α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathlossConvention {
    /// `C = λ² / (d0³ (4π)²)`, which the rate bounds are calibrated against.
    #[default]
    #[serde(rename = "d0_cubed")]
    D0Cubed,
    /// `C = λ² / (16π² d0^(2-α))`, dimensionally consistent with the dB model.
    Friis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Simulation region, m².
    pub area: f64,
    /// System bandwidth W, Hz.
    pub bandwidth: f64,
    /// Share φ of the bandwidth reserved for D2D links.
    pub d2d_fraction: f64,
    pub carrier_freq: f64,
    pub pathloss_exp: f64,
    /// SBS transmit power, W.
    pub sbs_tx_power: f64,
    /// User transmit power, W.
    pub ue_tx_power: f64,
    pub sbs_antenna: AntennaPattern,
    pub ue_antenna: AntennaPattern,
    /// Free-space reference distance d0, m. Also the guard radius.
    pub ref_distance: f64,
    /// Maximum D2D pair distance, m.
    pub max_d2d_distance: f64,
    /// SBS density, per m².
    pub sbs_density: f64,
    /// User density, per m².
    pub ue_density: f64,
    /// Fraction δ of users that belong to a D2D pair.
    pub paired_fraction: f64,
    /// Backhaul capacity per SBS, bit/s.
    pub backhaul_capacity: f64,
    /// Thermal noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Shape κ of the Gamma cell-area approximation.
    pub cell_area_shape: f64,
    /// Average content size ν, bits.
    pub content_size: f64,
    pub pathloss_convention: PathlossConvention,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn per_km2(density: f64) -> f64 {
    density * 1e-6
}

impl Default for SystemParams {
    /// Reference scenario with α = 1.6, λ_BS = 80/km² and λ_UE = 800/km².
    fn default() -> Self {
        SystemParams {
            area: 1e6,
            bandwidth: 2.16e9,
            d2d_fraction: 0.2,
            carrier_freq: 60e9,
            pathloss_exp: 1.6,
            sbs_tx_power: dbm_to_watts(30.0),
            ue_tx_power: dbm_to_watts(20.0),
            sbs_antenna: AntennaPattern::from_db(18.0, -2.0, 10.0, None, 0.3)
                .expect("default SBS antenna"),
            ue_antenna: AntennaPattern::from_db(9.0, -2.0, 10.0, None, 0.3)
                .expect("default UE antenna"),
            ref_distance: 1.0,
            max_d2d_distance: 10.0,
            sbs_density: per_km2(80.0),
            ue_density: per_km2(800.0),
            paired_fraction: 0.8,
            backhaul_capacity: 3e9,
            noise_psd: dbm_to_watts(-174.0),
            cell_area_shape: 3.5,
            content_size: 100e6,
            pathloss_convention: PathlossConvention::D0Cubed,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

impl SystemParams {
    /// Checks every invariant and returns the record unchanged.
    pub fn validate(self) -> Result<Self> {
        positive("area", self.area)?;
        positive("bandwidth", self.bandwidth)?;
        if !(self.d2d_fraction > 0.0 && self.d2d_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "d2d_fraction out of range (0, 1): {}",
                self.d2d_fraction
            )));
        }
        positive("carrier frequency", self.carrier_freq)?;
        positive("path-loss exponent", self.pathloss_exp)?;
        positive("SBS transmit power", self.sbs_tx_power)?;
        positive("UE transmit power", self.ue_tx_power)?;
        positive("reference distance", self.ref_distance)?;
        positive("max D2D distance", self.max_d2d_distance)?;
        if !(self.sbs_density > 0.0) {
            return Err(Error::invalid(format!(
                "SBS density must be positive, got {}",
                self.sbs_density
            )));
        }
        if !(self.ue_density > 0.0) {
            return Err(Error::invalid(format!(
                "UE density must be positive, got {}",
                self.ue_density
            )));
        }
        if !(0.0..=1.0).contains(&self.paired_fraction) {
            return Err(Error::invalid(format!(
                "paired_fraction out of range [0, 1]: {}",
                self.paired_fraction
            )));
        }
        positive("backhaul capacity", self.backhaul_capacity)?;
        positive("noise PSD", self.noise_psd)?;
        positive("cell-area shape kappa", self.cell_area_shape)?;
        positive("content size", self.content_size)?;
        if self.ref_distance >= self.max_d2d_distance {
            return Err(Error::invalid(format!(
                "reference distance {} m must be below the max D2D distance {} m",
                self.ref_distance, self.max_d2d_distance
            )));
        }
        self.sbs_antenna.validate()?;
        self.ue_antenna.validate()?;
        Ok(self)
    }

    /// Thermal noise over the full system bandwidth, σ² = W·N_o.
    pub fn noise_power(&self) -> f64 {
        self.bandwidth * self.noise_psd
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// Path-loss constant `C` of `β = C·r^(-α)`.
    pub fn pathloss_constant(&self) -> f64 {
        let lambda = self.wavelength();
        let four_pi_sq = (4.0 * PI).powi(2);
        match self.pathloss_convention {
            PathlossConvention::D0Cubed => lambda * lambda / (self.ref_distance.powi(3) * four_pi_sq),
            PathlossConvention::Friis => {
                lambda * lambda / (four_pi_sq * self.ref_distance.powf(2.0 - self.pathloss_exp))
            }
        }
    }

    /// Average path loss `β = C·r^(-α)`; undefined below the reference distance.
    pub fn average_pathloss(&self, r: f64) -> Result<f64> {
        if r < self.ref_distance {
            return Err(Error::BelowReferenceDistance { distance: r, d0: self.ref_distance });
        }
        Ok(self.pathloss_constant() * r.powf(-self.pathloss_exp))
    }

    /// Expected number of SBSs in the region, rounded.
    pub fn sbs_count(&self) -> usize {
        (self.sbs_density * self.area).round() as usize
    }

    /// λ_UE / λ_BS.
    pub fn users_per_sbs(&self) -> f64 {
        self.ue_density / self.sbs_density
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let p = SystemParams::default().validate().unwrap();
        assert_eq!(p.sbs_tx_power, 1.0);
        assert!((p.ue_tx_power - 0.1).abs() < 1e-15);
    }

    #[test]
    fn d2d_fraction_bounds() {
        let p = SystemParams { d2d_fraction: 0.0, ..Default::default() };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("d2d_fraction out of range"), "{err}");
        let p = SystemParams { d2d_fraction: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn negative_density_rejected() {
        let p = SystemParams { sbs_density: -1.0, ..Default::default() };
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("density must be positive"), "{err}");
    }

    #[test]
    fn reference_distance_below_d2d_range() {
        let p = SystemParams { ref_distance: 10.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn noise_power_table_defaults() {
        let p = SystemParams::default();
        // 2.16e9 Hz × 10^(-17.4) mW/Hz
        let want = 2.16e9 * 10f64.powf(-17.4) * 1e-3;
        assert!((p.noise_power() - want).abs() / want < 1e-12);
        assert!((p.noise_power() - 8.60e-12).abs() < 0.01e-12);
    }

    #[test]
    fn noise_power_unit_identity() {
        let p = SystemParams { bandwidth: 1.0, noise_psd: 1.0, ..Default::default() };
        assert_eq!(p.noise_power(), 1.0);
    }

    #[test]
    fn zero_bandwidth_caught_by_validate() {
        let p = SystemParams { bandwidth: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn pathloss_constant_60ghz() {
        let p = SystemParams::default();
        assert!((p.wavelength() - 4.9965e-3).abs() < 1e-7);
        let c = p.pathloss_constant();
        assert!((c - 1.581e-7).abs() < 0.001e-7, "{c}");
    }

    #[test]
    fn pathloss_constant_identity() {
        // λ_w = 4π, d0 = 1 → C = 1
        let p = SystemParams {
            carrier_freq: SPEED_OF_LIGHT / (4.0 * PI),
            ..Default::default()
        };
        assert!((p.pathloss_constant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pathloss_constant_cubic_in_d0() {
        let a = SystemParams { ref_distance: 1.0, ..Default::default() };
        let b = SystemParams { ref_distance: 2.0, ..Default::default() };
        assert!((a.pathloss_constant() / b.pathloss_constant() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn friis_convention_matches_db_model() {
        let p = SystemParams {
            ref_distance: 2.0,
            pathloss_convention: PathlossConvention::Friis,
            ..Default::default()
        };
        let r = 25.0;
        let pl_db = 20.0 * (4.0 * PI * p.ref_distance / p.wavelength()).log10()
            + 10.0 * p.pathloss_exp * (r / p.ref_distance).log10();
        let beta = p.average_pathloss(r).unwrap();
        assert!((beta - 10f64.powf(-pl_db / 10.0)).abs() / beta < 1e-12);
    }

    #[test]
    fn average_pathloss_examples() {
        let p = SystemParams { pathloss_exp: 2.0, ..Default::default() };
        let c = p.pathloss_constant();
        assert_eq!(p.average_pathloss(1.0).unwrap(), c);
        let b = p.average_pathloss(10.0).unwrap();
        assert!((b - 1.581e-9).abs() < 0.001e-9, "{b}");
        assert!(matches!(
            p.average_pathloss(0.5),
            Err(Error::BelowReferenceDistance { .. })
        ));
    }

    #[test]
    fn average_pathloss_monotone() {
        let p = SystemParams::default();
        let mut last = f64::INFINITY;
        for i in 0..100 {
            let r = 1.0 + i as f64 * 3.7;
            let b = p.average_pathloss(r).unwrap();
            assert!(b < last);
            last = b;
        }
        let lo = SystemParams { pathloss_exp: 1.4, ..Default::default() };
        let hi = SystemParams { pathloss_exp: 2.0, ..Default::default() };
        assert!(hi.average_pathloss(5.0).unwrap() < lo.average_pathloss(5.0).unwrap());
    }
}
