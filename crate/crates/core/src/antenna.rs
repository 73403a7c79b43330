//! Directional antenna pattern: Gaussian main lobe in dB, flat side lobe.

use std::f64::consts::{LN_10, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::db_to_linear;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    /// Boresight gain G_m, linear.
    pub main_gain: f64,
    /// Side-lobe gain G_s, linear.
    pub side_gain: f64,
    /// Half-power beamwidth ω_m, radians.
    pub halfpower_bw: f64,
    /// Main-lobe width θ_m, radians.
    pub mainlobe_bw: f64,
    /// Roll-off constant c.
    pub rolloff: f64,
}

/// Main-lobe width at which the roll-off reaches the side-lobe level.
pub fn continuity_mainlobe_width(main_db: f64, side_db: f64, halfpower_bw: f64, rolloff: f64) -> f64 {
    halfpower_bw * ((main_db - side_db) / (10.0 * rolloff)).sqrt()
}

/// ∫₀ˣ e^(-t²) dt, i.e. (√π/2)·erf(x).
pub fn gauss_integral(x: f64) -> f64 {
    0.5 * PI.sqrt() * special::erf(x)
}

fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

impl AntennaPattern {
    /// Builds a pattern from dB gains and degree widths. Without an explicit
    /// main-lobe width, the continuity width is used.
    pub fn from_db(
        main_db: f64,
        side_db: f64,
        halfpower_deg: f64,
        mainlobe_deg: Option<f64>,
        rolloff: f64,
    ) -> Result<Self> {
        let halfpower_bw = halfpower_deg.to_radians();
        let mainlobe_bw = match mainlobe_deg {
            Some(deg) => deg.to_radians(),
            None => continuity_mainlobe_width(main_db, side_db, halfpower_bw, rolloff),
        };
        AntennaPattern {
            main_gain: db_to_linear(main_db),
            side_gain: db_to_linear(side_db),
            halfpower_bw,
            mainlobe_bw,
            rolloff,
        }
        .validate()
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.side_gain > 0.0 && self.main_gain >= self.side_gain) {
            return Err(Error::invalid(format!(
                "antenna gains need G_m >= G_s > 0 (G_m = {}, G_s = {})",
                self.main_gain, self.side_gain
            )));
        }
        if !(self.halfpower_bw > 0.0
            && self.halfpower_bw <= self.mainlobe_bw
            && self.mainlobe_bw < 2.0 * PI)
        {
            return Err(Error::invalid(format!(
                "antenna widths need 0 < omega_m <= theta_m < 2pi (omega_m = {}, theta_m = {})",
                self.halfpower_bw, self.mainlobe_bw
            )));
        }
        if !(self.rolloff >= 0.0 && self.rolloff.is_finite()) {
            return Err(Error::invalid(format!("antenna roll-off must be >= 0, got {}", self.rolloff)));
        }
        Ok(self)
    }

    /// Gain at angle `theta` (radians) off boresight.
    pub fn gain(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta).abs();
        if t <= 0.5 * self.mainlobe_bw {
            let x = 2.0 * t / self.halfpower_bw;
            self.main_gain * 10f64.powf(-self.rolloff * x * x)
        } else {
            self.side_gain
        }
    }

    /// Mean gain over an angle uniform on (0, 2π].
    pub fn average_gain(&self) -> f64 {
        let side = self.side_gain * (1.0 - self.mainlobe_bw / (2.0 * PI));
        if self.rolloff == 0.0 {
            return self.main_gain * self.mainlobe_bw / (2.0 * PI) + side;
        }
        let k = (self.rolloff * LN_10).sqrt();
        let main = self.halfpower_bw * self.main_gain / (2.0 * PI * k)
            * gauss_integral(self.mainlobe_bw * k / self.halfpower_bw);
        main + side
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sbs() -> AntennaPattern {
        AntennaPattern::from_db(18.0, -2.0, 10.0, None, 0.3).unwrap()
    }

    /// Composite Simpson on [a, b] with n (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn boresight_and_side_lobe() {
        let p = sbs();
        assert_eq!(p.gain(0.0), p.main_gain);
        assert_eq!(p.gain(PI), p.side_gain);
        assert_eq!(p.gain(-PI), p.side_gain);
    }

    #[test]
    fn half_power_point() {
        let p = sbs();
        let g = p.gain(p.halfpower_bw / 2.0);
        assert!((g / p.main_gain - 10f64.powf(-0.3)).abs() < 1e-12);
        assert!((g / p.main_gain - 0.5012).abs() < 1e-4);
    }

    #[test]
    fn continuity_width_for_default_sbs() {
        let p = sbs();
        let ratio = p.mainlobe_bw / p.halfpower_bw;
        assert!((ratio - 2.582).abs() < 1e-3, "{ratio}");
        // No jump at the main-lobe edge.
        let edge = p.gain(p.mainlobe_bw / 2.0);
        assert!((edge - p.side_gain).abs() / p.side_gain < 1e-9);
    }

    #[test]
    fn explicit_mainlobe_width_overrides() {
        let p = AntennaPattern::from_db(18.0, -2.0, 10.0, Some(30.0), 0.3).unwrap();
        assert!((p.mainlobe_bw - 30f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn rejects_inverted_gains_and_widths() {
        assert!(AntennaPattern::from_db(-3.0, 0.0, 10.0, None, 0.3).is_err());
        assert!(AntennaPattern::from_db(18.0, -2.0, 10.0, Some(5.0), 0.3).is_err());
        assert!(AntennaPattern::from_db(18.0, -2.0, 10.0, Some(400.0), 0.3).is_err());
    }

    #[test]
    fn gain_is_even_and_periodic() {
        let p = sbs();
        for i in 0..50 {
            let t = i as f64 * 0.07;
            assert_eq!(p.gain(t), p.gain(-t));
            assert!((p.gain(t) - p.gain(t + 2.0 * PI)).abs() < 1e-9 * p.main_gain);
        }
    }

    #[test]
    fn gauss_integral_values() {
        assert_eq!(gauss_integral(0.0), 0.0);
        assert!((gauss_integral(50.0) - PI.sqrt() / 2.0).abs() < 1e-15);
        // ∫₀¹ e^(-t²) dt, extended-precision quadrature
        assert!((gauss_integral(1.0) - 0.746_824_132_812_427_0).abs() < 1e-14);
        assert!((gauss_integral(0.3) - 0.291_237_882_656_965_56).abs() < 1e-14);
        let quad = simpson(|t| (-t * t).exp(), 0.0, 2.5, 2000);
        assert!((gauss_integral(2.5) - quad).abs() < 1e-12);
    }

    #[test]
    fn isotropic_limit() {
        let p = AntennaPattern {
            main_gain: 2.0,
            side_gain: 2.0,
            halfpower_bw: 0.3,
            mainlobe_bw: 1.0,
            rolloff: 0.0,
        };
        assert!((p.average_gain() - 2.0).abs() < 1e-15);
        let nearly = AntennaPattern { rolloff: 1e-9, ..p };
        assert!((nearly.average_gain() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn average_gain_matches_quadrature_examples() {
        let mut cases = vec![sbs(), AntennaPattern::from_db(9.0, -2.0, 10.0, None, 0.3).unwrap()];
        cases.push(AntennaPattern {
            main_gain: 1.0,
            side_gain: 0.1,
            halfpower_bw: 0.4,
            mainlobe_bw: 0.4,
            rolloff: 0.3,
        });
        for p in cases {
            let edge = p.mainlobe_bw / 2.0;
            // Side lobe is flat; the main lobe may jump at its edge.
            let quad = simpson(|t| p.gain(t) / PI, 0.0, edge, 20_000) + p.side_gain * (PI - edge) / PI;
            let closed = p.average_gain();
            assert!(((closed - quad) / quad).abs() < 1e-9, "{closed} vs {quad}");
            assert!(p.side_gain <= closed && closed <= p.main_gain);
        }
        // Default SBS pattern, reference quadrature value.
        assert!((sbs().average_gain() - 2.450_054_406_004_572).abs() < 1e-9);
    }
}
