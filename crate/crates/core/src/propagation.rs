//! Path loss, antenna attenuation patterns, thermal noise and per-hop link budgets.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::db_to_linear;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Radio parameters shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    /// Carrier, GHz.
    pub frequency: f64,
    /// Hz.
    pub bandwidth: f64,
    /// K.
    pub temperature: f64,
    /// dB.
    pub noise_figure: f64,
    /// bit/s.
    pub max_rate: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            frequency: 2.4,
            bandwidth: 4e6,
            temperature: 295.0,
            noise_figure: 19.2,
            max_rate: 10e6,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        positive("frequency", self.frequency)?;
        positive("bandwidth", self.bandwidth)?;
        positive("temperature", self.temperature)?;
        positive("max_rate", self.max_rate)?;
        finite("noise_figure", self.noise_figure)
    }
}

/// Directional antenna unit. Beamwidth is used for both azimuth and elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaSpec {
    /// Boresight gain, dBi.
    pub gain: f64,
    /// Half-power beamwidth, degrees.
    pub beamwidth_3db: f64,
    /// Front-to-back ratio, dB.
    pub max_attenuation: f64,
    /// Element spacing in wavelengths.
    pub element_separation: f64,
}

impl Default for AntennaSpec {
    fn default() -> Self {
        Self::wearable()
    }
}

impl AntennaSpec {
    pub fn wearable() -> Self {
        Self {
            gain: 1.7,
            beamwidth_3db: 93.0,
            max_attenuation: 30.0,
            element_separation: 0.5,
        }
    }

    pub fn relay() -> Self {
        Self {
            gain: 8.0,
            ..Self::wearable()
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        finite("gain", self.gain)?;
        positive("beamwidth_3db", self.beamwidth_3db)?;
        positive("max_attenuation", self.max_attenuation)?;
        if !(self.element_separation.is_finite() && self.element_separation >= 0.0) {
            return Err(format!(
                "element_separation must be finite and >= 0, got {}",
                self.element_separation
            ));
        }
        Ok(())
    }
}

pub(crate) fn positive(name: &str, v: f64) -> std::result::Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} must be finite and > 0, got {v}"))
    }
}

pub(crate) fn finite(name: &str, v: f64) -> std::result::Result<(), String> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be finite, got {v}"))
    }
}

/// One hop's link budget. All powers in dBm, gains in dBi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power: f64,
    pub tx_gain: f64,
    pub rx_gain: f64,
    pub path_loss: f64,
    pub rx_power: f64,
    pub noise_power: f64,
    pub snr: f64,
    /// bit/s
    pub rate: f64,
}

/// Empirical on-body path loss in dB for distance `d` (m) and carrier `f` (GHz):
/// `24 log10(d) + 24 log10(f) + 38.93`.
pub fn path_loss(d: f64, f: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain {
            quantity: "distance",
            value: d,
            constraint: "must be > 0",
        });
    }
    if !(f > 0.0) {
        return Err(Error::Domain {
            quantity: "frequency",
            value: f,
            constraint: "must be > 0",
        });
    }
    Ok(24.0 * d.log10() + 24.0 * f.log10() + 38.93)
}

pub fn azimuth_attenuation(phi: f64, spec: &AntennaSpec) -> f64 {
    (12.0 * (phi / spec.beamwidth_3db).powi(2)).min(spec.max_attenuation)
}

pub fn elevation_attenuation(theta: f64, spec: &AntennaSpec) -> f64 {
    (12.0 * ((theta - 90.0) / spec.beamwidth_3db).powi(2)).min(spec.max_attenuation)
}

/// Combined unit pattern, clipped at the front-to-back ratio.
pub fn combined_attenuation(theta: f64, phi: f64, spec: &AntennaSpec) -> f64 {
    (azimuth_attenuation(phi, spec) + elevation_attenuation(theta, spec)).min(spec.max_attenuation)
}

/// Two-element pattern gain in dB: `Gmax - 20 log10 |1 - exp(-2πj δ sinθ)|`.
///
/// Where the array factor vanishes the magnitude term is skipped and `Gmax`
/// is returned.
pub fn element_gain(theta: f64, spec: &AntennaSpec) -> f64 {
    let phase = -2.0 * PI * spec.element_separation * theta.to_radians().sin();
    let magnitude = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, phase)).norm();
    if magnitude < 1e-12 {
        spec.gain
    } else {
        spec.gain - 20.0 * magnitude.log10()
    }
}

/// Thermal noise floor `kTB` plus noise figure, in dBm.
pub fn noise_power(config: &RadioConfig) -> f64 {
    let ktb_mw = BOLTZMANN * config.temperature * config.bandwidth / 1e-3;
    10.0 * ktb_mw.log10() + config.noise_figure
}

/// Shannon capacity of the SNR (dB), capped at `max_rate`.
pub fn shannon_rate(snr: f64, config: &RadioConfig) -> f64 {
    let capacity = config.bandwidth * db_to_linear(snr).ln_1p() / std::f64::consts::LN_2;
    capacity.min(config.max_rate)
}

pub fn link_budget(
    tx_power: f64,
    tx_gain: f64,
    rx_gain: f64,
    d: f64,
    config: &RadioConfig,
) -> Result<LinkBudget> {
    let path_loss = path_loss(d, config.frequency)?;
    let rx_power = tx_power + tx_gain + rx_gain - path_loss;
    let noise_power = noise_power(config);
    let snr = rx_power - noise_power;
    Ok(LinkBudget {
        tx_power,
        tx_gain,
        rx_gain,
        path_loss,
        rx_power,
        noise_power,
        snr,
        rate: shannon_rate(snr, config),
    })
}
