//! Power density, air-skin transmission, point SAR, multi-emitter aggregation
//! and regulatory compliance.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, distance, NodePosition};
use crate::propagation::{combined_attenuation, positive, AntennaSpec, RadioConfig};
use crate::units::{db_to_linear, dbm_to_watts};

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Elevation used for in-plane leakage.
const IN_PLANE_ELEVATION: f64 = 90.0;

/// Dielectric and bulk properties of skin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TissueProperties {
    /// Relative permittivity (real part).
    pub permittivity: f64,
    /// S/m.
    pub conductivity: f64,
    /// m.
    pub penetration_depth: f64,
    /// kg/m³.
    pub mass_density: f64,
}

impl Default for TissueProperties {
    fn default() -> Self {
        Self {
            permittivity: 39.2,
            conductivity: 1.8,
            penetration_depth: 0.113,
            mass_density: 1100.0,
        }
    }
}

impl TissueProperties {
    pub fn validate(&self) -> std::result::Result<(), String> {
        positive("permittivity", self.permittivity)?;
        positive("conductivity", self.conductivity)?;
        positive("penetration_depth", self.penetration_depth)?;
        positive("mass_density", self.mass_density)
    }

    /// SAR per unit PD, `2(1-R²)/(δρ)`, in (W/kg)/(W/m²).
    pub fn sar_per_pd(&self, frequency_ghz: f64) -> f64 {
        let r = reflection_coefficient(self, frequency_ghz);
        2.0 * (1.0 - r * r) / (self.penetration_depth * self.mass_density)
    }
}

/// Regulatory thresholds. SAR limits are applied to point SAR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExposureLimits {
    /// W/kg, FCC 1 g average.
    pub sar_head_fcc: f64,
    /// W/kg, ICNIRP 10 g average.
    pub sar_head_icnirp: f64,
    /// W/kg.
    pub sar_limb: f64,
    /// W/m².
    pub pd_limit: f64,
}

impl Default for ExposureLimits {
    fn default() -> Self {
        Self {
            sar_head_fcc: 1.6,
            sar_head_icnirp: 2.0,
            sar_limb: 4.0,
            pd_limit: 10.0,
        }
    }
}

impl ExposureLimits {
    pub fn validate(&self) -> std::result::Result<(), String> {
        positive("sar_head_fcc", self.sar_head_fcc)?;
        positive("sar_head_icnirp", self.sar_head_icnirp)?;
        positive("sar_limb", self.sar_limb)?;
        positive("pd_limit", self.pd_limit)
    }
}

/// A radiating node steered at `boresight_target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub position: NodePosition,
    /// dBm
    pub tx_power: f64,
    pub antenna: AntennaSpec,
    pub boresight_target: NodePosition,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureSample {
    /// W/m²
    pub pd: f64,
    /// W/kg
    pub sar: f64,
    pub compliant_sar: bool,
    pub compliant_pd: bool,
}

impl ExposureSample {
    pub fn new(pd: f64, sar: f64, limits: &ExposureLimits) -> Self {
        Self {
            pd,
            sar,
            compliant_sar: sar <= limits.sar_head_fcc,
            compliant_pd: pd <= limits.pd_limit,
        }
    }

    pub fn is_compliant(&self) -> bool {
        self.compliant_sar && self.compliant_pd
    }
}

/// Far-field power density `Pt·Gt / (4π d^α)` in W/m².
pub fn power_density(tx_power_w: f64, effective_gain: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain {
            quantity: "distance",
            value: d,
            constraint: "power density is singular at d <= 0",
        });
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain {
            quantity: "alpha",
            value: alpha,
            constraint: "must be > 0",
        });
    }
    if !(tx_power_w >= 0.0) {
        return Err(Error::Domain {
            quantity: "tx_power",
            value: tx_power_w,
            constraint: "must be >= 0 W",
        });
    }
    if !(effective_gain >= 0.0) {
        return Err(Error::Domain {
            quantity: "effective_gain",
            value: effective_gain,
            constraint: "must be >= 0",
        });
    }
    Ok(tx_power_w * effective_gain / (4.0 * PI * d.powf(alpha)))
}

/// Normal-incidence reflection magnitude at an air/tissue boundary,
/// using the complex permittivity `ε' - jσ/(ωε₀)`.
pub fn reflection_coefficient(tissue: &TissueProperties, frequency_ghz: f64) -> f64 {
    let omega = 2.0 * PI * frequency_ghz * 1e9;
    let loss = tissue.conductivity / (omega * VACUUM_PERMITTIVITY);
    let n = Complex64::new(tissue.permittivity, -loss).sqrt();
    let one = Complex64::new(1.0, 0.0);
    ((one - n) / (one + n)).norm()
}

/// Point SAR at the air/skin boundary, `2·PD·(1-R²)/(δρ)`.
pub fn sar_from_pd(pd: f64, reflection: f64, tissue: &TissueProperties) -> f64 {
    2.0 * pd * (1.0 - reflection * reflection) / (tissue.penetration_depth * tissue.mass_density)
}

/// Linear gain of `emitter` in the direction of `toward`, after in-plane
/// pattern attenuation relative to its boresight.
pub fn leaked_gain(emitter: &Emitter, toward: NodePosition) -> Result<f64> {
    let phi = angle_between(emitter.position, emitter.boresight_target, toward)?;
    let attenuation = combined_attenuation(IN_PLANE_ELEVATION, phi, &emitter.antenna);
    Ok(db_to_linear(emitter.antenna.gain - attenuation))
}

/// Power density from one emitter at `point`, W/m².
pub fn emitter_pd(emitter: &Emitter, point: NodePosition, alpha: f64) -> Result<f64> {
    let gain = leaked_gain(emitter, point)?;
    power_density(
        dbm_to_watts(emitter.tx_power),
        gain,
        distance(emitter.position, point),
        alpha,
    )
}

/// Worst-case simultaneous exposure at `point`: PD summed over all emitters
/// in list order, then converted to SAR.
pub fn aggregate_exposure(
    point: NodePosition,
    emitters: &[Emitter],
    tissue: &TissueProperties,
    limits: &ExposureLimits,
    config: &RadioConfig,
    alpha: f64,
) -> Result<ExposureSample> {
    let mut pd = 0.0;
    for (index, e) in emitters.iter().enumerate() {
        if e.position == point {
            return Err(Error::CoLocated { index, point });
        }
        pd += emitter_pd(e, point, alpha)?;
    }
    let r = reflection_coefficient(tissue, config.frequency);
    Ok(ExposureSample::new(pd, sar_from_pd(pd, r, tissue), limits))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count();
        if n == 0 {
            return Self::default();
        }
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        let mean = if min == max { min } else { sum / n as f64 };
        Self { min, max, mean }
    }
}

/// Count of samples strictly above one limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violations {
    pub limit: f64,
    pub count: usize,
    pub fraction: f64,
}

impl Violations {
    fn count(values: &[f64], limit: f64) -> Self {
        let count = values.iter().filter(|v| **v > limit).count();
        Self {
            limit,
            count,
            fraction: violation_fraction(count, values.len()),
        }
    }
}

pub(crate) fn violation_fraction(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceReport {
    pub samples: usize,
    pub empty: bool,
    pub sar_fcc: Violations,
    pub sar_icnirp: Violations,
    pub sar_limb: Violations,
    pub pd: Violations,
    pub pd_stats: Stats,
    pub sar_stats: Stats,
    /// Cell with the highest SAR, when positions were supplied.
    pub worst_cell: Option<(NodePosition, f64)>,
}

impl ComplianceReport {
    pub fn total_violations(&self) -> usize {
        self.sar_fcc.count + self.pd.count
    }
}

/// Summarise samples against every limit. `positions`, when given, must be
/// parallel to `samples`.
pub fn compliance_report(
    samples: &[ExposureSample],
    positions: Option<&[NodePosition]>,
    limits: &ExposureLimits,
) -> ComplianceReport {
    let pd: Vec<f64> = samples.iter().map(|s| s.pd).collect();
    let sar: Vec<f64> = samples.iter().map(|s| s.sar).collect();
    let worst_cell = positions.and_then(|pos| {
        debug_assert_eq!(pos.len(), samples.len());
        pos.iter().zip(&sar).fold(
            None,
            |best: Option<(NodePosition, f64)>, (p, v)| match best {
                Some((_, b)) if b >= *v => best,
                _ => Some((*p, *v)),
            },
        )
    });
    ComplianceReport {
        samples: samples.len(),
        empty: samples.is_empty(),
        sar_fcc: Violations::count(&sar, limits.sar_head_fcc),
        sar_icnirp: Violations::count(&sar, limits.sar_head_icnirp),
        sar_limb: Violations::count(&sar, limits.sar_limb),
        pd: Violations::count(&pd, limits.pd_limit),
        pd_stats: Stats::of(pd.iter().copied()),
        sar_stats: Stats::of(sar.iter().copied()),
        worst_cell,
    }
}

impl fmt::Display for ComplianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples: {}", self.samples)?;
        if self.empty {
            return writeln!(f, "no samples evaluated");
        }
        let rows = [
            ("SAR > FCC (1 g)", &self.sar_fcc, "W/kg"),
            ("SAR > ICNIRP (10 g)", &self.sar_icnirp, "W/kg"),
            ("SAR > limb", &self.sar_limb, "W/kg"),
            ("PD > MPE", &self.pd, "W/m^2"),
        ];
        for (label, v, unit) in rows {
            writeln!(
                f,
                "{label:<20} limit {} {unit}: {} violations ({:.2}%)",
                v.limit,
                v.count,
                100.0 * v.fraction
            )?;
        }
        writeln!(
            f,
            "PD  W/m^2: min {:e} max {:e} mean {:e}",
            self.pd_stats.min, self.pd_stats.max, self.pd_stats.mean
        )?;
        writeln!(
            f,
            "SAR W/kg:  min {:e} max {:e} mean {:e}",
            self.sar_stats.min, self.sar_stats.max, self.sar_stats.mean
        )?;
        if let Some((p, v)) = self.worst_cell {
            writeln!(f, "worst SAR cell: {p} at {v:e} W/kg")?;
        }
        Ok(())
    }
}
