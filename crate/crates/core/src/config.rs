//! Run configuration in TOML. Every key is optional; absent keys take the
//! reference parameter set, and unknown keys are rejected.
//!
//! ```toml
//! tx_power = 15.0          # dBm
//! relay_power = 15.0       # dBm
//! alpha = 2.0              # PD spreading exponent
//! half_duplex_relay = false
//! output_dir = "out"
//!
//! [radio]      # frequency (GHz), bandwidth (Hz), temperature (K), noise_figure (dB), max_rate (bit/s)
//! [tissue]     # permittivity, conductivity (S/m), penetration_depth (m), mass_density (kg/m^3)
//! [limits]     # sar_head_fcc, sar_head_icnirp, sar_limb (W/kg), pd_limit (W/m^2)
//! [antenna.tx] # gain (dBi), beamwidth_3db (deg), max_attenuation (dB), element_separation (wavelengths)
//! [antenna.relay]
//! [antenna.rx]
//! [control]    # rate_tolerance (bit/s), power_step_floor (dB), max_backoff (dB), backoff = "both"|"tx"|"relay"
//! [scene]      # tx = [x, y], relay = [x, y], rx = [x, y], use_relay, traffic = "normal"|"emergency"
//! [scenario]   # kind = "relay_sweep"|"tx_sweep"|"rx_sweep", protocol, tx/relay/rx overrides
//! [scenario.grid]  # length_cm, width_cm, cell_size_cm
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exposure::{ExposureLimits, TissueProperties};
use crate::geometry::{GridSpec, NodePosition};
use crate::protocol::{Antennas, PowerControlSettings, Role, Scene, Traffic};
use crate::sweep::{SweepKind, SweepScenario};

/// Defaults that do not come from the reference parameter table. When one of
/// these keys is absent from the document it is listed in
/// [`RunConfig::assumed`].
pub const NON_REFERENCE_DEFAULTS: [&str; 6] = [
    "tissue.mass_density",
    "alpha",
    "limits.pd_limit",
    "antenna.tx.element_separation",
    "antenna.relay.element_separation",
    "antenna.rx.element_separation",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("invalid value for '{key}': {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub tx: NodePosition,
    pub relay: NodePosition,
    pub rx: NodePosition,
    pub use_relay: bool,
    pub traffic: Traffic,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let s = Scene::default();
        Self {
            tx: s.tx,
            relay: s.relay.unwrap_or(NodePosition::new(5, 6)),
            rx: s.rx,
            use_relay: true,
            traffic: Traffic::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub kind: SweepKind,
    pub protocol: bool,
    pub grid: GridSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx: Option<NodePosition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay: Option<NodePosition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx: Option<NodePosition>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: SweepKind::RelaySweep,
            protocol: true,
            grid: GridSpec::default(),
            tx: None,
            relay: None,
            rx: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// dBm
    pub tx_power: f64,
    /// dBm
    pub relay_power: f64,
    pub alpha: f64,
    pub half_duplex_relay: bool,
    pub output_dir: PathBuf,
    pub radio: crate::propagation::RadioConfig,
    pub tissue: TissueProperties,
    pub limits: ExposureLimits,
    pub antenna: Antennas,
    pub control: PowerControlSettings,
    pub scene: SceneConfig,
    pub scenario: ScenarioConfig,
    /// Keys from [`NON_REFERENCE_DEFAULTS`] that were left at their default.
    #[serde(skip)]
    pub assumed: BTreeSet<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = Scene::default();
        Self {
            tx_power: s.tx_power,
            relay_power: s.relay_power,
            alpha: s.alpha,
            half_duplex_relay: s.half_duplex_relay,
            output_dir: PathBuf::from("out"),
            radio: s.radio,
            tissue: s.tissue,
            limits: s.limits,
            antenna: s.antennas,
            control: PowerControlSettings::default(),
            scene: SceneConfig::default(),
            scenario: ScenarioConfig::default(),
            assumed: NON_REFERENCE_DEFAULTS
                .iter()
                .map(|k| k.to_string())
                .collect(),
        }
    }
}

fn has_key(table: &toml::Table, dotted: &str) -> bool {
    let mut parts = dotted.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        match current.get(part) {
            None => return false,
            Some(_) if parts.peek().is_none() => return true,
            Some(toml::Value::Table(t)) => current = t,
            Some(_) => return false,
        }
    }
    false
}

fn remove_key(table: &mut toml::Table, dotted: &str) {
    match dotted.split_once('.') {
        None => {
            table.remove(dotted);
        }
        Some((head, rest)) => {
            if let Some(toml::Value::Table(t)) = table.get_mut(head) {
                remove_key(t, rest);
            }
        }
    }
}

/// Parse and validate a TOML document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut config: RunConfig = toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    config.assumed = NON_REFERENCE_DEFAULTS
        .iter()
        .filter(|k| !has_key(&table, k))
        .map(|k| k.to_string())
        .collect();
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Serialize back to TOML. Assumed defaults are left out so that parsing
    /// the result restores the same provenance.
    pub fn to_toml(&self) -> String {
        let mut table = match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("RunConfig serializes to a table"),
        };
        for key in &self.assumed {
            remove_key(&mut table, key);
        }
        toml::to_string(&table).expect("table serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let scoped = |section: &str, r: Result<(), String>| {
            r.map_err(|reason| {
                let field = reason.split_whitespace().next().unwrap_or("");
                invalid(&format!("{section}.{field}"), reason)
            })
        };
        scoped("radio", self.radio.validate())?;
        scoped("tissue", self.tissue.validate())?;
        scoped("limits", self.limits.validate())?;
        scoped("antenna.tx", self.antenna.tx.validate())?;
        scoped("antenna.relay", self.antenna.relay.validate())?;
        scoped("antenna.rx", self.antenna.rx.validate())?;
        scoped("control", self.control.validate())?;
        scoped("scenario.grid", self.scenario.grid.validate())?;
        for (key, v) in [
            ("tx_power", self.tx_power),
            ("relay_power", self.relay_power),
        ] {
            if v.is_nan() || v == f64::INFINITY {
                return Err(invalid(
                    key,
                    format!("must be a finite dBm value or -inf, got {v}"),
                ));
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(
                "alpha",
                format!("must be finite and > 0, got {}", self.alpha),
            ));
        }

        let grid = self.scenario.grid;
        let s = &self.scene;
        for (key, p) in [
            ("scene.tx", s.tx),
            ("scene.relay", s.relay),
            ("scene.rx", s.rx),
        ] {
            if !grid.contains(p) {
                return Err(invalid(key, format!("{p} lies outside the grid")));
            }
        }
        if s.tx == s.rx {
            return Err(invalid(
                "scene.rx",
                format!("tx and rx share position {}", s.tx),
            ));
        }
        if s.use_relay && (s.relay == s.tx || s.relay == s.rx) {
            return Err(invalid(
                "scene.relay",
                format!("relay {} coincides with tx or rx", s.relay),
            ));
        }
        let sc = &self.scenario;
        for (key, p) in [
            ("scenario.tx", sc.tx),
            ("scenario.relay", sc.relay),
            ("scenario.rx", sc.rx),
        ] {
            if let Some(p) = p {
                if !grid.contains(p) {
                    return Err(invalid(key, format!("{p} lies outside the grid")));
                }
            }
        }
        self.sweep_scenario(sc.kind, sc.protocol)
            .validate()
            .map_err(|e| invalid("scenario", e.to_string()))
    }

    /// Scene for single-link and protocol runs.
    pub fn scene(&self) -> Scene {
        Scene {
            tx: self.scene.tx,
            relay: self.scene.use_relay.then_some(self.scene.relay),
            rx: self.scene.rx,
            ..self.physics()
        }
    }

    fn physics(&self) -> Scene {
        Scene {
            tx_power: self.tx_power,
            relay_power: self.relay_power,
            antennas: self.antenna,
            radio: self.radio,
            tissue: self.tissue,
            limits: self.limits,
            alpha: self.alpha,
            half_duplex_relay: self.half_duplex_relay,
            ..Scene::default()
        }
    }

    pub fn sweep_scenario(&self, kind: SweepKind, protocol_enabled: bool) -> SweepScenario {
        let mut scenario = SweepScenario::new(kind, self.physics(), protocol_enabled);
        scenario.grid = self.scenario.grid;
        scenario.settings = self.control;
        let sc = &self.scenario;
        let swept = kind.swept_role();
        for (role, p) in [
            (Role::Tx, sc.tx),
            (Role::Relay, sc.relay),
            (Role::Rx, sc.rx),
        ] {
            match (p, role) {
                (Some(p), r) if r != swept => match r {
                    Role::Tx => scenario.base_scene.tx = p,
                    Role::Relay => scenario.base_scene.relay = Some(p),
                    Role::Rx => scenario.base_scene.rx = p,
                },
                _ => {}
            }
        }
        scenario
    }
}
