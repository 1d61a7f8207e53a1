//! Route selection and exposure-driven transmit power control.
//!
//! Normal traffic is relayed when the relay is closer to the Tx than the Rx
//! is; emergency traffic always goes direct. On a relayed route the transmit
//! power is backed off until the two-hop rate just holds the direct-link rate
//! measured at the original power.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{
    aggregate_exposure, Emitter, ExposureLimits, ExposureSample, TissueProperties,
};
use crate::geometry::{distance, NodePosition};
use crate::propagation::{link_budget, AntennaSpec, LinkBudget, RadioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traffic {
    Normal,
    Emergency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Tx,
    Relay,
    Rx,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Tx => "tx",
            Role::Relay => "relay",
            Role::Rx => "rx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Antennas {
    pub tx: AntennaSpec,
    pub relay: AntennaSpec,
    pub rx: AntennaSpec,
}

impl Default for Antennas {
    fn default() -> Self {
        Self {
            tx: AntennaSpec::wearable(),
            relay: AntennaSpec::relay(),
            rx: AntennaSpec::wearable(),
        }
    }
}

/// Node placement plus every physical parameter a link evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    pub tx: NodePosition,
    pub relay: Option<NodePosition>,
    pub rx: NodePosition,
    /// dBm
    pub tx_power: f64,
    /// dBm
    pub relay_power: f64,
    pub antennas: Antennas,
    pub radio: RadioConfig,
    pub tissue: TissueProperties,
    pub limits: ExposureLimits,
    /// Power-density spreading exponent.
    pub alpha: f64,
    /// Halve two-hop throughput for a half-duplex relay.
    pub half_duplex_relay: bool,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            tx: NodePosition::new(1, 1),
            relay: Some(NodePosition::new(5, 6)),
            rx: NodePosition::new(15, 15),
            tx_power: 15.0,
            relay_power: 15.0,
            antennas: Antennas::default(),
            radio: RadioConfig::default(),
            tissue: TissueProperties::default(),
            limits: ExposureLimits::default(),
            alpha: 2.0,
            half_duplex_relay: false,
        }
    }
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.tx == self.rx {
            return Err(Error::InvalidScene(format!(
                "tx and rx share position {}",
                self.tx
            )));
        }
        if let Some(relay) = self.relay {
            if relay == self.tx || relay == self.rx {
                return Err(Error::InvalidScene(format!(
                    "relay {relay} coincides with tx or rx"
                )));
            }
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidScene(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn without_relay(mut self) -> Self {
        self.relay = None;
        self
    }

    fn relay_position(&self) -> Result<NodePosition> {
        self.relay
            .ok_or_else(|| Error::InvalidScene("operation requires a relay".into()))
    }

    /// Scene with `backoff_db` subtracted from the powers selected by `target`.
    pub fn backed_off(&self, backoff_db: f64, target: BackoffTarget) -> Self {
        let mut s = *self;
        if matches!(target, BackoffTarget::Both | BackoffTarget::Tx) {
            s.tx_power -= backoff_db;
        }
        if matches!(target, BackoffTarget::Both | BackoffTarget::Relay) {
            s.relay_power -= backoff_db;
        }
        s
    }

    pub fn direct_link(&self) -> Result<LinkBudget> {
        link_budget(
            self.tx_power,
            self.antennas.tx.gain,
            self.antennas.rx.gain,
            distance(self.tx, self.rx),
            &self.radio,
        )
    }

    /// Tx→relay and relay→Rx budgets.
    pub fn relay_links(&self) -> Result<(LinkBudget, LinkBudget)> {
        let relay = self.relay_position()?;
        let first = link_budget(
            self.tx_power,
            self.antennas.tx.gain,
            self.antennas.relay.gain,
            distance(self.tx, relay),
            &self.radio,
        )?;
        let second = link_budget(
            self.relay_power,
            self.antennas.relay.gain,
            self.antennas.rx.gain,
            distance(relay, self.rx),
            &self.radio,
        )?;
        Ok((first, second))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteMode {
    SingleHop,
    MultiHop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteReason {
    DistanceRule,
    Emergency,
    NoRelay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RouteDecision {
    pub mode: RouteMode,
    pub reason: RouteReason,
}

impl RouteDecision {
    pub const fn multi_hop() -> Self {
        Self {
            mode: RouteMode::MultiHop,
            reason: RouteReason::DistanceRule,
        }
    }
}

/// Which transmitters a power back-off applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackoffTarget {
    #[default]
    Both,
    Tx,
    Relay,
}

/// Beyond this the reduction fraction is no longer distinguishable from 1 in f64.
pub const MAX_BACKOFF_LIMIT: f64 = 150.0;

/// Knobs of the power search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerControlSettings {
    /// bit/s below the direct rate that still counts as matched.
    pub rate_tolerance: f64,
    /// Search stops once the bracketing interval is narrower than this (dB).
    pub power_step_floor: f64,
    /// Largest back-off searched (dB).
    pub max_backoff: f64,
    pub backoff: BackoffTarget,
}

impl Default for PowerControlSettings {
    fn default() -> Self {
        Self {
            rate_tolerance: 1e3,
            power_step_floor: 0.01,
            max_backoff: 120.0,
            backoff: BackoffTarget::Both,
        }
    }
}

impl PowerControlSettings {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.rate_tolerance.is_finite() && self.rate_tolerance >= 0.0) {
            return Err(format!(
                "rate_tolerance must be finite and >= 0, got {}",
                self.rate_tolerance
            ));
        }
        crate::propagation::positive("power_step_floor", self.power_step_floor)?;
        if !(self.max_backoff > 0.0 && self.max_backoff <= MAX_BACKOFF_LIMIT) {
            return Err(format!(
                "max_backoff must lie in (0, {MAX_BACKOFF_LIMIT}] dB, got {}",
                self.max_backoff
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerControlResult {
    /// Tx power before and after, dBm.
    pub original_power: f64,
    pub reduced_power: f64,
    pub original_relay_power: f64,
    pub reduced_relay_power: f64,
    /// Back-off applied to the selected transmitters, dB.
    pub backoff_db: f64,
    /// Fraction of transmit power removed, `1 - 10^(-backoff/10)`.
    pub reduction_fraction: f64,
    pub direct_rate: f64,
    pub multi_rate_before: f64,
    pub multi_rate_after: f64,
    pub exposure_before: ExposureSample,
    pub exposure_after: ExposureSample,
    /// The two-hop route missed the direct rate even at full power.
    pub unreachable: bool,
}

/// Route choice: relay only when the direct distance exceeds
/// the Tx→relay distance.
pub fn choose_route(traffic: Traffic, scene: &Scene) -> RouteDecision {
    let single = |reason| RouteDecision {
        mode: RouteMode::SingleHop,
        reason,
    };
    if traffic == Traffic::Emergency {
        return single(RouteReason::Emergency);
    }
    let Some(relay) = scene.relay else {
        return single(RouteReason::NoRelay);
    };
    if distance(scene.tx, scene.rx) <= distance(scene.tx, relay) {
        single(RouteReason::DistanceRule)
    } else {
        RouteDecision::multi_hop()
    }
}

/// Throughput of the chosen route; a relayed route is limited by its weaker hop.
pub fn end_to_end_rate(decision: RouteDecision, scene: &Scene) -> Result<f64> {
    match decision.mode {
        RouteMode::SingleHop => Ok(scene.direct_link()?.rate),
        RouteMode::MultiHop => {
            let (a, b) = scene.relay_links()?;
            let rate = a.rate.min(b.rate);
            Ok(if scene.half_duplex_relay {
                0.5 * rate
            } else {
                rate
            })
        }
    }
}

/// Radiating nodes of a route, each steered at its next hop.
pub fn route_emitters(decision: RouteDecision, scene: &Scene) -> Result<Vec<Emitter>> {
    let tx = |target| Emitter {
        position: scene.tx,
        tx_power: scene.tx_power,
        antenna: scene.antennas.tx,
        boresight_target: target,
    };
    Ok(match decision.mode {
        RouteMode::SingleHop => vec![tx(scene.rx)],
        RouteMode::MultiHop => {
            let relay = scene.relay_position()?;
            vec![
                tx(relay),
                Emitter {
                    position: relay,
                    tx_power: scene.relay_power,
                    antenna: scene.antennas.relay,
                    boresight_target: scene.rx,
                },
            ]
        }
    })
}

/// Aggregate exposure at the Rx with every node of the route at its scene power.
pub fn route_exposure(decision: RouteDecision, scene: &Scene) -> Result<ExposureSample> {
    let emitters = route_emitters(decision, scene)?;
    aggregate_exposure(
        scene.rx,
        &emitters,
        &scene.tissue,
        &scene.limits,
        &scene.radio,
        scene.alpha,
    )
}

/// Finds the largest back-off for which the two-hop rate still reaches the
/// direct-link rate (minus `rate_tolerance`), by bisection over `[0, max_backoff]`.
pub fn equalize_rates(
    scene: &Scene,
    settings: &PowerControlSettings,
) -> Result<PowerControlResult> {
    scene.validate()?;
    scene.relay_position()?;
    let relayed = RouteDecision::multi_hop();
    let direct_rate = end_to_end_rate(
        RouteDecision {
            mode: RouteMode::SingleHop,
            reason: RouteReason::NoRelay,
        },
        scene,
    )?;
    let target = direct_rate - settings.rate_tolerance;
    let rate_at =
        |backoff: f64| end_to_end_rate(relayed, &scene.backed_off(backoff, settings.backoff));
    let meets = |backoff: f64| -> Result<bool> { Ok(rate_at(backoff)? >= target) };

    let multi_rate_before = rate_at(0.0)?;
    let unreachable = multi_rate_before < target;
    let backoff_db = if unreachable {
        0.0
    } else if meets(settings.max_backoff)? {
        settings.max_backoff
    } else {
        // invariant: meets(lo) && !meets(hi)
        let (mut lo, mut hi) = (0.0, settings.max_backoff);
        while hi - lo >= settings.power_step_floor {
            let mid = 0.5 * (lo + hi);
            if meets(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let reduced = scene.backed_off(backoff_db, settings.backoff);
    Ok(PowerControlResult {
        original_power: scene.tx_power,
        reduced_power: reduced.tx_power,
        original_relay_power: scene.relay_power,
        reduced_relay_power: reduced.relay_power,
        backoff_db,
        reduction_fraction: 1.0 - 10f64.powf(-backoff_db / 10.0),
        direct_rate,
        multi_rate_before,
        multi_rate_after: rate_at(backoff_db)?,
        exposure_before: route_exposure(relayed, scene)?,
        exposure_after: route_exposure(relayed, &reduced)?,
        unreachable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolOutcome {
    pub decision: RouteDecision,
    /// Present only for relayed routes.
    pub control: Option<PowerControlResult>,
    /// End-to-end rate of the route as finally configured.
    pub rate: f64,
    /// Exposure at the Rx after any power reduction.
    pub exposure: ExposureSample,
}

/// Full protocol pass: route choice, rate evaluation, power reduction on a
/// relayed route, and exposure at the Rx.
///
/// When the relayed route cannot reach the direct rate at full power it is
/// kept at full power and `control.unreachable` is set.
pub fn run_protocol(
    traffic: Traffic,
    scene: &Scene,
    settings: &PowerControlSettings,
) -> Result<ProtocolOutcome> {
    scene.validate()?;
    let decision = choose_route(traffic, scene);
    match decision.mode {
        RouteMode::SingleHop => Ok(ProtocolOutcome {
            decision,
            control: None,
            rate: end_to_end_rate(decision, scene)?,
            exposure: route_exposure(decision, scene)?,
        }),
        RouteMode::MultiHop => {
            let control = equalize_rates(scene, settings)?;
            Ok(ProtocolOutcome {
                decision,
                rate: control.multi_rate_after,
                exposure: control.exposure_after,
                control: Some(control),
            })
        }
    }
}
