//! Exhaustive position sweeps over the grid, producing PD/SAR heatmaps,
//! empirical CDFs and argmax cells.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{violation_fraction, ExposureSample};
use crate::geometry::{grid_cells, GridSpec, NodePosition};
use crate::protocol::{
    choose_route, route_exposure, run_protocol, PowerControlSettings, Role, RouteDecision,
    RouteMode, Scene, Traffic,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    RelaySweep,
    TxSweep,
    RxSweep,
}

impl SweepKind {
    pub fn swept_role(&self) -> Role {
        match self {
            SweepKind::RelaySweep => Role::Relay,
            SweepKind::TxSweep => Role::Tx,
            SweepKind::RxSweep => Role::Rx,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::RelaySweep => "relay_sweep",
            SweepKind::TxSweep => "tx_sweep",
            SweepKind::RxSweep => "rx_sweep",
        }
    }

    /// Fixed node placement used for each experiment.
    pub fn default_positions(&self) -> [(Role, NodePosition); 2] {
        let p = NodePosition::new;
        match self {
            SweepKind::RelaySweep => [(Role::Tx, p(1, 1)), (Role::Rx, p(15, 15))],
            SweepKind::TxSweep => [(Role::Relay, p(5, 6)), (Role::Rx, p(15, 15))],
            SweepKind::RxSweep => [(Role::Tx, p(5, 6)), (Role::Relay, p(12, 13))],
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "relay_sweep" | "relay" => Ok(SweepKind::RelaySweep),
            "tx_sweep" | "tx" => Ok(SweepKind::TxSweep),
            "rx_sweep" | "rx" => Ok(SweepKind::RxSweep),
            other => Err(format!("unknown sweep kind '{other}'")),
        }
    }
}

/// One sweep experiment. The swept role's position in `base_scene` is ignored;
/// the other two roles stay where `base_scene` puts them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepScenario {
    pub kind: SweepKind,
    pub grid: GridSpec,
    pub protocol_enabled: bool,
    pub base_scene: Scene,
    pub settings: PowerControlSettings,
}

impl SweepScenario {
    /// Scenario with the kind's default fixed positions on top of `base`.
    pub fn new(kind: SweepKind, base: Scene, protocol_enabled: bool) -> Self {
        let mut scene = base;
        for (role, at) in kind.default_positions() {
            place(&mut scene, role, at);
        }
        Self {
            kind,
            grid: GridSpec::default(),
            protocol_enabled,
            base_scene: scene,
            settings: PowerControlSettings::default(),
        }
    }

    pub fn fixed_positions(&self) -> Vec<(Role, NodePosition)> {
        let s = &self.base_scene;
        let all = [
            (Role::Tx, Some(s.tx)),
            (Role::Relay, s.relay),
            (Role::Rx, Some(s.rx)),
        ];
        all.into_iter()
            .filter(|(r, _)| *r != self.kind.swept_role())
            .filter_map(|(r, p)| p.map(|p| (r, p)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate().map_err(Error::InvalidScene)?;
        let fixed = self.fixed_positions();
        if fixed.len() != 2 {
            return Err(Error::InvalidScene(format!(
                "{} needs both non-swept roles placed",
                self.kind
            )));
        }
        for (_, p) in &fixed {
            self.grid.check(*p)?;
        }
        if fixed[0].1 == fixed[1].1 {
            return Err(Error::InvalidScene(format!(
                "fixed {} and {} share position {}",
                fixed[0].0.as_str(),
                fixed[1].0.as_str(),
                fixed[0].1
            )));
        }
        Ok(())
    }

    fn scene_at(&self, cell: NodePosition) -> Scene {
        let mut s = self.base_scene;
        place(&mut s, self.kind.swept_role(), cell);
        s
    }

    /// Evaluate one cell: relay sweeps without the protocol always relay,
    /// the other sweeps pick the route per cell.
    fn evaluate(&self, cell: NodePosition) -> Result<CellOutcome> {
        let scene = self.scene_at(cell);
        if self.protocol_enabled {
            let out = run_protocol(Traffic::Normal, &scene, &self.settings)?;
            return Ok(CellOutcome {
                position: cell,
                route: out.decision.mode,
                exposure: out.exposure,
                backoff_db: out.control.map_or(0.0, |c| c.backoff_db),
            });
        }
        let decision = match self.kind {
            SweepKind::RelaySweep => RouteDecision::multi_hop(),
            _ => choose_route(Traffic::Normal, &scene),
        };
        Ok(CellOutcome {
            position: cell,
            route: decision.mode,
            exposure: route_exposure(decision, &scene)?,
            backoff_db: 0.0,
        })
    }
}

fn place(scene: &mut Scene, role: Role, at: NodePosition) {
    match role {
        Role::Tx => scene.tx = at,
        Role::Relay => scene.relay = Some(at),
        Role::Rx => scene.rx = at,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOutcome {
    pub position: NodePosition,
    pub route: RouteMode,
    pub exposure: ExposureSample,
    pub backoff_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Pd,
    Sar,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Pd => "pd",
            Metric::Sar => "sar",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            Metric::Pd => "W/m^2",
            Metric::Sar => "W/kg",
        }
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pd" => Ok(Metric::Pd),
            "sar" => Ok(Metric::Sar),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapMeta {
    pub kind: SweepKind,
    pub protocol_enabled: bool,
    pub fixed: Vec<(Role, NodePosition)>,
}

/// Per-cell values in row-major order (x fastest); `None` marks a masked cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub grid: GridSpec,
    pub metric: Metric,
    pub values: Vec<Option<f64>>,
    pub meta: HeatmapMeta,
}

impl Heatmap {
    pub fn cells(&self) -> impl Iterator<Item = (NodePosition, Option<f64>)> + '_ {
        grid_cells(&self.grid, &BTreeSet::new())
            .into_iter()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, p: NodePosition) -> Option<f64> {
        self.cells().find(|(q, _)| *q == p).and_then(|(_, v)| v)
    }

    pub fn unmasked(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Number of cells along x and y.
    pub fn dims(&self) -> (usize, usize) {
        (self.grid.xs().count(), self.grid.ys().count())
    }
}

/// Cell with the largest value; the first in row-major order wins ties.
pub fn argmax_cell(h: &Heatmap) -> Result<(NodePosition, f64)> {
    h.cells()
        .filter_map(|(p, v)| v.map(|v| (p, v)))
        .fold(
            None,
            |best: Option<(NodePosition, f64)>, (p, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((p, v)),
            },
        )
        .ok_or(Error::FullyMasked)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub scenario: SweepScenario,
    /// Row-major over the full grid; `None` at masked cells.
    pub cells: Vec<Option<CellOutcome>>,
    pub pd: Heatmap,
    pub sar: Heatmap,
}

impl SweepOutcome {
    pub fn evaluated(&self) -> impl Iterator<Item = &CellOutcome> {
        self.cells.iter().flatten()
    }

    pub fn samples(&self) -> Vec<ExposureSample> {
        self.evaluated().map(|c| c.exposure).collect()
    }

    pub fn positions(&self) -> Vec<NodePosition> {
        self.evaluated().map(|c| c.position).collect()
    }
}

/// Run a scenario of any kind. Cells are evaluated in parallel; results are
/// assembled in grid order so output does not depend on scheduling.
pub fn run_sweep(scenario: &SweepScenario) -> Result<SweepOutcome> {
    scenario.validate()?;
    let masked: BTreeSet<NodePosition> = scenario
        .fixed_positions()
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let cells = grid_cells(&scenario.grid, &BTreeSet::new());
    let cells = cells
        .par_iter()
        .map(|&cell| {
            if masked.contains(&cell) {
                Ok(None)
            } else {
                scenario.evaluate(cell).map(Some)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let meta = HeatmapMeta {
        kind: scenario.kind,
        protocol_enabled: scenario.protocol_enabled,
        fixed: scenario.fixed_positions(),
    };
    let heatmap = |metric: Metric, pick: fn(&ExposureSample) -> f64| Heatmap {
        grid: scenario.grid,
        metric,
        values: cells.iter().map(|c| c.map(|c| pick(&c.exposure))).collect(),
        meta: meta.clone(),
    };
    Ok(SweepOutcome {
        pd: heatmap(Metric::Pd, |s| s.pd),
        sar: heatmap(Metric::Sar, |s| s.sar),
        scenario: *scenario,
        cells,
    })
}

fn expect_kind(scenario: &SweepScenario, kind: SweepKind) -> Result<()> {
    if scenario.kind == kind {
        Ok(())
    } else {
        Err(Error::InvalidScene(format!(
            "expected a {kind} scenario, got {}",
            scenario.kind
        )))
    }
}

pub fn relay_sweep(scenario: &SweepScenario) -> Result<SweepOutcome> {
    expect_kind(scenario, SweepKind::RelaySweep)?;
    run_sweep(scenario)
}

pub fn tx_sweep(scenario: &SweepScenario) -> Result<SweepOutcome> {
    expect_kind(scenario, SweepKind::TxSweep)?;
    run_sweep(scenario)
}

pub fn rx_sweep(scenario: &SweepScenario) -> Result<SweepOutcome> {
    expect_kind(scenario, SweepKind::RxSweep)?;
    run_sweep(scenario)
}

/// Step-function empirical CDF, `F(x) = #{samples <= x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub limit: f64,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|v| *v <= x) as f64 / self.len() as f64
    }

    /// Fraction of samples strictly above `x`.
    pub fn fraction_above(&self, x: f64) -> f64 {
        let above = self.len() - self.values.partition_point(|v| *v <= x);
        violation_fraction(above, self.len())
    }

    pub fn fraction_above_limit(&self) -> f64 {
        self.fraction_above(self.limit)
    }
}

pub fn empirical_cdf(samples: &[f64], limit: f64) -> Result<EmpiricalCdf> {
    if samples.is_empty() || samples.iter().any(|v| v.is_nan()) {
        return Err(Error::EmptySamples);
    }
    let mut values = samples.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let probabilities = (1..=values.len()).map(|i| i as f64 / n).collect();
    Ok(EmpiricalCdf {
        values,
        probabilities,
        limit,
    })
}
