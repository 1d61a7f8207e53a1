//! Single-hop versus two-hop wearable radio links on a body-surface grid:
//! link budgets, power density, point SAR, and an exposure-reducing power
//! control protocol, with position sweeps that emit heatmaps and CDFs.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod exposure;
pub mod geometry;
pub mod output;
pub mod propagation;
pub mod protocol;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
pub use exposure::{
    aggregate_exposure, compliance_report, leaked_gain, power_density, reflection_coefficient,
    sar_from_pd, ComplianceReport, Emitter, ExposureLimits, ExposureSample, TissueProperties,
};
pub use geometry::{angle_between, distance, grid_cells, GridSpec, NodePosition};
pub use propagation::{
    azimuth_attenuation, combined_attenuation, element_gain, elevation_attenuation, link_budget,
    noise_power, path_loss, shannon_rate, AntennaSpec, LinkBudget, RadioConfig,
};
pub use protocol::{
    choose_route, end_to_end_rate, equalize_rates, run_protocol, Antennas, BackoffTarget,
    PowerControlResult, PowerControlSettings, ProtocolOutcome, Role, RouteDecision, RouteMode,
    RouteReason, Scene, Traffic,
};
pub use sweep::{
    argmax_cell, empirical_cdf, relay_sweep, run_sweep, rx_sweep, tx_sweep, EmpiricalCdf, Heatmap,
    Metric, SweepKind, SweepOutcome, SweepScenario,
};
