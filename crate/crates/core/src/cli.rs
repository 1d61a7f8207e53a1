//! Command execution: runs a sweep, a single link or the protocol demo and
//! writes the resulting files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::exposure::{compliance_report, ComplianceReport};
use crate::output::{cdf_csv, heatmap_csv, Summary};
use crate::protocol::{run_protocol, RouteMode, Traffic};
use crate::sweep::{argmax_cell, empirical_cdf, run_sweep, Metric, SweepKind};

/// Reduction fraction the two-hop power control is compared against.
pub const REFERENCE_REDUCTION_FRACTION: f64 = 0.43;
/// Deviation from the reference that triggers a warning.
pub const REDUCTION_WARNING_BAND: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    /// Position sweep; `None` takes the kind from the config.
    Scenario(Option<SweepKind>),
    /// One scene from the config's `[scene]` table.
    Single(Option<Traffic>),
    ProtocolDemo,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub no_protocol: bool,
    pub fail_on_violation: bool,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Validation(crate::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("compliance gate failed: {0} cell(s) above the FCC SAR limit")]
    ComplianceGate(usize),
}

impl RunError {
    /// 1 config/validation, 2 runtime or I/O, 3 compliance gate.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Validation(_) => 1,
            RunError::Io { .. } => 2,
            RunError::ComplianceGate(_) => 3,
        }
    }
}

impl From<crate::Error> for RunError {
    fn from(e: crate::Error) -> Self {
        RunError::Validation(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub summary: Summary,
    pub report: ComplianceReport,
    pub warnings: Vec<String>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

fn report_text(title: &str, config: &RunConfig, report: &ComplianceReport) -> String {
    let mut text = format!("{title}\n\n{report}");
    if !config.assumed.is_empty() {
        text.push_str("\nassumed defaults (not from the reference parameter table):\n");
        for key in &config.assumed {
            text.push_str(&format!("  {key}\n"));
        }
    }
    text
}

fn reduction_warning(fraction: f64) -> Option<String> {
    ((fraction - REFERENCE_REDUCTION_FRACTION).abs() > REDUCTION_WARNING_BAND).then(|| {
        format!(
            "warning: reduction_fraction {fraction:.6} is more than {:.0} points from the reference {REFERENCE_REDUCTION_FRACTION}",
            100.0 * REDUCTION_WARNING_BAND
        )
    })
}

/// Execute `command`, writing outputs under the configured directory.
///
/// Validation happens before anything is written. With `fail_on_violation`
/// the files are still written and the gate error is returned afterwards.
pub fn run(
    config: &RunConfig,
    command: Command,
    opts: &RunOptions,
) -> Result<RunArtifacts, RunError> {
    config.validate()?;
    let dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| config.output_dir.clone());
    let artifacts = match command {
        Command::Scenario(kind) => {
            run_scenario(config, kind.unwrap_or(config.scenario.kind), opts, &dir)?
        }
        Command::Single(traffic) => run_single(
            config,
            traffic.unwrap_or(config.scene.traffic),
            opts,
            &dir,
            "single",
        )?,
        Command::ProtocolDemo => run_single(config, Traffic::Normal, opts, &dir, "protocol-demo")?,
    };
    if opts.fail_on_violation && artifacts.report.sar_fcc.count > 0 {
        return Err(RunError::ComplianceGate(artifacts.report.sar_fcc.count));
    }
    Ok(artifacts)
}

fn run_scenario(
    config: &RunConfig,
    kind: SweepKind,
    opts: &RunOptions,
    dir: &Path,
) -> Result<RunArtifacts, RunError> {
    let protocol = config.scenario.protocol && !opts.no_protocol;
    let scenario = config.sweep_scenario(kind, protocol);
    scenario.validate()?;
    let outcome = run_sweep(&scenario)?;

    let samples = outcome.samples();
    let positions = outcome.positions();
    let report = compliance_report(&samples, Some(&positions), &config.limits);
    let cdf_pd = empirical_cdf(&outcome.pd.unmasked(), config.limits.pd_limit)?;
    let cdf_sar = empirical_cdf(&outcome.sar.unmasked(), config.limits.sar_head_fcc)?;
    let (pd_cell, pd_max) = argmax_cell(&outcome.pd)?;
    let (sar_cell, sar_max) = argmax_cell(&outcome.sar)?;

    let reduced: Vec<f64> = outcome
        .evaluated()
        .filter(|c| c.backoff_db > 0.0)
        .map(|c| c.backoff_db)
        .collect();
    let relayed = outcome
        .evaluated()
        .filter(|c| c.route == RouteMode::MultiHop)
        .count();

    let mut summary = Summary::default();
    summary
        .push("command", "scenario")
        .push("kind", kind)
        .push("protocol", if protocol { "on" } else { "off" })
        .push("cells_evaluated", samples.len())
        .push("cells_multi_hop", relayed)
        .push("cells_reduced", reduced.len());
    if let (Some(min), Some(max)) = (
        reduced.iter().copied().reduce(f64::min),
        reduced.iter().copied().reduce(f64::max),
    ) {
        summary
            .push_number("backoff_db_min", min)
            .push_number("backoff_db_max", max)
            .push_number("reduction_fraction_min", 1.0 - 10f64.powf(-min / 10.0));
    }
    summary
        .push("argmax_pd_cell", pd_cell)
        .push_number("argmax_pd", pd_max)
        .push("argmax_sar_cell", sar_cell)
        .push_number("argmax_sar", sar_max)
        .push("sar_fcc_violations", report.sar_fcc.count)
        .push_number("sar_fcc_violation_fraction", report.sar_fcc.fraction)
        .push("pd_violations", report.pd.count)
        .push_number("pd_violation_fraction", report.pd.fraction);

    let mut w = Writer::new(dir)?;
    w.write("pd.csv", &heatmap_csv(&outcome.pd))?;
    w.write("sar.csv", &heatmap_csv(&outcome.sar))?;
    w.write("cdf_pd.csv", &cdf_csv(Metric::Pd, &cdf_pd))?;
    w.write("cdf_sar.csv", &cdf_csv(Metric::Sar, &cdf_sar))?;
    let title = format!(
        "{kind} (protocol {}), fixed: {}",
        if protocol { "on" } else { "off" },
        scenario
            .fixed_positions()
            .iter()
            .map(|(r, p)| format!("{} {p}", r.as_str()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    w.write("report.txt", &report_text(&title, config, &report))?;
    w.write("summary.txt", &summary.render())?;

    Ok(RunArtifacts {
        files: w.files,
        summary,
        report,
        warnings: Vec::new(),
    })
}

fn run_single(
    config: &RunConfig,
    traffic: Traffic,
    opts: &RunOptions,
    dir: &Path,
    name: &str,
) -> Result<RunArtifacts, RunError> {
    let scene = config.scene();
    scene.validate()?;
    let mut settings = config.control;
    if opts.no_protocol {
        settings.max_backoff = settings.power_step_floor;
    }
    let outcome = run_protocol(traffic, &scene, &settings)?;
    let direct = scene.direct_link()?;
    let report = compliance_report(&[outcome.exposure], Some(&[scene.rx]), &config.limits);

    let mut summary = Summary::default();
    summary
        .push("command", name)
        .push("traffic", format!("{traffic:?}").to_lowercase())
        .push("route", format!("{:?}", outcome.decision.mode))
        .push("route_reason", format!("{:?}", outcome.decision.reason))
        .push_number("direct_snr_db", direct.snr)
        .push_number("direct_rate", direct.rate)
        .push_number("end_to_end_rate", outcome.rate);
    let mut warnings = Vec::new();
    if let Some(c) = &outcome.control {
        summary
            .push_number("multi_rate_before", c.multi_rate_before)
            .push_number("multi_rate_after", c.multi_rate_after)
            .push_number("original_tx_power_dbm", c.original_power)
            .push_number("reduced_tx_power_dbm", c.reduced_power)
            .push_number("original_relay_power_dbm", c.original_relay_power)
            .push_number("reduced_relay_power_dbm", c.reduced_relay_power)
            .push_number("backoff_db", c.backoff_db)
            .push_number("reduction_fraction", c.reduction_fraction)
            .push_number("reference_reduction_fraction", REFERENCE_REDUCTION_FRACTION)
            .push("target_unreachable", c.unreachable)
            .push_number("pd_before", c.exposure_before.pd)
            .push_number("sar_before", c.exposure_before.sar);
        if !opts.no_protocol {
            warnings.extend(reduction_warning(c.reduction_fraction));
        }
    }
    summary
        .push_number("pd", outcome.exposure.pd)
        .push_number("sar", outcome.exposure.sar)
        .push("compliant_sar", outcome.exposure.compliant_sar)
        .push("compliant_pd", outcome.exposure.compliant_pd)
        .push("argmax_sar_cell", scene.rx);

    let mut w = Writer::new(dir)?;
    let title = format!(
        "{name}: tx {} relay {} rx {}, {:?} traffic",
        scene.tx,
        scene.relay.map_or("none".to_string(), |p| p.to_string()),
        scene.rx,
        traffic
    );
    w.write("report.txt", &report_text(&title, config, &report))?;
    w.write("summary.txt", &summary.render())?;
    Ok(RunArtifacts {
        files: w.files,
        summary,
        report,
        warnings,
    })
}
