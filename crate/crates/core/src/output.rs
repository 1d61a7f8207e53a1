//! CSV heatmaps, CSV CDF tables and `key=value` run summaries.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! parsing a file gives back bit-identical values.

use std::fmt::Write as _;

use crate::geometry::{GridSpec, NodePosition};
use crate::protocol::Role;
use crate::sweep::{EmpiricalCdf, Heatmap, HeatmapMeta, Metric, SweepKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct CsvError {
    pub line: usize,
    pub reason: String,
}

fn csv_err(line: usize, reason: impl Into<String>) -> CsvError {
    CsvError {
        line,
        reason: reason.into(),
    }
}

pub fn format_number(v: f64) -> String {
    format!("{v:e}")
}

fn format_fixed(fixed: &[(Role, NodePosition)]) -> String {
    fixed
        .iter()
        .map(|(r, p)| format!("{}@{}:{}", r.as_str(), p.x, p.y))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_fixed(s: &str) -> Option<Vec<(Role, NodePosition)>> {
    s.split_whitespace()
        .map(|item| {
            let (role, at) = item.split_once('@')?;
            let (x, y) = at.split_once(':')?;
            let role = match role {
                "tx" => Role::Tx,
                "relay" => Role::Relay,
                "rx" => Role::Rx,
                _ => return None,
            };
            Some((role, NodePosition::new(x.parse().ok()?, y.parse().ok()?)))
        })
        .collect()
}

/// One metadata line, then one row per x (grid length) holding one column
/// per y (grid width). Masked cells are empty fields.
pub fn heatmap_csv(h: &Heatmap) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# metric={};unit={};kind={};protocol={};length_cm={};width_cm={};cell_size_cm={};fixed={}",
        h.metric.as_str(),
        h.metric.unit(),
        h.meta.kind,
        if h.meta.protocol_enabled { "on" } else { "off" },
        h.grid.length_cm,
        h.grid.width_cm,
        h.grid.cell_size_cm,
        format_fixed(&h.meta.fixed),
    );
    for x in h.grid.xs() {
        let row: Vec<String> = h
            .grid
            .ys()
            .map(|y| {
                h.get(NodePosition::new(x, y))
                    .map(format_number)
                    .unwrap_or_default()
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_heatmap_csv(text: &str) -> Result<Heatmap, CsvError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| csv_err(1, "missing metadata header"))?;
    let field = |key: &str| -> Result<&str, CsvError> {
        header
            .split(';')
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| csv_err(1, format!("header lacks '{key}'")))
    };
    let num = |key: &str| -> Result<u32, CsvError> {
        field(key)?
            .parse()
            .map_err(|_| csv_err(1, format!("'{key}' is not an integer")))
    };
    let grid = GridSpec {
        length_cm: num("length_cm")?,
        width_cm: num("width_cm")?,
        cell_size_cm: num("cell_size_cm")?,
    };
    let metric: Metric = field("metric")?.parse().map_err(|e| csv_err(1, e))?;
    let kind: SweepKind = field("kind")?.parse().map_err(|e| csv_err(1, e))?;
    let protocol_enabled = match field("protocol")? {
        "on" => true,
        "off" => false,
        other => return Err(csv_err(1, format!("bad protocol flag '{other}'"))),
    };
    let fixed = parse_fixed(field("fixed")?).ok_or_else(|| csv_err(1, "bad fixed positions"))?;

    let xs: Vec<u32> = grid.xs().collect();
    let ys: Vec<u32> = grid.ys().collect();
    let mut by_x = vec![vec![None; ys.len()]; xs.len()];
    for (i, row) in by_x.iter_mut().enumerate() {
        let line_no = i + 2;
        let line = lines
            .next()
            .ok_or_else(|| csv_err(line_no, "missing row"))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ys.len() {
            return Err(csv_err(
                line_no,
                format!("expected {} columns, found {}", ys.len(), fields.len()),
            ));
        }
        for (slot, f) in row.iter_mut().zip(fields) {
            if !f.is_empty() {
                *slot = Some(
                    f.parse::<f64>()
                        .map_err(|_| csv_err(line_no, format!("bad number '{f}'")))?,
                );
            }
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(csv_err(xs.len() + 2, "trailing rows"));
    }
    // back to row-major, x fastest
    let values = (0..ys.len())
        .flat_map(|j| by_x.iter().map(move |row| row[j]))
        .collect();
    Ok(Heatmap {
        grid,
        metric,
        values,
        meta: HeatmapMeta {
            kind,
            protocol_enabled,
            fixed,
        },
    })
}

/// Two columns, value and cumulative probability, under a header carrying
/// the limit line.
pub fn cdf_csv(metric: Metric, cdf: &EmpiricalCdf) -> String {
    let mut out = format!(
        "# metric={};unit={};limit={};n={};fraction_above_limit={}\nvalue,cumulative_probability\n",
        metric.as_str(),
        metric.unit(),
        format_number(cdf.limit),
        cdf.len(),
        format_number(cdf.fraction_above_limit()),
    );
    for (v, p) in cdf.values.iter().zip(&cdf.probabilities) {
        let _ = writeln!(out, "{},{}", format_number(*v), format_number(*p));
    }
    out
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push_number(&mut self, key: &str, value: f64) -> &mut Self {
        self.push(key, format_number(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        Self {
            entries: text
                .lines()
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}
