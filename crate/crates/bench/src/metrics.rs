//! Per-run metrics rows and the CSV dialect shared by every output file.

use std::fmt::Write as _;

use rrdt_core::planners::{EventKind, PlannerKind, PlannerResult, PRM_QUERY_INTERVAL};

use crate::BenchError;

/// Nodes between cost samples in a trace.
pub const TRACE_INTERVAL: u64 = 100;

pub const METRICS_HEADER: [&str; 14] = [
    "planner",
    "map",
    "pair",
    "repetition",
    "seed",
    "status",
    "iterations",
    "total_sampled",
    "failed_connections",
    "points_in_cobs",
    "nodes",
    "first_solution_node",
    "final_cost",
    "trees_created",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// The iteration cap ended the run before the node budget filled.
    Capped,
    /// The planner returned an error; counters are missing.
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Capped => "capped",
            RunStatus::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(RunStatus::Ok),
            "capped" => Some(RunStatus::Capped),
            "failed" => Some(RunStatus::Failed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub planner: String,
    pub map: String,
    pub pair: usize,
    pub repetition: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: Option<u64>,
    pub total_sampled: Option<u64>,
    /// Absent for PRM*, which has no connection step to fail.
    pub failed_connections: Option<u64>,
    pub points_in_cobs: Option<u64>,
    pub nodes: Option<u64>,
    pub first_solution_node: Option<u64>,
    pub final_cost: Option<f64>,
    pub trees_created: Option<u64>,
}

impl MetricsRow {
    pub fn from_result(map: &str, pair: usize, repetition: usize, result: &PlannerResult) -> Self {
        let s = &result.stats;
        MetricsRow {
            planner: result.planner.name().to_string(),
            map: map.to_string(),
            pair,
            repetition,
            seed: result.rng_seed,
            status: if s.capped { RunStatus::Capped } else { RunStatus::Ok },
            iterations: Some(s.iterations),
            total_sampled: Some(s.total_sampled()),
            failed_connections: (result.planner != PlannerKind::PrmStar).then_some(s.failed_connections),
            points_in_cobs: Some(s.samples_in_obstacle),
            nodes: Some(s.nodes_added),
            first_solution_node: s.first_solution_node,
            final_cost: s.best_cost,
            trees_created: Some(s.trees_created),
        }
    }

    pub fn failed(planner: PlannerKind, map: &str, pair: usize, repetition: usize, seed: u64) -> Self {
        MetricsRow {
            planner: planner.name().to_string(),
            map: map.to_string(),
            pair,
            repetition,
            seed,
            status: RunStatus::Failed,
            iterations: None,
            total_sampled: None,
            failed_connections: None,
            points_in_cobs: None,
            nodes: None,
            first_solution_node: None,
            final_cost: None,
            trees_created: None,
        }
    }

    /// `total_sampled = nodes + failed_connections + points_in_cobs`, with a
    /// missing failure count read as zero.
    pub fn identity_holds(&self) -> bool {
        match (self.total_sampled, self.nodes, self.points_in_cobs) {
            (Some(t), Some(n), Some(c)) => t == n + c + self.failed_connections.unwrap_or(0),
            (None, None, None) => self.status == RunStatus::Failed,
            _ => false,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.planner.clone(),
            self.map.clone(),
            self.pair.to_string(),
            self.repetition.to_string(),
            self.seed.to_string(),
            self.status.as_str().to_string(),
            opt(self.iterations),
            opt(self.total_sampled),
            opt(self.failed_connections),
            opt(self.points_in_cobs),
            opt(self.nodes),
            opt(self.first_solution_node),
            self.final_cost.map_or_else(|| NA.to_string(), |c| fmt_sig(c, 6)),
            opt(self.trees_created),
        ]
    }

    fn parse(line: usize, fields: &[&str]) -> Result<Self, BenchError> {
        let bad = |what: &str| BenchError::Csv(format!("line {line}: bad {what}"));
        if fields.len() != METRICS_HEADER.len() {
            return Err(bad("column count"));
        }
        let int = |i: usize| -> Result<Option<u64>, BenchError> {
            match fields[i] {
                NA => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(METRICS_HEADER[i])),
            }
        };
        Ok(MetricsRow {
            planner: fields[0].to_string(),
            map: fields[1].to_string(),
            pair: fields[2].parse().map_err(|_| bad("pair"))?,
            repetition: fields[3].parse().map_err(|_| bad("repetition"))?,
            seed: fields[4].parse().map_err(|_| bad("seed"))?,
            status: RunStatus::parse(fields[5]).ok_or_else(|| bad("status"))?,
            iterations: int(6)?,
            total_sampled: int(7)?,
            failed_connections: int(8)?,
            points_in_cobs: int(9)?,
            nodes: int(10)?,
            first_solution_node: int(11)?,
            final_cost: match fields[12] {
                NA => None,
                s => Some(s.parse().map_err(|_| bad("final_cost"))?),
            },
            trees_created: int(13)?,
        })
    }
}

pub const NA: &str = "NA";

fn opt(v: Option<u64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

/// `v` rounded to `sig` significant digits; plain notation for moderate
/// magnitudes, scientific otherwise.
pub fn fmt_sig(v: f64, sig: usize) -> String {
    if !v.is_finite() {
        return NA.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", sig - 1, v);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if exp < -4 || exp >= sig.max(6) as i32 {
        return sci;
    }
    let rounded: f64 = sci.parse().expect("valid float");
    let decimals = (sig as i32 - 1 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

pub fn write_metrics(rows: &[MetricsRow]) -> Result<String, BenchError> {
    let mut out = METRICS_HEADER.join(",");
    out.push('\n');
    for row in rows {
        if !row.identity_holds() {
            return Err(BenchError::Accounting(format!(
                "{} pair {} repetition {}",
                row.planner, row.pair, row.repetition
            )));
        }
        out.push_str(&row.fields().join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn read_metrics(text: &str) -> Result<Vec<MetricsRow>, BenchError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER.join(",") => {}
        _ => return Err(BenchError::Csv("missing or unexpected header".into())),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| MetricsRow::parse(i + 1, &l.trim().split(',').collect::<Vec<_>>()))
        .collect()
}

/// Best cost against tree size: every [`TRACE_INTERVAL`] nodes for the
/// incremental planners, at each roadmap query for PRM*.
pub fn trace(result: &PlannerResult) -> Vec<(u64, Option<f64>)> {
    let prm = result.planner == PlannerKind::PrmStar;
    let total = result.stats.nodes_added;
    let mut points = Vec::new();
    let (mut nodes, mut best) = (0u64, None);
    for e in &result.events {
        match e.kind {
            EventKind::NodeAdded => {
                nodes += 1;
                if !prm && nodes % TRACE_INTERVAL == 0 {
                    points.push((nodes, best));
                }
            }
            EventKind::SolutionImproved => {
                best = e.best_cost;
                // the improvement belongs to the sample that triggered it
                if let Some(last) = points.last_mut().filter(|p| p.0 == nodes) {
                    last.1 = best;
                }
            }
            _ => {}
        }
        if prm && e.kind == EventKind::NodeAdded && nodes % PRM_QUERY_INTERVAL == 0 {
            points.push((nodes, best));
        }
    }
    if prm && total >= PRM_QUERY_INTERVAL && !total.is_multiple_of(PRM_QUERY_INTERVAL) {
        points.push((total, best));
    }
    points
}

pub fn write_trace(points: &[(u64, Option<f64>)]) -> String {
    let mut out = String::from("nodes,best_cost\n");
    for (n, c) in points {
        let _ = writeln!(out, "{n},{}", c.map_or_else(|| NA.to_string(), |c| fmt_sig(c, 6)));
    }
    out
}
