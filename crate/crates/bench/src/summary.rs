//! Mean ± 2σ per planner and map.

use crate::metrics::{fmt_sig, MetricsRow, RunStatus, NA};
use crate::BenchError;

pub const SUMMARY_HEADER: [&str; 10] = [
    "planner",
    "map",
    "runs",
    "solved",
    "total_sampled",
    "failed_connections",
    "points_in_cobs",
    "nodes",
    "first_solution_node",
    "final_cost",
];

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Moments {
            n: values.len(),
            mean,
            std_dev: var.sqrt(),
        })
    }

    /// `mean±2σ`, both to two significant figures.
    pub fn format(&self) -> String {
        format!("{}±{}", fmt_sig(self.mean, 2), fmt_sig(2.0 * self.std_dev, 2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub planner: String,
    pub map: String,
    pub runs: usize,
    pub solved: usize,
    /// Columns 4.. of [`SUMMARY_HEADER`], in order.
    pub cells: Vec<Option<Moments>>,
}

/// Group rows by (planner, map) in order of first appearance. Failed runs
/// count toward `runs` but contribute no values.
pub fn summarize(rows: &[MetricsRow]) -> Result<Vec<SummaryRow>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Csv("no metrics rows to summarize".into()));
    }
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let k = (r.planner.as_str(), r.map.as_str());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let columns: [fn(&MetricsRow) -> Option<f64>; 6] = [
        |r| r.total_sampled.map(|v| v as f64),
        |r| r.failed_connections.map(|v| v as f64),
        |r| r.points_in_cobs.map(|v| v as f64),
        |r| r.nodes.map(|v| v as f64),
        |r| r.first_solution_node.map(|v| v as f64),
        |r| r.final_cost,
    ];
    Ok(keys
        .into_iter()
        .map(|(planner, map)| {
            let group: Vec<&MetricsRow> = rows.iter().filter(|r| r.planner == planner && r.map == map).collect();
            let ok: Vec<&&MetricsRow> = group.iter().filter(|r| r.status != RunStatus::Failed).collect();
            SummaryRow {
                planner: planner.to_string(),
                map: map.to_string(),
                runs: group.len(),
                solved: ok.iter().filter(|r| r.final_cost.is_some()).count(),
                cells: columns
                    .iter()
                    .map(|col| Moments::of(&ok.iter().filter_map(|r| col(r)).collect::<Vec<_>>()))
                    .collect(),
            }
        })
        .collect())
}

pub fn write_summary(rows: &[SummaryRow]) -> String {
    let mut out = SUMMARY_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let mut fields = vec![r.planner.clone(), r.map.clone(), r.runs.to_string(), r.solved.to_string()];
        fields.extend(r.cells.iter().map(|c| c.map_or_else(|| NA.to_string(), |m| m.format())));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
