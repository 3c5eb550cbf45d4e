//! The CSV interchange format shared by `simulate`, `bounds` and the plotting
//! scripts: header `t,scope,metric,mean,sem,runs,label`.
//!
//! Scopes are `group`, `agent:<k>` (1-based) and `bound:<kind>`; metrics are
//! `cum_regret` and `collisions`. Rows are grouped by label, then scope, with
//! `t` ascending inside each group.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentSummary;
use crate::regret::{BoundCurve, RewardModel};

pub const HEADER: [&str; 7] = ["t", "scope", "metric", "mean", "sem", "runs", "label"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub t: usize,
    pub scope: String,
    pub metric: String,
    pub mean: f64,
    pub sem: f64,
    pub runs: usize,
    pub label: String,
}

fn series(
    rows: &mut Vec<CsvRow>,
    label: &str,
    scope: &str,
    metric: &str,
    mean: &[f64],
    sem: &[f64],
    runs: usize,
) {
    rows.extend(
        mean.iter()
            .zip(sem)
            .enumerate()
            .map(|(i, (&m, &s))| CsvRow {
                t: i + 1,
                scope: scope.to_string(),
                metric: metric.to_string(),
                mean: m,
                sem: s,
                runs,
                label: label.to_string(),
            }),
    );
}

/// Group regret (plus collisions for the constrained model), then each agent.
pub fn summary_rows(s: &ExperimentSummary) -> Vec<CsvRow> {
    let mut rows = Vec::with_capacity((s.num_agents + 2) * s.horizon);
    series(
        &mut rows,
        &s.label,
        "group",
        "cum_regret",
        &s.group_mean,
        &s.group_sem,
        s.runs,
    );
    if s.model == RewardModel::Constrained {
        series(
            &mut rows,
            &s.label,
            "group",
            "collisions",
            &s.collision_mean,
            &s.collision_sem,
            s.runs,
        );
    }
    for k in 0..s.num_agents {
        let scope = format!("agent:{}", k + 1);
        series(
            &mut rows,
            &s.label,
            &scope,
            "cum_regret",
            &s.agent_mean[k],
            &s.agent_sem[k],
            s.runs,
        );
    }
    rows
}

/// One `bound:<kind>` scope per curve, with zero sem and zero runs.
pub fn bound_rows(label: &str, curves: &[BoundCurve]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for c in curves {
        let zeros = vec![0.0; c.values.len()];
        series(
            &mut rows,
            label,
            &format!("bound:{}", c.kind.name()),
            "cum_regret",
            &c.values,
            &zeros,
            0,
        );
    }
    rows
}

pub fn write_rows<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(HEADER).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[CsvRow]) -> String {
    let mut buf = Vec::new();
    write_rows(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// Parses a file written by [`write_rows`], checking the header.
pub fn read_rows<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(HEADER) {
        return Err(Error::Config(format!(
            "unexpected CSV header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(pos) => Error::Config(format!("CSV line {}: {e}", pos.line())),
        None => Error::Io(e.to_string()),
    }
}
