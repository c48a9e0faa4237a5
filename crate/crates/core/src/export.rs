//! CSV writers. Every file uses `,` separators, `.` decimals and LF line ends.

use serde::Serialize;

use crate::arcsine::TableRow;
use crate::division::HistoryBranch;
use crate::error::{Error, Result};
use crate::golden::Cell;
use crate::master::ProbabilityTable;
use crate::resource::ResourceReport;

fn write_rows<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

#[derive(Serialize)]
struct CountRow {
    step: u64,
    bin: u32,
    expected_count: f64,
}

/// `step,bin,expected_count` rows from per-step expected counts (bin 1 first).
pub fn counts_csv(series: &[(u64, Vec<f64>)]) -> Result<String> {
    write_rows(series.iter().flat_map(|(step, counts)| {
        counts.iter().enumerate().map(move |(k, &c)| CountRow {
            step: *step,
            bin: k as u32 + 1,
            expected_count: c,
        })
    }))
}

#[derive(Serialize)]
struct StateRow {
    step: u64,
    state_id: String,
    probability: f64,
}

/// `step,state_id,probability` rows; states are written as their occupation vectors.
pub fn states_csv(tables: &[ProbabilityTable]) -> Result<String> {
    write_rows(tables.iter().flat_map(|t| {
        t.iter().map(move |(s, p)| StateRow {
            step: t.step(),
            state_id: s.to_string(),
            probability: p,
        })
    }))
}

#[derive(Serialize)]
struct BranchRow {
    history: String,
    state: String,
    probability: f64,
}

/// `history,state,probability` rows, one per tree branch.
pub fn branches_csv(branches: &[HistoryBranch]) -> Result<String> {
    write_rows(branches.iter().map(|b| BranchRow {
        history: b.history_string(),
        state: b.state.to_string(),
        probability: b.prob,
    }))
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    case: &'a str,
    eps_max: f64,
    t_count: u128,
    t_depth: u128,
    logical_qubits: u64,
}

/// Resource summary with columns `case,eps_max,t_count,t_depth,logical_qubits`.
pub fn summary_csv(reports: &[(String, ResourceReport)]) -> Result<String> {
    write_rows(reports.iter().map(|(name, r)| SummaryRow {
        case: name,
        eps_max: r.error.eps_max,
        t_count: r.totals.t_count,
        t_depth: r.totals.t_depth,
        logical_qubits: r.totals.logical_qubits,
    }))
}

#[derive(Serialize)]
struct PieceCountRow {
    eps: f64,
    d: u32,
    #[serde(rename = "M")]
    m: usize,
    max_error: f64,
}

/// Arcsine piece counts with columns `eps,d,M,max_error`.
pub fn arcsine_table_csv(rows: &[TableRow]) -> Result<String> {
    write_rows(rows.iter().map(|r| PieceCountRow {
        eps: r.eps,
        d: r.degree,
        m: r.pieces,
        max_error: r.max_error,
    }))
}

/// One line of a pipeline sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_eps: u32,
    pub eps_arcsin: f64,
    pub max_error: f64,
    pub mean_error: f64,
    pub samples: usize,
}

/// Sweep summary with columns `n_eps,eps_arcsin,max_error,mean_error,samples`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    write_rows(rows)
}

/// Golden comparison with one line per cell.
pub fn cells_csv(cells: &[Cell]) -> Result<String> {
    write_rows(cells)
}
