//! Comparison of computed tables against the published values embedded in
//! [`crate::presets`] and [`crate::arcsine::PUBLISHED_PIECE_COUNTS`].

use serde::Serialize;

use crate::arcsine::{reproduce_table, TableRow};
use crate::error::Result;
use crate::presets::{all_presets, preset};
use crate::resource::{estimate_case, scaling_report, ResourceReport};

/// Bins used for the T-count slope.
pub const SCALING_BINS: [u32; 6] = [40, 63, 100, 126, 200, 400];

/// Minimum number of arcsine rows that must match exactly.
pub const MIN_EXACT_ARCSINE_ROWS: usize = 10;

/// One compared value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub table: String,
    pub row: String,
    pub column: String,
    pub computed: f64,
    pub published: f64,
    pub tolerance: String,
    pub pass: bool,
}

fn relative(
    table: &str,
    row: &str,
    column: &str,
    computed: f64,
    published: f64,
    band: f64,
) -> Cell {
    Cell {
        table: table.into(),
        row: row.into(),
        column: column.into(),
        computed,
        published,
        tolerance: format!("±{}%", band * 100.0),
        pass: ((computed - published) / published).abs() <= band,
    }
}

fn range(
    table: &str,
    row: &str,
    column: &str,
    computed: f64,
    published: f64,
    lo: f64,
    hi: f64,
) -> Cell {
    Cell {
        table: table.into(),
        row: row.into(),
        column: column.into(),
        computed,
        published,
        tolerance: format!("[{lo}, {hi}]"),
        pass: (lo..=hi).contains(&computed),
    }
}

/// Resource reports of all presets, in preset order.
pub fn preset_reports() -> Result<Vec<(String, ResourceReport)>> {
    all_presets()
        .into_iter()
        .map(|(name, case, _)| Ok((name.to_string(), estimate_case(&case)?)))
        .collect()
}

/// T-count, T-depth, qubit and error-budget cells for every preset.
pub fn resource_cells(reports: &[(String, ResourceReport)]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for ((name, r), (_, _, published)) in reports.iter().zip(all_presets()) {
        cells.push(relative(
            "resources",
            name,
            "t_count",
            r.totals.t_count as f64,
            published.t_count,
            0.15,
        ));
        cells.push(relative(
            "resources",
            name,
            "t_depth",
            r.totals.t_depth as f64,
            published.t_depth,
            0.30,
        ));
        cells.push(relative(
            "resources",
            name,
            "logical_qubits",
            r.totals.logical_qubits as f64,
            published.logical_qubits,
            0.10,
        ));
        cells.push(relative(
            "resources",
            name,
            "eps_max",
            r.error.eps_max,
            published.eps_max,
            0.20,
        ));
    }
    cells
}

/// Ratio and slope cells for the scaling claims.
pub fn scaling_cells(reports: &[(String, ResourceReport)]) -> Result<Vec<Cell>> {
    let t = |k: usize| reports[k].1.totals.t_count as f64;
    let totals: Vec<f64> = all_presets().iter().map(|p| p.2.t_count).collect();
    let mut cells = vec![
        range(
            "scaling",
            "N x10",
            "t_count_ratio",
            t(2) / t(0),
            totals[2] / totals[0],
            120.0,
            230.0,
        ),
        range(
            "scaling",
            "M x10",
            "t_count_ratio",
            t(3) / t(0),
            totals[3] / totals[0],
            9.0,
            14.0,
        ),
        range(
            "scaling",
            "eps /10",
            "t_count_ratio",
            t(4) / t(0),
            totals[4] / totals[0],
            12.0,
            22.0,
        ),
    ];
    let slope = scaling_report(&SCALING_BINS, &preset("paper-case-1")?)?.loglog_slope;
    cells.push(range("scaling", "N", "loglog_slope", slope, 2.0, 1.8, 2.4));
    Ok(cells)
}

/// Per-row piece counts (within 2), verification errors and the exact-match tally.
pub fn arcsine_cells(rows: &[TableRow]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for r in rows {
        let row = format!("eps={:e} d={}", r.eps, r.degree);
        cells.push(Cell {
            table: "arcsine".into(),
            row: row.clone(),
            column: "M".into(),
            computed: r.pieces as f64,
            published: r.published as f64,
            tolerance: "±2".into(),
            pass: r.pieces.abs_diff(r.published) <= 2,
        });
        cells.push(Cell {
            table: "arcsine".into(),
            row,
            column: "verified_error".into(),
            computed: r.verified_error,
            published: r.eps,
            tolerance: "< eps".into(),
            pass: r.verified_error < r.eps,
        });
    }
    let exact = rows.iter().filter(|r| r.pieces == r.published).count();
    cells.push(Cell {
        table: "arcsine".into(),
        row: "all".into(),
        column: "exact_rows".into(),
        computed: exact as f64,
        published: rows.len() as f64,
        tolerance: format!(">= {MIN_EXACT_ARCSINE_ROWS}"),
        pass: exact >= MIN_EXACT_ARCSINE_ROWS,
    });
    cells
}

/// Every golden cell; the arcsine search uses `grid` points per piece.
pub fn reproduce_tables(grid: usize) -> Result<Vec<Cell>> {
    let reports = preset_reports()?;
    let mut cells = resource_cells(&reports);
    cells.extend(scaling_cells(&reports)?);
    cells.extend(arcsine_cells(&reproduce_table(grid)?));
    Ok(cells)
}
