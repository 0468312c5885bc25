//! Regeneration of the damping, error-constant and coefficient tables.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::synth::json::sig17;
use crate::synth::{damping_increments, first_order, synthesize, OptimizeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Damping increments `Δ_j` of the first-order family, k = 2..10.
    Delta,
    /// Error constants, k = 2..10, p = 1..min(k-1, 6).
    ErrConst,
    /// Interval lengths and coefficients, k = 3..10, p = 2..min(k, 9).
    Coeffs,
}

impl std::str::FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(TableKind::Delta),
            "errconst" => Ok(TableKind::ErrConst),
            "coeffs" => Ok(TableKind::Coeffs),
            other => Err(Error::InvalidInput(format!("unknown table '{other}'"))),
        }
    }
}

/// Cells the optimizer is not expected to solve: no feasible method appears to exist there.
pub const EXPECTED_NOT_CONVERGED: [(usize, usize); 7] = [(7, 6), (8, 7), (9, 7), (9, 8), (10, 7), (10, 8), (10, 9)];

pub fn expected_to_converge(k: usize, p: usize) -> bool {
    !EXPECTED_NOT_CONVERGED.contains(&(k, p))
}

/// The `(k, p)` cells covered by a table, in row order.
pub fn cells(kind: TableKind) -> Vec<(usize, usize)> {
    match kind {
        TableKind::Delta => (2..=10).map(|k| (k, 1)).collect(),
        TableKind::ErrConst => (2..=10).flat_map(|k| (1..=(k - 1).min(6)).map(move |p| (k, p))).collect(),
        TableKind::Coeffs => (3..=10).flat_map(|k| (2..=k.min(9)).map(move |p| (k, p))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Values(Vec<f64>),
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub k: usize,
    pub p: usize,
    pub cell: Cell,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub kind: TableKind,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn get(&self, k: usize, p: usize) -> Option<&Cell> {
        self.rows.iter().find(|r| r.k == k && r.p == p).map(|r| &r.cell)
    }

    /// Cells that failed although a method is known to exist there.
    pub fn unexpected_failures(&self) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .filter(|r| r.cell == Cell::NotConverged && expected_to_converge(r.k, r.p))
            .map(|r| (r.k, r.p))
            .collect()
    }

    /// Wide CSV: `k,p,value_0,...`, short rows padded with empty fields.
    pub fn to_csv(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| match &r.cell {
                Cell::Values(v) => v.len(),
                Cell::NotConverged => 1,
            })
            .max()
            .unwrap_or(1);
        let mut out = String::from("k,p");
        for i in 0..width {
            let _ = write!(out, ",value_{i}");
        }
        out.push('\n');
        for row in &self.rows {
            let mut fields: Vec<String> = match &row.cell {
                Cell::Values(v) => v.iter().map(|x| sig17(*x)).collect(),
                Cell::NotConverged => vec!["NOT CONVERGED".to_string()],
            };
            fields.resize(width, String::new());
            let _ = writeln!(out, "{},{},{}", row.k, row.p, fields.join(","));
        }
        out
    }
}

fn cell_for(kind: TableKind, k: usize, p: usize, opts: &OptimizeOptions) -> Result<Cell> {
    let method = match kind {
        TableKind::Delta => return Ok(Cell::Values(damping_increments(&first_order(k)?.beta))),
        _ => synthesize(k, p, opts),
    };
    match method {
        Ok(m) => Ok(Cell::Values(match kind {
            TableKind::ErrConst => vec![m.error_const],
            _ => std::iter::once(m.ell).chain(m.beta().iter().copied()).collect(),
        })),
        Err(Error::NotConverged { .. }) => Ok(Cell::NotConverged),
        Err(e) => Err(e),
    }
}

/// Computes every cell of a table; cells run in parallel, rows come back in table order.
pub fn build_table(kind: TableKind, opts: &OptimizeOptions) -> Result<Table> {
    let rows = cells(kind)
        .into_par_iter()
        .map(|(k, p)| Ok(TableRow { k, p, cell: cell_for(kind, k, p, opts)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { kind, rows })
}
