//! CSV import and export of contours, grid fields, traces and histories.
//!
//! Every floating-point value is written with 17 significant digits so a
//! read-back reproduces the original bits.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{argument, Error, Result};
use crate::geometry::{Contour, ContourFunction, Point};
use crate::gradient::ShapeGradient;
use crate::optimize::{KappaTable, OptimizationTrace};
use crate::solver::CoupledSolution;
use crate::spectral::{ChebGrid, GridField};

pub const CONTOUR_HEADER: [&str; 3] = ["s", "x", "y"];
pub const GRID_HEADER: [&str; 3] = ["x", "y", "value"];
pub const TRACES_HEADER: [&str; 5] = ["s", "u", "dn_u1", "dn_u2", "mu"];
pub const GRADIENT_HEADER: [&str; 3] = ["s", "grad_l2", "grad_h1"];
pub const HISTORY_HEADER: [&str; 6] = ["iter", "J", "L", "tau", "grad_l2_norm", "grad_h1_norm"];
pub const KAPPA_HEADER: [&str; 4] = ["epsilon", "J", "kappa", "abs_kappa_minus_1"];

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header and string rows.
pub fn write_rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Parses a numeric table, checking the header.
fn read_rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(argument(format!("expected header {}, found {}", header.join(","), found.join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| argument(format!("row {}: '{f}' is not a number", line + 2))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_contour<W: Write>(out: W, contour: &Contour) -> Result<()> {
    let s = contour.arc_positions();
    write_rows(out, &CONTOUR_HEADER, contour.points().iter().zip(&s).map(|(p, s)| floats(&[*s, p[0], p[1]])))
}

/// Reads nodes in file order; the `s` column is informational.
pub fn read_contour<R: Read>(input: R) -> Result<Contour> {
    let rows = read_rows(input, &CONTOUR_HEADER)?;
    Contour::new(rows.iter().map(|r| [r[1], r[2]] as Point).collect())
}

pub fn write_grid<W: Write>(out: W, grid: &ChebGrid, field: &GridField) -> Result<()> {
    if field.n != grid.n() {
        return Err(argument(format!("field has {} points per axis, grid has {}", field.n, grid.n())));
    }
    write_rows(
        out,
        &GRID_HEADER,
        field.values.iter().enumerate().map(|(idx, v)| {
            let p = grid.point(idx);
            floats(&[p[0], p[1], *v])
        }),
    )
}

/// Reads a field written by [`write_grid`]; the row count must be a square.
pub fn read_grid<R: Read>(input: R) -> Result<GridField> {
    let rows = read_rows(input, &GRID_HEADER)?;
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n * n != rows.len() {
        return Err(argument(format!("{} grid rows is not a square count", rows.len())));
    }
    let grid = ChebGrid::new(n)?;
    for (idx, r) in rows.iter().enumerate() {
        let p = grid.point(idx);
        if (r[0] - p[0]).abs() > 1e-12 || (r[1] - p[1]).abs() > 1e-12 {
            return Err(argument(format!("row {} is not at Chebyshev node ({}, {})", idx + 2, p[0], p[1])));
        }
    }
    GridField::new(n, rows.into_iter().map(|r| r[2]).collect())
}

pub fn write_traces<W: Write>(out: W, sol: &CoupledSolution) -> Result<()> {
    let s = sol.contour.arc_positions();
    write_rows(
        out,
        &TRACES_HEADER,
        (0..s.len()).map(|i| {
            floats(&[s[i], sol.u_on_c.values[i], sol.dn_u1.values[i], sol.dn_u2.values[i], sol.mu.values[i]])
        }),
    )
}

pub fn write_gradient<W: Write>(out: W, contour: &Contour, grad: &ShapeGradient) -> Result<()> {
    let s = contour.arc_positions();
    write_rows(out, &GRADIENT_HEADER, (0..s.len()).map(|i| floats(&[s[i], grad.l2.values[i], grad.h1.values[i]])))
}

pub fn write_history<W: Write>(out: W, trace: &OptimizationTrace) -> Result<()> {
    write_rows(
        out,
        &HISTORY_HEADER,
        trace.records.iter().map(|r| {
            let mut row = vec![r.iter.to_string()];
            row.extend(floats(&[r.j, r.length, r.tau, r.grad_l2_norm, r.grad_h1_norm]));
            row
        }),
    )
}

pub fn write_kappa<W: Write>(out: W, table: &KappaTable) -> Result<()> {
    write_rows(
        out,
        &KAPPA_HEADER,
        table.points.iter().map(|p| floats(&[p.epsilon, p.j, p.kappa, (p.kappa - 1.0).abs()])),
    )
}

/// Writes a contour function sampled at the contour nodes as `s,<name>`.
pub fn write_contour_function<W: Write>(out: W, contour: &Contour, name: &str, f: &ContourFunction) -> Result<()> {
    let s = contour.arc_positions();
    write_rows(out, &["s", name], s.iter().zip(&f.values).map(|(s, v)| floats(&[*s, *v])))
}

macro_rules! to_file {
    ($name:ident, $inner:ident, $($arg:ident: $ty:ty),*) => {
        pub fn $name(path: &Path, $($arg: $ty),*) -> Result<()> {
            $inner(create(path)?, $($arg),*)
        }
    };
}

to_file!(save_contour, write_contour, contour: &Contour);
to_file!(save_grid, write_grid, grid: &ChebGrid, field: &GridField);
to_file!(save_traces, write_traces, sol: &CoupledSolution);
to_file!(save_gradient, write_gradient, contour: &Contour, grad: &ShapeGradient);
to_file!(save_history, write_history, trace: &OptimizationTrace);
to_file!(save_kappa, write_kappa, table: &KappaTable);

pub fn load_contour(path: &Path) -> Result<Contour> {
    read_contour(open(path)?)
}

pub fn load_grid(path: &Path) -> Result<GridField> {
    read_grid(open(path)?)
}
