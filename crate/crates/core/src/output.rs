//! CSV and JSON-lines writers.
//!
//! Floating-point values are written in scientific notation with 17
//! significant digits, which round-trips every `f64` exactly.

use std::io::{self, Write};

use crate::config::Format;
use crate::experiments::{BracketRow, ConvergenceReport, McStats, PositivityReport};
use crate::scheme::Trajectory;

/// 17-significant-digit representation of `x`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // JSON has no literal for these; CSV readers accept the Rust names.
        format!("{x}")
    }
}

fn json_value(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".to_string()
    }
}

/// A flat record of named fields, rendered as a CSV row or a JSON object.
enum Field {
    Int(u64),
    Float(f64),
    Bool(bool),
    Missing,
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => fmt_f64(*v),
            Field::Bool(v) => v.to_string(),
            Field::Missing => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => json_value(*v),
            Field::Bool(v) => v.to_string(),
            Field::Missing => "null".to_string(),
        }
    }
}

struct Table<'w, W: Write> {
    out: &'w mut W,
    format: Format,
    columns: &'static [&'static str],
}

impl<'w, W: Write> Table<'w, W> {
    fn start(out: &'w mut W, format: Format, columns: &'static [&'static str]) -> io::Result<Self> {
        if format == Format::Csv {
            writeln!(out, "{}", columns.join(","))?;
        }
        Ok(Table {
            out,
            format,
            columns,
        })
    }

    fn row(&mut self, fields: &[Field]) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.columns.len());
        match self.format {
            Format::Csv => {
                let cells: Vec<String> = fields.iter().map(Field::csv).collect();
                writeln!(self.out, "{}", cells.join(","))
            }
            Format::JsonLines => {
                let pairs: Vec<String> = self
                    .columns
                    .iter()
                    .zip(fields)
                    .map(|(name, f)| format!("\"{name}\":{}", f.json()))
                    .collect();
                writeln!(self.out, "{{{}}}", pairs.join(","))
            }
        }
    }
}

/// One row per (path, grid point), path-major and time-ascending.
pub fn write_trajectories<W: Write>(out: &mut W, trajectories: &[Trajectory], format: Format) -> io::Result<()> {
    let mut table = Table::start(out, format, &["path_id", "t", "z", "r"])?;
    for (id, traj) in trajectories.iter().enumerate() {
        for (k, t) in traj.grid().times().enumerate() {
            table.row(&[
                Field::Int(id as u64),
                Field::Float(t),
                Field::Float(traj.z_values()[k]),
                Field::Float(traj.r_values()[k]),
            ])?;
        }
    }
    Ok(())
}

/// Rows `n,median_sup_error,q25,q75` and a footer `fitted_order=..,r2=..`.
pub fn write_convergence<W: Write>(out: &mut W, report: &ConvergenceReport, format: Format) -> io::Result<()> {
    let mut table = Table::start(out, format, &["n", "median_sup_error", "q25", "q75"])?;
    for (i, &n) in report.n_list.iter().enumerate() {
        table.row(&[
            Field::Int(n as u64),
            Field::Float(report.sup_errors[i]),
            Field::Float(report.q25[i]),
            Field::Float(report.q75[i]),
        ])?;
    }
    match format {
        Format::Csv => writeln!(
            out,
            "fitted_order={},r2={}",
            fmt_f64(report.fitted_order),
            fmt_f64(report.fit_r2)
        ),
        Format::JsonLines => writeln!(
            out,
            "{{\"fitted_order\":{},\"r2\":{}}}",
            json_value(report.fitted_order),
            json_value(report.fit_r2)
        ),
    }
}

pub fn write_positivity<W: Write>(out: &mut W, report: &PositivityReport, format: Format) -> io::Result<()> {
    let mut table = Table::start(out, format, &["n_paths", "min_z", "min_r", "feller_ok"])?;
    table.row(&[
        Field::Int(report.n_paths as u64),
        Field::Float(report.min_z),
        Field::Float(report.min_r),
        Field::Bool(report.feller_ok),
    ])
}

pub fn write_mc_stats<W: Write>(out: &mut W, stats: &McStats, format: Format) -> io::Result<()> {
    let mut table = Table::start(
        out,
        format,
        &["t_eval", "sample_mean", "sample_se", "n_paths", "closed_form_mean"],
    )?;
    table.row(&[
        Field::Float(stats.t_eval),
        Field::Float(stats.sample_mean),
        Field::Float(stats.sample_se),
        Field::Int(stats.n_paths as u64),
        stats.closed_form_mean.map_or(Field::Missing, Field::Float),
    ])
}

pub fn write_bracket<W: Write>(out: &mut W, rows: &[BracketRow], format: Format) -> io::Result<()> {
    let mut table = Table::start(out, format, &["n", "refinement", "qv", "bracket_value"])?;
    for row in rows {
        table.row(&[
            Field::Int(row.n as u64),
            Field::Int(row.refinement as u64),
            Field::Float(row.qv),
            Field::Float(row.bracket_value),
        ])?;
    }
    Ok(())
}
