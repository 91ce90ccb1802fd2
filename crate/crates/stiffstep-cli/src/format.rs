//! Table and number formatting shared by every subcommand.
//!
//! All numeric cells use uppercase scientific notation with a fixed count
//! of significant digits so that CSV and Markdown carry identical content;
//! non-finite values print as `***`.

use std::io::{self, Write};
use stiffstep::harness::ConvergenceRow;

/// Significant digits for step sizes.
pub const DT_DIGITS: usize = 8;
/// Significant digits for error norms in tables.
pub const ERROR_DIGITS: usize = 12;
/// Significant digits for trajectory output (full f64 round trip).
pub const TRAJECTORY_DIGITS: usize = 17;

/// Uppercase scientific notation with `sig` significant digits and a
/// signed, zero-padded exponent: `fmt_sci(321.8122 / 643.0, 8)` is
/// `"5.0048554E-01"`. Non-finite values render as `"***"`.
pub fn fmt_sci(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return "***".to_string();
    }
    let plain = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = plain.split_once('e').expect("scientific form");
    let e: i32 = exponent.parse().expect("integer exponent");
    format!("{mantissa}E{e:+03}")
}

/// Order cell: empty on the first row (nothing to extrapolate from),
/// `***` when an order cannot be formed later in the table (failed or
/// degenerate neighbor rows), ten decimal places otherwise.
fn order_cell(row_index: usize, order: Option<f64>) -> String {
    match order {
        Some(v) if v.is_finite() => format!("{v:.10}"),
        Some(_) => "***".to_string(),
        None if row_index == 0 => String::new(),
        None => "***".to_string(),
    }
}

fn iters_cell(avg: f64) -> String {
    if avg.is_finite() {
        format!("{avg:.3}")
    } else {
        "***".to_string()
    }
}

/// Column names of a convergence table, in emission order.
pub const STUDY_COLUMNS: [&str; 6] = [
    "dt",
    "error_l2",
    "order_l2",
    "error_linf",
    "order_linf",
    "avg_newton_iters",
];

/// Renders study rows to their string cells (shared by CSV and Markdown).
pub fn study_cells(rows: &[ConvergenceRow]) -> Vec<Vec<String>> {
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                fmt_sci(r.dt, DT_DIGITS),
                fmt_sci(r.error_l2, ERROR_DIGITS),
                order_cell(k, r.order_l2),
                fmt_sci(r.error_linf, ERROR_DIGITS),
                order_cell(k, r.order_linf),
                iters_cell(r.avg_newton_iters),
            ]
        })
        .collect()
}

/// Comma-separated table with a mandatory header row.
pub fn write_csv<W: Write + ?Sized>(
    out: &mut W,
    columns: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Pipe-delimited Markdown table with the same cell content as the CSV.
pub fn write_markdown<W: Write + ?Sized>(
    out: &mut W,
    columns: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    writeln!(out, "| {} |", columns.join(" | "))?;
    writeln!(
        out,
        "|{}",
        columns.iter().map(|_| " --- |").collect::<String>()
    )?;
    for row in rows {
        writeln!(out, "| {} |", row.join(" | "))?;
    }
    Ok(())
}
