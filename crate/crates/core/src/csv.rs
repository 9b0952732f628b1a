//! Minimal CSV emission with round-trip float formatting.

use std::io::{self, Write};

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_header<W: Write>(w: &mut W, columns: &[&str]) -> io::Result<()> {
    writeln!(w, "{}", columns.join(","))
}

pub fn write_row<W: Write>(w: &mut W, cells: &[String]) -> io::Result<()> {
    writeln!(w, "{}", cells.join(","))
}

pub fn write_float_rows<W, I>(w: &mut W, columns: &[&str], rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<f64>>,
{
    write_header(w, columns)?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(format_float).collect();
        write_row(w, &cells)?;
    }
    Ok(())
}
