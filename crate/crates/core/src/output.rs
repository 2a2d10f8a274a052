//! Fixed-width float formatting for reproducible CSV output.

use std::io::{self, Write};

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0"
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

/// Writes one CSV row of floats.
pub fn write_row<W: Write>(out: &mut W, values: &[f64]) -> io::Result<()> {
    let row: Vec<String> = values.iter().map(|&v| format_float(v)).collect();
    writeln!(out, "{}", row.join(","))
}
