//! Deterministic file output: atomic writes, RFC-4180-style CSV with
//! round-trip-exact floats, and gnuplot-ready columnar plot data.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

pub use crate::config::fmt_f64;

/// Write-temp-then-rename; never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".to_string(),
    });
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// CSV with a header row; cells are either pre-formatted strings or floats
/// rendered with 17 significant digits.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push_str("\r\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        text.push_str(&cells.join(","));
        text.push_str("\r\n");
    }
    write_atomic(path, text.as_bytes())
}

/// Whitespace-separated columns with `#` header comments, one file per
/// diagnostic family.
pub fn write_plot_data(path: &Path, comment: &str, columns: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# {comment}\n"));
    text.push_str(&format!("# columns: {}\n", columns.join(" ")));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Minimal gnuplot stub loading the emitted data files.
pub fn write_plot_stub(path: &Path, entries: &[(String, String)]) -> io::Result<()> {
    let mut text = String::from("# gnuplot stub; run: gnuplot -p plot.gp\n");
    for (file, title) in entries {
        text.push_str(&format!("plot '{file}' using 1:2 with lines title '{title}'\npause -1\n"));
    }
    write_atomic(path, text.as_bytes())
}
