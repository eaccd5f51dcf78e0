//! CSV and JSON emission helpers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rankfield::LogBinnedSeries;

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("creating output file {}", path.display())
    })?))
}

/// Formats a float for CSV; NaN (empty bin statistics) becomes an empty cell.
pub fn cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn write_pagerank_csv<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    writeln!(w, "node,pagerank")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

/// Histogram rows: bin bounds, count, and density.
pub fn write_histogram_csv<W: Write>(
    mut w: W,
    header_value: &str,
    series: &LogBinnedSeries,
) -> Result<()> {
    writeln!(w, "{header_value}_bin_low,{header_value}_bin_high,count,density")?;
    for b in 0..series.bin_count() {
        writeln!(
            w,
            "{},{},{},{}",
            series.edges[b],
            series.edges[b + 1],
            series.counts[b],
            cell(series.density(b)),
        )?;
    }
    Ok(())
}

/// Prints the subcommand's JSON summary on stdout.
pub fn emit_summary(summary: &serde_json::Value) {
    println!("{summary:#}");
}
