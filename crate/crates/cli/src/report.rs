//! Report emission: CSV tables plus a JSON run manifest.
//!
//! Floats are written in shortest round-trip form and nothing time- or
//! machine-dependent goes into any report, so a rerun with the same seed
//! produces byte-identical files regardless of worker count.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{CliError, CliResult};

pub fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("creating output directory {}", dir.display()), e))
}

pub fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn finish_csv(mut writer: csv::Writer<fs::File>, path: &Path) -> CliResult<()> {
    writer
        .flush()
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_record<I, S>(writer: &mut csv::Writer<fs::File>, path: &Path, record: I) -> CliResult<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    writer
        .write_record(record)
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e.into()))
}

/// Shortest round-trip decimal form of a float (what the CSV layer uses).
pub fn fmt_f64(value: f64) -> String {
    let mut buffer = ryu_format(value);
    // Trim the ".0" suffix ryu puts on integral values; keeps columns tidy
    // while still round-tripping.
    if buffer.ends_with(".0") {
        buffer.truncate(buffer.len() - 2);
    }
    buffer
}

fn ryu_format(value: f64) -> String {
    // `Display` for f64 is the shortest representation that round-trips.
    format!("{value}")
}

/// Writes the JSON run manifest (config echo + seed + versions + outputs).
pub fn write_manifest(dir: &Path, manifest: &Value) -> CliResult<PathBuf> {
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::config(format!("serializing manifest: {e}")))?;
    body.push('\n');
    fs::write(&path, body).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

pub fn crate_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for value in [0.1, 1.0 / 3.0, 0.84, 1e-12, 123456.0, -0.25] {
            let text = fmt_f64(value);
            assert_eq!(text.parse::<f64>().unwrap(), value, "{text}");
        }
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(0.5), "0.5");
    }
}
