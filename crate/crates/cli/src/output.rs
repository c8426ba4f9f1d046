//! Deterministic file output: CSV tables with a config-echo header line
//! and JSON reports. Floats are printed in shortest round-trip form, so
//! identical configs produce byte-identical payloads and every value can
//! be re-read exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `42`, `0.1`, `1e-7`... shortest representation that parses back to the
/// same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub struct CsvBuilder {
    buf: String,
}

impl CsvBuilder {
    /// `config_echo` is the full flag set of the run; it lands in a `#`
    /// comment ahead of the column header.
    pub fn new(config_echo: &str, units: &str, columns: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# coopchain v{VERSION} | {config_echo} | {units}");
        let _ = writeln!(buf, "{}", columns.join(","));
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.buf, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Write the fully assembled payload in one shot; nothing lands on disk
/// when an earlier stage fails.
pub fn write_text(path: &Path, payload: &str) -> Result<()> {
    fs::write(path, payload).with_context(|| format!("writing {}", path.display()))
}

/// Read a trace CSV produced by `evolve` (or anything with the same
/// shape): `#` lines are ignored, the header names the columns, and the
/// requested pair of columns is returned.
pub fn read_trace_csv(path: &Path, x_col: &str, y_col: &str) -> Result<Vec<(f64, f64)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| anyhow!("{}: empty file", path.display()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let xi = names
        .iter()
        .position(|&c| c == x_col)
        .ok_or_else(|| anyhow!("{}: no column `{x_col}`", path.display()))?;
    let yi = names
        .iter()
        .position(|&c| c == y_col)
        .ok_or_else(|| anyhow!("{}: no column `{y_col}`", path.display()))?;
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |idx: usize| -> Result<f64> {
            fields
                .get(idx)
                .ok_or_else(|| anyhow!("{}: line {} too short", path.display(), k + 2))?
                .trim()
                .parse::<f64>()
                .with_context(|| format!("{}: line {}", path.display(), k + 2))
        };
        out.push((parse(xi)?, parse(yi)?));
    }
    if out.is_empty() {
        return Err(anyhow!("{}: no data rows", path.display()));
    }
    Ok(out)
}
