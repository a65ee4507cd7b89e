//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// Every table starts with the provenance columns `alpha, L, N, seed`.
    pub fn new(extra: &[&'static str]) -> Self {
        let mut header = vec!["alpha", "L", "N", "seed"];
        header.extend_from_slice(extra);
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, alpha: f64, l: u64, n: u64, seed: u64, rest: Vec<String>) {
        let mut row = vec![num(alpha), l.to_string(), n.to_string(), seed.to_string()];
        row.extend(rest);
        assert_eq!(row.len(), self.header.len(), "row width");
        debug_assert!(row.iter().all(|f| !f.contains(',')));
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JobStatus {
    pub index: u32,
    pub alpha: f64,
    pub l: Option<u64>,
    pub n: Option<u64>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Governor {
    pub max_cells: u64,
    pub max_table: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub config: &'a C,
    pub seed: u64,
    pub rounding_rule: &'static str,
    pub governor: Governor,
    pub parallel: bool,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub csv: String,
    pub rows: usize,
    pub jobs: &'a [JobStatus],
}

pub const SCHEMA_VERSION: u32 = 1;

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.manifest.json`.
pub fn write_run<C: Serialize>(
    dir: &Path,
    stem: &str,
    table: &Table,
    manifest: &Manifest<'_, C>,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv, table.to_csv())?;
    let json = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    std::fs::write(dir.join(format!("{stem}.manifest.json")), json + "\n")?;
    Ok(csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, -7.25e12] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.8), "8.0000000000000004e-1");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn provenance_columns_lead() {
        let mut t = Table::new(&["ratio"]);
        t.push(2.5, 64, 206, 7, vec![num(1.0)]);
        assert_eq!(
            t.to_csv(),
            "alpha,L,N,seed,ratio\n2.5000000000000000e0,64,206,7,1.0000000000000000e0\n"
        );
    }
}
