//! Flat TOML config files merged under command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Keys mirror the long flags with `-` replaced by `_`.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<OneOrMany<f64>>,
    pub ladder: Option<Vec<u64>>,
    pub margin: Option<f64>,
    pub delta: Option<f64>,
    pub dim: Option<OneOrMany<usize>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub budget_cells: Option<u64>,
    pub budget_table: Option<u64>,
    pub out: Option<PathBuf>,
    pub sequential: Option<bool>,
    pub n: Option<u64>,
    pub l: Option<u64>,
    pub events: Option<u64>,
    pub replicas: Option<u32>,
    pub clock: Option<String>,
    pub start: Option<String>,
    pub quantity: Option<OneOrMany<String>>,
    pub grid_lo: Option<u32>,
    pub grid_hi: Option<u32>,
}

pub fn load(path: &Path) -> Result<FileConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Values given on the command line; `None` defers to the file, then to the
/// default.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub alpha: Option<Vec<f64>>,
    pub ladder: Option<Vec<u64>>,
    pub margin: Option<f64>,
    pub delta: Option<f64>,
    pub dim: Option<Vec<usize>>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub budget_cells: Option<u64>,
    pub budget_table: Option<u64>,
    pub out: Option<PathBuf>,
    pub sequential: bool,
    pub n: Option<u64>,
    pub l: Option<u64>,
    pub events: Option<u64>,
    pub replicas: Option<u32>,
    pub clock: Option<String>,
    pub start: Option<String>,
    pub quantity: Option<Vec<String>>,
    pub grid_lo: Option<u32>,
    pub grid_hi: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub subcommand: String,
    pub alpha: Vec<f64>,
    pub ladder: Vec<u64>,
    pub margin: f64,
    pub delta: f64,
    pub dim: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub budget_cells: u64,
    pub budget_table: u64,
    pub out: PathBuf,
    pub sequential: bool,
    pub n: Option<u64>,
    pub l: Option<u64>,
    pub events: u64,
    pub replicas: u32,
    pub clock: String,
    pub start: String,
    pub quantity: Vec<String>,
    pub grid_lo: u32,
    pub grid_hi: u32,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn resolve(subcommand: &str, flags: Overrides, file: FileConfig) -> Result<Resolved, String> {
    let r = Resolved {
        subcommand: subcommand.to_string(),
        alpha: flags
            .alpha
            .or(file.alpha.map(OneOrMany::into_vec))
            .unwrap_or_else(|| vec![2.5]),
        ladder: flags.ladder.or(file.ladder).unwrap_or_else(|| vec![64, 128, 256]),
        margin: flags.margin.or(file.margin).unwrap_or(2.0),
        delta: flags.delta.or(file.delta).unwrap_or(1.5),
        dim: flags
            .dim
            .or(file.dim.map(OneOrMany::into_vec))
            .unwrap_or_else(|| vec![1]),
        samples: flags.samples.or(file.samples).unwrap_or(100_000),
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        budget_cells: flags.budget_cells.or(file.budget_cells).unwrap_or(2_000_000_000),
        budget_table: flags.budget_table.or(file.budget_table).unwrap_or(100_000_000),
        out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        sequential: flags.sequential || file.sequential.unwrap_or(false),
        n: flags.n.or(file.n),
        l: flags.l.or(file.l),
        events: flags.events.or(file.events).unwrap_or(1_000_000),
        replicas: flags.replicas.or(file.replicas).unwrap_or(1),
        clock: flags.clock.or(file.clock).unwrap_or_else(|| "time".into()),
        start: flags.start.or(file.start).unwrap_or_else(|| "condensed".into()),
        quantity: flags
            .quantity
            .or(file.quantity.map(OneOrMany::into_vec))
            .unwrap_or_else(|| vec!["rho_cN".into(), "Z_N".into(), "second_moment".into()]),
        grid_lo: flags.grid_lo.or(file.grid_lo).unwrap_or(10),
        grid_hi: flags.grid_hi.or(file.grid_hi).unwrap_or(20),
    };
    r.validate()?;
    Ok(r)
}

impl Resolved {
    fn validate(&self) -> Result<(), String> {
        if self.alpha.is_empty() || self.alpha.iter().any(|a| !a.is_finite() || *a <= 0.0) {
            return Err("alpha must be a non-empty list of positive numbers".into());
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|&l| l < 3) {
            return Err("ladder entries must be >= 3".into());
        }
        if self.margin.is_nan() || self.margin < 1.0 {
            return Err(format!("margin {} must be >= 1", self.margin));
        }
        if self.delta.is_nan() || self.delta <= 1.0 {
            return Err(format!("delta {} must be > 1", self.delta));
        }
        if self.dim.is_empty() || self.dim.iter().any(|d| !(1..=2).contains(d)) {
            return Err("dim entries must be 1 or 2".into());
        }
        if self.samples < 10_000 {
            return Err(format!("samples {} must be >= 10000", self.samples));
        }
        if self.replicas == 0 {
            return Err("replicas must be >= 1".into());
        }
        if !matches!(self.clock.as_str(), "time" | "events") {
            return Err(format!("clock '{}' must be 'time' or 'events'", self.clock));
        }
        if !matches!(self.start.as_str(), "condensed" | "balanced") {
            return Err(format!("start '{}' must be 'condensed' or 'balanced'", self.start));
        }
        if self.grid_lo < 1 || self.grid_lo > self.grid_hi || self.grid_hi > 40 {
            return Err(format!(
                "grid exponents {}..{} must satisfy 1 <= lo <= hi <= 40",
                self.grid_lo, self.grid_hi
            ));
        }
        Ok(())
    }
}
