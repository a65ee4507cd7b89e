//! `zrp-lab`: exact and sampled condensation experiments from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad arguments or config,
//! 3 a job was infeasible under the budget, 4 a numeric invariant failed.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use zrp_core::analysis::ROUNDING_RULE;

pub use config::{FileConfig, Overrides, Resolved, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "zrp-lab", version, about = "Zero range process condensation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact canonical marginal and maximum law at one (N, L).
    Exact {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        size: Size,
    },
    /// Local limit ratio along a schedule ladder.
    Llt {
        #[command(flatten)]
        common: Common,
    },
    /// Masses of the no/one/two large site events along a ladder.
    Events {
        #[command(flatten)]
        common: Common,
    },
    /// Projected background TV and condensate profile along a ladder.
    Theorem {
        #[command(flatten)]
        common: Common,
    },
    /// Continuous-time dynamics on a ring.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        size: Size,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Growth of the critical truncated quantities over N = 2^lo ..= 2^hi.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scan: ScanArgs,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Comma separated exponents.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Comma separated site counts.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<u64>>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Projection dimensions, 1 and/or 2.
    #[arg(long, value_delimiter = ',')]
    dim: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on N * L.
    #[arg(long)]
    budget_cells: Option<u64>,
    /// Cap on the padded working table length.
    #[arg(long)]
    budget_table: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with the same keys; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct Size {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    l: Option<u64>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    replicas: Option<u32>,
    /// `time` or `events`.
    #[arg(long)]
    clock: Option<String>,
    /// `condensed` or `balanced`.
    #[arg(long)]
    start: Option<String>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Any of rho_cN, Z_N, second_moment.
    #[arg(long, value_delimiter = ',')]
    quantity: Option<Vec<String>>,
    #[arg(long)]
    grid_lo: Option<u32>,
    #[arg(long)]
    grid_hi: Option<u32>,
}

fn overrides(c: Common) -> (Overrides, Option<PathBuf>) {
    (
        Overrides {
            alpha: c.alpha,
            ladder: c.ladder,
            margin: c.margin,
            delta: c.delta,
            dim: c.dim,
            samples: c.samples,
            seed: c.seed,
            budget_cells: c.budget_cells,
            budget_table: c.budget_table,
            out: c.out,
            sequential: c.sequential,
            ..Default::default()
        },
        c.config,
    )
}

fn split(cmd: Command) -> (&'static str, Overrides, Option<PathBuf>) {
    match cmd {
        Command::Exact { common, size } => {
            let (mut o, p) = overrides(common);
            o.n = size.n;
            o.l = size.l;
            ("exact", o, p)
        }
        Command::Llt { common } => {
            let (o, p) = overrides(common);
            ("llt", o, p)
        }
        Command::Events { common } => {
            let (o, p) = overrides(common);
            ("events", o, p)
        }
        Command::Theorem { common } => {
            let (o, p) = overrides(common);
            ("theorem", o, p)
        }
        Command::Simulate { common, size, sim } => {
            let (mut o, p) = overrides(common);
            o.n = size.n;
            o.l = size.l;
            o.events = sim.events;
            o.replicas = sim.replicas;
            o.clock = sim.clock;
            o.start = sim.start;
            ("simulate", o, p)
        }
        Command::Scan { common, scan } => {
            let (mut o, p) = overrides(common);
            o.quantity = scan.quantity;
            o.grid_lo = scan.grid_lo;
            o.grid_hi = scan.grid_hi;
            ("scan", o, p)
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, flags, path) = split(cli.command);
    let file = match path.as_deref().map(config::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cfg = match config::resolve(name, flags, file) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    execute(&cfg)
}

fn execute(cfg: &Resolved) -> i32 {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let result = match cfg.subcommand.as_str() {
        "exact" => commands::exact(cfg),
        "llt" => commands::llt(cfg),
        "events" => commands::events(cfg),
        "theorem" => commands::theorem(cfg),
        "simulate" => commands::simulate_cmd(cfg),
        "scan" => commands::scan(cfg),
        other => Err(format!("unknown subcommand {other}")),
    };
    let run = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let manifest = output::Manifest {
        schema_version: output::SCHEMA_VERSION,
        tool: "zrp-lab",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: &cfg.subcommand,
        config: cfg,
        seed: cfg.seed,
        rounding_rule: ROUNDING_RULE,
        governor: output::Governor {
            max_cells: cfg.budget_cells,
            max_table: cfg.budget_table,
        },
        parallel: !cfg.sequential && cfg!(feature = "parallel"),
        started_unix_seconds: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        csv: format!("{}.csv", cfg.subcommand),
        rows: run.table.len(),
        jobs: &run.jobs,
    };
    let csv = match output::write_run(&cfg.out, &cfg.subcommand, &run.table, &manifest) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: writing {}: {e}", cfg.out.display());
            return 1;
        }
    };
    for line in &run.summary {
        println!("{line}");
    }
    println!("wrote {} rows to {}", run.table.len(), csv.display());
    exit_code(&run.jobs)
}

fn exit_code(jobs: &[output::JobStatus]) -> i32 {
    let worst = jobs.iter().map(|j| match j.status {
        "ok" => 0,
        "infeasible" => 3,
        "invariant" => 4,
        _ => 2,
    });
    // invariant failures outrank infeasibility, which outranks bad input
    worst
        .max_by_key(|c| match c {
            4 => 3,
            3 => 2,
            2 => 1,
            _ => 0,
        })
        .unwrap_or(0)
}
