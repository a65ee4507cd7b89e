//! One function per subcommand, each filling a table and a job list.

use zrp_core::analysis::{
    background_tv_estimate, build_schedule_with, condensate_profile, doubling_grid, event_decomposition, llt_ratio,
    order_check, tv, Budget, Schedule,
};
use zrp_core::canonical::{marginal_law, max_law_exact, OccupancyConfig};
use zrp_core::dynamics::{
    enumerate_state_space, simulate, state_space_size, stationary_law, ClockMode, Horizon, StateOccupation,
};
use zrp_core::ensemble::{critical_density_truncated, Alpha, Quantity};
use zrp_core::logconv::canonical_partition_log;
use zrp_core::rng::seed_streams;
use zrp_core::stats::tv_distance;
use zrp_core::{Exec, ZrpError};

use crate::config::Resolved;
use crate::output::{num, JobStatus, Table};

/// Largest state space the simulate command tracks state by state.
pub const TRACKED_STATES: u128 = 100_000;

pub struct Run {
    pub table: Table,
    pub jobs: Vec<JobStatus>,
    pub summary: Vec<String>,
}

impl Run {
    fn new(table: Table) -> Self {
        Run {
            table,
            jobs: Vec::new(),
            summary: Vec::new(),
        }
    }

    fn ok(&mut self, alpha: f64, l: Option<u64>, n: Option<u64>) {
        let index = self.jobs.len() as u32;
        self.jobs.push(JobStatus {
            index,
            alpha,
            l,
            n,
            status: "ok",
            detail: None,
        });
    }

    fn failed(&mut self, alpha: f64, l: Option<u64>, e: &ZrpError) {
        let index = self.jobs.len() as u32;
        let n = match e {
            ZrpError::Infeasible { required_n, .. } => Some(*required_n),
            _ => None,
        };
        self.summary.push(format!(
            "alpha={alpha} L={}: {e}",
            l.map_or("-".into(), |v| v.to_string())
        ));
        self.jobs.push(JobStatus {
            index,
            alpha,
            l,
            n,
            status: status_of(e),
            detail: Some(e.to_string()),
        });
    }

    fn next_job(&self) -> u32 {
        self.jobs.len() as u32
    }
}

pub fn status_of(e: &ZrpError) -> &'static str {
    match e {
        ZrpError::Infeasible { .. } | ZrpError::StateSpaceTooLarge { .. } => "infeasible",
        ZrpError::Invariant(_) | ZrpError::Range { .. } | ZrpError::DivergentDensity { .. } => "invariant",
        _ => "invalid",
    }
}

fn budget(cfg: &Resolved) -> Budget {
    Budget {
        max_cells: cfg.budget_cells,
        max_table: cfg.budget_table,
    }
}

fn exec(cfg: &Resolved) -> Exec {
    if cfg.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn schedule(cfg: &Resolved, a: Alpha, l: u64) -> zrp_core::Result<Schedule> {
    build_schedule_with(a, l, cfg.margin, cfg.delta, &budget(cfg))
}

fn require(v: Option<u64>, name: &str) -> Result<u64, String> {
    v.ok_or_else(|| format!("--{name} is required"))
}

pub fn exact(cfg: &Resolved) -> Result<Run, String> {
    let n = require(cfg.n, "n")?;
    let l = require(cfg.l, "l")?;
    if l < 1 {
        return Err("--l must be >= 1".into());
    }
    let mut run = Run::new(Table::new(&["k", "marginal", "max_law", "log_Z_NL", "rho_cN"]));
    for &al in &cfg.alpha {
        let a = Alpha::new(al).map_err(|e| e.to_string())?;
        let res = (|| {
            let log_z = canonical_partition_log(a, n as usize, l)?;
            let marg = marginal_law(a, n as usize, l as usize)?;
            let max = max_law_exact(a, n as usize, l as usize)?;
            Ok::<_, ZrpError>((log_z, marg, max))
        })();
        match res {
            Ok((log_z, marg, max)) => {
                let rho = critical_density_truncated(a, n);
                for (k, p) in marg.iter().enumerate() {
                    run.table.push(
                        al,
                        l,
                        n,
                        cfg.seed,
                        vec![k.to_string(), num(*p), num(max.mass(k)), num(log_z), num(rho)],
                    );
                }
                let shown: Vec<String> = marg.iter().take(12).map(|p| format!("{p}")).collect();
                let more = if marg.len() > 12 { ", ..." } else { "" };
                run.summary.push(format!(
                    "alpha={al} N={n} L={l}: Z_NL = {:?}, rho_cN = {rho:?}, marginal ({}{more})",
                    log_z.exp(),
                    shown.join(", ")
                ));
                run.ok(al, Some(l), Some(n));
            }
            Err(e) => run.failed(al, Some(l), &e),
        }
    }
    Ok(run)
}

pub fn llt(cfg: &Resolved) -> Result<Run, String> {
    let mut run = Run::new(Table::new(&[
        "rho_L",
        "k_L",
        "rho_cN",
        "center",
        "idx",
        "log_numerator",
        "log_denominator",
        "ratio",
    ]));
    for &al in &cfg.alpha {
        let a = Alpha::new(al).map_err(|e| e.to_string())?;
        for &l in &cfg.ladder {
            match schedule(cfg, a, l).and_then(|s| Ok((llt_ratio(a, s.n, l)?, s))) {
                Ok((r, s)) => {
                    run.table.push(
                        al,
                        l,
                        s.n,
                        cfg.seed,
                        vec![
                            s.rho_l.to_string(),
                            s.k_l.to_string(),
                            num(r.rho_cn),
                            num(r.center),
                            r.idx.to_string(),
                            num(r.log_numerator),
                            num(r.log_denominator),
                            num(r.ratio),
                        ],
                    );
                    run.summary
                        .push(format!("alpha={al} L={l} N={}: ratio {:.6}", s.n, r.ratio));
                    run.ok(al, Some(l), Some(s.n));
                }
                Err(e) => run.failed(al, Some(l), &e),
            }
        }
    }
    Ok(run)
}

pub fn events(cfg: &Resolved) -> Result<Run, String> {
    let mut run = Run::new(Table::new(&[
        "B_L",
        "idx",
        "E0",
        "E1",
        "E2",
        "total",
        "ratio0",
        "ratio1",
        "ratio2",
        "log_E0",
        "log_E1",
        "log_E2",
        "log_total",
        "log_comparator",
        "identity_error",
        "pair_bound_ratio",
        "path",
    ]));
    for &al in &cfg.alpha {
        let a = Alpha::new(al).map_err(|e| e.to_string())?;
        for &l in &cfg.ladder {
            match schedule(cfg, a, l).and_then(|s| event_decomposition(a, s.n, l, s.b_l)) {
                Ok(r) => {
                    run.table.push(
                        al,
                        l,
                        r.n,
                        cfg.seed,
                        vec![
                            r.b_l.to_string(),
                            r.idx.to_string(),
                            num(r.log_e0.exp()),
                            num(r.log_e1.exp()),
                            num(r.log_e2.exp()),
                            num(r.log_total.exp()),
                            num(r.ratio0),
                            num(r.ratio1),
                            num(r.ratio2),
                            num(r.log_e0),
                            num(r.log_e1),
                            num(r.log_e2),
                            num(r.log_total),
                            num(r.log_comparator),
                            num(r.identity_error),
                            num(r.pair_bound_ratio),
                            if r.transform_path { "transform" } else { "direct" }.into(),
                        ],
                    );
                    run.summary.push(format!(
                        "alpha={al} L={l} N={}: ratios {:.4e} {:.4} {:.4}, identity error {:.1e}",
                        r.n, r.ratio0, r.ratio1, r.ratio2, r.identity_error
                    ));
                    let n = r.n;
                    if r.identity_error > 1e-10 {
                        run.failed(
                            al,
                            Some(l),
                            &ZrpError::Invariant(format!("E0 + E1 + E2 misses the total by {:e}", r.identity_error)),
                        );
                    } else {
                        run.ok(al, Some(l), Some(n));
                    }
                }
                Err(e) => run.failed(al, Some(l), &e),
            }
        }
    }
    Ok(run)
}

pub fn theorem(cfg: &Resolved) -> Result<Run, String> {
    let mut run = Run::new(Table::new(&[
        "d",
        "samples",
        "tv",
        "se",
        "buckets",
        "tail_quantile",
        "tail_cut",
        "C_L",
        "window_probability",
        "mean_max",
        "center",
    ]));
    run.summary.push(format!("note: {}", tv::LIMITATION));
    for &al in &cfg.alpha {
        let a = Alpha::new(al).map_err(|e| e.to_string())?;
        for &l in &cfg.ladder {
            let s = match schedule(cfg, a, l) {
                Ok(s) => s,
                Err(e) => {
                    run.failed(al, Some(l), &e);
                    continue;
                }
            };
            let profile = match condensate_profile(a, s.n, l, Some(s.c_l)) {
                Ok(p) => p,
                Err(e) => {
                    run.failed(al, Some(l), &e);
                    continue;
                }
            };
            for &d in &cfg.dim {
                let job = run.next_job();
                match background_tv_estimate(a, &s, d, cfg.samples, cfg.seed, job, exec(cfg)) {
                    Ok(r) => {
                        let window = profile.window_probability.unwrap_or(f64::NAN);
                        run.table.push(
                            al,
                            l,
                            s.n,
                            cfg.seed,
                            vec![
                                d.to_string(),
                                r.samples.to_string(),
                                num(r.tv),
                                num(r.se),
                                r.buckets.to_string(),
                                num(r.tail_quantile),
                                r.tail_cut.to_string(),
                                s.c_l.to_string(),
                                num(window),
                                num(profile.mean),
                                num(profile.center),
                            ],
                        );
                        run.summary.push(format!(
                            "alpha={al} L={l} N={} d={d}: TV {:.5} (se {:.5}), window probability {:.4}",
                            s.n, r.tv, r.se, window
                        ));
                        run.ok(al, Some(l), Some(s.n));
                    }
                    Err(e) => run.failed(al, Some(l), &e),
                }
            }
        }
    }
    Ok(run)
}

pub fn simulate_cmd(cfg: &Resolved) -> Result<Run, String> {
    let n = cfg.n.unwrap_or(4);
    let l = cfg.l.unwrap_or(3);
    if l < 1 {
        return Err("--l must be >= 1".into());
    }
    let mode = if cfg.clock == "time" {
        ClockMode::TimeWeighted
    } else {
        ClockMode::EventCount
    };
    let mut run = Run::new(Table::new(&[
        "replica",
        "clock",
        "events",
        "elapsed",
        "plus_moves",
        "minus_moves",
        "mean_max_share",
        "rate_drift",
        "tv_stationary",
    ]));
    let tracked = state_space_size(n, l as usize) <= TRACKED_STATES;
    for &al in &cfg.alpha {
        let a = Alpha::new(al).map_err(|e| e.to_string())?;
        let job = run.next_job();
        let start = if cfg.start == "condensed" {
            OccupancyConfig::condensed(n, l as usize)
        } else {
            OccupancyConfig::balanced(n, l as usize)
        }
        .map_err(|e| e.to_string())?;
        let states = if tracked {
            Some(enumerate_state_space(n, l as usize, TRACKED_STATES).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let mu = states.as_ref().map(|s| stationary_law(a, s));
        let results = exec(cfg).map(cfg.replicas as usize, |r| {
            let mut rng = seed_streams(cfg.seed, job, r as u32);
            match &states {
                Some(st) => {
                    let mut occ = StateOccupation::new(st);
                    let stats = simulate(
                        start.clone(),
                        a,
                        Horizon::Events(cfg.events),
                        mode,
                        &mut rng,
                        &mut [&mut occ],
                    )?;
                    Ok((stats, Some(occ.law())))
                }
                None => Ok((
                    simulate(start.clone(), a, Horizon::Events(cfg.events), mode, &mut rng, &mut [])?,
                    None,
                )),
            }
        });
        let mut failed = None;
        for (r, res) in results.into_iter().enumerate() {
            match res {
                Ok((stats, law)) => {
                    let tv = match (&law, &mu) {
                        (Some(law), Some(mu)) if stats.weight_total > 0.0 => num(tv_distance(law, mu)),
                        _ => String::new(),
                    };
                    run.table.push(
                        al,
                        l,
                        n,
                        cfg.seed,
                        vec![
                            r.to_string(),
                            mode.name().into(),
                            stats.events.to_string(),
                            num(stats.elapsed),
                            stats.plus_moves.to_string(),
                            stats.minus_moves.to_string(),
                            num(stats.mean_max_share),
                            num(stats.rate_drift),
                            tv.clone(),
                        ],
                    );
                    run.summary.push(format!(
                        "alpha={al} N={n} L={l} replica {r}: {} events, max share {:.4}{}",
                        stats.events,
                        stats.mean_max_share,
                        if tv.is_empty() {
                            String::new()
                        } else {
                            format!(", TV to stationary law {tv}")
                        }
                    ));
                    if stats.rate_drift > 1e-9 {
                        failed = Some(ZrpError::Invariant(format!(
                            "rate index drifted by {:e}",
                            stats.rate_drift
                        )));
                    }
                }
                Err(e) => failed = Some(e),
            }
        }
        match failed {
            None => run.ok(al, Some(l), Some(n)),
            Some(e) => run.failed(al, Some(l), &e),
        }
    }
    Ok(run)
}

pub fn scan(cfg: &Resolved) -> Result<Run, String> {
    let quantities: Vec<Quantity> = cfg
        .quantity
        .iter()
        .map(|q| q.parse::<Quantity>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let grid = doubling_grid(cfg.grid_lo, cfg.grid_hi);
    let mut run = Run::new(Table::new(&[
        "quantity",
        "value",
        "predictor",
        "ratio",
        "value_growth",
        "predictor_growth",
        "growth_quotient",
    ]));
    for &al in &cfg.alpha {
        let a = Alpha::new(al).map_err(|e| e.to_string())?;
        for &q in &quantities {
            match order_check(q, a, &grid) {
                Ok(rows) => {
                    for r in &rows {
                        run.table.push(
                            al,
                            1,
                            r.n,
                            cfg.seed,
                            vec![
                                q.name().into(),
                                num(r.value),
                                num(r.predictor),
                                num(r.ratio),
                                num(r.value_growth),
                                num(r.predictor_growth),
                                num(r.growth_quotient()),
                            ],
                        );
                    }
                    let top = rows.last().expect("non-empty grid");
                    run.summary.push(format!(
                        "alpha={al} {}: ratio {:.5} at N={}, growth quotient {:.5}",
                        q.name(),
                        top.ratio,
                        top.n,
                        top.growth_quotient()
                    ));
                    run.ok(al, None, Some(top.n));
                }
                Err(e) => run.failed(al, None, &e),
            }
        }
    }
    Ok(run)
}
