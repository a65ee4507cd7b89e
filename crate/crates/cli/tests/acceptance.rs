//! One line per criterion on stdout, `criterion N: PASS` or `criterion N: FAIL`,
//! followed by the checks that decided it.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use zrp_core::analysis::{
    background_tv_estimate, build_schedule, condensate_profile, doubling_grid, event_decomposition, llt_ratio,
    order_check, DecompositionReport, LltReport,
};
use zrp_core::canonical::{exact_marginal, max_law_exact, OccupancyConfig, SuffixTables};
use zrp_core::dynamics::{enumerate_state_space, simulate, ClockMode, Horizon, StateOccupation, DEFAULT_STATE_CAP};
use zrp_core::ensemble::{Alpha, Quantity};
use zrp_core::logconv::{canonical_partition_log, sum_law};
use zrp_core::rng::seed_streams;
use zrp_core::series::zeta;
use zrp_core::stats::{chi_square_gof, tv_distance};
use zrp_core::Exec;

const SEED: u64 = 20_240_601;

struct Verdict {
    id: u32,
    checks: Vec<(String, bool)>,
    started: Instant,
}

impl Verdict {
    fn new(id: u32) -> Self {
        Verdict {
            id,
            checks: Vec::new(),
            started: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((what.into(), ok));
    }

    /// Prints the verdict past the test harness capture, then fails the test
    /// if any check failed.
    fn finish(self, budget_seconds: f64) {
        let secs = self.started.elapsed().as_secs_f64();
        let mut checks = self.checks;
        checks.push((
            format!("runtime {secs:.1}s within {budget_seconds}s"),
            secs <= budget_seconds,
        ));
        let pass = checks.iter().all(|c| c.1);
        let mut text = format!("criterion {}: {}\n", self.id, if pass { "PASS" } else { "FAIL" });
        for (what, ok) in &checks {
            text.push_str(&format!("    [{}] {what}\n", if *ok { "ok" } else { "x" }));
        }
        let mut out = std::io::stdout().lock();
        let _ = out.write_all(text.as_bytes());
        let _ = out.flush();
        assert!(pass, "{text}");
    }
}

fn alpha(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn compositions(n: u64, l: usize) -> Vec<Vec<u64>> {
    fn rec(pos: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, &mut vec![0; l], &mut out);
    out
}

fn inv_a(a: f64, k: u64) -> f64 {
    if k == 0 {
        1.0
    } else {
        (k as f64).powf(-a)
    }
}

fn weight(a: f64, eta: &[u64]) -> f64 {
    eta.iter().map(|&k| inv_a(a, k)).product()
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn last(xs: &[f64], k: usize) -> &[f64] {
    &xs[xs.len().saturating_sub(k)..]
}

fn short(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

#[test]
fn criterion_1_brute_force_equivalence() {
    let mut v = Verdict::new(1);
    let (mut worst, mut cases) = (0.0f64, 0u32);
    let mut track = |got: f64, want: f64| {
        let err = if got == want {
            0.0
        } else {
            (got - want).abs() / got.abs().max(want.abs())
        };
        // masses that underflow to a few ulps of zero compare absolutely
        let err = if want.abs() < 1e-300 && got.abs() < 1e-15 {
            0.0
        } else {
            err
        };
        worst = worst.max(err);
        cases += 1;
    };
    for a in [1.0, 1.5, 2.0, 2.5, 3.5] {
        for n in 0..=8u64 {
            let zn: f64 = (0..=n).map(|k| inv_a(a, k)).sum();
            for l in 1..=5usize {
                let comps = compositions(n, l);
                let z: f64 = comps.iter().map(|e| weight(a, e)).sum();
                track(
                    canonical_partition_log(alpha(a), n as usize, l as u64).unwrap().exp(),
                    z,
                );
                if l >= 2 {
                    for k in 0..=n {
                        let want = comps.iter().filter(|e| e[0] == k).map(|e| weight(a, e)).sum::<f64>() / z;
                        track(exact_marginal(alpha(a), n as usize, l, k as usize).unwrap(), want);
                    }
                }
                let max = max_law_exact(alpha(a), n as usize, l).unwrap();
                for m in 0..=n {
                    let want = comps
                        .iter()
                        .filter(|e| *e.iter().max().unwrap() == m)
                        .map(|e| weight(a, e))
                        .sum::<f64>()
                        / z;
                    track(max.mass(m as usize), want);
                }
                let sum = sum_law(alpha(a), n as usize, l as u64).unwrap();
                for s in 0..=n {
                    let want: f64 = compositions(s, l)
                        .iter()
                        .map(|e| weight(a, e) / zn.powi(l as i32))
                        .sum();
                    track(sum.mass(s as usize), want);
                }
                if n == 0 {
                    continue;
                }
                for b in 1..=n {
                    let Ok(r) = event_decomposition(alpha(a), n, l as u64, b) else {
                        continue;
                    };
                    let mut e = [0.0f64; 3];
                    for c in &comps {
                        let xi = c.iter().filter(|&&k| k >= b).count().min(2);
                        e[xi] += weight(a, c) / zn.powi(l as i32);
                    }
                    for (got, want) in [r.log_e0, r.log_e1, r.log_e2].into_iter().zip(e) {
                        track(got.exp(), want);
                    }
                }
            }
        }
    }
    v.check(
        worst <= 1e-10,
        format!("{cases} values, worst relative error {worst:.2e} (limit 1e-10)"),
    );
    v.finish(5.0);
}

#[test]
fn criterion_2_cross_path_identity() {
    let mut v = Verdict::new(2);
    let mut rng = seed_streams(SEED, 2, 0);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let a = [1.0, 1.5, 2.0, 2.5, 3.5][rng.random_range(0..5)];
        let n = rng.random_range(0..=200usize);
        let l = rng.random_range(1..=50u64);
        let zn: f64 = (0..=n as u64).map(|k| inv_a(a, k)).sum();
        let lhs = sum_law(alpha(a), n, l).unwrap().log_mass(n) + l as f64 * zn.ln();
        let rhs = canonical_partition_log(alpha(a), n, l).unwrap();
        worst = worst.max((lhs - rhs).abs());
    }
    // |log x - log y| bounds the relative error of x against y to first order
    v.check(
        worst <= 1e-10,
        format!("200 triples, worst relative error {worst:.2e} (limit 1e-10)"),
    );
    v.finish(30.0);
}

#[test]
fn criterion_3_order_conformity() {
    let mut v = Verdict::new(3);
    let grid = doubling_grid(10, 20);
    for a in [1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 3.5] {
        let mut quotients = Vec::new();
        for q in Quantity::ALL {
            let rows = order_check(q, alpha(a), &grid).unwrap();
            let g = rows.last().unwrap().growth_quotient();
            quotients.push((q, g));
        }
        let ok = quotients.iter().all(|(_, g)| (g - 1.0).abs() <= 0.1);
        let text: Vec<String> = quotients.iter().map(|(q, g)| format!("{} {g:.4}", q.name())).collect();
        v.check(
            ok,
            format!(
                "alpha {a}: top-rung growth over predictor growth {} (within 10% of 1)",
                text.join(", ")
            ),
        );
    }
    let rows = order_check(Quantity::RhoCN, alpha(3.0), &grid).unwrap();
    let ratio = rows.last().unwrap().ratio;
    let target = zeta(2.0, 1e-15) / zeta(3.0, 1e-15);
    v.check(
        close(ratio, target, 0.02),
        format!("alpha 3: rho_cN at N = 2^20 is {ratio:.5}, target zeta(2)/zeta(3) = {target:.5} within 2%"),
    );
    v.finish(120.0);
}

struct Rung {
    l: u64,
    n: u64,
    llt: LltReport,
    events: DecompositionReport,
}

struct Ladder {
    alpha: f64,
    rungs: Vec<Rung>,
    refused: Option<String>,
}

fn run_ladder(a: f64, ls: &[u64]) -> Ladder {
    let mut rungs = Vec::new();
    for &l in ls {
        let res = build_schedule(alpha(a), l, 2.0, 1.5).and_then(|s| {
            let llt = llt_ratio(alpha(a), s.n, l)?;
            let events = event_decomposition(alpha(a), s.n, l, s.b_l)?;
            Ok(Rung { l, n: s.n, llt, events })
        });
        match res {
            Ok(r) => rungs.push(r),
            Err(e) => {
                return Ladder {
                    alpha: a,
                    rungs,
                    refused: Some(e.to_string()),
                }
            }
        }
    }
    Ladder {
        alpha: a,
        rungs,
        refused: None,
    }
}

/// Shared by criteria 4 and 5. The alpha = 1.5 ladder ends at the last
/// feasible L; alpha = 2 stops at the cell budget and steps by 4 because its
/// ratios alternate between neighbouring L.
fn ladders() -> &'static [Ladder] {
    static CELL: OnceLock<(Vec<Ladder>, f64)> = OnceLock::new();
    let (l, _) = CELL.get_or_init(|| {
        let t = Instant::now();
        let specs: [(f64, &[u64]); 4] = [
            (2.5, &[64, 128, 256, 512, 1024]),
            (1.5, &[16, 32, 64, 128]),
            (2.0, &[128, 512, 2048, 8192]),
            (1.0, &[4, 5, 6]),
        ];
        let out = Exec::Parallel.map(specs.len(), |i| run_ladder(specs[i].0, specs[i].1));
        (out, t.elapsed().as_secs_f64())
    });
    l
}

fn ladder_check(v: &mut Verdict, lad: &Ladder) -> bool {
    if let Some(e) = &lad.refused {
        v.check(
            false,
            format!(
                "alpha {}: ladder refused after {} rungs: {e}",
                lad.alpha,
                lad.rungs.len()
            ),
        );
        return false;
    }
    true
}

#[test]
fn criterion_4_local_limit() {
    let mut v = Verdict::new(4);
    for lad in ladders() {
        if !ladder_check(&mut v, lad) {
            continue;
        }
        let dev: Vec<f64> = lad.rungs.iter().map(|r| (r.llt.ratio - 1.0).abs()).collect();
        let ls: Vec<u64> = lad.rungs.iter().map(|r| r.l).collect();
        let ns: Vec<u64> = lad.rungs.iter().map(|r| r.n).collect();
        match lad.alpha {
            2.5 => {
                v.check(
                    strictly_decreasing(last(&dev, 4)),
                    format!(
                        "alpha 2.5 L {ls:?} N {ns:?}: |ratio - 1| {} strictly decreasing on the last four",
                        short(&dev)
                    ),
                );
                v.check(
                    *dev.last().unwrap() <= 0.1,
                    format!(
                        "alpha 2.5: |ratio - 1| at L = 1024 is {:.4} <= 0.1",
                        dev.last().unwrap()
                    ),
                );
            }
            1.0 => {
                let pos = lad.rungs.iter().all(|r| r.llt.ratio > 0.0);
                v.check(
                    pos && strictly_decreasing(&dev),
                    format!(
                        "alpha 1 L {ls:?}: ratios positive, |ratio - 1| {} decreasing",
                        short(&dev)
                    ),
                );
            }
            a => v.check(
                strictly_decreasing(last(&dev, 3)),
                format!(
                    "alpha {a} L {ls:?} N {ns:?}: |ratio - 1| {} strictly decreasing on the last three",
                    short(&dev)
                ),
            ),
        }
    }
    v.finish(900.0);
}

#[test]
fn criterion_5_event_decomposition() {
    let mut v = Verdict::new(5);
    for lad in ladders() {
        if !ladder_check(&mut v, lad) {
            continue;
        }
        let a = lad.alpha;
        let r0: Vec<f64> = lad.rungs.iter().map(|r| r.events.ratio0).collect();
        let r2: Vec<f64> = lad.rungs.iter().map(|r| r.events.ratio2).collect();
        let top = lad.rungs.last().unwrap();
        let worst_identity = lad.rungs.iter().map(|r| r.events.identity_error).fold(0.0, f64::max);
        v.check(
            strictly_decreasing(last(&r0, 3)),
            format!("alpha {a}: E0 ratio {} decreasing on the last three", short(&r0)),
        );
        v.check(
            strictly_decreasing(last(&r2, 3)),
            format!("alpha {a}: E2 ratio {} decreasing on the last three", short(&r2)),
        );
        if a >= 1.5 {
            v.check(
                (top.events.ratio1 - 1.0).abs() <= 0.15,
                format!(
                    "alpha {a}: E1 ratio at L = {} is {:.4}, within 0.15 of 1",
                    top.l, top.events.ratio1
                ),
            );
        }
        v.check(
            worst_identity <= 1e-10,
            format!("alpha {a}: E0 + E1 + E2 identity error {worst_identity:.2e} <= 1e-10"),
        );
    }
    // runtime is shared with criterion 4
    v.finish(900.0);
}

#[test]
fn criterion_6_projected_condensation() {
    let mut v = Verdict::new(6);
    let a = alpha(2.5);
    let s512 = build_schedule(a, 512, 2.0, 1.5).unwrap();
    let one = background_tv_estimate(a, &s512, 1, 100_000, SEED, 0, Exec::Parallel).unwrap();
    v.check(
        one.tv <= 0.05,
        format!(
            "L = 512 N = {} d = 1: TV {:.4} (se {:.4}) <= 0.05",
            s512.n, one.tv, one.se
        ),
    );
    let s256 = build_schedule(a, 256, 2.0, 1.5).unwrap();
    let two = background_tv_estimate(a, &s256, 2, 100_000, SEED, 1, Exec::Parallel).unwrap();
    v.check(
        two.tv <= 0.08,
        format!(
            "L = 256 N = {} d = 2: TV {:.4} (se {:.4}) <= 0.08",
            s256.n, two.tv, two.se
        ),
    );
    let p = condensate_profile(a, s512.n, 512, Some(s512.c_l)).unwrap();
    let w = p.window_probability.unwrap();
    v.check(
        w >= 0.95,
        format!(
            "L = 512: P[|N - (L-1) rho_cN - M_L| <= C_L = {}] = {w:.4} >= 0.95",
            s512.c_l
        ),
    );
    v.finish(600.0);
}

#[test]
fn criterion_7_dynamics_against_measure() {
    let mut v = Verdict::new(7);
    let states = enumerate_state_space(4, 3, DEFAULT_STATE_CAP).unwrap();
    let comps = compositions(4, 3);
    for (job, al) in [1.0, 2.0, 3.0].into_iter().enumerate() {
        let z: f64 = comps.iter().map(|e| weight(al, e)).sum();
        let mu: Vec<f64> = states.iter().map(|s| weight(al, s.occupancies()) / z).collect();
        let mut occ = StateOccupation::new(&states);
        let mut rng = seed_streams(SEED, 70 + job as u32, 0);
        simulate(
            OccupancyConfig::condensed(4, 3).unwrap(),
            alpha(al),
            Horizon::Events(10_000_000),
            ClockMode::TimeWeighted,
            &mut rng,
            &mut [&mut occ],
        )
        .unwrap();
        let tv = tv_distance(&occ.law(), &mu);
        v.check(
            tv <= 0.02,
            format!("alpha {al}: time-weighted law at 1e7 events, TV {tv:.5} <= 0.02"),
        );

        let tables = SuffixTables::build(alpha(al), 4, 3).unwrap();
        let mut rng = seed_streams(SEED, 80 + job as u32, 0);
        let mut counts = vec![0u64; states.len()];
        for _ in 0..1_000_000 {
            let s = tables.sample(&mut rng);
            counts[states.iter().position(|c| c == &s).unwrap()] += 1;
        }
        let g = chi_square_gof(&counts, &mu, 5.0).unwrap();
        v.check(
            g.p_value > 1e-3,
            format!("alpha {al}: 1e6 exact samples, chi-square p = {:.4} > 1e-3", g.p_value),
        );
    }
    v.finish(300.0);
}

fn cli(args: &[&str], out: &std::path::Path) -> (i32, Vec<u8>) {
    let mut full = vec!["zrp-lab".to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    full.push("--out".into());
    full.push(out.display().to_string());
    let code = zrp_cli::run(full);
    let stem = args[0];
    (code, std::fs::read(out.join(format!("{stem}.csv"))).unwrap_or_default())
}

#[test]
fn criterion_8_determinism() {
    let mut v = Verdict::new(8);
    let runs: [&[&str]; 5] = [
        &["exact", "--alpha", "1,2.5", "--n", "30", "--l", "6"],
        &["llt", "--alpha", "2.5", "--ladder", "64,128"],
        &["events", "--alpha", "2.5", "--ladder", "64,128"],
        &[
            "theorem",
            "--alpha",
            "2.5",
            "--ladder",
            "64",
            "--dim",
            "1,2",
            "--samples",
            "20000",
        ],
        &[
            "simulate",
            "--alpha",
            "1,2",
            "--n",
            "4",
            "--l",
            "3",
            "--events",
            "200000",
            "--replicas",
            "3",
        ],
    ];
    let dir = tempfile::tempdir().unwrap();
    for args in runs {
        let (c1, first) = cli(args, &dir.path().join("a"));
        let (c2, again) = cli(args, &dir.path().join("b"));
        let mut seq = args.to_vec();
        seq.push("--sequential");
        let (c3, sequential) = cli(&seq, &dir.path().join("c"));
        let ok = c1 == 0 && c2 == 0 && c3 == 0 && !first.is_empty() && first == again && first == sequential;
        v.check(
            ok,
            format!(
                "{}: {} CSV bytes identical across a re-run and a sequential run",
                args[0],
                first.len()
            ),
        );
    }
    v.finish(120.0);
}
