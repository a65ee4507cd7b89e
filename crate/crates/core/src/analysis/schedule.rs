//! Density schedules `N = L rho_L + k_L` and the auxiliary sequences
//! `a_L`, `B_L`, `C_L`, `t_L`, `t_L^+`.

use crate::ensemble::{critical_density_truncated, fugacity_density, Alpha, Fugacity, DEFAULT_TAIL_TOL};
use crate::error::{Result, ZrpError};

/// Work limits for exact computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Upper bound on `N * L`.
    pub max_cells: u64,
    /// Upper bound on any working table, counted as the padded transform
    /// length `2^ceil(log2(2 (N + 1)))`.
    pub max_table: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_cells: 2_000_000_000,
            max_table: 100_000_000,
        }
    }
}

impl Budget {
    pub fn table_len(n: u64) -> u64 {
        (2 * (n + 1)).next_power_of_two()
    }

    pub fn check(&self, n: u64, l: u64) -> Result<()> {
        let cells = n.saturating_mul(l);
        if cells > self.max_cells {
            return Err(ZrpError::Infeasible {
                l,
                required_n: n,
                reason: format!("N*L = {cells} exceeds the cell budget {}", self.max_cells),
            });
        }
        let table = Self::table_len(n);
        if table > self.max_table {
            return Err(ZrpError::Infeasible {
                l,
                required_n: n,
                reason: format!("working table of {table} entries exceeds {}", self.max_table),
            });
        }
        Ok(())
    }
}

/// Rounding used for the index `N - (L-1) rho_{c,N}`.
pub const ROUNDING_RULE: &str = "nearest, half away from zero";

/// `N - (L-1) rho_{c,N}` and its rounded value.
pub fn background_index(alpha: Alpha, n: u64, l: u64) -> (f64, i64) {
    let center = n as f64 - (l as f64 - 1.0) * critical_density_truncated(alpha, n);
    (center, center.round() as i64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub alpha: Alpha,
    pub l: u64,
    pub rho_l: u64,
    pub k_l: u64,
    pub n: u64,
    pub b_l: u64,
    pub c_l: u64,
    /// `C_L` before clamping to `N`.
    pub c_l_raw: f64,
    pub c_l_clamped: bool,
    pub a_l: f64,
    pub t_l: i64,
    pub t_l_plus: i64,
    pub delta: f64,
    pub margin: f64,
    pub rho_cn: f64,
    /// `N - (L-1) rho_{c,N}` and its rounding.
    pub center: f64,
    pub idx: i64,
    /// Right side of the density hypothesis, `rho_L >= bound`.
    pub density_bound: f64,
    pub seed_rho: f64,
    pub iterations: u32,
}

impl Schedule {
    pub fn k_ratio(&self) -> f64 {
        self.k_l as f64 / (self.l * self.rho_l) as f64
    }

    pub fn rho_cn_over_n(&self) -> f64 {
        self.rho_cn / self.n as f64
    }
}

fn regime(a: f64) -> Regime {
    if a > 2.0 {
        Regime::Dilute
    } else if a == 2.0 {
        Regime::Marginal
    } else if a > 1.0 {
        Regime::Heavy
    } else {
        Regime::Harmonic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    /// alpha > 2
    Dilute,
    /// alpha = 2
    Marginal,
    /// 1 < alpha < 2
    Heavy,
    /// alpha = 1
    Harmonic,
}

fn total_for(l: u64, rho: u64) -> Option<(u64, u64)> {
    let bulk = l.checked_mul(rho)?;
    let k = (bulk as f64).sqrt().ceil() as u64;
    Some((bulk.checked_add(k)?, k))
}

/// Largest `N` the fixed-point iteration will follow before declaring the
/// schedule infeasible outright.
const N_CEILING: f64 = 1e18;

/// For `alpha = 1`, `ln N` at which the density bound can first be met.
///
/// There `rho_{c,N} = N / Z_N` exactly, so with `N ~ L rho_L` the bound
/// reduces to `Z_N >= margin L (ln ln N)^delta` with `Z_N ~ 1 + gamma + ln N`.
pub fn harmonic_log_size(l: u64, margin: f64, delta: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let f = |x: f64| 1.0 + EULER_GAMMA + x - margin * l as f64 * x.ln().max(0.0).powf(delta);
    let mut lo = 3.0;
    if f(lo) >= 0.0 {
        return lo;
    }
    let mut hi = 6.0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn saturating_n(log_n: f64) -> u64 {
    if log_n >= u64::MAX as f64 {
        u64::MAX
    } else {
        log_n.exp().min(u64::MAX as f64) as u64
    }
}

pub fn build_schedule(alpha: Alpha, l: u64, margin: f64, delta: f64) -> Result<Schedule> {
    build_schedule_with(alpha, l, margin, delta, &Budget::default())
}

pub fn build_schedule_with(alpha: Alpha, l: u64, margin: f64, delta: f64, budget: &Budget) -> Result<Schedule> {
    alpha.require_theorem_scope()?;
    if l < 3 {
        return Err(ZrpError::InvalidArgument(format!("L = {l} must be >= 3")));
    }
    if margin.is_nan() || margin < 1.0 {
        return Err(ZrpError::InvalidArgument(format!("margin {margin} must be >= 1")));
    }
    if delta.is_nan() || delta <= 1.0 {
        return Err(ZrpError::InvalidArgument(format!("delta {delta} must be > 1")));
    }
    let a = alpha.value();
    let reg = regime(a);
    let lf = l as f64;
    let bound_at = |n: u64| -> f64 {
        let nf = n as f64;
        match reg {
            Regime::Dilute => unreachable!(),
            Regime::Marginal => margin * critical_density_truncated(alpha, n),
            Regime::Heavy => margin * critical_density_truncated(alpha, n) * nf.ln(),
            Regime::Harmonic => {
                let ll = nf.ln().ln();
                if ll <= 0.0 {
                    0.0
                } else {
                    margin * critical_density_truncated(alpha, n) * ll.powf(delta)
                }
            }
        }
    };

    let (rho_l, seed_rho, iterations) = if reg == Regime::Dilute {
        let rho_c = fugacity_density(alpha, Fugacity::CRITICAL, DEFAULT_TAIL_TOL)?;
        let seed = margin * rho_c;
        (seed.ceil().max(1.0) as u64, seed, 0)
    } else {
        let seed = match reg {
            Regime::Marginal => margin * lf.ln(),
            Regime::Heavy => (margin * lf.powf(2.0 - a) * lf.ln()).powf(1.0 / (a - 1.0)),
            Regime::Harmonic => (lf * lf.ln().powf(delta)).exp() / lf,
            Regime::Dilute => unreachable!(),
        };
        let mut rho = seed.ceil().max(1.0) as u64;
        let mut seen = Vec::new();
        let mut iterations = 0u32;
        loop {
            let (n, _) = total_for(l, rho)
                .filter(|(n, _)| (*n as f64) < N_CEILING)
                .ok_or_else(|| {
                    let (required_n, reason) = if reg == Regime::Harmonic {
                        let x = harmonic_log_size(l, margin, delta);
                        (
                            saturating_n(x),
                            format!("density bound first holds near N = exp({x:.2}) = {:.3e}", x.exp()),
                        )
                    } else {
                        (u64::MAX, format!("density iteration exceeded N = {N_CEILING:e}"))
                    };
                    ZrpError::Infeasible { l, required_n, reason }
                })?;
            let next = bound_at(n).ceil().max(1.0) as u64;
            iterations += 1;
            if next == rho {
                break;
            }
            if seen.contains(&next) {
                // Two-cycle from integer rounding: keep the larger density,
                // which satisfies the bound at its own N.
                rho = rho.max(next);
                break;
            }
            seen.push(rho);
            rho = next;
            if iterations > 10_000 {
                return Err(ZrpError::Invariant("density iteration did not settle".into()));
            }
        }
        (rho, seed, iterations)
    };

    let (n, k_l) = total_for(l, rho_l).ok_or_else(|| ZrpError::Infeasible {
        l,
        required_n: u64::MAX,
        reason: "N overflows".into(),
    })?;
    budget.check(n, l)?;

    let nf = n as f64;
    let ln = nf.ln();
    let rho_cn = critical_density_truncated(alpha, n);
    let density_bound = match reg {
        Regime::Dilute => margin * fugacity_density(alpha, Fugacity::CRITICAL, DEFAULT_TAIL_TOL)?,
        _ => bound_at(n),
    };

    let n_over_b = match reg {
        Regime::Dilute => ln * ln,
        Regime::Marginal => (rho_l as f64).powf(0.25) * ln.powf(0.75),
        Regime::Heavy => 3.0 * ln,
        Regime::Harmonic => ln * ln.ln().max(0.0).powf(delta / 2.0),
    };
    let b_l = ((nf / n_over_b).round() as u64).clamp(1, n);

    let a_l = if a > 3.0 {
        lf.sqrt()
    } else if a == 3.0 {
        (lf * ln).sqrt()
    } else if a > 1.0 {
        (lf * nf.powf(3.0 - a)).sqrt()
    } else {
        nf * lf.sqrt() / ln.sqrt()
    };
    let c_l_raw = match reg {
        Regime::Dilute => (nf * a_l).sqrt(),
        Regime::Marginal => nf * (ln / rho_l as f64).powf(0.2),
        Regime::Heavy => nf / ln.sqrt(),
        Regime::Harmonic => nf * ln.ln().powf(-delta / 3.0),
    };
    let c_l_clamped = c_l_raw > nf;
    let c_l = (c_l_raw.ceil() as u64).min(n);

    let (center, idx) = background_index(alpha, n, l);
    let sched = Schedule {
        alpha,
        l,
        rho_l,
        k_l,
        n,
        b_l,
        c_l,
        c_l_raw,
        c_l_clamped,
        a_l,
        t_l: idx - c_l as i64,
        t_l_plus: idx + c_l as i64,
        delta,
        margin,
        rho_cn,
        center,
        idx,
        density_bound,
        seed_rho,
        iterations,
    };
    verify(&sched)?;
    Ok(sched)
}

fn verify(s: &Schedule) -> Result<()> {
    let fail = |m: String| Err(ZrpError::Invariant(format!("schedule at L = {}: {m}", s.l)));
    if s.n != s.l * s.rho_l + s.k_l {
        return fail("N != L rho_L + k_L".into());
    }
    if s.k_l >= s.l * s.rho_l {
        return fail(format!("k_L = {} not below L rho_L", s.k_l));
    }
    if !(s.a_l <= s.c_l as f64 && s.c_l <= s.n) {
        return fail(format!("a_L = {} <= C_L = {} <= N = {} fails", s.a_l, s.c_l, s.n));
    }
    if (s.rho_l as f64) < s.density_bound {
        return fail(format!(
            "rho_L = {} below the density bound {}",
            s.rho_l, s.density_bound
        ));
    }
    if s.idx < 1 || s.idx > s.n as i64 {
        return fail(format!("background index {} outside [1, N]", s.idx));
    }
    Ok(())
}
