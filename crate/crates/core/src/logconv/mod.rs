//! Log-domain probability tables and their convolutions.
//!
//! [`LogPmf`] is the common currency of every exact computation: a table of
//! log-masses over `0..=K`, possibly sub-normalized. The direct quadratic
//! [`convolve`] is the reference kernel; [`fft`] holds the exponentially
//! tilted transform path used once tables get long.

pub mod fft;

use crate::ensemble::{log_stationary_weight, truncated_site_law, Alpha, Fugacity};
use crate::error::{Result, ZrpError};
use crate::exec::Exec;
use crate::series::compensated_sum;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// `log(sum(exp(v)))` shifted by the maximum; `-inf` for empty or all `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(NEG_INF, f64::max);
    if max == NEG_INF {
        return NEG_INF;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + compensated_sum(values.iter().map(|&v| (v - max).exp())).ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == NEG_INF {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogPmf {
    log_masses: Vec<f64>,
    cap: Option<usize>,
    normalized: bool,
}

impl LogPmf {
    /// Wraps a table of log-masses. `normalized` is a claim by the caller and
    /// is checked against the data (tolerance 1e-12).
    pub fn new(log_masses: Vec<f64>, normalized: bool) -> Result<Self> {
        if log_masses.is_empty() {
            return Err(ZrpError::InvalidArgument("empty log-mass table".into()));
        }
        if log_masses.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(ZrpError::InvalidArgument("log-mass table holds NaN or +inf".into()));
        }
        let pmf = LogPmf {
            log_masses,
            cap: None,
            normalized,
        };
        if normalized {
            let total = pmf.total_mass();
            if (total - 1.0).abs() > 1e-12 {
                return Err(ZrpError::Invariant(format!(
                    "table claimed normalized but sums to {total}"
                )));
            }
        }
        Ok(pmf)
    }

    /// Unchecked constructor for kernels that already guarantee the invariants.
    pub(crate) fn from_raw(log_masses: Vec<f64>, cap: Option<usize>, normalized: bool) -> Self {
        LogPmf {
            log_masses,
            cap,
            normalized,
        }
    }

    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        if masses.iter().any(|m| *m < 0.0 || !m.is_finite()) {
            return Err(ZrpError::InvalidArgument("masses must be finite and >= 0".into()));
        }
        let total = compensated_sum(masses.iter().copied());
        let log_masses = masses.iter().map(|m| m.ln()).collect();
        Self::new(log_masses, (total - 1.0).abs() <= 1e-12)
    }

    pub fn point_mass(k: usize) -> Self {
        let mut log_masses = vec![NEG_INF; k + 1];
        log_masses[k] = 0.0;
        LogPmf::from_raw(log_masses, None, true)
    }

    /// Largest index held by the table.
    pub fn max_index(&self) -> usize {
        self.log_masses.len() - 1
    }

    pub fn len(&self) -> usize {
        self.log_masses.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_masses
    }

    pub fn cap(&self) -> Option<usize> {
        self.cap
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Log-mass at `k`; `-inf` outside the table.
    pub fn log_mass(&self, k: usize) -> f64 {
        self.log_masses.get(k).copied().unwrap_or(NEG_INF)
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.log_mass(k).exp()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.log_masses.iter().map(|v| v.exp()).collect()
    }

    pub fn total_log_mass(&self) -> f64 {
        log_sum_exp(&self.log_masses)
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.log_masses.iter().map(|v| v.exp()))
    }

    /// Mean of the (renormalized) table.
    pub fn mean(&self) -> f64 {
        let z = self.total_log_mass();
        compensated_sum(
            self.log_masses
                .iter()
                .enumerate()
                .map(|(k, v)| k as f64 * (v - z).exp()),
        )
    }

    /// Rescales to total mass one. Drops the cap flag's sub-normalization.
    pub fn normalize(&self) -> LogPmf {
        let z = self.total_log_mass();
        LogPmf::from_raw(self.log_masses.iter().map(|v| v - z).collect(), self.cap, true)
    }

    /// Restricts the table to `0..=max_index`.
    pub fn truncate(&self, max_index: usize) -> LogPmf {
        if max_index >= self.max_index() {
            return self.clone();
        }
        LogPmf::from_raw(self.log_masses[..=max_index].to_vec(), self.cap, false)
    }

    /// Range of indices carrying finite log-mass, if any.
    pub fn support(&self) -> Option<(usize, usize)> {
        let lo = self.log_masses.iter().position(|v| *v > NEG_INF)?;
        let hi = self.log_masses.iter().rposition(|v| *v > NEG_INF)?;
        Some((lo, hi))
    }
}

/// `result[n] = log sum_j exp(p[j] + q[n - j])` for `n <= max_total`.
pub fn convolve(p: &LogPmf, q: &LogPmf, max_total: usize) -> LogPmf {
    convolve_with(p, q, max_total, Exec::default())
}

pub fn convolve_with(p: &LogPmf, q: &LogPmf, max_total: usize, exec: Exec) -> LogPmf {
    let full = p.max_index() + q.max_index();
    let len = max_total.min(full) + 1;
    let mut out = vec![NEG_INF; len];
    if let (Some((plo, phi)), Some((qlo, qhi))) = (p.support(), q.support()) {
        let (pv, qv) = (p.log_masses(), q.log_masses());
        exec.fill(&mut out, |n| {
            if n < plo + qlo || n > phi + qhi {
                return NEG_INF;
            }
            let j_lo = plo.max(n.saturating_sub(qhi));
            let j_hi = phi.min(n - qlo);
            let mut max = NEG_INF;
            for j in j_lo..=j_hi {
                let v = pv[j] + qv[n - j];
                if v > max {
                    max = v;
                }
            }
            if max == NEG_INF {
                return NEG_INF;
            }
            let mut acc = 0.0;
            for j in j_lo..=j_hi {
                acc += (pv[j] + qv[n - j] - max).exp();
            }
            max + acc.ln()
        });
    }
    let cap = match (p.cap, q.cap) {
        (Some(a), Some(b)) => Some((a + b).saturating_sub(1)),
        _ => None,
    };
    let normalized = p.normalized && q.normalized && len == full + 1;
    LogPmf::from_raw(out, cap, normalized)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PowerStrategy {
    /// Doubling for `L >= DOUBLING_CROSSOVER`, left fold below.
    #[default]
    Auto,
    LeftFold,
    Doubling,
}

/// Powers below this use the left fold under [`PowerStrategy::Auto`].
pub const DOUBLING_CROSSOVER: u64 = 8;

/// L-fold self-convolution of `p`, truncated to totals `<= max_total`.
pub fn self_convolve_power(p: &LogPmf, l: u64, max_total: usize) -> Result<LogPmf> {
    self_convolve_power_with(p, l, max_total, PowerStrategy::Auto, Exec::default())
}

pub fn self_convolve_power_with(
    p: &LogPmf,
    l: u64,
    max_total: usize,
    strategy: PowerStrategy,
    exec: Exec,
) -> Result<LogPmf> {
    if l < 1 {
        return Err(ZrpError::InvalidArgument(format!("power L = {l} must be >= 1")));
    }
    let base = p.truncate(max_total);
    let doubling = match strategy {
        PowerStrategy::Auto => l >= DOUBLING_CROSSOVER,
        PowerStrategy::LeftFold => false,
        PowerStrategy::Doubling => true,
    };
    let result = if doubling {
        let mut acc: Option<LogPmf> = None;
        let mut square = base;
        let mut e = l;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => square.clone(),
                    Some(a) => convolve_with(&a, &square, max_total, exec),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            square = convolve_with(&square, &square, max_total, exec);
        }
        acc.expect("l >= 1")
    } else {
        let mut acc = base.clone();
        for _ in 1..l {
            acc = convolve_with(&acc, &base, max_total, exec);
        }
        acc
    };
    Ok(result)
}

/// Zeroes all masses at `k >= cap`; the result is flagged sub-normalized and
/// keeps total mass `P[eta < cap]`.
pub fn cap_support(p: &LogPmf, cap: usize) -> LogPmf {
    let mut log_masses = p.log_masses.clone();
    for v in log_masses.iter_mut().skip(cap) {
        *v = NEG_INF;
    }
    let cap = Some(p.cap.map_or(cap, |c| c.min(cap)));
    LogPmf::from_raw(log_masses, cap, false)
}

/// Unnormalized weights `1/a(k)` for `k in 0..=n`, in log form.
pub fn log_weight_table(alpha: Alpha, n: usize) -> LogPmf {
    let log_masses = (0..=n).map(|k| log_stationary_weight(alpha, k as u64)).collect();
    LogPmf::from_raw(log_masses, None, false)
}

/// `log Z_{N,L}`, the canonical partition function.
///
/// Computed by the left-fold recurrence `Z_{n,l} = sum_k Z_{n-k,l-1} / a(k)`
/// over unnormalized weights; [`sum_law`] reaches the same number through
/// doubling over the normalized single-site law.
pub fn canonical_partition_log(alpha: Alpha, n: usize, l: u64) -> Result<f64> {
    if l < 1 {
        return Err(ZrpError::InvalidArgument("L must be >= 1".into()));
    }
    let w = log_weight_table(alpha, n);
    let z = self_convolve_power_with(&w, l, n, PowerStrategy::LeftFold, Exec::default())?;
    Ok(z.log_mass(n))
}

/// Law of the sum of `L` independent copies of the truncated critical law
/// `nu_{1,N}`, over totals `0..=N`.
pub fn sum_law(alpha: Alpha, n: usize, l: u64) -> Result<LogPmf> {
    let site = truncated_site_law(alpha, n, Fugacity::CRITICAL)?;
    self_convolve_power(site.pmf(), l, n)
}
