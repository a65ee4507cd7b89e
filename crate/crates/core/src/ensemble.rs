//! Scalar ensemble quantities for the rate family `g(k) = (k/(k-1))^alpha`.
//!
//! The stationary weights are `1/a(k)` with `a(0) = 1` and `a(k) = k^alpha`.
//! The critical fugacity is 1 for every `alpha`, so it is fixed here rather
//! than solved for.

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, ZrpError};
use crate::logconv::{log_sum_exp, LogPmf};
use crate::series::{compensated_sum, power_sum, zeta, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    /// Any finite exponent. Values below 1 are accepted for raw weights but
    /// flagged by [`Alpha::in_theorem_scope`].
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(ZrpError::InvalidArgument(format!("alpha = {value} is not finite")));
        }
        Ok(Alpha(value))
    }

    /// An exponent inside the theorem range `alpha >= 1`.
    pub fn theorem(value: f64) -> Result<Self> {
        let a = Self::new(value)?;
        a.require_theorem_scope()?;
        Ok(a)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn in_theorem_scope(self) -> bool {
        self.0 >= 1.0
    }

    pub fn require_theorem_scope(self) -> Result<()> {
        if self.in_theorem_scope() {
            Ok(())
        } else {
            Err(ZrpError::OutOfScope { alpha: self.0 })
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fugacity(f64);

impl Fugacity {
    pub const CRITICAL: Fugacity = Fugacity(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value <= 1.0) {
            return Err(ZrpError::InvalidArgument(format!("fugacity {value} outside (0, 1]")));
        }
        Ok(Fugacity(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Jump rate `g(k)`: 0, 1, then `(k/(k-1))^alpha`.
pub fn jump_rate(alpha: Alpha, k: u64) -> f64 {
    match k {
        0 => 0.0,
        1 => 1.0,
        _ => (k as f64 / (k - 1) as f64).powf(alpha.0),
    }
}

/// `log(1/a(k))`: 0 at `k = 0`, else `-alpha * log k`.
pub fn log_stationary_weight(alpha: Alpha, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        -alpha.0 * (k as f64).ln()
    }
}

/// The single-site law `nu_{phi,N}[k] = phi^k / (Z_N(phi) a(k))` on `0..=N`.
#[derive(Debug, Clone)]
pub struct TruncatedSiteLaw {
    alpha: Alpha,
    cutoff: usize,
    fugacity: Fugacity,
    pmf: LogPmf,
    log_z: f64,
    mean: f64,
    second_moment: f64,
}

impl TruncatedSiteLaw {
    pub fn alpha(&self) -> Alpha {
        self.alpha
    }
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
    pub fn fugacity(&self) -> Fugacity {
        self.fugacity
    }
    pub fn pmf(&self) -> &LogPmf {
        &self.pmf
    }
    pub fn log_masses(&self) -> &[f64] {
        self.pmf.log_masses()
    }
    /// `log Z_N(phi)`.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }
    /// Mean occupancy; `rho_{c,N}` at the critical fugacity.
    pub fn mean(&self) -> f64 {
        self.mean
    }
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }
    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }
    pub fn log_mass(&self, k: usize) -> f64 {
        self.pmf.log_mass(k)
    }
    pub fn mass(&self, k: usize) -> f64 {
        self.pmf.mass(k)
    }
}

pub fn truncated_site_law(alpha: Alpha, cutoff: usize, fugacity: Fugacity) -> Result<TruncatedSiteLaw> {
    let log_phi = fugacity.0.ln();
    let log_w: Vec<f64> = (0..=cutoff)
        .map(|k| k as f64 * log_phi + log_stationary_weight(alpha, k as u64))
        .collect();
    let log_z = log_sum_exp(&log_w);
    let log_masses: Vec<f64> = log_w.into_iter().map(|w| w - log_z).collect();
    let mut mean = CompensatedSum::default();
    let mut second = CompensatedSum::default();
    for (k, lm) in log_masses.iter().enumerate() {
        let p = lm.exp();
        let k = k as f64;
        mean.add(k * p);
        second.add(k * k * p);
    }
    Ok(TruncatedSiteLaw {
        alpha,
        cutoff,
        fugacity,
        pmf: LogPmf::from_raw(log_masses, None, true),
        log_z,
        mean: mean.value(),
        second_moment: second.value(),
    })
}

/// `Z_N(1) = 1 + sum_{k=1}^N k^{-alpha}` without materializing a table.
pub fn critical_partition_truncated(alpha: Alpha, n: u64) -> f64 {
    1.0 + power_sum(alpha.0, n)
}

/// `rho_{c,N}` without materializing a table; usable for very large `N`.
pub fn critical_density_truncated(alpha: Alpha, n: u64) -> f64 {
    power_sum(alpha.0 - 1.0, n) / critical_partition_truncated(alpha, n)
}

/// `E[eta^2]` under `nu_{1,N}`, without a table.
pub fn critical_second_moment_truncated(alpha: Alpha, n: u64) -> f64 {
    power_sum(alpha.0 - 2.0, n) / critical_partition_truncated(alpha, n)
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// `rho(phi)`, the mean occupancy of the untruncated law `nu_phi`.
///
/// At `phi = 1` this is the critical density, finite only for `alpha > 2`.
/// The series are cut once an analytic bound on the omitted tail falls below
/// `tail_tol` relative to the partial sum.
pub fn fugacity_density(alpha: Alpha, fugacity: Fugacity, tail_tol: f64) -> Result<f64> {
    let a = alpha.0;
    if fugacity.0 == 1.0 {
        if a <= 2.0 {
            return Err(ZrpError::DivergentDensity { alpha: a });
        }
        return Ok(zeta(a - 1.0, tail_tol) / (1.0 + zeta(a, tail_tol)));
    }
    let phi = fugacity.0;
    let log_phi = phi.ln();
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    den.add(1.0);
    let mut k: u64 = 1;
    loop {
        let kf = k as f64;
        let t = (kf * log_phi - a * kf.ln()).exp();
        num.add(kf * t);
        den.add(t);
        // Beyond k the term ratio of k^p phi^k is at most phi ((k+2)/(k+1))^max(p,0).
        let next = kf + 1.0;
        let bound = |p: f64| {
            let r = phi * ((next + 1.0) / next).powf(p.max(0.0));
            if r >= 1.0 {
                f64::INFINITY
            } else {
                (next * log_phi + p * next.ln()).exp() / (1.0 - r)
            }
        };
        let (num_tail, den_tail) = (bound(1.0 - a), bound(-a));
        if num_tail <= tail_tol * num.value().max(f64::MIN_POSITIVE) && den_tail <= tail_tol * den.value() {
            break;
        }
        k += 1;
        if k > 1 << 40 {
            return Err(ZrpError::Invariant("density series failed to converge".into()));
        }
    }
    Ok(num.value() / den.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `rho_{c,N}`
    RhoCN,
    /// `Z_N(1)`
    ZN,
    /// `E[eta^2]` under `nu_{1,N}`
    SecondMoment,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::RhoCN, Quantity::ZN, Quantity::SecondMoment];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::RhoCN => "rho_cN",
            Quantity::ZN => "Z_N",
            Quantity::SecondMoment => "second_moment",
        }
    }

    /// Exact value at cutoff `n`.
    pub fn exact(self, alpha: Alpha, n: u64) -> f64 {
        match self {
            Quantity::RhoCN => critical_density_truncated(alpha, n),
            Quantity::ZN => critical_partition_truncated(alpha, n),
            Quantity::SecondMoment => critical_second_moment_truncated(alpha, n),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = ZrpError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho_cN" | "rho_cn" | "rho" => Ok(Quantity::RhoCN),
            "Z_N" | "z_n" | "z" => Ok(Quantity::ZN),
            "second_moment" | "m2" => Ok(Quantity::SecondMoment),
            other => Err(ZrpError::InvalidArgument(format!("unknown quantity '{other}'"))),
        }
    }
}

/// Representative of the growth class of `quantity` with unit constant.
pub fn asymptotic_predictor(quantity: Quantity, alpha: Alpha, cutoff: u64) -> Result<f64> {
    alpha.require_theorem_scope()?;
    if cutoff < 2 {
        return Err(ZrpError::InvalidArgument(format!("cutoff {cutoff} must be >= 2")));
    }
    let a = alpha.0;
    let n = cutoff as f64;
    let ln = n.ln();
    Ok(match quantity {
        Quantity::RhoCN => {
            if a > 2.0 {
                1.0
            } else if a == 2.0 {
                ln
            } else if a > 1.0 {
                n.powf(2.0 - a)
            } else {
                n / ln
            }
        }
        Quantity::SecondMoment => {
            if a > 3.0 {
                1.0
            } else if a == 3.0 {
                ln
            } else if a > 1.0 {
                n.powf(3.0 - a)
            } else {
                n * n / ln
            }
        }
        Quantity::ZN => {
            if a > 1.0 {
                1.0
            } else {
                ln
            }
        }
    })
}

/// Sum of a table's masses; exposed for invariant checks.
pub fn table_mass(law: &TruncatedSiteLaw) -> f64 {
    compensated_sum(law.log_masses().iter().map(|v| v.exp()))
}
