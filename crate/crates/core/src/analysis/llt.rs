//! The local limit ratio `nu^L[sum = N] / (L nu[N - (L-1) rho_{c,N}])`.

use crate::analysis::schedule::{background_index, ROUNDING_RULE};
use crate::ensemble::{truncated_site_law, Alpha, Fugacity};
use crate::error::{Result, ZrpError};
use crate::logconv::fft::{log_power_product_at, Backend};

#[derive(Debug, Clone, PartialEq)]
pub struct LltReport {
    pub alpha: Alpha,
    pub n: u64,
    pub l: u64,
    pub rho_cn: f64,
    /// `N - (L-1) rho_{c,N}` before rounding.
    pub center: f64,
    pub idx: i64,
    pub rounding: &'static str,
    pub log_numerator: f64,
    pub log_denominator: f64,
    pub ratio: f64,
}

pub fn llt_ratio(alpha: Alpha, n: u64, l: u64) -> Result<LltReport> {
    llt_ratio_with(alpha, n, l, Backend::Auto)
}

/// `L = 1` is accepted; the ratio is then exactly 1.
pub fn llt_ratio_with(alpha: Alpha, n: u64, l: u64, backend: Backend) -> Result<LltReport> {
    if n < 1 || l < 1 {
        return Err(ZrpError::InvalidArgument(format!(
            "need N >= 1 and L >= 1, got N = {n}, L = {l}"
        )));
    }
    let site = truncated_site_law(alpha, n as usize, Fugacity::CRITICAL)?;
    let (center, idx) = background_index(alpha, n, l);
    if idx < 1 || idx > n as i64 {
        return Err(ZrpError::Range {
            index: idx,
            lo: 1,
            hi: n as i64,
        });
    }
    let log_numerator = log_power_product_at(&[(site.pmf(), l)], n as usize, backend);
    let log_denominator = (l as f64).ln() + site.log_mass(idx as usize);
    Ok(LltReport {
        alpha,
        n,
        l,
        rho_cn: site.mean(),
        center,
        idx,
        rounding: ROUNDING_RULE,
        log_numerator,
        log_denominator,
        ratio: (log_numerator - log_denominator).exp(),
    })
}
