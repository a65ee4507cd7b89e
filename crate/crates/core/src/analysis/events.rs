//! Split of `{sum eta = N}` by the number `xi` of sites with `eta_x >= B_L`:
//! `E0` (none), `E1` (exactly one), `E2` (at least two).
//!
//! The three masses come from powering the triple `(P0, P1, P2)`, where
//! `P_j` is the law of the partial sum restricted to `xi = j` (`j = 2`
//! meaning `xi >= 2`). Under convolution
//!
//! ```text
//! C0 = A0*B0
//! C1 = A0*B1 + A1*B0
//! C2 = A2*(B0+B1+B2) + A0*B2 + A1*(B1+B2)
//! ```
//!
//! so every mass is a sum of non-negative terms and `E2` never comes from a
//! subtraction. The total is computed separately, which makes
//! `E0 + E1 + E2 = total` a genuine cross-check.

use crate::analysis::schedule::{background_index, ROUNDING_RULE};
use crate::ensemble::{truncated_site_law, Alpha, Fugacity};
use crate::error::{Result, ZrpError};
use crate::logconv::fft::{self, log_power_product_at, Backend, FftConvolver, ScaledTable, Spectrum};
use crate::logconv::{cap_support, convolve, log_add, log_sum_exp, LogPmf};

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub alpha: Alpha,
    pub n: u64,
    pub l: u64,
    pub b_l: u64,
    pub idx: i64,
    pub rounding: &'static str,
    pub log_e0: f64,
    pub log_e1: f64,
    pub log_e2: f64,
    pub log_total: f64,
    /// `log(L nu[idx])`.
    pub log_comparator: f64,
    pub ratio0: f64,
    pub ratio1: f64,
    pub ratio2: f64,
    /// `|E0 + E1 + E2 - total| / total`.
    pub identity_error: f64,
    /// `L^2 nu[B_L]^2 / (L nu[idx])`.
    pub pair_bound_ratio: f64,
    pub transform_path: bool,
}

impl DecompositionReport {
    pub fn total_ratio(&self) -> f64 {
        (self.log_total - self.log_comparator).exp()
    }
}

fn add_tables(a: &LogPmf, b: &LogPmf) -> LogPmf {
    let len = a.len().max(b.len());
    LogPmf::from_raw(
        (0..len).map(|k| log_add(a.log_mass(k), b.log_mass(k))).collect(),
        None,
        false,
    )
}

fn empty() -> LogPmf {
    LogPmf::from_raw(vec![f64::NEG_INFINITY], None, false)
}

type Triple = [LogPmf; 3];

fn combine_direct(a: &Triple, b: &Triple, n: usize) -> Triple {
    let tb = add_tables(&add_tables(&b[0], &b[1]), &b[2]);
    let b12 = add_tables(&b[1], &b[2]);
    [
        convolve(&a[0], &b[0], n),
        add_tables(&convolve(&a[0], &b[1], n), &convolve(&a[1], &b[0], n)),
        add_tables(
            &add_tables(&convolve(&a[2], &tb, n), &convolve(&a[0], &b[2], n)),
            &convolve(&a[1], &b12, n),
        ),
    ]
}

fn power_triple<T: Clone>(base: T, l: u64, mut combine: impl FnMut(&T, &T) -> T) -> T {
    let mut acc: Option<T> = None;
    let mut sq = base;
    let mut e = l;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => sq.clone(),
                Some(a) => combine(&a, &sq),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        sq = combine(&sq, &sq);
    }
    acc.expect("l >= 1")
}

type ScaledTriple = [ScaledTable; 3];

fn combine_fft(conv: &FftConvolver, a: &ScaledTriple, b: &ScaledTriple) -> ScaledTriple {
    let sa: Vec<Spectrum> = a.iter().map(|t| conv.spectrum(t)).collect();
    let sb: Vec<Spectrum> = b.iter().map(|t| conv.spectrum(t)).collect();
    let tb = conv.sum(&[sb[0].clone(), sb[1].clone(), sb[2].clone()]);
    let b12 = conv.sum(&[sb[1].clone(), sb[2].clone()]);
    [
        conv.inverse(conv.product(&sa[0], &sb[0])),
        conv.inverse(conv.sum(&[conv.product(&sa[0], &sb[1]), conv.product(&sa[1], &sb[0])])),
        conv.inverse(conv.sum(&[
            conv.product(&sa[2], &tb),
            conv.product(&sa[0], &sb[2]),
            conv.product(&sa[1], &b12),
        ])),
    ]
}

pub fn event_decomposition(alpha: Alpha, n: u64, l: u64, b_l: u64) -> Result<DecompositionReport> {
    event_decomposition_with(alpha, n, l, b_l, Backend::Auto)
}

/// `B_L` may be `N + 1`, in which case no site can be large.
pub fn event_decomposition_with(
    alpha: Alpha,
    n: u64,
    l: u64,
    b_l: u64,
    backend: Backend,
) -> Result<DecompositionReport> {
    if l < 1 || n < 1 {
        return Err(ZrpError::InvalidArgument(format!(
            "need N >= 1 and L >= 1, got N = {n}, L = {l}"
        )));
    }
    if b_l < 1 || b_l > n + 1 {
        return Err(ZrpError::InvalidArgument(format!("B_L = {b_l} outside [1, N + 1]")));
    }
    let nu = truncated_site_law(alpha, n as usize, Fugacity::CRITICAL)?;
    let (_, idx) = background_index(alpha, n, l);
    if idx < 1 || idx > n as i64 {
        return Err(ZrpError::Range {
            index: idx,
            lo: 1,
            hi: n as i64,
        });
    }
    let nn = n as usize;
    let b = b_l as usize;
    let small = cap_support(nu.pmf(), b);
    let large = LogPmf::from_raw(
        (0..=nn)
            .map(|k| if k >= b { nu.log_mass(k) } else { f64::NEG_INFINITY })
            .collect(),
        None,
        false,
    );
    let steps = 2.0 * (64 - l.leading_zeros()) as f64;
    let transform = match backend {
        Backend::Direct => false,
        Backend::Fft => true,
        Backend::Auto => ((nn + 1) as f64).powi(2) * 6.0 * steps > fft::DIRECT_WORK_LIMIT,
    };
    let (log_e0, log_e1, log_e2, log_total) = if transform {
        let len = nn + 1;
        let theta = fft::solve_tilt(&[(nu.pmf(), l as f64)], nn as f64, len);
        let conv = FftConvolver::new(len);
        let base = [
            ScaledTable::from_log(&small, theta, len),
            ScaledTable::from_log(&large, theta, len),
            ScaledTable::zeros(len),
        ];
        let p = power_triple(base, l, |x, y| combine_fft(&conv, x, y));
        let untilt = theta * nn as f64;
        // E0 sits far in the tail of the capped law; it gets its own tilt.
        let e0 = log_power_product_at(&[(&small, l)], nn, Backend::Fft);
        let total = log_power_product_at(&[(nu.pmf(), l)], nn, Backend::Fft);
        (e0, p[1].log_value(nn) - untilt, p[2].log_value(nn) - untilt, total)
    } else {
        let p = power_triple([small.clone(), large.clone(), empty()], l, |x, y| {
            combine_direct(x, y, nn)
        });
        let total = crate::logconv::self_convolve_power(nu.pmf(), l, nn)?.log_mass(nn);
        (p[0].log_mass(nn), p[1].log_mass(nn), p[2].log_mass(nn), total)
    };

    let log_comparator = (l as f64).ln() + nu.log_mass(idx as usize);
    let sum = log_sum_exp(&[log_e0, log_e1, log_e2]);
    let identity_error = ((sum - log_total).exp() - 1.0).abs();
    let ratio = |v: f64| (v - log_comparator).exp();
    let pair = if b <= nn {
        (2.0 * (l as f64).ln() + 2.0 * nu.log_mass(b) - log_comparator).exp()
    } else {
        0.0
    };
    Ok(DecompositionReport {
        alpha,
        n,
        l,
        b_l,
        idx,
        rounding: ROUNDING_RULE,
        log_e0,
        log_e1,
        log_e2,
        log_total,
        log_comparator,
        ratio0: ratio(log_e0),
        ratio1: ratio(log_e1),
        ratio2: ratio(log_e2),
        identity_error,
        pair_bound_ratio: pair,
        transform_path: transform,
    })
}

/// `E1` by its defining sum `L sum_{m >= B_L} nu[m] nu_{<B_L}^{L-1}[N - m]`.
pub fn single_large_mass(alpha: Alpha, n: u64, l: u64, b_l: u64) -> Result<f64> {
    let nu = truncated_site_law(alpha, n as usize, Fugacity::CRITICAL)?;
    let small = cap_support(nu.pmf(), b_l as usize);
    let nn = n as usize;
    let rest = if l > 1 {
        crate::logconv::self_convolve_power(&small, l - 1, nn)?
    } else {
        LogPmf::point_mass(0)
    };
    let terms: Vec<f64> = (b_l as usize..=nn)
        .map(|m| nu.log_mass(m) + rest.log_mass(nn - m))
        .collect();
    Ok((l as f64).ln() + log_sum_exp(&terms))
}
