//! Transform path for long tables.
//!
//! A convolution evaluated at one index `T` is unchanged, up to the factor
//! `exp(theta * T)`, when every factor is tilted by `exp(theta * k)`. Choosing
//! `theta` so that the tilted product law has mean `T` moves the queried
//! mass near the bulk of the table, where the absolute error of a
//! floating-point FFT is also a small relative error. Tables are kept in
//! linear form with a separate log scale and truncated to `0..=T` after
//! every product, so nothing above `T` ever aliases back.

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use std::sync::Arc;

use super::{convolve, self_convolve_power, LogPmf};
use crate::series::compensated_sum;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// `value[k] = v[k] * exp(log_scale)`, with `max(v) = 1` unless all zero.
#[derive(Debug, Clone)]
pub struct ScaledTable {
    v: Vec<f64>,
    log_scale: f64,
}

impl ScaledTable {
    /// `p[k] * exp(theta * k)` for `k < len`.
    pub fn from_log(p: &LogPmf, theta: f64, len: usize) -> Self {
        let logs: Vec<f64> = (0..len).map(|k| p.log_mass(k) + theta * k as f64).collect();
        let max = logs.iter().copied().fold(NEG_INF, f64::max);
        if max == NEG_INF {
            return ScaledTable::zeros(len);
        }
        ScaledTable {
            v: logs.iter().map(|l| (l - max).exp()).collect(),
            log_scale: max,
        }
    }

    pub fn zeros(len: usize) -> Self {
        ScaledTable {
            v: vec![0.0; len],
            log_scale: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|x| *x == 0.0)
    }

    pub fn log_value(&self, k: usize) -> f64 {
        match self.v.get(k) {
            Some(&x) if x > 0.0 => x.ln() + self.log_scale,
            _ => NEG_INF,
        }
    }

    fn renormalize(&mut self) {
        let max = self.v.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            for x in &mut self.v {
                *x /= max;
            }
            self.log_scale += max.ln();
        } else {
            self.log_scale = 0.0;
        }
    }

    /// Elementwise sum of tables.
    pub fn sum(parts: &[&ScaledTable]) -> ScaledTable {
        let len = parts.iter().map(|p| p.len()).max().unwrap_or(0);
        let live: Vec<&&ScaledTable> = parts.iter().filter(|p| !p.is_zero()).collect();
        let Some(scale) = live.iter().map(|p| p.log_scale).reduce(f64::max) else {
            return ScaledTable::zeros(len);
        };
        let mut v = vec![0.0; len];
        for p in live {
            let f = (p.log_scale - scale).exp();
            for (o, x) in v.iter_mut().zip(&p.v) {
                *o += x * f;
            }
        }
        let mut out = ScaledTable { v, log_scale: scale };
        out.renormalize();
        out
    }
}

/// Forward transform of a [`ScaledTable`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    c: Vec<Complex<f64>>,
    log_scale: f64,
    zero: bool,
}

/// FFT products truncated to a fixed output length.
pub struct FftConvolver {
    len: usize,
    size: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl FftConvolver {
    /// Products of tables over `0..len`, truncated back to `0..len`.
    pub fn new(len: usize) -> Self {
        let size = (2 * len).max(2).next_power_of_two();
        let mut planner = RealFftPlanner::<f64>::new();
        FftConvolver {
            len,
            size,
            r2c: planner.plan_fft_forward(size),
            c2r: planner.plan_fft_inverse(size),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spectrum(&self, a: &ScaledTable) -> Spectrum {
        let mut input = self.r2c.make_input_vec();
        let n = a.len().min(self.len);
        input[..n].copy_from_slice(&a.v[..n]);
        let mut out = self.r2c.make_output_vec();
        self.r2c
            .process(&mut input, &mut out)
            .expect("buffer sizes come from the plan");
        Spectrum {
            c: out,
            log_scale: a.log_scale,
            zero: a.is_zero(),
        }
    }

    /// Pointwise product of spectra.
    pub fn product(&self, a: &Spectrum, b: &Spectrum) -> Spectrum {
        Spectrum {
            c: a.c.iter().zip(&b.c).map(|(x, y)| x * y).collect(),
            log_scale: a.log_scale + b.log_scale,
            zero: a.zero || b.zero,
        }
    }

    /// Sum of spectra (each already a product), aligned on a common scale.
    pub fn sum(&self, parts: &[Spectrum]) -> Spectrum {
        let live: Vec<&Spectrum> = parts.iter().filter(|s| !s.zero).collect();
        let Some(scale) = live.iter().map(|s| s.log_scale).reduce(f64::max) else {
            return Spectrum {
                c: vec![Complex::new(0.0, 0.0); self.size / 2 + 1],
                log_scale: 0.0,
                zero: true,
            };
        };
        let mut c = vec![Complex::new(0.0, 0.0); self.size / 2 + 1];
        for s in live {
            let f = (s.log_scale - scale).exp();
            for (o, x) in c.iter_mut().zip(&s.c) {
                *o += x * f;
            }
        }
        Spectrum {
            c,
            log_scale: scale,
            zero: false,
        }
    }

    pub fn inverse(&self, s: Spectrum) -> ScaledTable {
        if s.zero {
            return ScaledTable::zeros(self.len);
        }
        let mut c = s.c;
        // The DC and Nyquist bins of a real signal are real.
        c[0].im = 0.0;
        if let Some(last) = c.last_mut() {
            last.im = 0.0;
        }
        let mut out = self.c2r.make_output_vec();
        self.c2r
            .process(&mut c, &mut out)
            .expect("buffer sizes come from the plan");
        let norm = 1.0 / self.size as f64;
        let v: Vec<f64> = out[..self.len].iter().map(|x| (x * norm).max(0.0)).collect();
        let mut t = ScaledTable {
            v,
            log_scale: s.log_scale,
        };
        t.renormalize();
        t
    }

    pub fn multiply(&self, a: &ScaledTable, b: &ScaledTable) -> ScaledTable {
        let (sa, sb) = (self.spectrum(a), self.spectrum(b));
        self.inverse(self.product(&sa, &sb))
    }

    pub fn square(&self, a: &ScaledTable) -> ScaledTable {
        let sa = self.spectrum(a);
        self.inverse(self.product(&sa, &sa))
    }

    /// `a^{*l}` by square-and-multiply, `l >= 1`.
    pub fn power(&self, a: &ScaledTable, l: u64) -> ScaledTable {
        assert!(l >= 1);
        let mut acc: Option<ScaledTable> = None;
        let mut base = a.clone();
        let mut e = l;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(x) => self.multiply(&x, &base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = self.square(&base);
        }
        acc.expect("l >= 1")
    }
}

/// `log sum_j a[j] b[target - j]`, exact arithmetic on the linear tables.
pub fn log_dot_at(a: &ScaledTable, b: &ScaledTable, target: usize) -> f64 {
    if target >= a.len() + b.len() {
        return NEG_INF;
    }
    let lo = target.saturating_sub(b.len() - 1);
    let hi = target.min(a.len() - 1);
    if lo > hi {
        return NEG_INF;
    }
    let s = compensated_sum((lo..=hi).map(|j| a.v[j] * b.v[target - j]));
    if s > 0.0 {
        s.ln() + a.log_scale + b.log_scale
    } else {
        NEG_INF
    }
}

/// Tilted mean and variance of `p` restricted to `0..len`.
fn tilted_moments(p: &LogPmf, theta: f64, len: usize) -> (f64, f64) {
    let n = len.min(p.len());
    let lv = &p.log_masses()[..n];
    let max = lv
        .iter()
        .enumerate()
        .map(|(k, l)| l + theta * k as f64)
        .fold(NEG_INF, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (k, l) in lv.iter().enumerate() {
        let w = (l + theta * k as f64 - max).exp();
        let kf = k as f64;
        z += w;
        m1 += w * kf;
        m2 += w * kf * kf;
    }
    let mean = m1 / z;
    (mean, (m2 / z - mean * mean).max(0.0))
}

/// Tilt `theta` with `sum_i weight_i * mean_theta(p_i) = target`, all tables
/// restricted to `0..len`. Saturates when the target is at the edge of the
/// reachable range.
pub fn solve_tilt(parts: &[(&LogPmf, f64)], target: f64, len: usize) -> f64 {
    let total = |theta: f64| {
        parts.iter().fold((0.0, 0.0), |(m, v), (p, w)| {
            let (pm, pv) = tilted_moments(p, theta, len);
            (m + w * pm, v + w * pv)
        })
    };
    let limit = 800.0;
    let (mut lo, mut hi) = (-1.0 / len as f64, 1.0 / len as f64);
    while total(lo).0 > target && lo > -limit {
        lo *= 4.0;
    }
    while total(hi).0 < target && hi < limit {
        hi *= 4.0;
    }
    let mut theta = 0.0f64.clamp(lo, hi);
    for _ in 0..100 {
        let (m, v) = total(theta);
        let err = m - target;
        if err.abs() <= 1e-9 * target.max(1.0) {
            break;
        }
        if err > 0.0 {
            hi = theta;
        } else {
            lo = theta;
        }
        let newton = if v > 0.0 { theta - err / v } else { f64::NAN };
        theta = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * theta.abs().max(1e-300) {
            break;
        }
    }
    theta
}

/// Sizes with `(target+1)^2 * convolutions` below this use the direct kernel.
pub const DIRECT_WORK_LIMIT: f64 = 2.0e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Auto,
    Direct,
    Fft,
}

/// `log (p_1^{*l_1} * ... * p_m^{*l_m})[target]`.
pub fn log_power_product_at(factors: &[(&LogPmf, u64)], target: usize, backend: Backend) -> f64 {
    let factors: Vec<(&LogPmf, u64)> = factors.iter().copied().filter(|(_, l)| *l > 0).collect();
    if factors.is_empty() {
        return if target == 0 { 0.0 } else { NEG_INF };
    }
    // Reachable totals.
    let mut min_total = 0usize;
    let mut max_total = 0usize;
    for (p, l) in &factors {
        let Some((lo, hi)) = p.truncate(target).support() else {
            return NEG_INF;
        };
        min_total = min_total.saturating_add(lo.saturating_mul(*l as usize));
        max_total = max_total.saturating_add(hi.saturating_mul(*l as usize));
    }
    if target < min_total || target > max_total {
        return NEG_INF;
    }
    let convs: f64 = factors
        .iter()
        .map(|(_, l)| 2.0 * (64 - l.leading_zeros()) as f64)
        .sum::<f64>();
    let use_direct = match backend {
        Backend::Direct => true,
        Backend::Fft => false,
        Backend::Auto => ((target + 1) as f64).powi(2) * convs <= DIRECT_WORK_LIMIT,
    };
    if use_direct {
        let mut acc: Option<LogPmf> = None;
        for (p, l) in &factors {
            let pw = self_convolve_power(p, *l, target).expect("power >= 1");
            acc = Some(match acc {
                None => pw,
                Some(a) => convolve(&a, &pw, target),
            });
        }
        return acc.expect("non-empty").log_mass(target);
    }
    let len = target + 1;
    let weights: Vec<(&LogPmf, f64)> = factors.iter().map(|(p, l)| (*p, *l as f64)).collect();
    let theta = solve_tilt(&weights, target as f64, len);
    let conv = FftConvolver::new(len);
    let mut tables: Vec<ScaledTable> = factors
        .iter()
        .map(|(p, l)| conv.power(&ScaledTable::from_log(p, theta, len), *l))
        .collect();
    let last = tables.pop().expect("non-empty");
    let head = tables.into_iter().reduce(|a, b| conv.multiply(&a, &b));
    let tilted = match head {
        None => last.log_value(target),
        Some(h) => log_dot_at(&h, &last, target),
    };
    tilted - theta * target as f64
}

/// Worst relative disagreement between the transform and direct paths on a
/// fixed battery of heavy-tailed products, including a deep large-deviation
/// event. Run once per process by callers that rely on the transform path.
pub fn self_check() -> f64 {
    use crate::ensemble::{truncated_site_law, Alpha, Fugacity};
    use crate::logconv::cap_support;
    let mut worst = 0.0f64;
    for &(alpha, n, l, cap) in &[(2.5, 300usize, 40u64, 12usize), (1.5, 500, 6, 60), (1.0, 400, 5, 150)] {
        let site = truncated_site_law(Alpha::new(alpha).unwrap(), n, Fugacity::CRITICAL).unwrap();
        let small = cap_support(site.pmf(), cap);
        let large = LogPmf::from_raw(
            site.log_masses()
                .iter()
                .enumerate()
                .map(|(k, v)| if k >= cap { *v } else { NEG_INF })
                .collect(),
            None,
            false,
        );
        let cases: [Vec<(&LogPmf, u64)>; 4] = [
            vec![(site.pmf(), l)],
            vec![(&small, l)],
            vec![(&large, 1), (&small, l - 1)],
            vec![(&large, 2), (&small, l - 2)],
        ];
        for case in &cases {
            let d = log_power_product_at(case, n, Backend::Direct);
            let f = log_power_product_at(case, n, Backend::Fft);
            if d == NEG_INF && f == NEG_INF {
                continue;
            }
            worst = worst.max(((f - d).exp() - 1.0).abs());
        }
    }
    worst
}
