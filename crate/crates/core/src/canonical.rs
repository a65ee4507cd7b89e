//! The canonical measure `mu_{N,L}`: marginals, exact sampling, the maximum
//! and the background map.

use rand::Rng;

use crate::ensemble::{log_stationary_weight, Alpha};
use crate::error::{Result, ZrpError};
use crate::exec::Exec;
use crate::logconv::fft::{log_power_product_at, Backend};
use crate::logconv::{cap_support, convolve_with, log_sum_exp, log_weight_table, LogPmf};
use crate::series::compensated_sum;

/// Occupancies of a ring of `L` sites with their total.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyConfig {
    occ: Vec<u64>,
    total: u64,
}

impl OccupancyConfig {
    pub fn new(occ: Vec<u64>) -> Result<Self> {
        if occ.is_empty() {
            return Err(ZrpError::InvalidArgument("a configuration needs L >= 1 sites".into()));
        }
        let total = occ.iter().sum();
        Ok(OccupancyConfig { occ, total })
    }

    /// All `n` particles on the first site.
    pub fn condensed(n: u64, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(ZrpError::InvalidArgument("L = 0".into()));
        }
        let mut occ = vec![0; l];
        occ[0] = n;
        Self::new(occ)
    }

    /// `floor(n/l)` everywhere, the remainder spread one per site from the
    /// first.
    pub fn balanced(n: u64, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(ZrpError::InvalidArgument("L = 0".into()));
        }
        let (q, r) = (n / l as u64, (n % l as u64) as usize);
        Self::new((0..l).map(|i| q + u64::from(i < r)).collect())
    }

    pub fn occupancies(&self) -> &[u64] {
        &self.occ
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn get(&self, x: usize) -> u64 {
        self.occ[x]
    }

    /// Moves one particle from `from` to `to`; `from` must be occupied.
    pub(crate) fn move_particle(&mut self, from: usize, to: usize) {
        debug_assert!(self.occ[from] > 0);
        self.occ[from] -= 1;
        self.occ[to] += 1;
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.occ
    }
}

/// Maximum occupancy and a site drawn uniformly among the maximizers.
///
/// Always consumes exactly one `random_range` draw, also when the maximizer
/// is unique, so the stream position does not depend on the data.
pub fn max_site<R: Rng + ?Sized>(config: &OccupancyConfig, rng: &mut R) -> (u64, usize) {
    let max = *config.occ.iter().max().expect("L >= 1");
    let ties = config.occ.iter().filter(|&&v| v == max).count();
    let pick = rng.random_range(0..ties);
    let site = config
        .occ
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == max)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick < ties");
    (max, site)
}

/// The map `T`: deletes the (tie-broken) maximizer and keeps the order of the
/// remaining sites.
pub fn remove_max<R: Rng + ?Sized>(config: &OccupancyConfig, rng: &mut R) -> Result<OccupancyConfig> {
    if config.len() < 2 {
        return Err(ZrpError::InvalidArgument("remove_max needs L >= 2".into()));
    }
    let (_, site) = max_site(config, rng);
    let mut occ = config.occ.clone();
    occ.remove(site);
    OccupancyConfig::new(occ)
}

/// `log Z_{n,l}` for all `n <= N` and `l <= L`, built by successive
/// convolution with the weight table.
#[derive(Debug, Clone)]
pub struct SuffixTables {
    alpha: Alpha,
    n: usize,
    l: usize,
    weights: LogPmf,
    partial: Vec<LogPmf>,
}

impl SuffixTables {
    pub fn build(alpha: Alpha, n: usize, l: usize) -> Result<Self> {
        Self::build_with(alpha, n, l, Exec::default())
    }

    pub fn build_with(alpha: Alpha, n: usize, l: usize, exec: Exec) -> Result<Self> {
        if l == 0 {
            return Err(ZrpError::InvalidArgument("L must be >= 1".into()));
        }
        let weights = log_weight_table(alpha, n);
        let mut partial = Vec::with_capacity(l);
        partial.push(weights.clone());
        for _ in 1..l {
            let next = convolve_with(partial.last().expect("non-empty"), &weights, n, exec);
            partial.push(next);
        }
        Ok(SuffixTables {
            alpha,
            n,
            l,
            weights,
            partial,
        })
    }

    pub fn alpha(&self) -> Alpha {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `log Z_{m, sites}` for `m <= N`, `1 <= sites <= L`.
    pub fn log_partition(&self, m: usize, sites: usize) -> f64 {
        self.partial[sites - 1].log_mass(m)
    }

    /// The table `log Z_{., sites}`.
    pub fn partial_sums(&self, sites: usize) -> &LogPmf {
        &self.partial[sites - 1]
    }

    /// Single-site marginal `P[eta_1 = k]` under `mu_{N,L}`.
    pub fn marginal(&self, k: usize) -> f64 {
        if k > self.n {
            return 0.0;
        }
        if self.l == 1 {
            return if k == self.n { 1.0 } else { 0.0 };
        }
        (self.weights.log_mass(k) + self.log_partition(self.n - k, self.l - 1) - self.log_partition(self.n, self.l))
            .exp()
    }

    /// One exact draw from `mu_{N,L}`.
    ///
    /// Site by site, `eta_x = k` is drawn with probability proportional to
    /// `(1/a(k)) Z_{r-k, l-1}` where `r` particles remain for `l` sites; the
    /// last site takes the remainder. Consumes one uniform per site but the
    /// last.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OccupancyConfig {
        let mut occ = Vec::with_capacity(self.l);
        let mut remaining = self.n;
        for sites in (2..=self.l).rev() {
            let k = self.draw_site(remaining, sites, rng);
            occ.push(k as u64);
            remaining -= k;
        }
        occ.push(remaining as u64);
        OccupancyConfig::new(occ).expect("L >= 1")
    }

    fn draw_site<R: Rng + ?Sized>(&self, remaining: usize, sites: usize, rng: &mut R) -> usize {
        let norm = self.log_partition(remaining, sites);
        let rest = &self.partial[sites - 2];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_live = 0;
        for k in 0..=remaining {
            let lw = self.weights.log_mass(k) + rest.log_mass(remaining - k) - norm;
            if lw == f64::NEG_INFINITY {
                continue;
            }
            last_live = k;
            acc += lw.exp();
            if u < acc {
                return k;
            }
        }
        // Rounding left the cumulative sum a hair below u.
        last_live
    }
}

/// Single-site law under `mu_{N,L}` over `0..=N`.
pub fn marginal_law(alpha: Alpha, n: usize, l: usize) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(ZrpError::InvalidArgument("L must be >= 1".into()));
    }
    if l == 1 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return Ok(v);
    }
    let w = log_weight_table(alpha, n);
    let rest = crate::logconv::self_convolve_power(&w, (l - 1) as u64, n)?;
    let logs: Vec<f64> = (0..=n).map(|k| w.log_mass(k) + rest.log_mass(n - k)).collect();
    let z = log_sum_exp(&logs);
    Ok(logs.iter().map(|v| (v - z).exp()).collect())
}

/// `P[eta_1 = k]` under `mu_{N,L}`; zero for `k > N`.
pub fn exact_marginal(alpha: Alpha, n: usize, l: usize, k: usize) -> Result<f64> {
    if k > n {
        return Ok(0.0);
    }
    Ok(marginal_law(alpha, n, l)?[k])
}

/// Law of `M_L = max_x eta_x` under `mu_{N,L}` over `0..=N`.
///
/// For `2m > N` at most one site can hold `m`, so
/// `P[M = m] = L a(m)^{-1} Z_{N-m,L-1} / Z_{N,L}`. Below that the cdf
/// `P[M <= m]` is the partition function with every site capped at `m`,
/// divided by `Z_{N,L}`; the pmf there is its difference.
pub fn max_law_exact(alpha: Alpha, n: usize, l: usize) -> Result<LogPmf> {
    max_law_exact_with(alpha, n, l, Backend::Auto)
}

pub fn max_law_exact_with(alpha: Alpha, n: usize, l: usize, backend: Backend) -> Result<LogPmf> {
    if l == 0 {
        return Err(ZrpError::InvalidArgument("L must be >= 1".into()));
    }
    if l == 1 {
        return Ok(LogPmf::point_mass(n));
    }
    let w = log_weight_table(alpha, n);
    let rest = crate::logconv::self_convolve_power(&w, (l - 1) as u64, n)?;
    let log_z = log_sum_exp(
        &(0..=n)
            .map(|k| w.log_mass(k) + rest.log_mass(n - k))
            .collect::<Vec<_>>(),
    );
    let ln_l = (l as f64).ln();
    let mut pmf = vec![f64::NEG_INFINITY; n + 1];
    for (m, slot) in pmf.iter_mut().enumerate().skip(n / 2 + 1) {
        *slot = ln_l + log_stationary_weight(alpha, m as u64) + rest.log_mass(n - m) - log_z;
    }
    // Capped cdf for m <= N/2; entries below ceil(N/L) vanish.
    let lo = n.div_ceil(l);
    let mut prev_cdf = 0.0;
    for (m, slot) in pmf.iter_mut().enumerate().take(n / 2 + 1).skip(lo) {
        let capped = cap_support(&w, m + 1);
        let cdf = (log_power_product_at(&[(&capped, l as u64)], n, backend) - log_z).exp();
        let p = (cdf - prev_cdf).max(0.0);
        *slot = p.ln();
        prev_cdf = cdf;
    }
    let normalized = (compensated_sum(pmf.iter().map(|v| v.exp())) - 1.0).abs() <= 1e-12;
    Ok(LogPmf::from_raw(pmf, None, normalized))
}

/// First `d` coordinates of `T eta` for one exact draw `eta ~ mu_{N,L}`.
pub fn sample_background_projection<R: Rng + ?Sized>(tables: &SuffixTables, d: usize, rng: &mut R) -> Result<Vec<u64>> {
    if d == 0 || d + 1 > tables.l() {
        return Err(ZrpError::InvalidArgument(format!(
            "projection dimension {d} outside 1..={}",
            tables.l().saturating_sub(1)
        )));
    }
    let eta = tables.sample(rng);
    let mut back = remove_max(&eta, rng)?.into_vec();
    back.truncate(d);
    Ok(back)
}
