//! Projected total variation between the background `T eta` and the product
//! law `nu^{(x) d}`, estimated from exact canonical samples.
//!
//! Only the first `d` coordinates are compared, so the estimate is a lower
//! bound on the total variation over the full background.

use crate::analysis::schedule::Schedule;
use crate::canonical::{sample_background_projection, SuffixTables};
use crate::ensemble::{truncated_site_law, Alpha, Fugacity, TruncatedSiteLaw};
use crate::error::{Result, ZrpError};
use crate::exec::Exec;
use crate::rng::seed_streams;
use crate::stats::{frequencies, tv_distance, CdfSampler};

pub const MIN_SAMPLES: usize = 10_000;
pub const BOOTSTRAP_REPLICATES: usize = 200;
/// Draws per random stream; blocks are the unit of parallel work.
pub const BLOCK: usize = 4096;

pub const LIMITATION: &str =
    "projected to the first d background coordinates; a lower bound on the full total variation";

/// Per-coordinate quantile of the comparator above which values share one
/// bucket.
pub fn tail_quantile(d: usize) -> f64 {
    if d == 1 {
        0.999
    } else {
        0.99
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvReport {
    pub alpha: Alpha,
    pub n: u64,
    pub l: u64,
    pub d: usize,
    pub samples: usize,
    pub tv: f64,
    /// Bootstrap standard error of `tv`.
    pub se: f64,
    pub buckets: usize,
    pub tail_quantile: f64,
    /// Values `>= tail_cut` are pooled per coordinate.
    pub tail_cut: usize,
    pub seed: u64,
    pub job: u32,
}

/// Smallest `c` with `P[nu < c] >= q`.
fn cut_for(nu: &TruncatedSiteLaw, q: f64) -> usize {
    let mut acc = 0.0;
    for k in 0..=nu.cutoff() {
        acc += nu.mass(k);
        if acc >= q {
            return k + 1;
        }
    }
    nu.cutoff() + 1
}

struct Buckets {
    cut: usize,
    d: usize,
}

impl Buckets {
    fn count(&self) -> usize {
        (self.cut + 1).pow(self.d as u32)
    }

    fn index(&self, xs: &[u64]) -> usize {
        xs.iter()
            .fold(0, |acc, &x| acc * (self.cut + 1) + (x as usize).min(self.cut))
    }

    fn comparator(&self, nu: &TruncatedSiteLaw) -> Vec<f64> {
        let mut one: Vec<f64> = (0..self.cut).map(|k| nu.mass(k)).collect();
        one.push((1.0 - one.iter().sum::<f64>()).max(0.0));
        let mut law = vec![1.0];
        for _ in 0..self.d {
            law = law.iter().flat_map(|&p| one.iter().map(move |&q| p * q)).collect();
        }
        law
    }
}

fn draw_blocks<F>(n_samples: usize, seed: u64, job: u32, exec: Exec, draw: F) -> Result<Vec<Vec<u64>>>
where
    F: Fn(&mut crate::rng::Stream) -> Result<Vec<u64>> + Sync + Send,
{
    let blocks = n_samples.div_ceil(BLOCK);
    let out: Vec<Result<Vec<Vec<u64>>>> = exec.map(blocks, |b| {
        let mut rng = seed_streams(seed, job, b as u32);
        let len = BLOCK.min(n_samples - b * BLOCK);
        (0..len).map(|_| draw(&mut rng)).collect()
    });
    let mut all = Vec::with_capacity(n_samples);
    for block in out {
        all.extend(block?);
    }
    Ok(all)
}

fn summarize(nu: &TruncatedSiteLaw, l: u64, d: usize, draws: &[Vec<u64>], seed: u64, job: u32) -> TvReport {
    let q = tail_quantile(d);
    let buckets = Buckets { cut: cut_for(nu, q), d };
    let comparator = buckets.comparator(nu);
    let mut counts = vec![0u64; buckets.count()];
    for xs in draws {
        counts[buckets.index(xs)] += 1;
    }
    let empirical = frequencies(&counts);
    let tv = tv_distance(&empirical, &comparator);

    // Multinomial bootstrap on a stream no block uses.
    let sampler = CdfSampler::new(&empirical);
    let mut rng = seed_streams(seed, job, u32::MAX);
    let reps: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| {
            let mut c = vec![0u64; counts.len()];
            for _ in 0..draws.len() {
                c[sampler.sample(&mut rng)] += 1;
            }
            tv_distance(&frequencies(&c), &comparator)
        })
        .collect();
    let mean = reps.iter().sum::<f64>() / reps.len() as f64;
    let var = reps.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (reps.len() - 1) as f64;

    TvReport {
        alpha: nu.alpha(),
        n: nu.cutoff() as u64,
        l,
        d,
        samples: draws.len(),
        tv,
        se: var.sqrt(),
        buckets: buckets.count(),
        tail_quantile: q,
        tail_cut: buckets.cut,
        seed,
        job,
    }
}

fn check_args(d: usize, n_samples: usize, l: u64) -> Result<()> {
    if !(1..=2).contains(&d) {
        return Err(ZrpError::InvalidArgument(format!(
            "projection dimension {d} outside 1..=2"
        )));
    }
    if n_samples < MIN_SAMPLES {
        return Err(ZrpError::InvalidArgument(format!(
            "{n_samples} samples, need >= {MIN_SAMPLES}"
        )));
    }
    if (d as u64) + 1 > l {
        return Err(ZrpError::InvalidArgument(format!("d = {d} needs L > d, got L = {l}")));
    }
    Ok(())
}

/// Projected TV at `(schedule.n, schedule.l)`.
pub fn background_tv_estimate(
    alpha: Alpha,
    schedule: &Schedule,
    d: usize,
    n_samples: usize,
    seed: u64,
    job: u32,
    exec: Exec,
) -> Result<TvReport> {
    background_tv_at(alpha, schedule.n, schedule.l, d, n_samples, seed, job, exec)
}

/// Projected TV at an arbitrary `(N, L)`.
#[allow(clippy::too_many_arguments)]
pub fn background_tv_at(
    alpha: Alpha,
    n: u64,
    l: u64,
    d: usize,
    n_samples: usize,
    seed: u64,
    job: u32,
    exec: Exec,
) -> Result<TvReport> {
    check_args(d, n_samples, l)?;
    let nu = truncated_site_law(alpha, n as usize, Fugacity::CRITICAL)?;
    let tables = SuffixTables::build_with(alpha, n as usize, l as usize, exec)?;
    let draws = draw_blocks(n_samples, seed, job, exec, |rng| {
        sample_background_projection(&tables, d, rng)
    })?;
    Ok(summarize(&nu, l, d, &draws, seed, job))
}

/// The same estimator fed with draws from the comparator itself.
pub fn product_law_tv(
    alpha: Alpha,
    n: u64,
    d: usize,
    n_samples: usize,
    seed: u64,
    job: u32,
    exec: Exec,
) -> Result<TvReport> {
    check_args(d, n_samples, d as u64 + 1)?;
    let nu = truncated_site_law(alpha, n as usize, Fugacity::CRITICAL)?;
    let sampler = CdfSampler::new(&nu.pmf().masses());
    let draws = draw_blocks(n_samples, seed, job, exec, |rng| {
        Ok((0..d).map(|_| sampler.sample(rng) as u64).collect())
    })?;
    let mut r = summarize(&nu, d as u64 + 1, d, &draws, seed, job);
    r.l = 0;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn product_law_is_close_to_itself() {
        let r = product_law_tv(a(2.5), 200, 1, 40_000, 3, 0, Exec::default()).unwrap();
        let bound = 3.0 * (r.buckets as f64 / 40_000.0).sqrt();
        assert!(r.tv < bound, "{} vs {bound}", r.tv);
        assert!(r.se > 0.0 && r.se < r.tv + 0.05);
    }

    #[test]
    fn execution_policy_does_not_change_the_estimate() {
        let s = background_tv_at(a(2.5), 120, 12, 2, 10_000, 9, 1, Exec::Sequential).unwrap();
        let p = background_tv_at(a(2.5), 120, 12, 2, 10_000, 9, 1, Exec::Parallel).unwrap();
        assert_eq!(s, p);
        assert!((0.0..=1.0).contains(&s.tv));
    }

    #[test]
    fn preconditions() {
        assert!(background_tv_at(a(2.5), 50, 5, 3, 10_000, 0, 0, Exec::Sequential).is_err());
        assert!(background_tv_at(a(2.5), 50, 5, 1, 100, 0, 0, Exec::Sequential).is_err());
    }
}
