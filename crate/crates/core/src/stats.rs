//! Distances and goodness-of-fit tests between discrete laws.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Result, ZrpError};
use crate::series::compensated_sum;

/// `(1/2) sum |p_i - q_i|`; the shorter table is padded with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |t: &[f64], i: usize| t.get(i).copied().unwrap_or(0.0);
    0.5 * compensated_sum((0..n).map(|i| (at(p, i) - at(q, i)).abs()))
}

/// Empirical frequencies of `counts`.
pub fn frequencies(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells after pooling those with small expected counts.
    pub cells: usize,
}

/// Pearson chi-square test of `observed` against cell probabilities
/// `expected`. Cells with expected count below `min_expected` are pooled into
/// one cell before the test.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], min_expected: f64) -> Result<GofResult> {
    if observed.len() != expected.len() {
        return Err(ZrpError::InvalidArgument(format!(
            "{} observed cells vs {} expected",
            observed.len(),
            expected.len()
        )));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(ZrpError::InvalidArgument("no observations".into()));
    }
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_o, mut pooled_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * nf;
        if e < min_expected {
            pooled_o += o as f64;
            pooled_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_e > 0.0 {
        cells.push((pooled_o, pooled_e));
    } else if pooled_o > 0.0 {
        // Observations in cells of probability zero: reject outright.
        return Ok(GofResult {
            statistic: f64::INFINITY,
            dof: cells.len().saturating_sub(1),
            p_value: 0.0,
            cells: cells.len(),
        });
    }
    if cells.len() < 2 {
        return Err(ZrpError::InvalidArgument("fewer than two cells after pooling".into()));
    }
    let statistic = compensated_sum(cells.iter().map(|(o, e)| (o - e) * (o - e) / e));
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| ZrpError::InvalidArgument(e.to_string()))?;
    Ok(GofResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        cells: cells.len(),
    })
}

/// Draws from a finite law by inversion on its cumulative table.
#[derive(Debug, Clone)]
pub struct CdfSampler {
    cdf: Vec<f64>,
}

impl CdfSampler {
    pub fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        CdfSampler { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seed_streams;

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        assert!((tv_distance(&[0.5, 0.5], &[0.4, 0.4, 0.2]) - 0.2).abs() < 1e-15);
        assert_eq!(tv_distance(&[1.0], &[0.0, 1.0]), 1.0);
    }

    #[test]
    fn chi_square_matches_tabulated_quantile() {
        // Two cells, statistic 3.841 is the 5% point of chi-square(1).
        let r = chi_square_gof(&[598, 402], &[0.5, 0.5], 5.0).unwrap();
        assert!((r.statistic - 38.416).abs() < 1e-9);
        assert!(r.p_value < 1e-8);
        let r = chi_square_gof(&[5098, 4902], &[0.5, 0.5], 5.0).unwrap();
        assert!((r.statistic - 3.8416).abs() < 1e-9);
        assert!((r.p_value - 0.05).abs() < 1e-4, "{}", r.p_value);
    }

    #[test]
    fn small_cells_are_pooled() {
        let r = chi_square_gof(&[50, 48, 1, 1], &[0.5, 0.49, 0.005, 0.005], 5.0).unwrap();
        assert_eq!(r.cells, 3);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn cdf_sampler_frequencies() {
        let s = CdfSampler::new(&[1.0, 0.0, 3.0]);
        let mut rng = seed_streams(1, 0, 0);
        let mut counts = [0u64; 3];
        for _ in 0..100_000 {
            counts[s.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        assert!((counts[0] as f64 / 1e5 - 0.25).abs() < 0.01);
    }
}
