//! Summary of the law of `M_L = max_x eta_x` under `mu_{N,L}`.

use crate::analysis::schedule::background_index;
use crate::canonical::max_law_exact;
use crate::ensemble::Alpha;
use crate::error::Result;
use crate::series::compensated_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct CondensateProfile {
    pub alpha: Alpha,
    pub n: u64,
    pub l: u64,
    pub mean: f64,
    /// Quantiles of `M_L` at 5%, 50% and 95%.
    pub q05: u64,
    pub q50: u64,
    pub q95: u64,
    /// `N - (L-1) rho_{c,N}`.
    pub center: f64,
    /// `E[M_L] - center`.
    pub centered_mean: f64,
    /// `E[M_L] / N`.
    pub fraction: f64,
    pub c_l: Option<u64>,
    /// `P[|center - M_L| <= C_L]`.
    pub window_probability: Option<f64>,
}

pub fn condensate_profile(alpha: Alpha, n: u64, l: u64, c_l: Option<u64>) -> Result<CondensateProfile> {
    let law = max_law_exact(alpha, n as usize, l as usize)?;
    let masses = law.masses();
    let mean = compensated_sum(masses.iter().enumerate().map(|(m, p)| m as f64 * p));
    let quantile = |q: f64| {
        let mut acc = 0.0;
        for (m, p) in masses.iter().enumerate() {
            acc += p;
            if acc >= q {
                return m as u64;
            }
        }
        n
    };
    let (center, _) = background_index(alpha, n, l);
    let window_probability = c_l.map(|c| {
        compensated_sum(
            masses
                .iter()
                .enumerate()
                .filter(|(m, _)| (center - *m as f64).abs() <= c as f64)
                .map(|(_, p)| *p),
        )
    });
    Ok(CondensateProfile {
        alpha,
        n,
        l,
        mean,
        q05: quantile(0.05),
        q50: quantile(0.5),
        q95: quantile(0.95),
        center,
        centered_mean: mean - center,
        fraction: mean / n as f64,
        c_l,
        window_probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let p = condensate_profile(Alpha::new(1.0).unwrap(), 2, 2, None).unwrap();
        assert!((p.mean - 1.5).abs() < 1e-15);
        assert_eq!(p.window_probability, None);
        let p = condensate_profile(Alpha::new(2.5).unwrap(), 40, 1, Some(0)).unwrap();
        assert_eq!((p.mean, p.q05, p.q95), (40.0, 40, 40));
        assert_eq!(p.window_probability, Some(1.0));
    }
}
