//! Exact quantities against their growth-class representatives.

use crate::ensemble::{asymptotic_predictor, Alpha, Quantity};
use crate::error::{Result, ZrpError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRow {
    pub n: u64,
    pub value: f64,
    pub predictor: f64,
    pub ratio: f64,
    /// `value(N) / value(N_prev)`; `NaN` on the first row.
    pub value_growth: f64,
    pub predictor_growth: f64,
}

impl OrderRow {
    /// Growth of the value relative to the growth of the predictor.
    pub fn growth_quotient(&self) -> f64 {
        self.value_growth / self.predictor_growth
    }
}

pub fn order_check(quantity: Quantity, alpha: Alpha, grid: &[u64]) -> Result<Vec<OrderRow>> {
    if grid.is_empty() || grid[0] < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ZrpError::InvalidArgument(
            "grid must be increasing with entries >= 2".into(),
        ));
    }
    let mut rows: Vec<OrderRow> = Vec::with_capacity(grid.len());
    for &n in grid {
        let value = quantity.exact(alpha, n);
        let predictor = asymptotic_predictor(quantity, alpha, n)?;
        let (value_growth, predictor_growth) = match rows.last() {
            Some(p) => (value / p.value, predictor / p.predictor),
            None => (f64::NAN, f64::NAN),
        };
        rows.push(OrderRow {
            n,
            value,
            predictor,
            ratio: value / predictor,
            value_growth,
            predictor_growth,
        });
    }
    Ok(rows)
}

/// `2^lo, 2^(lo+1), ..., 2^hi`.
pub fn doubling_grid(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_partition_band() {
        let rows = order_check(Quantity::ZN, Alpha::new(1.0).unwrap(), &doubling_grid(10, 16)).unwrap();
        for r in &rows {
            assert!((0.9..=1.3).contains(&r.ratio), "{r:?}");
        }
    }

    #[test]
    fn second_moment_growth() {
        let rows = order_check(Quantity::SecondMoment, Alpha::new(1.5).unwrap(), &doubling_grid(10, 18)).unwrap();
        let top = rows.last().unwrap();
        assert!((top.value_growth / 2f64.powf(1.5) - 1.0).abs() < 0.01);
    }

    #[test]
    fn bad_grid() {
        let a = Alpha::new(2.0).unwrap();
        assert!(order_check(Quantity::RhoCN, a, &[4, 4]).is_err());
        assert!(order_check(Quantity::RhoCN, a, &[1, 4]).is_err());
    }
}
