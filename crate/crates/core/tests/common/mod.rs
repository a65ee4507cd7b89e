#![allow(dead_code)]

/// All compositions of `n` into `l` parts.
pub fn compositions(n: u64, l: usize) -> Vec<Vec<u64>> {
    fn rec(pos: usize, left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, &mut vec![0; l], &mut out);
    out
}

/// `1 / a(k)` with `a(k) = k^alpha`, `a(0) = 1`.
pub fn inv_a(alpha: f64, k: u64) -> f64 {
    if k == 0 {
        1.0
    } else {
        (k as f64).powf(-alpha)
    }
}

pub fn weight(alpha: f64, eta: &[u64]) -> f64 {
    eta.iter().map(|&k| inv_a(alpha, k)).product()
}

/// `Z_N(1) = sum_{k <= N} 1/a(k)`.
pub fn z_n(alpha: f64, n: u64) -> f64 {
    (0..=n).map(|k| inv_a(alpha, k)).sum()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub const ALPHAS: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.5];
