mod common;

use common::{close, compositions, inv_a, weight, z_n, ALPHAS};
use zrp_core::analysis::event_decomposition;
use zrp_core::canonical::{exact_marginal, max_law_exact};
use zrp_core::ensemble::Alpha;
use zrp_core::logconv::{canonical_partition_log, sum_law};
use zrp_core::ZrpError;

const TOL: f64 = 1e-10;

fn grid() -> impl Iterator<Item = (f64, u64, usize)> {
    ALPHAS
        .into_iter()
        .flat_map(|a| (0..=8u64).flat_map(move |n| (1..=5usize).map(move |l| (a, n, l))))
}

#[test]
fn partition_function() {
    for (a, n, l) in grid() {
        let z: f64 = compositions(n, l).iter().map(|e| weight(a, e)).sum();
        let got = canonical_partition_log(Alpha::new(a).unwrap(), n as usize, l as u64).unwrap();
        assert!(close(got.exp(), z, TOL), "alpha {a} N {n} L {l}: {} vs {z}", got.exp());
    }
}

#[test]
fn single_site_marginal() {
    for (a, n, l) in grid().filter(|t| t.2 >= 2) {
        let comps = compositions(n, l);
        let z: f64 = comps.iter().map(|e| weight(a, e)).sum();
        for k in 0..=n + 1 {
            let want: f64 = comps.iter().filter(|e| e[0] == k).map(|e| weight(a, e)).sum::<f64>() / z;
            let got = exact_marginal(Alpha::new(a).unwrap(), n as usize, l, k as usize).unwrap();
            assert!(close(got, want, TOL), "alpha {a} N {n} L {l} k {k}: {got} vs {want}");
        }
    }
}

#[test]
fn law_of_the_maximum() {
    for (a, n, l) in grid() {
        let comps = compositions(n, l);
        let z: f64 = comps.iter().map(|e| weight(a, e)).sum();
        let law = max_law_exact(Alpha::new(a).unwrap(), n as usize, l).unwrap();
        for m in 0..=n {
            let want: f64 = comps
                .iter()
                .filter(|e| *e.iter().max().unwrap() == m)
                .map(|e| weight(a, e))
                .sum::<f64>()
                / z;
            let got = law.mass(m as usize);
            assert!(
                close(got, want, TOL) || (got - want).abs() < 1e-15,
                "alpha {a} N {n} L {l} m {m}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn law_of_the_sum() {
    for (a, n, l) in grid() {
        let zn = z_n(a, n);
        let law = sum_law(Alpha::new(a).unwrap(), n as usize, l as u64).unwrap();
        for total in 0..=n {
            let want: f64 = compositions(total, l)
                .iter()
                .map(|e| e.iter().map(|&k| inv_a(a, k) / zn).product::<f64>())
                .sum();
            assert!(
                close(law.mass(total as usize), want, TOL),
                "alpha {a} N {n} L {l} s {total}"
            );
        }
    }
}

#[test]
fn event_masses() {
    for (a, n, l) in grid().filter(|t| t.1 >= 1) {
        let zn = z_n(a, n);
        let rho: f64 = (0..=n).map(|k| k as f64 * inv_a(a, k)).sum::<f64>() / zn;
        let idx = (n as f64 - (l as f64 - 1.0) * rho).round() as i64;
        let comps = compositions(n, l);
        for b in 1..=n + 1 {
            let got = event_decomposition(Alpha::new(a).unwrap(), n, l as u64, b);
            if idx < 1 || idx > n as i64 {
                assert!(matches!(got, Err(ZrpError::Range { .. })));
                continue;
            }
            let r = got.unwrap();
            let mut e = [0.0f64; 3];
            for c in &comps {
                let xi = c.iter().filter(|&&k| k >= b).count().min(2);
                e[xi] += c.iter().map(|&k| inv_a(a, k) / zn).product::<f64>();
            }
            let total = e.iter().sum::<f64>();
            for (got, want) in [r.log_e0, r.log_e1, r.log_e2, r.log_total]
                .into_iter()
                .zip([e[0], e[1], e[2], total])
            {
                assert!(
                    close(got.exp(), want, TOL),
                    "alpha {a} N {n} L {l} B {b}: {} vs {want}",
                    got.exp()
                );
            }
            assert_eq!(r.idx, idx);
        }
    }
}

#[test]
fn marginal_example_alpha_two() {
    // Fifteen configurations of four particles on three sites.
    let comps = compositions(4, 3);
    assert_eq!(comps.len(), 15);
    let z: f64 = comps.iter().map(|e| weight(2.0, e)).sum();
    let p0: f64 = comps.iter().filter(|e| e[0] == 0).map(|e| weight(2.0, e)).sum::<f64>() / z;
    let got = exact_marginal(Alpha::new(2.0).unwrap(), 4, 3, 0).unwrap();
    assert!(close(got, p0, 1e-13));
}
