mod common;

use common::{compositions, weight};
use zrp_core::canonical::{max_law_exact, max_site, sample_background_projection, SuffixTables};
use zrp_core::ensemble::{truncated_site_law, Alpha, Fugacity};
use zrp_core::rng::seed_streams;
use zrp_core::stats::{chi_square_gof, frequencies, tv_distance};

fn a(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

#[test]
fn exact_sampler_passes_goodness_of_fit_on_tiny_spaces() {
    for (job, &(al, n, l)) in [(1.0, 4u64, 3usize), (2.0, 4, 3), (2.5, 5, 3)].iter().enumerate() {
        let states = compositions(n, l);
        let z: f64 = states.iter().map(|s| weight(al, s)).sum();
        let expected: Vec<f64> = states.iter().map(|s| weight(al, s) / z).collect();
        let t = SuffixTables::build(a(al), n as usize, l).unwrap();
        let mut rng = seed_streams(11, job as u32, 0);
        let mut counts = vec![0u64; states.len()];
        for _ in 0..1_000_000 {
            let s = t.sample(&mut rng);
            let i = states.iter().position(|c| c == s.occupancies()).unwrap();
            counts[i] += 1;
        }
        let g = chi_square_gof(&counts, &expected, 5.0).unwrap();
        assert!(g.p_value > 1e-3, "alpha {al}: p = {}", g.p_value);
    }
}

#[test]
fn two_particles_on_two_sites() {
    let t = SuffixTables::build(a(1.0), 2, 2).unwrap();
    let mut rng = seed_streams(12, 0, 0);
    let hits = (0..100_000)
        .filter(|_| t.sample(&mut rng).occupancies() == [1, 1])
        .count();
    assert!((hits as f64 / 1e5 - 0.5).abs() < 0.01);
}

#[test]
fn empirical_marginal_and_translation_invariance() {
    let (n, l, draws) = (50usize, 5usize, 100_000usize);
    let t = SuffixTables::build(a(2.5), n, l).unwrap();
    let mut rng = seed_streams(13, 0, 0);
    let (mut first, mut middle) = (vec![0u64; n + 1], vec![0u64; n + 1]);
    for _ in 0..draws {
        let s = t.sample(&mut rng);
        first[s.get(0) as usize] += 1;
        middle[s.get(l.div_ceil(2) - 1) as usize] += 1;
    }
    let exact: Vec<f64> = (0..=n).map(|k| t.marginal(k)).collect();
    assert!(tv_distance(&frequencies(&first), &exact) < 0.01);
    let bound = 3.0 / (draws as f64).sqrt();
    assert!(tv_distance(&frequencies(&first), &frequencies(&middle)) < bound);
}

#[test]
fn sampled_maximum_matches_its_exact_law() {
    let (n, l) = (200usize, 10usize);
    let t = SuffixTables::build(a(2.5), n, l).unwrap();
    let law = max_law_exact(a(2.5), n, l).unwrap();
    let mut rng = seed_streams(14, 0, 0);
    let mut counts = vec![0u64; n + 1];
    for _ in 0..100_000 {
        let s = t.sample(&mut rng);
        counts[max_site(&s, &mut rng).0 as usize] += 1;
    }
    assert!(tv_distance(&frequencies(&counts), &law.masses()) < 0.02);
}

#[test]
fn projected_background_on_two_sites() {
    // Exact law of the background coordinate for N = 2, L = 2: the smaller
    // occupancy, with ties split evenly.
    let states = compositions(2, 2);
    let z: f64 = states.iter().map(|s| weight(1.0, s)).sum();
    let mut exact = vec![0.0; 3];
    for s in &states {
        exact[*s.iter().min().unwrap() as usize] += weight(1.0, s) / z;
    }
    assert_eq!(exact, vec![0.5, 0.5, 0.0]);
    let nu = truncated_site_law(a(1.0), 2, Fugacity::CRITICAL).unwrap();
    assert!((tv_distance(&exact, &nu.pmf().masses()) - 0.2).abs() < 1e-15);

    let t = SuffixTables::build(a(1.0), 2, 2).unwrap();
    let mut rng = seed_streams(15, 0, 0);
    let mut counts = vec![0u64; 3];
    for _ in 0..100_000 {
        counts[sample_background_projection(&t, 1, &mut rng).unwrap()[0] as usize] += 1;
    }
    assert!(tv_distance(&frequencies(&counts), &exact) < 0.01);
}
