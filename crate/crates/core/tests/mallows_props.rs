#[path = "common/bruteforce.rs"]
mod bf;

use spvote_core::mallows::sample_mallows;
use spvote_core::oracle::{mallows_normalizer, partial_likelihood, perm_index};
use spvote_core::plan::SubsetPlan;
use spvote_core::{seed, Ranking};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn empirical(m: usize, phi: f64, n: usize, s: u64) -> Vec<usize> {
    let center = Ranking::identity(m);
    let mut rng = seed::rng(s, &[]);
    let mut counts = vec![0usize; (1..=m).product()];
    for _ in 0..n {
        counts[perm_index(sample_mallows(&center, phi, &mut rng).unwrap().order())] += 1;
    }
    counts
}

#[test]
fn rim_frequencies_within_three_sigma() {
    let n = 100_000;
    for m in [3, 4] {
        for phi in [0.3, 0.5, 0.8] {
            let z = mallows_normalizer(phi, m).unwrap();
            let counts = empirical(m, phi, n, 17 + m as u64);
            for (perm, c) in bf::perms(m).iter().zip(&counts) {
                let pr = phi.powi(bf::dist(perm, &(0..m).collect::<Vec<_>>()) as i32) / z;
                let se = (pr * (1.0 - pr) / n as f64).sqrt();
                assert!((*c as f64 / n as f64 - pr).abs() <= 3.0 * se, "m={m} phi={phi} {perm:?}");
            }
        }
    }
}

#[test]
fn uniform_at_phi_one() {
    let n = 60_000;
    let counts = empirical(3, 1.0, n, 5);
    let e = n as f64 / 6.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new(5.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 = {chi2}");
}

#[test]
fn restriction_matches_exact_marginal() {
    // The restriction of a Mallows draw to a subset follows the exact sum over
    // extensions. It is generally not a Mallows model with the same φ.
    let (m, phi, n) = (5, 0.6, 100_000);
    let center = Ranking::identity(m);
    for subset in SubsetPlan::make(m, 3, 2).unwrap().subsets().iter().chain(SubsetPlan::make(m, 2, 1).unwrap().subsets()) {
        let mut rng = seed::rng(23, &[subset[0] as u64, subset.len() as u64]);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts.entry(sample_mallows(&center, phi, &mut rng).unwrap().restrict(subset).unwrap()).or_insert(0usize) += 1;
        }
        let mut total = 0.0;
        for (sigma, c) in counts {
            let pr = partial_likelihood(&sigma, &center, phi).unwrap();
            total += pr;
            let se = (pr * (1.0 - pr) / n as f64).sqrt();
            assert!((c as f64 / n as f64 - pr).abs() <= 4.0 * se, "{subset:?} {sigma}");
        }
        assert!((total - 1.0).abs() < 1e-9);
    }
    // positions 0 and 2 of three: (1+2φ)/Z(φ,3), not 1/(1+φ)
    let p = partial_likelihood(&Ranking::new(vec![0, 2]).unwrap(), &Ranking::identity(3), 0.5).unwrap();
    assert!((p - 2.0 / 2.625).abs() < 1e-12);
    assert!((p - 1.0 / 1.5).abs() > 0.05);
}
