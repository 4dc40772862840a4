#[path = "common/bruteforce.rs"]
mod bf;

use proptest::prelude::*;
use spvote_core::metrics::*;
use spvote_core::Ranking;

fn perm(n: usize) -> impl Strategy<Value = Ranking> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Ranking::new(v).unwrap())
}

fn pair(n: usize) -> impl Strategy<Value = (Ranking, Ranking, Ranking)> {
    (perm(n), perm(n), perm(n))
}

proptest! {
    #[test]
    fn symmetric_and_relabel_invariant((a, b, map) in (2usize..9).prop_flat_map(pair)) {
        prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&b, &a).unwrap());
        prop_assert_eq!(spearman_rho(&a, &b).unwrap(), spearman_rho(&b, &a).unwrap());
        let (ra, rb) = (a.relabel(map.order()), b.relabel(map.order()));
        prop_assert!((kendall_tau(&ra, &rb).unwrap() - kendall_tau(&a, &b).unwrap()).abs() < 1e-12);
        prop_assert!((spearman_rho(&ra, &rb).unwrap() - spearman_rho(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hit_counts_sum_to_concordant_pairs((pred, truth, _) in (2usize..9).prop_flat_map(pair)) {
        let n = truth.len();
        let hits: f64 = (1..n).map(|d| pairwise_hit_rate(&pred, &truth, d).unwrap() * (n - d) as f64).sum();
        let pairs = (n * (n - 1) / 2) as f64;
        let concordant = pairs - pred.kendall_distance(&truth).unwrap() as f64;
        prop_assert!((hits - concordant).abs() < 1e-9);
        prop_assert!((kendall_tau(&pred, &truth).unwrap() - (2.0 * concordant / pairs - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn tau_matches_pair_counter_on_all_four_item_rankings() {
    let truth = Ranking::identity(4);
    for p in bf::perms(4) {
        let d = bf::dist(&p, truth.order());
        let tau = kendall_tau(&Ranking::new(p).unwrap(), &truth).unwrap();
        assert!((tau - (1.0 - 2.0 * d as f64 / 6.0)).abs() < 1e-15);
    }
}

#[test]
fn bootstrap_width_shrinks_like_root_n() {
    let width = |n: usize| {
        let xs: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
        let (_, lo, hi) = bootstrap_ci(&xs, 4000, 0.95, 11).unwrap();
        hi - lo
    };
    let ratio = width(400) / width(1600);
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}
