//! Ranking-quality metrics and percentile-bootstrap intervals.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Ranking;
use crate::seed;

pub const DEFAULT_RESAMPLES: usize = 1000;

fn positions(pred: &Ranking, truth: &Ranking) -> Result<(Vec<usize>, Vec<usize>)> {
    if !pred.same_scope(truth) {
        return Err(Error::ScopeMismatch);
    }
    let m = truth.order().iter().copied().max().map_or(0, |x| x + 1);
    Ok((pred.positions(m), truth.positions(m)))
}

/// `(C − D) / C(n, 2)`; 1 for identical rankings, −1 for reversed ones.
pub fn kendall_tau(pred: &Ranking, truth: &Ranking) -> Result<f64> {
    if !pred.same_scope(truth) {
        return Err(Error::ScopeMismatch);
    }
    let n = truth.len();
    if n < 2 {
        return Ok(1.0);
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let discordant = pred.kendall_distance(truth)? as f64;
    Ok((pairs - 2.0 * discordant) / pairs)
}

/// `1 − 6 Σ d_i² / (n (n² − 1))` with `d_i` the position difference of item `i`.
pub fn spearman_rho(pred: &Ranking, truth: &Ranking) -> Result<f64> {
    let (pp, tp) = positions(pred, truth)?;
    let n = truth.len() as f64;
    if truth.len() < 2 {
        return Ok(1.0);
    }
    let sum: f64 = truth.order().iter().map(|&x| (pp[x] as f64 - tp[x] as f64).powi(2)).sum();
    Ok(1.0 - 6.0 * sum / (n * (n * n - 1.0)))
}

/// Share of pairs `d` apart in `truth` that `pred` orders the same way.
pub fn pairwise_hit_rate(pred: &Ranking, truth: &Ranking, d: usize) -> Result<f64> {
    let (pp, _) = positions(pred, truth)?;
    let n = truth.len();
    if d < 1 || d >= n {
        return Err(Error::InvalidDistance { d, max: n.saturating_sub(1) });
    }
    let order = truth.order();
    let hits = (0..n - d).filter(|&i| pp[order[i]] < pp[order[i + d]]).count();
    Ok(hits as f64 / (n - d) as f64)
}

/// `|top_t(truth) ∩ top_t(pred)| / t`.
pub fn top_t_hit_rate(pred: &Ranking, truth: &Ranking, t: usize) -> Result<f64> {
    if !pred.same_scope(truth) {
        return Err(Error::ScopeMismatch);
    }
    if t < 1 || t > truth.len() {
        return Err(Error::InvalidT { t, max: truth.len() });
    }
    let top = pred.top(t);
    Ok(truth.top(t).iter().filter(|x| top.contains(x)).count() as f64 / t as f64)
}

/// One metric value: `(metric, d_or_t, value)`.
pub type MetricValue = (&'static str, Option<usize>, f64);

/// Every metric at every distance and cutoff.
pub fn all_metrics(pred: &Ranking, truth: &Ranking) -> Result<Vec<MetricValue>> {
    let mut out = vec![("kendall_tau", None, kendall_tau(pred, truth)?), ("spearman_rho", None, spearman_rho(pred, truth)?)];
    for d in 1..truth.len() {
        out.push(("pairwise_hit_rate", Some(d), pairwise_hit_rate(pred, truth, d)?));
    }
    for t in 1..=truth.len() {
        out.push(("top_t_hit_rate", Some(t), top_t_hit_rate(pred, truth, t)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub d_or_t: Option<usize>,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval of bootstrap means. Resample `r` uses the stream `(seed, r)`.
pub fn bootstrap_ci(samples: &[f64], n_resamples: usize, level: f64, seed: u64) -> Result<(f64, f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if n_resamples < 100 {
        return Err(Error::InvalidParams(format!("n_resamples = {n_resamples} < 100")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParams(format!("level = {level} outside (0, 1)")));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::rng(seed, &[r as u64]);
            (0..n).map(|_| samples[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((mean, quantile(&means, tail), quantile(&means, 1.0 - tail)))
}

impl MetricReport {
    pub fn from_samples(
        metric: &str,
        d_or_t: Option<usize>,
        samples: &[f64],
        n_resamples: usize,
        seed: u64,
    ) -> Result<Self> {
        let (estimate, ci_low, ci_high) = bootstrap_ci(samples, n_resamples, 0.95, seed)?;
        Ok(Self { metric: metric.into(), d_or_t, estimate, ci_low, ci_high, n_resamples })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_example() {
        let truth = r(&[0, 1, 2, 3]);
        let pred = r(&[1, 0, 3, 2]);
        assert!((kendall_tau(&pred, &truth).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((spearman_rho(&pred, &truth).unwrap() - 0.6).abs() < 1e-15);
        assert!((pairwise_hit_rate(&pred, &truth, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(pairwise_hit_rate(&pred, &truth, 2).unwrap(), 1.0);
        assert_eq!(pairwise_hit_rate(&pred, &truth, 3).unwrap(), 1.0);
        let tops: Vec<f64> = (1..=4).map(|t| top_t_hit_rate(&pred, &truth, t).unwrap()).collect();
        assert_eq!(tops[0], 0.0);
        assert_eq!(tops[1], 1.0);
        assert!((tops[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(tops[3], 1.0);
    }

    #[test]
    fn extremes_and_errors() {
        let truth = r(&[0, 1, 2, 3]);
        assert_eq!(kendall_tau(&truth, &truth).unwrap(), 1.0);
        assert_eq!(kendall_tau(&truth.reversed(), &truth).unwrap(), -1.0);
        assert_eq!(spearman_rho(&truth.reversed(), &truth).unwrap(), -1.0);
        assert_eq!(top_t_hit_rate(&r(&[2, 3, 0, 1]), &truth, 2).unwrap(), 0.0);
        assert!(matches!(pairwise_hit_rate(&truth, &truth, 0), Err(Error::InvalidDistance { .. })));
        assert!(matches!(pairwise_hit_rate(&truth, &truth, 4), Err(Error::InvalidDistance { .. })));
        assert!(matches!(top_t_hit_rate(&truth, &truth, 5), Err(Error::InvalidT { .. })));
        assert!(matches!(kendall_tau(&r(&[0, 1]), &truth), Err(Error::ScopeMismatch)));
    }

    #[test]
    fn bootstrap_examples() {
        let (m, lo, hi) = bootstrap_ci(&[0.5; 100], 1000, 0.95, 1).unwrap();
        assert_eq!((m, lo, hi), (0.5, 0.5, 0.5));
        let (m, lo, hi) = bootstrap_ci(&[0.7], 200, 0.95, 1).unwrap();
        assert_eq!((m, lo, hi), (0.7, 0.7, 0.7));
        let coin: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        let (_, lo, hi) = bootstrap_ci(&coin, 10_000, 0.95, 2).unwrap();
        assert!((lo - 0.40).abs() <= 0.02 && (hi - 0.60).abs() <= 0.02, "{lo} {hi}");
        assert!(matches!(bootstrap_ci(&[], 1000, 0.95, 0), Err(Error::EmptySample)));
        assert_eq!(bootstrap_ci(&coin, 500, 0.95, 9).unwrap(), bootstrap_ci(&coin, 500, 0.95, 9).unwrap());
    }
}
