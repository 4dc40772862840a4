//! Grid-search fit of the two-component mixture to per-voter Kendall-Tau
//! distances of votes and predictions.
//!
//! Each component scores a voter by zero-mean Normal log-densities of the
//! two distances, with the dispersions as scales; the mixture log-likelihood
//! is the log-sum-exp of the weighted components. The exhaustive default grid
//! has ~1.5·10⁹ points, so [`fit`] searches a strided sub-grid exhaustively
//! and then climbs coordinate-wise on the full grid.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mallows::{MixtureParams, VoterDraw};
use crate::model::{Profile, Ranking, Report};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub tau_votes: Vec<f64>,
    pub tau_predictions: Vec<f64>,
}

impl DistanceSummary {
    pub fn new(tau_votes: Vec<f64>, tau_predictions: Vec<f64>) -> Result<Self> {
        if tau_votes.len() != tau_predictions.len() {
            return Err(Error::PayloadShapeMismatch(format!(
                "{} vote distances but {} prediction distances",
                tau_votes.len(),
                tau_predictions.len()
            )));
        }
        if tau_votes.iter().chain(&tau_predictions).any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams("distances must be finite and non-negative".into()));
        }
        Ok(Self { tau_votes, tau_predictions })
    }

    pub fn len(&self) -> usize {
        self.tau_votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_votes.is_empty()
    }

    /// Distances of rank votes and rank predictions from the truth restricted to
    /// each ballot's subset. With `normalize`, each is divided by `k(k−1)/2`.
    pub fn from_profile(profile: &Profile, truth: &Ranking, normalize: bool) -> Result<Self> {
        let (mut tv, mut tp) = (Vec::new(), Vec::new());
        for b in &profile.ballots {
            let subset = profile.plan.subset(b.subset_id).expect("validated ballot");
            let local_truth = truth.restrict(subset)?;
            let dist = |r: Option<&Report>, what: &str| -> Result<f64> {
                match r {
                    Some(Report::Rank(r)) => Ok(r.kendall_distance(&local_truth)? as f64),
                    _ => Err(Error::PayloadShapeMismatch(format!(
                        "ballot of {} has no rank {what}; distances need rank-rank ballots",
                        b.voter_id
                    ))),
                }
            };
            let scale = if normalize { max_distance(subset.len()) } else { 1.0 };
            tv.push(dist(Some(&b.vote), "vote")? / scale);
            tp.push(dist(b.prediction.as_ref(), "prediction")? / scale);
        }
        Self::new(tv, tp)
    }

    /// Distances of full simulated rankings from the truth.
    pub fn from_draws(draws: &[VoterDraw], truth: &Ranking, normalize: bool) -> Result<Self> {
        let scale = if normalize { max_distance(truth.len()) } else { 1.0 };
        let tv = draws.iter().map(|d| Ok(d.observed.kendall_distance(truth)? as f64 / scale)).collect::<Result<_>>()?;
        let tp = draws.iter().map(|d| Ok(d.belief.kendall_distance(truth)? as f64 / scale)).collect::<Result<_>>()?;
        Self::new(tv, tp)
    }
}

fn max_distance(k: usize) -> f64 {
    ((k * k.saturating_sub(1)) / 2).max(1) as f64
}

/// Draws from the fitted objective's own generative model: type ~ Bernoulli(p),
/// then each distance is `|N(0, φ)|` with the type's dispersion.
pub fn sample_summary(params: &MixtureParams, n: usize, seed: u64) -> Result<DistanceSummary> {
    params.validate()?;
    let mut rng = seed::rng(seed, &[seed::role::TYPE]);
    let (mut tv, mut tp) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (sv, sp) = if rng.random::<f64>() < params.p {
            (params.phi_e_votes, params.phi_e_predictions)
        } else {
            (params.phi_ne_votes, params.phi_ne_predictions)
        };
        tv.push(Normal::new(0.0, sv).expect("positive scale").sample(&mut rng).abs());
        tp.push(Normal::new(0.0, sp).expect("positive scale").sample(&mut rng).abs());
    }
    DistanceSummary::new(tv, tp)
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn normal_ln(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

fn log_mix(p: f64, le: f64, lne: f64) -> f64 {
    // log(p·e^le + (1−p)·e^lne), with p ∈ {0, 1} handled exactly
    if p <= 0.0 {
        return lne;
    }
    if p >= 1.0 {
        return le;
    }
    let (a, b) = (p.ln() + le, (1.0 - p).ln() + lne);
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

pub fn mixture_loglik(summary: &DistanceSummary, params: &MixtureParams) -> Result<f64> {
    params.validate()?;
    Ok(summary
        .tau_votes
        .iter()
        .zip(&summary.tau_predictions)
        .map(|(&v, &q)| {
            let le = normal_ln(v, 0.0, params.phi_e_votes) + normal_ln(q, 0.0, params.phi_e_predictions);
            let lne = normal_ln(v, 0.0, params.phi_ne_votes) + normal_ln(q, 0.0, params.phi_ne_predictions);
            log_mix(params.p, le, lne)
        })
        .sum())
}

/// Log-density of the fitting priors (up to the Beta normalizer, included).
pub fn log_prior(params: &MixtureParams) -> f64 {
    let beta = 2.5f64.ln() + 1.5 * (1.0 - params.p).ln();
    beta + normal_ln(params.phi_e_votes, 0.15, 0.075)
        + normal_ln(params.phi_e_predictions, 0.7, 0.3)
        + normal_ln(params.phi_ne_votes, 0.7, 0.3)
        + normal_ln(params.phi_ne_predictions, 0.7, 0.3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub p: Vec<f64>,
    /// Shared axis of the four dispersions.
    pub phi: Vec<f64>,
    /// Stride of the exhaustive first pass.
    pub coarse_stride: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            p: (1..=49).map(|i| i as f64 * 0.02).collect(),
            phi: (1..=75).map(|i| i as f64 * 0.02).collect(),
            coarse_stride: 5,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.phi.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.p.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidParams("grid p values must lie in (0, 1)".into()));
        }
        if let Some(&bad) = self.phi.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidDispersion(bad));
        }
        if self.coarse_stride == 0 {
            return Err(Error::InvalidParams("coarse_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub param: String,
    pub values: Vec<f64>,
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Grid point with the best objective; `phi_e_votes <= phi_ne_votes`.
    pub params: MixtureParams,
    pub log_likelihood: f64,
    /// Log-likelihood plus log-prior when priors were used, else equal to it.
    pub objective: f64,
    pub use_priors: bool,
    pub grid_resolution: f64,
    pub evaluations: usize,
    /// Objective along each parameter axis with the others held at the optimum.
    pub profile_curves: Vec<ProfileCurve>,
}

/// Grid indices `[p, φE-v, φE-p, φNE-v, φNE-p]`.
type Point = [usize; 5];

/// Pre-tabulated per-voter Normal log-densities for every φ on the axis.
struct Tables<'a> {
    grid: &'a GridSpec,
    n: usize,
    votes: Vec<f64>,
    preds: Vec<f64>,
    use_priors: bool,
}

impl<'a> Tables<'a> {
    fn new(summary: &DistanceSummary, grid: &'a GridSpec, use_priors: bool) -> Self {
        let n = summary.len();
        let tab = |xs: &[f64]| grid.phi.iter().flat_map(|&s| xs.iter().map(move |&x| normal_ln(x, 0.0, s))).collect();
        Self { grid, n, votes: tab(&summary.tau_votes), preds: tab(&summary.tau_predictions), use_priors }
    }

    fn params(&self, pt: &Point) -> MixtureParams {
        let phi = &self.grid.phi;
        MixtureParams {
            p: self.grid.p[pt[0]],
            phi_e_votes: phi[pt[1]],
            phi_e_predictions: phi[pt[2]],
            phi_ne_votes: phi[pt[3]],
            phi_ne_predictions: phi[pt[4]],
        }
    }

    fn loglik(&self, pt: &Point) -> f64 {
        let n = self.n;
        let p = self.grid.p[pt[0]];
        let (ev, ep, nv, np) = (&self.votes[pt[1] * n..], &self.preds[pt[2] * n..], &self.votes[pt[3] * n..], &self.preds[pt[4] * n..]);
        (0..n).map(|i| log_mix(p, ev[i] + ep[i], nv[i] + np[i])).sum()
    }

    fn objective(&self, pt: &Point) -> f64 {
        let ll = self.loglik(pt);
        if self.use_priors {
            ll + log_prior(&self.params(pt))
        } else {
            ll
        }
    }
}

fn better(a: (f64, Point), b: (f64, Point)) -> (f64, Point) {
    // larger objective wins; exact ties go to the lexicographically smaller point
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Maximizes the log-likelihood (plus log-priors with `use_priors`): an
/// exhaustive pass over every `coarse_stride`-th grid value, then coordinate
/// ascent over the full grid until no single-axis move improves.
pub fn fit(summary: &DistanceSummary, grid: &GridSpec, use_priors: bool) -> Result<FitResult> {
    grid.validate()?;
    if summary.is_empty() {
        return Err(Error::EmptySample);
    }
    let t = Tables::new(summary, grid, use_priors);
    let stride = grid.coarse_stride;
    let coarse = |len: usize| -> Vec<usize> {
        let mut v: Vec<usize> = (stride / 2..len).step_by(stride).collect();
        if v.is_empty() {
            v.push(len / 2);
        }
        v
    };
    let (cp, cf) = (coarse(grid.p.len()), coarse(grid.phi.len()));
    let mut points = Vec::new();
    for &p in &cp {
        for &ev in &cf {
            for &nv in cf.iter().filter(|&&nv| nv >= ev) {
                points.push((p, ev, nv));
            }
        }
    }
    let mut evaluations = points.len() * cf.len() * cf.len();
    let start = points
        .par_iter()
        .map(|&(p, ev, nv)| {
            let mut best = (f64::NEG_INFINITY, [p, ev, 0, nv, 0]);
            for &ep in &cf {
                for &np in &cf {
                    let pt = [p, ev, ep, nv, np];
                    best = better(best, (t.objective(&pt), pt));
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, [usize::MAX; 5]), better);

    let mut best = start;
    loop {
        let mut improved = false;
        for axis in 0..5 {
            let len = if axis == 0 { grid.p.len() } else { grid.phi.len() };
            for v in 0..len {
                let mut pt = best.1;
                pt[axis] = v;
                if grid.phi[pt[1]] > grid.phi[pt[3]] {
                    continue;
                }
                evaluations += 1;
                let cand = (t.objective(&pt), pt);
                if cand.0 > best.0 {
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    let names = ["p", "phi_e_votes", "phi_e_predictions", "phi_ne_votes", "phi_ne_predictions"];
    let profile_curves = names
        .iter()
        .enumerate()
        .map(|(axis, name)| {
            let axis_values = if axis == 0 { &grid.p } else { &grid.phi };
            let objective = (0..axis_values.len())
                .map(|v| {
                    let mut pt = best.1;
                    pt[axis] = v;
                    t.objective(&pt)
                })
                .collect();
            ProfileCurve { param: name.to_string(), values: axis_values.clone(), objective }
        })
        .collect();

    let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 0.0 };
    Ok(FitResult {
        params: t.params(&best.1),
        log_likelihood: t.loglik(&best.1),
        objective: best.0,
        use_priors,
        grid_resolution: step(&grid.phi).max(step(&grid.p)),
        evaluations,
        profile_curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(p: f64, ev: f64, ep: f64, nv: f64, np: f64) -> MixtureParams {
        MixtureParams::new(p, ev, ep, nv, np).unwrap()
    }

    #[test]
    fn pure_components() {
        let s = DistanceSummary::new(vec![0.0, 1.0, 3.0], vec![2.0, 0.5, 1.0]).unwrap();
        let e = mp(1.0, 0.3, 0.4, 0.9, 0.8);
        let ne = mp(0.0, 0.3, 0.4, 0.9, 0.8);
        let want_e: f64 = s.tau_votes.iter().zip(&s.tau_predictions).map(|(&v, &q)| normal_ln(v, 0.0, 0.3) + normal_ln(q, 0.0, 0.4)).sum();
        let want_ne: f64 = s.tau_votes.iter().zip(&s.tau_predictions).map(|(&v, &q)| normal_ln(v, 0.0, 0.9) + normal_ln(q, 0.0, 0.8)).sum();
        assert!((mixture_loglik(&s, &e).unwrap() - want_e).abs() < 1e-12);
        assert!((mixture_loglik(&s, &ne).unwrap() - want_ne).abs() < 1e-12);
    }

    #[test]
    fn two_voter_hand_value() {
        // voter 1: (0, 1), voter 2: (2, 0); p = 0.25, φ = (0.5, 1, 1, 1)
        let s = DistanceSummary::new(vec![0.0, 2.0], vec![1.0, 0.0]).unwrap();
        let params = mp(0.25, 0.5, 1.0, 1.0, 1.0);
        let c = (2.0 * std::f64::consts::PI).sqrt();
        let n = |x: f64, sd: f64| (-(x * x) / (2.0 * sd * sd)).exp() / (sd * c);
        let v1 = 0.25 * n(0.0, 0.5) * n(1.0, 1.0) + 0.75 * n(0.0, 1.0) * n(1.0, 1.0);
        let v2 = 0.25 * n(2.0, 0.5) * n(0.0, 1.0) + 0.75 * n(2.0, 1.0) * n(0.0, 1.0);
        assert!((mixture_loglik(&s, &params).unwrap() - (v1.ln() + v2.ln())).abs() < 1e-12);
    }

    #[test]
    fn label_swap_symmetry() {
        let s = sample_summary(&mp(0.3, 0.2, 0.5, 0.9, 1.1f64.min(1.0)), 50, 3).unwrap();
        let a = mp(0.3, 0.2, 0.5, 0.9, 0.95);
        let b = mp(0.7, 0.9, 0.95, 0.2, 0.5);
        assert!((mixture_loglik(&s, &a).unwrap() - mixture_loglik(&s, &b).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn single_voter_fit_is_defined() {
        let s = DistanceSummary::new(vec![1.0], vec![2.0]).unwrap();
        let grid = GridSpec { p: vec![0.2, 0.5], phi: vec![0.5, 1.0, 1.5], coarse_stride: 1 };
        let r = fit(&s, &grid, false).unwrap();
        assert!(r.params.phi_e_votes <= r.params.phi_ne_votes);
        assert!(fit(&s, &GridSpec { p: vec![], ..grid.clone() }, false).is_err());
    }

    #[test]
    fn coarse_plus_ascent_matches_exhaustive_on_small_grid() {
        let s = sample_summary(&mp(0.3, 0.2, 0.6, 0.8, 0.9), 300, 8).unwrap();
        let grid = GridSpec {
            p: vec![0.1, 0.3, 0.5, 0.7],
            phi: vec![0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
            coarse_stride: 2,
        };
        let r = fit(&s, &grid, false).unwrap();
        let mut best = f64::NEG_INFINITY;
        for &p in &grid.p {
            for &a in &grid.phi {
                for &b in &grid.phi {
                    for &c in grid.phi.iter().filter(|&&c| c >= a) {
                        for &d in &grid.phi {
                            best = best.max(mixture_loglik(&s, &mp(p, a, b, c, d)).unwrap());
                        }
                    }
                }
            }
        }
        assert!((r.log_likelihood - best).abs() < 1e-9, "{} vs {best}", r.log_likelihood);
    }
}
