//! Exact small-instance machinery: Mallows normalizers, partial likelihoods,
//! posteriors over partial ground truths, the full SP rule over partial
//! rankings, and numerical checks of the recovery guarantees.
//!
//! The subset under study is `T = {0, …, k−1}` of `m` alternatives; by
//! symmetry of the uniform prior any other `T` is a relabeling. Partial
//! rankings of `T` are indexed by their lexicographic rank.

use itertools::Itertools;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mallows::{check_phi, sample_mallows};
use crate::model::Ranking;
use crate::seed::{self, role};

pub const MAX_M: usize = 7;
pub const MAX_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub p: f64,
    pub phi_e: f64,
    pub phi_ne: f64,
    pub k: usize,
    pub m: usize,
    pub delta: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParams(s));
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p = {} outside (0, 1)", self.p));
        }
        check_phi(self.phi_e)?;
        check_phi(self.phi_ne)?;
        if self.phi_e > self.phi_ne {
            return bad(format!("phi_E = {} exceeds phi_NE = {}", self.phi_e, self.phi_ne));
        }
        if self.k < 2 || self.k > self.m {
            return bad(format!("need 2 <= k <= m, got k = {}, m = {}", self.k, self.m));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        Ok(())
    }

    fn guard(&self) -> Result<()> {
        self.validate()?;
        if self.m > MAX_M || self.k > MAX_K {
            return Err(Error::InstanceTooLarge(format!(
                "m = {}, k = {} (limits m <= {MAX_M}, k <= {MAX_K})",
                self.m, self.k
            )));
        }
        Ok(())
    }
}

/// `ln Z(φ, m)`, with `Z(φ, m) = ∏_{i=1..m} (1 + φ + … + φ^{i−1})` and `Z(φ, 0) = 1`.
pub fn ln_mallows_normalizer(phi: f64, m: usize) -> Result<f64> {
    check_phi(phi)?;
    let mut ln = 0.0;
    let mut geometric = 0.0;
    let mut power = 1.0;
    for _ in 0..m {
        geometric += power;
        power *= phi;
        ln += f64::ln(geometric);
    }
    Ok(ln)
}

pub fn mallows_normalizer(phi: f64, m: usize) -> Result<f64> {
    ln_mallows_normalizer(phi, m).map(f64::exp)
}

/// Lexicographic rank of a permutation of `0..n`.
pub fn perm_index(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut idx = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        idx = idx * (n - i) + smaller;
    }
    idx
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

fn enumeration_guard(m: usize) -> Result<()> {
    if m > MAX_M {
        return Err(Error::InstanceTooLarge(format!("m = {m} exceeds {MAX_M}")));
    }
    Ok(())
}

/// Probability that a Mallows(π*, φ) draw restricts to `sigma`, by summing
/// over every full ranking.
pub fn partial_likelihood(sigma: &Ranking, pi_star: &Ranking, phi: f64) -> Result<f64> {
    check_phi(phi)?;
    let m = pi_star.len();
    enumeration_guard(m)?;
    if sigma.order().iter().any(|&x| !pi_star.contains(x)) {
        return Err(Error::ScopeMismatch);
    }
    let z = mallows_normalizer(phi, m)?;
    let mut total = 0.0;
    for order in pi_star.order().iter().copied().permutations(m) {
        let pi = Ranking::new(order)?;
        if pi.restrict(sigma.order())? == *sigma {
            total += phi.powi(pi.kendall_distance(pi_star)? as i32);
        }
    }
    Ok(total / z)
}

/// Exact tables for one [`TheoryParams`] instance.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    tp: TheoryParams,
    partials: Vec<Ranking>,
    /// Index of the restriction to `T` of each full ranking (lexicographic order).
    restriction: Vec<usize>,
    /// `sensor[π · k! + σ] = Pr_s(σ | π)` under the mixture.
    sensor: Vec<f64>,
}

impl ExactOracle {
    pub fn new(tp: TheoryParams) -> Result<Self> {
        tp.guard()?;
        let (m, k) = (tp.m, tp.k);
        let kf = factorial(k);
        let partials = (0..k).permutations(k).map(|o| Ranking::new(o).expect("permutation")).collect::<Vec<_>>();

        // Marginal order distribution of every k-subset of positions for a
        // mixture draw around the identity; a center π maps T onto the
        // positions it assigns them.
        let subsets: Vec<Vec<usize>> = (0..m).combinations(k).collect();
        let subset_of: HashMap<Vec<usize>, usize> = subsets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let (ze, zn) = (mallows_normalizer(tp.phi_e, m)?, mallows_normalizer(tp.phi_ne, m)?);
        let mut marginal = vec![0.0; subsets.len() * kf];
        let mut pos = vec![0usize; m];
        for nu in (0..m).permutations(m) {
            let d = Ranking::new(nu.clone())?.kendall_distance(&Ranking::identity(m))? as i32;
            let w = tp.p * tp.phi_e.powi(d) / ze + (1.0 - tp.p) * tp.phi_ne.powi(d) / zn;
            for (i, &x) in nu.iter().enumerate() {
                pos[x] = i;
            }
            for (si, s) in subsets.iter().enumerate() {
                let mut local: Vec<usize> = (0..k).collect();
                local.sort_by_key(|&i| pos[s[i]]);
                marginal[si * kf + perm_index(&local)] += w;
            }
        }

        let full: Vec<Vec<usize>> = (0..m).permutations(m).collect();
        let mut restriction = Vec::with_capacity(full.len());
        let mut sensor = vec![0.0; full.len() * kf];
        for (pi_idx, pi) in full.iter().enumerate() {
            for (i, &x) in pi.iter().enumerate() {
                pos[x] = i;
            }
            let mut in_t: Vec<usize> = pi.iter().copied().filter(|&x| x < k).collect();
            restriction.push(perm_index(&in_t));
            in_t.sort_unstable();
            let mut places: Vec<usize> = in_t.iter().map(|&x| pos[x]).collect();
            places.sort_unstable();
            let si = subset_of[&places];
            for (sigma_idx, sigma) in partials.iter().enumerate() {
                // position-subset-local order of σ's items
                let local: Vec<usize> =
                    sigma.order().iter().map(|&x| places.binary_search(&pos[x]).expect("place")).collect();
                sensor[pi_idx * kf + sigma_idx] = marginal[si * kf + perm_index(&local)];
            }
        }
        Ok(Self { tp, partials, restriction, sensor })
    }

    pub fn params(&self) -> &TheoryParams {
        &self.tp
    }

    /// The `k!` partial rankings of `T`, in index order.
    pub fn partial_rankings(&self) -> &[Ranking] {
        &self.partials
    }

    pub fn index_of(&self, sigma: &Ranking) -> Result<usize> {
        if sigma.len() != self.tp.k || sigma.order().iter().any(|&x| x >= self.tp.k) {
            return Err(Error::ScopeMismatch);
        }
        Ok(perm_index(sigma.order()))
    }

    fn kf(&self) -> usize {
        self.partials.len()
    }

    /// `Pr_s(σ | π)` for the full ranking with lexicographic index `pi`.
    pub fn sensor(&self, pi: usize, sigma: usize) -> f64 {
        self.sensor[pi * self.kf() + sigma]
    }

    /// `Pr_s(σ' | σ̃)`: sensor probability averaged over the full rankings extending `σ̃`.
    pub fn sensor_partial(&self, sigma_prime: usize, sigma_tilde: usize) -> f64 {
        let (mut s, mut n) = (0.0, 0usize);
        for (pi, &r) in self.restriction.iter().enumerate() {
            if r == sigma_tilde {
                s += self.sensor(pi, sigma_prime);
                n += 1;
            }
        }
        s / n as f64
    }

    /// `Pr_g(σ̃ | σ_i)` for every partial ground truth `σ̃`, under a uniform prior.
    pub fn posterior_partial(&self, sigma_i: usize) -> Vec<f64> {
        let mut post = vec![0.0; self.kf()];
        let mut total = 0.0;
        for (pi, &r) in self.restriction.iter().enumerate() {
            let w = self.sensor(pi, sigma_i);
            post[r] += w;
            total += w;
        }
        post.iter_mut().for_each(|x| *x /= total);
        post
    }

    /// `Pr_o(· | σ_i)`: belief of a voter who observed `σ_i` about another voter's report.
    pub fn pr_o_row(&self, sigma_i: usize) -> Vec<f64> {
        let post = self.posterior_partial(sigma_i);
        let kf = self.kf();
        let mut cond = vec![0.0; kf * kf];
        let mut counts = vec![0usize; kf];
        for (pi, &r) in self.restriction.iter().enumerate() {
            counts[r] += 1;
            for s in 0..kf {
                cond[r * kf + s] += self.sensor(pi, s);
            }
        }
        (0..kf)
            .map(|s| (0..kf).map(|t| post[t] * cond[t * kf + s] / counts[t] as f64).sum())
            .collect()
    }

    pub fn pr_o(&self, sigma_prime: usize, sigma_i: usize) -> f64 {
        self.pr_o_row(sigma_i)[sigma_prime]
    }

    /// Population vote shares `f(σ) = Pr_s(σ | σ*)` with `σ*` the identity on `T`.
    pub fn population_f(&self) -> Vec<f64> {
        (0..self.kf()).map(|s| self.sensor_partial(s, 0)).collect()
    }

    /// `g[σ][σ'] = Pr_o(σ' | σ)`.
    pub fn population_g(&self) -> Vec<Vec<f64>> {
        (0..self.kf()).map(|s| self.pr_o_row(s)).collect()
    }

    /// Prediction-normalized votes of every partial ranking at population level.
    pub fn population_vbar(&self) -> Result<Vec<f64>> {
        prediction_normalized_votes(&self.population_f(), &self.population_g())
    }
}

/// `V̄(σ) = f(σ) · Σ_{σ'} g(σ'|σ) / g(σ|σ')`, with `g[σ][σ'] = g(σ'|σ)`.
pub fn prediction_normalized_votes(f: &[f64], g: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = f.len();
    if g.len() != n || g.iter().any(|row| row.len() != n) {
        return Err(Error::PayloadShapeMismatch(format!("f has {n} cells but g is not {n}x{n}")));
    }
    if g.iter().flatten().any(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateConditional("g has a non-positive cell".into()));
    }
    Ok((0..n).map(|s| f[s] * (0..n).map(|t| g[s][t] / g[t][s]).sum::<f64>()).collect())
}

/// Full SP rule: index of the partial ranking with the largest
/// prediction-normalized vote, ties broken by `tie_seed`.
pub fn sp_full(f: &[f64], g: &[Vec<f64>], tie_seed: u64) -> Result<usize> {
    let vbar = prediction_normalized_votes(f, g)?;
    let best = vbar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..vbar.len()).filter(|&i| (best - vbar[i]).abs() <= 1e-12 * best.abs()).collect();
    if tied.len() == 1 {
        return Ok(tied[0]);
    }
    let mut rng = seed::rng(tie_seed, &[role::TIES]);
    Ok(tied[rng.random_range(0..tied.len())])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub pass: bool,
    /// `LHS / RHS`; ≥ 1 exactly when the assumption holds.
    pub ratio: f64,
}

/// `(p/(1−p))² ≥ 2 · (Z(φ_NE,m)/Z(φ_E,m))² · Z(φ_NE,k) · φ_E^{k(k−1)/2}`, in log space.
pub fn check_assumption(tp: &TheoryParams) -> Result<AssumptionCheck> {
    tp.validate()?;
    let (m, k) = (tp.m, tp.k);
    let lhs = 2.0 * (tp.p / (1.0 - tp.p)).ln();
    let rhs = 2f64.ln()
        + 2.0 * (ln_mallows_normalizer(tp.phi_ne, m)? - ln_mallows_normalizer(tp.phi_e, m)?)
        + ln_mallows_normalizer(tp.phi_ne, k)?
        + (k * (k - 1) / 2) as f64 * tp.phi_e.ln();
    Ok(AssumptionCheck { pass: lhs >= rhs, ratio: (lhs - rhs).exp() })
}

/// Whether the true partial ranking's population score is at least twice
/// that of every other partial ranking.
pub fn check_separation(tp: &TheoryParams) -> Result<bool> {
    let vbar = ExactOracle::new(*tp)?.population_vbar()?;
    let rival = vbar[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(vbar[0] >= 2.0 * rival)
}

/// `μ = Σ_type w · Z(φ, m−k)/Z(φ, m) · φ^{k(k−1)/2}` over the two components.
pub fn mu(tp: &TheoryParams) -> Result<f64> {
    tp.validate()?;
    let (m, k) = (tp.m, tp.k);
    let term = |phi: f64| -> Result<f64> {
        Ok((ln_mallows_normalizer(phi, m - k)? - ln_mallows_normalizer(phi, m)? + (k * (k - 1) / 2) as f64 * phi.ln())
            .exp())
    };
    Ok(tp.p * term(tp.phi_e)? + (1.0 - tp.p) * term(tp.phi_ne)?)
}

/// Sufficient number of voters: `⌈k! · sqrt(10k · ln(2k/δ) / μ)⌉`.
pub fn sample_complexity(tp: &TheoryParams) -> Result<u64> {
    let mu = mu(tp)?;
    let k = tp.k as f64;
    let bound = factorial(tp.k) as f64 * (10.0 * k * (2.0 * k / tp.delta).ln() / mu).sqrt();
    Ok(bound.ceil() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryStats {
    pub trials: usize,
    pub n: usize,
    /// Fraction of trials where SP returned the true partial ranking.
    pub sp_rate: f64,
    /// Same for the most frequent vote (plurality over partial rankings).
    pub majority_rate: f64,
}

/// Monte-Carlo recovery rate. Each trial draws a uniform ground truth and `n`
/// voters from the mixture; a voter observing `σ_i` votes `σ_i` and reports one
/// draw from `Pr_o(· | σ_i)`. SP runs on the empirical `f̂` and the
/// Laplace-smoothed `ĝ`.
pub fn recovery_experiment(tp: &TheoryParams, n: usize, trials: usize, seed: u64) -> Result<RecoveryStats> {
    let oracle = ExactOracle::new(*tp)?;
    if n == 0 || trials == 0 {
        return Err(Error::InvalidParams("n and trials must be positive".into()));
    }
    let (m, k) = (tp.m, tp.k);
    let kf = oracle.kf();
    let pr_o: Vec<Vec<f64>> = oracle.population_g();
    let t_ids: Vec<usize> = (0..k).collect();

    let hits = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<(bool, bool)> {
            let mut rng = seed::rng(seed, &[role::TRUTH, trial as u64]);
            let mut order: Vec<usize> = (0..m).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            let truth = Ranking::new(order)?;
            let sigma_star = perm_index(truth.restrict(&t_ids)?.order());

            let mut votes = vec![0usize; kf];
            let mut reports = vec![0usize; kf * kf];
            for _ in 0..n {
                let phi = if rng.random::<f64>() < tp.p { tp.phi_e } else { tp.phi_ne };
                let sigma = perm_index(sample_mallows(&truth, phi, &mut rng)?.restrict(&t_ids)?.order());
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                let mut report = kf - 1;
                for (s, &w) in pr_o[sigma].iter().enumerate() {
                    acc += w;
                    if u < acc {
                        report = s;
                        break;
                    }
                }
                votes[sigma] += 1;
                reports[sigma * kf + report] += 1;
            }
            let f: Vec<f64> = votes.iter().map(|&c| c as f64 / n as f64).collect();
            let g: Vec<Vec<f64>> = (0..kf)
                .map(|s| (0..kf).map(|t| (reports[s * kf + t] as f64 + 1.0) / (votes[s] + kf) as f64).collect())
                .collect();
            let tie = seed::derive(seed, &[role::TIES, trial as u64]);
            let sp = sp_full(&f, &g, tie)?;
            let top = votes.iter().copied().max().unwrap_or(0);
            let leaders: Vec<usize> = (0..kf).filter(|&s| votes[s] == top).collect();
            let maj = leaders[seed::rng(tie, &[1]).random_range(0..leaders.len())];
            Ok((sp == sigma_star, maj == sigma_star))
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = |sel: fn(&(bool, bool)) -> bool| hits.iter().filter(|h| sel(h)).count() as f64 / trials as f64;
    Ok(RecoveryStats { trials, n, sp_rate: rate(|h| h.0), majority_rate: rate(|h| h.1) })
}
