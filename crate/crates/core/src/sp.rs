//! Surprisingly Popular aggregation of partial votes and predictions.
//!
//! For each pair `(a, b)` every usable ballot is reduced to a binary signal
//! `v` (1 ⇔ the voter put `a` above `b`) and a number `p` encoding what the
//! voter expects the others to say about the pair. The prediction-normalized
//! vote then compares
//!
//! ```text
//! V̄(a≻b) = f(a≻b) · Σ_i g(v_i | 1) / g(1 | v_i)
//! V̄(b≻a) = f(b≻a) · Σ_i g(v_i | 0) / g(0 | v_i)
//! ```
//!
//! and the larger side wins. Partial-SP decides every pair inside each subset
//! and aggregates the resulting partial rankings with a voting rule;
//! Aggregated-SP scores votes first and uses those scores as vote mass.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AltId, Ballot, PredictionKind, Profile, Ranking, Report};
use crate::rules::{self, PairwiseTally, Rule};
use crate::seed;

/// Seed tag for the final cross-subset aggregation step.
const FINAL_TAG: u64 = 0xF1A1;
/// Subset tag used for Aggregated-SP's global pairs.
const GLOBAL_TAG: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpConfig {
    pub alpha: f64,
    pub beta: f64,
    pub tie_seed: u64,
    /// Pseudo-count pulling each conditional `g(1|v)` towards 1/2.
    pub smoothing: f64,
}

impl Default for SpConfig {
    fn default() -> Self {
        Self { alpha: 0.55, beta: 0.1, tie_seed: 0, smoothing: 1.0 }
    }
}

impl SpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha = {} must lie in (0.5, 1)", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::InvalidParams(format!("beta = {} must lie in (0, 0.5)", self.beta)));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(Error::InvalidParams(format!("smoothing = {} must be >= 0", self.smoothing)));
        }
        Ok(())
    }
}

/// Binary signal and implied prediction of one voter for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseReport {
    /// Index of the ballot in the slice given to [`extract_reports`].
    pub voter: usize,
    pub pair: (AltId, AltId),
    pub v: bool,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Extraction {
    pub reports: Vec<PairwiseReport>,
    /// Ballots whose vote says nothing about the pair.
    pub dropped: usize,
}

fn vote_signal(vote: &Report, a: AltId, b: AltId) -> Option<bool> {
    match vote {
        Report::Rank(r) => r.prefers(a, b),
        _ => match (vote.selects(a), vote.selects(b)) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            _ => None,
        },
    }
}

fn prediction_signal(pred: Option<&Report>, v: bool, a: AltId, b: AltId, cfg: &SpConfig) -> f64 {
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    match pred {
        None => 0.5,
        Some(Report::Rank(r)) => match (r.prefers(a, b), v) {
            (Some(true), true) => alpha,
            (Some(false), true) => 1.0 - alpha,
            (Some(true), false) => 1.0 - beta,
            _ => beta,
        },
        Some(p) => {
            if p.selects(a) && v {
                alpha
            } else if p.selects(b) && v {
                1.0 - alpha
            } else if p.selects(a) && !v {
                1.0 - beta
            } else {
                beta
            }
        }
    }
}

/// Reduces ballots to pairwise reports for `(a, b)`. Top/approval votes that
/// select neither or both alternatives are dropped.
pub fn extract_reports(ballots: &[&Ballot], a: AltId, b: AltId, cfg: &SpConfig) -> Extraction {
    let mut out = Extraction::default();
    for (i, ballot) in ballots.iter().enumerate() {
        let Some(v) = vote_signal(&ballot.vote, a, b) else {
            out.dropped += 1;
            continue;
        };
        let pred = match ballot.format.prediction {
            PredictionKind::None => None,
            _ => ballot.prediction.as_ref(),
        };
        out.reports.push(PairwiseReport { voter: i, pair: (a, b), v, p: prediction_signal(pred, v, a, b, cfg) });
    }
    out
}

/// Outcome of the pairwise SP comparison between `a` and `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairVerdict {
    pub a: AltId,
    pub b: AltId,
    pub n_ab: usize,
    pub n_ba: usize,
    /// Vote mass of each side: frequencies, or supplied scores.
    pub f_ab: f64,
    pub f_ba: f64,
    /// `g(x | y)`: expected share of others reporting `x` among voters reporting `y`.
    pub g11: f64,
    pub g01: f64,
    pub g10: f64,
    pub g00: f64,
    pub vbar_ab: f64,
    pub vbar_ba: f64,
    pub winner: AltId,
    pub loser: AltId,
    /// The two scores were equal and the seed decided.
    pub tied: bool,
}

fn conditional(sum_p: f64, n: usize, smoothing: f64, cell: &str) -> Result<f64> {
    let denom = n as f64 + smoothing;
    if denom <= 0.0 {
        return Err(Error::DegenerateConditional(cell.into()));
    }
    Ok((sum_p + 0.5 * smoothing) / denom)
}

fn ratio(num: f64, den: f64, cell: &str) -> Result<f64> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::DegenerateConditional(cell.into()))
    }
}

/// Pairwise prediction-normalized vote. `vote_mass` replaces the vote
/// frequencies (Aggregated-SP); `tie_key` seeds the coin for exact ties.
pub fn pairwise_sp(
    reports: &[PairwiseReport],
    pair: (AltId, AltId),
    vote_mass: Option<(f64, f64)>,
    cfg: &SpConfig,
    tie_key: u64,
) -> Result<PairVerdict> {
    let (a, b) = pair;
    if reports.is_empty() {
        return Err(Error::NoReports(a, b));
    }
    let (mut n1, mut n0, mut s1, mut s0) = (0usize, 0usize, 0.0, 0.0);
    for r in reports {
        if r.v {
            n1 += 1;
            s1 += r.p;
        } else {
            n0 += 1;
            s0 += r.p;
        }
    }
    let mut g11 = conditional(s1, n1, cfg.smoothing, "g(1|1)")?;
    let mut g10 = conditional(s0, n0, cfg.smoothing, "g(1|0)")?;
    // A signal nobody sent carries no prediction evidence; mirror the observed
    // class so that unanimity reduces to comparing vote mass.
    if n1 == 0 {
        g11 = 1.0 - g10;
    } else if n0 == 0 {
        g10 = 1.0 - g11;
    }
    let (g01, g00) = (1.0 - g11, 1.0 - g10);

    let total = (n1 + n0) as f64;
    let (f_ab, f_ba) = vote_mass.unwrap_or((n1 as f64 / total, n0 as f64 / total));

    // Σ_i g(v_i|1)/g(1|v_i) and Σ_i g(v_i|0)/g(0|v_i), grouped by signal.
    let sum_ab = n1 as f64 * ratio(g11, g11, "g(1|1)")? + n0 as f64 * ratio(g01, g10, "g(1|0)")?;
    let sum_ba = n1 as f64 * ratio(g10, g01, "g(0|1)")? + n0 as f64 * ratio(g00, g00, "g(0|0)")?;
    let vbar_ab = f_ab * sum_ab;
    let vbar_ba = f_ba * sum_ba;

    let scale = vbar_ab.abs().max(vbar_ba.abs());
    let tied = (vbar_ab - vbar_ba).abs() <= 1e-12 * scale;
    let a_wins = if tied { seed::rng(tie_key, &[seed::role::TIES]).random_bool(0.5) } else { vbar_ab > vbar_ba };
    let (winner, loser) = if a_wins { (a, b) } else { (b, a) };
    Ok(PairVerdict {
        a,
        b,
        n_ab: n1,
        n_ba: n0,
        f_ab,
        f_ba,
        g11,
        g01,
        g10,
        g00,
        vbar_ab,
        vbar_ba,
        winner,
        loser,
        tied,
    })
}

/// Per-pair bookkeeping emitted by both aggregators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDiagnostic {
    /// `None` for Aggregated-SP's global pairs.
    pub subset_id: Option<usize>,
    pub a: AltId,
    pub b: AltId,
    pub n_used: usize,
    pub n_dropped: usize,
    pub verdict: Option<PairVerdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpOutcome {
    pub ranking: Ranking,
    /// Partial-SP: one ranking per subset. Empty for Aggregated-SP.
    pub partial_rankings: Vec<Ranking>,
    pub diagnostics: Vec<PairDiagnostic>,
}

fn pair_key(cfg: &SpConfig, subset_tag: u64, a: AltId, b: AltId) -> u64 {
    seed::derive(cfg.tie_seed, &[subset_tag, a as u64, b as u64])
}

/// Sorted `(a, b)` pairs with `a < b` inside one subset.
fn subset_pairs(subset: &[AltId]) -> Vec<(AltId, AltId)> {
    let mut ids = subset.to_vec();
    ids.sort_unstable();
    let mut out = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            out.push((ids[i], ids[j]));
        }
    }
    out
}

fn subset_groups(profile: &Profile) -> Result<Vec<Vec<&Ballot>>> {
    let groups = profile.by_subset();
    if let Some(j) = groups.iter().position(Vec::is_empty) {
        return Err(Error::EmptySubset(j));
    }
    Ok(groups)
}

/// Decides every pair inside one subset and turns the verdicts into a ranking
/// of the subset via Copeland with seeded ties.
fn solve_subset(
    subset_id: usize,
    subset: &[AltId],
    ballots: &[&Ballot],
    cfg: &SpConfig,
) -> Result<(Ranking, Vec<PairDiagnostic>)> {
    let local = |id: AltId| subset.iter().position(|&x| x == id).expect("id in subset");
    let mut tournament = PairwiseTally::new(subset.len());
    let mut diags = Vec::new();
    for (a, b) in subset_pairs(subset) {
        let ex = extract_reports(ballots, a, b, cfg);
        let verdict = if ex.reports.is_empty() {
            None
        } else {
            let v = pairwise_sp(&ex.reports, (a, b), None, cfg, pair_key(cfg, subset_id as u64, a, b))?;
            tournament.add(local(v.winner), local(v.loser), 1.0);
            Some(v)
        };
        diags.push(PairDiagnostic {
            subset_id: Some(subset_id),
            a,
            b,
            n_used: ex.reports.len(),
            n_dropped: ex.dropped,
            verdict,
        });
    }
    let (_, local_rank) = rules::copeland(&tournament, seed::derive(cfg.tie_seed, &[subset_id as u64, seed::role::TIES]));
    let order = local_rank.order().iter().map(|&i| subset[i]).collect();
    Ok((Ranking::new(order)?, diags))
}

/// Partial-SP: SP on every subset, then `rule` over the per-subset rankings.
pub fn partial_sp(profile: &Profile, rule: Rule, cfg: &SpConfig) -> Result<SpOutcome> {
    cfg.validate()?;
    let groups = subset_groups(profile)?;
    let solved = profile
        .plan
        .subsets()
        .par_iter()
        .enumerate()
        .map(|(j, subset)| solve_subset(j, subset, &groups[j], cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut partial_rankings = Vec::with_capacity(solved.len());
    let mut diagnostics = Vec::new();
    for (r, d) in solved {
        partial_rankings.push(r);
        diagnostics.extend(d);
    }
    let ranking = rules::aggregate(rule, &partial_rankings, profile.m, seed::derive(cfg.tie_seed, &[FINAL_TAG]))?;
    Ok(SpOutcome { ranking, partial_rankings, diagnostics })
}

/// Per-subset vote scores under `rule`, min-max normalized to `[0, 1]` within
/// the subset and averaged over the subsets containing each alternative.
pub fn aggregated_scores(profile: &Profile, rule: Rule) -> Result<Vec<f64>> {
    let groups = subset_groups(profile)?;
    let m = profile.m;
    let mut acc = vec![0.0; m];
    let mut seen = vec![0usize; m];
    for (j, subset) in profile.plan.subsets().iter().enumerate() {
        let local = |id: AltId| subset.iter().position(|&x| x == id).expect("validated ballot");
        let votes: Vec<Vec<Vec<AltId>>> = groups[j]
            .iter()
            .map(|b| b.vote.tiers(subset).into_iter().map(|tier| tier.into_iter().map(local).collect()).collect())
            .collect();
        let (scores, _) = rules::score_tiers(rule, &votes, subset.len())?;
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, &id) in subset.iter().enumerate() {
            acc[id] += if hi > lo { (scores[i] - lo) / (hi - lo) } else { 0.5 };
            seen[id] += 1;
        }
    }
    Ok(acc.iter().zip(&seen).map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect())
}

/// Aggregated-SP: vote scores from `rule` act as vote mass in pairwise SP over
/// every co-covered pair; the global verdicts are ranked with Copeland.
pub fn aggregated_sp(profile: &Profile, rule: Rule, cfg: &SpConfig) -> Result<SpOutcome> {
    cfg.validate()?;
    if rule == Rule::Schulze {
        return Err(Error::UnsupportedRuleForFormat {
            rule: rule.to_string(),
            what: "Aggregated-SP vote scores (Schulze yields no per-alternative score)".into(),
        });
    }
    let q = aggregated_scores(profile, rule)?;
    let groups = profile.by_subset();
    let plan = &profile.plan;
    let pairs = plan.coverage_graph().covered_pairs();
    let diagnostics = pairs
        .par_iter()
        .map(|&(a, b)| {
            let ballots: Vec<&Ballot> = plan
                .subsets()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contains(&a) && s.contains(&b))
                .flat_map(|(j, _)| groups[j].iter().copied())
                .collect();
            let ex = extract_reports(&ballots, a, b, cfg);
            let verdict = if ex.reports.is_empty() {
                None
            } else {
                Some(pairwise_sp(&ex.reports, (a, b), Some((q[a], q[b])), cfg, pair_key(cfg, GLOBAL_TAG, a, b))?)
            };
            Ok(PairDiagnostic { subset_id: None, a, b, n_used: ex.reports.len(), n_dropped: ex.dropped, verdict })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tournament = PairwiseTally::new(profile.m);
    for v in diagnostics.iter().filter_map(|d| d.verdict.as_ref()) {
        tournament.add(v.winner, v.loser, 1.0);
    }
    let (_, ranking) = rules::copeland(&tournament, seed::derive(cfg.tie_seed, &[FINAL_TAG]));
    Ok(SpOutcome { ranking, partial_rankings: Vec::new(), diagnostics })
}

/// Baseline that ignores predictions: `rule` over all votes of the profile.
pub fn votes_only(profile: &Profile, rule: Rule, tie_seed: u64) -> Result<Ranking> {
    let votes: Vec<Vec<Vec<AltId>>> = profile
        .ballots
        .iter()
        .map(|b| b.vote.tiers(profile.plan.subset(b.subset_id).expect("validated ballot")))
        .collect();
    rules::aggregate_tiers(rule, &votes, profile.m, tie_seed)
}
