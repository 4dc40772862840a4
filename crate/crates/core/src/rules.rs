//! Classical aggregation baselines over full or partial profiles.
//!
//! Every rule returns a ranking over all `m` alternatives. Equal scores are
//! broken by a uniformly random order derived from an explicit `tie_seed`, so
//! the same seed always yields the same output.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AltId, Ranking};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Borda,
    Copeland,
    Maximin,
    Schulze,
}

impl Rule {
    pub const ALL: [Rule; 4] = [Rule::Borda, Rule::Copeland, Rule::Maximin, Rule::Schulze];

    pub fn name(&self) -> &'static str {
        match self {
            Rule::Borda => "borda",
            Rule::Copeland => "copeland",
            Rule::Maximin => "maximin",
            Rule::Schulze => "schulze",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "borda" => Ok(Rule::Borda),
            "copeland" => Ok(Rule::Copeland),
            "maximin" => Ok(Rule::Maximin),
            "schulze" => Ok(Rule::Schulze),
            other => Err(Error::Parse(format!("unknown voting rule '{other}'"))),
        }
    }
}

/// `V[a][b]`: total weight of voters ranking `a` above `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTally {
    m: usize,
    counts: Vec<f64>,
}

impl PairwiseTally {
    pub fn new(m: usize) -> Self {
        Self { m, counts: vec![0.0; m * m] }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, a: AltId, b: AltId) -> f64 {
        self.counts[a * self.m + b]
    }

    pub fn add(&mut self, a: AltId, b: AltId, w: f64) {
        debug_assert_ne!(a, b);
        self.counts[a * self.m + b] += w;
    }

    /// Adds one tiered vote: every id in an earlier tier beats every id in a later one.
    pub fn add_tiers(&mut self, tiers: &[Vec<AltId>], w: f64) {
        for (i, upper) in tiers.iter().enumerate() {
            for lower in &tiers[i + 1..] {
                for &a in upper {
                    for &b in lower {
                        self.add(a, b, w);
                    }
                }
            }
        }
    }

    /// Row sums `Σ_b V[a][b]`; equals the within-scope Borda score.
    pub fn support(&self) -> Vec<f64> {
        (0..self.m).map(|a| (0..self.m).map(|b| self.get(a, b)).sum()).collect()
    }
}

/// Per-alternative scores produced by a rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreVector {
    pub rule: Rule,
    pub scores: Vec<f64>,
}

fn checked_weights(n: usize, weights: Option<&[f64]>) -> Vec<f64> {
    match weights {
        Some(w) => {
            assert_eq!(w.len(), n, "one weight per ranking");
            w.to_vec()
        }
        None => vec![1.0; n],
    }
}

/// Pairwise tally of (possibly partial) rankings over `0..m`; a pair only counts
/// for rankings containing both alternatives.
pub fn tally(rankings: &[Ranking], weights: Option<&[f64]>, m: usize) -> PairwiseTally {
    let w = checked_weights(rankings.len(), weights);
    let mut t = PairwiseTally::new(m);
    for (r, &wi) in rankings.iter().zip(&w) {
        let order = r.order();
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                t.add(a, b, wi);
            }
        }
    }
    t
}

/// Pairwise tally of tiered votes (top choices and approval sets).
pub fn tally_tiers(votes: &[Vec<Vec<AltId>>], weights: Option<&[f64]>, m: usize) -> PairwiseTally {
    let w = checked_weights(votes.len(), weights);
    let mut t = PairwiseTally::new(m);
    for (v, &wi) in votes.iter().zip(&w) {
        t.add_tiers(v, wi);
    }
    t
}

/// Orders all alternatives by descending `primary`, then descending `secondary`,
/// then a seeded uniformly random order.
pub fn rank_by_scores(primary: &[f64], secondary: Option<&[f64]>, tie_seed: u64) -> Ranking {
    let m = primary.len();
    let mut rng = seed::rng(tie_seed, &[seed::role::TIES, m as u64]);
    let keys: Vec<u64> = (0..m).map(|_| rng.random()).collect();
    let mut ids: Vec<AltId> = (0..m).collect();
    ids.sort_by(|&a, &b| {
        primary[b]
            .total_cmp(&primary[a])
            .then_with(|| match secondary {
                Some(s) => s[b].total_cmp(&s[a]),
                None => std::cmp::Ordering::Equal,
            })
            .then_with(|| keys[a].cmp(&keys[b]))
    });
    Ranking::new(ids).expect("permutation of 0..m")
}

/// Borda over tiered votes: each alternative scores the number of alternatives
/// in strictly later tiers of the same vote. For a strict ranking of length `k`
/// this is `k - 1 - position`.
pub fn borda_scores_tiers(votes: &[Vec<Vec<AltId>>], m: usize) -> Vec<f64> {
    let mut scores = vec![0.0; m];
    for v in votes {
        let mut below: usize = v.iter().map(Vec::len).sum();
        for tier in v {
            below -= tier.len();
            for &a in tier {
                scores[a] += below as f64;
            }
        }
    }
    scores
}

pub fn borda(rankings: &[Ranking], m: usize, tie_seed: u64) -> (ScoreVector, Ranking) {
    let mut scores = vec![0.0; m];
    for r in rankings {
        let k = r.len();
        for (pos, &a) in r.order().iter().enumerate() {
            scores[a] += (k - 1 - pos) as f64;
        }
    }
    let ranking = rank_by_scores(&scores, None, tie_seed);
    (ScoreVector { rule: Rule::Borda, scores }, ranking)
}

pub fn copeland_scores(t: &PairwiseTally) -> Vec<f64> {
    let m = t.m();
    (0..m)
        .map(|a| {
            (0..m)
                .filter(|&b| b != a)
                .map(|b| {
                    let (ab, ba) = (t.get(a, b), t.get(b, a));
                    if ab > ba {
                        1.0
                    } else if ab == ba {
                        0.5
                    } else {
                        0.0
                    }
                })
                .sum()
        })
        .collect()
}

/// Copeland with Borda (tally row sums) as the first tie-breaker.
pub fn copeland(t: &PairwiseTally, tie_seed: u64) -> (ScoreVector, Ranking) {
    let scores = copeland_scores(t);
    let ranking = rank_by_scores(&scores, Some(&t.support()), tie_seed);
    (ScoreVector { rule: Rule::Copeland, scores }, ranking)
}

pub fn maximin_scores(t: &PairwiseTally) -> Vec<f64> {
    let m = t.m();
    (0..m)
        .map(|a| (0..m).filter(|&b| b != a).map(|b| t.get(a, b)).fold(f64::INFINITY, f64::min))
        .map(|s| if s.is_finite() { s } else { 0.0 })
        .collect()
}

pub fn maximin(t: &PairwiseTally, tie_seed: u64) -> (ScoreVector, Ranking) {
    let scores = maximin_scores(t);
    let ranking = rank_by_scores(&scores, None, tie_seed);
    (ScoreVector { rule: Rule::Maximin, scores }, ranking)
}

/// Strongest-path strengths `P[a][b]` (row-major, `m * m`).
pub fn schulze_strengths(t: &PairwiseTally) -> Vec<f64> {
    let m = t.m();
    let mut p = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            if a != b && t.get(a, b) > t.get(b, a) {
                p[a * m + b] = t.get(a, b);
            }
        }
    }
    for c in 0..m {
        for a in 0..m {
            if a == c {
                continue;
            }
            for b in 0..m {
                if b == a || b == c {
                    continue;
                }
                let via = p[a * m + c].min(p[c * m + b]);
                if via > p[a * m + b] {
                    p[a * m + b] = via;
                }
            }
        }
    }
    p
}

/// Schulze ranking by the number of strongest-path wins `P(a,b) > P(b,a)`.
pub fn schulze(t: &PairwiseTally, tie_seed: u64) -> Ranking {
    schulze_with_scores(t, tie_seed).1
}

pub fn schulze_with_scores(t: &PairwiseTally, tie_seed: u64) -> (ScoreVector, Ranking) {
    let m = t.m();
    let p = schulze_strengths(t);
    let scores: Vec<f64> = (0..m)
        .map(|a| (0..m).filter(|&b| b != a && p[a * m + b] > p[b * m + a]).count() as f64)
        .collect();
    let ranking = rank_by_scores(&scores, None, tie_seed);
    (ScoreVector { rule: Rule::Schulze, scores }, ranking)
}

/// Aggregates (possibly partial) rankings into a full ranking over `0..m`.
pub fn aggregate(rule: Rule, rankings: &[Ranking], m: usize, tie_seed: u64) -> Result<Ranking> {
    if rankings.is_empty() {
        return Err(Error::EmptyProfile);
    }
    Ok(match rule {
        Rule::Borda => borda(rankings, m, tie_seed).1,
        Rule::Copeland => copeland(&tally(rankings, None, m), tie_seed).1,
        Rule::Maximin => maximin(&tally(rankings, None, m), tie_seed).1,
        Rule::Schulze => schulze(&tally(rankings, None, m), tie_seed),
    })
}

/// Scores of tiered votes under `rule`. Schulze needs strict rankings and is
/// refused whenever a vote has a tier with more than one alternative.
pub fn score_tiers(rule: Rule, votes: &[Vec<Vec<AltId>>], m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if votes.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let t = tally_tiers(votes, None, m);
    let support = t.support();
    let scores = match rule {
        Rule::Borda => borda_scores_tiers(votes, m),
        Rule::Copeland => copeland_scores(&t),
        Rule::Maximin => maximin_scores(&t),
        Rule::Schulze => {
            if votes.iter().any(|v| v.iter().any(|tier| tier.len() > 1)) {
                return Err(Error::UnsupportedRuleForFormat {
                    rule: rule.to_string(),
                    what: "top-choice or approval votes".into(),
                });
            }
            schulze_with_scores(&t, 0).0.scores
        }
    };
    Ok((scores, support))
}

/// Aggregates tiered votes (top choices, approval sets or strict rankings).
pub fn aggregate_tiers(rule: Rule, votes: &[Vec<Vec<AltId>>], m: usize, tie_seed: u64) -> Result<Ranking> {
    let (scores, support) = score_tiers(rule, votes, m)?;
    let secondary = match rule {
        Rule::Copeland => Some(support.as_slice()),
        _ => None,
    };
    Ok(rank_by_scores(&scores, secondary, tie_seed))
}
