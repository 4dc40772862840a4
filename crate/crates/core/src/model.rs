//! Domain types shared by every module: rankings, elicitation formats and ballots.
//!
//! Alternatives are plain integer ids in `0..m`; display labels (`a1`, `a2`, ...
//! or user-provided names) only exist at the I/O boundary.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::SubsetPlan;

/// Index of an alternative in `0..m`.
pub type AltId = usize;

/// One-indexed display label, matching the `a_1, ..., a_m` convention.
pub fn label(id: AltId) -> String {
    format!("a{}", id + 1)
}

/// A strict total order over a set of alternatives, most preferred first.
///
/// The scope of the ranking is exactly the set of ids it contains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<AltId>", into = "Vec<AltId>")]
pub struct Ranking {
    order: Vec<AltId>,
}

impl Ranking {
    pub fn new(order: Vec<AltId>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &id in &order {
            if !seen.insert(id) {
                return Err(Error::InvalidRanking(format!("duplicate alternative {}", label(id))));
            }
        }
        Ok(Self { order })
    }

    /// The ranking `0 ≻ 1 ≻ ... ≻ m-1`.
    pub fn identity(m: usize) -> Self {
        Self { order: (0..m).collect() }
    }

    pub fn order(&self) -> &[AltId] {
        &self.order
    }

    pub fn into_order(self) -> Vec<AltId> {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, id: AltId) -> bool {
        self.order.contains(&id)
    }

    pub fn position(&self, id: AltId) -> Option<usize> {
        self.order.iter().position(|&x| x == id)
    }

    /// Sorted ids of the scope.
    pub fn scope(&self) -> Vec<AltId> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }

    pub fn same_scope(&self, other: &Ranking) -> bool {
        self.len() == other.len() && self.scope() == other.scope()
    }

    /// `Some(true)` if `a` is ranked above `b`, `None` if either is missing.
    pub fn prefers(&self, a: AltId, b: AltId) -> Option<bool> {
        let pa = self.position(a)?;
        let pb = self.position(b)?;
        Some(pa < pb)
    }

    /// Position lookup table indexed by id; ids outside the scope map to `usize::MAX`.
    pub fn positions(&self, m: usize) -> Vec<usize> {
        let mut pos = vec![usize::MAX; m.max(self.order.iter().map(|&x| x + 1).max().unwrap_or(0))];
        for (i, &id) in self.order.iter().enumerate() {
            pos[id] = i;
        }
        pos
    }

    /// Induced order of `subset` as it appears in this ranking.
    pub fn restrict(&self, subset: &[AltId]) -> Result<Ranking> {
        let wanted: BTreeSet<AltId> = subset.iter().copied().collect();
        for &id in &wanted {
            if !self.contains(id) {
                return Err(Error::AlienAlternative(id));
            }
        }
        Ok(Ranking {
            order: self.order.iter().copied().filter(|id| wanted.contains(id)).collect(),
        })
    }

    pub fn top(&self, t: usize) -> &[AltId] {
        &self.order[..t.min(self.order.len())]
    }

    pub fn reversed(&self) -> Ranking {
        Ranking { order: self.order.iter().rev().copied().collect() }
    }

    /// Applies the id bijection `map` (old id → new id).
    pub fn relabel(&self, map: &[AltId]) -> Ranking {
        Ranking { order: self.order.iter().map(|&id| map[id]).collect() }
    }

    /// Number of discordant pairs between two rankings over the same scope.
    pub fn kendall_distance(&self, other: &Ranking) -> Result<usize> {
        if !self.same_scope(other) {
            return Err(Error::ScopeMismatch);
        }
        let m = self.order.iter().copied().max().map_or(0, |x| x + 1);
        let pos = other.positions(m);
        let mapped: Vec<usize> = self.order.iter().map(|&id| pos[id]).collect();
        Ok(count_inversions(&mapped))
    }
}

pub(crate) fn count_inversions(seq: &[usize]) -> usize {
    let mut n = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                n += 1;
            }
        }
    }
    n
}

impl TryFrom<Vec<AltId>> for Ranking {
    type Error = Error;
    fn try_from(v: Vec<AltId>) -> Result<Self> {
        Ranking::new(v)
    }
}

impl From<Ranking> for Vec<AltId> {
    fn from(r: Ranking) -> Self {
        r.order
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|&id| label(id)).collect();
        f.write_str(&parts.join("≻"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VoteKind {
    Top,
    Approval(usize),
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictionKind {
    None,
    Top,
    Approval(usize),
    Rank,
}

/// A (vote kind, prediction kind) pair. `Approval(1)` is normalized to `Top`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ElicitationFormat {
    pub vote: VoteKind,
    pub prediction: PredictionKind,
}

impl ElicitationFormat {
    /// The nine studied formats, in wire-tag order.
    pub const STUDIED: [&'static str; 9] = [
        "top-none",
        "top-top",
        "top-approval3",
        "top-rank",
        "approval2-approval2",
        "approval3-rank",
        "rank-none",
        "rank-top",
        "rank-rank",
    ];

    pub fn new(vote: VoteKind, prediction: PredictionKind) -> Self {
        let vote = match vote {
            VoteKind::Approval(1) => VoteKind::Top,
            v => v,
        };
        let prediction = match prediction {
            PredictionKind::Approval(1) => PredictionKind::Top,
            p => p,
        };
        Self { vote, prediction }
    }

    pub fn rank_rank() -> Self {
        Self::new(VoteKind::Rank, PredictionKind::Rank)
    }

    pub fn studied() -> Vec<ElicitationFormat> {
        Self::STUDIED.iter().map(|t| t.parse().expect("static tag")).collect()
    }

    pub fn tag(&self) -> String {
        let v = match self.vote {
            VoteKind::Top => "top".to_string(),
            VoteKind::Approval(t) => format!("approval{t}"),
            VoteKind::Rank => "rank".to_string(),
        };
        let p = match self.prediction {
            PredictionKind::None => "none".to_string(),
            PredictionKind::Top => "top".to_string(),
            PredictionKind::Approval(t) => format!("approval{t}"),
            PredictionKind::Rank => "rank".to_string(),
        };
        format!("{v}-{p}")
    }

    /// Largest approval size used by the format, if any.
    fn max_approval(&self) -> Option<usize> {
        let v = match self.vote {
            VoteKind::Approval(t) => Some(t),
            _ => None,
        };
        let p = match self.prediction {
            PredictionKind::Approval(t) => Some(t),
            _ => None,
        };
        v.max(p)
    }

    /// Checks `1 <= t < k` for any approval component.
    pub fn check_subset_size(&self, k: usize) -> Result<()> {
        match self.max_approval() {
            Some(t) if t == 0 || t >= k => Err(Error::PayloadShapeMismatch(format!(
                "format {} needs approval size t with 1 <= t < k = {k}",
                self.tag()
            ))),
            _ => Ok(()),
        }
    }
}

fn parse_component(s: &str) -> Option<(&'static str, usize)> {
    match s {
        "top" => Some(("top", 0)),
        "rank" => Some(("rank", 0)),
        "none" => Some(("none", 0)),
        _ => s.strip_prefix("approval").and_then(|t| t.parse().ok()).map(|t| ("approval", t)),
    }
}

impl FromStr for ElicitationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown elicitation format tag '{s}'"));
        let (v, p) = s.trim().to_ascii_lowercase().split_once('-').map(|(a, b)| (a.to_string(), b.to_string())).ok_or_else(bad)?;
        let vote = match parse_component(&v).ok_or_else(bad)? {
            ("top", _) => VoteKind::Top,
            ("rank", _) => VoteKind::Rank,
            ("approval", t) if t >= 1 => VoteKind::Approval(t),
            _ => return Err(bad()),
        };
        let prediction = match parse_component(&p).ok_or_else(bad)? {
            ("none", _) => PredictionKind::None,
            ("top", _) => PredictionKind::Top,
            ("rank", _) => PredictionKind::Rank,
            ("approval", t) if t >= 1 => PredictionKind::Approval(t),
            _ => return Err(bad()),
        };
        Ok(ElicitationFormat::new(vote, prediction))
    }
}

impl fmt::Display for ElicitationFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl Serialize for ElicitationFormat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for ElicitationFormat {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A vote or prediction payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Report {
    Top(AltId),
    /// Unordered approval set, kept sorted.
    Approval(Vec<AltId>),
    Rank(Ranking),
}

impl Report {
    /// Builds an approval report, canonicalizing to a sorted set.
    pub fn approval(mut ids: Vec<AltId>) -> Self {
        ids.sort_unstable();
        Report::Approval(ids)
    }

    /// Projects a ranking over the subset onto a report of the given shape.
    pub fn project_vote(kind: VoteKind, r: &Ranking) -> Report {
        match kind {
            VoteKind::Top => Report::Top(r.order()[0]),
            VoteKind::Approval(t) => Report::approval(r.top(t).to_vec()),
            VoteKind::Rank => Report::Rank(r.clone()),
        }
    }

    pub fn project_prediction(kind: PredictionKind, r: &Ranking) -> Option<Report> {
        match kind {
            PredictionKind::None => None,
            PredictionKind::Top => Some(Report::Top(r.order()[0])),
            PredictionKind::Approval(t) => Some(Report::approval(r.top(t).to_vec())),
            PredictionKind::Rank => Some(Report::Rank(r.clone())),
        }
    }

    pub fn ids(&self) -> Vec<AltId> {
        match self {
            Report::Top(a) => vec![*a],
            Report::Approval(s) => s.clone(),
            Report::Rank(r) => r.order().to_vec(),
        }
    }

    /// Whether `a` is selected (top choice or member of the approval set).
    pub fn selects(&self, a: AltId) -> bool {
        match self {
            Report::Top(x) => *x == a,
            Report::Approval(s) => s.binary_search(&a).is_ok(),
            Report::Rank(r) => r.contains(a),
        }
    }

    /// Ordered tiers implied by the report over `subset`: the selected ids first,
    /// then everything else tied. A rank report yields singleton tiers.
    pub fn tiers(&self, subset: &[AltId]) -> Vec<Vec<AltId>> {
        match self {
            Report::Rank(r) => r.order().iter().map(|&a| vec![a]).collect(),
            _ => {
                let chosen = self.ids();
                let rest: Vec<AltId> = subset.iter().copied().filter(|a| !chosen.contains(a)).collect();
                if rest.is_empty() {
                    vec![chosen]
                } else {
                    vec![chosen, rest]
                }
            }
        }
    }
}

/// One voter's (vote, prediction) on one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Ballot {
    pub voter_id: String,
    pub subset_id: usize,
    pub format: ElicitationFormat,
    pub vote: Report,
    /// `None` is the explicit absent marker used by `*-none` formats.
    pub prediction: Option<Report>,
}

fn check_shape(what: &str, report: &Report, expect_top: bool, approval: Option<usize>, subset: &[AltId]) -> Result<()> {
    match (report, expect_top, approval) {
        (Report::Top(a), true, _) => {
            if !subset.contains(a) {
                return Err(Error::AlienAlternative(*a));
            }
        }
        (Report::Approval(set), false, Some(t)) => {
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::PayloadShapeMismatch(format!("{what}: duplicate id in approval set")));
            }
            if set.len() != t {
                return Err(Error::PayloadShapeMismatch(format!(
                    "{what}: approval({t}) needs {t} ids, got {}",
                    set.len()
                )));
            }
            if let Some(&a) = set.iter().find(|a| !subset.contains(a)) {
                return Err(Error::AlienAlternative(a));
            }
        }
        (Report::Rank(r), false, None) => {
            if let Some(&a) = r.order().iter().find(|a| !subset.contains(a)) {
                return Err(Error::AlienAlternative(a));
            }
            if r.len() != subset.len() {
                return Err(Error::PayloadShapeMismatch(format!(
                    "{what}: rank must order all {} alternatives of the subset, got {}",
                    subset.len(),
                    r.len()
                )));
            }
        }
        _ => {
            return Err(Error::PayloadShapeMismatch(format!("{what}: payload does not match the declared format")));
        }
    }
    Ok(())
}

/// Checks every ballot invariant against `plan` and returns the ballot unchanged.
pub fn validate_ballot(b: Ballot, plan: &SubsetPlan) -> Result<Ballot> {
    if plan.is_empty() {
        return Err(Error::InvalidPlan("plan has no subsets".into()));
    }
    let subset = plan
        .subset(b.subset_id)
        .ok_or(Error::SubsetOutOfRange { subset_id: b.subset_id, n_subsets: plan.len() })?;
    b.format.check_subset_size(subset.len())?;
    match b.format.vote {
        VoteKind::Top => check_shape("vote", &b.vote, true, None, subset)?,
        VoteKind::Approval(t) => check_shape("vote", &b.vote, false, Some(t), subset)?,
        VoteKind::Rank => check_shape("vote", &b.vote, false, None, subset)?,
    }
    match (b.format.prediction, &b.prediction) {
        (PredictionKind::None, None) => {}
        (PredictionKind::None, Some(_)) => {
            return Err(Error::PayloadShapeMismatch("prediction given for a format without predictions".into()))
        }
        (_, None) => return Err(Error::PayloadShapeMismatch("prediction missing".into())),
        (PredictionKind::Top, Some(p)) => check_shape("prediction", p, true, None, subset)?,
        (PredictionKind::Approval(t), Some(p)) => check_shape("prediction", p, false, Some(t), subset)?,
        (PredictionKind::Rank, Some(p)) => check_shape("prediction", p, false, None, subset)?,
    }
    Ok(b)
}

/// All ballots of an experiment together with the plan they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub m: usize,
    pub plan: SubsetPlan,
    pub ballots: Vec<Ballot>,
}

impl Profile {
    /// Validates every ballot against the plan.
    pub fn new(plan: SubsetPlan, ballots: Vec<Ballot>) -> Result<Self> {
        let ballots = ballots.into_iter().map(|b| validate_ballot(b, &plan)).collect::<Result<Vec<_>>>()?;
        Ok(Self { m: plan.m(), plan, ballots })
    }

    /// Ballots grouped by subset, in plan order.
    pub fn by_subset(&self) -> Vec<Vec<&Ballot>> {
        let mut groups = vec![Vec::new(); self.plan.len()];
        for b in &self.ballots {
            groups[b.subset_id].push(b);
        }
        groups
    }
}
