//! Families of overlapping subsets that voters report on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AltId, Ranking};

/// Ordered list of subsets over `0..m`.
///
/// Gap-regular plans built by [`SubsetPlan::make`] remember their `(k, s)`
/// geometry; plans read from a file only carry `m` and the subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetPlan {
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<usize>,
    subsets: Vec<Vec<AltId>>,
}

impl SubsetPlan {
    /// Gap-regular plan: subset `j` holds positions `j, j+s, ..., j+(k-1)s`.
    pub fn make(m: usize, k: usize, s: usize) -> Result<Self> {
        let geom = |reason: &str| Error::InvalidGeometry { m, k, s, reason: reason.into() };
        if m < 2 {
            return Err(geom("need m >= 2"));
        }
        if k < 1 || k > m {
            return Err(geom("need 1 <= k <= m"));
        }
        if s < 1 {
            return Err(geom("need s >= 1"));
        }
        let span = (k - 1) * s;
        if span >= m {
            return Err(geom("need (k-1)*s < m"));
        }
        let subsets = (0..m - span).map(|j| (0..k).map(|i| j + i * s).collect()).collect();
        Ok(Self { m, k: Some(k), s: Some(s), subsets })
    }

    /// Arbitrary subset family, e.g. from a plan file.
    pub fn from_subsets(m: usize, subsets: Vec<Vec<AltId>>) -> Result<Self> {
        let plan = Self { m, k: None, s: None, subsets };
        plan.validate()?;
        Ok(plan)
    }

    /// Checks that every subset holds distinct ids in `0..m` and has at least one id.
    pub fn validate(&self) -> Result<()> {
        if self.subsets.is_empty() {
            return Err(Error::InvalidPlan("no subsets".into()));
        }
        for (j, sub) in self.subsets.iter().enumerate() {
            if sub.is_empty() {
                return Err(Error::InvalidPlan(format!("subset {j} is empty")));
            }
            if let Some(&bad) = sub.iter().find(|&&a| a >= self.m) {
                return Err(Error::InvalidPlan(format!("subset {j} references id {bad} >= m = {}", self.m)));
            }
            let mut sorted = sub.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidPlan(format!("subset {j} repeats an alternative")));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn geometry(&self) -> Option<(usize, usize)> {
        self.k.zip(self.s)
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn subsets(&self) -> &[Vec<AltId>] {
        &self.subsets
    }

    pub fn subset(&self, j: usize) -> Option<&[AltId]> {
        self.subsets.get(j).map(Vec::as_slice)
    }

    /// Maps ground-truth positions to alternative ids: position `i` becomes
    /// `truth.order()[i]`. Used when the plan is laid out on a known ranking.
    pub fn laid_out_on(&self, truth: &Ranking) -> Result<Self> {
        if truth.len() != self.m || truth.scope() != (0..self.m).collect::<Vec<_>>() {
            return Err(Error::ScopeMismatch);
        }
        let order = truth.order();
        Ok(Self {
            m: self.m,
            k: self.k,
            s: self.s,
            subsets: self.subsets.iter().map(|sub| sub.iter().map(|&pos| order[pos]).collect()).collect(),
        })
    }

    /// For each unordered pair, the number of subsets containing both ids.
    pub fn coverage_graph(&self) -> CoverageMap {
        let m = self.m;
        let mut counts = vec![0usize; m * m];
        for sub in &self.subsets {
            for (i, &a) in sub.iter().enumerate() {
                for &b in &sub[i + 1..] {
                    counts[a * m + b] += 1;
                    counts[b * m + a] += 1;
                }
            }
        }
        CoverageMap { m, counts }
    }

    /// Whether every alternative appears in some subset.
    pub fn covers_all(&self) -> bool {
        let mut seen = vec![false; self.m];
        for sub in &self.subsets {
            for &a in sub {
                seen[a] = true;
            }
        }
        seen.into_iter().all(|x| x)
    }
}

/// Pair-coverage counts produced by [`SubsetPlan::coverage_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMap {
    m: usize,
    counts: Vec<usize>,
}

impl CoverageMap {
    pub fn count(&self, a: AltId, b: AltId) -> usize {
        if a == b {
            0
        } else {
            self.counts[a * self.m + b]
        }
    }

    /// Unordered pairs `(a, b)` with `a < b` covered by at least one subset.
    pub fn covered_pairs(&self) -> Vec<(AltId, AltId)> {
        let mut out = Vec::new();
        for a in 0..self.m {
            for b in a + 1..self.m {
                if self.count(a, b) > 0 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Connected components of the co-occurrence graph, each sorted, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<AltId>> {
        let mut comp = vec![usize::MAX; self.m];
        let mut out = Vec::new();
        for start in 0..self.m {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                for b in 0..self.m {
                    if comp[b] == usize::MAX && self.count(a, b) > 0 {
                        comp[b] = id;
                        members.push(b);
                        stack.push(b);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}
