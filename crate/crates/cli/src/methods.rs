use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spvote_core::sp::{self, SpConfig, SpOutcome};
use spvote_core::{Profile, Ranking, Result, Rule};

/// Aggregation methods selectable with `--method`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Borda,
    Copeland,
    Maximin,
    Schulze,
    PartialSp,
    AggregatedSp,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Borda, Method::Copeland, Method::Maximin, Method::Schulze, Method::PartialSp, Method::AggregatedSp];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Borda => "borda",
            Method::Copeland => "copeland",
            Method::Maximin => "maximin",
            Method::Schulze => "schulze",
            Method::PartialSp => "partial-sp",
            Method::AggregatedSp => "aggregated-sp",
        }
    }

    pub fn is_sp(&self) -> bool {
        matches!(self, Method::PartialSp | Method::AggregatedSp)
    }

    /// Full ranking over the profile. Voting rules ignore predictions; `rule`
    /// is only the inner rule of the two SP variants.
    pub fn run(&self, profile: &Profile, rule: Rule, cfg: &SpConfig) -> Result<(Ranking, Option<SpOutcome>)> {
        let baseline = |r| sp::votes_only(profile, r, cfg.tie_seed).map(|x| (x, None));
        match self {
            Method::Borda => baseline(Rule::Borda),
            Method::Copeland => baseline(Rule::Copeland),
            Method::Maximin => baseline(Rule::Maximin),
            Method::Schulze => baseline(Rule::Schulze),
            Method::PartialSp => sp::partial_sp(profile, rule, cfg).map(|o| (o.ranking.clone(), Some(o))),
            Method::AggregatedSp => sp::aggregated_sp(profile, rule, cfg).map(|o| (o.ranking.clone(), Some(o))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected one of borda, copeland, maximin, schulze, partial-sp, aggregated-sp)"))
    }
}
