//! Recovering ground-truth rankings from partial votes and predictions.
//!
//! The crate is organised around the pipeline a typical experiment follows:
//!
//! * [`model`] – alternatives, rankings, elicitation formats, ballots and profiles.
//! * [`plan`] – gap-regular families of overlapping subsets voters report on.
//! * [`rules`] – Borda, Copeland, Maximin and Schulze baselines.
//! * [`sp`] – report extraction and the Partial-SP / Aggregated-SP aggregators.
//! * [`mallows`] – repeated-insertion Mallows sampling and the concentric mixture
//!   used to synthesize voter populations.
//! * [`oracle`] – exact enumeration of the mixture's posteriors for small
//!   instances, the full-ranking SP rule and sample-complexity checks.
//! * [`metrics`] – Kendall-Tau, Spearman's rho, hit rates and bootstrap CIs.
//! * [`estimation`] – grid-search fitting of the mixture to observed distances.
//! * [`io`] – JSON-Lines ballot files, plan files and diagnostics CSV.

pub mod error;
pub mod estimation;
pub mod io;
pub mod mallows;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod plan;
pub mod rules;
pub mod seed;
pub mod sp;

pub use error::{Error, Result};
pub use model::{AltId, Ballot, ElicitationFormat, PredictionKind, Profile, Ranking, Report, VoteKind};
pub use plan::SubsetPlan;
pub use rules::Rule;
