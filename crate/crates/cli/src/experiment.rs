//! Synthetic instances and multi-method trials.

use spvote_core::mallows::{self, MixtureParams, VoterDraw};
use spvote_core::seed::{self, role};
use spvote_core::sp::SpConfig;
use spvote_core::{ElicitationFormat, Profile, Ranking, Result, Rule, SubsetPlan};

use crate::Method;

/// Uniform ground truth for `seed`.
pub fn random_truth(m: usize, seed: u64) -> Ranking {
    mallows::sample_uniform(m, &mut seed::rng(seed, &[role::TRUTH]))
}

/// One synthetic data set: a random truth, the plan laid out along it, and a
/// profile drawn from the mixture.
#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: Ranking,
    pub profile: Profile,
    pub draws: Vec<VoterDraw>,
}

pub fn draw_instance(
    plan: &SubsetPlan,
    params: &MixtureParams,
    formats: &[ElicitationFormat],
    n_per_subset: usize,
    seed: u64,
) -> Result<Instance> {
    let truth = random_truth(plan.m(), seed);
    let laid = plan.laid_out_on(&truth)?;
    let (profile, draws) = mallows::synthesize_profile(&laid, params, formats, n_per_subset, &truth, seed)?;
    Ok(Instance { truth, profile, draws })
}

#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub plan: SubsetPlan,
    pub params: MixtureParams,
    pub formats: Vec<ElicitationFormat>,
    pub n_per_subset: usize,
    pub methods: Vec<Method>,
    pub rule: Rule,
    /// `tie_seed` is replaced by the trial seed.
    pub sp: SpConfig,
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub seed: u64,
    pub truth: Ranking,
    /// One ranking per method, in `TrialSpec::methods` order.
    pub rankings: Vec<Ranking>,
}

/// Draws one instance at `seed` and ranks it with every method.
pub fn run_trial(spec: &TrialSpec, seed: u64) -> Result<Trial> {
    let inst = draw_instance(&spec.plan, &spec.params, &spec.formats, spec.n_per_subset, seed)?;
    let cfg = SpConfig { tie_seed: seed, ..spec.sp };
    let rankings = spec
        .methods
        .iter()
        .map(|m| m.run(&inst.profile, spec.rule, &cfg).map(|(r, _)| r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trial { seed, truth: inst.truth, rankings })
}
