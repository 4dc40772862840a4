//! Concentric mixture of Mallows models and a synthetic ballot generator.

use rand::Rng as _;
use rand_distr::{Beta, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Ballot, ElicitationFormat, Profile, Ranking, Report};
use crate::plan::SubsetPlan;
use crate::seed::{self, role};

/// Mixing weight `p` of experts and the four dispersions of the mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub p: f64,
    pub phi_e_votes: f64,
    pub phi_e_predictions: f64,
    pub phi_ne_votes: f64,
    pub phi_ne_predictions: f64,
}

impl MixtureParams {
    pub fn new(p: f64, phi_e_votes: f64, phi_e_predictions: f64, phi_ne_votes: f64, phi_ne_predictions: f64) -> Result<Self> {
        let mp = Self { p, phi_e_votes, phi_e_predictions, phi_ne_votes, phi_ne_predictions };
        mp.validate()?;
        Ok(mp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParams(format!("p = {} outside [0, 1]", self.p)));
        }
        for phi in [self.phi_e_votes, self.phi_e_predictions, self.phi_ne_votes, self.phi_ne_predictions] {
            check_phi(phi)?;
        }
        Ok(())
    }

    /// Draws parameters from the generation priors: p ~ Beta(1, 2.5),
    /// expert φ ~ N(0.15, 0.075), non-expert φ ~ N(0.9, 0.4), each φ
    /// truncated to (0, 1] by rejection.
    pub fn from_prior(rng: &mut seed::Rng) -> Self {
        let beta = Beta::new(1.0, 2.5).expect("valid beta");
        let expert = Normal::new(0.15, 0.075).expect("valid normal");
        let novice = Normal::new(0.9, 0.4).expect("valid normal");
        let mut truncated = |d: &Normal<f64>| loop {
            let x = d.sample(rng);
            if x > 0.0 && x <= 1.0 {
                break x;
            }
        };
        let (ev, ep, nv, np) = (truncated(&expert), truncated(&expert), truncated(&novice), truncated(&novice));
        Self { p: beta.sample(rng), phi_e_votes: ev, phi_e_predictions: ep, phi_ne_votes: nv, phi_ne_predictions: np }
    }
}

pub(crate) fn check_phi(phi: f64) -> Result<()> {
    if phi > 0.0 && phi <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDispersion(phi))
    }
}

/// Mallows draw around `center` by repeated insertion: the `i`-th item of the
/// center lands at position `j ≤ i` with probability ∝ φ^(i−j).
pub fn sample_mallows(center: &Ranking, phi: f64, rng: &mut seed::Rng) -> Result<Ranking> {
    check_phi(phi)?;
    let m = center.len();
    let mut out = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (i, &item) in center.order().iter().enumerate() {
        // weights[j] = φ^(i−j), j = 0..=i
        weights.clear();
        let mut w = 1.0;
        for _ in 0..=i {
            weights.push(w);
            w *= phi;
        }
        weights.reverse();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pos = i;
        for (j, &wj) in weights.iter().enumerate() {
            if u < wj {
                pos = j;
                break;
            }
            u -= wj;
        }
        out.insert(pos, item);
    }
    Ranking::new(out)
}

/// Uniformly random ranking of `0..m`.
pub fn sample_uniform(m: usize, rng: &mut seed::Rng) -> Ranking {
    let mut order: Vec<usize> = (0..m).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), rng);
    Ranking::new(order).expect("a permutation of 0..m")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterDraw {
    pub voter_id: String,
    pub is_expert: bool,
    /// Basis of the vote.
    pub observed: Ranking,
    /// Basis of the prediction, drawn independently given the type.
    pub belief: Ranking,
}

pub fn draw_voter(params: &MixtureParams, truth: &Ranking, voter_id: String, rng: &mut seed::Rng) -> Result<VoterDraw> {
    params.validate()?;
    let is_expert = rng.random::<f64>() < params.p;
    let (pv, pp) = if is_expert {
        (params.phi_e_votes, params.phi_e_predictions)
    } else {
        (params.phi_ne_votes, params.phi_ne_predictions)
    };
    let observed = sample_mallows(truth, pv, rng)?;
    let belief = sample_mallows(truth, pp, rng)?;
    Ok(VoterDraw { voter_id, is_expert, observed, belief })
}

/// Ballot of one drawn voter on one subset.
pub fn ballot_for(draw: &VoterDraw, subset_id: usize, subset: &[usize], format: ElicitationFormat) -> Result<Ballot> {
    let vote = Report::project_vote(format.vote, &draw.observed.restrict(subset)?);
    let prediction = Report::project_prediction(format.prediction, &draw.belief.restrict(subset)?);
    Ok(Ballot { voter_id: draw.voter_id.clone(), subset_id, format, vote, prediction })
}

/// Synthetic profile with `n_per_subset` fresh voters per subset. `formats`
/// holds one format for every subset, or a single one used everywhere.
/// Voter `i` of subset `j` draws from the stream `(seed, j, i)`.
pub fn synthesize_profile(
    plan: &SubsetPlan,
    params: &MixtureParams,
    formats: &[ElicitationFormat],
    n_per_subset: usize,
    truth: &Ranking,
    seed: u64,
) -> Result<(Profile, Vec<VoterDraw>)> {
    params.validate()?;
    if n_per_subset == 0 {
        return Err(Error::InvalidParams("n_per_subset must be >= 1".into()));
    }
    if formats.len() != 1 && formats.len() != plan.len() {
        return Err(Error::InvalidParams(format!(
            "{} formats for {} subsets; give one or one per subset",
            formats.len(),
            plan.len()
        )));
    }
    if truth.scope() != (0..plan.m()).collect::<Vec<_>>() {
        return Err(Error::ScopeMismatch);
    }
    for (j, subset) in plan.subsets().iter().enumerate() {
        formats[j % formats.len()].check_subset_size(subset.len())?;
    }
    let per_subset = plan
        .subsets()
        .par_iter()
        .enumerate()
        .map(|(j, subset)| {
            let format = formats[j % formats.len()];
            (0..n_per_subset)
                .map(|i| {
                    let mut rng = seed::rng(seed, &[role::TYPE, j as u64, i as u64]);
                    let draw = draw_voter(params, truth, format!("s{j}-v{i}"), &mut rng)?;
                    let ballot = ballot_for(&draw, j, subset, format)?;
                    Ok((ballot, draw))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (ballots, draws): (Vec<_>, Vec<_>) = per_subset.into_iter().flatten().unzip();
    Ok((Profile::new(plan.clone(), ballots)?, draws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PredictionKind;

    fn params(p: f64, ev: f64, nv: f64) -> MixtureParams {
        MixtureParams::new(p, ev, 0.7, nv, 0.9).unwrap()
    }

    #[test]
    fn near_zero_phi_returns_center() {
        let center = Ranking::new(vec![2, 0, 3, 1, 4]).unwrap();
        let mut rng = seed::rng(1, &[]);
        let hits = (0..10_000).filter(|_| sample_mallows(&center, 1e-9, &mut rng).unwrap() == center).count();
        assert!(hits as f64 / 1e4 >= 0.999);
    }

    #[test]
    fn center_frequency_at_half() {
        let center = Ranking::identity(3);
        let mut rng = seed::rng(2, &[]);
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_mallows(&center, 0.5, &mut rng).unwrap() == center).count();
        assert!((hits as f64 / n as f64 - 1.0 / 2.625).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_dispersion() {
        let mut rng = seed::rng(0, &[]);
        for phi in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(sample_mallows(&Ranking::identity(3), phi, &mut rng).is_err());
        }
        assert!(MixtureParams::new(1.2, 0.1, 0.1, 0.5, 0.5).is_err());
    }

    #[test]
    fn expert_fraction_concentrates() {
        let truth = Ranking::identity(5);
        let mut rng = seed::rng(3, &[]);
        let mp = params(0.2, 0.15, 0.9);
        let experts = (0..10_000).filter(|i| draw_voter(&mp, &truth, i.to_string(), &mut rng).unwrap().is_expert).count();
        assert!((experts as f64 / 1e4 - 0.2).abs() < 0.015);
        let all = params(1.0, 0.15, 0.9);
        assert!((0..100).all(|i| draw_voter(&all, &truth, i.to_string(), &mut rng).unwrap().is_expert));
    }

    #[test]
    fn experts_vote_closer_to_truth() {
        let truth = Ranking::identity(36);
        let mut rng = seed::rng(4, &[]);
        let mp = params(0.2, 0.15, 0.9);
        let (mut e, mut ne) = (Vec::new(), Vec::new());
        for i in 0..2000 {
            let d = draw_voter(&mp, &truth, i.to_string(), &mut rng).unwrap();
            let dist = d.observed.kendall_distance(&truth).unwrap() as f64;
            if d.is_expert { e.push(dist) } else { ne.push(dist) }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&e) < mean(&ne));
    }

    #[test]
    fn census_and_noiseless_votes() {
        let plan = SubsetPlan::make(36, 5, 6).unwrap();
        let truth = Ranking::identity(36);
        let mp = MixtureParams::new(0.5, 1e-9, 1e-9, 1e-9, 1e-9).unwrap();
        for tag in ElicitationFormat::STUDIED {
            let f: ElicitationFormat = tag.parse().unwrap();
            let (prof, draws) = synthesize_profile(&plan, &mp, &[f], 16, &truth, 7).unwrap();
            assert_eq!(prof.ballots.len(), 12 * 16);
            assert_eq!(draws.len(), 12 * 16);
            for b in &prof.ballots {
                let restricted = truth.restrict(plan.subset(b.subset_id).unwrap()).unwrap();
                assert_eq!(b.vote, Report::project_vote(f.vote, &restricted));
                if f.prediction == PredictionKind::None {
                    assert!(b.prediction.is_none());
                }
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let plan = SubsetPlan::make(12, 3, 2).unwrap();
        let truth = Ranking::identity(12);
        let mp = params(0.3, 0.2, 0.8);
        let f = [ElicitationFormat::rank_rank()];
        let a = synthesize_profile(&plan, &mp, &f, 5, &truth, 11).unwrap();
        let b = synthesize_profile(&plan, &mp, &f, 5, &truth, 11).unwrap();
        assert_eq!(a, b);
        let c = synthesize_profile(&plan, &mp, &f, 5, &truth, 12).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn prior_draws_are_valid() {
        let mut rng = seed::rng(5, &[]);
        for _ in 0..1000 {
            MixtureParams::from_prior(&mut rng).validate().unwrap();
        }
    }
}
