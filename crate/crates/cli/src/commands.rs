//! Subcommand configurations. Field names double as config-file keys and
//! (with dashes) as flag names.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spvote_core::estimation::{self, DistanceSummary, GridSpec};
use spvote_core::mallows::MixtureParams;
use spvote_core::metrics::{self, MetricReport, MetricValue};
use spvote_core::oracle::{self, TheoryParams, MAX_K, MAX_M};
use spvote_core::seed;
use spvote_core::sp::SpConfig;
use spvote_core::{io, Ballot, ElicitationFormat, Error, Profile, Ranking, Rule, SubsetPlan};

use crate::experiment::{self, TrialSpec};
use crate::{absolute, read_input, write_text, CmdResult, Command, Fail, Method};

pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: &str = "run_id,method,format,metric,d_or_t,estimate,ci_low,ci_high,n_samples,n_resamples";
pub const METRIC_NAMES: [&str; 4] = ["kendall_tau", "spearman_rho", "pairwise_hit_rate", "top_t_hit_rate"];
pub const REPORT_HEADER: &str = "run_id,method,format,metric,d_or_t,estimate,ci_low,ci_high,source";
pub const THEORY_HEADER: &str = "k,m,p,phi_e,phi_ne,delta,assumption_pass,assumption_ratio,separation_pass,n_bound,empirical_n,empirical_rate,majority_rate";

/// Seed tag for mixture parameters drawn from the generation prior.
const PRIOR_TAG: u64 = 0x5052;

fn load_ballots(path: &Path) -> CmdResult<Vec<Ballot>> {
    let text = read_input(path)?;
    let ballots = io::read_ballots(text.as_bytes()).map_err(|e| Fail::data(anyhow!("{}: {e}", path.display())))?;
    if ballots.is_empty() {
        return Err(Fail::data(anyhow!("{}: {}", path.display(), Error::EmptyProfile)));
    }
    Ok(ballots)
}

/// Plan implied by the ballots themselves: subset `j` is every id seen on a
/// ballot for `j`. Exact for rank formats, a guess for top/approval ones.
fn infer_plan(ballots: &[Ballot]) -> CmdResult<SubsetPlan> {
    let n = ballots.iter().map(|b| b.subset_id).max().map_or(0, |j| j + 1);
    let mut subsets = vec![BTreeSet::new(); n];
    for b in ballots {
        subsets[b.subset_id].extend(b.vote.ids());
        if let Some(p) = &b.prediction {
            subsets[b.subset_id].extend(p.ids());
        }
    }
    if let Some(j) = subsets.iter().position(BTreeSet::is_empty) {
        return Err(Fail::data(anyhow!("no ballot for subset {j}; pass a plan file")));
    }
    let m = subsets.iter().flatten().max().map_or(0, |&a| a + 1);
    SubsetPlan::from_subsets(m, subsets.into_iter().map(|s| s.into_iter().collect()).collect()).map_err(Fail::data)
}

fn load_profile(ballots: &Path, plan: Option<&Path>) -> CmdResult<Profile> {
    let ballots = load_ballots(ballots)?;
    let plan = match plan {
        Some(p) => io::parse_plan(&read_input(p)?).map_err(|e| Fail::data(anyhow!("{}: {e}", p.display())))?,
        None => infer_plan(&ballots)?,
    };
    Profile::new(plan, ballots).map_err(Fail::data)
}

fn load_ranking(path: &Path) -> CmdResult<Ranking> {
    io::parse_ranking(&read_input(path)?).map_err(|e| Fail::data(anyhow!("{}: {e}", path.display())))
}

/// `plan.json` next to the ballot file, if present.
fn sibling_plan(ballots: &Path) -> Option<PathBuf> {
    let p = ballots.parent()?.join("plan.json");
    p.is_file().then_some(p)
}

fn mixture(p: f64, e_v: f64, e_p: f64, ne_v: f64, ne_p: f64) -> CmdResult<MixtureParams> {
    MixtureParams::new(p, e_v, e_p, ne_v, ne_p).map_err(Fail::config)
}

fn check_label(what: &str, s: &str) -> CmdResult {
    if s.contains([',', '\n', '\r', '"']) {
        return Err(Fail::config(anyhow!("{what} {s:?} may not contain commas, quotes or newlines")));
    }
    Ok(())
}

fn check_metric_names(names: &[String]) -> CmdResult {
    match names.iter().find(|n| !METRIC_NAMES.contains(&n.as_str())) {
        Some(bad) => Err(Fail::config(anyhow!("unknown metric '{bad}' (expected one of {})", METRIC_NAMES.join(", ")))),
        None => Ok(()),
    }
}

/// Bootstrap summary of each `(metric, d_or_t)` across samples. Every sample
/// must list the same metrics, i.e. rank the same number of alternatives.
fn metric_reports(per_sample: &[Vec<MetricValue>], keep: &[String], resamples: usize, seed: u64) -> CmdResult<Vec<MetricReport>> {
    let keys: Vec<_> = per_sample[0].iter().map(|&(name, d, _)| (name, d)).collect();
    if per_sample.iter().any(|s| s.len() != keys.len() || s.iter().zip(&keys).any(|(v, k)| (v.0, v.1) != *k)) {
        return Err(Fail::data(anyhow!("rankings of different lengths cannot be summarized together")));
    }
    keys.iter()
        .enumerate()
        .filter(|(_, (name, _))| keep.is_empty() || keep.iter().any(|k| k == name))
        .map(|(i, &(name, d))| {
            let samples: Vec<f64> = per_sample.iter().map(|s| s[i].2).collect();
            Ok(MetricReport::from_samples(name, d, &samples, resamples, seed::derive(seed, &[i as u64]))?)
        })
        .collect()
}

fn metrics_lines(buf: &mut String, run_id: &str, method: &str, format: &str, reports: &[MetricReport], n: usize) {
    for r in reports {
        let d = r.d_or_t.map_or_else(String::new, |d| d.to_string());
        writeln!(
            buf,
            "{run_id},{method},{format},{},{d},{},{},{},{n},{}",
            r.metric, r.estimate, r.ci_low, r.ci_high, r.n_resamples
        )
        .unwrap();
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub m: usize,
    pub k: usize,
    pub s: usize,
    /// Ballots per subset.
    pub n: usize,
    /// One format for all subsets, or one per subset.
    pub format: Vec<ElicitationFormat>,
    pub p: f64,
    pub phi_e_votes: f64,
    pub phi_e_predictions: f64,
    pub phi_ne_votes: f64,
    pub phi_ne_predictions: f64,
    /// Draw the mixture from the generation prior instead of the fields above.
    pub prior: bool,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            m: 36,
            k: 5,
            s: 6,
            n: 16,
            format: vec![ElicitationFormat::rank_rank()],
            p: 0.2,
            phi_e_votes: 0.15,
            phi_e_predictions: 0.7,
            phi_ne_votes: 0.9,
            phi_ne_predictions: 0.9,
            prior: false,
            seed: 0,
        }
    }
}

impl SimulateConfig {
    pub fn params(&self) -> CmdResult<MixtureParams> {
        if self.prior {
            return Ok(MixtureParams::from_prior(&mut seed::rng(self.seed, &[PRIOR_TAG])));
        }
        mixture(self.p, self.phi_e_votes, self.phi_e_predictions, self.phi_ne_votes, self.phi_ne_predictions)
    }
}

impl Command for SimulateConfig {
    const NAME: &'static str = "simulate";

    fn run(&self, out: &Path) -> CmdResult {
        let plan = SubsetPlan::make(self.m, self.k, self.s).map_err(Fail::config)?;
        let params = self.params()?;
        let inst = experiment::draw_instance(&plan, &params, &self.format, self.n, self.seed).map_err(Fail::config)?;

        let mut ballots = Vec::new();
        io::write_ballots(&mut ballots, &inst.profile.ballots).expect("in-memory write");
        write_text(out, "ballots.jsonl", &String::from_utf8(ballots).expect("utf-8 json"))?;
        write_text(out, "truth.json", &format!("{}\n", io::ranking_to_json(&inst.truth)))?;
        write_text(out, "plan.json", &format!("{}\n", serde_json::to_string_pretty(&inst.profile.plan).unwrap()))?;
        write_text(out, "params.json", &format!("{}\n", serde_json::to_string_pretty(&params).unwrap()))?;
        let mut voters = String::from("voter_id,subset_id,is_expert\n");
        for (b, d) in inst.profile.ballots.iter().zip(&inst.draws) {
            writeln!(voters, "{},{},{}", d.voter_id, b.subset_id, d.is_expert).unwrap();
        }
        write_text(out, "voters.csv", &voters)?;
        println!("wrote {} ballots over {} subsets to {}", inst.profile.ballots.len(), plan.len(), out.display());
        Ok(())
    }
}

// --------------------------------------------------------------- aggregate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregateConfig {
    pub ballots: PathBuf,
    /// Defaults to `plan.json` beside the ballots, else inferred from them.
    pub plan: Option<PathBuf>,
    pub method: Method,
    /// Inner rule of the SP variants.
    pub rule: Rule,
    pub alpha: f64,
    pub beta: f64,
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for AggregateConfig {
    fn default() -> Self {
        let sp = SpConfig::default();
        Self {
            ballots: PathBuf::new(),
            plan: None,
            method: Method::PartialSp,
            rule: Rule::Copeland,
            alpha: sp.alpha,
            beta: sp.beta,
            smoothing: sp.smoothing,
            seed: 0,
        }
    }
}

impl AggregateConfig {
    pub fn sp(&self) -> SpConfig {
        SpConfig { alpha: self.alpha, beta: self.beta, tie_seed: self.seed, smoothing: self.smoothing }
    }
}

impl Command for AggregateConfig {
    const NAME: &'static str = "aggregate";

    fn normalize(&mut self) -> CmdResult {
        if self.ballots.as_os_str().is_empty() {
            return Err(Fail::config(anyhow!("no ballot file given")));
        }
        self.ballots = absolute(&self.ballots)?;
        self.plan = match self.plan.take() {
            Some(p) => Some(absolute(&p)?),
            None => sibling_plan(&self.ballots),
        };
        Ok(())
    }

    fn run(&self, out: &Path) -> CmdResult {
        let cfg = self.sp();
        cfg.validate().map_err(Fail::config)?;
        let profile = load_profile(&self.ballots, self.plan.as_deref())?;
        let (ranking, outcome) = self.method.run(&profile, self.rule, &cfg)?;
        write_text(out, "ranking.json", &format!("{}\n", io::ranking_to_json(&ranking)))?;
        if let Some(o) = outcome {
            let mut csv = Vec::new();
            io::write_diagnostics(&mut csv, &o.diagnostics).expect("in-memory write");
            write_text(out, "diagnostics.csv", &String::from_utf8(csv).expect("utf-8 csv"))?;
        }
        let labels: Vec<String> = ranking.order().iter().map(|&a| spvote_core::model::label(a)).collect();
        println!("{}: {}", self.method, labels.join(" > "));
        Ok(())
    }
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Predicted rankings; each is one bootstrap sample.
    pub pred: Vec<PathBuf>,
    /// One truth for all predictions, or one per prediction.
    pub truth: Vec<PathBuf>,
    /// Metric names to keep; empty keeps all.
    pub metrics: Vec<String>,
    pub resamples: usize,
    pub seed: u64,
    pub run_id: String,
    pub method: String,
    pub format: String,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            pred: Vec::new(),
            truth: Vec::new(),
            metrics: Vec::new(),
            resamples: metrics::DEFAULT_RESAMPLES,
            seed: 0,
            run_id: "run".into(),
            method: String::new(),
            format: String::new(),
        }
    }
}

impl Command for EvaluateConfig {
    const NAME: &'static str = "evaluate";

    fn normalize(&mut self) -> CmdResult {
        self.pred = self.pred.iter().map(|p| absolute(p)).collect::<CmdResult<_>>()?;
        self.truth = self.truth.iter().map(|p| absolute(p)).collect::<CmdResult<_>>()?;
        Ok(())
    }

    fn run(&self, out: &Path) -> CmdResult {
        if self.pred.is_empty() || self.truth.is_empty() {
            return Err(Fail::config(anyhow!("need at least one prediction and one truth file")));
        }
        if self.truth.len() != 1 && self.truth.len() != self.pred.len() {
            return Err(Fail::config(anyhow!(
                "{} truth files for {} predictions; give one or one per prediction",
                self.truth.len(),
                self.pred.len()
            )));
        }
        check_metric_names(&self.metrics)?;
        for (what, s) in [("run id", &self.run_id), ("method label", &self.method), ("format label", &self.format)] {
            check_label(what, s)?;
        }
        let truths = self.truth.iter().map(|p| load_ranking(p)).collect::<CmdResult<Vec<_>>>()?;
        let preds = self.pred.iter().map(|p| load_ranking(p)).collect::<CmdResult<Vec<_>>>()?;
        let per_sample = preds
            .iter()
            .enumerate()
            .map(|(i, p)| metrics::all_metrics(p, &truths[i % truths.len()]))
            .collect::<spvote_core::Result<Vec<_>>>()?;
        let reports = metric_reports(&per_sample, &self.metrics, self.resamples, self.seed)?;
        let mut csv = format!("{METRICS_HEADER}\n");
        metrics_lines(&mut csv, &self.run_id, &self.method, &self.format, &reports, preds.len());
        write_text(out, METRICS_FILE, &csv)?;
        println!("wrote {} metric rows to {}", reports.len(), out.join(METRICS_FILE).display());
        Ok(())
    }
}

// ---------------------------------------------------------------- estimate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub ballots: PathBuf,
    pub truth: PathBuf,
    pub plan: Option<PathBuf>,
    /// MAP with the fitting priors instead of plain maximum likelihood.
    pub priors: bool,
    /// Divide each Kendall distance by its maximum `k(k−1)/2`.
    pub normalize: bool,
    pub grid_step: f64,
    pub p_max: f64,
    pub phi_max: f64,
    pub coarse_stride: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            ballots: PathBuf::new(),
            truth: PathBuf::new(),
            plan: None,
            priors: false,
            normalize: true,
            grid_step: 0.02,
            p_max: 0.98,
            phi_max: 1.5,
            coarse_stride: 5,
        }
    }
}

/// `step, 2·step, …` up to `max`, rounded to shed float noise.
fn axis(step: f64, max: f64) -> Vec<f64> {
    if !(step > 0.0 && step.is_finite() && max.is_finite()) {
        return Vec::new();
    }
    (1..).map(|i| (i as f64 * step * 1e9).round() / 1e9).take_while(|&x| x <= max + 1e-9).collect()
}

impl EstimateConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec { p: axis(self.grid_step, self.p_max), phi: axis(self.grid_step, self.phi_max), coarse_stride: self.coarse_stride }
    }
}

impl Command for EstimateConfig {
    const NAME: &'static str = "estimate";

    fn normalize(&mut self) -> CmdResult {
        if self.ballots.as_os_str().is_empty() || self.truth.as_os_str().is_empty() {
            return Err(Fail::config(anyhow!("estimate needs both a ballot file and a truth file")));
        }
        self.ballots = absolute(&self.ballots)?;
        self.truth = absolute(&self.truth)?;
        self.plan = match self.plan.take() {
            Some(p) => Some(absolute(&p)?),
            None => sibling_plan(&self.ballots),
        };
        Ok(())
    }

    fn run(&self, out: &Path) -> CmdResult {
        let grid = self.grid();
        let truth = load_ranking(&self.truth)?;
        let profile = load_profile(&self.ballots, self.plan.as_deref())?;
        let summary = DistanceSummary::from_profile(&profile, &truth, self.normalize).map_err(Fail::data)?;
        let fit = estimation::fit(&summary, &grid, self.priors)?;
        write_text(out, "fit.json", &format!("{}\n", serde_json::to_string_pretty(&fit).unwrap()))?;
        let mut csv = String::from("param,value,objective\n");
        for c in &fit.profile_curves {
            for (v, o) in c.values.iter().zip(&c.objective) {
                writeln!(csv, "{},{v},{o}", c.param).unwrap();
            }
        }
        write_text(out, "slices.csv", &csv)?;
        let f = &fit.params;
        println!(
            "p={} phi_e_votes={} phi_e_predictions={} phi_ne_votes={} phi_ne_predictions={} ({} voters, {})",
            f.p,
            f.phi_e_votes,
            f.phi_e_predictions,
            f.phi_ne_votes,
            f.phi_ne_predictions,
            summary.len(),
            if self.priors { "MAP" } else { "MLE" }
        );
        Ok(())
    }
}

// ----------------------------------------------------------- verify-theory

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyTheoryConfig {
    pub k: Vec<usize>,
    pub m: Vec<usize>,
    pub p: Vec<f64>,
    pub phi_e: Vec<f64>,
    pub phi_ne: Vec<f64>,
    pub delta: Vec<f64>,
    /// Recovery trials per assumption-passing point; 0 skips the simulation.
    pub trials: usize,
    /// Points whose bound exceeds this are not simulated.
    pub max_n: u64,
    pub seed: u64,
}

impl Default for VerifyTheoryConfig {
    fn default() -> Self {
        Self {
            k: vec![2, 3],
            m: vec![4, 5, 6],
            p: vec![0.6, 0.75, 0.9, 0.97, 0.99],
            phi_e: vec![0.05, 0.1, 0.2],
            phi_ne: vec![0.3, 0.6, 0.9],
            delta: vec![0.1],
            trials: 200,
            max_n: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct TheoryRow {
    tp: TheoryParams,
    assumption: oracle::AssumptionCheck,
    separation: bool,
    n_bound: u64,
    recovery: Option<oracle::RecoveryStats>,
}

impl VerifyTheoryConfig {
    /// Every valid combination; pairs with `k > m` or `φ_E > φ_NE` are skipped.
    pub fn points(&self) -> CmdResult<Vec<TheoryParams>> {
        let mut out = Vec::new();
        for &k in &self.k {
            for &m in &self.m {
                for &p in &self.p {
                    for &phi_e in &self.phi_e {
                        for &phi_ne in &self.phi_ne {
                            for &delta in &self.delta {
                                if k > m || phi_e > phi_ne {
                                    continue;
                                }
                                let tp = TheoryParams { p, phi_e, phi_ne, k, m, delta };
                                tp.validate().map_err(Fail::config)?;
                                if m > MAX_M || k > MAX_K {
                                    return Err(Error::InstanceTooLarge(format!(
                                        "m = {m}, k = {k} (limits m <= {MAX_M}, k <= {MAX_K})"
                                    ))
                                    .into());
                                }
                                out.push(tp);
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Fail::config(anyhow!("the parameter grid is empty")));
        }
        Ok(out)
    }
}

impl Command for VerifyTheoryConfig {
    const NAME: &'static str = "verify-theory";

    fn run(&self, out: &Path) -> CmdResult {
        let points = self.points()?;
        let rows = points
            .par_iter()
            .enumerate()
            .map(|(i, tp)| {
                let assumption = oracle::check_assumption(tp)?;
                let separation = oracle::check_separation(tp)?;
                let n_bound = oracle::sample_complexity(tp)?;
                let recovery = if assumption.pass && self.trials > 0 && n_bound <= self.max_n {
                    Some(oracle::recovery_experiment(tp, n_bound as usize, self.trials, seed::derive(self.seed, &[i as u64]))?)
                } else {
                    None
                };
                Ok(TheoryRow { tp: *tp, assumption, separation, n_bound, recovery })
            })
            .collect::<spvote_core::Result<Vec<_>>>()?;

        let mut csv = format!("{THEORY_HEADER}\n");
        for r in &rows {
            let t = &r.tp;
            let (en, er, mr) = r.recovery.map_or((String::new(), String::new(), String::new()), |s| {
                (s.n.to_string(), s.sp_rate.to_string(), s.majority_rate.to_string())
            });
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{en},{er},{mr}",
                t.k, t.m, t.p, t.phi_e, t.phi_ne, t.delta, r.assumption.pass, r.assumption.ratio, r.separation, r.n_bound
            )
            .unwrap();
        }
        write_text(out, "theory.csv", &csv)?;

        let passing: Vec<_> = rows.iter().filter(|r| r.assumption.pass).collect();
        let counterexamples = passing.iter().filter(|r| !r.separation).count();
        let simulated: Vec<_> = passing.iter().filter_map(|r| r.recovery.map(|s| (s, r.tp.delta))).collect();
        let below = simulated.iter().filter(|(s, delta)| s.sp_rate < 1.0 - delta).count();
        println!(
            "{} points, {} pass the assumption, {counterexamples} separation counterexamples, {} simulated ({below} below 1-delta)",
            rows.len(),
            passing.len(),
            simulated.len()
        );
        Ok(())
    }
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub m: usize,
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub formats: Vec<ElicitationFormat>,
    pub methods: Vec<Method>,
    pub rule: Rule,
    /// Run `r` uses seed `seed + r`.
    pub runs: usize,
    pub seed: u64,
    pub p: f64,
    pub phi_e_votes: f64,
    pub phi_e_predictions: f64,
    pub phi_ne_votes: f64,
    pub phi_ne_predictions: f64,
    pub alpha: f64,
    pub beta: f64,
    pub smoothing: f64,
    pub resamples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let sim = SimulateConfig::default();
        let sp = SpConfig::default();
        Self {
            m: sim.m,
            k: sim.k,
            s: sim.s,
            n: sim.n,
            formats: ElicitationFormat::studied(),
            methods: vec![Method::Copeland, Method::PartialSp, Method::AggregatedSp],
            rule: Rule::Copeland,
            runs: 50,
            seed: 0,
            p: sim.p,
            phi_e_votes: sim.phi_e_votes,
            phi_e_predictions: sim.phi_e_predictions,
            phi_ne_votes: sim.phi_ne_votes,
            phi_ne_predictions: sim.phi_ne_predictions,
            alpha: sp.alpha,
            beta: sp.beta,
            smoothing: sp.smoothing,
            resamples: metrics::DEFAULT_RESAMPLES,
        }
    }
}

impl Command for SweepConfig {
    const NAME: &'static str = "sweep";

    fn run(&self, out: &Path) -> CmdResult {
        if self.runs == 0 || self.formats.is_empty() || self.methods.is_empty() {
            return Err(Fail::config(anyhow!("a sweep needs at least one run, format and method")));
        }
        let plan = SubsetPlan::make(self.m, self.k, self.s).map_err(Fail::config)?;
        let params =
            mixture(self.p, self.phi_e_votes, self.phi_e_predictions, self.phi_ne_votes, self.phi_ne_predictions)?;
        let sp = SpConfig { alpha: self.alpha, beta: self.beta, tie_seed: 0, smoothing: self.smoothing };
        sp.validate().map_err(Fail::config)?;

        let mut runs_csv = String::from("format,method,seed,kendall_tau,spearman_rho\n");
        let mut metrics_csv = format!("{METRICS_HEADER}\n");
        for (fi, &format) in self.formats.iter().enumerate() {
            format.check_subset_size(self.k).map_err(Fail::config)?;
            let spec = TrialSpec {
                plan: plan.clone(),
                params,
                formats: vec![format],
                n_per_subset: self.n,
                methods: self.methods.clone(),
                rule: self.rule,
                sp,
            };
            let trials = (0..self.runs as u64)
                .into_par_iter()
                .map(|r| experiment::run_trial(&spec, self.seed.wrapping_add(r)))
                .collect::<spvote_core::Result<Vec<_>>>()?;
            for (mi, method) in self.methods.iter().enumerate() {
                let per_sample = trials
                    .iter()
                    .map(|t| metrics::all_metrics(&t.rankings[mi], &t.truth))
                    .collect::<spvote_core::Result<Vec<_>>>()?;
                for (t, values) in trials.iter().zip(&per_sample) {
                    writeln!(runs_csv, "{format},{method},{},{},{}", t.seed, values[0].2, values[1].2).unwrap();
                }
                let boot_seed = seed::derive(self.seed, &[fi as u64, mi as u64]);
                let reports = metric_reports(&per_sample, &[], self.resamples, boot_seed)?;
                metrics_lines(&mut metrics_csv, "sweep", method.name(), &format.tag(), &reports, trials.len());
                println!("{format} {method}: mean kendall_tau {:.4}", reports[0].estimate);
            }
        }
        write_text(out, "runs.csv", &runs_csv)?;
        write_text(out, METRICS_FILE, &metrics_csv)
    }
}

// ------------------------------------------------------------------ report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Directory searched recursively for metric CSVs.
    pub dir: PathBuf,
    /// Metric names to keep; empty keeps all.
    pub metrics: Vec<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("."), metrics: Vec::new() }
    }
}

fn csv_files(dir: &Path, found: &mut Vec<PathBuf>) -> CmdResult {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Fail::config(anyhow!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            csv_files(&p, found)?;
        } else if p.extension().is_some_and(|x| x == "csv") {
            found.push(p);
        }
    }
    Ok(())
}

impl Command for ReportConfig {
    const NAME: &'static str = "report";

    fn normalize(&mut self) -> CmdResult {
        self.dir = absolute(&self.dir)?;
        Ok(())
    }

    fn run(&self, out: &Path) -> CmdResult {
        check_metric_names(&self.metrics)?;
        if !self.dir.is_dir() {
            return Err(Fail::config(anyhow!("{} is not a directory", self.dir.display())));
        }
        let mut files = Vec::new();
        csv_files(&self.dir, &mut files)?;
        let mut csv = format!("{REPORT_HEADER}\n");
        let mut rows = 0;
        for f in &files {
            let text = read_input(f)?;
            let mut lines = text.lines();
            if lines.next() != Some(METRICS_HEADER) {
                continue;
            }
            let source = f.strip_prefix(&self.dir).unwrap_or(f).display().to_string();
            for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != METRICS_HEADER.split(',').count() {
                    return Err(Fail::data(anyhow!("{source} line {}: expected 10 fields", i + 2)));
                }
                if !self.metrics.is_empty() && !self.metrics.iter().any(|m| m == fields[3]) {
                    continue;
                }
                writeln!(csv, "{},{source}", fields[..8].join(",")).unwrap();
                rows += 1;
            }
        }
        if rows == 0 {
            return Err(Fail::config(anyhow!("no metric rows found under {}", self.dir.display())));
        }
        write_text(out, "report.csv", &csv)?;
        println!("wrote {rows} rows to {}", out.join("report.csv").display());
        Ok(())
    }
}
