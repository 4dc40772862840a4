//! Acceptance criteria 1–9. Runs without the libtest harness so every
//! criterion reports a PASS/FAIL line even when an earlier one fails; exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/bruteforce.rs"]
mod bf;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use spvote_cli::experiment::{run_trial, TrialSpec};
use spvote_cli::Method;
use spvote_core::estimation::{fit, sample_summary, GridSpec};
use spvote_core::mallows::{sample_mallows, MixtureParams};
use spvote_core::metrics::{bootstrap_ci, kendall_tau, pairwise_hit_rate, spearman_rho, top_t_hit_rate};
use spvote_core::oracle::{self, ExactOracle, TheoryParams};
use spvote_core::sp::SpConfig;
use spvote_core::{rules, seed, ElicitationFormat, Ranking, Rule, SubsetPlan};

type Criterion = (&'static str, fn() -> Outcome, u64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn r(v: &[usize]) -> Ranking {
    Ranking::new(v.to_vec()).unwrap()
}

// ---------------------------------------------------------------- 1

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

fn c1_voting_rules() -> Outcome {
    let mut profile = Vec::new();
    for (n, order) in [(44, [A, B, C, D]), (24, [B, C, D, A]), (18, [C, D, B, A]), (14, [D, C, B, A])] {
        profile.extend(std::iter::repeat_n(r(&order), n));
    }
    let mut fails = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut timed = |f: &dyn Fn() -> Ranking| {
        let t = Instant::now();
        let out = f();
        slowest = slowest.max(t.elapsed());
        out
    };

    let (scores, borda) = rules::borda(&profile, 4, 0);
    if scores.scores != vec![132.0, 192.0, 174.0, 102.0] {
        fails.push(format!("borda scores {:?}", scores.scores));
    }
    let cases = [
        (Rule::Borda, vec![B, C, A, D]),
        (Rule::Copeland, vec![B, C, D, A]),
        (Rule::Maximin, vec![B, A, C, D]),
        (Rule::Schulze, vec![B, C, D, A]),
    ];
    for (rule, want) in cases {
        let got = timed(&|| rules::aggregate(rule, &profile, 4, 0).unwrap());
        if got.order() != want.as_slice() {
            fails.push(format!("{rule} gave {got}"));
        }
    }
    if borda.order() != [B, C, A, D] {
        fails.push(format!("borda ranking {borda}"));
    }
    if slowest >= Duration::from_millis(1) {
        fails.push(format!("slowest rule took {slowest:?}"));
    }
    let detail = format!("Borda (132,192,174,102), four rankings exact; slowest {slowest:?}");
    if fails.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, fails.join("; "))
    }
}

// ---------------------------------------------------------------- 2

fn c2_metrics() -> Outcome {
    let truth = r(&[0, 1, 2, 3]);
    let pred = r(&[1, 0, 3, 2]);
    let hits: Vec<f64> = (1..=3).map(|d| pairwise_hit_rate(&pred, &truth, d).unwrap()).collect();
    let tops: Vec<f64> = (1..=4).map(|t| top_t_hit_rate(&pred, &truth, t).unwrap()).collect();
    let tau = kendall_tau(&pred, &truth).unwrap();
    let rho = spearman_rho(&pred, &truth).unwrap();
    let pass = hits == [1.0 / 3.0, 1.0, 1.0] && tops == [0.0, 1.0, 2.0 / 3.0, 1.0] && tau == 1.0 / 3.0 && rho == 0.6;
    outcome(pass, format!("hit rates {hits:?}, top-t {tops:?}, tau {tau}, rho {rho}"))
}

// ---------------------------------------------------------------- 3

fn c3_mallows() -> Outcome {
    let mut worst_rel = 0.0f64;
    for m in 1..=5 {
        for i in 1..=10 {
            let phi = i as f64 / 10.0;
            let want = bf::z(phi, m);
            let got = oracle::mallows_normalizer(phi, m).unwrap();
            worst_rel = worst_rel.max((got - want).abs() / want);
        }
    }
    let draws = 100_000;
    let phi = 0.5;
    let mut worst_z = 0.0f64;
    for m in [3, 4] {
        let id = Ranking::identity(m);
        let perms = bf::perms(m);
        let mut counts = vec![0usize; perms.len()];
        let mut rng = seed::rng(2024, &[m as u64]);
        for _ in 0..draws {
            counts[oracle::perm_index(sample_mallows(&id, phi, &mut rng).unwrap().order())] += 1;
        }
        let zm = bf::z(phi, m);
        let idv: Vec<usize> = (0..m).collect();
        for p in &perms {
            let prob = phi.powi(bf::dist(p, &idv) as i32) / zm;
            let sd = (draws as f64 * prob * (1.0 - prob)).sqrt();
            let z = (counts[oracle::perm_index(p)] as f64 - draws as f64 * prob).abs() / sd;
            worst_z = worst_z.max(z);
        }
    }
    outcome(
        worst_rel <= 1e-12 && worst_z <= 3.0,
        format!("max Z relative error {worst_rel:.2e}; max |z| over RIM cells {worst_z:.2} (phi=0.5, 1e5 draws)"),
    )
}

// ---------------------------------------------------------------- 4

fn c4_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut sp_mismatch = Vec::new();
    let mut points = 0;
    for (m, k) in [(2, 2), (3, 2), (4, 2)] {
        for p in [0.2, 0.5, 0.8] {
            for phi_e in [0.1, 0.3, 0.5] {
                for phi_ne in [0.6, 0.8, 1.0] {
                    points += 1;
                    let tp = TheoryParams { p, phi_e, phi_ne, k, m, delta: 0.1 };
                    let o = ExactOracle::new(tp).unwrap();
                    let mix = bf::Mix { p, phi_e, phi_ne, m, k };
                    let parts = mix.partials();
                    for (i, si) in parts.iter().enumerate() {
                        for (t, want) in mix.posterior(si).iter().enumerate() {
                            worst = worst.max((o.posterior_partial(i)[t] - want).abs());
                        }
                        for (s, sp) in parts.iter().enumerate() {
                            worst = worst.max((o.pr_o(s, i) - mix.pr_o(sp, si)).abs());
                        }
                    }
                    let vbar = mix.vbar();
                    let (f, g) = (o.population_f(), o.population_g());
                    let got = oracle::prediction_normalized_votes(&f, &g).unwrap();
                    for (a, b) in got.iter().zip(&vbar) {
                        worst = worst.max((a - b).abs());
                    }
                    let top = vbar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let winner = oracle::sp_full(&f, &g, 0).unwrap();
                    if (vbar[winner] - top).abs() > 1e-10 {
                        sp_mismatch.push(format!("{tp:?}"));
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-10 && sp_mismatch.is_empty(),
        format!("{points} instances, max abs error {worst:.2e}, sp_full disagreements {}", sp_mismatch.len()),
    )
}

// ---------------------------------------------------------------- 5, 6

fn theory_grid() -> Vec<TheoryParams> {
    let mut out = Vec::new();
    for k in [2, 3] {
        for m in [4, 5, 6] {
            for p in [0.6, 0.75, 0.9, 0.97, 0.99] {
                for phi_e in [0.05, 0.1, 0.2] {
                    for phi_ne in [0.3, 0.6, 0.9] {
                        out.push(TheoryParams { p, phi_e, phi_ne, k, m, delta: 0.1 });
                    }
                }
            }
        }
    }
    out
}

fn c5_theory() -> Outcome {
    let grid = theory_grid();
    let mut passing = 0;
    let mut counter = Vec::new();
    for tp in &grid {
        if oracle::check_assumption(tp).unwrap().pass {
            passing += 1;
            if !oracle::check_separation(tp).unwrap() {
                counter.push(*tp);
            }
        }
    }
    outcome(
        grid.len() >= 100 && passing > 0 && counter.is_empty(),
        format!("{} points, {passing} pass the assumption, {} counterexamples", grid.len(), counter.len()),
    )
}

fn c6_sample_complexity() -> Outcome {
    let points: Vec<TheoryParams> = theory_grid()
        .into_iter()
        .filter(|tp| tp.k == 2 && oracle::check_assumption(tp).unwrap().pass)
        .step_by(17)
        .collect();
    let mut rates = Vec::new();
    let mut pass = points.len() >= 5;
    for (i, tp) in points.iter().enumerate() {
        let n = oracle::sample_complexity(tp).unwrap() as usize;
        let s = oracle::recovery_experiment(tp, n, 200, 100 + i as u64).unwrap();
        pass &= s.sp_rate >= 1.0 - tp.delta;
        rates.push(format!("n={n}:{:.3}", s.sp_rate));
    }
    outcome(pass, format!("{} points, rates [{}] vs 0.9", points.len(), rates.join(", ")))
}

// ---------------------------------------------------------------- 7

fn c7_sp_vs_baseline() -> Outcome {
    let spec = TrialSpec {
        plan: SubsetPlan::make(36, 5, 6).unwrap(),
        params: MixtureParams::new(0.2, 0.15, 0.7, 0.9, 0.9).unwrap(),
        formats: vec![ElicitationFormat::rank_rank()],
        n_per_subset: 16,
        methods: vec![Method::Copeland, Method::PartialSp, Method::AggregatedSp],
        rule: Rule::Copeland,
        sp: SpConfig::default(),
    };
    let mut taus = [Vec::new(), Vec::new(), Vec::new()];
    for s in 0..50 {
        let t = run_trial(&spec, s).unwrap();
        for (i, rk) in t.rankings.iter().enumerate() {
            taus[i].push(kendall_tau(rk, &t.truth).unwrap());
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (cop, psp, asp) = (mean(&taus[0]), mean(&taus[1]), mean(&taus[2]));
    let (_, lo, hi) = bootstrap_ci(&taus[1], 1000, 0.95, 7).unwrap();
    let pass = psp - cop >= 0.05 && !(lo..=hi).contains(&cop) && lo > cop && psp >= asp;
    outcome(
        pass,
        format!(
            "mean tau Partial-SP {psp:.4} [{lo:.4}, {hi:.4}], Copeland {cop:.4} (gap {:+.4}, need >= +0.05), Aggregated-SP {asp:.4}",
            psp - cop
        ),
    )
}

// ---------------------------------------------------------------- 8

fn c8_estimation() -> Outcome {
    let truth = MixtureParams::new(0.2, 0.15, 0.7, 0.9, 0.9).unwrap();
    let grid = GridSpec::default();
    let mut good = 0;
    for rep in 0..20 {
        let s = sample_summary(&truth, 400, rep).unwrap();
        let f = fit(&s, &grid, true).unwrap().params;
        let ok = (f.p - truth.p).abs() <= 0.1
            && (f.phi_e_votes - truth.phi_e_votes).abs() <= 0.15
            && (f.phi_e_predictions - truth.phi_e_predictions).abs() <= 0.15
            && (f.phi_ne_votes - truth.phi_ne_votes).abs() <= 0.15
            && (f.phi_ne_predictions - truth.phi_ne_predictions).abs() <= 0.15;
        good += ok as usize;
    }
    outcome(good >= 18, format!("{good}/20 replications within tolerance (need 18)"))
}

// ---------------------------------------------------------------- 9

fn spvote(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_spvote"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Every file in `a` exists in `b` with the same bytes, and vice versa.
fn same_tree(a: &Path, b: &Path) -> bool {
    let list = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    la == lb && la.iter().all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap())
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let p = |s: &str| root.join(s).display().to_string();
    let sim = p("simulate");
    let ballots = format!("{sim}/ballots.jsonl");
    let truth = format!("{sim}/truth.json");
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate".into(), "--seed".into(), "7".into()]),
        ("aggregate-psp", vec!["aggregate".into(), "--ballots".into(), ballots.clone(), "--method".into(), "partial-sp".into()]),
        ("aggregate-asp", vec!["aggregate".into(), "--ballots".into(), ballots.clone(), "--method".into(), "aggregated-sp".into()]),
        ("evaluate", vec!["evaluate".into(), "--pred".into(), format!("{}/ranking.json", p("aggregate-psp")), "--truth".into(), truth.clone()]),
        ("estimate", vec!["estimate".into(), "--ballots".into(), ballots.clone(), "--truth".into(), truth.clone()]),
        (
            "verify-theory",
            ["verify-theory", "--k", "2", "--m", "4,5", "--p", "0.9", "--phi-e", "0.1", "--phi-ne", "0.6", "--trials", "50"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "sweep",
            ["sweep", "--runs", "3", "--formats", "rank-rank,top-top", "--resamples", "200"].map(String::from).to_vec(),
        ),
        ("report", vec!["report".into(), "--dir".into(), p("sweep")]),
    ];
    let mut bad = Vec::new();
    for (name, args) in &runs {
        let first = p(name);
        let again = p(&format!("{name}.again"));
        let replayed = p(&format!("{name}.replay"));
        let mut argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let ok = spvote(&[argv.clone(), vec!["--out", &first]].concat()) && {
            argv.extend(["--out", &again]);
            spvote(&argv)
        } && spvote(&["replay", "--manifest", &format!("{first}/manifest.json"), "--out", &replayed]);
        if !ok || !same_tree(Path::new(&first), Path::new(&again)) || !same_tree(Path::new(&first), Path::new(&replayed)) {
            bad.push(*name);
        }
    }
    outcome(bad.is_empty(), format!("{} commands re-run and replayed; differing: {bad:?}", runs.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("voting-rule golden values", c1_voting_rules, 1),
        ("metric golden values", c2_metrics, 1),
        ("Mallows normalizer and sampler", c3_mallows, 30),
        ("exact oracle vs enumeration", c4_oracle, 60),
        ("assumption implies separation", c5_theory, 300),
        ("sample-complexity bound", c6_sample_complexity, 600),
        ("Partial-SP beats Copeland", c7_sp_vs_baseline, 600),
        ("estimation self-consistency", c8_estimation, 900),
        ("determinism via manifests", c9_determinism, 300),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let pass = res.pass && secs <= *budget as f64;
        failed += !pass as usize;
        println!(
            "criterion {}: {} - {name}: {} ({secs:.1}s, budget {budget}s)",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            res.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
