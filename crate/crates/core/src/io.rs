//! Wire formats: JSON-Lines ballots, plan and ranking files, diagnostics CSV.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::{label, AltId, Ballot, ElicitationFormat, PredictionKind, Ranking, Report, VoteKind};
use crate::plan::SubsetPlan;
use crate::sp::PairDiagnostic;

#[derive(Serialize, Deserialize)]
struct BallotRecord {
    voter_id: String,
    subset_id: usize,
    format: String,
    vote: Value,
    prediction: Value,
}

fn report_value(r: &Report) -> Value {
    match r {
        Report::Top(a) => Value::from(*a),
        Report::Approval(s) => Value::from(s.clone()),
        Report::Rank(r) => Value::from(r.order().to_vec()),
    }
}

fn ids(v: &Value, what: &str) -> Result<Vec<AltId>> {
    serde_json::from_value(v.clone()).map_err(|_| Error::PayloadShapeMismatch(format!("{what}: expected an id array")))
}

fn one_id(v: &Value, what: &str) -> Result<AltId> {
    serde_json::from_value(v.clone()).map_err(|_| Error::PayloadShapeMismatch(format!("{what}: expected a single id")))
}

/// Payload of the given shape; `top` / `approval` / `rank` mirror the format kinds.
fn parse_report(v: &Value, top: bool, approval: bool, what: &str) -> Result<Report> {
    if top {
        Ok(Report::Top(one_id(v, what)?))
    } else if approval {
        let set = ids(v, what)?;
        let mut sorted = set.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != set.len() {
            return Err(Error::PayloadShapeMismatch(format!("{what}: duplicate id in approval set")));
        }
        Ok(Report::Approval(sorted))
    } else {
        Ok(Report::Rank(Ranking::new(ids(v, what)?)?))
    }
}

pub fn ballot_to_json(b: &Ballot) -> String {
    let rec = BallotRecord {
        voter_id: b.voter_id.clone(),
        subset_id: b.subset_id,
        format: b.format.tag(),
        vote: report_value(&b.vote),
        prediction: b.prediction.as_ref().map_or(Value::Null, report_value),
    };
    serde_json::to_string(&rec).expect("ballot serializes")
}

/// Parses one JSON-Lines record. Shape is checked against the format tag;
/// membership in the subset is left to [`crate::model::validate_ballot`].
pub fn parse_ballot(line: &str) -> Result<Ballot> {
    let rec: BallotRecord = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
    let format: ElicitationFormat = rec.format.parse()?;
    let vote = match format.vote {
        VoteKind::Top => parse_report(&rec.vote, true, false, "vote")?,
        VoteKind::Approval(_) => parse_report(&rec.vote, false, true, "vote")?,
        VoteKind::Rank => parse_report(&rec.vote, false, false, "vote")?,
    };
    let prediction = match (format.prediction, &rec.prediction) {
        (_, Value::Null) => None,
        (PredictionKind::None, _) => {
            return Err(Error::PayloadShapeMismatch("prediction given for a format without predictions".into()))
        }
        (PredictionKind::Top, v) => Some(parse_report(v, true, false, "prediction")?),
        (PredictionKind::Approval(_), v) => Some(parse_report(v, false, true, "prediction")?),
        (PredictionKind::Rank, v) => Some(parse_report(v, false, false, "prediction")?),
    };
    Ok(Ballot { voter_id: rec.voter_id, subset_id: rec.subset_id, format, vote, prediction })
}

/// Reads ballots, skipping blank lines; errors name the 1-based line.
pub fn read_ballots<R: BufRead>(reader: R) -> Result<Vec<Ballot>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_ballot(&line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn write_ballots<W: Write>(mut w: W, ballots: &[Ballot]) -> std::io::Result<()> {
    for b in ballots {
        writeln!(w, "{}", ballot_to_json(b))?;
    }
    Ok(())
}

pub fn parse_plan(text: &str) -> Result<SubsetPlan> {
    let plan: SubsetPlan = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    plan.validate()?;
    Ok(plan)
}

/// Ranking file: a bare id array or an object with an `order` array.
pub fn parse_ranking(text: &str) -> Result<Ranking> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wire {
        Bare(Vec<AltId>),
        Object { order: Vec<AltId> },
    }
    match serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))? {
        Wire::Bare(o) | Wire::Object { order: o } => Ranking::new(o),
    }
}

#[derive(Serialize)]
struct RankingFile<'a> {
    order: &'a [AltId],
    labels: Vec<String>,
}

pub fn ranking_to_json(r: &Ranking) -> String {
    let f = RankingFile { order: r.order(), labels: r.order().iter().map(|&a| label(a)).collect() };
    serde_json::to_string_pretty(&f).expect("ranking serializes")
}

pub const DIAGNOSTICS_HEADER: &str =
    "subset_id,a,b,n_used,n_dropped,f_ab,f_ba,g11,g01,g10,g00,vbar_ab,vbar_ba,winner,tied";

pub fn write_diagnostics<W: Write>(mut w: W, diags: &[PairDiagnostic]) -> std::io::Result<()> {
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for d in diags {
        let subset = d.subset_id.map_or_else(|| "all".to_string(), |j| j.to_string());
        match &d.verdict {
            Some(v) => writeln!(
                w,
                "{subset},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                d.a, d.b, d.n_used, d.n_dropped, v.f_ab, v.f_ba, v.g11, v.g01, v.g10, v.g00, v.vbar_ab, v.vbar_ba, v.winner, v.tied
            )?,
            None => writeln!(w, "{subset},{},{},{},{},,,,,,,,,,", d.a, d.b, d.n_used, d.n_dropped)?,
        }
    }
    Ok(())
}
