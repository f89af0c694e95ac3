//! Verdicts are re-derived from the emitted tables, never trusted from the
//! runner: the runner writes `tables/checks.csv` with a claimed pass column,
//! and the judge reparses that file, recomputes every pass from the stored
//! value and bound, and errors out if the two disagree. This guards against
//! drift between what was computed and what was reported.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Comparison direction of one check row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// pass iff value <= bound
    Le,
    /// pass iff value >= bound
    Ge,
    /// pass iff |value| <= bound
    AbsLe,
}

impl CheckKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::Le => "le",
            CheckKind::Ge => "ge",
            CheckKind::AbsLe => "abs_le",
        }
    }

    pub fn parse(s: &str) -> Result<CheckKind> {
        match s {
            "le" => Ok(CheckKind::Le),
            "ge" => Ok(CheckKind::Ge),
            "abs_le" => Ok(CheckKind::AbsLe),
            other => Err(Error::Format(format!("unknown check kind {other:?}"))),
        }
    }

    /// The one place a pass/fail decision is made. NaN values fail every
    /// kind, since every comparison with NaN is false.
    pub fn derive(&self, value: f64, bound: f64) -> bool {
        match self {
            CheckKind::Le => value <= bound,
            CheckKind::Ge => value >= bound,
            CheckKind::AbsLe => value.abs() <= bound,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub kind: CheckKind,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Build a row with the pass flag derived on the spot.
    pub fn new(check: impl Into<String>, kind: CheckKind, value: f64, bound: f64) -> CheckRow {
        let check = check.into();
        let pass = kind.derive(value, bound);
        CheckRow { check, kind, value, bound, pass }
    }
}

pub const CHECKS_HEADER: &str = "check,kind,value,bound,pass";

pub fn checks_to_csv(rows: &[CheckRow]) -> Result<String> {
    let mut out = String::from(CHECKS_HEADER);
    out.push('\n');
    for r in rows {
        if r.check.contains(',') || r.check.contains('\n') {
            return Err(Error::Format(format!("check name {:?} breaks the csv", r.check)));
        }
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.check,
            r.kind.as_str(),
            r.value,
            r.bound,
            r.pass
        ));
    }
    Ok(out)
}

pub fn checks_from_csv(text: &str) -> Result<Vec<CheckRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CHECKS_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "checks table must start with {CHECKS_HEADER:?}, got {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!("checks row {} has {} fields", i + 2, fields.len())));
        }
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Format(format!("bad value {:?} in row {}", fields[2], i + 2)))?;
        let bound: f64 = fields[3]
            .parse()
            .map_err(|_| Error::Format(format!("bad bound {:?} in row {}", fields[3], i + 2)))?;
        let pass = match fields[4] {
            "true" => true,
            "false" => false,
            other => return Err(Error::Format(format!("bad pass flag {other:?} in row {}", i + 2))),
        };
        rows.push(CheckRow { check: fields[0].to_string(), kind: CheckKind::parse(fields[1])?, value, bound, pass });
    }
    if rows.is_empty() {
        return Err(Error::Format("checks table has no rows".into()));
    }
    Ok(rows)
}

/// The judged outcome of a bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdicts {
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
    pub failures: Vec<String>,
    pub all_pass: bool,
}

/// Re-derive verdicts from a bundle directory: parse `tables/checks.csv`,
/// recompute every pass flag, and refuse to judge if a recomputed flag
/// disagrees with the claimed one. Writes `verdicts.json` next to the
/// tables and returns the result.
pub fn judge_bundle(dir: &Path) -> Result<Verdicts> {
    let checks_path = dir.join("tables").join("checks.csv");
    let text = std::fs::read_to_string(&checks_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", checks_path.display())))?;
    let mut rows = checks_from_csv(&text)?;
    for r in &mut rows {
        let derived = r.kind.derive(r.value, r.bound);
        if derived != r.pass {
            return Err(Error::Format(format!(
                "verdict drift on {:?}: table claims pass={} but {} {} {} derives {}",
                r.check,
                r.pass,
                r.value,
                r.kind.as_str(),
                r.bound,
                derived
            )));
        }
        r.pass = derived;
    }

    let (scenario, seed) = read_identity(dir)?;
    let failures: Vec<String> =
        rows.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
    let all_pass = failures.is_empty();
    let verdicts = Verdicts { scenario, seed, checks: rows, failures, all_pass };

    let json = serde_json::to_string_pretty(&verdicts)
        .map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(dir.join("verdicts.json"), json + "\n")?;
    Ok(verdicts)
}

/// Scenario and seed from the embedded resolved config, via a tolerant
/// value-level parse so the judge stays decoupled from the config schema.
fn read_identity(dir: &Path) -> Result<(String, u64)> {
    let path = dir.join("resolved_config.toml");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: toml::Value =
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    let scenario = value
        .get("scenario")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config("resolved config lacks a scenario name".into()))?
        .to_string();
    let seed = value
        .get("seed")
        .and_then(|v| v.as_integer())
        .ok_or_else(|| Error::Config("resolved config lacks a seed".into()))? as u64;
    Ok((scenario, seed))
}
