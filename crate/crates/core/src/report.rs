//! Experiment reports: one row per statistical check, three-way
//! verdicts, and deterministic CSV/JSON encodings.
//!
//! A Monte Carlo estimate certifies a lower bound when it clears the
//! bound outright, or misses it by less than three confidence
//! half-widths while the test retains the power to fail at all. When
//! the interval is too wide to distinguish the bound from nothing and
//! the estimate falls short of it, the row is inconclusive rather than
//! a pass or a fail. Float formatting is fixed-width scientific, so a
//! seeded run reproduces reports byte for byte.

use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn symbol(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Judge an estimate against a lower bound with a `3·ci` margin.
///
/// Inconclusive is reserved for the vacuous case: the interval is so
/// wide that no estimate could have failed, and the estimate does not
/// even reach the bound on its own.
pub fn judge_lower_bound(estimate: f64, bound: f64, ci: f64) -> Verdict {
    let slack = bound - 3.0 * ci;
    if estimate < slack {
        Verdict::Fail
    } else if estimate < bound && slack <= 0.0 && bound > 0.0 {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

/// Judge an estimate against an upper bound with a `3·ci` margin.
pub fn judge_upper_bound(estimate: f64, bound: f64, ci: f64) -> Verdict {
    if estimate > bound + 3.0 * ci {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}

/// One statistical check: a named estimate against a bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    /// What was measured, e.g. `"probe-freq[e=3]"`.
    pub check: String,
    /// Which guarantee the row verifies, e.g. `"balance-lower-bound"`.
    pub tag: String,
    pub estimate: f64,
    pub bound: f64,
    pub ci: f64,
    pub samples: u64,
    pub verdict: Verdict,
}

impl ReportRow {
    pub fn lower_bound(
        check: impl Into<String>,
        tag: impl Into<String>,
        estimate: f64,
        bound: f64,
        ci: f64,
        samples: u64,
    ) -> ReportRow {
        ReportRow {
            check: check.into(),
            tag: tag.into(),
            estimate,
            bound,
            ci,
            samples,
            verdict: judge_lower_bound(estimate, bound, ci),
        }
    }

    pub fn upper_bound(
        check: impl Into<String>,
        tag: impl Into<String>,
        estimate: f64,
        bound: f64,
        ci: f64,
        samples: u64,
    ) -> ReportRow {
        ReportRow {
            check: check.into(),
            tag: tag.into(),
            estimate,
            bound,
            ci,
            samples,
            verdict: judge_upper_bound(estimate, bound, ci),
        }
    }

    /// An exact (non-statistical) check: zero CI, pass iff `ok`.
    pub fn exact(check: impl Into<String>, tag: impl Into<String>, ok: bool) -> ReportRow {
        ReportRow {
            check: check.into(),
            tag: tag.into(),
            estimate: if ok { 1.0 } else { 0.0 },
            bound: 1.0,
            ci: 0.0,
            samples: 0,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }
}

/// A full experiment report: the configuration echo plus the rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Report {
        Report {
            command: command.into(),
            seed,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    /// Worst verdict over the rows: any fail dominates, then any
    /// inconclusive, else pass.
    pub fn overall(&self) -> Verdict {
        let mut verdict = Verdict::Pass;
        for row in &self.rows {
            match row.verdict {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => verdict = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        verdict
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,tag,estimate,bound,ci,samples,verdict\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{:.12e},{},{}\n",
                row.check,
                row.tag,
                row.estimate,
                row.bound,
                row.ci,
                row.samples,
                row.verdict.symbol()
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| crate::Error::Parse(e.to_string()))
    }
}
