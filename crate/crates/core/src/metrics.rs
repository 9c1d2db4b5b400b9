//! Evaluation formulas and report tables: decision/localization accuracy,
//! relative improvement, coverage and success rates over run outcomes, and
//! per-stage token sums.
//!
//! Percentages are computed in exact integer hundredths with half-up
//! rounding at two decimals, so formatted values are reproducible to the
//! digit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::STAGES;
use crate::orchestrator::{Case, RunOutcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("invalid accuracy input: need 0 <= n1 <= nf <= N, got n1={n1} nf={nf} N={total}")]
    InvalidCounts { n1: u64, nf: u64, total: u64 },
}

/// A percentage held as integer hundredths (97.44% = 9744).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Percent(i64);

impl Percent {
    pub fn from_hundredths(h: i64) -> Percent {
        Percent(h)
    }

    /// `100 * num / den` rounded half-up to two decimals.
    pub fn from_ratio(num: u64, den: u64) -> Result<Percent, MetricsError> {
        if den == 0 {
            return Err(MetricsError::ZeroDenominator);
        }
        let scaled = 10_000u128 * num as u128;
        let rounded = (2 * scaled + den as u128) / (2 * den as u128);
        Ok(Percent(rounded as i64))
    }

    pub fn hundredths(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl std::fmt::Display for Percent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

/// Accuracy of `n` correct outcomes out of `N`, as a percent.
pub fn accuracy(n: u64, total: u64) -> Result<Percent, MetricsError> {
    if total == 0 {
        return Err(MetricsError::ZeroDenominator);
    }
    if n > total {
        return Err(MetricsError::InvalidCounts {
            n1: n,
            nf: n,
            total,
        });
    }
    Percent::from_ratio(n, total)
}

/// Relative gain from the initial to the final accuracy:
/// `100 * (acc_f - acc_1) / acc_1`. Undefined when the initial accuracy is
/// zero; reported as n/a (None).
pub fn improvement(acc1: Percent, accf: Percent) -> Option<Percent> {
    if acc1.0 <= 0 {
        return None;
    }
    let num = (accf.0 - acc1.0) as i128 * 10_000;
    let den = acc1.0 as i128;
    // Half-up, away from zero for the negative branch.
    let rounded = if num >= 0 {
        (2 * num + den) / (2 * den)
    } else {
        -((2 * -num + den) / (2 * den))
    };
    Some(Percent(rounded as i64))
}

/// Decision or localization counts for one scenario: `N` attempts, `n1`
/// initially correct, `nf` finally correct after self-correction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyInput {
    pub total: u64,
    pub initially_correct: u64,
    pub finally_correct: u64,
}

impl AccuracyInput {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.initially_correct <= self.finally_correct && self.finally_correct <= self.total {
            Ok(())
        } else {
            Err(MetricsError::InvalidCounts {
                n1: self.initially_correct,
                nf: self.finally_correct,
                total: self.total,
            })
        }
    }

    pub fn acc_initial(&self) -> Result<Percent, MetricsError> {
        accuracy(self.initially_correct, self.total)
    }

    pub fn acc_final(&self) -> Result<Percent, MetricsError> {
        accuracy(self.finally_correct, self.total)
    }

    pub fn merge(&mut self, other: &AccuracyInput) {
        self.total += other.total;
        self.initially_correct += other.initially_correct;
        self.finally_correct += other.finally_correct;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub c1: u64,
    pub c2: u64,
    pub c3: u64,
    pub c4: u64,
}

impl OutcomeCounts {
    pub fn new(c1: u64, c2: u64, c3: u64, c4: u64) -> Self {
        OutcomeCounts { c1, c2, c3, c4 }
    }

    pub fn add(&mut self, case: Case) {
        match case {
            Case::C1 => self.c1 += 1,
            Case::C2 => self.c2 += 1,
            Case::C3 => self.c3 += 1,
            Case::C4 => self.c4 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.c1 + self.c2 + self.c3 + self.c4
    }
}

/// Coverage rate `C = (|c1|+|c2|)/total` and success rate `S = |c1|/total`,
/// as percentages.
pub fn coverage_success(counts: &OutcomeCounts) -> Result<(Percent, Percent), MetricsError> {
    let total = counts.total();
    let c = Percent::from_ratio(counts.c1 + counts.c2, total)?;
    let s = Percent::from_ratio(counts.c1, total)?;
    Ok((c, s))
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub runs: u64,
    pub counts: OutcomeCounts,
    pub coverage: String,
    pub success: String,
    pub stage_tokens: [u64; 6],
    pub total_tokens: u64,
    pub decision: AccuracyInput,
    pub localization: AccuracyInput,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub overall: Option<ReportRow>,
}

fn build_row(scenario: &str, outcomes: &[&RunOutcome]) -> ReportRow {
    let mut counts = OutcomeCounts::default();
    let mut stage_tokens = [0u64; 6];
    let mut decision = AccuracyInput::default();
    let mut localization = AccuracyInput::default();
    for o in outcomes {
        counts.add(o.case);
        for st in STAGES {
            stage_tokens[st.index()] += o.ledger.stage_total(st);
        }
        decision.merge(&o.decision_stats);
        localization.merge(&o.localization_stats);
    }
    let (coverage, success) = coverage_success(&counts)
        .map(|(c, s)| (c.to_string(), s.to_string()))
        .unwrap_or_else(|_| ("n/a".into(), "n/a".into()));
    ReportRow {
        scenario: scenario.to_string(),
        runs: outcomes.len() as u64,
        counts,
        coverage,
        success,
        stage_tokens,
        total_tokens: stage_tokens.iter().sum(),
        decision,
        localization,
    }
}

/// Aggregate run outcomes into per-scenario rows plus an overall row.
pub fn report(outcomes: &[RunOutcome]) -> Report {
    let mut scenarios: Vec<String> = Vec::new();
    for o in outcomes {
        if !scenarios.contains(&o.scenario) {
            scenarios.push(o.scenario.clone());
        }
    }
    let rows: Vec<ReportRow> = scenarios
        .iter()
        .map(|name| {
            let group: Vec<&RunOutcome> = outcomes.iter().filter(|o| &o.scenario == name).collect();
            build_row(name, &group)
        })
        .collect();
    let overall = if outcomes.is_empty() {
        None
    } else {
        Some(build_row("all", &outcomes.iter().collect::<Vec<_>>()))
    };
    Report { rows, overall }
}

impl Report {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        if self.rows.is_empty() {
            return "(no sessions)\n".to_string();
        }
        let mut out = String::new();
        let header = format!(
            "{:<14} {:>4} {:>3} {:>3} {:>3} {:>3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
            "scenario", "runs", "c1", "c2", "c3", "c4", "C", "S", "T1", "T2", "T3", "T4", "T5", "T6", "T_total"
        );
        out.push_str(&header);
        out.push_str(&"-".repeat(header.len().saturating_sub(1)));
        out.push('\n');
        let mut all_rows: Vec<&ReportRow> = self.rows.iter().collect();
        if let Some(overall) = &self.overall {
            if self.rows.len() > 1 {
                all_rows.push(overall);
            }
        }
        for r in all_rows {
            out.push_str(&format!(
                "{:<14} {:>4} {:>3} {:>3} {:>3} {:>3} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
                r.scenario,
                r.runs,
                r.counts.c1,
                r.counts.c2,
                r.counts.c3,
                r.counts.c4,
                r.coverage,
                r.success,
                r.stage_tokens[0],
                r.stage_tokens[1],
                r.stage_tokens[2],
                r.stage_tokens[3],
                r.stage_tokens[4],
                r.stage_tokens[5],
                r.total_tokens,
            ));
        }
        out
    }
}
