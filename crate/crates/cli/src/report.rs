use std::collections::BTreeMap;
use std::fmt::Write;

use livecase::argument::ElementStatus;
use livecase::evidence::Freshness;
use livecase::fault_tree::{BudgetCheck, DeviationFlag};
use livecase::impact::{ImpactReport, ImpactState};
use livecase::report::{Finding, Severity};
use livecase::spi::{FleetDirective, SpiEvaluation, TelemetryDiagnostic};
use serde::Serialize;

/// Schema tag of every structured document.
pub const REPORT_VERSION: &str = "livecase.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Green,
    Amber,
    Red,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Green => "green",
            Verdict::Amber => "amber",
            Verdict::Red => "red",
        }
    }

    /// Exit status of `evaluate`.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Green => 0,
            Verdict::Amber => 1,
            Verdict::Red => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvidenceEntry {
    pub link: String,
    pub artifact: String,
    pub resolved_seq: Option<u64>,
    pub reviewed_seq: u64,
    pub freshness: Freshness,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeEntry {
    pub id: String,
    pub hazard: String,
    pub top_probability: Option<f64>,
    /// With SPI-annotated rates replaced by field rates.
    pub refined_top_probability: Option<f64>,
    pub budgets: Vec<BudgetCheck>,
    pub deviations: Vec<DeviationFlag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpactSummary {
    pub needs_review: usize,
    pub invalidated: usize,
}

impl ImpactSummary {
    pub fn of(report: &ImpactReport) -> Self {
        Self {
            needs_review: report.count(ImpactState::NeedsReview),
            invalidated: report.count(ImpactState::Invalidated),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub version: &'static str,
    pub command: &'static str,
    pub case: String,
    pub verdict: Verdict,
    pub directive: Option<FleetDirective>,
    pub statuses: BTreeMap<String, ElementStatus>,
    pub spis: Vec<SpiEvaluation>,
    pub evidence: Vec<EvidenceEntry>,
    pub fault_trees: Vec<TreeEntry>,
    pub impact: Option<ImpactSummary>,
    pub telemetry: Vec<TelemetryDiagnostic>,
    pub findings: Vec<Finding>,
}

/// Red on any violated claim, invalidated element or error finding;
/// amber on any other non-supported claim, element needing review or
/// warning (unless warnings are configured not to count); green otherwise.
pub fn verdict(
    statuses: &BTreeMap<String, ElementStatus>,
    impact: Option<&ImpactSummary>,
    findings: &[Finding],
    warnings_are_amber: bool,
) -> Verdict {
    let violated = statuses.values().any(|s| *s == ElementStatus::Violated);
    let invalidated = impact.is_some_and(|i| i.invalidated > 0);
    if violated || invalidated || findings.iter().any(|f| f.severity == Severity::Error) {
        return Verdict::Red;
    }
    let questioned = statuses.values().any(|s| !s.is_supported());
    let review = impact.is_some_and(|i| i.needs_review > 0);
    let warned = warnings_are_amber && findings.iter().any(|f| f.severity == Severity::Warning);
    if questioned || review || warned {
        Verdict::Amber
    } else {
        Verdict::Green
    }
}

/// Six significant digits.
pub fn sig6(p: f64) -> String {
    format!("{p:.5e}")
}

impl CaseReport {
    pub fn to_text(&self, generated_at: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case: {}", self.case);
        let _ = writeln!(s, "generated: {generated_at}");
        let _ = writeln!(s, "verdict: {}", self.verdict.as_str());
        if let Some(d) = self.directive {
            let _ = writeln!(s, "fleet directive: {d}");
        }
        if !self.statuses.is_empty() {
            s.push_str("\nclaims:\n");
            for (id, st) in &self.statuses {
                let _ = writeln!(s, "  {id:<16} {st}");
            }
        }
        if !self.spis.is_empty() {
            s.push_str("\nSPIs:\n");
            for e in &self.spis {
                let rate = e.point_rate.map_or("-".to_string(), sig6);
                let bound = e
                    .upper_bound
                    .or(e.lower_bound)
                    .map_or("-".to_string(), sig6);
                let _ = writeln!(
                    s,
                    "  {:<16} {:<20} k={} T={} rate={} bound={} threshold={}",
                    e.spi_id,
                    e.status.as_str(),
                    e.total_events,
                    e.total_exposure,
                    rate,
                    bound,
                    e.threshold
                );
            }
        }
        if !self.evidence.is_empty() {
            s.push_str("\nevidence:\n");
            for e in &self.evidence {
                let seq = e
                    .resolved_seq
                    .map_or("missing".to_string(), |v| v.to_string());
                let fresh = match e.freshness {
                    Freshness::Fresh => "fresh",
                    Freshness::Stale => "stale",
                };
                let _ = writeln!(
                    s,
                    "  {:<16} {fresh:<6} resolved={seq} reviewed={} ({})",
                    e.link, e.reviewed_seq, e.artifact
                );
            }
        }
        for t in &self.fault_trees {
            let _ = writeln!(s, "\nfault tree {} (hazard {}):", t.id, t.hazard);
            let _ = writeln!(
                s,
                "  top probability: {}",
                t.top_probability.map_or("not quantified".to_string(), sig6)
            );
            if let Some(r) = t.refined_top_probability {
                let _ = writeln!(s, "  refined with field data: {}", sig6(r));
            }
            for b in &t.budgets {
                let mark = if b.exceeded { "FAIL" } else { "ok" };
                let _ = writeln!(
                    s,
                    "  budget {:<16} {} <= {} {mark}",
                    b.node,
                    sig6(b.probability),
                    sig6(b.budget)
                );
            }
        }
        if let Some(i) = &self.impact {
            let _ = writeln!(
                s,
                "\nimpact: {} need review, {} invalidated",
                i.needs_review, i.invalidated
            );
        }
        if !self.findings.is_empty() {
            s.push_str("\nfindings:\n");
            for f in &self.findings {
                let _ = writeln!(s, "  {f}");
            }
        }
        s
    }
}
