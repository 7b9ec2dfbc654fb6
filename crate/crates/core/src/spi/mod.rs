//! Safety Performance Indicators: definitions, telemetry, statistically
//! qualified evaluation, remediation directives and the validation-vs-field
//! deviation test.

mod bounds;
mod deviation;
mod evaluate;
mod remediation;
mod telemetry;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::argument::{ElementKind, SafetyCase};
use crate::report::{Finding, ValidationReport};

pub use bounds::{gamma_quantile, rate_lower_bound, rate_upper_bound};
pub use deviation::{
    deviation_test, DeviationError, DeviationResult, DeviationVerdict, DEFAULT_ALPHA,
};
pub use evaluate::{evaluate, evaluate_all, evaluate_totals, EvaluateError, SpiEvaluation};
pub use remediation::{
    detect_violations, FleetDirective, RemediationDirective, RemediationError, RemediationPolicy,
};
pub use telemetry::{
    parse_telemetry_line, IngestSummary, Phase, TelemetryDiagnostic, TelemetryRecord,
    TelemetryStore, Totals, Window,
};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Lagging SPIs are expected no deeper than this below the root.
pub const MAX_LAGGING_DEPTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureUnit {
    Hour,
    Km,
    Mission,
}

impl ExposureUnit {
    pub fn keyword(self) -> &'static str {
        match self {
            ExposureUnit::Hour => "hour",
            ExposureUnit::Km => "km",
            ExposureUnit::Mission => "mission",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "hour" => Some(ExposureUnit::Hour),
            "km" => Some(ExposureUnit::Km),
            "mission" => Some(ExposureUnit::Mission),
            _ => None,
        }
    }
}

impl fmt::Display for ExposureUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// `AtMost` is the usual event-rate SPI (`threshold <= x`); `AtLeast`
/// requires the observed rate to stay above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    Leading,
    Lagging,
}

impl Timing {
    pub fn keyword(self) -> &'static str {
        match self {
            Timing::Leading => "leading",
            Timing::Lagging => "lagging",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Behavioral,
    Operational,
}

impl TraceKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TraceKind::Behavioral => "behavioral",
            TraceKind::Operational => "operational",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiDefinition {
    pub id: String,
    /// The claim the indicator is attached to.
    pub claim_id: String,
    pub metric: String,
    /// Events per unit of exposure.
    pub threshold: f64,
    pub unit: ExposureUnit,
    pub direction: Direction,
    pub timing: Timing,
    pub trace: TraceKind,
    pub confidence_target: f64,
}

impl SpiDefinition {
    /// An at-most, leading, behavioral SPI with the default confidence.
    pub fn new(
        id: impl Into<String>,
        claim_id: impl Into<String>,
        metric: impl Into<String>,
        threshold: f64,
        unit: ExposureUnit,
    ) -> Self {
        Self {
            id: id.into(),
            claim_id: claim_id.into(),
            metric: metric.into(),
            threshold,
            unit,
            direction: Direction::AtMost,
            timing: Timing::Leading,
            trace: TraceKind::Behavioral,
            confidence_target: DEFAULT_CONFIDENCE,
        }
    }

    pub fn lagging(mut self) -> Self {
        self.timing = Timing::Lagging;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpiStatus {
    Pass,
    PassLowConfidence,
    Violated,
    NoData,
}

impl SpiStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SpiStatus::Pass => "pass",
            SpiStatus::PassLowConfidence => "pass_low_confidence",
            SpiStatus::Violated => "violated",
            SpiStatus::NoData => "no_data",
        }
    }
}

impl fmt::Display for SpiStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub mod rules {
    pub const SPI_DEPTH: &str = "spi_depth";
    pub const SPI_ON_NON_GOAL: &str = "spi_on_non_goal";
    pub const SPI_THRESHOLD: &str = "spi_threshold";
    pub const SPI_CONFIDENCE: &str = "spi_confidence";
}

/// Structural checks on SPI definitions. Placement rules are warnings:
/// lagging indicators belong near the root, and indicators attach to goals.
pub fn lint_spi_placement(case: &SafetyCase) -> ValidationReport {
    let depths = case.depths();
    let mut findings = Vec::new();
    for spi in &case.spis {
        if !(spi.threshold.is_finite() && spi.threshold >= 0.0) {
            findings.push(Finding::error(
                &spi.id,
                rules::SPI_THRESHOLD,
                format!("threshold {} is not a non-negative rate", spi.threshold),
            ));
        }
        if !(spi.confidence_target > 0.0 && spi.confidence_target < 1.0) {
            findings.push(Finding::error(
                &spi.id,
                rules::SPI_CONFIDENCE,
                format!("confidence {} is outside (0, 1)", spi.confidence_target),
            ));
        }
        let mut claims = vec![spi.claim_id.as_str()];
        claims.extend(
            case.elements
                .iter()
                .filter(|e| e.spi_refs.contains(&spi.id))
                .map(|e| e.id.as_str()),
        );
        claims.sort();
        claims.dedup();
        for claim in claims {
            if let Some(e) = case.element(claim) {
                if e.kind != ElementKind::Goal {
                    findings.push(Finding::warning(
                        &spi.id,
                        rules::SPI_ON_NON_GOAL,
                        format!("attached to {} `{claim}`, not a goal", e.kind),
                    ));
                }
            }
            if spi.timing == Timing::Lagging {
                if let Some(&d) = depths.get(claim) {
                    if d > MAX_LAGGING_DEPTH {
                        findings.push(Finding::warning(
                            &spi.id,
                            rules::SPI_DEPTH,
                            format!("lagging SPI on `{claim}` at depth {d}; expected at most {MAX_LAGGING_DEPTH}"),
                        ));
                    }
                }
            }
        }
    }
    ValidationReport::new(findings)
}
