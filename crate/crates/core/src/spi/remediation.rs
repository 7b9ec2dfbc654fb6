use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{SpiEvaluation, SpiStatus, Timing};
use crate::argument::{
    soundness_status, ElementStatus, EvidenceState, SafetyCase, SpiState, StatusError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FleetDirective {
    Continue,
    Restrict,
    Ground,
}

impl fmt::Display for FleetDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FleetDirective::Continue => "continue",
            FleetDirective::Restrict => "restrict",
            FleetDirective::Ground => "ground",
        })
    }
}

/// What to do with the fleet depending on which kind of SPI is violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RemediationPolicy {
    pub on_lagging: FleetDirective,
    pub on_leading_only: FleetDirective,
}

impl Default for RemediationPolicy {
    fn default() -> Self {
        Self {
            on_lagging: FleetDirective::Ground,
            on_leading_only: FleetDirective::Restrict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RemediationDirective {
    pub violated_spis: Vec<String>,
    /// Every element whose status is no longer `supported`.
    pub affected_claims: BTreeMap<String, ElementStatus>,
    pub directive: FleetDirective,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RemediationError {
    #[error("no evaluation for SPI `{0}`")]
    MissingEvaluation(String),
    #[error(transparent)]
    Status(#[from] StatusError),
}

pub fn detect_violations(
    case: &SafetyCase,
    evaluations: &BTreeMap<String, SpiEvaluation>,
    evidence: &EvidenceState,
    policy: &RemediationPolicy,
) -> Result<RemediationDirective, RemediationError> {
    let mut spi_state = SpiState::new();
    let mut violated = Vec::new();
    let mut lagging_violated = false;
    for spi in &case.spis {
        let eval = evaluations
            .get(&spi.id)
            .ok_or_else(|| RemediationError::MissingEvaluation(spi.id.clone()))?;
        spi_state.insert(spi.id.clone(), eval.status);
        if eval.status == SpiStatus::Violated {
            violated.push(spi.id.clone());
            lagging_violated |= spi.timing == Timing::Lagging;
        }
    }
    let statuses = soundness_status(case, &spi_state, evidence)?;
    let directive = match (violated.is_empty(), lagging_violated) {
        (true, _) => FleetDirective::Continue,
        (false, true) => policy.on_lagging,
        (false, false) => policy.on_leading_only,
    };
    Ok(RemediationDirective {
        violated_spis: violated,
        affected_claims: statuses
            .into_iter()
            .filter(|(_, s)| !s.is_supported())
            .collect(),
        directive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argument::{ArgumentEdge, ArgumentElement, ElementKind};
    use crate::spi::{evaluate_totals, ExposureUnit, SpiDefinition, Window};

    fn case() -> SafetyCase {
        SafetyCase {
            elements: vec![
                ArgumentElement::new("G1", ElementKind::Goal, "top"),
                ArgumentElement::new("G2", ElementKind::Goal, "sub"),
            ],
            edges: vec![ArgumentEdge::supported_by("G1", "G2")],
            spis: vec![
                SpiDefinition::new("LAG", "G1", "crashes", 0.01, ExposureUnit::Hour).lagging(),
                SpiDefinition::new("LEAD", "G2", "perception", 0.01, ExposureUnit::Hour),
            ],
            ..SafetyCase::new("x")
        }
        .normalized()
    }

    fn evals(lag_events: u64, lead_events: u64) -> BTreeMap<String, SpiEvaluation> {
        let c = case();
        BTreeMap::from([
            (
                "LAG".to_string(),
                evaluate_totals(c.spi("LAG").unwrap(), lag_events, 1000.0, Window::all()),
            ),
            (
                "LEAD".to_string(),
                evaluate_totals(c.spi("LEAD").unwrap(), lead_events, 1000.0, Window::all()),
            ),
        ])
    }

    #[test]
    fn policy_table() {
        let p = RemediationPolicy::default();
        let ev = EvidenceState::new();
        assert_eq!(
            detect_violations(&case(), &evals(0, 0), &ev, &p)
                .unwrap()
                .directive,
            FleetDirective::Continue
        );
        let lag = detect_violations(&case(), &evals(50, 0), &ev, &p).unwrap();
        assert_eq!(lag.directive, FleetDirective::Ground);
        assert_eq!(lag.violated_spis, vec!["LAG"]);
        let lead = detect_violations(&case(), &evals(0, 50), &ev, &p).unwrap();
        assert_eq!(lead.directive, FleetDirective::Restrict);
        assert_eq!(lead.affected_claims["G2"], ElementStatus::Violated);
        assert_eq!(lead.affected_claims["G1"], ElementStatus::InQuestion);
    }

    #[test]
    fn missing_evaluation_is_rejected() {
        let mut e = evals(0, 0);
        e.remove("LEAD");
        let err = detect_violations(
            &case(),
            &e,
            &EvidenceState::new(),
            &RemediationPolicy::default(),
        )
        .unwrap_err();
        assert_eq!(err, RemediationError::MissingEvaluation("LEAD".into()));
    }
}
