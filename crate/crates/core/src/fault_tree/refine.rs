use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spi::{deviation_test, DeviationError, DeviationVerdict, ExposureUnit, SpiEvaluation};

use super::{Mission, QuantitativeFaultTree, Rate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("tree `{0}` has SPI-annotated events but no mission duration to convert rates")]
    MissingMission(String),
    #[error("event `{event}` references SPI `{spi}`, which has no evaluation")]
    MissingEvaluation { event: String, spi: String },
    #[error("SPI `{spi}` is measured per {found}, but tree `{tree}` declares its mission per {expected}")]
    UnitMismatch {
        tree: String,
        spi: String,
        expected: ExposureUnit,
        found: ExposureUnit,
    },
    #[error(transparent)]
    Deviation(#[from] DeviationError),
}

/// Raised when field data for an event departs from its prior rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationFlag {
    pub event: String,
    pub spi: String,
    /// Per-demand probabilities before and after refinement.
    pub prior: f64,
    pub refined: f64,
    /// Prior rate expressed as an event count over the field exposure.
    pub prior_events: u64,
    pub field_events: u64,
    pub exposure: f64,
    pub p_value: f64,
}

/// `p = 1 - exp(-rate * duration)`.
pub fn per_demand(rate: f64, mission: &Mission) -> f64 {
    -(-rate * mission.duration).exp_m1()
}

/// Inverse of [`per_demand`].
pub fn per_exposure(probability: f64, mission: &Mission) -> f64 {
    -(-probability).ln_1p() / mission.duration
}

/// Replaces the rate of every SPI-annotated event by the observed field
/// rate, converted to a per-demand probability with the tree's mission.
/// Events whose SPI has no exposure yet are left unchanged.
///
/// The old rate is tested against the field counts by treating it as a
/// validation sample over the same exposure, `round(rate * T)` events in
/// `T`. Placeholder rates are replaced without a test.
pub fn refine_rates(
    tree: &QuantitativeFaultTree,
    evaluations: &[SpiEvaluation],
    alpha: f64,
) -> Result<(QuantitativeFaultTree, Vec<DeviationFlag>), RefineError> {
    let annotated: Vec<_> = tree
        .basic_events()
        .into_values()
        .filter(|b| b.spi_ref.is_some())
        .cloned()
        .collect();
    let mut out = tree.clone();
    let mut flags = Vec::new();
    if annotated.is_empty() {
        return Ok((out, flags));
    }
    let mission = tree
        .mission
        .ok_or_else(|| RefineError::MissingMission(tree.id.clone()))?;
    for event in annotated {
        let spi = event.spi_ref.clone().unwrap_or_default();
        let eval = evaluations
            .iter()
            .find(|e| e.spi_id == spi)
            .ok_or_else(|| RefineError::MissingEvaluation {
                event: event.id.clone(),
                spi: spi.clone(),
            })?;
        if eval.unit != mission.unit {
            return Err(RefineError::UnitMismatch {
                tree: tree.id.clone(),
                spi,
                expected: mission.unit,
                found: eval.unit,
            });
        }
        let Some(field_rate) = eval.point_rate else {
            continue;
        };
        let refined = per_demand(field_rate, &mission);
        if let Rate::Value(prior) = event.rate {
            let prior_rate = per_exposure(prior, &mission);
            let prior_events = (prior_rate * eval.total_exposure).round() as u64;
            let result = deviation_test(
                (prior_events, eval.total_exposure),
                (eval.total_events, eval.total_exposure),
                alpha,
            )?;
            if result.verdict == DeviationVerdict::Deviating {
                flags.push(DeviationFlag {
                    event: event.id.clone(),
                    spi,
                    prior,
                    refined,
                    prior_events,
                    field_events: eval.total_events,
                    exposure: eval.total_exposure,
                    p_value: result.p_value,
                });
            }
        }
        out.update_event(&event.id, &|b| b.rate = Rate::Value(refined));
    }
    Ok((out, flags))
}
