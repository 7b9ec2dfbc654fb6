use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::bounds::{rate_lower_bound, rate_upper_bound};
use super::telemetry::{TelemetryStore, Window};
use super::{Direction, ExposureUnit, SpiDefinition, SpiStatus};
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpiEvaluation {
    pub spi_id: String,
    pub window: Window,
    pub unit: ExposureUnit,
    pub total_events: u64,
    pub total_exposure: f64,
    /// `None` when there is no exposure.
    pub point_rate: Option<f64>,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub threshold: f64,
    pub status: SpiStatus,
    /// The credible bound lies on the same side of the threshold as the
    /// point estimate.
    pub confidence_met: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvaluateError {
    #[error(
        "SPI `{spi}` is defined per {expected} but metric `{metric}` has telemetry per {found}"
    )]
    UnitMismatch {
        spi: String,
        metric: String,
        expected: ExposureUnit,
        found: ExposureUnit,
    },
}

/// Evaluates an SPI over the store's records inside `window`.
pub fn evaluate(
    spi: &SpiDefinition,
    store: &TelemetryStore,
    window: &Window,
) -> Result<SpiEvaluation, EvaluateError> {
    let (totals, units) = store.window_totals(&spi.metric, window);
    if let Some(found) = units.into_iter().find(|u| *u != spi.unit) {
        return Err(EvaluateError::UnitMismatch {
            spi: spi.id.clone(),
            metric: spi.metric.clone(),
            expected: spi.unit,
            found,
        });
    }
    Ok(evaluate_totals(
        spi,
        totals.events,
        totals.exposure,
        window.clone(),
    ))
}

/// Evaluation from pre-aggregated totals.
pub fn evaluate_totals(
    spi: &SpiDefinition,
    events: u64,
    exposure: f64,
    window: Window,
) -> SpiEvaluation {
    let mut eval = SpiEvaluation {
        spi_id: spi.id.clone(),
        window,
        unit: spi.unit,
        total_events: events,
        total_exposure: exposure,
        point_rate: None,
        lower_bound: None,
        upper_bound: None,
        threshold: spi.threshold,
        status: SpiStatus::NoData,
        confidence_met: false,
    };
    if exposure <= 0.0 {
        return eval;
    }
    let point = events as f64 / exposure;
    let upper = rate_upper_bound(events, exposure, spi.confidence_target);
    let lower = rate_lower_bound(events, exposure, spi.confidence_target);
    let threshold = spi.threshold;
    let (status, confident) = match spi.direction {
        Direction::AtMost if point > threshold => (SpiStatus::Violated, lower > threshold),
        Direction::AtMost if upper <= threshold => (SpiStatus::Pass, true),
        Direction::AtMost => (SpiStatus::PassLowConfidence, false),
        Direction::AtLeast if point < threshold => (SpiStatus::Violated, upper < threshold),
        Direction::AtLeast if lower >= threshold => (SpiStatus::Pass, true),
        Direction::AtLeast => (SpiStatus::PassLowConfidence, false),
    };
    eval.point_rate = Some(point);
    eval.upper_bound = Some(upper);
    eval.lower_bound = Some(lower);
    eval.status = status;
    eval.confidence_met = confident;
    eval
}

/// Evaluates every SPI against one snapshot of the store. `windows` gives
/// per-SPI windows; absent entries use [`Window::all`].
pub fn evaluate_all(
    spis: &[SpiDefinition],
    store: &TelemetryStore,
    windows: &BTreeMap<String, Window>,
    exec: Exec,
) -> BTreeMap<String, Result<SpiEvaluation, EvaluateError>> {
    let all = Window::all();
    let results = exec.map(spis, |spi| {
        evaluate(spi, store, windows.get(&spi.id).unwrap_or(&all))
    });
    spis.iter().map(|s| s.id.clone()).zip(results).collect()
}
