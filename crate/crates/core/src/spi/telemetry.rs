use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ExposureUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Simulation,
    RoadTest,
    Deployment,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Simulation, Phase::RoadTest, Phase::Deployment];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Simulation => "simulation",
            Phase::RoadTest => "road_test",
            Phase::Deployment => "deployment",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One telemetry line: `count` events observed over `exposure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TelemetryRecord {
    #[serde(rename = "ts")]
    pub timestamp: DateTime<Utc>,
    pub metric: String,
    pub count: u64,
    pub exposure: f64,
    pub unit: ExposureUnit,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TelemetryDiagnostic {
    /// 1-based line number in the source.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for TelemetryDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Parses one JSON object line. Field names are exact; unknown fields are
/// rejected.
pub fn parse_telemetry_line(line: &str) -> Result<TelemetryRecord, String> {
    let record: TelemetryRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if !(record.exposure.is_finite() && record.exposure > 0.0) {
        return Err(format!(
            "exposure must be positive, got {}",
            record.exposure
        ));
    }
    if record.metric.is_empty() {
        return Err("metric must not be empty".into());
    }
    Ok(record)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub accepted: usize,
    pub rejected: Vec<TelemetryDiagnostic>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Totals {
    pub events: u64,
    pub exposure: f64,
}

/// Observation window: a phase filter (`None` = every phase) and a
/// half-open time range.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub phases: Option<BTreeSet<Phase>>,
    pub from: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
}

impl Window {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn phases(phases: impl IntoIterator<Item = Phase>) -> Self {
        Self {
            phases: Some(phases.into_iter().collect()),
            ..Self::default()
        }
    }

    pub fn contains(&self, r: &TelemetryRecord) -> bool {
        self.phases.as_ref().is_none_or(|p| p.contains(&r.phase))
            && self.from.is_none_or(|f| r.timestamp >= f)
            && self.until.is_none_or(|u| r.timestamp < u)
    }
}

/// Append-only store of accepted records.
#[derive(Debug, Clone, Default)]
pub struct TelemetryStore {
    records: Vec<TelemetryRecord>,
}

impl TelemetryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    pub fn ingest(&mut self, records: impl IntoIterator<Item = TelemetryRecord>) {
        self.records.extend(records);
    }

    /// Ingests line-delimited JSON. Blank lines and `#` comments are
    /// skipped; every other bad line yields a diagnostic.
    pub fn ingest_lines(&mut self, text: &str) -> IngestSummary {
        let mut summary = IngestSummary::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_telemetry_line(line) {
                Ok(r) => {
                    self.records.push(r);
                    summary.accepted += 1;
                }
                Err(message) => summary.rejected.push(TelemetryDiagnostic {
                    line: i + 1,
                    message,
                }),
            }
        }
        summary
    }

    /// Totals per `(metric, phase)`.
    pub fn totals(&self) -> BTreeMap<(String, Phase), Totals> {
        let mut groups: BTreeMap<(String, Phase), (u64, Vec<f64>)> = BTreeMap::new();
        for r in &self.records {
            let g = groups.entry((r.metric.clone(), r.phase)).or_default();
            g.0 += r.count;
            g.1.push(r.exposure);
        }
        groups
            .into_iter()
            .map(|(key, (events, exposures))| {
                (
                    key,
                    Totals {
                        events,
                        exposure: canonical_sum(exposures),
                    },
                )
            })
            .collect()
    }

    /// Totals for one metric inside a window, with the set of units seen.
    pub fn window_totals(
        &self,
        metric: &str,
        window: &Window,
    ) -> (Totals, BTreeSet<super::ExposureUnit>) {
        let mut events = 0;
        let mut exposures = Vec::new();
        let mut units = BTreeSet::new();
        for r in self.records.iter().filter(|r| r.metric == metric) {
            units.insert(r.unit);
            if window.contains(r) {
                events += r.count;
                exposures.push(r.exposure);
            }
        }
        (
            Totals {
                events,
                exposure: canonical_sum(exposures),
            },
            units,
        )
    }
}

/// Sum in ascending order so the result does not depend on arrival order.
fn canonical_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}
