//! Example bundles shipped with the crate under `fixtures/<name>/`. Each
//! holds `case.scdl`, `telemetry.jsonl`, `evidence.log`,
//! `risk_matrix.toml`, `hazards.scdl-log` and a `livecase.toml` run
//! configuration. All numbers in them are illustrative.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::argument::{validate_wellformed, SafetyCase};
use crate::evidence::{EvidenceRegistry, JournalError};
use crate::hazard::{HazardError, HazardLog, RiskMatrix};
use crate::scdl;
use crate::spi::{IngestSummary, TelemetryStore};

pub const FIXTURE_NAMES: [&str; 4] = [
    "minimal",
    "oascf_template",
    "sotif_pedestrian",
    "deviation_demo",
];

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown fixture `{0}`; expected one of minimal, oascf_template, sotif_pedestrian, deviation_demo")]
    Unknown(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error(transparent)]
    Hazard(#[from] HazardError),
}

#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub name: String,
    pub dir: PathBuf,
    pub case_text: String,
    pub case: SafetyCase,
    pub telemetry: TelemetryStore,
    pub telemetry_summary: IngestSummary,
    pub evidence: EvidenceRegistry,
    pub risk_matrix: RiskMatrix,
    pub hazard_log: HazardLog,
}

/// Directory holding every shipped fixture.
pub fn fixtures_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_dir(name: &str) -> Result<PathBuf, FixtureError> {
    if FIXTURE_NAMES.contains(&name) {
        Ok(fixtures_root().join(name))
    } else {
        Err(FixtureError::Unknown(name.to_string()))
    }
}

pub fn load_fixture(name: &str) -> Result<FixtureSet, FixtureError> {
    load_fixture_from(fixture_dir(name)?)
}

fn read(path: PathBuf) -> Result<String, FixtureError> {
    fs::read_to_string(&path).map_err(|source| FixtureError::Io { path, source })
}

/// Loads a bundle from any directory with the fixture layout. The case
/// must parse and validate without errors.
pub fn load_fixture_from(dir: impl AsRef<Path>) -> Result<FixtureSet, FixtureError> {
    let dir = dir.as_ref().to_path_buf();
    let case_path = dir.join("case.scdl");
    let case_text = read(case_path.clone())?;
    let parsed = scdl::parse(&case_text);
    let Some(case) = parsed.case else {
        let message = parsed
            .errors()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(FixtureError::Invalid {
            path: case_path,
            message,
        });
    };
    let report = validate_wellformed(&case);
    if report.has_errors() {
        let message = report
            .errors()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(FixtureError::Invalid {
            path: case_path,
            message,
        });
    }
    let mut telemetry = TelemetryStore::new();
    let telemetry_summary = telemetry.ingest_lines(&read(dir.join("telemetry.jsonl"))?);
    let evidence = EvidenceRegistry::from_journal(&read(dir.join("evidence.log"))?)?;
    let risk_matrix = RiskMatrix::from_toml_str(&read(dir.join("risk_matrix.toml"))?)?;
    let hazard_log = HazardLog::from_toml_str(&read(dir.join("hazards.scdl-log"))?)?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(FixtureSet {
        name,
        dir,
        case_text,
        case,
        telemetry,
        telemetry_summary,
        evidence,
        risk_matrix,
        hazard_log,
    })
}
