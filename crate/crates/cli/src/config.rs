use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use livecase::impact::LintThresholds;
use livecase::spi::RemediationPolicy;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Text,
    Structured,
}

/// `livecase.toml`. Relative paths are taken from the file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Option<PathBuf>,
    #[serde(default)]
    pub telemetry: Vec<PathBuf>,
    pub evidence_journal: Option<PathBuf>,
    pub risk_matrix: Option<PathBuf>,
    /// Defaults to the case's own `hazard_log` reference.
    pub hazard_log: Option<PathBuf>,
    /// Change events folded into `evaluate` as an impact summary.
    pub events: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    /// Overrides every SPI's confidence target.
    pub confidence: Option<f64>,
    /// Significance level of the rate deviation test.
    pub alpha: Option<f64>,
    pub format: Option<Format>,
    /// Last reviewed artifact version per dynamic link id.
    #[serde(default)]
    pub reviewed: BTreeMap<String, u64>,
    #[serde(default)]
    pub policy: RemediationPolicy,
    #[serde(default)]
    pub lint: LintThresholds,
    #[serde(default)]
    pub verdict: VerdictConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerdictConfig {
    /// Whether warning findings alone make the verdict amber.
    pub warnings_are_amber: bool,
}

impl Default for VerdictConfig {
    fn default() -> Self {
        Self {
            warnings_are_amber: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.check()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.case,
            &mut self.evidence_journal,
            &mut self.risk_matrix,
            &mut self.hazard_log,
            &mut self.events,
            &mut self.annotations,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
        self.telemetry.iter_mut().for_each(join);
    }

    fn check(&self) -> Result<()> {
        if let Some(c) = self.confidence {
            if !(c > 0.0 && c < 1.0) {
                bail!("confidence must lie strictly between 0 and 1, got {c}");
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                bail!("alpha must lie strictly between 0 and 1, got {a}");
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(livecase::spi::DEFAULT_ALPHA)
    }
}
