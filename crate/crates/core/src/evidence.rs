//! Versioned registry of external evidence artifacts.
//!
//! Artifacts are identified by their locator (the `uri` of an SCDL
//! `evidence` item). Each registration records a SHA-256 digest of the
//! content; the content itself is not stored. The registry persists as an
//! append-only journal, one tab-separated record per line:
//!
//! ```text
//! artifact_id <TAB> seq <TAB> sha256-hex <TAB> 2026-01-31T12:00:00Z
//! ```
//!
//! A trailing line without a newline is a torn write and is ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VersionSelector {
    Latest,
    Pinned(u64),
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Sensitivity {
    #[default]
    Strict,
    RobustToEditorial,
}

impl Sensitivity {
    pub fn keyword(self) -> &'static str {
        match self {
            Sensitivity::Strict => "strict",
            Sensitivity::RobustToEditorial => "robust_to_editorial",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "strict" => Some(Sensitivity::Strict),
            "robust_to_editorial" => Some(Sensitivity::RobustToEditorial),
            _ => None,
        }
    }
}

/// A reference from the argument to one artifact, either following its
/// latest version or pinned to a sequence number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicLink {
    pub id: String,
    pub artifact: String,
    pub selector: VersionSelector,
    pub sensitivity: Sensitivity,
}

impl DynamicLink {
    pub fn latest(id: impl Into<String>, artifact: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            artifact: artifact.into(),
            selector: VersionSelector::Latest,
            sensitivity: Sensitivity::Strict,
        }
    }

    pub fn pinned(id: impl Into<String>, artifact: impl Into<String>, seq: u64) -> Self {
        Self {
            selector: VersionSelector::Pinned(seq),
            ..Self::latest(id, artifact)
        }
    }

    pub fn with_sensitivity(mut self, sensitivity: Sensitivity) -> Self {
        self.sensitivity = sensitivity;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactVersion {
    pub seq: u64,
    pub content_digest: String,
    pub recorded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceArtifact {
    pub id: String,
    pub versions: Vec<ArtifactVersion>,
}

impl EvidenceArtifact {
    pub fn head(&self) -> Option<&ArtifactVersion> {
        self.versions.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Freshness {
    Fresh,
    Stale,
}

impl fmt::Display for Freshness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Freshness::Fresh => "fresh",
            Freshness::Stale => "stale",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResolveError {
    #[error("artifact `{0}` is not registered")]
    MissingArtifact(String),
    #[error("artifact `{artifact}` has no version {seq}")]
    MissingVersion { artifact: String, seq: u64 },
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("journal line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("artifact id {0:?} cannot be journaled (empty or contains tab/newline)")]
    InvalidArtifactId(String),
}

/// Hex SHA-256 of `content`.
pub fn content_digest(content: &[u8]) -> String {
    hex::encode(Sha256::digest(content))
}

fn format_timestamp(at: &DateTime<Utc>) -> String {
    at.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvidenceRegistry {
    artifacts: BTreeMap<String, EvidenceArtifact>,
}

impl EvidenceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn artifact(&self, id: &str) -> Option<&EvidenceArtifact> {
        self.artifacts.get(id)
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &EvidenceArtifact> {
        self.artifacts.values()
    }

    /// Records a new version stamped with the current time.
    pub fn register_version(&mut self, artifact_id: &str, content: &[u8]) -> ArtifactVersion {
        self.register_version_at(artifact_id, content, Utc::now()).0
    }

    /// Records a new version unless `content` equals the current head, in
    /// which case the head is returned unchanged. The flag tells whether a
    /// version was appended.
    pub fn register_version_at(
        &mut self,
        artifact_id: &str,
        content: &[u8],
        at: DateTime<Utc>,
    ) -> (ArtifactVersion, bool) {
        let digest = content_digest(content);
        let artifact = self
            .artifacts
            .entry(artifact_id.to_string())
            .or_insert_with(|| EvidenceArtifact {
                id: artifact_id.to_string(),
                versions: Vec::new(),
            });
        if let Some(head) = artifact.head() {
            if head.content_digest == digest {
                return (head.clone(), false);
            }
        }
        let version = ArtifactVersion {
            seq: artifact.head().map_or(1, |h| h.seq + 1),
            content_digest: digest,
            recorded_at: at.trunc_subsecs(0),
        };
        artifact.versions.push(version.clone());
        (version, true)
    }

    pub fn resolve(&self, link: &DynamicLink) -> Result<&ArtifactVersion, ResolveError> {
        let artifact = self
            .artifacts
            .get(&link.artifact)
            .ok_or_else(|| ResolveError::MissingArtifact(link.artifact.clone()))?;
        match link.selector {
            VersionSelector::Latest => artifact
                .head()
                .ok_or_else(|| ResolveError::MissingArtifact(link.artifact.clone())),
            VersionSelector::Pinned(seq) => artifact.versions.iter().find(|v| v.seq == seq).ok_or(
                ResolveError::MissingVersion {
                    artifact: link.artifact.clone(),
                    seq,
                },
            ),
        }
    }

    /// Stale iff the resolved version is newer than the last reviewed one,
    /// or the link does not resolve at all.
    pub fn staleness(&self, link: &DynamicLink, last_reviewed_seq: u64) -> Freshness {
        match self.resolve(link) {
            Ok(v) if v.seq <= last_reviewed_seq => Freshness::Fresh,
            _ => Freshness::Stale,
        }
    }

    /// Journal lines for every version, grouped by artifact.
    pub fn journal_lines(&self) -> Vec<String> {
        self.artifacts
            .values()
            .flat_map(|a| a.versions.iter().map(move |v| journal_line(&a.id, v)))
            .collect()
    }

    /// Rebuilds a registry from journal text. A final line lacking its
    /// newline is ignored.
    pub fn from_journal(text: &str) -> Result<Self, JournalError> {
        let mut registry = Self::new();
        let complete = match text.rfind('\n') {
            Some(end) => &text[..end + 1],
            None => "",
        };
        for (i, raw) in complete.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: String| JournalError::Malformed {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, seq, digest, ts] = fields[..] else {
                return Err(malformed(format!(
                    "expected 4 tab-separated fields, found {}",
                    fields.len()
                )));
            };
            let seq: u64 = seq
                .parse()
                .map_err(|_| malformed(format!("bad sequence number `{seq}`")))?;
            if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(malformed("digest must be 64 hex characters".into()));
            }
            let recorded_at = DateTime::parse_from_rfc3339(ts)
                .map_err(|e| malformed(format!("bad timestamp `{ts}`: {e}")))?
                .with_timezone(&Utc);
            let artifact =
                registry
                    .artifacts
                    .entry(id.to_string())
                    .or_insert_with(|| EvidenceArtifact {
                        id: id.to_string(),
                        versions: Vec::new(),
                    });
            let expected = artifact.head().map_or(1, |h| h.seq + 1);
            if seq != expected {
                return Err(malformed(format!(
                    "artifact `{id}`: sequence {seq}, expected {expected}"
                )));
            }
            artifact.versions.push(ArtifactVersion {
                seq,
                content_digest: digest.to_ascii_lowercase(),
                recorded_at,
            });
        }
        Ok(registry)
    }
}

fn journal_line(artifact_id: &str, v: &ArtifactVersion) -> String {
    format!(
        "{artifact_id}\t{}\t{}\t{}\n",
        v.seq,
        v.content_digest,
        format_timestamp(&v.recorded_at)
    )
}

/// File-backed registry. Registrations append one line each; nothing is
/// ever rewritten.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    registry: EvidenceRegistry,
}

impl Journal {
    /// Opens (or starts) the journal at `path`.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JournalError> {
        let path = path.as_ref().to_path_buf();
        let registry = match fs::read_to_string(&path) {
            Ok(text) => EvidenceRegistry::from_journal(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => EvidenceRegistry::new(),
            Err(source) => return Err(JournalError::Io { path, source }),
        };
        Ok(Self { path, registry })
    }

    pub fn registry(&self) -> &EvidenceRegistry {
        &self.registry
    }

    pub fn into_registry(self) -> EvidenceRegistry {
        self.registry
    }

    pub fn register(
        &mut self,
        artifact_id: &str,
        content: &[u8],
    ) -> Result<ArtifactVersion, JournalError> {
        self.register_at(artifact_id, content, Utc::now())
    }

    pub fn register_at(
        &mut self,
        artifact_id: &str,
        content: &[u8],
        at: DateTime<Utc>,
    ) -> Result<ArtifactVersion, JournalError> {
        if artifact_id.is_empty() || artifact_id.contains(['\t', '\n', '\r']) {
            return Err(JournalError::InvalidArtifactId(artifact_id.to_string()));
        }
        let (version, appended) = self.registry.register_version_at(artifact_id, content, at);
        if appended {
            let io = |source| JournalError::Io {
                path: self.path.clone(),
                source,
            };
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)
                .map_err(io)?;
            file.write_all(journal_line(artifact_id, &version).as_bytes())
                .map_err(io)?;
            file.sync_data().map_err(io)?;
        }
        Ok(version)
    }
}
