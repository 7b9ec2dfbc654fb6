use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SafetyCase;
use crate::evidence::Freshness;
use crate::spi::SpiStatus;

/// Soundness of one element given current SPI and evidence state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementStatus {
    Supported,
    InQuestion,
    Violated,
    Stale,
}

impl ElementStatus {
    pub fn is_supported(self) -> bool {
        self == ElementStatus::Supported
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElementStatus::Supported => "supported",
            ElementStatus::InQuestion => "in_question",
            ElementStatus::Violated => "violated",
            ElementStatus::Stale => "stale",
        }
    }
}

impl fmt::Display for ElementStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Current status per SPI id.
pub type SpiState = BTreeMap<String, SpiStatus>;
/// Current freshness per dynamic link id.
pub type EvidenceState = BTreeMap<String, Freshness>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatusError {
    #[error("element `{element}` references SPI `{spi}` with no evaluation")]
    UnresolvedSpi { element: String, spi: String },
    #[error("element `{element}` references evidence link `{link}` with no freshness state")]
    UnresolvedEvidence { element: String, link: String },
    #[error("supported_by relation is cyclic")]
    Cyclic,
}

/// Per-element soundness. An element is `violated` if an attached SPI is
/// violated, `stale` if one of its evidence links is stale, `in_question`
/// if anything it is (transitively) supported by is not `supported`.
pub fn soundness_status(
    case: &SafetyCase,
    spi_state: &SpiState,
    evidence_state: &EvidenceState,
) -> Result<BTreeMap<String, ElementStatus>, StatusError> {
    let mut own = BTreeMap::new();
    for e in &case.elements {
        let mut status = None;
        for spi in case.attached_spis(&e.id) {
            match spi_state.get(&spi) {
                None => {
                    return Err(StatusError::UnresolvedSpi {
                        element: e.id.clone(),
                        spi,
                    })
                }
                Some(SpiStatus::Violated) => status = Some(ElementStatus::Violated),
                Some(_) => {}
            }
        }
        for link in &e.evidence_links {
            match evidence_state.get(link) {
                None => {
                    return Err(StatusError::UnresolvedEvidence {
                        element: e.id.clone(),
                        link: link.clone(),
                    })
                }
                Some(Freshness::Stale) if status.is_none() => status = Some(ElementStatus::Stale),
                Some(_) => {}
            }
        }
        own.insert(e.id.as_str(), status);
    }

    let index = case.index();
    let order = index.topological_order().ok_or(StatusError::Cyclic)?;
    let mut out: BTreeMap<String, ElementStatus> = BTreeMap::new();
    for id in order.into_iter().rev() {
        let status = match own.get(id).copied().flatten() {
            Some(s) => s,
            None if index.children(id).iter().any(|c| !out[*c].is_supported()) => {
                ElementStatus::InQuestion
            }
            None => ElementStatus::Supported,
        };
        out.insert(id.to_string(), status);
    }
    Ok(out)
}
