use std::collections::BTreeSet;

use thiserror::Error;

use super::{InterfaceTag, SafetyCase};
use crate::report::{Finding, ValidationReport};

pub const UNMATCHED_ASSUMPTION: &str = "unmatched_assumption";
pub const UNUSED_GUARANTEE: &str = "unused_guarantee";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("child case `{0}` declares no interface")]
    MissingInterface(String),
}

/// Lower-cased, with runs of whitespace collapsed to a single space.
pub fn normalize_statement(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Checks that `child` can be embedded in `parent`: every assumption of the
/// child must be matched by a guarantee of the parent (same tag, same
/// normalized text). Child guarantees no parent assumption relies on are
/// reported as warnings.
pub fn compose(parent: &SafetyCase, child: &SafetyCase) -> Result<ValidationReport, ComposeError> {
    let child_iface = child
        .interface
        .as_ref()
        .ok_or_else(|| ComposeError::MissingInterface(child.name.clone()))?;
    let empty = Default::default();
    let parent_iface = parent.interface.as_ref().unwrap_or(&empty);

    let key = |tag: InterfaceTag, s: &str| (tag, normalize_statement(s));
    let parent_guarantees: BTreeSet<_> = parent_iface
        .guarantees
        .iter()
        .map(|g| key(g.tag, &g.statement))
        .collect();
    let parent_assumptions: BTreeSet<_> = parent_iface
        .assumptions
        .iter()
        .map(|a| key(a.tag, &a.statement))
        .collect();

    let mut findings = Vec::new();
    for (i, a) in child_iface.assumptions.iter().enumerate() {
        if !parent_guarantees.contains(&key(a.tag, &a.statement)) {
            findings.push(Finding::error(
                format!("{}/assume[{i}]", child.name),
                UNMATCHED_ASSUMPTION,
                format!(
                    "no guarantee of `{}` discharges {} \"{}\"",
                    parent.name,
                    a.tag.keyword(),
                    a.statement
                ),
            ));
        }
    }
    for (i, g) in child_iface.guarantees.iter().enumerate() {
        if !parent_assumptions.contains(&key(g.tag, &g.statement)) {
            findings.push(Finding::warning(
                format!("{}/guarantee[{i}]", child.name),
                UNUSED_GUARANTEE,
                format!(
                    "guarantee {} \"{}\" is not relied on by `{}`",
                    g.tag.keyword(),
                    g.statement,
                    parent.name
                ),
            ));
        }
    }
    Ok(ValidationReport::new(findings))
}
