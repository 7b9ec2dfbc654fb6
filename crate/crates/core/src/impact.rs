//! Change impact analysis. Change events on artifacts, elements or SPIs
//! are propagated through dynamic links and the argument graph:
//!
//! | rule | trigger | effect |
//! |------|---------|--------|
//! | R1 | artifact `content_changed` / `version_bumped` | linked solutions need review |
//! | R1 | artifact `statement_edited` (editorial) | strict-linked solutions need review; `robust_to_editorial` links suppress it |
//! | R2 | artifact `deleted` | linked solutions invalidated |
//! | R3 | element edited / changed / deleted; SPI edited | the element (or the SPI's claims) need review, deleted elements invalidated |
//! | R4 | element not unaffected | every `supported_by` ancestor needs review |
//! | R5 | context, assumption or justification not unaffected | every element holding `in_context_of` to it needs review |
//!
//! An impact that originates in an editorial edit stays editorial as it
//! propagates and is stopped by any link or edge annotated
//! `robust_to_editorial`. States only escalate; invalidated dominates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argument::{ElementKind, SafetyCase};
use crate::evidence::Sensitivity;
use crate::report::{Finding, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    ContentChanged,
    Deleted,
    VersionBumped,
    StatementEdited,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeEvent {
    pub target: String,
    pub kind: ChangeKind,
    #[serde(default)]
    pub detail: String,
}

impl ChangeEvent {
    pub fn new(target: impl Into<String>, kind: ChangeKind) -> Self {
        Self {
            target: target.into(),
            kind,
            detail: String::new(),
        }
    }
}

/// Sensitivity of a dynamic link (by link id) or of an argument edge
/// (written `from->to`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkAnnotation {
    pub target: String,
    pub sensitivity: Sensitivity,
    #[serde(default)]
    pub rationale: String,
}

impl LinkAnnotation {
    pub fn new(target: impl Into<String>, sensitivity: Sensitivity) -> Self {
        Self {
            target: target.into(),
            sensitivity,
            rationale: String::new(),
        }
    }

    pub fn edge(from: &str, to: &str, sensitivity: Sensitivity) -> Self {
        Self::new(edge_key(from, to), sensitivity)
    }
}

pub fn edge_key(from: &str, to: &str) -> String {
    format!("{from}->{to}")
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ImpactState {
    #[default]
    Unaffected,
    NeedsReview,
    Invalidated,
}

impl ImpactState {
    pub fn as_str(self) -> &'static str {
        match self {
            ImpactState::Unaffected => "unaffected",
            ImpactState::NeedsReview => "needs_review",
            ImpactState::Invalidated => "invalidated",
        }
    }
}

impl fmt::Display for ImpactState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TraceStep {
    pub from: String,
    pub to: String,
    pub rule: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactReport {
    /// Every element of the case.
    pub states: BTreeMap<String, ImpactState>,
    pub trace: Vec<TraceStep>,
}

impl ImpactReport {
    pub fn state(&self, id: &str) -> ImpactState {
        self.states.get(id).copied().unwrap_or_default()
    }

    pub fn impacted(&self) -> BTreeSet<&str> {
        self.states
            .iter()
            .filter(|(_, s)| **s != ImpactState::Unaffected)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn count(&self, state: ImpactState) -> usize {
        self.states.values().filter(|s| **s == state).count()
    }

    pub fn all_unaffected(&self) -> bool {
        self.impacted().is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImpactError {
    #[error("change target `{0}` is not an element, SPI or evidence artifact of the case")]
    UnknownTarget(String),
    #[error(
        "annotation target `{0}` is neither a dynamic link id nor an existing `from->to` edge"
    )]
    UnknownAnnotation(String),
    #[error("`{0}` is annotated more than once")]
    DuplicateAnnotation(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

const EDITORIAL: u8 = 1;
const REVIEW: u8 = 2;
const INVALID: u8 = 3;

fn state_of(level: u8) -> ImpactState {
    match level {
        0 => ImpactState::Unaffected,
        INVALID => ImpactState::Invalidated,
        _ => ImpactState::NeedsReview,
    }
}

/// Applies the rule table to a fixpoint.
pub fn propagate(
    case: &SafetyCase,
    events: &[ChangeEvent],
    annotations: &[LinkAnnotation],
) -> Result<ImpactReport, ImpactError> {
    let index = case.index();
    let edges: BTreeSet<String> = case
        .edges
        .iter()
        .map(|e| edge_key(&e.from, &e.to))
        .collect();
    let mut robust: BTreeMap<&str, Sensitivity> = BTreeMap::new();
    for a in annotations {
        if case.link(&a.target).is_none() && !edges.contains(&a.target) {
            return Err(ImpactError::UnknownAnnotation(a.target.clone()));
        }
        if robust.insert(a.target.as_str(), a.sensitivity).is_some() {
            return Err(ImpactError::DuplicateAnnotation(a.target.clone()));
        }
    }
    let link_sensitivity = |id: &str| {
        robust
            .get(id)
            .copied()
            .unwrap_or_else(|| case.link(id).map(|l| l.sensitivity).unwrap_or_default())
    };
    let edge_robust = |from: &str, to: &str| {
        robust.get(edge_key(from, to).as_str()) == Some(&Sensitivity::RobustToEditorial)
    };

    // Seeds: (element, level, source, rule), a set so event order is irrelevant.
    let mut seeds: BTreeSet<(String, u8, String, &'static str)> = BTreeSet::new();
    let events: BTreeSet<&ChangeEvent> = events.iter().collect();
    for ev in events {
        let editorial_or = |l: u8| {
            if ev.kind == ChangeKind::StatementEdited {
                EDITORIAL
            } else {
                l
            }
        };
        if let Some(el) = case.element(&ev.target) {
            let level = if ev.kind == ChangeKind::Deleted {
                INVALID
            } else {
                editorial_or(REVIEW)
            };
            seeds.insert((el.id.clone(), level, ev.target.clone(), "R3"));
        } else if case.spi(&ev.target).is_some() {
            for el in case
                .elements
                .iter()
                .filter(|e| case.attached_spis(&e.id).contains(&ev.target))
            {
                seeds.insert((el.id.clone(), editorial_or(REVIEW), ev.target.clone(), "R3"));
            }
        } else if case.evidence.iter().any(|l| l.artifact == ev.target) {
            for link in case.evidence.iter().filter(|l| l.artifact == ev.target) {
                let (level, rule) = match ev.kind {
                    ChangeKind::Deleted => (INVALID, "R2"),
                    ChangeKind::StatementEdited
                        if link_sensitivity(&link.id) == Sensitivity::RobustToEditorial =>
                    {
                        continue
                    }
                    ChangeKind::StatementEdited => (EDITORIAL, "R1"),
                    ChangeKind::ContentChanged | ChangeKind::VersionBumped => (REVIEW, "R1"),
                };
                for el in case
                    .elements
                    .iter()
                    .filter(|e| e.evidence_links.contains(&link.id))
                {
                    seeds.insert((el.id.clone(), level, ev.target.clone(), rule));
                }
            }
        } else {
            return Err(ImpactError::UnknownTarget(ev.target.clone()));
        }
    }

    let mut level: BTreeMap<&str, u8> = index.kinds.keys().map(|k| (*k, 0)).collect();
    let mut work: Vec<&str> = Vec::new();
    for (el, l, _, _) in &seeds {
        if let Some((k, cur)) = level.get_key_value(el.as_str()).map(|(k, v)| (*k, *v)) {
            if *l > cur {
                level.insert(k, *l);
                work.push(k);
            }
        }
    }
    // Upward targets of an element with its rule, after suppression.
    let targets = |x: &str, l: u8| -> Vec<(&str, &'static str)> {
        let mut out: Vec<(&str, &'static str)> = Vec::new();
        for p in index.parents(x) {
            if !(l == EDITORIAL && edge_robust(p, x)) {
                out.push((p, "R4"));
            }
        }
        if index.kinds.get(x).is_some_and(|k| k.is_contextual()) {
            for h in index.context_holders(x) {
                if !(l == EDITORIAL && edge_robust(h, x)) {
                    out.push((h, "R5"));
                }
            }
        }
        out
    };
    while let Some(x) = work.pop() {
        let l = level[x];
        let passed = l.min(REVIEW);
        for (y, _) in targets(x, l) {
            let cur = level[y];
            if passed > cur {
                level.insert(y, passed);
                work.push(y);
            }
        }
    }

    let mut trace: BTreeSet<TraceStep> = BTreeSet::new();
    for (el, _, src, rule) in &seeds {
        trace.insert(TraceStep {
            from: src.clone(),
            to: el.clone(),
            rule: rule.to_string(),
        });
    }
    for (x, l) in &level {
        if *l == 0 {
            continue;
        }
        for (y, rule) in targets(x, *l) {
            trace.insert(TraceStep {
                from: x.to_string(),
                to: y.to_string(),
                rule: rule.to_string(),
            });
        }
    }
    Ok(ImpactReport {
        states: level
            .into_iter()
            .map(|(k, l)| (k.to_string(), state_of(l)))
            .collect(),
        trace: trace.into_iter().collect(),
    })
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>, ImpactError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(serde_json::from_str(t).map_err(|e| ImpactError::Syntax {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// One JSON object per line: `{"target": .., "kind": .., "detail": ..}`.
pub fn parse_change_events(text: &str) -> Result<Vec<ChangeEvent>, ImpactError> {
    parse_jsonl(text)
}

/// One JSON object per line: `{"target": .., "sensitivity": .., "rationale": ..}`.
pub fn parse_annotations(text: &str) -> Result<Vec<LinkAnnotation>, ImpactError> {
    parse_jsonl(text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LintThresholds {
    /// Goals one solution may support before a warning.
    pub max_solution_fan_in: usize,
    /// Solutions one artifact may be strict-linked from before a warning.
    pub max_artifact_links: usize,
}

impl Default for LintThresholds {
    fn default() -> Self {
        Self {
            max_solution_fan_in: 5,
            max_artifact_links: 5,
        }
    }
}

pub mod rules {
    pub const SOLUTION_FAN_IN: &str = "solution_fan_in";
    pub const ARTIFACT_FAN_OUT: &str = "artifact_fan_out";
}

/// Warnings for structures that widen the impact of a single change.
pub fn structure_lint(case: &SafetyCase, thresholds: &LintThresholds) -> ValidationReport {
    let index = case.index();
    let mut f = Vec::new();
    for el in case
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::Solution)
    {
        let goals: BTreeSet<&str> = index
            .parents(&el.id)
            .iter()
            .filter(|p| index.kinds.get(*p) == Some(&ElementKind::Goal))
            .copied()
            .collect();
        if goals.len() > thresholds.max_solution_fan_in {
            f.push(Finding::warning(
                &el.id,
                rules::SOLUTION_FAN_IN,
                format!(
                    "supports {} goals (threshold {})",
                    goals.len(),
                    thresholds.max_solution_fan_in
                ),
            ));
        }
    }
    let mut by_artifact: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for link in case
        .evidence
        .iter()
        .filter(|l| l.sensitivity == Sensitivity::Strict)
    {
        for el in case
            .elements
            .iter()
            .filter(|e| e.kind == ElementKind::Solution && e.evidence_links.contains(&link.id))
        {
            by_artifact
                .entry(&link.artifact)
                .or_default()
                .insert(&el.id);
        }
    }
    for (artifact, sols) in by_artifact {
        if sols.len() > thresholds.max_artifact_links {
            f.push(Finding::warning(
                artifact,
                rules::ARTIFACT_FAN_OUT,
                format!(
                    "strict-linked from {} solutions (threshold {})",
                    sols.len(),
                    thresholds.max_artifact_links
                ),
            ));
        }
    }
    ValidationReport::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scdl::parse;

    fn case(extra: &str) -> SafetyCase {
        let text = format!(
            r#"case "x" {{
              goal G1 "top" {{ supported_by: G2, G3; in_context_of: C1 }}
              goal G2 "left" {{ supported_by: Sn1 }}
              goal G3 "right" {{ supported_by: Sn2 }}
              solution Sn1 "a" {{ evidence: E1 }}
              solution Sn2 "b" {{ evidence: E2 }}
              context C1 "odd"
              evidence E1 uri "art1" version latest;
              evidence E2 uri "art2" version latest sensitivity robust_to_editorial;
              {extra}
            }}"#
        );
        let r = parse(&text);
        assert!(!r.has_errors(), "{:?}", r.diagnostics);
        r.case.unwrap()
    }

    #[test]
    fn no_events_no_impact() {
        assert!(propagate(&case(""), &[], &[]).unwrap().all_unaffected());
    }

    #[test]
    fn content_change_climbs_to_root_only() {
        let r = propagate(
            &case(""),
            &[ChangeEvent::new("art1", ChangeKind::ContentChanged)],
            &[],
        )
        .unwrap();
        assert_eq!(r.impacted(), BTreeSet::from(["G1", "G2", "Sn1"]));
        for id in r.impacted() {
            assert!(r.trace.iter().any(|s| s.to == id));
        }
    }

    #[test]
    fn robust_link_ignores_editorial_change() {
        let r = propagate(
            &case(""),
            &[ChangeEvent::new("art2", ChangeKind::StatementEdited)],
            &[],
        )
        .unwrap();
        assert!(r.all_unaffected());
        let r = propagate(
            &case(""),
            &[ChangeEvent::new("art2", ChangeKind::Deleted)],
            &[],
        )
        .unwrap();
        assert_eq!(r.state("Sn2"), ImpactState::Invalidated);
        assert_eq!(r.state("G3"), ImpactState::NeedsReview);
    }

    #[test]
    fn context_change_reaches_holders() {
        let r = propagate(
            &case(""),
            &[ChangeEvent::new("C1", ChangeKind::StatementEdited)],
            &[],
        )
        .unwrap();
        assert_eq!(r.impacted(), BTreeSet::from(["C1", "G1"]));
        let ann = [LinkAnnotation::edge(
            "G1",
            "C1",
            Sensitivity::RobustToEditorial,
        )];
        let r = propagate(
            &case(""),
            &[ChangeEvent::new("C1", ChangeKind::StatementEdited)],
            &ann,
        )
        .unwrap();
        assert_eq!(r.impacted(), BTreeSet::from(["C1"]));
    }

    #[test]
    fn unknown_targets_rejected() {
        assert_eq!(
            propagate(
                &case(""),
                &[ChangeEvent::new("nope", ChangeKind::Deleted)],
                &[]
            ),
            Err(ImpactError::UnknownTarget("nope".into()))
        );
        assert!(propagate(
            &case(""),
            &[],
            &[LinkAnnotation::new("X->Y", Sensitivity::Strict)]
        )
        .is_err());
    }

    #[test]
    fn artifact_fan_out_threshold() {
        let mut extra = String::new();
        for i in 0..6 {
            extra.push_str(&format!("solution X{i} \"s\" {{ evidence: E9 }}\n goal GX{i} \"g\" {{ supported_by: X{i} }}\n"));
        }
        extra.push_str("evidence E9 uri \"shared\" version latest;");
        let c = case(&extra);
        let r = structure_lint(&c, &LintThresholds::default());
        assert_eq!(r.with_rule(rules::ARTIFACT_FAN_OUT).count(), 1);
        let r = structure_lint(
            &c,
            &LintThresholds {
                max_artifact_links: 10,
                ..Default::default()
            },
        );
        assert!(r.is_empty());
    }

    #[test]
    fn event_lines() {
        let ev = parse_change_events("{\"target\":\"a\",\"kind\":\"deleted\"}\n\n").unwrap();
        assert_eq!(ev, vec![ChangeEvent::new("a", ChangeKind::Deleted)]);
        assert!(matches!(
            parse_change_events("{}"),
            Err(ImpactError::Syntax { line: 1, .. })
        ));
    }
}
