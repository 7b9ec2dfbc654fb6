//! Quantitative fault trees: AND/OR gates over basic events with
//! per-demand probabilities, minimal cut sets, exact top-event probability,
//! risk budgets and rate refinement from SPI telemetry.
//!
//! Basic events are assumed independent. The same basic event may occur
//! in several places of a tree (a shared event); every occurrence must
//! carry the same definition.

mod budget;
mod cut_sets;
mod probability;
mod refine;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{Finding, ValidationReport};
use crate::spi::ExposureUnit;

pub use budget::{
    allocate_budget, allocate_budget_with, check_budgets, BudgetCheck, BudgetError, ROUNDING_MARGIN,
};
pub use cut_sets::{minimal_cut_sets, minimal_cut_sets_with, MAX_CUT_SET_EVENTS};
pub use probability::{
    factored_probability, gate_probability, inclusion_exclusion_probability,
    inclusion_exclusion_probability_with, node_probability, top_probability, top_probability_with,
    MAX_INCLUSION_EXCLUSION_SETS, MAX_SHARED_EVENTS,
};
pub use refine::{per_demand, per_exposure, refine_rates, DeviationFlag, RefineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateOp {
    And,
    Or,
}

impl GateOp {
    pub fn keyword(self) -> &'static str {
        match self {
            GateOp::And => "and",
            GateOp::Or => "or",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rate {
    /// Per-demand probability.
    Value(f64),
    /// Not yet estimated; blocks quantification.
    Placeholder,
}

impl Rate {
    pub fn value(self) -> Option<f64> {
        match self {
            Rate::Value(v) => Some(v),
            Rate::Placeholder => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    #[default]
    CausalFactor,
    TriggeringCondition,
    HwFailure,
    SwDefect,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::CausalFactor,
        EventKind::TriggeringCondition,
        EventKind::HwFailure,
        EventKind::SwDefect,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            EventKind::CausalFactor => "causal_factor",
            EventKind::TriggeringCondition => "triggering_condition",
            EventKind::HwFailure => "hw_failure",
            EventKind::SwDefect => "sw_defect",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicEvent {
    pub id: String,
    pub description: String,
    pub rate: Rate,
    pub spi_ref: Option<String>,
    pub kind: EventKind,
}

impl BasicEvent {
    pub fn new(id: impl Into<String>, rate: f64) -> Self {
        Self {
            id: id.into(),
            description: String::new(),
            rate: Rate::Value(rate),
            spi_ref: None,
            kind: EventKind::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FtNode {
    Gate(Gate),
    Basic(BasicEvent),
}

impl FtNode {
    pub fn id(&self) -> &str {
        match self {
            FtNode::Gate(g) => &g.id,
            FtNode::Basic(b) => &b.id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub id: String,
    pub op: GateOp,
    pub children: Vec<FtNode>,
}

impl Gate {
    pub fn new(id: impl Into<String>, op: GateOp, children: Vec<FtNode>) -> Self {
        Self {
            id: id.into(),
            op,
            children,
        }
    }

    pub fn and(id: impl Into<String>, children: Vec<FtNode>) -> Self {
        Self::new(id, GateOp::And, children)
    }

    pub fn or(id: impl Into<String>, children: Vec<FtNode>) -> Self {
        Self::new(id, GateOp::Or, children)
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a FtNode)) {
        for c in &self.children {
            f(c);
            if let FtNode::Gate(g) = c {
                g.visit(f);
            }
        }
    }

    /// Every basic-event occurrence below this gate, in depth-first order.
    pub fn basic_occurrences(&self) -> Vec<&BasicEvent> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let FtNode::Basic(b) = n {
                out.push(b);
            }
        });
        out
    }

    /// Every gate at or below this one, in depth-first order.
    pub fn gates(&self) -> Vec<&Gate> {
        let mut out = vec![self];
        self.visit(&mut |n| {
            if let FtNode::Gate(g) = n {
                out.push(g);
            }
        });
        out
    }

    pub fn find_gate(&self, id: &str) -> Option<&Gate> {
        self.gates().into_iter().find(|g| g.id == id)
    }

    /// Distinct basic event ids below this gate.
    pub fn event_ids(&self) -> BTreeSet<&str> {
        self.basic_occurrences()
            .into_iter()
            .map(|b| b.id.as_str())
            .collect()
    }
}

impl From<BasicEvent> for FtNode {
    fn from(b: BasicEvent) -> Self {
        FtNode::Basic(b)
    }
}

impl From<Gate> for FtNode {
    fn from(g: Gate) -> Self {
        FtNode::Gate(g)
    }
}

/// Exposure per demand, used to turn an event rate into a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub duration: f64,
    pub unit: ExposureUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitativeFaultTree {
    pub id: String,
    pub hazard_id: String,
    pub top: Gate,
    /// Risk targets per node id.
    pub budgets: BTreeMap<String, f64>,
    pub mission: Option<Mission>,
}

impl QuantitativeFaultTree {
    pub fn new(id: impl Into<String>, hazard_id: impl Into<String>, top: Gate) -> Self {
        Self {
            id: id.into(),
            hazard_id: hazard_id.into(),
            top,
            budgets: BTreeMap::new(),
            mission: None,
        }
    }

    /// One definition per distinct basic event id (the first occurrence).
    pub fn basic_events(&self) -> BTreeMap<&str, &BasicEvent> {
        let mut out = BTreeMap::new();
        for b in self.top.basic_occurrences() {
            out.entry(b.id.as_str()).or_insert(b);
        }
        out
    }

    /// Some basic event occurs more than once.
    pub fn has_shared_events(&self) -> bool {
        let occ = self.top.basic_occurrences();
        occ.len()
            != occ
                .iter()
                .map(|b| b.id.as_str())
                .collect::<BTreeSet<_>>()
                .len()
    }

    pub fn is_quantified(&self) -> bool {
        self.top
            .basic_occurrences()
            .iter()
            .all(|b| matches!(b.rate, Rate::Value(_)))
    }

    /// Replaces the definition of every occurrence of basic event `id`.
    pub(crate) fn update_event(&mut self, id: &str, f: &impl Fn(&mut BasicEvent)) {
        fn walk(g: &mut Gate, id: &str, f: &impl Fn(&mut BasicEvent)) {
            for c in &mut g.children {
                match c {
                    FtNode::Basic(b) if b.id == id => f(b),
                    FtNode::Basic(_) => {}
                    FtNode::Gate(g) => walk(g, id, f),
                }
            }
        }
        walk(&mut self.top, id, f);
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaultTreeError {
    #[error("tree `{tree}` has {count} basic events; the exact algorithm is limited to {limit}")]
    TooManyEvents {
        tree: String,
        count: usize,
        limit: usize,
    },
    #[error(
        "tree `{tree}` has {count} minimal cut sets; inclusion-exclusion is limited to {limit}"
    )]
    TooManyCutSets {
        tree: String,
        count: usize,
        limit: usize,
    },
    #[error("basic event `{event}` has rate {rate}, outside [0, 1]")]
    RateOutOfRange { event: String, rate: f64 },
    #[error("basic event `{event}` still has a placeholder rate; replace `rate tbd` with an estimate before quantifying")]
    PlaceholderRate { event: String },
    #[error("basic event `{event}` is defined inconsistently across its occurrences")]
    ConflictingEvent { event: String },
    #[error("gate `{gate}` has no children")]
    EmptyGate { gate: String },
    #[error("node `{node}` not found in tree `{tree}`")]
    UnknownNode { tree: String, node: String },
}

pub mod rules {
    pub const EMPTY_GATE: &str = "ft_empty_gate";
    pub const RATE_RANGE: &str = "ft_rate_range";
    pub const PLACEHOLDER: &str = "ft_placeholder_rate";
    pub const DUPLICATE_NODE: &str = "ft_duplicate_node";
    pub const BUDGET: &str = "ft_budget";
    pub const DANGLING_SPI: &str = "ft_dangling_spi";
    pub const MISSION: &str = "ft_mission";
}

/// Structural checks on a tree. `spi_ids`, when given, is the set of SPI
/// ids annotations may reference.
pub fn validate_tree(
    tree: &QuantitativeFaultTree,
    spi_ids: Option<&BTreeSet<&str>>,
) -> ValidationReport {
    let mut findings = Vec::new();
    let at = |node: &str| format!("{}/{}", tree.id, node);

    let mut gate_ids = BTreeSet::new();
    for g in tree.top.gates() {
        if g.children.is_empty() {
            findings.push(Finding::error(
                at(&g.id),
                rules::EMPTY_GATE,
                "gate has no children",
            ));
        }
        if !gate_ids.insert(g.id.as_str()) {
            findings.push(Finding::error(
                at(&g.id),
                rules::DUPLICATE_NODE,
                "gate id used more than once",
            ));
        }
    }
    let defs = tree.basic_events();
    for (id, def) in &defs {
        if gate_ids.contains(id) {
            findings.push(Finding::error(
                at(id),
                rules::DUPLICATE_NODE,
                "id used for both a gate and a basic event",
            ));
        }
        match def.rate {
            Rate::Value(p) if !(0.0..=1.0).contains(&p) => {
                findings.push(Finding::error(
                    at(id),
                    rules::RATE_RANGE,
                    format!("probability {p} is outside [0, 1]"),
                ));
            }
            Rate::Placeholder => {
                findings.push(Finding::warning(
                    at(id),
                    rules::PLACEHOLDER,
                    "placeholder rate blocks quantification",
                ));
            }
            Rate::Value(_) => {}
        }
        if let (Some(spi), Some(known)) = (&def.spi_ref, spi_ids) {
            if !known.contains(spi.as_str()) {
                findings.push(Finding::error(
                    at(id),
                    rules::DANGLING_SPI,
                    format!("unknown SPI `{spi}`"),
                ));
            }
        }
    }
    for b in tree.top.basic_occurrences() {
        if defs[b.id.as_str()] != b {
            findings.push(Finding::error(
                at(&b.id),
                rules::DUPLICATE_NODE,
                "shared basic event has conflicting definitions",
            ));
        }
    }
    if !tree.budgets.is_empty() && !tree.budgets.contains_key(&tree.top.id) {
        findings.push(Finding::error(
            at(&tree.top.id),
            rules::BUDGET,
            "budgets are declared but the top gate has none",
        ));
    }
    for (node, budget) in &tree.budgets {
        if !(gate_ids.contains(node.as_str()) || defs.contains_key(node.as_str())) {
            findings.push(Finding::error(
                at(node),
                rules::BUDGET,
                "budget for an unknown node",
            ));
        }
        if !(*budget > 0.0 && *budget <= 1.0) {
            findings.push(Finding::error(
                at(node),
                rules::BUDGET,
                format!("budget {budget} is outside (0, 1]"),
            ));
        }
    }
    if let Some(m) = tree.mission {
        if !(m.duration.is_finite() && m.duration > 0.0) {
            findings.push(Finding::error(
                &tree.id,
                rules::MISSION,
                "mission duration must be positive",
            ));
        }
    }
    findings
        .sort_by(|a, b| (&a.element, &a.rule, &a.message).cmp(&(&b.element, &b.rule, &b.message)));
    findings.dedup();
    ValidationReport::new(findings)
}

/// Index form used by the exact algorithms: basic events are numbered in
/// lexicographic id order so bit `i` of a mask is the `i`-th smallest id.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub ids: Vec<String>,
    pub probs: Vec<Option<f64>>,
    pub root: CNode,
}

#[derive(Debug, Clone)]
pub(crate) enum CNode {
    Leaf(usize),
    And(Vec<CNode>),
    Or(Vec<CNode>),
}

impl Compiled {
    pub fn new(gate: &Gate) -> Result<Self, FaultTreeError> {
        let defs: BTreeMap<&str, &BasicEvent> = {
            let mut m = BTreeMap::new();
            for b in gate.basic_occurrences() {
                if let Some(prev) = m.insert(b.id.as_str(), b) {
                    if prev != b {
                        return Err(FaultTreeError::ConflictingEvent {
                            event: b.id.clone(),
                        });
                    }
                }
            }
            m
        };
        let ids: Vec<String> = defs.keys().map(|s| s.to_string()).collect();
        let probs = defs.values().map(|b| b.rate.value()).collect();
        let index: BTreeMap<&str, usize> = defs.keys().enumerate().map(|(i, k)| (*k, i)).collect();
        fn build(g: &Gate, index: &BTreeMap<&str, usize>) -> Result<CNode, FaultTreeError> {
            if g.children.is_empty() {
                return Err(FaultTreeError::EmptyGate { gate: g.id.clone() });
            }
            let kids = g
                .children
                .iter()
                .map(|c| match c {
                    FtNode::Basic(b) => Ok(CNode::Leaf(index[b.id.as_str()])),
                    FtNode::Gate(g) => build(g, index),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(match g.op {
                GateOp::And => CNode::And(kids),
                GateOp::Or => CNode::Or(kids),
            })
        }
        Ok(Self {
            ids,
            probs,
            root: build(gate, &index)?,
        })
    }

    /// All probabilities, failing on placeholders or out-of-range values.
    pub fn quantified(&self) -> Result<Vec<f64>, FaultTreeError> {
        self.ids
            .iter()
            .zip(&self.probs)
            .map(|(id, p)| match p {
                None => Err(FaultTreeError::PlaceholderRate { event: id.clone() }),
                Some(p) if !(0.0..=1.0).contains(p) || p.is_nan() => {
                    Err(FaultTreeError::RateOutOfRange {
                        event: id.clone(),
                        rate: *p,
                    })
                }
                Some(p) => Ok(*p),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_flags_bad_rates_and_budgets() {
        let mut tree = QuantitativeFaultTree::new(
            "T",
            "H",
            Gate::or(
                "top",
                vec![
                    BasicEvent::new("a", 1.5).into(),
                    Gate::and("g", vec![]).into(),
                ],
            ),
        );
        tree.budgets.insert("a".into(), 0.1);
        let report = validate_tree(&tree, None);
        let rules: Vec<_> = report.findings.iter().map(|f| f.rule.as_str()).collect();
        assert!(rules.contains(&rules::RATE_RANGE));
        assert!(rules.contains(&rules::EMPTY_GATE));
        assert!(rules.contains(&rules::BUDGET));
    }

    #[test]
    fn conflicting_shared_definitions_are_rejected() {
        let tree = QuantitativeFaultTree::new(
            "T",
            "H",
            Gate::or(
                "top",
                vec![
                    BasicEvent::new("a", 0.1).into(),
                    BasicEvent::new("a", 0.2).into(),
                ],
            ),
        );
        assert_eq!(
            validate_tree(&tree, None)
                .with_rule(rules::DUPLICATE_NODE)
                .count(),
            1
        );
        assert!(matches!(
            Compiled::new(&tree.top),
            Err(FaultTreeError::ConflictingEvent { .. })
        ));
    }
}
