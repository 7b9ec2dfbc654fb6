//! The typed GSN-style argument model.
//!
//! A [`SafetyCase`] is a plain value: elements, edges, SPI definitions,
//! evidence links, fault trees and an optional interface. It is never
//! mutated in place by analyses; every check in this crate borrows it.
//!
//! Collections are kept in canonical order (see [`SafetyCase::normalize`]),
//! so two cases describing the same argument compare equal with `==`.

mod compose;
mod status;
mod template;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::evidence::DynamicLink;
use crate::fault_tree::QuantitativeFaultTree;
use crate::spi::SpiDefinition;

pub use compose::{compose, normalize_statement, ComposeError};
pub use status::{soundness_status, ElementStatus, EvidenceState, SpiState, StatusError};
pub use template::{
    instantiate_oascf_template, instantiate_template, TemplateError, TemplateParams,
    DEFAULT_TEMPLATE, ENGINEER_PILLAR_STATEMENT, LIVE_PILLAR_STATEMENT, MIL_STD_GOAL_ID,
    MIL_STD_GOAL_STATEMENT, OPERATE_PILLAR_STATEMENT, TOP_CLAIM,
};
pub use validate::{rules, validate_wellformed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Goal,
    Strategy,
    Solution,
    Context,
    Assumption,
    Justification,
}

impl ElementKind {
    pub const ALL: [ElementKind; 6] = [
        ElementKind::Goal,
        ElementKind::Strategy,
        ElementKind::Solution,
        ElementKind::Context,
        ElementKind::Assumption,
        ElementKind::Justification,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Goal => "goal",
            ElementKind::Strategy => "strategy",
            ElementKind::Solution => "solution",
            ElementKind::Context => "context",
            ElementKind::Assumption => "assumption",
            ElementKind::Justification => "justification",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }

    /// May appear as the source of a `supported_by` edge.
    pub fn can_be_supported(self) -> bool {
        matches!(self, ElementKind::Goal | ElementKind::Strategy)
    }

    /// May appear as the target of a `supported_by` edge.
    pub fn can_support(self) -> bool {
        matches!(
            self,
            ElementKind::Goal | ElementKind::Strategy | ElementKind::Solution
        )
    }

    /// May appear as the target of an `in_context_of` edge.
    pub fn is_contextual(self) -> bool {
        matches!(
            self,
            ElementKind::Context | ElementKind::Assumption | ElementKind::Justification
        )
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentElement {
    pub id: String,
    pub kind: ElementKind,
    pub statement: String,
    pub spi_refs: Vec<String>,
    /// Dynamic link ids. Only solutions may carry them.
    pub evidence_links: Vec<String>,
}

impl ArgumentElement {
    pub fn new(id: impl Into<String>, kind: ElementKind, statement: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            statement: statement.into(),
            spi_refs: Vec::new(),
            evidence_links: Vec::new(),
        }
    }

    pub fn with_spi(mut self, spi: impl Into<String>) -> Self {
        self.spi_refs.push(spi.into());
        self
    }

    pub fn with_evidence(mut self, link: impl Into<String>) -> Self {
        self.evidence_links.push(link.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    SupportedBy,
    InContextOf,
}

impl EdgeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            EdgeKind::SupportedBy => "supported_by",
            EdgeKind::InContextOf => "in_context_of",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArgumentEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

impl ArgumentEdge {
    pub fn supported_by(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind: EdgeKind::SupportedBy,
        }
    }

    pub fn in_context_of(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind: EdgeKind::InContextOf,
        }
    }

    fn sort_key(&self) -> (&str, EdgeKind, &str) {
        (&self.from, self.kind, &self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceTag {
    Regulation,
    Standard,
    FailureModel,
    AcceptanceCriterion,
    ValidationTarget,
    FailureMode,
    SafetyRequirement,
}

impl InterfaceTag {
    pub const ALL: [InterfaceTag; 7] = [
        InterfaceTag::Regulation,
        InterfaceTag::Standard,
        InterfaceTag::FailureModel,
        InterfaceTag::AcceptanceCriterion,
        InterfaceTag::ValidationTarget,
        InterfaceTag::FailureMode,
        InterfaceTag::SafetyRequirement,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            InterfaceTag::Regulation => "regulation",
            InterfaceTag::Standard => "standard",
            InterfaceTag::FailureModel => "failure_model",
            InterfaceTag::AcceptanceCriterion => "acceptance_criterion",
            InterfaceTag::ValidationTarget => "validation_target",
            InterfaceTag::FailureMode => "failure_mode",
            InterfaceTag::SafetyRequirement => "safety_requirement",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.keyword() == word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedStatement {
    pub tag: InterfaceTag,
    pub statement: String,
}

impl TaggedStatement {
    pub fn new(tag: InterfaceTag, statement: impl Into<String>) -> Self {
        Self {
            tag,
            statement: statement.into(),
        }
    }
}

/// Assumptions a case makes of its embedding context, and guarantees it
/// offers to it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseInterface {
    pub assumptions: Vec<TaggedStatement>,
    pub guarantees: Vec<TaggedStatement>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyCase {
    pub name: String,
    pub elements: Vec<ArgumentElement>,
    pub edges: Vec<ArgumentEdge>,
    pub root: Option<String>,
    pub spis: Vec<SpiDefinition>,
    pub evidence: Vec<DynamicLink>,
    pub fault_trees: Vec<QuantitativeFaultTree>,
    pub interface: Option<CaseInterface>,
    pub hazard_log_ref: Option<String>,
}

impl SafetyCase {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Sorts every unordered collection into canonical order and fills in
    /// `root` when it is unset and a unique candidate exists.
    pub fn normalize(&mut self) {
        self.elements.sort_by(|a, b| a.id.cmp(&b.id));
        for e in &mut self.elements {
            e.spi_refs.sort();
            e.spi_refs.dedup();
            e.evidence_links.sort();
            e.evidence_links.dedup();
        }
        self.edges.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        self.edges.dedup();
        self.spis.sort_by(|a, b| a.id.cmp(&b.id));
        self.evidence.sort_by(|a, b| a.id.cmp(&b.id));
        self.fault_trees.sort_by(|a, b| a.id.cmp(&b.id));
        if self.root.is_none() {
            self.root = self.infer_root();
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// The unique goal without an incoming `supported_by` edge, if any.
    pub fn infer_root(&self) -> Option<String> {
        let mut candidates = self.root_candidates();
        if candidates.len() == 1 {
            candidates.pop()
        } else {
            None
        }
    }

    pub(crate) fn root_candidates(&self) -> Vec<String> {
        let supported: BTreeSet<&str> = self
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::SupportedBy)
            .map(|e| e.to.as_str())
            .collect();
        let mut out: Vec<String> = self
            .elements
            .iter()
            .filter(|e| e.kind == ElementKind::Goal && !supported.contains(e.id.as_str()))
            .map(|e| e.id.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn element(&self, id: &str) -> Option<&ArgumentElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn spi(&self, id: &str) -> Option<&SpiDefinition> {
        self.spis.iter().find(|s| s.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&DynamicLink> {
        self.evidence.iter().find(|l| l.id == id)
    }

    pub fn fault_tree(&self, id: &str) -> Option<&QuantitativeFaultTree> {
        self.fault_trees.iter().find(|t| t.id == id)
    }

    pub fn supported_children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.kind == EdgeKind::SupportedBy && e.from == id)
            .map(|e| e.to.as_str())
    }

    /// SPI ids attached to an element, whether declared in the element block
    /// or through the SPI's own `on` claim.
    pub fn attached_spis(&self, id: &str) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .element(id)
            .map(|e| e.spi_refs.iter().cloned().collect())
            .unwrap_or_default();
        out.extend(
            self.spis
                .iter()
                .filter(|s| s.claim_id == id)
                .map(|s| s.id.clone()),
        );
        out
    }

    /// Adjacency maps over `supported_by` edges, restricted to known ids.
    pub fn index(&self) -> CaseIndex<'_> {
        CaseIndex::new(self)
    }

    /// Shortest `supported_by` distance from the root, per reachable element.
    pub fn depths(&self) -> BTreeMap<String, usize> {
        let index = self.index();
        let mut depth = BTreeMap::new();
        let Some(root) = self.root.as_deref() else {
            return depth;
        };
        let mut queue = std::collections::VecDeque::from([(root, 0usize)]);
        while let Some((id, d)) = queue.pop_front() {
            if depth.contains_key(id) {
                continue;
            }
            depth.insert(id.to_string(), d);
            for child in index.children(id) {
                if !depth.contains_key(*child) {
                    queue.push_back((child, d + 1));
                }
            }
        }
        depth
    }
}

/// Borrowed adjacency view of a case.
pub struct CaseIndex<'a> {
    pub kinds: BTreeMap<&'a str, ElementKind>,
    children: BTreeMap<&'a str, Vec<&'a str>>,
    parents: BTreeMap<&'a str, Vec<&'a str>>,
    context_holders: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> CaseIndex<'a> {
    fn new(case: &'a SafetyCase) -> Self {
        let kinds: BTreeMap<&str, ElementKind> = case
            .elements
            .iter()
            .map(|e| (e.id.as_str(), e.kind))
            .collect();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut context_holders: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for edge in &case.edges {
            if !kinds.contains_key(edge.from.as_str()) || !kinds.contains_key(edge.to.as_str()) {
                continue;
            }
            match edge.kind {
                EdgeKind::SupportedBy => {
                    children.entry(&edge.from).or_default().push(&edge.to);
                    parents.entry(&edge.to).or_default().push(&edge.from);
                }
                EdgeKind::InContextOf => {
                    context_holders
                        .entry(&edge.to)
                        .or_default()
                        .push(&edge.from);
                }
            }
        }
        Self {
            kinds,
            children,
            parents,
            context_holders,
        }
    }

    pub fn children(&self, id: &str) -> &[&'a str] {
        self.children.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parents(&self, id: &str) -> &[&'a str] {
        self.parents.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Elements holding an `in_context_of` edge to `id`.
    pub fn context_holders(&self, id: &str) -> &[&'a str] {
        self.context_holders
            .get(id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Topological order of the `supported_by` relation (parents first), or
    /// `None` if it has a cycle.
    pub fn topological_order(&self) -> Option<Vec<&'a str>> {
        let mut indegree: BTreeMap<&str, usize> = self.kinds.keys().map(|k| (*k, 0)).collect();
        for kids in self.children.values() {
            for k in kids {
                *indegree.get_mut(k).expect("indexed") += 1;
            }
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        ready.reverse();
        let mut order = Vec::with_capacity(indegree.len());
        while let Some(id) = ready.pop() {
            order.push(id);
            for child in self.children(id) {
                let d = indegree.get_mut(child).expect("indexed");
                *d -= 1;
                if *d == 0 {
                    ready.push(child);
                }
            }
        }
        (order.len() == indegree.len()).then_some(order)
    }

    /// Every element reachable upward (through parents) from `id`, excluding `id`.
    pub fn ancestors(&self, id: &str) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = self.parents(id).to_vec();
        while let Some(p) = stack.pop() {
            if seen.insert(p) {
                stack.extend(self.parents(p).iter().copied());
            }
        }
        seen
    }
}

/// Letters, digits, underscore and dot; must start with a letter or underscore.
pub fn is_valid_id(id: &str) -> bool {
    let mut chars = id.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}
