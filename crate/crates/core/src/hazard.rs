//! Hazard log: loss events, hazards with their causal pathways,
//! safety-critical functions, operational controls and a configurable risk
//! matrix, with traceability checks into the argument and its fault trees.
//!
//! The log (`hazards.scdl-log`) and the matrix are TOML documents:
//!
//! ```toml
//! [[loss_event]]
//! id = "L1"
//! description = "Collision with a pedestrian"
//! severity = "catastrophic"
//!
//! [[factor]]
//! id = "occluded_pedestrian"
//! kind = "triggering_condition"
//! description = "Pedestrian occluded by a parked vehicle"
//! source = "fmeca"
//!
//! [[hazard]]
//! id = "H1"
//! description = "Vehicle fails to yield to a pedestrian"
//! loss_events = ["L1"]
//! fault_tree = "FT_PED"
//! status = "open"
//! pathways = [["occluded_pedestrian", "perception_miss"]]
//!
//! [[function]]
//! id = "SCF1"
//! description = "Pedestrian detection"
//! hazards = ["H1"]
//! rigour = 4
//!
//! [[control]]
//! id = "OC1"
//! description = "No routes through school zones"
//! kind = "route_restriction"
//! hazards = ["H1"]
//! audit_spi = "SPI_ROUTE_AUDIT"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::argument::SafetyCase;
use crate::fault_tree::{
    refine_rates, BasicEvent, EventKind, FtNode, Gate, QuantitativeFaultTree, Rate,
};
use crate::report::{Finding, ValidationReport};
use crate::spi::SpiEvaluation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Low,
    Medium,
    Serious,
    High,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 4] = [
        RiskLevel::Low,
        RiskLevel::Medium,
        RiskLevel::Serious,
        RiskLevel::High,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLevel::Low => "low",
            RiskLevel::Medium => "medium",
            RiskLevel::Serious => "serious",
            RiskLevel::High => "high",
        }
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum HazardStatus {
    #[default]
    Open,
    Mitigated,
    Verified,
    Validated,
}

impl HazardStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            HazardStatus::Open => "open",
            HazardStatus::Mitigated => "mitigated",
            HazardStatus::Verified => "verified",
            HazardStatus::Validated => "validated",
        }
    }

    /// The status reached by one forward step.
    pub fn next(self) -> Option<Self> {
        match self {
            HazardStatus::Open => Some(HazardStatus::Mitigated),
            HazardStatus::Mitigated => Some(HazardStatus::Verified),
            HazardStatus::Verified => Some(HazardStatus::Validated),
            HazardStatus::Validated => None,
        }
    }
}

impl fmt::Display for HazardStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    RouteRestriction,
    Maintenance,
    SafetyDriver,
    Other,
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisSource {
    Pha,
    Fha,
    #[default]
    Fmeca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossEvent {
    pub id: String,
    pub description: String,
    pub severity: String,
}

/// One row of the causal analysis; becomes a basic event in a skeleton tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalFactor {
    pub id: String,
    pub kind: EventKind,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub source: AnalysisSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskAssessment {
    pub severity: String,
    pub probability: String,
    pub level: RiskLevel,
    pub assessed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hazard {
    pub id: String,
    pub description: String,
    pub loss_events: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_tree: Option<String>,
    #[serde(default)]
    pub status: HazardStatus,
    /// Each pathway is a set of factor ids that jointly lead to the hazard.
    #[serde(default)]
    pub pathways: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment: Option<RiskAssessment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyCriticalFunction {
    pub id: String,
    pub description: String,
    pub hazards: Vec<String>,
    /// Ordinal 1..=4.
    pub rigour: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationalControl {
    pub id: String,
    pub description: String,
    pub kind: ControlKind,
    pub hazards: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_spi: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardLog {
    #[serde(default, rename = "loss_event")]
    pub loss_events: Vec<LossEvent>,
    #[serde(default, rename = "factor")]
    pub factors: Vec<CausalFactor>,
    #[serde(default, rename = "hazard")]
    pub hazards: Vec<Hazard>,
    #[serde(default, rename = "function")]
    pub functions: Vec<SafetyCriticalFunction>,
    #[serde(default, rename = "control")]
    pub controls: Vec<OperationalControl>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HazardError {
    #[error("cannot read hazard log: {0}")]
    Syntax(String),
    #[error("invalid risk matrix: {0}")]
    Matrix(String),
    #[error("unknown hazard `{0}`")]
    UnknownHazard(String),
    #[error("`{label}` is not on the {axis} axis of the risk matrix")]
    UnknownLabel { axis: &'static str, label: String },
    #[error("hazard `{hazard}` cannot move from {from} to {to}; status only advances one step at a time or returns to open")]
    Transition {
        hazard: String,
        from: HazardStatus,
        to: HazardStatus,
    },
    #[error("hazard `{hazard}` cannot be validated: {reason}")]
    NotValidated { hazard: String, reason: String },
    #[error("hazard `{0}` has no recorded causal pathways; add `pathways = [[\"factor\", ...]]` rows from the hazard analyses before generating a tree")]
    NoPathways(String),
    #[error("hazard `{hazard}` references unknown causal factor `{factor}`")]
    UnknownFactor { hazard: String, factor: String },
}

impl HazardLog {
    pub fn from_toml_str(text: &str) -> Result<Self, HazardError> {
        toml::from_str(text).map_err(|e| HazardError::Syntax(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn hazard(&self, id: &str) -> Option<&Hazard> {
        self.hazards.iter().find(|h| h.id == id)
    }

    pub fn hazard_mut(&mut self, id: &str) -> Option<&mut Hazard> {
        self.hazards.iter_mut().find(|h| h.id == id)
    }

    pub fn factor(&self, id: &str) -> Option<&CausalFactor> {
        self.factors.iter().find(|f| f.id == id)
    }

    /// Moves a hazard one step forward or back to open. Reaching
    /// `validated` requires its fault tree in `case`, an evaluation with
    /// data for every SPI-annotated event, and no deviation flags.
    pub fn transition(
        &mut self,
        hazard_id: &str,
        to: HazardStatus,
        case: &SafetyCase,
        evaluations: &[SpiEvaluation],
        alpha: f64,
    ) -> Result<(), HazardError> {
        let hazard = self
            .hazard(hazard_id)
            .ok_or_else(|| HazardError::UnknownHazard(hazard_id.to_string()))?;
        let from = hazard.status;
        if to != HazardStatus::Open && from.next() != Some(to) {
            return Err(HazardError::Transition {
                hazard: hazard_id.to_string(),
                from,
                to,
            });
        }
        if to == HazardStatus::Validated {
            let not = |reason: String| HazardError::NotValidated {
                hazard: hazard_id.to_string(),
                reason,
            };
            let tree_id = hazard
                .fault_tree
                .as_deref()
                .ok_or_else(|| not("no fault tree is attached".into()))?;
            let tree = case
                .fault_tree(tree_id)
                .ok_or_else(|| not(format!("fault tree `{tree_id}` is not in the case")))?;
            for b in tree.basic_events().values() {
                if let Some(spi) = &b.spi_ref {
                    let has_data = evaluations
                        .iter()
                        .any(|e| &e.spi_id == spi && e.point_rate.is_some());
                    if !has_data {
                        return Err(not(format!(
                            "SPI `{spi}` on event `{}` has not been evaluated",
                            b.id
                        )));
                    }
                }
            }
            let (_, flags) =
                refine_rates(tree, evaluations, alpha).map_err(|e| not(e.to_string()))?;
            if let Some(f) = flags.first() {
                return Err(not(format!(
                    "field data for event `{}` deviates from its rate (p = {:.3e})",
                    f.event, f.p_value
                )));
            }
        }
        if let Some(h) = self.hazard_mut(hazard_id) {
            h.status = to;
        }
        Ok(())
    }
}

/// Severity rows by probability columns. Both axes run from least to most
/// severe or likely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskMatrix {
    pub severity: Vec<String>,
    pub probability: Vec<String>,
    /// One row per severity label, one level per probability label.
    pub cells: BTreeMap<String, Vec<RiskLevel>>,
    /// Highest level accepted without a mitigation.
    pub acceptance: RiskLevel,
    /// Minimum level-of-rigour tier per risk level.
    #[serde(default = "default_rigour")]
    pub rigour: BTreeMap<RiskLevel, u8>,
}

fn default_rigour() -> BTreeMap<RiskLevel, u8> {
    RiskLevel::ALL.into_iter().zip(1..).collect()
}

impl RiskMatrix {
    /// Parses and checks a matrix.
    pub fn from_toml_str(text: &str) -> Result<Self, HazardError> {
        let m: RiskMatrix = toml::from_str(text).map_err(|e| HazardError::Matrix(e.to_string()))?;
        m.check()?;
        Ok(m)
    }

    /// Totality over both axes and monotonicity along each.
    pub fn check(&self) -> Result<(), HazardError> {
        let err = |m: String| Err(HazardError::Matrix(m));
        if self.severity.is_empty() || self.probability.is_empty() {
            return err("both axes need at least one label".into());
        }
        for (axis, labels) in [
            ("severity", &self.severity),
            ("probability", &self.probability),
        ] {
            if labels.iter().collect::<BTreeSet<_>>().len() != labels.len() {
                return err(format!("{axis} axis repeats a label"));
            }
        }
        for row in self.cells.keys() {
            if !self.severity.contains(row) {
                return err(format!("row `{row}` is not a severity label"));
            }
        }
        let mut prev: Option<&Vec<RiskLevel>> = None;
        for s in &self.severity {
            let Some(row) = self.cells.get(s) else {
                return err(format!("no row for severity `{s}`"));
            };
            if row.len() != self.probability.len() {
                return err(format!(
                    "row `{s}` has {} cells, expected {}",
                    row.len(),
                    self.probability.len()
                ));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return err(format!(
                    "row `{s}` lowers the risk level as probability increases"
                ));
            }
            if let Some(p) = prev {
                if p.iter().zip(row).any(|(a, b)| b < a) {
                    return err(format!(
                        "row `{s}` lowers the risk level relative to the less severe row"
                    ));
                }
            }
            prev = Some(row);
        }
        for level in RiskLevel::ALL {
            match self.rigour.get(&level) {
                Some(t) if (1..=4).contains(t) => {}
                Some(t) => return err(format!("rigour tier {t} for {level} is outside 1..=4")),
                None => return err(format!("no rigour tier for {level}")),
            }
        }
        if RiskLevel::ALL
            .windows(2)
            .any(|w| self.rigour[&w[1]] < self.rigour[&w[0]])
        {
            return err("rigour tiers must not decrease with risk level".into());
        }
        Ok(())
    }

    pub fn level(&self, severity: &str, probability: &str) -> Result<RiskLevel, HazardError> {
        let row = self
            .cells
            .get(severity)
            .filter(|_| self.severity.iter().any(|s| s == severity))
            .ok_or_else(|| HazardError::UnknownLabel {
                axis: "severity",
                label: severity.to_string(),
            })?;
        let col = self
            .probability
            .iter()
            .position(|p| p == probability)
            .ok_or_else(|| HazardError::UnknownLabel {
                axis: "probability",
                label: probability.to_string(),
            })?;
        row.get(col)
            .copied()
            .ok_or_else(|| HazardError::Matrix(format!("row `{severity}` is short")))
    }

    pub fn required_rigour(&self, level: RiskLevel) -> u8 {
        self.rigour.get(&level).copied().unwrap_or(4)
    }

    pub fn is_acceptable(&self, level: RiskLevel) -> bool {
        level <= self.acceptance
    }
}

/// Looks up the matrix cell and records the assessment on the hazard.
pub fn assess_risk(
    hazard: &mut Hazard,
    severity: &str,
    probability: &str,
    matrix: &RiskMatrix,
) -> Result<RiskLevel, HazardError> {
    assess_risk_at(
        hazard,
        severity,
        probability,
        matrix,
        Utc::now().trunc_subsecs(0),
    )
}

pub fn assess_risk_at(
    hazard: &mut Hazard,
    severity: &str,
    probability: &str,
    matrix: &RiskMatrix,
    at: DateTime<Utc>,
) -> Result<RiskLevel, HazardError> {
    let level = matrix.level(severity, probability)?;
    hazard.assessment = Some(RiskAssessment {
        severity: severity.to_string(),
        probability: probability.to_string(),
        level,
        assessed_at: at.trunc_subsecs(0),
    });
    Ok(level)
}

pub mod rules {
    pub const NO_LOSS_EVENT: &str = "hazard_no_loss_event";
    pub const UNMITIGATED: &str = "hazard_unmitigated";
    pub const NO_FAULT_TREE: &str = "hazard_no_fault_tree";
    pub const UNASSESSED: &str = "hazard_unassessed";
    pub const CONTROL_NO_AUDIT: &str = "control_no_audit_spi";
    pub const TREE_UNKNOWN_HAZARD: &str = "tree_unknown_hazard";
    pub const DANGLING: &str = "hazard_dangling_reference";
    pub const DUPLICATE: &str = "hazard_duplicate_id";
    pub const RIGOUR: &str = "function_rigour";
    pub const SEVERITY_LABEL: &str = "loss_event_severity";
}

/// Traceability between the log, the argument and the fault trees.
pub fn trace_check(
    log: &HazardLog,
    case: &SafetyCase,
    trees: &[QuantitativeFaultTree],
    matrix: &RiskMatrix,
) -> ValidationReport {
    let mut f = Vec::new();
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for id in log
        .loss_events
        .iter()
        .map(|x| &x.id)
        .chain(log.factors.iter().map(|x| &x.id))
        .chain(log.hazards.iter().map(|x| &x.id))
        .chain(log.functions.iter().map(|x| &x.id))
        .chain(log.controls.iter().map(|x| &x.id))
    {
        *ids.entry(id).or_default() += 1;
    }
    for (id, n) in &ids {
        if *n > 1 {
            f.push(Finding::error(
                *id,
                rules::DUPLICATE,
                format!("id used by {n} log entries"),
            ));
        }
    }
    let loss: BTreeSet<&str> = log.loss_events.iter().map(|l| l.id.as_str()).collect();
    let hazards: BTreeSet<&str> = log.hazards.iter().map(|h| h.id.as_str()).collect();
    let tree_ids: BTreeSet<&str> = trees.iter().map(|t| t.id.as_str()).collect();
    let spis: BTreeSet<&str> = case.spis.iter().map(|s| s.id.as_str()).collect();

    for l in &log.loss_events {
        if !matrix.severity.contains(&l.severity) {
            f.push(Finding::error(
                &l.id,
                rules::SEVERITY_LABEL,
                format!("severity `{}` is not on the matrix axis", l.severity),
            ));
        }
    }
    for h in &log.hazards {
        if h.loss_events.is_empty() {
            f.push(Finding::error(
                &h.id,
                rules::NO_LOSS_EVENT,
                "hazard is not linked to any loss event",
            ));
        }
        for l in &h.loss_events {
            if !loss.contains(l.as_str()) {
                f.push(Finding::error(
                    &h.id,
                    rules::DANGLING,
                    format!("unknown loss event `{l}`"),
                ));
            }
        }
        for factor in h.pathways.iter().flatten() {
            if log.factor(factor).is_none() {
                f.push(Finding::error(
                    &h.id,
                    rules::DANGLING,
                    format!("unknown causal factor `{factor}`"),
                ));
            }
        }
        match &h.fault_tree {
            None => f.push(Finding::warning(
                &h.id,
                rules::NO_FAULT_TREE,
                "hazard has no fault tree",
            )),
            Some(t) if !tree_ids.contains(t.as_str()) => {
                f.push(Finding::error(
                    &h.id,
                    rules::DANGLING,
                    format!("unknown fault tree `{t}`"),
                ));
            }
            Some(_) => {}
        }
        let mitigated = log.functions.iter().any(|s| s.hazards.contains(&h.id))
            || log.controls.iter().any(|c| c.hazards.contains(&h.id));
        match &h.assessment {
            None => f.push(Finding::warning(
                &h.id,
                rules::UNASSESSED,
                "hazard has no risk assessment",
            )),
            Some(a) => {
                if matrix.level(&a.severity, &a.probability).ok() != Some(a.level) {
                    f.push(Finding::error(
                        &h.id,
                        rules::DANGLING,
                        "stored assessment does not match the risk matrix",
                    ));
                }
                if !matrix.is_acceptable(a.level) && !mitigated {
                    f.push(Finding::error(
                        &h.id,
                        rules::UNMITIGATED,
                        format!("risk {} exceeds the acceptance level {} and no safety-critical function or operational control mitigates it", a.level, matrix.acceptance),
                    ));
                }
            }
        }
    }
    for s in &log.functions {
        let mut worst: Option<RiskLevel> = None;
        for h in &s.hazards {
            match log.hazard(h) {
                None => f.push(Finding::error(
                    &s.id,
                    rules::DANGLING,
                    format!("unknown hazard `{h}`"),
                )),
                Some(h) => worst = worst.max(h.assessment.as_ref().map(|a| a.level)),
            }
        }
        if !(1..=4).contains(&s.rigour) {
            f.push(Finding::error(
                &s.id,
                rules::RIGOUR,
                format!("rigour tier {} is outside 1..=4", s.rigour),
            ));
        } else if let Some(level) = worst {
            let need = matrix.required_rigour(level);
            if s.rigour < need {
                f.push(Finding::error(
                    &s.id,
                    rules::RIGOUR,
                    format!(
                        "rigour tier {} is below tier {need} required for {level} risk",
                        s.rigour
                    ),
                ));
            }
        }
    }
    for c in &log.controls {
        for h in &c.hazards {
            if !hazards.contains(h.as_str()) {
                f.push(Finding::error(
                    &c.id,
                    rules::DANGLING,
                    format!("unknown hazard `{h}`"),
                ));
            }
        }
        match &c.audit_spi {
            None => f.push(Finding::warning(
                &c.id,
                rules::CONTROL_NO_AUDIT,
                "operational control has no audit SPI",
            )),
            Some(s) if !spis.contains(s.as_str()) => {
                f.push(Finding::error(
                    &c.id,
                    rules::DANGLING,
                    format!("unknown SPI `{s}`"),
                ));
            }
            Some(_) => {}
        }
    }
    for t in trees {
        if !hazards.contains(t.hazard_id.as_str()) {
            f.push(Finding::error(
                &t.id,
                rules::TREE_UNKNOWN_HAZARD,
                format!("hazard `{}` is not in the hazard log", t.hazard_id),
            ));
        }
    }
    ValidationReport::new(f)
}

/// An OR over the hazard's pathways: a single-factor pathway becomes a
/// basic event, a longer one an AND of basic events. Every rate is a
/// placeholder, so the tree cannot be quantified until edited.
pub fn generate_tree_skeleton(
    log: &HazardLog,
    hazard_id: &str,
) -> Result<QuantitativeFaultTree, HazardError> {
    let hazard = log
        .hazard(hazard_id)
        .ok_or_else(|| HazardError::UnknownHazard(hazard_id.to_string()))?;
    let pathways: Vec<&Vec<String>> = hazard.pathways.iter().filter(|p| !p.is_empty()).collect();
    if pathways.is_empty() {
        return Err(HazardError::NoPathways(hazard_id.to_string()));
    }
    let tree_id = hazard
        .fault_tree
        .clone()
        .unwrap_or_else(|| format!("FT_{hazard_id}"));
    let basic = |id: &String| -> Result<FtNode, HazardError> {
        let factor = log.factor(id).ok_or_else(|| HazardError::UnknownFactor {
            hazard: hazard_id.to_string(),
            factor: id.clone(),
        })?;
        Ok(FtNode::Basic(BasicEvent {
            id: factor.id.clone(),
            description: factor.description.clone(),
            rate: Rate::Placeholder,
            spi_ref: None,
            kind: factor.kind,
        }))
    };
    // Gate ids follow the pre-order naming the text format assigns to
    // unnamed gates, so the printed skeleton stays free of ids.
    let mut next = 1;
    let mut children = Vec::new();
    for p in pathways {
        if p.len() == 1 {
            children.push(basic(&p[0])?);
        } else {
            let kids = p.iter().map(basic).collect::<Result<Vec<_>, _>>()?;
            children.push(FtNode::Gate(Gate::and(format!("{tree_id}.g{next}"), kids)));
            next += 1;
        }
    }
    Ok(QuantitativeFaultTree::new(
        tree_id.clone(),
        hazard_id,
        Gate::or(format!("{tree_id}.g0"), children),
    ))
}
