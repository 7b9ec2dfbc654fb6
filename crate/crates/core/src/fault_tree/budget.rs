use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{node_probability, FaultTreeError, FtNode, Gate, GateOp, QuantitativeFaultTree};

pub const ROUNDING_MARGIN: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("top target {0} must lie strictly between 0 and 1")]
    DegenerateTarget(f64),
    #[error(transparent)]
    Tree(#[from] FaultTreeError),
}

/// Equal-split allocation of `top_target` down to the basic events.
///
/// OR gates give each of their `k` children `target / k`. AND gates give
/// each child the `g`-th root of the target, where `g` is the number of
/// groups of children that share no basic event; children inside one group
/// all receive the group's share. A basic event that occurs more than once
/// keeps the smallest budget among its occurrences.
///
/// Every child share is shaded down by a relative [`ROUNDING_MARGIN`] so
/// that rounding in the probability computation cannot push a fully used
/// allocation over its target.
pub fn allocate_budget(
    tree: &QuantitativeFaultTree,
    top_target: f64,
) -> Result<BTreeMap<String, f64>, BudgetError> {
    allocate_budget_with(tree, top_target, &BTreeMap::new())
}

/// As [`allocate_budget`], but any node listed in `overrides` takes that
/// target instead of its computed share, and its subtree is split from it.
pub fn allocate_budget_with(
    tree: &QuantitativeFaultTree,
    top_target: f64,
    overrides: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, BudgetError> {
    if !(top_target > 0.0 && top_target < 1.0) {
        return Err(BudgetError::DegenerateTarget(top_target));
    }
    for g in tree.top.gates() {
        if g.children.is_empty() {
            return Err(FaultTreeError::EmptyGate { gate: g.id.clone() }.into());
        }
    }
    let mut out = BTreeMap::new();
    split(&tree.top, top_target, overrides, &mut out);
    Ok(out)
}

fn assign(out: &mut BTreeMap<String, f64>, id: &str, v: f64) {
    out.entry(id.to_string())
        .and_modify(|old| *old = f64::min(*old, v))
        .or_insert(v);
}

fn split(
    gate: &Gate,
    target: f64,
    overrides: &BTreeMap<String, f64>,
    out: &mut BTreeMap<String, f64>,
) {
    let target = overrides.get(&gate.id).copied().unwrap_or(target);
    assign(out, &gate.id, target);
    let shares: Vec<f64> = match gate.op {
        GateOp::Or => vec![target / gate.children.len() as f64; gate.children.len()],
        GateOp::And => {
            let groups = overlap_groups(&gate.children);
            let count = groups.iter().collect::<BTreeSet<_>>().len();
            vec![target.powf(1.0 / count as f64); gate.children.len()]
        }
    };
    for (child, share) in gate
        .children
        .iter()
        .zip(shares.into_iter().map(|s| s * (1.0 - ROUNDING_MARGIN)))
    {
        match child {
            FtNode::Gate(g) => split(g, share, overrides, out),
            FtNode::Basic(b) => assign(out, &b.id, overrides.get(&b.id).copied().unwrap_or(share)),
        }
    }
}

/// Group label per child; children sharing a basic event, directly or
/// through another child, get the same label.
fn overlap_groups(children: &[FtNode]) -> Vec<usize> {
    let events: Vec<BTreeSet<&str>> = children
        .iter()
        .map(|c| match c {
            FtNode::Gate(g) => g.event_ids(),
            FtNode::Basic(b) => BTreeSet::from([b.id.as_str()]),
        })
        .collect();
    let mut label: Vec<usize> = (0..children.len()).collect();
    loop {
        let mut changed = false;
        for i in 0..children.len() {
            for j in i + 1..children.len() {
                if label[i] != label[j] && !events[i].is_disjoint(&events[j]) {
                    let (keep, drop) = (label[i].min(label[j]), label[i].max(label[j]));
                    label
                        .iter_mut()
                        .filter(|l| **l == drop)
                        .for_each(|l| *l = keep);
                    changed = true;
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCheck {
    pub node: String,
    pub budget: f64,
    pub probability: f64,
    pub exceeded: bool,
}

/// Compares every declared budget of `tree` with the node's exact probability.
pub fn check_budgets(tree: &QuantitativeFaultTree) -> Result<Vec<BudgetCheck>, FaultTreeError> {
    tree.budgets
        .iter()
        .map(|(node, budget)| {
            let probability = node_probability(tree, node)?;
            Ok(BudgetCheck {
                node: node.clone(),
                budget: *budget,
                probability,
                exceeded: probability > *budget,
            })
        })
        .collect()
}
