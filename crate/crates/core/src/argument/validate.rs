use std::collections::{BTreeMap, BTreeSet};

use super::{is_valid_id, EdgeKind, ElementKind, SafetyCase};
use crate::report::{Finding, ValidationReport};

/// Rule identifiers reported by [`validate_wellformed`].
pub mod rules {
    pub const CYCLE: &str = "cycle";
    pub const UNDEVELOPED_GOAL: &str = "undeveloped_goal";
    pub const ORPHAN_SOLUTION: &str = "orphan_solution";
    pub const ILLEGAL_EDGE: &str = "illegal_edge";
    pub const DUPLICATE_ID: &str = "duplicate_id";
    pub const ROOT: &str = "root";
    pub const DANGLING_REFERENCE: &str = "dangling_reference";
    pub const EMPTY_STATEMENT: &str = "empty_statement";
    pub const INVALID_ID: &str = "invalid_id";
    pub const EVIDENCE_ON_NON_SOLUTION: &str = "evidence_on_non_solution";
}

/// Structural well-formedness of the argument. Never fails: every problem
/// is a finding.
pub fn validate_wellformed(case: &SafetyCase) -> ValidationReport {
    let mut findings = Vec::new();

    let mut seen = BTreeMap::<&str, usize>::new();
    for e in &case.elements {
        *seen.entry(e.id.as_str()).or_default() += 1;
    }
    for (id, n) in &seen {
        if *n > 1 {
            findings.push(Finding::error(
                *id,
                rules::DUPLICATE_ID,
                format!("id `{id}` is declared {n} times"),
            ));
        }
    }

    let kinds: BTreeMap<&str, ElementKind> = case
        .elements
        .iter()
        .map(|e| (e.id.as_str(), e.kind))
        .collect();

    for e in &case.elements {
        if !is_valid_id(&e.id) {
            findings.push(Finding::error(
                &e.id,
                rules::INVALID_ID,
                format!("`{}` is not a valid identifier", e.id),
            ));
        }
        if e.statement.trim().is_empty() {
            findings.push(Finding::error(
                &e.id,
                rules::EMPTY_STATEMENT,
                "statement is empty",
            ));
        }
        if !e.evidence_links.is_empty() && e.kind != ElementKind::Solution {
            findings.push(Finding::error(
                &e.id,
                rules::EVIDENCE_ON_NON_SOLUTION,
                format!("{} carries evidence links; only solutions may", e.kind),
            ));
        }
        for spi in &e.spi_refs {
            if case.spi(spi).is_none() {
                findings.push(Finding::error(
                    &e.id,
                    rules::DANGLING_REFERENCE,
                    format!("unknown SPI `{spi}`"),
                ));
            }
        }
        for link in &e.evidence_links {
            if case.link(link).is_none() {
                findings.push(Finding::error(
                    &e.id,
                    rules::DANGLING_REFERENCE,
                    format!("unknown evidence link `{link}`"),
                ));
            }
        }
    }
    for spi in &case.spis {
        if !kinds.contains_key(spi.claim_id.as_str()) {
            findings.push(Finding::error(
                &spi.id,
                rules::DANGLING_REFERENCE,
                format!("SPI attached to unknown element `{}`", spi.claim_id),
            ));
        }
    }

    for edge in &case.edges {
        let (Some(&from), Some(&to)) = (kinds.get(edge.from.as_str()), kinds.get(edge.to.as_str()))
        else {
            for end in [&edge.from, &edge.to] {
                if !kinds.contains_key(end.as_str()) {
                    findings.push(Finding::error(
                        &edge.from,
                        rules::DANGLING_REFERENCE,
                        format!(
                            "{} edge references unknown element `{end}`",
                            edge.kind.keyword()
                        ),
                    ));
                }
            }
            continue;
        };
        if edge.from == edge.to {
            findings.push(Finding::error(
                &edge.from,
                rules::ILLEGAL_EDGE,
                format!("self {} edge", edge.kind.keyword()),
            ));
            continue;
        }
        let legal = match edge.kind {
            EdgeKind::SupportedBy => from.can_be_supported() && to.can_support(),
            EdgeKind::InContextOf => to.is_contextual(),
        };
        if !legal {
            findings.push(Finding::error(
                &edge.from,
                rules::ILLEGAL_EDGE,
                format!(
                    "{from} `{}` cannot be {} {to} `{}`",
                    edge.from,
                    edge.kind.keyword(),
                    edge.to
                ),
            ));
        }
    }

    let cycles = supported_by_cycles(case);
    for scc in &cycles {
        findings.push(Finding::error(
            scc[0],
            rules::CYCLE,
            format!("supported_by cycle through {}", scc.join(", ")),
        ));
    }

    check_root(case, &kinds, !cycles.is_empty(), &mut findings);

    let mut has_support = BTreeSet::new();
    let mut is_supporting = BTreeSet::new();
    for edge in case
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::SupportedBy)
    {
        has_support.insert(edge.from.as_str());
        is_supporting.insert(edge.to.as_str());
    }
    for e in &case.elements {
        match e.kind {
            ElementKind::Goal
                if !has_support.contains(e.id.as_str()) && e.evidence_links.is_empty() =>
            {
                findings.push(Finding::warning(
                    &e.id,
                    rules::UNDEVELOPED_GOAL,
                    "undeveloped goal: no supporting strategy, goal or solution",
                ));
            }
            ElementKind::Solution if !is_supporting.contains(e.id.as_str()) => {
                findings.push(Finding::warning(
                    &e.id,
                    rules::ORPHAN_SOLUTION,
                    "orphan solution: supports no goal or strategy",
                ));
            }
            _ => {}
        }
    }

    ValidationReport::new(findings)
}

fn check_root(
    case: &SafetyCase,
    kinds: &BTreeMap<&str, ElementKind>,
    cyclic: bool,
    findings: &mut Vec<Finding>,
) {
    match case.root.as_deref() {
        Some(root) => match kinds.get(root) {
            None => findings.push(Finding::error(
                root,
                rules::ROOT,
                format!("root `{root}` is not declared"),
            )),
            Some(ElementKind::Goal) => {
                if case
                    .edges
                    .iter()
                    .any(|e| e.kind == EdgeKind::SupportedBy && e.to == root)
                {
                    findings.push(Finding::error(
                        root,
                        rules::ROOT,
                        "root goal has an incoming supported_by edge",
                    ));
                }
                for other in case.root_candidates() {
                    if other != root {
                        findings.push(Finding::error(
                            &other,
                            rules::ROOT,
                            format!("goal `{other}` is unsupported but is not the root `{root}`"),
                        ));
                    }
                }
            }
            Some(kind) => findings.push(Finding::error(
                root,
                rules::ROOT,
                format!("root is a {kind}, not a goal"),
            )),
        },
        None if case.elements.is_empty() || cyclic => {}
        None => {
            let candidates = case.root_candidates();
            if candidates.is_empty() {
                findings.push(Finding::error(
                    &case.name,
                    rules::ROOT,
                    "no goal qualifies as root",
                ));
            } else {
                for c in &candidates {
                    findings.push(Finding::error(
                        c,
                        rules::ROOT,
                        format!("ambiguous root: {} unsupported goals", candidates.len()),
                    ));
                }
            }
        }
    }
}

/// Strongly connected components of the `supported_by` relation with more
/// than one member, each sorted, listed by smallest member.
fn supported_by_cycles(case: &SafetyCase) -> Vec<Vec<&str>> {
    let index = case.index();
    let nodes: Vec<&str> = index.kinds.keys().copied().collect();
    let pos: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    // Iterative Tarjan.
    let n = nodes.len();
    let mut idx = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut out = Vec::new();

    for start in 0..n {
        if idx[start] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        idx[start] = counter;
        low[start] = counter;
        counter += 1;
        stack.push(start);
        on_stack[start] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            let kids = index.children(nodes[v]);
            if *next < kids.len() {
                let w = pos[kids[*next]];
                *next += 1;
                if idx[w] == usize::MAX {
                    idx[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(idx[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == idx[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(nodes[w]);
                        if w == v {
                            break;
                        }
                    }
                    if comp.len() > 1 {
                        comp.sort();
                        out.push(comp);
                    }
                }
            }
        }
    }
    out.sort();
    out
}
