use std::collections::BTreeMap;

use crate::exec::Exec;

use super::cut_sets::{check_size, cut_set_masks};
use super::{CNode, Compiled, FaultTreeError, FtNode, Gate, QuantitativeFaultTree};

/// Inclusion-exclusion runs over every subset of the minimal cut sets.
pub const MAX_INCLUSION_EXCLUSION_SETS: usize = 20;

/// Shannon factoring enumerates every assignment of the shared events.
pub const MAX_SHARED_EVENTS: usize = 24;

const SUBSET_CHUNK: u64 = 1 << 14;

/// Exact top-event probability assuming independent basic events.
pub fn top_probability(tree: &QuantitativeFaultTree) -> Result<f64, FaultTreeError> {
    top_probability_with(tree, Exec::default())
}

pub fn top_probability_with(
    tree: &QuantitativeFaultTree,
    exec: Exec,
) -> Result<f64, FaultTreeError> {
    probability_of(&tree.id, &tree.top, exec)
}

/// Exact probability of any gate or basic event of `tree`.
pub fn node_probability(tree: &QuantitativeFaultTree, node: &str) -> Result<f64, FaultTreeError> {
    if let Some(g) = tree.top.find_gate(node) {
        return probability_of(&tree.id, g, Exec::default());
    }
    match tree.basic_events().get(node) {
        Some(b) => {
            let gate = Gate::or(node, vec![FtNode::Basic((*b).clone())]);
            probability_of(&tree.id, &gate, Exec::Sequential)
        }
        None => Err(FaultTreeError::UnknownNode {
            tree: tree.id.clone(),
            node: node.to_string(),
        }),
    }
}

/// Bottom-up evaluation. Exact only when no basic event is shared.
pub fn gate_probability(gate: &Gate) -> Result<f64, FaultTreeError> {
    let c = Compiled::new(gate)?;
    let p = c.quantified()?;
    Ok(bottom_up(&c.root, &p))
}

fn probability_of(name: &str, gate: &Gate, exec: Exec) -> Result<f64, FaultTreeError> {
    let c = Compiled::new(gate)?;
    let p = c.quantified()?;
    let shared = shared_events(&c);
    if shared.is_empty() {
        return Ok(bottom_up(&c.root, &p));
    }
    if c.ids.len() <= super::MAX_CUT_SET_EVENTS {
        let masks = cut_set_masks(&c, exec);
        if masks.len() <= MAX_INCLUSION_EXCLUSION_SETS {
            return Ok(ie_sum(&masks, &p, exec));
        }
    }
    factor(name, &c, &p, &shared, exec)
}

/// Inclusion-exclusion over the minimal cut sets.
pub fn inclusion_exclusion_probability(
    tree: &QuantitativeFaultTree,
) -> Result<f64, FaultTreeError> {
    inclusion_exclusion_probability_with(tree, Exec::default())
}

pub fn inclusion_exclusion_probability_with(
    tree: &QuantitativeFaultTree,
    exec: Exec,
) -> Result<f64, FaultTreeError> {
    let c = Compiled::new(&tree.top)?;
    check_size(&tree.id, &c)?;
    let p = c.quantified()?;
    let masks = cut_set_masks(&c, exec);
    if masks.len() > MAX_INCLUSION_EXCLUSION_SETS {
        return Err(FaultTreeError::TooManyCutSets {
            tree: tree.id.clone(),
            count: masks.len(),
            limit: MAX_INCLUSION_EXCLUSION_SETS,
        });
    }
    Ok(ie_sum(&masks, &p, exec))
}

/// Shannon factoring on the shared events, bottom-up on the rest.
pub fn factored_probability(tree: &QuantitativeFaultTree) -> Result<f64, FaultTreeError> {
    let c = Compiled::new(&tree.top)?;
    let p = c.quantified()?;
    let shared = shared_events(&c);
    factor(&tree.id, &c, &p, &shared, Exec::default())
}

fn bottom_up(n: &CNode, p: &[f64]) -> f64 {
    match n {
        CNode::Leaf(i) => p[*i],
        CNode::And(k) => k.iter().map(|c| bottom_up(c, p)).product(),
        // 1 - prod(1 - p) in log space keeps small results accurate.
        CNode::Or(k) => -k
            .iter()
            .map(|c| (-bottom_up(c, p)).ln_1p())
            .sum::<f64>()
            .exp_m1(),
    }
}

fn shared_events(c: &Compiled) -> Vec<usize> {
    fn count(n: &CNode, seen: &mut [usize]) {
        match n {
            CNode::Leaf(i) => seen[*i] += 1,
            CNode::And(k) | CNode::Or(k) => k.iter().for_each(|c| count(c, seen)),
        }
    }
    let mut seen = vec![0; c.ids.len()];
    count(&c.root, &mut seen);
    (0..seen.len()).filter(|i| seen[*i] > 1).collect()
}

fn ie_sum(masks: &[u64], p: &[f64], exec: Exec) -> f64 {
    let m = masks.len();
    let total = 1u64 << m;
    // Integer coefficients per distinct union; merging them is exact, so
    // the final sum does not depend on how subsets were partitioned.
    let parts = exec.map_chunks(total, SUBSET_CHUNK, |range| {
        let mut coef: BTreeMap<u64, i64> = BTreeMap::new();
        for s in range.start.max(1)..range.end {
            let mut union = 0u64;
            let mut bits = s;
            while bits != 0 {
                union |= masks[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            let sign = if s.count_ones() % 2 == 1 { 1 } else { -1 };
            *coef.entry(union).or_insert(0) += sign;
        }
        coef
    });
    let mut coef: BTreeMap<u64, i64> = BTreeMap::new();
    for part in parts {
        for (u, c) in part {
            *coef.entry(u).or_insert(0) += c;
        }
    }
    let terms = coef
        .into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|(u, c)| c as f64 * mask_product(u, p));
    neumaier(terms).clamp(0.0, 1.0)
}

fn mask_product(mask: u64, p: &[f64]) -> f64 {
    let mut prod = 1.0;
    let mut bits = mask;
    while bits != 0 {
        prod *= p[bits.trailing_zeros() as usize];
        bits &= bits - 1;
    }
    prod
}

fn factor(
    name: &str,
    c: &Compiled,
    p: &[f64],
    shared: &[usize],
    exec: Exec,
) -> Result<f64, FaultTreeError> {
    if shared.len() > MAX_SHARED_EVENTS {
        return Err(FaultTreeError::TooManyEvents {
            tree: name.to_string(),
            count: shared.len(),
            limit: MAX_SHARED_EVENTS,
        });
    }
    let total = 1u64 << shared.len();
    let parts = exec.map_chunks(total, SUBSET_CHUNK, |range| {
        let mut q = p.to_vec();
        neumaier(range.map(|a| {
            let mut weight = 1.0;
            for (bit, &e) in shared.iter().enumerate() {
                if a >> bit & 1 == 1 {
                    weight *= p[e];
                    q[e] = 1.0;
                } else {
                    weight *= 1.0 - p[e];
                    q[e] = 0.0;
                }
            }
            if weight == 0.0 {
                0.0
            } else {
                weight * bottom_up(&c.root, &q)
            }
        }))
    });
    Ok(neumaier(parts).clamp(0.0, 1.0))
}

/// Compensated summation.
pub(crate) fn neumaier(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_tree::{BasicEvent, Rate};

    fn b(id: &str, p: f64) -> FtNode {
        BasicEvent::new(id, p).into()
    }

    fn tree(top: Gate) -> QuantitativeFaultTree {
        QuantitativeFaultTree::new("T", "H", top)
    }

    #[test]
    fn and_or_basics() {
        let and = tree(Gate::and("top", vec![b("a", 0.1), b("b", 0.2)]));
        assert!((top_probability(&and).unwrap() - 0.02).abs() < 1e-15);
        let or = tree(Gate::or("top", vec![b("a", 0.1), b("b", 0.2)]));
        assert!((top_probability(&or).unwrap() - 0.28).abs() < 1e-15);
    }

    #[test]
    fn shared_event_paths_agree() {
        // OR(AND(a,b), AND(a,c)) at 0.5: a and (b or c) = 0.5 * 0.75
        let t = tree(Gate::or(
            "top",
            vec![
                Gate::and("g1", vec![b("a", 0.5), b("b", 0.5)]).into(),
                Gate::and("g2", vec![b("a", 0.5), b("c", 0.5)]).into(),
            ],
        ));
        assert!(t.has_shared_events());
        for v in [
            top_probability(&t),
            inclusion_exclusion_probability(&t),
            factored_probability(&t),
        ] {
            assert!((v.unwrap() - 0.375).abs() < 1e-15);
        }
        // Naive bottom-up double counts a.
        assert!((gate_probability(&t.top).unwrap() - 0.4375).abs() < 1e-15);
    }

    #[test]
    fn placeholders_and_ranges_are_rejected() {
        let mut e = BasicEvent::new("a", 0.1);
        e.rate = Rate::Placeholder;
        let t = tree(Gate::or("top", vec![e.into()]));
        assert!(matches!(
            top_probability(&t),
            Err(FaultTreeError::PlaceholderRate { .. })
        ));
        let t = tree(Gate::or("top", vec![b("a", -0.1)]));
        assert!(matches!(
            top_probability(&t),
            Err(FaultTreeError::RateOutOfRange { .. })
        ));
    }

    #[test]
    fn node_probability_covers_gates_and_events() {
        let t = tree(Gate::or(
            "top",
            vec![
                Gate::and("g", vec![b("a", 0.1), b("b", 0.2)]).into(),
                b("c", 0.3),
            ],
        ));
        assert!((node_probability(&t, "g").unwrap() - 0.02).abs() < 1e-15);
        assert!((node_probability(&t, "c").unwrap() - 0.3).abs() < 1e-15);
        assert!(node_probability(&t, "zz").is_err());
    }
}
