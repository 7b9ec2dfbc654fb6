use crate::exec::Exec;

use super::{CNode, Compiled, FaultTreeError, QuantitativeFaultTree};

/// Largest number of distinct basic events the exact cut-set algorithm accepts.
pub const MAX_CUT_SET_EVENTS: usize = 24;

/// Families at least this large are minimised with the executor.
const PARALLEL_MIN: usize = 256;

/// Minimal cut sets of the top event, each as a sorted list of event ids,
/// the list itself in lexicographic order.
pub fn minimal_cut_sets(tree: &QuantitativeFaultTree) -> Result<Vec<Vec<String>>, FaultTreeError> {
    minimal_cut_sets_with(tree, Exec::default())
}

pub fn minimal_cut_sets_with(
    tree: &QuantitativeFaultTree,
    exec: Exec,
) -> Result<Vec<Vec<String>>, FaultTreeError> {
    let compiled = Compiled::new(&tree.top)?;
    check_size(&tree.id, &compiled)?;
    let masks = cut_set_masks(&compiled, exec);
    let mut sets: Vec<Vec<String>> = masks
        .iter()
        .map(|m| {
            (0..compiled.ids.len())
                .filter(|i| m >> i & 1 == 1)
                .map(|i| compiled.ids[i].clone())
                .collect()
        })
        .collect();
    sets.sort();
    Ok(sets)
}

pub(crate) fn check_size(tree: &str, compiled: &Compiled) -> Result<(), FaultTreeError> {
    if compiled.ids.len() > MAX_CUT_SET_EVENTS {
        return Err(FaultTreeError::TooManyEvents {
            tree: tree.to_string(),
            count: compiled.ids.len(),
            limit: MAX_CUT_SET_EVENTS,
        });
    }
    Ok(())
}

/// Minimal cut sets as bit masks, sorted ascending.
pub(crate) fn cut_set_masks(compiled: &Compiled, exec: Exec) -> Vec<u64> {
    fn go(n: &CNode, exec: Exec) -> Vec<u64> {
        match n {
            CNode::Leaf(i) => vec![1u64 << i],
            CNode::Or(kids) => {
                let all: Vec<u64> = kids.iter().flat_map(|k| go(k, exec)).collect();
                minimise(all, exec)
            }
            CNode::And(kids) => {
                let mut acc = vec![0u64];
                for k in kids {
                    let fam = go(k, exec);
                    let mut next = Vec::with_capacity(acc.len() * fam.len());
                    for a in &acc {
                        for f in &fam {
                            next.push(a | f);
                        }
                    }
                    acc = minimise(next, exec);
                }
                acc
            }
        }
    }
    go(&compiled.root, exec)
}

/// Removes duplicates and supersets.
pub(crate) fn minimise(mut masks: Vec<u64>, exec: Exec) -> Vec<u64> {
    masks.sort_unstable_by_key(|m| (m.count_ones(), *m));
    masks.dedup();
    let keep = |i: &usize| {
        let m = masks[*i];
        // Any subset has at most as many bits and so sorts earlier.
        !masks[..*i].iter().any(|s| s & m == *s)
    };
    let idx: Vec<usize> = (0..masks.len()).collect();
    let kept: Vec<bool> = if masks.len() >= PARALLEL_MIN {
        exec.map(&idx, keep)
    } else {
        idx.iter().map(keep).collect()
    };
    let mut out: Vec<u64> = masks
        .iter()
        .zip(kept)
        .filter(|(_, k)| *k)
        .map(|(m, _)| *m)
        .collect();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_tree::{BasicEvent, Gate};

    fn b(id: &str) -> crate::fault_tree::FtNode {
        BasicEvent::new(id, 0.1).into()
    }

    #[test]
    fn textbook_tree() {
        let tree = QuantitativeFaultTree::new(
            "T",
            "H",
            Gate::or(
                "top",
                vec![Gate::and("g", vec![b("a"), b("b")]).into(), b("c")],
            ),
        );
        let sets = minimal_cut_sets(&tree).unwrap();
        assert_eq!(
            sets,
            vec![vec!["a".to_string(), "b".into()], vec!["c".into()]]
        );
    }

    #[test]
    fn absorption_removes_supersets() {
        // OR(a, AND(a, b)) = a
        let tree = QuantitativeFaultTree::new(
            "T",
            "H",
            Gate::or(
                "top",
                vec![b("a"), Gate::and("g", vec![b("a"), b("b")]).into()],
            ),
        );
        assert_eq!(
            minimal_cut_sets(&tree).unwrap(),
            vec![vec!["a".to_string()]]
        );
    }

    #[test]
    fn size_limit_is_explicit() {
        let kids = (0..25).map(|i| b(&format!("e{i:02}"))).collect();
        let tree = QuantitativeFaultTree::new("T", "H", Gate::or("top", kids));
        let err = minimal_cut_sets(&tree).unwrap_err();
        assert!(err.to_string().contains("limited to 24"), "{err}");
    }

    #[test]
    fn minimise_agrees_across_strategies() {
        let masks: Vec<u64> = (1..2000u64)
            .map(|i| i.wrapping_mul(2654435761) & 0xfff)
            .filter(|m| *m != 0)
            .collect();
        let seq = minimise(masks.clone(), Exec::Sequential);
        for exec in Exec::available() {
            assert_eq!(minimise(masks.clone(), exec), seq);
        }
    }
}
