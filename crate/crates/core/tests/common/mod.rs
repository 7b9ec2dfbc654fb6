//! Random generators and independent oracles shared by the integration
//! tests. Oracles never call into the code under test beyond plain data
//! accessors.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use livecase::argument::{
    rules, ArgumentEdge, ArgumentElement, CaseInterface, EdgeKind, ElementKind, InterfaceTag,
    TaggedStatement,
};
use livecase::evidence::{DynamicLink, Sensitivity};
use livecase::fault_tree::{
    BasicEvent, EventKind, FtNode, Gate, GateOp, Mission, QuantitativeFaultTree, Rate,
};
use livecase::impact::{ChangeEvent, ChangeKind, ImpactState, LinkAnnotation};
use livecase::spi::{Direction, ExposureUnit, SpiDefinition, Timing, TraceKind};
use livecase::SafetyCase;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- trees

/// A random coherent tree over at most `max_events` distinct events.
/// Events are drawn from a pool, so shared events are common.
pub fn random_tree(rng: &mut impl Rng, max_events: usize) -> QuantitativeFaultTree {
    let n = rng.random_range(1..=max_events);
    let pool: Vec<BasicEvent> = (0..n)
        .map(|i| BasicEvent::new(format!("e{i}"), rng.random::<f64>()))
        .collect();
    let mut counter = 0;
    let top = random_gate(rng, &pool, 0, &mut counter, "T");
    QuantitativeFaultTree::new("T", "H1", top)
}

fn random_gate(
    rng: &mut impl Rng,
    pool: &[BasicEvent],
    depth: usize,
    counter: &mut usize,
    tree: &str,
) -> Gate {
    let id = format!("{tree}.g{counter}");
    *counter += 1;
    let op = if rng.random_bool(0.5) {
        GateOp::And
    } else {
        GateOp::Or
    };
    let width = rng.random_range(1..=4);
    let mut children = Vec::new();
    for _ in 0..width {
        if depth < 3 && rng.random_bool(0.35) {
            children.push(FtNode::Gate(random_gate(
                rng,
                pool,
                depth + 1,
                counter,
                tree,
            )));
        } else {
            children.push(FtNode::Basic(pool.choose(rng).unwrap().clone()));
        }
    }
    Gate::new(id, op, children)
}

/// Same structure, each event's rate replaced by `f(id)`.
pub fn map_rates(gate: &Gate, f: &impl Fn(&str) -> f64) -> Gate {
    let children = gate
        .children
        .iter()
        .map(|c| match c {
            FtNode::Gate(g) => FtNode::Gate(map_rates(g, f)),
            FtNode::Basic(b) => FtNode::Basic(BasicEvent {
                rate: Rate::Value(f(&b.id)),
                ..b.clone()
            }),
        })
        .collect();
    Gate::new(gate.id.clone(), gate.op, children)
}

pub fn event_rates(gate: &Gate) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    fn walk(g: &Gate, out: &mut BTreeMap<String, f64>) {
        for c in &g.children {
            match c {
                FtNode::Gate(g) => walk(g, out),
                FtNode::Basic(b) => {
                    out.entry(b.id.clone()).or_insert(b.rate.value().unwrap());
                }
            }
        }
    }
    walk(gate, &mut out);
    out
}

pub fn structure(gate: &Gate, up: &BTreeSet<&str>) -> bool {
    let mut vals = gate.children.iter().map(|c| match c {
        FtNode::Gate(g) => structure(g, up),
        FtNode::Basic(b) => up.contains(b.id.as_str()),
    });
    match gate.op {
        GateOp::And => vals.all(|v| v),
        GateOp::Or => vals.any(|v| v),
    }
}

/// Exact top probability by weighting every one of the 2^n states.
pub fn enumeration_probability(gate: &Gate) -> f64 {
    let rates = event_rates(gate);
    let ids: Vec<&str> = rates.keys().map(String::as_str).collect();
    let mut total = 0.0;
    for mask in 0u64..(1 << ids.len()) {
        let up: BTreeSet<&str> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, id)| *id)
            .collect();
        if structure(gate, &up) {
            let w: f64 = ids
                .iter()
                .map(|id| {
                    if up.contains(id) {
                        rates[*id]
                    } else {
                        1.0 - rates[*id]
                    }
                })
                .product();
            total += w;
        }
    }
    total
}

/// Minimal true-sets of the structure function, sorted.
pub fn oracle_cut_sets(gate: &Gate) -> Vec<Vec<String>> {
    let ids: Vec<String> = event_rates(gate).into_keys().collect();
    let mut cuts: Vec<BTreeSet<&str>> = Vec::new();
    for mask in 0u64..(1 << ids.len()) {
        let up: BTreeSet<&str> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, id)| id.as_str())
            .collect();
        if structure(gate, &up) {
            cuts.push(up);
        }
    }
    let minimal: BTreeSet<Vec<String>> = cuts
        .iter()
        .filter(|c| !cuts.iter().any(|d| d.len() < c.len() && d.is_subset(c)))
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect();
    minimal.into_iter().collect()
}

// ---------------------------------------------------------------- arguments

const CONTEXT_KINDS: [ElementKind; 3] = [
    ElementKind::Context,
    ElementKind::Assumption,
    ElementKind::Justification,
];

fn prefix(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Goal => "G",
        ElementKind::Strategy => "S",
        ElementKind::Solution => "Sn",
        ElementKind::Context => "C",
        ElementKind::Assumption => "A",
        ElementKind::Justification => "J",
    }
}

/// A well-formed random argument with `n` elements or slightly more (every
/// childless goal or strategy gets a solution), SPIs, and dynamic links to
/// a shared pool of artifacts.
pub fn random_argument(rng: &mut impl Rng, n: usize) -> SafetyCase {
    let mut case = SafetyCase::new(format!("random {n}"));
    case.elements
        .push(ArgumentElement::new("G0", ElementKind::Goal, "top claim"));
    let mut supporters: Vec<String> = vec!["G0".into()];
    for i in 1..n {
        let roll = rng.random_range(0..100);
        let kind = match roll {
            0..35 => ElementKind::Goal,
            35..50 => ElementKind::Strategy,
            50..80 => ElementKind::Solution,
            _ => *CONTEXT_KINDS.choose(rng).unwrap(),
        };
        let id = format!("{}{i}", prefix(kind));
        let parent = supporters.choose(rng).unwrap().clone();
        if kind.is_contextual() {
            case.edges.push(ArgumentEdge::in_context_of(&parent, &id));
            if rng.random_bool(0.2) {
                let other = supporters.choose(rng).unwrap().clone();
                case.edges.push(ArgumentEdge::in_context_of(other, &id));
            }
        } else {
            case.edges.push(ArgumentEdge::supported_by(&parent, &id));
            if rng.random_bool(0.1) {
                let other = supporters.choose(rng).unwrap().clone();
                case.edges.push(ArgumentEdge::supported_by(other, &id));
            }
        }
        if kind.can_be_supported() {
            supporters.push(id.clone());
        }
        case.elements
            .push(ArgumentElement::new(id, kind, format!("statement {i}")));
    }
    let with_children: BTreeSet<String> = case
        .edges
        .iter()
        .filter(|e| e.kind == EdgeKind::SupportedBy)
        .map(|e| e.from.clone())
        .collect();
    for s in &supporters {
        if !with_children.contains(s) {
            let id = format!("Sn{}_{s}", case.elements.len());
            let id = id.replace('.', "_");
            case.edges.push(ArgumentEdge::supported_by(s, &id));
            case.elements.push(ArgumentElement::new(
                id,
                ElementKind::Solution,
                "closing evidence",
            ));
        }
    }
    case.edges.sort();
    case.edges.dedup();

    let artifacts: Vec<String> = (0..rng.random_range(1..=8))
        .map(|i| format!("artifacts/a{i}.pdf"))
        .collect();
    let solutions: Vec<usize> = case
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind == ElementKind::Solution)
        .map(|(i, _)| i)
        .collect();
    let mut link_no = 0;
    for i in solutions {
        for _ in 0..rng.random_range(0..=2) {
            let id = format!("E{link_no}");
            link_no += 1;
            let mut link = DynamicLink::latest(&id, artifacts.choose(rng).unwrap());
            if rng.random_bool(0.4) {
                link = link.with_sensitivity(Sensitivity::RobustToEditorial);
            }
            case.evidence.push(link);
            case.elements[i].evidence_links.push(id);
        }
    }

    let goals: Vec<String> = case
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::Goal)
        .map(|e| e.id.clone())
        .collect();
    for j in 0..rng.random_range(0..=goals.len().min(6)) {
        let claim = goals.choose(rng).unwrap();
        let mut spi = SpiDefinition::new(
            format!("SPI{j}"),
            claim,
            format!("metric.{j}"),
            0.01,
            ExposureUnit::Hour,
        );
        if rng.random_bool(0.5) {
            spi = spi.lagging();
        }
        case.spis.push(spi);
    }
    case.normalized()
}

pub fn supported_ancestors(case: &SafetyCase, id: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut queue = VecDeque::from([id.to_string()]);
    while let Some(x) = queue.pop_front() {
        for e in case
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::SupportedBy && e.to == x)
        {
            if out.insert(e.from.clone()) {
                queue.push_back(e.from.clone());
            }
        }
    }
    out
}

pub fn artifacts_of(case: &SafetyCase) -> Vec<String> {
    let set: BTreeSet<String> = case.evidence.iter().map(|l| l.artifact.clone()).collect();
    set.into_iter().collect()
}

pub fn random_change_events(rng: &mut impl Rng, case: &SafetyCase, max: usize) -> Vec<ChangeEvent> {
    let kinds = [
        ChangeKind::ContentChanged,
        ChangeKind::Deleted,
        ChangeKind::VersionBumped,
        ChangeKind::StatementEdited,
    ];
    let mut targets: Vec<String> = case.elements.iter().map(|e| e.id.clone()).collect();
    targets.extend(case.spis.iter().map(|s| s.id.clone()));
    let artifacts = artifacts_of(case);
    (0..rng.random_range(1..=max))
        .map(|_| {
            // Artifacts are favoured so link rules get exercised.
            let target = if !artifacts.is_empty() && rng.random_bool(0.5) {
                artifacts.choose(rng).unwrap().clone()
            } else {
                targets.choose(rng).unwrap().clone()
            };
            ChangeEvent::new(target, *kinds.choose(rng).unwrap())
        })
        .collect()
}

pub fn random_annotations(rng: &mut impl Rng, case: &SafetyCase) -> Vec<LinkAnnotation> {
    let sens = |rng: &mut _| {
        if Rng::random_bool(rng, 0.6) {
            Sensitivity::RobustToEditorial
        } else {
            Sensitivity::Strict
        }
    };
    let mut out = Vec::new();
    for l in &case.evidence {
        if rng.random_bool(0.3) {
            out.push(LinkAnnotation::new(&l.id, sens(rng)));
        }
    }
    for e in &case.edges {
        if rng.random_bool(0.3) {
            out.push(LinkAnnotation::edge(&e.from, &e.to, sens(rng)));
        }
    }
    out.shuffle(rng);
    out
}

/// Brute-force impact: one reachability search per change class over the
/// upward graph (supported_by parents, plus in_context_of holders of
/// contextual elements). Review-class changes cross every edge; editorial
/// ones only edges not annotated robust.
pub fn impact_oracle(
    case: &SafetyCase,
    events: &[ChangeEvent],
    annotations: &[LinkAnnotation],
) -> BTreeMap<String, ImpactState> {
    let ann: BTreeMap<&str, Sensitivity> = annotations
        .iter()
        .map(|a| (a.target.as_str(), a.sensitivity))
        .collect();
    let kind_of: BTreeMap<&str, ElementKind> = case
        .elements
        .iter()
        .map(|e| (e.id.as_str(), e.kind))
        .collect();

    let mut invalidated = BTreeSet::new();
    let mut review_seeds = BTreeSet::new();
    let mut editorial_seeds = BTreeSet::new();
    for ev in events {
        let t = ev.target.as_str();
        let mut hits: Vec<(String, u8)> = Vec::new();
        if kind_of.contains_key(t) {
            let lvl = match ev.kind {
                ChangeKind::Deleted => 3,
                ChangeKind::StatementEdited => 1,
                _ => 2,
            };
            hits.push((t.to_string(), lvl));
        } else if let Some(spi) = case.spis.iter().find(|s| s.id == t) {
            let lvl = if ev.kind == ChangeKind::StatementEdited {
                1
            } else {
                2
            };
            for e in &case.elements {
                if e.id == spi.claim_id || e.spi_refs.iter().any(|r| r == t) {
                    hits.push((e.id.clone(), lvl));
                }
            }
        } else {
            for link in case.evidence.iter().filter(|l| l.artifact == t) {
                let robust = ann
                    .get(link.id.as_str())
                    .copied()
                    .unwrap_or(link.sensitivity)
                    == Sensitivity::RobustToEditorial;
                let lvl = match ev.kind {
                    ChangeKind::Deleted => 3,
                    ChangeKind::StatementEdited if robust => continue,
                    ChangeKind::StatementEdited => 1,
                    _ => 2,
                };
                for e in case
                    .elements
                    .iter()
                    .filter(|e| e.evidence_links.contains(&link.id))
                {
                    hits.push((e.id.clone(), lvl));
                }
            }
        }
        for (id, lvl) in hits {
            match lvl {
                3 => {
                    invalidated.insert(id.clone());
                    review_seeds.insert(id);
                }
                2 => {
                    review_seeds.insert(id);
                }
                _ => {
                    editorial_seeds.insert(id);
                }
            }
        }
    }

    let up = |x: &str, editorial: bool| -> Vec<String> {
        case.edges
            .iter()
            .filter(|e| e.to == x)
            .filter(|e| match e.kind {
                EdgeKind::SupportedBy => true,
                EdgeKind::InContextOf => kind_of.get(x).is_some_and(|k| CONTEXT_KINDS.contains(k)),
            })
            .filter(|e| {
                !(editorial
                    && ann.get(format!("{}->{}", e.from, e.to).as_str())
                        == Some(&Sensitivity::RobustToEditorial))
            })
            .map(|e| e.from.clone())
            .collect()
    };
    let reach = |seeds: &BTreeSet<String>, editorial: bool| {
        let mut seen = seeds.clone();
        let mut queue: VecDeque<String> = seeds.iter().cloned().collect();
        while let Some(x) = queue.pop_front() {
            for y in up(&x, editorial) {
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen
    };
    let review = reach(&review_seeds, false);
    let editorial = reach(&editorial_seeds, true);
    case.elements
        .iter()
        .map(|e| {
            let s = if invalidated.contains(&e.id) {
                ImpactState::Invalidated
            } else if review.contains(&e.id) || editorial.contains(&e.id) {
                ImpactState::NeedsReview
            } else {
                ImpactState::Unaffected
            };
            (e.id.clone(), s)
        })
        .collect()
}

// ---------------------------------------------------------------- full cases

const AWKWARD: [&str; 8] = [
    "plain",
    "with \"quotes\"",
    "back\\slash",
    "new\nline",
    "tab\there",
    "ünïcödé ✓",
    "bell\u{7}",
    "",
];

fn statement(rng: &mut impl Rng, i: usize) -> String {
    format!("{} {i}", AWKWARD.choose(rng).unwrap())
}

fn nice_f64(rng: &mut impl Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random::<f64>(),
        1 => 10f64.powi(-rng.random_range(1..12)),
        2 => rng.random_range(1..1000) as f64 * 1e-6,
        _ => 0.5,
    }
}

/// An argument plus every optional construct of the text format.
pub fn random_full_case(rng: &mut impl Rng) -> SafetyCase {
    let n = rng.random_range(1..40);
    let mut case = random_argument(rng, n);
    case.name = statement(rng, n);
    for (i, e) in case.elements.iter_mut().enumerate() {
        e.statement = statement(rng, i);
    }
    let units = [ExposureUnit::Hour, ExposureUnit::Km, ExposureUnit::Mission];
    for s in &mut case.spis {
        s.metric = statement(rng, 0);
        s.threshold = nice_f64(rng);
        s.unit = *units.choose(rng).unwrap();
        s.direction = if rng.random_bool(0.8) {
            Direction::AtMost
        } else {
            Direction::AtLeast
        };
        s.timing = if rng.random_bool(0.5) {
            Timing::Leading
        } else {
            Timing::Lagging
        };
        s.trace = if rng.random_bool(0.5) {
            TraceKind::Behavioral
        } else {
            TraceKind::Operational
        };
        s.confidence_target = [0.95, 0.9, 0.99, 0.5][rng.random_range(0..4)];
    }
    for (i, l) in case.evidence.iter_mut().enumerate() {
        if rng.random_bool(0.3) {
            *l = DynamicLink::pinned(&l.id, &l.artifact, rng.random_range(1..5))
                .with_sensitivity(l.sensitivity);
        }
        if i % 3 == 0 {
            l.artifact = format!("{} {i}", l.artifact);
        }
    }
    for t in 0..rng.random_range(0..3) {
        case.fault_trees
            .push(random_annotated_tree(rng, &format!("FT{t}"), &case.spis));
    }
    if rng.random_bool(0.5) {
        let tagged = |rng: &mut _| {
            TaggedStatement::new(*InterfaceTag::ALL.choose(rng).unwrap(), statement(rng, 0))
        };
        let assumptions = (0..Rng::random_range(rng, 0..3))
            .map(|_| tagged(rng))
            .collect();
        let guarantees = (0..Rng::random_range(rng, 0..3))
            .map(|_| tagged(rng))
            .collect();
        case.interface = Some(CaseInterface {
            assumptions,
            guarantees,
        });
    }
    if rng.random_bool(0.5) {
        case.hazard_log_ref = Some("hazards.scdl-log".into());
    }
    case.normalized()
}

fn random_annotated_tree(
    rng: &mut impl Rng,
    id: &str,
    spis: &[SpiDefinition],
) -> QuantitativeFaultTree {
    let n = rng.random_range(1..8);
    let pool: Vec<BasicEvent> = (0..n)
        .map(|i| {
            let mut b = BasicEvent::new(format!("b{i}"), nice_f64(rng));
            if rng.random_bool(0.2) {
                b.rate = Rate::Placeholder;
            }
            if rng.random_bool(0.3) {
                b.description = statement(rng, i);
            }
            b.kind = *EventKind::ALL.choose(rng).unwrap();
            if let (true, Some(s)) = (rng.random_bool(0.3), spis.choose(rng)) {
                b.spi_ref = Some(s.id.clone());
            }
            b
        })
        .collect();
    let mut counter = 0;
    let mut top = random_gate(rng, &pool, 0, &mut counter, id);
    rename_some_gates(rng, &mut top);
    let mut tree = QuantitativeFaultTree::new(id, format!("H_{id}"), top);
    for g in tree.top.gates() {
        if rng.random_bool(0.3) {
            tree.budgets.insert(g.id.clone(), nice_f64(rng));
        }
    }
    let events: Vec<String> = tree.basic_events().keys().map(|s| s.to_string()).collect();
    for e in events {
        if rng.random_bool(0.2) {
            tree.budgets.insert(e, nice_f64(rng));
        }
    }
    if rng.random_bool(0.5) {
        tree.mission = Some(Mission {
            duration: rng.random_range(1..100) as f64,
            unit: ExposureUnit::Hour,
        });
    }
    tree
}

fn rename_some_gates(rng: &mut impl Rng, gate: &mut Gate) {
    if rng.random_bool(0.3) {
        gate.id = format!("named_{}", gate.id.replace('.', "_"));
    }
    for c in &mut gate.children {
        if let FtNode::Gate(g) = c {
            rename_some_gates(rng, g);
        }
    }
}

/// Random byte-level damage to a text: deletions, duplications and
/// inserted junk.
pub fn corrupt(rng: &mut impl Rng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let junk = [
        "{", "}", ";", "\"", ":", "<=", "9e", "goal", "@", "\n", "evidence", "\\u{zz}", ",",
    ];
    for _ in 0..rng.random_range(1..6) {
        if chars.is_empty() {
            break;
        }
        let at = rng.random_range(0..chars.len());
        match rng.random_range(0..3) {
            0 => {
                let end = (at + rng.random_range(1..10)).min(chars.len());
                chars.drain(at..end);
            }
            1 => {
                let end = (at + rng.random_range(1..10)).min(chars.len());
                let piece: Vec<char> = chars[at..end].to_vec();
                chars.splice(at..at, piece);
            }
            _ => {
                let j: Vec<char> = junk.choose(rng).unwrap().chars().collect();
                chars.splice(at..at, j);
            }
        }
    }
    chars.into_iter().collect()
}

/// Whether `(line, column, length)` lies inside `text`; one position past
/// the end of a line is allowed.
pub fn span_in_bounds(text: &str, line: usize, column: usize, length: usize) -> bool {
    let lines: Vec<&str> = text.split('\n').collect();
    if line == 0 || line > lines.len() || column == 0 {
        return false;
    }
    let width = lines[line - 1].chars().count();
    column - 1 + length <= width + 1
}

// ---------------------------------------------------------------- statistics

/// Exact two-sided p-value for `k2` out of `k1 + k2` at probability 1/2:
/// sum of C(n, j) over every j no more likely than the observation.
pub fn binomial_half_p_value(k1: u64, k2: u64) -> f64 {
    let n = k1 + k2;
    let coef = |j: u64| -> u128 {
        let mut c: u128 = 1;
        for i in 0..j {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c
    };
    let observed = coef(k2);
    let tail: u128 = (0..=n).map(coef).filter(|c| *c <= observed).sum();
    (tail as f64 / 2f64.powi(n as i32)).min(1.0)
}

/// Poisson CDF P(X <= k) at mean `m`, by direct summation.
pub fn poisson_cdf(k: u64, m: f64) -> f64 {
    let mut term = (-m).exp();
    let mut sum = term;
    for i in 1..=k {
        term *= m / i as f64;
        sum += term;
    }
    sum
}

/// Upper confidence bound on a Poisson rate: the mean at which observing
/// at most `k` events has probability `1 - confidence`, by bisection.
pub fn poisson_upper_oracle(k: u64, exposure: f64, confidence: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, k as f64 + 50.0 + 20.0 * (k as f64).sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poisson_cdf(k, mid) > 1.0 - confidence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / exposure
}

/// Lower confidence bound: the mean at which observing at least `k`
/// events has probability `1 - confidence`. Zero for `k = 0`.
pub fn poisson_lower_oracle(k: u64, exposure: f64, confidence: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, k as f64 + 50.0 + 20.0 * (k as f64).sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - poisson_cdf(k - 1, mid) < 1.0 - confidence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / exposure
}

/// Whitespace collapsed by hand, then lower-cased.
pub fn oracle_normalize(s: &str) -> String {
    let mut out = String::new();
    let mut pending_space = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.extend(ch.to_lowercase());
        }
    }
    out
}

// ---------------------------------------------------------------- defects

#[derive(Debug, Clone, Copy)]
pub enum Defect {
    Cycle,
    UndevelopedGoal,
    OrphanSolution,
    IllegalEdge,
    DuplicateId,
}

impl Defect {
    pub const ALL: [Defect; 5] = [
        Defect::Cycle,
        Defect::UndevelopedGoal,
        Defect::OrphanSolution,
        Defect::IllegalEdge,
        Defect::DuplicateId,
    ];
}

pub fn seed_defect(
    r: &mut impl Rng,
    case: &SafetyCase,
    defect: Defect,
) -> (SafetyCase, &'static str) {
    let mut m = case.clone();
    let of = |k: ElementKind| -> Vec<String> {
        case.elements
            .iter()
            .filter(|e| e.kind == k)
            .map(|e| e.id.clone())
            .collect()
    };
    let rule = match defect {
        Defect::Cycle => {
            let mut inner = of(ElementKind::Goal);
            inner.extend(of(ElementKind::Strategy));
            inner.retain(|g| g != "G0");
            match inner.choose(r) {
                Some(x) => m.edges.push(ArgumentEdge::supported_by(x, "G0")),
                None => {
                    m.elements
                        .push(ArgumentElement::new("Gloop", ElementKind::Goal, "loop"));
                    m.edges.push(ArgumentEdge::supported_by("G0", "Gloop"));
                    m.edges.push(ArgumentEdge::supported_by("Gloop", "G0"));
                }
            }
            rules::CYCLE
        }
        Defect::UndevelopedGoal => {
            let mut parents = of(ElementKind::Goal);
            parents.extend(of(ElementKind::Strategy));
            let p = parents.choose(r).unwrap();
            m.elements.push(ArgumentElement::new(
                "Gnew",
                ElementKind::Goal,
                "an undeveloped claim",
            ));
            m.edges.push(ArgumentEdge::supported_by(p, "Gnew"));
            rules::UNDEVELOPED_GOAL
        }
        Defect::OrphanSolution => {
            m.elements.push(ArgumentElement::new(
                "SnOrphan",
                ElementKind::Solution,
                "floating evidence",
            ));
            rules::ORPHAN_SOLUTION
        }
        Defect::IllegalEdge => {
            let goals = of(ElementKind::Goal);
            let sols = of(ElementKind::Solution);
            if r.random_bool(0.5) {
                m.edges.push(ArgumentEdge::supported_by(
                    sols.choose(r).unwrap(),
                    goals.choose(r).unwrap(),
                ));
            } else {
                let g = goals.choose(r).unwrap();
                m.edges
                    .push(ArgumentEdge::in_context_of(g, sols.choose(r).unwrap()));
            }
            rules::ILLEGAL_EDGE
        }
        Defect::DuplicateId => {
            let e = case.elements.choose(r).unwrap().clone();
            m.elements.push(e);
            rules::DUPLICATE_ID
        }
    };
    (m, rule)
}
