use std::collections::BTreeMap;
use std::fmt::Write;

use super::escape_string_body as esc;
use crate::argument::{EdgeKind, ElementKind, SafetyCase};
use crate::evidence::{Sensitivity, VersionSelector};
use crate::fault_tree::{FtNode, Gate, QuantitativeFaultTree, Rate};
use crate::spi::{Direction, DEFAULT_CONFIDENCE};

/// Canonical SCDL text. Items are grouped by kind, sorted by id within a
/// group, and groups are separated by a blank line.
pub fn print(case: &SafetyCase) -> String {
    let mut case = case.clone();
    case.normalize();
    let mut groups: Vec<String> = Vec::new();

    if let Some(path) = &case.hazard_log_ref {
        groups.push(format!("  hazard_log \"{}\";\n", esc(path)));
    }

    let mut out_edges: BTreeMap<(&str, EdgeKind), Vec<&str>> = BTreeMap::new();
    for e in &case.edges {
        out_edges
            .entry((e.from.as_str(), e.kind))
            .or_default()
            .push(e.to.as_str());
    }
    for kind in ElementKind::ALL {
        let mut g = String::new();
        for el in case.elements.iter().filter(|e| e.kind == kind) {
            let _ = write!(
                g,
                "  {} {} \"{}\"",
                kind.keyword(),
                el.id,
                esc(&el.statement)
            );
            let mut lines = Vec::new();
            for ek in [EdgeKind::SupportedBy, EdgeKind::InContextOf] {
                if let Some(targets) = out_edges.get(&(el.id.as_str(), ek)) {
                    lines.push(format!("{}: {}", ek.keyword(), targets.join(", ")));
                }
            }
            lines.extend(el.evidence_links.iter().map(|l| format!("evidence: {l}")));
            lines.extend(el.spi_refs.iter().map(|s| format!("spi: {s}")));
            if lines.is_empty() {
                g.push('\n');
            } else {
                g.push_str(" {\n");
                for l in lines {
                    let _ = writeln!(g, "    {l}");
                }
                g.push_str("  }\n");
            }
        }
        if !g.is_empty() {
            groups.push(g);
        }
    }

    let mut g = String::new();
    for s in &case.spis {
        let _ = writeln!(g, "  spi {} on {} {{", s.id, s.claim_id);
        let _ = writeln!(g, "    metric \"{}\";", esc(&s.metric));
        let op = match s.direction {
            Direction::AtMost => "<=",
            Direction::AtLeast => ">=",
        };
        let _ = writeln!(g, "    threshold {op} {} per {};", s.threshold, s.unit);
        let _ = writeln!(g, "    kind {} {};", s.timing.keyword(), s.trace.keyword());
        if s.confidence_target != DEFAULT_CONFIDENCE {
            let _ = writeln!(g, "    confidence {};", s.confidence_target);
        }
        g.push_str("  }\n");
    }
    if !g.is_empty() {
        groups.push(g);
    }

    let mut g = String::new();
    for l in &case.evidence {
        let version = match l.selector {
            VersionSelector::Latest => "latest".to_string(),
            VersionSelector::Pinned(n) => format!("\"{n}\""),
        };
        let _ = write!(
            g,
            "  evidence {} uri \"{}\" version {version}",
            l.id,
            esc(&l.artifact)
        );
        if l.sensitivity != Sensitivity::Strict {
            let _ = write!(g, " sensitivity {}", l.sensitivity.keyword());
        }
        g.push_str(";\n");
    }
    if !g.is_empty() {
        groups.push(g);
    }

    let mut g = String::new();
    for t in &case.fault_trees {
        print_tree(&mut g, t);
    }
    if !g.is_empty() {
        groups.push(g);
    }

    if let Some(iface) = &case.interface {
        let mut g = String::from("  interface {\n");
        for a in &iface.assumptions {
            let _ = writeln!(
                g,
                "    assume {} \"{}\";",
                a.tag.keyword(),
                esc(&a.statement)
            );
        }
        for a in &iface.guarantees {
            let _ = writeln!(
                g,
                "    guarantee {} \"{}\";",
                a.tag.keyword(),
                esc(&a.statement)
            );
        }
        g.push_str("  }\n");
        groups.push(g);
    }

    format!("case \"{}\" {{\n{}}}\n", esc(&case.name), groups.join("\n"))
}

fn print_tree(out: &mut String, t: &QuantitativeFaultTree) {
    let _ = writeln!(out, "  fault_tree {} for {} {{", t.id, t.hazard_id);
    if let Some(m) = t.mission {
        let _ = writeln!(out, "    mission {} {};", m.duration, m.unit);
    }
    out.push_str("    top ");
    let mut n = 0;
    print_gate(out, t, &t.top, 2, &mut n);
    out.push_str("  }\n");
}

fn print_gate(out: &mut String, t: &QuantitativeFaultTree, g: &Gate, level: usize, n: &mut usize) {
    let auto = format!("{}.g{}", t.id, *n);
    *n += 1;
    out.push_str(g.op.keyword());
    if g.id != auto {
        let _ = write!(out, " {}", g.id);
    }
    if let Some(b) = t.budgets.get(&g.id) {
        let _ = write!(out, " budget {b}");
    }
    out.push_str(" {\n");
    let pad = "  ".repeat(level + 1);
    for c in &g.children {
        match c {
            FtNode::Gate(child) => {
                out.push_str(&pad);
                print_gate(out, t, child, level + 1, n);
            }
            FtNode::Basic(b) => {
                let _ = write!(out, "{pad}basic {} rate ", b.id);
                match b.rate {
                    Rate::Value(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Rate::Placeholder => out.push_str("tbd"),
                }
                if let Some(spi) = &b.spi_ref {
                    let _ = write!(out, " spi {spi}");
                }
                if b.kind != Default::default() {
                    let _ = write!(out, " kind {}", b.kind);
                }
                if !b.description.is_empty() {
                    let _ = write!(out, " desc \"{}\"", esc(&b.description));
                }
                if let Some(budget) = t.budgets.get(&b.id) {
                    let _ = write!(out, " budget {budget}");
                }
                out.push_str(";\n");
            }
        }
    }
    let _ = writeln!(out, "{}}}", "  ".repeat(level));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scdl::parse;

    #[test]
    fn empty_case() {
        assert_eq!(print(&SafetyCase::new("x")), "case \"x\" {\n}\n");
    }

    #[test]
    fn round_trip_keeps_everything() {
        let text = r#"case "demo" {
          hazard_log "hazards.toml";
          goal G1 "top" { supported_by: S1; in_context_of: C1 }
          strategy S1 "split" { supported_by: Sn1 }
          solution Sn1 "tests" { evidence: E1 }
          context C1 "odd"
          spi P on G1 { metric "m"; threshold >= 1e-9 per km; kind lagging operational; confidence 0.99; }
          evidence E1 uri "file:///r.pdf" version "3" sensitivity robust_to_editorial;
          fault_tree T for H { mission 1.5 mission; top and x budget 0.1 { or { basic a rate 0.5 spi P budget 0.2; basic b rate tbd; } basic c rate 1e-7 kind hw_failure desc "d \"q\""; } }
          interface { assume standard "ISO 26262 conformance"; guarantee regulation "r"; }
        }"#;
        let a = parse(text);
        assert!(!a.has_errors(), "{:?}", a.diagnostics);
        let a = a.case.unwrap();
        let printed = print(&a);
        let b = parse(&printed);
        assert!(!b.has_errors(), "{printed}\n{:?}", b.diagnostics);
        assert_eq!(b.case.unwrap(), a);
        assert_eq!(print(&a), printed);
    }
}
