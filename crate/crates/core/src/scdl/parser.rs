use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{Tok, Token};
use super::{Diagnostic, SourceSpan};
use crate::argument::{
    ArgumentEdge, ArgumentElement, ElementKind, InterfaceTag, SafetyCase, TaggedStatement,
};
use crate::evidence::{DynamicLink, Sensitivity, VersionSelector};
use crate::fault_tree::{
    BasicEvent, EventKind, FtNode, Gate, GateOp, Mission, QuantitativeFaultTree, Rate,
};
use crate::spi::{Direction, ExposureUnit, SpiDefinition, Timing, TraceKind, DEFAULT_CONFIDENCE};

type PResult<T> = Result<T, ()>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Category {
    Element,
    Spi,
    Evidence,
    Tree,
}

impl Category {
    fn noun(self) -> &'static str {
        match self {
            Category::Element => "an argument element",
            Category::Spi => "an SPI",
            Category::Evidence => "an evidence link",
            Category::Tree => "a fault tree",
        }
    }
}

struct Ref {
    id: String,
    span: SourceSpan,
    expect: Category,
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    depth: usize,
    diags: &'a mut Vec<Diagnostic>,
    case: SafetyCase,
    declared: BTreeMap<String, (Category, SourceSpan)>,
    refs: Vec<Ref>,
    interface_seen: bool,
    hazard_log_seen: bool,
}

/// Per-tree state while parsing gates.
struct TreeCtx {
    tree: String,
    next_gate: usize,
    gates: Vec<(String, SourceSpan)>,
    basics: BTreeMap<String, (BasicEvent, Option<f64>, SourceSpan)>,
    budgets: BTreeMap<String, f64>,
}

pub(crate) fn parse_tokens(toks: &[Token], diags: &mut Vec<Diagnostic>) -> Option<SafetyCase> {
    let mut p = Parser {
        toks,
        pos: 0,
        depth: 0,
        diags,
        case: SafetyCase::default(),
        declared: BTreeMap::new(),
        refs: Vec::new(),
        interface_seen: false,
        hazard_log_seen: false,
    };
    p.document().ok()?;
    p.check_refs();
    Some(p.case)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Tok {
        &self.toks[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn next(&mut self) -> &'a Token {
        let t = &self.toks[self.pos];
        match t.tok {
            Tok::LBrace => self.depth += 1,
            Tok::RBrace => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, span: SourceSpan, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(span, msg));
    }

    fn unexpected<T>(&mut self, wanted: &str) -> PResult<T> {
        let found = self.peek().describe();
        let span = self.span();
        self.error(span, format!("expected {wanted}, found {found}"));
        Err(())
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.next();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn punct(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Tok::Ident(s) => {
                let span = self.span();
                self.next();
                Ok((s.clone(), span))
            }
            _ => self.unexpected(what),
        }
    }

    fn string(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Tok::Str(s) => {
                let span = self.span();
                self.next();
                Ok((s.clone(), span))
            }
            _ => self.unexpected(what),
        }
    }

    fn number(&mut self, what: &str) -> PResult<(f64, SourceSpan)> {
        match self.peek() {
            Tok::Number(v) => {
                let span = self.span();
                self.next();
                Ok((*v, span))
            }
            _ => self.unexpected(what),
        }
    }

    fn choice<T: Copy>(&mut self, what: &str, table: &[(&str, T)]) -> PResult<T> {
        if let Tok::Ident(s) = self.peek() {
            if let Some((_, v)) = table.iter().find(|(k, _)| k == s) {
                self.next();
                return Ok(*v);
            }
        }
        self.unexpected(what)
    }

    fn unit(&mut self) -> PResult<ExposureUnit> {
        self.choice(
            "a unit (`hour`, `km` or `mission`)",
            &[
                ("hour", ExposureUnit::Hour),
                ("km", ExposureUnit::Km),
                ("mission", ExposureUnit::Mission),
            ],
        )
    }

    fn declare(&mut self, id: &str, span: SourceSpan, cat: Category) {
        if let Some((_, first)) = self.declared.get(id) {
            let line = first.line;
            self.error(
                span,
                format!("duplicate id {id} (first defined at line {line})"),
            );
        } else {
            self.declared.insert(id.to_string(), (cat, span));
        }
    }

    fn reference(&mut self, id: String, span: SourceSpan, expect: Category) {
        self.refs.push(Ref { id, span, expect });
    }

    /// Skips to just after the next `;` or the `}` closing the item that
    /// started at `depth`, or to the `}` closing the enclosing block.
    fn recover(&mut self, depth: usize) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::RBrace if self.depth == depth => return,
                _ => {}
            }
            let t = self.next();
            if self.depth == depth && matches!(t.tok, Tok::Semi | Tok::RBrace) {
                return;
            }
        }
    }

    fn document(&mut self) -> PResult<()> {
        self.keyword("case")?;
        let (name, _) = self.string("the case name")?;
        self.case.name = name;
        self.punct(Tok::LBrace)?;
        let depth = self.depth;
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Eof => {
                    let span = self.span();
                    self.error(span, "expected `}` to close the case");
                    return Ok(());
                }
                _ => {
                    if self.item().is_err() {
                        self.recover(depth);
                    }
                }
            }
        }
        if *self.peek() != Tok::Eof {
            let span = self.span();
            let found = self.peek().describe();
            self.error(
                span,
                format!("unexpected {found} after the end of the case"),
            );
        }
        Ok(())
    }

    fn item(&mut self) -> PResult<()> {
        let word = match self.peek() {
            Tok::Ident(s) => s.as_str(),
            _ => return self.unexpected("an item"),
        };
        if let Some(kind) = ElementKind::from_keyword(word) {
            return self.element(kind);
        }
        match word {
            "spi" => self.spi(),
            "evidence" => self.evidence(),
            "fault_tree" => self.fault_tree(),
            "interface" => self.interface(),
            "hazard_log" => self.hazard_log(),
            _ => self.unexpected(
                "an item (`goal`, `strategy`, `solution`, `context`, `assumption`, `justification`, `spi`, `evidence`, `fault_tree`, `interface` or `hazard_log`)",
            ),
        }
    }

    fn element(&mut self, kind: ElementKind) -> PResult<()> {
        self.next();
        let (id, id_span) = self.ident("an element id")?;
        self.declare(&id, id_span, Category::Element);
        let (statement, _) = self.string("the element statement")?;
        let mut element = ArgumentElement::new(&id, kind, statement);
        let mut edges = Vec::new();
        if *self.peek() == Tok::LBrace {
            self.next();
            let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
            while *self.peek() != Tok::RBrace {
                let key = self.choice(
                    "`supported_by`, `in_context_of`, `evidence`, `spi` or `}`",
                    &[
                        ("supported_by", 0),
                        ("in_context_of", 1),
                        ("evidence", 2),
                        ("spi", 3),
                    ],
                )?;
                self.punct(Tok::Colon)?;
                loop {
                    let (target, span) = self.ident("an id")?;
                    if !seen.insert((key.to_string(), target.clone())) {
                        self.diags.push(Diagnostic::warning(
                            span,
                            format!("{target} is listed more than once"),
                        ));
                    }
                    match key {
                        0 => {
                            edges.push(ArgumentEdge::supported_by(&id, &target));
                            self.reference(target, span, Category::Element);
                        }
                        1 => {
                            edges.push(ArgumentEdge::in_context_of(&id, &target));
                            self.reference(target, span, Category::Element);
                        }
                        2 => {
                            element.evidence_links.push(target.clone());
                            self.reference(target, span, Category::Evidence);
                        }
                        _ => {
                            element.spi_refs.push(target.clone());
                            self.reference(target, span, Category::Spi);
                        }
                    }
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                if *self.peek() == Tok::Semi {
                    self.next();
                }
            }
            self.next();
        }
        self.case.elements.push(element);
        self.case.edges.extend(edges);
        Ok(())
    }

    fn spi(&mut self) -> PResult<()> {
        self.next();
        let (id, id_span) = self.ident("an SPI id")?;
        self.declare(&id, id_span, Category::Spi);
        self.keyword("on")?;
        let (claim, claim_span) = self.ident("the id of the claim the SPI is attached to")?;
        self.reference(claim.clone(), claim_span, Category::Element);
        self.punct(Tok::LBrace)?;
        let mut metric: Option<String> = None;
        let mut threshold: Option<(Direction, f64, ExposureUnit)> = None;
        let mut kind: Option<(Timing, TraceKind)> = None;
        let mut confidence: Option<f64> = None;
        while *self.peek() != Tok::RBrace {
            let span = self.span();
            let field = self.choice(
                "`metric`, `threshold`, `kind`, `confidence` or `}`",
                &[
                    ("metric", 0),
                    ("threshold", 1),
                    ("kind", 2),
                    ("confidence", 3),
                ],
            )?;
            let dup = match field {
                0 => metric.replace(self.string("the metric name")?.0).is_some(),
                1 => {
                    let direction = match self.peek() {
                        Tok::Le => Direction::AtMost,
                        Tok::Ge => Direction::AtLeast,
                        _ => return self.unexpected("`<=` or `>=`"),
                    };
                    self.next();
                    let (value, vspan) = self.number("the threshold")?;
                    if value < 0.0 {
                        self.error(vspan, "threshold must not be negative");
                    }
                    self.keyword("per")?;
                    let unit = self.unit()?;
                    threshold.replace((direction, value, unit)).is_some()
                }
                2 => {
                    let timing = self.choice(
                        "`leading` or `lagging`",
                        &[("leading", Timing::Leading), ("lagging", Timing::Lagging)],
                    )?;
                    let trace = self.choice(
                        "`behavioral` or `operational`",
                        &[
                            ("behavioral", TraceKind::Behavioral),
                            ("operational", TraceKind::Operational),
                        ],
                    )?;
                    kind.replace((timing, trace)).is_some()
                }
                _ => {
                    let (value, vspan) = self.number("the confidence target")?;
                    if !(value > 0.0 && value < 1.0) {
                        self.error(vspan, "confidence must lie strictly between 0 and 1");
                    }
                    confidence.replace(value).is_some()
                }
            };
            self.punct(Tok::Semi)?;
            if dup {
                self.error(span, "field given more than once");
            }
        }
        let close = self.span();
        self.next();
        let mut missing = Vec::new();
        if metric.is_none() {
            missing.push("`metric`");
        }
        if threshold.is_none() {
            missing.push("`threshold`");
        }
        if kind.is_none() {
            missing.push("`kind`");
        }
        if !missing.is_empty() {
            self.error(close, format!("spi {id} is missing {}", missing.join(", ")));
            return Ok(());
        }
        let (direction, value, unit) =
            threshold.unwrap_or((Direction::AtMost, 0.0, ExposureUnit::Hour));
        let (timing, trace) = kind.unwrap_or((Timing::Leading, TraceKind::Behavioral));
        self.case.spis.push(SpiDefinition {
            id,
            claim_id: claim,
            metric: metric.unwrap_or_default(),
            threshold: value,
            unit,
            direction,
            timing,
            trace,
            confidence_target: confidence.unwrap_or(DEFAULT_CONFIDENCE),
        });
        Ok(())
    }

    fn evidence(&mut self) -> PResult<()> {
        self.next();
        let (id, id_span) = self.ident("an evidence link id")?;
        self.declare(&id, id_span, Category::Evidence);
        self.keyword("uri")?;
        let (uri, uri_span) = self.string("the artifact uri")?;
        if uri.is_empty() {
            self.error(uri_span, "artifact uri must not be empty");
        }
        self.keyword("version")?;
        let selector = match self.peek() {
            Tok::Ident(s) if s == "latest" => {
                self.next();
                VersionSelector::Latest
            }
            Tok::Str(s) => {
                let span = self.span();
                self.next();
                match s.parse::<u64>() {
                    Ok(seq) if seq > 0 && s.bytes().all(|b| b.is_ascii_digit()) => {
                        VersionSelector::Pinned(seq)
                    }
                    _ => {
                        self.error(
                            span,
                            format!("pinned version must be a positive integer, found \"{s}\""),
                        );
                        VersionSelector::Latest
                    }
                }
            }
            _ => return self.unexpected("`latest` or a quoted version number"),
        };
        let mut sensitivity = Sensitivity::default();
        if self.is_kw("sensitivity") {
            self.next();
            sensitivity = self.choice(
                "`strict` or `robust_to_editorial`",
                &[
                    ("strict", Sensitivity::Strict),
                    ("robust_to_editorial", Sensitivity::RobustToEditorial),
                ],
            )?;
        }
        self.punct(Tok::Semi)?;
        self.case.evidence.push(DynamicLink {
            id,
            artifact: uri,
            selector,
            sensitivity,
        });
        Ok(())
    }

    fn fault_tree(&mut self) -> PResult<()> {
        self.next();
        let (id, id_span) = self.ident("a fault tree id")?;
        self.declare(&id, id_span, Category::Tree);
        self.keyword("for")?;
        let (hazard, _) = self.ident("the hazard id")?;
        self.punct(Tok::LBrace)?;
        let mut mission = None;
        if self.is_kw("mission") {
            self.next();
            let (duration, span) = self.number("the mission duration")?;
            if duration <= 0.0 {
                self.error(span, "mission duration must be positive");
            }
            let unit = self.unit()?;
            self.punct(Tok::Semi)?;
            mission = Some(Mission { duration, unit });
        }
        self.keyword("top")?;
        let mut ctx = TreeCtx {
            tree: id.clone(),
            next_gate: 0,
            gates: Vec::new(),
            basics: BTreeMap::new(),
            budgets: BTreeMap::new(),
        };
        let top = self.gate(&mut ctx)?;
        self.punct(Tok::RBrace)?;
        let mut seen: BTreeMap<&str, SourceSpan> = BTreeMap::new();
        let mut errors = Vec::new();
        for (gid, span) in &ctx.gates {
            if let Some(first) = seen.get(gid.as_str()) {
                errors.push((
                    *span,
                    format!(
                        "duplicate gate id {gid} in tree {id} (first defined at line {})",
                        first.line
                    ),
                ));
            } else if let Some((_, _, bspan)) = ctx.basics.get(gid) {
                errors.push((
                    *span,
                    format!("gate id {gid} is also a basic event at line {}", bspan.line),
                ));
            } else {
                seen.insert(gid, *span);
            }
        }
        for (span, msg) in errors {
            self.error(span, msg);
        }
        let mut tree = QuantitativeFaultTree::new(id, hazard, top);
        tree.budgets = ctx.budgets;
        tree.mission = mission;
        self.case.fault_trees.push(tree);
        Ok(())
    }

    fn gate(&mut self, ctx: &mut TreeCtx) -> PResult<Gate> {
        let gate_span = self.span();
        let op = self.choice("`or` or `and`", &[("or", GateOp::Or), ("and", GateOp::And)])?;
        let auto = format!("{}.g{}", ctx.tree, ctx.next_gate);
        ctx.next_gate += 1;
        let (id, id_span) = match self.peek() {
            Tok::Ident(s) if s != "budget" => {
                let span = self.span();
                self.next();
                (s.clone(), span)
            }
            _ => (auto, gate_span),
        };
        ctx.gates.push((id.clone(), id_span));
        if self.is_kw("budget") {
            self.next();
            let (b, _) = self.number("the gate budget")?;
            ctx.budgets.insert(id.clone(), b);
        }
        self.punct(Tok::LBrace)?;
        let mut children = Vec::new();
        while *self.peek() != Tok::RBrace {
            if self.is_kw("basic") {
                children.push(FtNode::Basic(self.basic(ctx)?));
            } else if self.is_kw("or") || self.is_kw("and") {
                children.push(FtNode::Gate(self.gate(ctx)?));
            } else {
                return self.unexpected("`basic`, `or`, `and` or `}`");
            }
        }
        self.next();
        if children.is_empty() {
            self.error(gate_span, format!("gate {id} has no children"));
        }
        Ok(Gate { id, op, children })
    }

    fn basic(&mut self, ctx: &mut TreeCtx) -> PResult<BasicEvent> {
        self.next();
        let (id, span) = self.ident("a basic event id")?;
        self.keyword("rate")?;
        let rate = if self.is_kw("tbd") {
            self.next();
            Rate::Placeholder
        } else {
            let (v, vspan) = self.number("a rate or `tbd`")?;
            if !(0.0..=1.0).contains(&v) {
                self.error(vspan, format!("rate {v} must lie in [0, 1]"));
            }
            Rate::Value(v)
        };
        let mut event = BasicEvent {
            id: id.clone(),
            description: String::new(),
            rate,
            spi_ref: None,
            kind: EventKind::default(),
        };
        let mut budget = None;
        let mut seen = BTreeSet::new();
        while *self.peek() != Tok::Semi {
            let aspan = self.span();
            let attr = self.choice(
                "`spi`, `kind`, `desc`, `budget` or `;`",
                &[("spi", 0), ("kind", 1), ("desc", 2), ("budget", 3)],
            )?;
            match attr {
                0 => {
                    let (spi, sspan) = self.ident("an SPI id")?;
                    self.reference(spi.clone(), sspan, Category::Spi);
                    event.spi_ref = Some(spi);
                }
                1 => {
                    let table: Vec<(&str, EventKind)> =
                        EventKind::ALL.iter().map(|k| (k.keyword(), *k)).collect();
                    event.kind = self.choice("an event kind", &table)?;
                }
                2 => event.description = self.string("a description")?.0,
                _ => budget = Some(self.number("the event budget")?.0),
            }
            if !seen.insert(attr) {
                self.error(aspan, "attribute given more than once");
            }
        }
        self.next();
        match ctx.basics.get(&id) {
            Some((first, first_budget, first_span)) => {
                if *first != event || *first_budget != budget {
                    let line = first_span.line;
                    self.error(
                        span,
                        format!(
                            "shared basic event {id} differs from its definition at line {line}"
                        ),
                    );
                }
            }
            None => {
                ctx.basics.insert(id.clone(), (event.clone(), budget, span));
                if let Some(b) = budget {
                    ctx.budgets.insert(id, b);
                }
            }
        }
        Ok(event)
    }

    fn interface(&mut self) -> PResult<()> {
        let span = self.span();
        self.next();
        if std::mem::replace(&mut self.interface_seen, true) {
            self.error(span, "a case has at most one interface block");
        }
        self.punct(Tok::LBrace)?;
        let mut iface = self.case.interface.take().unwrap_or_default();
        let tags: Vec<(&str, InterfaceTag)> = InterfaceTag::ALL
            .iter()
            .map(|t| (t.keyword(), *t))
            .collect();
        let result = (|| {
            while *self.peek() != Tok::RBrace {
                let guarantee = self.choice(
                    "`assume`, `guarantee` or `}`",
                    &[("assume", false), ("guarantee", true)],
                )?;
                let tag = self.choice("an interface tag", &tags)?;
                let (statement, _) = self.string("the statement")?;
                self.punct(Tok::Semi)?;
                let entry = TaggedStatement::new(tag, statement);
                if guarantee {
                    iface.guarantees.push(entry);
                } else {
                    iface.assumptions.push(entry);
                }
            }
            self.next();
            Ok(())
        })();
        self.case.interface = Some(iface);
        result
    }

    fn hazard_log(&mut self) -> PResult<()> {
        let span = self.span();
        self.next();
        let (path, _) = self.string("the hazard log path")?;
        self.punct(Tok::Semi)?;
        if std::mem::replace(&mut self.hazard_log_seen, true) {
            self.error(span, "hazard_log given more than once");
        }
        self.case.hazard_log_ref = Some(path);
        Ok(())
    }

    fn check_refs(&mut self) {
        for r in std::mem::take(&mut self.refs) {
            match self.declared.get(&r.id) {
                None => self.error(r.span, format!("dangling reference {}", r.id)),
                Some((cat, _)) if *cat != r.expect => {
                    let msg = format!("{} is {}, expected {}", r.id, cat.noun(), r.expect.noun());
                    self.error(r.span, msg)
                }
                Some(_) => {}
            }
        }
    }
}
