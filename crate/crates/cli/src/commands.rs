use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use livecase::argument::{
    instantiate_oascf_template, soundness_status, validate_wellformed, EvidenceState, SpiState,
    TemplateParams,
};
use livecase::evidence::{EvidenceRegistry, Journal};
use livecase::fault_tree::{
    check_budgets, minimal_cut_sets_with, refine_rates, top_probability_with, validate_tree,
    FaultTreeError, QuantitativeFaultTree,
};
use livecase::hazard::{trace_check, HazardLog, RiskMatrix};
use livecase::impact::{
    parse_annotations, parse_change_events, propagate, structure_lint, ImpactError, ImpactReport,
    ImpactState,
};
use livecase::report::Finding;
use livecase::scdl;
use livecase::spi::{
    detect_violations, evaluate_all, evaluate_totals, lint_spi_placement, SpiDefinition,
    SpiEvaluation, SpiStatus, TelemetryDiagnostic, TelemetryStore, Window,
};
use livecase::{Exec, SafetyCase, ValidationReport};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::report::{
    sig6, verdict, CaseReport, EvidenceEntry, ImpactSummary, TreeEntry, REPORT_VERSION,
};
use crate::{Cli, Command, Ingest, Outcome};

pub mod rules {
    pub const TELEMETRY_REJECTED: &str = "telemetry_rejected";
    pub const SPI_UNIT_MISMATCH: &str = "spi_unit_mismatch";
    pub const SPI_LOW_CONFIDENCE: &str = "spi_low_confidence";
    pub const SPI_NO_DATA: &str = "spi_no_data";
    pub const EVIDENCE_UNRESOLVED: &str = "evidence_unresolved";
    pub const FT_DEVIATION: &str = "ft_rate_deviation";
    pub const FT_BUDGET_EXCEEDED: &str = "ft_budget_exceeded";
    pub const FT_NOT_QUANTIFIED: &str = "ft_not_quantified";
    pub const STATUS_UNAVAILABLE: &str = "status_unavailable";
    pub const SCDL_WARNING: &str = "scdl_warning";
}

struct Ctx {
    cfg: RunConfig,
    format: Format,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(c) = &cli.case {
            cfg.case = Some(c.clone());
        }
        let format = cli.format.or(cfg.format).unwrap_or_default();
        Ok(Self { cfg, format })
    }

    fn case_path(&self) -> Result<&Path> {
        self.cfg
            .case
            .as_deref()
            .ok_or_else(|| anyhow!("no case file given; use --case or a config file"))
    }

    fn load_case(&self) -> Result<(SafetyCase, Vec<Finding>)> {
        let path = self.case_path()?;
        let text = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let parsed = scdl::parse_bytes(&text);
        if parsed.has_errors() {
            let mut msg = format!("{} does not parse:", path.display());
            for d in parsed.errors() {
                let _ = write!(msg, "\n  {}:{d}", path.display());
            }
            bail!(msg);
        }
        let warnings = parsed
            .diagnostics
            .iter()
            .map(|d| {
                Finding::warning(
                    format!("{}:{}", d.span.line, d.span.column),
                    rules::SCDL_WARNING,
                    d.message.clone(),
                )
            })
            .collect();
        let case = parsed
            .case
            .ok_or_else(|| anyhow!("{} does not contain a case", path.display()))?;
        Ok((case, warnings))
    }

    fn hazard_log_path(&self, case: &SafetyCase) -> Option<PathBuf> {
        if let Some(p) = &self.cfg.hazard_log {
            return Some(p.clone());
        }
        let r = case.hazard_log_ref.as_ref()?;
        let base = self
            .cfg
            .case
            .as_deref()
            .and_then(Path::parent)
            .unwrap_or(Path::new("."));
        Some(base.join(r))
    }

    fn hazard_inputs(&self, case: &SafetyCase) -> Result<Option<(HazardLog, RiskMatrix)>> {
        let (Some(log_path), Some(matrix_path)) =
            (self.hazard_log_path(case), self.cfg.risk_matrix.as_ref())
        else {
            return Ok(None);
        };
        let log = HazardLog::from_toml_str(&read(&log_path)?)
            .with_context(|| format!("in {}", log_path.display()))?;
        let matrix = RiskMatrix::from_toml_str(&read(matrix_path)?)
            .with_context(|| format!("in {}", matrix_path.display()))?;
        Ok(Some((log, matrix)))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialise");
    s.push('\n');
    s
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let ctx = Ctx::new(cli)?;
    match &cli.command {
        Command::Validate => validate(&ctx),
        Command::Evaluate { events } => evaluate(&ctx, events.as_deref()),
        Command::Impact {
            events,
            annotations,
        } => impact(&ctx, events, annotations.as_deref()),
        Command::Init {
            system,
            odd,
            output,
            force,
        } => init(&ctx, system, odd, output, *force),
        Command::Fta { tree } => fta(&ctx, tree),
        Command::Ingest(Ingest::Telemetry { files }) => ingest_telemetry(&ctx, files),
        Command::Ingest(Ingest::Evidence {
            artifact,
            file,
            journal,
        }) => ingest_evidence(&ctx, artifact, file, journal.as_deref()),
    }
}

fn structural_findings(
    cfg: &RunConfig,
    case: &SafetyCase,
    hazard: Option<&(HazardLog, RiskMatrix)>,
) -> Vec<Finding> {
    let mut findings = validate_wellformed(case).findings;
    findings.extend(lint_spi_placement(case).findings);
    findings.extend(structure_lint(case, &cfg.lint).findings);
    let spi_ids: BTreeSet<&str> = case.spis.iter().map(|s| s.id.as_str()).collect();
    for tree in &case.fault_trees {
        findings.extend(validate_tree(tree, Some(&spi_ids)).findings);
    }
    if let Some((log, matrix)) = hazard {
        findings.extend(trace_check(log, case, &case.fault_trees, matrix).findings);
    }
    findings
}

#[derive(Serialize)]
struct ValidateDoc<'a> {
    version: &'static str,
    command: &'static str,
    case: &'a str,
    errors: usize,
    warnings: usize,
    findings: &'a [Finding],
}

/// Exit 0 without errors, 1 with errors, 2 when the case cannot be read.
fn validate(ctx: &Ctx) -> Result<Outcome> {
    let (case, mut findings) = ctx.load_case()?;
    let hazard = ctx.hazard_inputs(&case)?;
    findings.extend(structural_findings(&ctx.cfg, &case, hazard.as_ref()));
    let report = ValidationReport::new(findings);
    let errors = report.error_count();
    let warnings = report.warnings().count();
    let out = match ctx.format {
        Format::Structured => to_json(&ValidateDoc {
            version: REPORT_VERSION,
            command: "validate",
            case: &case.name,
            errors,
            warnings,
            findings: &report.findings,
        }),
        Format::Text => {
            let mut s = format!(
                "case {}: {errors} error(s), {warnings} warning(s)\n",
                case.name
            );
            for f in &report.findings {
                let _ = writeln!(s, "  {f}");
            }
            s
        }
    };
    Ok(Outcome::new(i32::from(errors > 0), out))
}

fn load_telemetry(paths: &[PathBuf]) -> Result<(TelemetryStore, Vec<TelemetryDiagnostic>)> {
    let mut store = TelemetryStore::new();
    let mut rejected = Vec::new();
    for p in paths {
        let summary = store.ingest_lines(&read(p)?);
        let name = p.display().to_string();
        rejected.extend(summary.rejected.into_iter().map(|d| TelemetryDiagnostic {
            line: d.line,
            message: format!("{name}: {}", d.message),
        }));
    }
    Ok((store, rejected))
}

fn load_registry(path: Option<&Path>) -> Result<EvidenceRegistry> {
    match path {
        Some(p) => Ok(Journal::open(p)
            .with_context(|| format!("cannot open journal {}", p.display()))?
            .into_registry()),
        None => Ok(EvidenceRegistry::new()),
    }
}

fn load_impact(
    case: &SafetyCase,
    events: &Path,
    annotations: Option<&Path>,
) -> Result<Result<ImpactReport, ImpactError>> {
    let events =
        parse_change_events(&read(events)?).with_context(|| format!("in {}", events.display()))?;
    let annotations = match annotations {
        Some(p) => parse_annotations(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Vec::new(),
    };
    Ok(propagate(case, &events, &annotations))
}

/// Builds the full report. Exit 0 green, 1 amber, 2 red.
pub fn build_report(
    cfg: &RunConfig,
    case: &SafetyCase,
    mut findings: Vec<Finding>,
    hazard: Option<(HazardLog, RiskMatrix)>,
    events: Option<&Path>,
) -> Result<CaseReport> {
    let exec = Exec::default();
    findings.extend(structural_findings(cfg, case, hazard.as_ref()));

    let (store, telemetry) = load_telemetry(&cfg.telemetry)?;
    for d in &telemetry {
        findings.push(Finding::warning(
            "telemetry",
            rules::TELEMETRY_REJECTED,
            d.to_string(),
        ));
    }

    let spis: Vec<SpiDefinition> = case
        .spis
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if let Some(c) = cfg.confidence {
                s.confidence_target = c;
            }
            s
        })
        .collect();
    let mut evaluations = BTreeMap::new();
    for (id, result) in evaluate_all(&spis, &store, &BTreeMap::new(), exec) {
        let eval = match result {
            Ok(e) => e,
            Err(e) => {
                findings.push(Finding::error(&id, rules::SPI_UNIT_MISMATCH, e.to_string()));
                let spi = spis
                    .iter()
                    .find(|s| s.id == id)
                    .expect("evaluated SPI exists");
                evaluate_totals(spi, 0, 0.0, Window::all())
            }
        };
        match eval.status {
            SpiStatus::PassLowConfidence => findings.push(Finding::warning(
                &id,
                rules::SPI_LOW_CONFIDENCE,
                "below threshold, but the confidence bound does not yet clear it",
            )),
            SpiStatus::NoData => findings.push(Finding::warning(
                &id,
                rules::SPI_NO_DATA,
                "no exposure recorded",
            )),
            _ => {}
        }
        evaluations.insert(id, eval);
    }

    let registry = load_registry(cfg.evidence_journal.as_deref())?;
    let mut evidence = Vec::new();
    let mut evidence_state = EvidenceState::new();
    for link in &case.evidence {
        let reviewed_seq = cfg.reviewed.get(&link.id).copied().unwrap_or(0);
        let resolved_seq = match registry.resolve(link) {
            Ok(v) => Some(v.seq),
            Err(e) => {
                findings.push(Finding::warning(
                    &link.id,
                    rules::EVIDENCE_UNRESOLVED,
                    e.to_string(),
                ));
                None
            }
        };
        let freshness = registry.staleness(link, reviewed_seq);
        evidence_state.insert(link.id.clone(), freshness);
        evidence.push(EvidenceEntry {
            link: link.id.clone(),
            artifact: link.artifact.clone(),
            resolved_seq,
            reviewed_seq,
            freshness,
        });
    }

    let spi_state: SpiState = evaluations
        .iter()
        .map(|(k, v)| (k.clone(), v.status))
        .collect();
    let (statuses, directive) = match soundness_status(case, &spi_state, &evidence_state) {
        Ok(st) => {
            let d = detect_violations(case, &evaluations, &evidence_state, &cfg.policy)
                .map(|r| r.directive)
                .ok();
            (st, d)
        }
        Err(e) => {
            findings.push(Finding::error(
                &case.name,
                rules::STATUS_UNAVAILABLE,
                e.to_string(),
            ));
            (BTreeMap::new(), None)
        }
    };

    let eval_list: Vec<SpiEvaluation> = evaluations.values().cloned().collect();
    let mut fault_trees = Vec::new();
    for tree in &case.fault_trees {
        fault_trees.push(tree_entry(
            tree,
            &eval_list,
            cfg.alpha(),
            exec,
            &mut findings,
        ));
    }

    let impact = match events.or(cfg.events.as_deref()) {
        Some(p) => Some(ImpactSummary::of(&load_impact(
            case,
            p,
            cfg.annotations.as_deref(),
        )??)),
        None => None,
    };

    let findings = ValidationReport::new(findings).findings;
    let verdict = verdict(
        &statuses,
        impact.as_ref(),
        &findings,
        cfg.verdict.warnings_are_amber,
    );
    Ok(CaseReport {
        version: REPORT_VERSION,
        command: "evaluate",
        case: case.name.clone(),
        verdict,
        directive,
        statuses,
        spis: eval_list,
        evidence,
        fault_trees,
        impact,
        telemetry,
        findings,
    })
}

fn tree_entry(
    tree: &QuantitativeFaultTree,
    evals: &[SpiEvaluation],
    alpha: f64,
    exec: Exec,
    findings: &mut Vec<Finding>,
) -> TreeEntry {
    let at = |node: &str| format!("{}/{}", tree.id, node);
    let top_probability = match top_probability_with(tree, exec) {
        Ok(p) => Some(p),
        Err(FaultTreeError::PlaceholderRate { .. }) => None,
        Err(e) => {
            findings.push(Finding::error(
                &tree.id,
                rules::FT_NOT_QUANTIFIED,
                e.to_string(),
            ));
            None
        }
    };
    let (refined, deviations) = match refine_rates(tree, evals, alpha) {
        Ok((t, flags)) => (Some(t), flags),
        Err(e) => {
            findings.push(Finding::warning(
                &tree.id,
                rules::FT_DEVIATION,
                e.to_string(),
            ));
            (None, Vec::new())
        }
    };
    for d in &deviations {
        findings.push(Finding::warning(
            at(&d.event),
            rules::FT_DEVIATION,
            format!(
                "field rate of {} ({} events over {}) deviates from the modelled rate (p = {:.3e})",
                d.spi, d.field_events, d.exposure, d.p_value
            ),
        ));
    }
    let annotated = tree.basic_events().values().any(|b| b.spi_ref.is_some());
    let refined_top_probability = refined
        .as_ref()
        .filter(|_| annotated)
        .and_then(|t| top_probability_with(t, exec).ok());
    let checked = refined
        .as_ref()
        .filter(|t| t.is_quantified())
        .unwrap_or(tree);
    let budgets = check_budgets(checked).unwrap_or_default();
    for b in budgets.iter().filter(|b| b.exceeded) {
        findings.push(Finding::error(
            at(&b.node),
            rules::FT_BUDGET_EXCEEDED,
            format!(
                "probability {} exceeds budget {}",
                sig6(b.probability),
                sig6(b.budget)
            ),
        ));
    }
    TreeEntry {
        id: tree.id.clone(),
        hazard: tree.hazard_id.clone(),
        top_probability,
        refined_top_probability,
        budgets,
        deviations,
    }
}

fn evaluate(ctx: &Ctx, events: Option<&Path>) -> Result<Outcome> {
    let (case, warnings) = ctx.load_case()?;
    let hazard = ctx.hazard_inputs(&case)?;
    let report = build_report(&ctx.cfg, &case, warnings, hazard, events)?;
    let out = match ctx.format {
        Format::Structured => to_json(&report),
        Format::Text => report.to_text(&now()),
    };
    Ok(Outcome::new(report.verdict.exit_code(), out))
}

#[derive(Serialize)]
struct ImpactDoc<'a> {
    version: &'static str,
    command: &'static str,
    case: &'a str,
    impacted: BTreeMap<&'a str, ImpactState>,
    trace: &'a [livecase::impact::TraceStep],
}

/// Exit 0 when nothing is impacted, 1 otherwise, 3 on unknown targets.
fn impact(ctx: &Ctx, events: &Path, annotations: Option<&Path>) -> Result<Outcome> {
    let (case, _) = ctx.load_case()?;
    let annotations = annotations.or(ctx.cfg.annotations.as_deref());
    let report = match load_impact(&case, events, annotations)? {
        Ok(r) => r,
        Err(e) => return Ok(Outcome::fail(3, format!("error: {e}"))),
    };
    let impacted: BTreeMap<&str, ImpactState> = report
        .impacted()
        .into_iter()
        .map(|id| (id, report.state(id)))
        .collect();
    let out = match ctx.format {
        Format::Structured => to_json(&ImpactDoc {
            version: REPORT_VERSION,
            command: "impact",
            case: &case.name,
            impacted,
            trace: &report.trace,
        }),
        Format::Text => {
            let mut s = format!(
                "case {}: {} need review, {} invalidated\n",
                case.name,
                report.count(ImpactState::NeedsReview),
                report.count(ImpactState::Invalidated)
            );
            for (id, st) in &impacted {
                let _ = writeln!(s, "  {id:<16} {st}");
            }
            if !report.trace.is_empty() {
                s.push_str("trace:\n");
                for t in &report.trace {
                    let _ = writeln!(s, "  {} -> {} ({})", t.from, t.to, t.rule);
                }
            }
            s
        }
    };
    Ok(Outcome::new(i32::from(!report.all_unaffected()), out))
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} is not a file path", path.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.with_context(|| format!("cannot write {}", path.display()))
}

/// Exit 1 if the target exists and `force` is not set.
fn init(ctx: &Ctx, system: &str, odd: &str, output: &Path, force: bool) -> Result<Outcome> {
    if output.exists() && !force {
        return Ok(Outcome::fail(
            1,
            format!(
                "error: {} already exists; pass --force to overwrite",
                output.display()
            ),
        ));
    }
    let case = instantiate_oascf_template(&TemplateParams::new(system, odd))?;
    write_atomic(output, scdl::print(&case).as_bytes())?;
    let out = match ctx.format {
        Format::Structured => to_json(&serde_json::json!({
            "version": REPORT_VERSION,
            "command": "init",
            "case": case.name,
            "path": output.display().to_string(),
            "elements": case.elements.len(),
        })),
        Format::Text => format!(
            "wrote {} ({} elements)\n",
            output.display(),
            case.elements.len()
        ),
    };
    Ok(Outcome::new(0, out))
}

#[derive(Serialize)]
struct FtaDoc<'a> {
    version: &'static str,
    command: &'static str,
    tree: &'a str,
    hazard: &'a str,
    cut_sets: &'a [Vec<String>],
    top_probability: Option<f64>,
    budgets: &'a [livecase::fault_tree::BudgetCheck],
    placeholders: &'a [String],
}

/// Exit 0 when quantified and within budget, 1 on placeholder rates or an
/// exceeded budget, 3 if the tree is unknown or too large.
fn fta(ctx: &Ctx, tree_id: &str) -> Result<Outcome> {
    let (case, _) = ctx.load_case()?;
    let tree = case
        .fault_tree(tree_id)
        .ok_or_else(|| anyhow!("no fault tree `{tree_id}` in case {}", case.name))?;
    let exec = Exec::default();
    let cut_sets = minimal_cut_sets_with(tree, exec)?;
    let placeholders: Vec<String> = tree
        .basic_events()
        .values()
        .filter(|b| b.rate.value().is_none())
        .map(|b| b.id.clone())
        .collect();
    let (top, budgets) = if placeholders.is_empty() {
        (
            Some(top_probability_with(tree, exec)?),
            check_budgets(tree)?,
        )
    } else {
        (None, Vec::new())
    };
    let exceeded = budgets.iter().any(|b| b.exceeded);
    let out = match ctx.format {
        Format::Structured => to_json(&FtaDoc {
            version: REPORT_VERSION,
            command: "fta",
            tree: &tree.id,
            hazard: &tree.hazard_id,
            cut_sets: &cut_sets,
            top_probability: top,
            budgets: &budgets,
            placeholders: &placeholders,
        }),
        Format::Text => {
            let mut s = format!("fault tree {} (hazard {})\n", tree.id, tree.hazard_id);
            let _ = writeln!(s, "minimal cut sets ({}):", cut_sets.len());
            for c in &cut_sets {
                let _ = writeln!(s, "  {{{}}}", c.join(", "));
            }
            match top {
                Some(p) => {
                    let _ = writeln!(s, "top probability: {}", sig6(p));
                }
                None => s.push_str("top probability: not quantified\n"),
            }
            if !budgets.is_empty() {
                s.push_str("budgets:\n");
                for b in &budgets {
                    let mark = if b.exceeded { "FAIL" } else { "pass" };
                    let _ = writeln!(
                        s,
                        "  {:<16} {} <= {} {mark}",
                        b.node,
                        sig6(b.probability),
                        sig6(b.budget)
                    );
                }
            }
            s
        }
    };
    let mut outcome = Outcome::new(i32::from(exceeded || !placeholders.is_empty()), out);
    if !placeholders.is_empty() {
        outcome.stderr = format!(
            "rates are still placeholders for: {}\nreplace `rate tbd` with a probability in [0, 1] (or attach an SPI and run evaluate) before quantifying\n",
            placeholders.join(", ")
        );
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct IngestDoc<'a> {
    version: &'static str,
    command: &'static str,
    accepted: usize,
    rejected: &'a [TelemetryDiagnostic],
}

/// Exit 0 if every line is accepted, 1 otherwise.
fn ingest_telemetry(ctx: &Ctx, files: &[PathBuf]) -> Result<Outcome> {
    let (store, rejected) = load_telemetry(files)?;
    let accepted = store.records().len();
    let out = match ctx.format {
        Format::Structured => to_json(&IngestDoc {
            version: REPORT_VERSION,
            command: "ingest telemetry",
            accepted,
            rejected: &rejected,
        }),
        Format::Text => {
            let mut s = format!(
                "{accepted} record(s) accepted, {} rejected\n",
                rejected.len()
            );
            for d in &rejected {
                let _ = writeln!(s, "  {d}");
            }
            s
        }
    };
    Ok(Outcome::new(i32::from(!rejected.is_empty()), out))
}

fn ingest_evidence(
    ctx: &Ctx,
    artifact: &str,
    file: &Path,
    journal: Option<&Path>,
) -> Result<Outcome> {
    let journal_path = journal
        .map(Path::to_path_buf)
        .or_else(|| ctx.cfg.evidence_journal.clone())
        .ok_or_else(|| {
            anyhow!("no evidence journal given; use --journal or evidence_journal in the config")
        })?;
    let content = fs::read(file).with_context(|| format!("cannot read {}", file.display()))?;
    let mut journal = Journal::open(&journal_path)
        .with_context(|| format!("cannot open journal {}", journal_path.display()))?;
    let v = journal.register(artifact, &content)?;
    let out = match ctx.format {
        Format::Structured => to_json(&serde_json::json!({
            "version": REPORT_VERSION,
            "command": "ingest evidence",
            "artifact": artifact,
            "seq": v.seq,
            "content_digest": v.content_digest,
        })),
        Format::Text => format!(
            "{artifact}: version {} sha256:{} at {}\n",
            v.seq,
            v.content_digest,
            v.recorded_at.to_rfc3339_opts(SecondsFormat::Secs, true)
        ),
    };
    Ok(Outcome::new(0, out))
}
