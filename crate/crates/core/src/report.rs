//! Findings shared by every structural check in the crate.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// One rule outcome attached to an element (or other named object).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub element: String,
    pub severity: Severity,
    pub rule: String,
    pub message: String,
}

impl Finding {
    pub fn error(element: impl Into<String>, rule: &str, message: impl Into<String>) -> Self {
        Self {
            element: element.into(),
            severity: Severity::Error,
            rule: rule.to_string(),
            message: message.into(),
        }
    }

    pub fn warning(element: impl Into<String>, rule: &str, message: impl Into<String>) -> Self {
        Self {
            element: element.into(),
            severity: Severity::Warning,
            rule: rule.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: {}",
            self.severity, self.rule, self.element, self.message
        )
    }
}

/// An ordered list of findings. Ordering is always by `(element, rule)`,
/// with the message as a final tie-break so output is reproducible.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn new(mut findings: Vec<Finding>) -> Self {
        sort_findings(&mut findings);
        Self { findings }
    }

    pub fn push(&mut self, finding: Finding) {
        self.findings.push(finding);
        sort_findings(&mut self.findings);
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.findings.extend(other.findings);
        sort_findings(&mut self.findings);
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn warning_count(&self) -> usize {
        self.warnings().count()
    }

    pub fn has_errors(&self) -> bool {
        self.error_count() > 0
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn with_rule<'a>(&'a self, rule: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.rule == rule)
    }
}

fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        (&a.element, &a.rule, &a.message, a.severity)
            .cmp(&(&b.element, &b.rule, &b.message, b.severity))
    });
}
