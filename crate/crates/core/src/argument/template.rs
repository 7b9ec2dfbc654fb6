use thiserror::Error;

use super::SafetyCase;
use crate::scdl::{self, Diagnostic};

/// Default template text; `{{system_name}}` and `{{odd_name}}` are
/// substituted inside string literals.
pub const DEFAULT_TEMPLATE: &str = include_str!("../../templates/oascf.scdl");

pub const TOP_CLAIM: &str =
    "The autonomous driver is safe enough to operate in the considered operational design domain";
pub const LIVE_PILLAR_STATEMENT: &str = "Live It Right";
pub const ENGINEER_PILLAR_STATEMENT: &str = "Engineer It Right";
pub const OPERATE_PILLAR_STATEMENT: &str = "Operate It Right";
pub const MIL_STD_GOAL_ID: &str = "G5.2.8";
pub const MIL_STD_GOAL_STATEMENT: &str =
    "Our Safety Verification activities conform with MIL-STD-882E";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateParams {
    pub system_name: String,
    pub odd_name: String,
}

impl TemplateParams {
    pub fn new(system_name: impl Into<String>, odd_name: impl Into<String>) -> Self {
        Self {
            system_name: system_name.into(),
            odd_name: odd_name.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("template parameter `{0}` must not be empty")]
    EmptyParameter(&'static str),
    #[error("template does not parse: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Parse(Vec<Diagnostic>),
}

pub fn instantiate_oascf_template(params: &TemplateParams) -> Result<SafetyCase, TemplateError> {
    instantiate_template(DEFAULT_TEMPLATE, params)
}

/// Substitutes the parameters into an SCDL template and parses it.
pub fn instantiate_template(
    template: &str,
    params: &TemplateParams,
) -> Result<SafetyCase, TemplateError> {
    if params.system_name.trim().is_empty() {
        return Err(TemplateError::EmptyParameter("system_name"));
    }
    if params.odd_name.trim().is_empty() {
        return Err(TemplateError::EmptyParameter("odd_name"));
    }
    let text = template
        .replace(
            "{{system_name}}",
            &scdl::escape_string_body(&params.system_name),
        )
        .replace("{{odd_name}}", &scdl::escape_string_body(&params.odd_name));
    let parsed = scdl::parse(&text);
    match parsed.case {
        Some(case) if !parsed.has_errors() => Ok(case),
        _ => Err(TemplateError::Parse(parsed.diagnostics)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argument::{validate_wellformed, ElementKind};

    #[test]
    fn root_carries_the_top_claim() {
        let case = instantiate_oascf_template(&TemplateParams::new("AV-1", "urban-ODD")).unwrap();
        let root = case.element(case.root.as_deref().unwrap()).unwrap();
        assert!(root.statement.contains("safe enough to operate"));
        assert!(root.statement.contains("AV-1") && root.statement.contains("urban-ODD"));
    }

    #[test]
    fn exactly_three_pillars_under_the_root_strategy() {
        let case = instantiate_oascf_template(&TemplateParams::new("AV-1", "urban-ODD")).unwrap();
        let root = case.root.clone().unwrap();
        let strategies: Vec<_> = case.supported_children(&root).collect();
        assert_eq!(strategies.len(), 1);
        assert_eq!(
            case.element(strategies[0]).unwrap().kind,
            ElementKind::Strategy
        );
        let pillars: Vec<_> = case.supported_children(strategies[0]).collect();
        assert_eq!(pillars.len(), 3);
        for (pillar, name) in pillars.iter().zip([
            LIVE_PILLAR_STATEMENT,
            ENGINEER_PILLAR_STATEMENT,
            OPERATE_PILLAR_STATEMENT,
        ]) {
            let e = case.element(pillar).unwrap();
            assert_eq!(e.kind, ElementKind::Goal);
            assert!(e.statement.contains(name));
            assert!(
                !case.attached_spis(pillar).is_empty(),
                "{pillar} has no SPI slot"
            );
        }
    }

    #[test]
    fn mil_std_goal_sits_under_engineer_pillar() {
        let case = instantiate_oascf_template(&TemplateParams::new("AV-1", "urban-ODD")).unwrap();
        let goal = case.element(MIL_STD_GOAL_ID).unwrap();
        assert_eq!(goal.statement, MIL_STD_GOAL_STATEMENT);
        let ancestors = case.index().ancestors(MIL_STD_GOAL_ID);
        let engineer = ancestors.iter().find(|id| {
            case.element(id)
                .unwrap()
                .statement
                .contains(ENGINEER_PILLAR_STATEMENT)
        });
        assert!(engineer.is_some());
    }

    #[test]
    fn template_is_well_formed() {
        let case =
            instantiate_oascf_template(&TemplateParams::new("Shuttle \"X\"", "campus\\loop"))
                .unwrap();
        assert_eq!(validate_wellformed(&case).error_count(), 0);
        assert!(case
            .element("C1")
            .unwrap()
            .statement
            .contains("campus\\loop"));
    }

    #[test]
    fn empty_parameters_are_rejected() {
        assert!(matches!(
            instantiate_oascf_template(&TemplateParams::new("", "odd")),
            Err(TemplateError::EmptyParameter("system_name"))
        ));
        assert!(matches!(
            instantiate_oascf_template(&TemplateParams::new("av", " ")),
            Err(TemplateError::EmptyParameter("odd_name"))
        ));
    }
}
