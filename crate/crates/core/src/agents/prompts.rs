//! Prompt templates, shipped in two styles and compiled in.
//!
//! A template file has a `### SYSTEM` section and a `### USER` section.
//! Placeholders are `{name}`; rendering fails if one is left unfilled.
//! Routing headers such as `[task=QS]...` are prepended by the agents, not
//! stored in the templates, so both styles route identically.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum PromptStyle {
    #[default]
    #[serde(rename = "CRISPE", alias = "crispe")]
    Crispe,
    #[serde(rename = "LangGPT", alias = "langgpt")]
    LangGpt,
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptStyle::Crispe => "CRISPE",
            PromptStyle::LangGpt => "LangGPT",
        })
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "crispe" => Ok(Self::Crispe),
            "langgpt" => Ok(Self::LangGpt),
            other => Err(format!("unknown prompt style {other:?} (expected CRISPE or LangGPT)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PromptKind {
    MpPlan,
    DeQuestions,
    DeAnswers,
    QsSolve,
    QsDirect,
    DeReport,
    CeEvaluate,
}

impl PromptKind {
    pub const ALL: [PromptKind; 7] = [
        Self::MpPlan,
        Self::DeQuestions,
        Self::DeAnswers,
        Self::QsSolve,
        Self::QsDirect,
        Self::DeReport,
        Self::CeEvaluate,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Self::MpPlan => "mp_plan",
            Self::DeQuestions => "de_generate_questions",
            Self::DeAnswers => "de_answer_directly",
            Self::QsSolve => "qs_solve",
            Self::QsDirect => "qs_direct",
            Self::DeReport => "de_compose_report",
            Self::CeEvaluate => "ce_evaluate",
        }
    }
}

macro_rules! assets {
    ($style:literal) => {
        [
            include_str!(concat!("../../assets/prompts/", $style, "/mp_plan.txt")),
            include_str!(concat!("../../assets/prompts/", $style, "/de_generate_questions.txt")),
            include_str!(concat!("../../assets/prompts/", $style, "/de_answer_directly.txt")),
            include_str!(concat!("../../assets/prompts/", $style, "/qs_solve.txt")),
            include_str!(concat!("../../assets/prompts/", $style, "/qs_direct.txt")),
            include_str!(concat!("../../assets/prompts/", $style, "/de_compose_report.txt")),
            include_str!(concat!("../../assets/prompts/", $style, "/ce_evaluate.txt")),
        ]
    };
}

const CRISPE: [&str; 7] = assets!("crispe");
const LANGGPT: [&str; 7] = assets!("langgpt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub system: String,
    pub user: String,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self, String> {
        let rest = text
            .split_once("### SYSTEM\n")
            .ok_or("template lacks a ### SYSTEM section")?
            .1;
        let (system, user) = rest.split_once("### USER\n").ok_or("template lacks a ### USER section")?;
        Ok(Self {
            system: system.trim().to_string(),
            user: user.trim().to_string(),
        })
    }

    /// (system, user) with every placeholder filled.
    pub fn render(&self, vars: &HashMap<&str, String>) -> Result<(String, String), String> {
        Ok((fill(&self.system, vars)?, fill(&self.user, vars)?))
    }

    pub fn placeholders(&self) -> Vec<String> {
        let mut out = placeholders(&self.system);
        out.extend(placeholders(&self.user));
        out.sort();
        out.dedup();
        out
    }
}

fn placeholders(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let name_len = after.find(|c: char| !(c.is_ascii_lowercase() || c == '_')).unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            out.push(after[..name_len].to_string());
        }
        rest = after;
    }
    out
}

fn fill(text: &str, vars: &HashMap<&str, String>) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after.find(|c: char| !(c.is_ascii_lowercase() || c == '_')).unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            let value = vars.get(name).ok_or_else(|| format!("placeholder {{{name}}} has no value"))?;
            out.push_str(value);
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PromptSet {
    style: PromptStyle,
    templates: HashMap<PromptKind, Template>,
}

impl PromptSet {
    pub fn builtin(style: PromptStyle) -> Self {
        let sources = match style {
            PromptStyle::Crispe => CRISPE,
            PromptStyle::LangGpt => LANGGPT,
        };
        let templates = PromptKind::ALL
            .iter()
            .zip(sources)
            .map(|(kind, text)| {
                let t = Template::parse(text)
                    .unwrap_or_else(|e| panic!("embedded {style} template {}: {e}", kind.file_stem()));
                (*kind, t)
            })
            .collect();
        Self { style, templates }
    }

    pub fn style(&self) -> PromptStyle {
        self.style
    }

    pub fn get(&self, kind: PromptKind) -> &Template {
        &self.templates[&kind]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_leaves_json_braces_alone() {
        let vars = HashMap::from([("name", "x".to_string())]);
        assert_eq!(fill(r#"{"a": {name}} {}"#, &vars).unwrap(), r#"{"a": x} {}"#);
        assert!(fill("{missing}", &vars).is_err());
    }

    #[test]
    fn both_styles_parse() {
        for style in [PromptStyle::Crispe, PromptStyle::LangGpt] {
            let set = PromptSet::builtin(style);
            for kind in PromptKind::ALL {
                let t = set.get(kind);
                assert!(!t.system.is_empty() && !t.user.is_empty(), "{style} {kind:?}");
            }
        }
    }

    #[test]
    fn styles_use_the_same_placeholders() {
        let a = PromptSet::builtin(PromptStyle::Crispe);
        let b = PromptSet::builtin(PromptStyle::LangGpt);
        for kind in PromptKind::ALL {
            assert_eq!(a.get(kind).placeholders(), b.get(kind).placeholders(), "{kind:?}");
        }
    }

    #[test]
    fn style_names() {
        assert_eq!("langgpt".parse::<PromptStyle>().unwrap(), PromptStyle::LangGpt);
        assert_eq!(serde_json::to_string(&PromptStyle::Crispe).unwrap(), "\"CRISPE\"");
        assert!("json".parse::<PromptStyle>().is_err());
    }
}
