//! Natural-language templates for questions, scoring statements and
//! benchmark prompts.
//!
//! Templates are TOML (see `data/templates.toml` for the shipped set).
//! Placeholders are `{name}` and are substituted in a single pass, so text
//! inserted for one placeholder is never re-expanded.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::kb::{KbError, Relation};

const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.toml");

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("invalid template file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid template file: {0}")]
    Relation(#[from] KbError),
    #[error("cannot read template file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no template for relation {0}")]
    MissingRelation(Relation),
    #[error("no template for benchmark `{0}` and no `default` template")]
    MissingBenchmark(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RelationTemplates {
    pub question: String,
    pub statement: String,
}

#[derive(Debug, Deserialize)]
struct RawTemplates {
    #[serde(default)]
    version: u32,
    #[serde(default)]
    relations: BTreeMap<String, RelationTemplates>,
    #[serde(default)]
    benchmarks: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    version: u32,
    relations: BTreeMap<Relation, RelationTemplates>,
    benchmarks: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::parse(DEFAULT_TEMPLATES).expect("shipped templates are valid")
    }
}

/// Substitute `{key}` placeholders in one left-to-right pass. Unknown
/// placeholders are left as-is.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let key = &after[..close];
                match vars.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(key);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// The grammatical subject used by relation templates: the first word of
/// the head event ("PersonX", or a substituted name).
pub fn subject_of(head: &str) -> &str {
    head.split_whitespace().next().unwrap_or("")
}

fn squeeze(text: String) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl TemplateSet {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let raw: RawTemplates = toml::from_str(text)?;
        let relations = raw
            .relations
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<Relation>()?, v)))
            .collect::<Result<_, KbError>>()?;
        Ok(TemplateSet { version: raw.version, relations, benchmarks: raw.benchmarks })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| TemplateError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    fn relation(&self, relation: Relation) -> Result<&RelationTemplates, TemplateError> {
        self.relations.get(&relation).ok_or(TemplateError::MissingRelation(relation))
    }

    /// Question text for `head` under `relation`, with an explicit subject.
    pub fn question(&self, head: &str, subject: &str, relation: Relation) -> Result<String, TemplateError> {
        let t = self.relation(relation)?;
        Ok(render(&t.question, &[("head", head), ("subject", subject)]))
    }

    /// Declarative statement joining `head` and an answer `tail`.
    pub fn statement(
        &self,
        head: &str,
        subject: &str,
        relation: Relation,
        tail: &str,
    ) -> Result<String, TemplateError> {
        let t = self.relation(relation)?;
        Ok(render(&t.statement, &[("head", head), ("subject", subject), ("tail", tail)]))
    }

    /// Prompt for a benchmark item; falls back to the `default` entry.
    pub fn benchmark(
        &self,
        benchmark: &str,
        context: Option<&str>,
        question: &str,
        option: &str,
    ) -> Result<String, TemplateError> {
        let t = self
            .benchmarks
            .get(benchmark)
            .or_else(|| self.benchmarks.get("default"))
            .ok_or_else(|| TemplateError::MissingBenchmark(benchmark.to_string()))?;
        let fill = question.replacen('_', option, 1);
        let text = render(
            t,
            &[("context", context.unwrap_or("")), ("question", question), ("option", option), ("fill", &fill)],
        );
        Ok(squeeze(text))
    }
}

/// Question text for a triple head under `relation`; the subject is taken
/// from the head itself.
pub fn verbalize(templates: &TemplateSet, head: &str, relation: Relation) -> Result<String, TemplateError> {
    templates.question(head, subject_of(head), relation)
}
