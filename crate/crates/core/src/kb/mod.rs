//! Knowledge-base domain types: relations, triples, conceptualizations and
//! abstract triples, plus keyword extraction and constraint sets.

mod constraint;
mod keywords;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use constraint::{build_constraint, disjoint, ConstraintSet};
pub use keywords::{extract_keywords, normalize_text, KeywordExtractor, StopwordList};

#[derive(Debug, Error)]
pub enum KbError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("{0} is empty")]
    EmptyField(&'static str),
    #[error("instance span [{start}, {end}) is out of bounds for a head of {len} characters")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("plausibility {0} is outside [0, 1]")]
    PlausibilityOutOfRange(f64),
    #[error("concept entry references head `{found}` but triple head is `{expected}`")]
    HeadMismatch { expected: String, found: String },
    #[error("reconstructed head `{computed}` does not match `{given}`")]
    ReconstructionMismatch { computed: String, given: String },
    #[error("instance text `{given}` does not match head characters `{actual}`")]
    InstanceMismatch { given: String, actual: String },
    #[error("failed to read stopword list {path}: {source}")]
    StopwordIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The nine ATOMIC inferential relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    XEffect,
    OEffect,
    XWant,
    OWant,
    XReact,
    OReact,
    XNeed,
    XAttr,
    XIntent,
}

impl Relation {
    pub const ALL: [Relation; 9] = [
        Relation::XEffect,
        Relation::OEffect,
        Relation::XWant,
        Relation::OWant,
        Relation::XReact,
        Relation::OReact,
        Relation::XNeed,
        Relation::XAttr,
        Relation::XIntent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::XEffect => "xEffect",
            Relation::OEffect => "oEffect",
            Relation::XWant => "xWant",
            Relation::OWant => "oWant",
            Relation::XReact => "xReact",
            Relation::OReact => "oReact",
            Relation::XNeed => "xNeed",
            Relation::XAttr => "xAttr",
            Relation::XIntent => "xIntent",
        }
    }

    /// Dense position in [`Relation::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = KbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| KbError::UnknownRelation(s.to_string()))
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Identifier of an original triple, assigned in file order at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TripleId(pub u64);

impl fmt::Display for TripleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Identifier of an abstract (conceptualized) triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbstractId(pub u64);

impl fmt::Display for AbstractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Provenance of a plausibility judgement: human annotation or a
/// discriminator's pseudo-label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Annotated,
    #[default]
    Pseudo,
}

/// A probability-like score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Plausibility(f64);

impl Plausibility {
    pub fn new(value: f64) -> Result<Self, KbError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Plausibility(value))
        } else {
            Err(KbError::PlausibilityOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One CSKB assertion `(head, relation, tail)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub id: TripleId,
    pub head: String,
    pub relation: Relation,
    pub tail: String,
}

impl Triple {
    pub fn new(
        id: TripleId,
        head: impl Into<String>,
        relation: Relation,
        tail: impl Into<String>,
    ) -> Result<Self, KbError> {
        let head = head.into();
        let tail = tail.into();
        if head.trim().is_empty() {
            return Err(KbError::EmptyField("head"));
        }
        if tail.trim().is_empty() {
            return Err(KbError::EmptyField("tail"));
        }
        Ok(Triple { id, head, relation, tail })
    }
}

/// Half-open character range `[start, end)` inside a head event.
///
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceSpan {
    pub start: usize,
    pub end: usize,
}

impl InstanceSpan {
    pub fn new(start: usize, end: usize) -> Self {
        InstanceSpan { start, end }
    }

    /// Byte offsets of this span inside `text`, if it fits.
    fn byte_range(self, text: &str) -> Result<(usize, usize), KbError> {
        let len = text.chars().count();
        if self.start >= self.end || self.end > len {
            return Err(KbError::SpanOutOfBounds { start: self.start, end: self.end, len });
        }
        let mut offsets = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
        let start = offsets.nth(self.start).expect("start < len");
        let end = offsets.nth(self.end - self.start - 1).expect("end <= len");
        Ok((start, end))
    }

    pub fn slice(self, text: &str) -> Result<&str, KbError> {
        let (s, e) = self.byte_range(text)?;
        Ok(&text[s..e])
    }
}

/// Replace the characters of `span` in `head` with `concept`.
pub fn substitute(head: &str, span: InstanceSpan, concept: &str) -> Result<String, KbError> {
    let (s, e) = span.byte_range(head)?;
    let mut out = String::with_capacity(head.len() - (e - s) + concept.len());
    out.push_str(&head[..s]);
    out.push_str(concept);
    out.push_str(&head[e..]);
    Ok(out)
}

/// A plausible conceptualization of one instance inside a head event.
///
/// The head is referenced by its exact text: ATOMIC heads are shared by
/// every triple with that event, so the concept belongs to the event.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptEntry {
    pub head: String,
    pub span: InstanceSpan,
    pub instance_text: String,
    pub concept: String,
    pub plausibility: Plausibility,
    pub label: Label,
}

impl ConceptEntry {
    pub fn new(
        head: impl Into<String>,
        span: InstanceSpan,
        concept: impl Into<String>,
        plausibility: f64,
    ) -> Result<Self, KbError> {
        let head = head.into();
        let concept = concept.into();
        if concept.trim().is_empty() {
            return Err(KbError::EmptyField("concept"));
        }
        let instance_text = span.slice(&head)?.to_string();
        Ok(ConceptEntry {
            head,
            span,
            instance_text,
            concept,
            plausibility: Plausibility::new(plausibility)?,
            label: Label::default(),
        })
    }

    pub fn labeled(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    /// Like [`ConceptEntry::new`], but also checks a claimed instance text.
    pub fn with_instance(
        head: impl Into<String>,
        span: InstanceSpan,
        instance_text: &str,
        concept: impl Into<String>,
        plausibility: f64,
    ) -> Result<Self, KbError> {
        let entry = ConceptEntry::new(head, span, concept, plausibility)?;
        if entry.instance_text != instance_text {
            return Err(KbError::InstanceMismatch {
                given: instance_text.to_string(),
                actual: entry.instance_text,
            });
        }
        Ok(entry)
    }
}

/// A triple whose head had exactly one instance replaced by a concept.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractTriple {
    pub id: AbstractId,
    pub source_triple_id: TripleId,
    pub concept_entry: ConceptEntry,
    pub head_c: String,
    pub relation: Relation,
    pub tail: String,
    pub plausibility: Plausibility,
    pub label: Label,
}

impl AbstractTriple {
    /// Conceptualize `source` with `entry`. Relation and tail are copied
    /// from the source unchanged.
    pub fn derive(
        id: AbstractId,
        source: &Triple,
        entry: ConceptEntry,
        plausibility: f64,
    ) -> Result<Self, KbError> {
        if entry.head != source.head {
            return Err(KbError::HeadMismatch {
                expected: source.head.clone(),
                found: entry.head,
            });
        }
        let head_c = substitute(&source.head, entry.span, &entry.concept)?;
        Ok(AbstractTriple {
            id,
            source_triple_id: source.id,
            concept_entry: entry,
            head_c,
            relation: source.relation,
            tail: source.tail.clone(),
            plausibility: Plausibility::new(plausibility)?,
            label: Label::default(),
        })
    }

    pub fn labeled(mut self, label: Label) -> Self {
        self.label = label;
        self
    }

    /// Check that this abstraction is exactly `source` with one substitution.
    pub fn verify_against(&self, source: &Triple) -> Result<(), KbError> {
        if self.relation != source.relation || self.tail != source.tail {
            return Err(KbError::ReconstructionMismatch {
                computed: format!("{} / {}", source.relation, source.tail),
                given: format!("{} / {}", self.relation, self.tail),
            });
        }
        let computed = substitute(&source.head, self.concept_entry.span, &self.concept_entry.concept)?;
        if computed != self.head_c {
            return Err(KbError::ReconstructionMismatch { computed, given: self.head_c.clone() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_parsing_accepts_exactly_nine() {
        for r in Relation::ALL {
            assert_eq!(r.as_str().parse::<Relation>().unwrap(), r);
        }
        assert!(matches!(
            "xFoo".parse::<Relation>(),
            Err(KbError::UnknownRelation(s)) if s == "xFoo"
        ));
        assert!("xwant".parse::<Relation>().is_err());
        let distinct: std::collections::HashSet<_> = Relation::ALL.iter().collect();
        assert_eq!(distinct.len(), 9);
    }

    #[test]
    fn triple_rejects_blank_fields() {
        assert!(matches!(
            Triple::new(TripleId(0), "  ", Relation::XWant, "x"),
            Err(KbError::EmptyField("head"))
        ));
        assert!(matches!(
            Triple::new(TripleId(0), "PersonX runs", Relation::XWant, "\t"),
            Err(KbError::EmptyField("tail"))
        ));
    }

    #[test]
    fn span_slicing_counts_characters() {
        let head = "PersonX eats crème brûlée";
        let span = InstanceSpan::new(13, 25);
        assert_eq!(span.slice(head).unwrap(), "crème brûlée");
        assert_eq!(substitute(head, span, "dessert").unwrap(), "PersonX eats dessert");
        assert!(InstanceSpan::new(20, 26).slice(head).is_err());
        assert!(InstanceSpan::new(3, 3).slice(head).is_err());
    }

    #[test]
    fn concept_entry_validates_plausibility_and_span() {
        let head = "PersonX arrives at the bar";
        let e = ConceptEntry::new(head, InstanceSpan::new(23, 26), "entertainment place", 0.95).unwrap();
        assert_eq!(e.instance_text, "bar");
        assert!(matches!(
            ConceptEntry::new(head, InstanceSpan::new(23, 26), "place", 1.5),
            Err(KbError::PlausibilityOutOfRange(_))
        ));
        assert!(matches!(
            ConceptEntry::new(head, InstanceSpan::new(23, 40), "place", 0.5),
            Err(KbError::SpanOutOfBounds { .. })
        ));
        assert!(matches!(
            ConceptEntry::with_instance(head, InstanceSpan::new(23, 26), "pub", "place", 0.5),
            Err(KbError::InstanceMismatch { .. })
        ));
    }

    #[test]
    fn abstract_triple_reconstructs_head() {
        let src = Triple::new(TripleId(3), "PersonX plays a football game", Relation::XWant, "take a rest").unwrap();
        let entry = ConceptEntry::new(&src.head, InstanceSpan::new(8, 29), "do sport", 1.0).unwrap();
        assert_eq!(entry.instance_text, "plays a football game");
        let a = AbstractTriple::derive(AbstractId(0), &src, entry, 1.0).unwrap();
        assert_eq!(a.head_c, "PersonX do sport");
        assert_eq!(a.relation, src.relation);
        assert_eq!(a.tail, src.tail);
        a.verify_against(&src).unwrap();

        let mut broken = a.clone();
        broken.head_c.push('!');
        assert!(broken.verify_against(&src).is_err());
    }

    #[test]
    fn abstract_triple_requires_matching_head() {
        let src = Triple::new(TripleId(0), "PersonX is at the casino", Relation::XWant, "have a drink").unwrap();
        let entry = ConceptEntry::new("PersonX arrives at the bar", InstanceSpan::new(23, 26), "place", 1.0).unwrap();
        assert!(matches!(
            AbstractTriple::derive(AbstractId(0), &src, entry, 1.0),
            Err(KbError::HeadMismatch { .. })
        ));
    }

    #[test]
    fn ids_display_with_prefix() {
        assert_eq!(TripleId(12).to_string(), "t12");
        assert_eq!(AbstractId(4).to_string(), "a4");
    }
}
