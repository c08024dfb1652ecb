use std::collections::BTreeSet;

use super::{ConceptEntry, KbError, KeywordExtractor, Triple};

/// The sampling constraint of a head event: its keywords together with
/// every plausible concept of every instance in it.
///
/// Keywords and concepts share one namespace when testing overlap, so a
/// keyword of one head collides with an identical concept of another.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub keywords: BTreeSet<String>,
    pub concepts: BTreeSet<String>,
}

impl ConstraintSet {
    pub fn new(keywords: BTreeSet<String>, concepts: BTreeSet<String>) -> Self {
        ConstraintSet { keywords, concepts }
    }

    /// All members, keywords first. A token present in both halves is
    /// yielded twice.
    pub fn members(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().chain(self.concepts.iter()).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.keywords.contains(token) || self.concepts.contains(token)
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty() && self.concepts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.keywords.len() + self.concepts.len()
    }

    /// Same keywords, no concepts.
    pub fn keywords_only(&self) -> ConstraintSet {
        ConstraintSet { keywords: self.keywords.clone(), concepts: BTreeSet::new() }
    }

    /// This set plus one more (already normalized) concept.
    pub fn with_concept(&self, concept: String) -> ConstraintSet {
        let mut out = self.clone();
        out.concepts.insert(concept);
        out
    }
}

/// True iff the two constraint sets share no member.
pub fn disjoint(a: &ConstraintSet, b: &ConstraintSet) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    !small.members().any(|t| large.contains(t))
}

/// Build the constraint of `triple` from its head keywords and the given
/// concept entries, all of which must reference the triple's head.
pub fn build_constraint<'a>(
    extractor: &KeywordExtractor,
    triple: &Triple,
    concepts: impl IntoIterator<Item = &'a ConceptEntry>,
) -> Result<ConstraintSet, KbError> {
    let keywords = extractor.extract(&triple.head);
    let mut normalized = BTreeSet::new();
    for entry in concepts {
        if entry.head != triple.head {
            return Err(KbError::HeadMismatch {
                expected: triple.head.clone(),
                found: entry.head.clone(),
            });
        }
        if let Some(c) = extractor.normalize_concept(&entry.concept) {
            normalized.insert(c);
        }
    }
    Ok(ConstraintSet::new(keywords, normalized))
}
