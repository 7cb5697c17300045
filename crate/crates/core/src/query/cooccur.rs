//! Co-occurrence of annotated entities with positional confidence.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::group::SemanticGroup;
use crate::iexml::Span;
use crate::rdfizer::vocab::calbc;
use crate::rdfizer::{group_iri, AnnotationKey, SentenceKey};
use crate::store::{Store, Term, TermId};

use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    Sentence,
    Document,
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sentence" => Ok(Scope::Sentence),
            "document" => Ok(Scope::Document),
            other => Err(format!("unknown scope {other:?}, expected sentence or document")),
        }
    }
}

/// `1 - gap/length` kept as the exact fraction `(length - gap) / length`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Confidence {
    pub gap: u64,
    pub length: u64,
}

impl Confidence {
    pub const ONE: Confidence = Confidence { gap: 0, length: 1 };

    pub fn new(gap: u64, length: u64) -> Self {
        let length = length.max(1);
        Confidence { gap: gap.min(length), length }
    }

    pub fn value(&self) -> f64 {
        1.0 - self.gap as f64 / self.length as f64
    }
}

impl Ord for Confidence {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = u128::from(self.length - self.gap) * u128::from(other.length);
        let b = u128::from(other.length - other.gap) * u128::from(self.length);
        a.cmp(&b)
            .then(self.length.cmp(&other.length))
            .then(self.gap.cmp(&other.gap))
    }
}

impl PartialOrd for Confidence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.value())
    }
}

/// One side of a co-occurrence pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HitEntity {
    pub label: String,
    pub group: SemanticGroup,
    pub sentence_index: usize,
    /// Plain-text offsets within the sentence.
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CooccurrenceHit {
    pub doc_id: String,
    /// `None` for document scope.
    pub sentence_index: Option<usize>,
    pub a: HitEntity,
    pub b: HitEntity,
    pub confidence: Confidence,
}

type SortKey<'a> = (std::cmp::Reverse<Confidence>, &'a str, Option<usize>, usize, usize, usize, usize, usize, usize);

impl CooccurrenceHit {
    fn sort_key(&self) -> SortKey<'_> {
        (
            std::cmp::Reverse(self.confidence),
            &self.doc_id,
            self.sentence_index,
            self.a.sentence_index,
            self.a.span.start,
            self.b.sentence_index,
            self.b.span.start,
            self.a.span.end,
            self.b.span.end,
        )
    }
}

struct Located {
    entity: HitEntity,
    doc_id: String,
    /// Raw length of the containing sentence, when linked.
    sentence_length: Option<usize>,
}

fn annotations_of(store: &Store, group: SemanticGroup) -> Vec<(TermId, Located)> {
    let (Some(has_group), Some(g)) = (
        store.id_of(&Term::Iri(calbc::has_group())),
        store.id_of(&Term::Iri(group_iri(group))),
    ) else {
        return Vec::new();
    };
    let has_label = store.id_of(&Term::Iri(calbc::has_label()));
    let has_entity = store.id_of(&Term::Iri(calbc::has_entity()));
    let mut out = Vec::new();
    for [a, _, _] in store.match_ids([None, Some(has_group), Some(g)]) {
        let Some(key) = store.term(a).as_iri().and_then(AnnotationKey::parse) else {
            continue;
        };
        let label = has_label
            .and_then(|p| store.match_ids([Some(a), Some(p), None]).next())
            .and_then(|[_, _, o]| store.term(o).as_str().map(String::from))
            .unwrap_or_default();
        let sentence_length = has_entity
            .and_then(|p| store.match_ids([None, Some(p), Some(a)]).next())
            .and_then(|[s, _, _]| store.term(s).as_iri().and_then(SentenceKey::parse))
            .map(|k| k.length);
        out.push((
            a,
            Located {
                entity: HitEntity {
                    label,
                    group,
                    sentence_index: key.sentence_index,
                    span: key.span,
                },
                doc_id: key.doc_id,
                sentence_length,
            },
        ));
    }
    out
}

/// All pairs of a `group_a` annotation and a distinct `group_b` annotation
/// sharing a sentence (or document). When the groups are equal each
/// unordered pair is reported once, with the earlier mention as `a`.
pub fn cooccur(
    store: &Store,
    group_a: SemanticGroup,
    group_b: SemanticGroup,
    scope: Scope,
) -> Result<Vec<CooccurrenceHit>, QueryError> {
    if scope == Scope::Sentence {
        let linked = store
            .id_of(&Term::Iri(calbc::has_entity()))
            .is_some_and(|p| store.match_ids([None, Some(p), None]).next().is_some());
        if !linked {
            return Err(QueryError::MissingPositionTriples);
        }
    }

    type Bucket = (String, Option<usize>);
    let bucket = |l: &Located| -> Option<Bucket> {
        match scope {
            Scope::Sentence => l
                .sentence_length
                .map(|_| (l.doc_id.clone(), Some(l.entity.sentence_index))),
            Scope::Document => Some((l.doc_id.clone(), None)),
        }
    };
    let mut side_b: BTreeMap<Bucket, Vec<(TermId, Located)>> = BTreeMap::new();
    for (id, l) in annotations_of(store, group_b) {
        if let Some(k) = bucket(&l) {
            side_b.entry(k).or_default().push((id, l));
        }
    }
    let same = group_a == group_b;
    let position = |l: &Located| (l.entity.sentence_index, l.entity.span.start, l.entity.span.end);

    let mut hits = Vec::new();
    for (a_id, a) in annotations_of(store, group_a) {
        let Some(k) = bucket(&a) else { continue };
        let Some(partners) = side_b.get(&k) else { continue };
        for (b_id, b) in partners {
            if *b_id == a_id || (same && (position(b), *b_id) < (position(&a), a_id)) {
                continue;
            }
            let confidence = match (scope, a.sentence_length) {
                (Scope::Sentence, Some(len)) => {
                    Confidence::new(a.entity.span.gap(&b.entity.span) as u64, len as u64)
                }
                _ => Confidence::ONE,
            };
            hits.push(CooccurrenceHit {
                doc_id: k.0.clone(),
                sentence_index: k.1,
                a: a.entity.clone(),
                b: b.entity.clone(),
                confidence,
            });
        }
    }
    hits.sort_by(|x, y| x.sort_key().cmp(&y.sort_key()).then_with(|| x.a.label.cmp(&y.a.label)));
    Ok(hits)
}
