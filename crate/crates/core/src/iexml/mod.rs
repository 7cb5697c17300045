//! IeXML documents: inline `<e id="SRC:ID:TYPE:GROUP|…">` entity markup
//! inside `<s i="N">` sentences under a `<doc>` root.
//!
//! Two coordinate systems are kept for every annotation. [`Annotation::span`]
//! counts Unicode code points over the raw sentence markup, tags included,
//! which is what the triple store records as the entity position.
//! [`Annotation::text_span`] counts code points over the sentence with all
//! markup stripped; it is stable across annotators and is what alignment
//! compares.

mod reader;
mod writer;

use std::fmt;

use crate::group::SemanticGroup;

pub use reader::{parse_corpus, parse_document};
pub use writer::{serialize_corpus, serialize_document};

/// Half-open `[start, end)` range of code points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the two spans share at least one code point.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// True when one span lies within the other (either direction).
    pub fn nests_with(&self, other: &Span) -> bool {
        self.contains(other) || other.contains(self)
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Distance between the nearest boundaries, 0 when the spans touch or overlap.
    pub fn gap(&self, other: &Span) -> usize {
        other.start.saturating_sub(self.end).max(self.start.saturating_sub(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// One alternative of an `e` element's `id` attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptRef {
    pub source: String,
    pub concept_id: String,
    pub sem_type: String,
    pub group: SemanticGroup,
}

impl fmt::Display for ConceptRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.source, self.concept_id, self.sem_type, self.group
        )
    }
}

/// An entity mention inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Annotation {
    /// Offsets into the raw sentence markup.
    pub span: Span,
    /// Offsets into the markup-free sentence text.
    pub text_span: Span,
    pub surface: String,
    pub group: SemanticGroup,
    pub concepts: Vec<ConceptRef>,
    pub sentence_index: usize,
}

impl Annotation {
    /// A mention positioned only by its plain-text span. Raw offsets and
    /// surface are filled in when the mention is rendered into a document
    /// with [`AnnotatedDocument::set_content`].
    pub fn mention(sentence_index: usize, text_span: Span, group: SemanticGroup) -> Self {
        Annotation {
            span: text_span,
            text_span,
            surface: String::new(),
            group,
            concepts: Vec::new(),
            sentence_index,
        }
    }

    pub fn with_concepts(mut self, concepts: Vec<ConceptRef>) -> Self {
        self.concepts = concepts;
        self
    }

    /// The `id` attribute this annotation serializes to, if it has concepts.
    pub fn id_attr(&self) -> Option<String> {
        if self.concepts.is_empty() {
            return None;
        }
        Some(
            self.concepts
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("|"),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub title: String,
    pub authors: Vec<String>,
    pub date: String,
    pub journal: Option<String>,
    /// Raw sentence markup, entity tags included.
    pub sentences: Vec<String>,
    pub annotations: Vec<Annotation>,
}

impl AnnotatedDocument {
    pub fn new(doc_id: impl Into<String>) -> Self {
        AnnotatedDocument {
            doc_id: doc_id.into(),
            ..Default::default()
        }
    }

    /// Markup-free text of sentence `index`.
    pub fn sentence_text(&self, index: usize) -> Option<String> {
        self.sentences.get(index).map(|raw| writer::strip_markup(raw))
    }

    pub fn plain_sentences(&self) -> Vec<String> {
        self.sentences.iter().map(|raw| writer::strip_markup(raw)).collect()
    }

    pub fn annotations_in(&self, sentence_index: usize) -> impl Iterator<Item = &Annotation> {
        self.annotations
            .iter()
            .filter(move |a| a.sentence_index == sentence_index)
    }

    /// Replaces the sentences and annotations, rendering the mentions into
    /// canonical markup. Only `sentence_index`, `text_span`, `group` and
    /// `concepts` of the given annotations are read. Mentions that cross an
    /// already placed mention, fall outside their sentence, or are empty
    /// cannot be expressed as nested XML and are returned instead of placed.
    pub fn set_content(
        &mut self,
        plain_sentences: &[String],
        mentions: Vec<Annotation>,
    ) -> Vec<Annotation> {
        let mut per_sentence: Vec<Vec<Annotation>> = vec![Vec::new(); plain_sentences.len()];
        let mut dropped = Vec::new();
        for m in mentions {
            match per_sentence.get_mut(m.sentence_index) {
                Some(bucket) => bucket.push(m),
                None => dropped.push(m),
            }
        }
        self.sentences.clear();
        self.annotations.clear();
        for (i, (text, mentions)) in plain_sentences.iter().zip(per_sentence).enumerate() {
            let rendered = writer::render_sentence(text, mentions);
            self.sentences.push(rendered.markup);
            self.annotations.extend(rendered.placed.into_iter().map(|mut a| {
                a.sentence_index = i;
                a
            }));
            dropped.extend(rendered.dropped);
        }
        dropped
    }
}

/// Line/column (1-based, column in code points) of a parse problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

fn at(location: &Option<Location>) -> String {
    match location {
        Some(l) => format!(" at {l}"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IeXmlError {
    #[error("malformed markup at {location}: {message}")]
    Xml { location: Location, message: String },
    #[error("malformed entity id `{id}`{}: {reason}", at(.location))]
    MalformedId {
        id: String,
        reason: String,
        location: Option<Location>,
    },
}

impl IeXmlError {
    fn with_location(self, loc: Location) -> Self {
        match self {
            IeXmlError::MalformedId { id, reason, .. } => IeXmlError::MalformedId {
                id,
                reason,
                location: Some(loc),
            },
            other => other,
        }
    }
}

/// Splits an `e` element id attribute into its concept alternatives.
pub fn parse_concept_id(id_attr: &str) -> Result<Vec<ConceptRef>, IeXmlError> {
    let malformed = |reason: String| IeXmlError::MalformedId {
        id: id_attr.to_string(),
        reason,
        location: None,
    };
    if id_attr.trim().is_empty() {
        return Err(malformed("empty id".into()));
    }
    id_attr
        .split('|')
        .map(|alt| {
            let fields: Vec<&str> = alt.split(':').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(malformed(format!(
                    "alternative `{}` has {} fields, expected 4",
                    alt.trim(),
                    fields.len()
                )));
            }
            if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
                return Err(malformed(format!(
                    "alternative `{}` has an empty field {}",
                    alt.trim(),
                    pos + 1
                )));
            }
            let group = fields[3]
                .parse::<SemanticGroup>()
                .map_err(|e| malformed(e.to_string()))?;
            Ok(ConceptRef {
                source: fields[0].to_string(),
                concept_id: fields[1].to_string(),
                sem_type: fields[2].to_string(),
                group,
            })
        })
        .collect()
}
