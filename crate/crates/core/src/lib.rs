//! Corpus-to-knowledge-base engine for annotated biomedical abstracts.
//!
//! The pipeline reads IeXML documents ([`iexml`]), merges the output of
//! several annotators into a consensus corpus ([`harmonizer`]), loads a
//! terminological resource ([`lexicon`]), converts every source into
//! triples ([`rdfizer`]) held in an indexed [`store`], and answers
//! basic-graph-pattern queries and co-occurrence requests ([`query`]).

pub mod group;
pub mod harmonizer;
pub mod iexml;
pub mod lexicon;
pub mod query;
pub mod rdfizer;
pub mod store;

pub use group::SemanticGroup;
pub use harmonizer::{
    align_pair, evaluate, harmonize, select_best, AnnotationSet, BoundaryRule, EvalResult,
    HarmonizationConfig, HarmonizeError, MatchScheme, MatchedPair,
};
pub use iexml::{
    parse_concept_id, parse_corpus, parse_document, serialize_corpus, serialize_document,
    AnnotatedDocument, Annotation, ConceptRef, IeXmlError, Span,
};
pub use lexicon::{Lexicon, LexiconError, LexiconStats, LexicalEntry, PolysemyFlags, Variant};
pub use query::{
    cooccur, execute, parse_query, BindingRow, CooccurrenceHit, Query, QueryError, Scope,
};
pub use rdfizer::{
    document_to_triples, experiment_to_triples, lexicon_to_triples, protein_to_triples,
    ExpressionExperiment, ProteinRecord,
};
pub use store::{Iri, PrefixMap, Store, StoreError, Term, Triple, TriplePattern};
