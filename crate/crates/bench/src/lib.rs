//! Fixture generators shared by the benchmarks. Every generator is seeded,
//! so repeated runs measure the same data.

use calbc_core::{
    document_to_triples, lexicon_to_triples, AnnotatedDocument, Annotation, AnnotationSet, ConceptRef,
    Iri, Lexicon, SemanticGroup, Span, Store, Term, Triple,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: &[&str] = &[
    "kinase", "binding", "tumour", "cell", "protein", "String_to_query", "receptor", "growth", "factor",
    "mouse", "expression", "signal", "pathway", "insulin", "p53", "regulates", "inhibits", "liver",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` random triples over a vocabulary sized to keep the join fan-out
/// realistic: many subjects, few predicates, mixed literal objects.
pub fn random_triples(seed: u64, n: usize) -> Vec<Triple> {
    let mut rng = rng(seed);
    let subjects = (n / 8).max(2);
    let iri = |kind: &str, i: usize| Iri::new(format!("http://bench.example/{kind}/{i}")).unwrap();
    (0..n)
        .map(|_| {
            let s = iri("s", rng.gen_range(0..subjects));
            let p = iri("p", rng.gen_range(0..12));
            let o = match rng.gen_range(0..3) {
                0 => Term::Iri(iri("s", rng.gen_range(0..subjects))),
                1 => Term::Int(rng.gen_range(0..10_000)),
                _ => Term::str(*WORDS.choose(&mut rng).unwrap()),
            };
            Triple::new(s, p, o)
        })
        .collect()
}

pub fn store_of(triples: &[Triple]) -> Store {
    let mut store = Store::new();
    store.extend(triples).unwrap();
    store
}

/// A corpus of `docs` documents with up to `sentences` sentences each and
/// non-overlapping single-word mentions.
pub fn corpus(seed: u64, docs: usize, sentences: usize) -> Vec<AnnotatedDocument> {
    let mut rng = rng(seed);
    (0..docs)
        .map(|d| {
            let mut doc = AnnotatedDocument::new(format!("{}", 10_000 + d));
            doc.title = format!("Document {d}");
            doc.date = "2010-01-01".into();
            doc.authors = vec!["A. Author".into()];
            let n = rng.gen_range(1..=sentences);
            let mut plain = Vec::with_capacity(n);
            let mut mentions = Vec::new();
            for i in 0..n {
                let words: Vec<&str> = (0..rng.gen_range(4..20)).map(|_| *WORDS.choose(&mut rng).unwrap()).collect();
                let mut start = 0;
                for w in &words {
                    if rng.gen_bool(0.25) {
                        let group = *SemanticGroup::ALL.choose(&mut rng).unwrap();
                        let concept = ConceptRef {
                            source: "UMLS".into(),
                            concept_id: format!("C{:07}", rng.gen_range(0..5_000)),
                            sem_type: "T116".into(),
                            group,
                        };
                        mentions.push(Annotation::mention(i, Span::new(start, start + w.len()), group).with_concepts(vec![concept]));
                    }
                    start += w.len() + 1;
                }
                plain.push(words.join(" "));
            }
            let dropped = doc.set_content(&plain, mentions);
            debug_assert!(dropped.is_empty(), "single-word mentions never cross");
            doc
        })
        .collect()
}

/// `k` annotators that each keep, drop or shift the PRGE mentions of `base`.
pub fn annotator_sets(seed: u64, base: &[AnnotatedDocument], k: usize) -> Vec<AnnotationSet> {
    let mut rng = rng(seed);
    (0..k)
        .map(|a| {
            let mut set = AnnotationSet::new(format!("ann{a}"), SemanticGroup::Prge);
            for doc in base {
                let mut anns: Vec<Annotation> = Vec::new();
                for m in doc.annotations.iter().filter(|m| m.group == SemanticGroup::Prge) {
                    if rng.gen_bool(0.2) {
                        continue;
                    }
                    let mut m = m.clone();
                    if rng.gen_bool(0.2) && m.text_span.len() > 1 {
                        m.text_span = Span::new(m.text_span.start + 1, m.text_span.end);
                    }
                    anns.push(m);
                }
                set.documents.insert(doc.doc_id.clone(), anns);
            }
            set
        })
        .collect()
}

/// Lexicon text with `clusters` clusters, each holding the flagship surface
/// form plus one private variant.
pub fn lexicon_text(seed: u64, clusters: usize) -> String {
    let mut rng = rng(seed);
    let mut out = String::from("cluster_id\tgroup\tpreferred\tsurface\tfreq_medline\tfreq_bnc\tconcept_count\tflags\n");
    for c in 0..clusters {
        let id = format!("UniProt:P{c:05}");
        let own = format!("gene{c}");
        for surface in ["String_to_query", own.as_str()] {
            out.push_str(&format!(
                "{id}\tPRGE\t{own}\t{surface}\t{}\t{}\t1\t\n",
                rng.gen_range(0..100_000),
                rng.gen_range(0..1_000)
            ));
        }
    }
    out
}

/// Store holding a corpus and a lexicon, ready for the flagship query.
pub fn knowledge_base(seed: u64, docs: usize, clusters: usize) -> Store {
    let mut store = Store::new();
    for d in corpus(seed, docs, 8) {
        store.extend(&document_to_triples(&d)).unwrap();
    }
    let lex = Lexicon::from_reader(lexicon_text(seed, clusters).as_bytes()).unwrap();
    store.extend(&lexicon_to_triples(&lex)).unwrap();
    store
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_triples(3, 200), random_triples(3, 200));
        assert_eq!(corpus(3, 5, 4), corpus(3, 5, 4));
    }

    #[test]
    fn corpus_round_trips() {
        for d in corpus(9, 20, 6) {
            let xml = calbc_core::serialize_document(&d);
            assert_eq!(calbc_core::parse_document(&xml).unwrap(), d);
        }
    }

    #[test]
    fn knowledge_base_answers_the_flagship_query() {
        let store = knowledge_base(1, 30, 5);
        let q = calbc_core::parse_query(
            "PREFIX calbc: <http://www.ebi.ac.uk/Rebholz/core/calbc#>
             PREFIX lexebi: <http://www.ebi.ac.uk/Rebholz/core/lexebi#>
             SELECT * WHERE {
               ?pmid calbc:hasAnnotation [calbc:hasLabel \"String_to_query\"] .
               ?e lexebi:hasVariant [lexebi:surfaceForm \"String_to_query\", lexebi:frequencyInMedline ?f] .
             } ORDER BY DESC(?f)",
        )
        .unwrap();
        assert!(!calbc_core::execute(&q, &store).unwrap().is_empty());
    }
}
