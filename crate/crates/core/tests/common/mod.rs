//! Seeded generators and independent oracles shared by the integration
//! suites. Nothing here calls the engine code under test except to build
//! inputs.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use calbc_core::harmonizer::AnnotationSet;
use calbc_core::{AnnotatedDocument, Annotation, ConceptRef, SemanticGroup, Span};
use calbc_core::{Iri, Term, Triple, TriplePattern};
use calbc_core::store::Slot;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORDS: &[&str] = &[
    "p53", "insulin", "binds", "the", "receptor", "in", "mice", "&", "cancer", "<tumour>",
    "\"quoted\"", "it's", "α-synuclein", "IL-2", "and", "of", "glucose", "aspirin", "cells", "naïve",
];
const SOURCES: &[&str] = &["Uniprot", "UMLS", "ChEBI", "NCBITaxon", "MyDB"];
const GROUPS: [SemanticGroup; 4] = SemanticGroup::ALL;

pub fn pick<'a, T>(rng: &mut impl Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("nonempty")
}

fn text(rng: &mut impl Rng, words: usize) -> String {
    (0..words).map(|_| *pick(rng, WORDS)).collect::<Vec<_>>().join(" ")
}

pub fn random_concepts(rng: &mut impl Rng, group: SemanticGroup) -> Vec<ConceptRef> {
    let n = rng.gen_range(0..=3);
    (0..n)
        .map(|_| ConceptRef {
            source: pick(rng, SOURCES).to_string(),
            concept_id: format!("C{:05}", rng.gen_range(0..100_000)),
            sem_type: format!("T{:03}", rng.gen_range(0..200)),
            group: if rng.gen_bool(0.8) { group } else { *pick(rng, &GROUPS) },
        })
        .collect()
}

/// Word-aligned character offsets `(start, end)` of each word in `sentence`.
fn word_bounds(sentence: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut pos = 0;
    for w in sentence.split(' ') {
        let n = w.chars().count();
        out.push((pos, pos + n));
        pos += n + 1;
    }
    out
}

/// Disjoint word ranges inside `[lo, hi)`, each with nested children up to
/// `depth_left` further levels.
fn nested_mentions(
    rng: &mut impl Rng,
    words: &[(usize, usize)],
    lo: usize,
    hi: usize,
    depth_left: usize,
    budget: &mut usize,
    sentence: usize,
    out: &mut Vec<Annotation>,
) {
    let mut w = lo;
    while w < hi && *budget > 0 {
        if !rng.gen_bool(0.35) {
            w += 1;
            continue;
        }
        let end = rng.gen_range(w + 1..=hi.min(w + 4));
        let group = *pick(rng, &GROUPS);
        let span = Span::new(words[w].0, words[end - 1].1);
        *budget -= 1;
        out.push(Annotation::mention(sentence, span, group).with_concepts(random_concepts(rng, group)));
        if depth_left > 1 {
            nested_mentions(rng, words, w, end, depth_left - 1, budget, sentence, out);
        }
        w = end;
    }
}

/// A document with at most `max_sentences` sentences and `max_annotations`
/// properly nested mentions of depth at most 3.
pub fn random_document(rng: &mut impl Rng, id: &str, max_sentences: usize, max_annotations: usize) -> AnnotatedDocument {
    let mut doc = AnnotatedDocument::new(id);
    let words = rng.gen_range(1..6);
    doc.title = text(rng, words);
    doc.date = format!("20{:02}-0{}-1{}", rng.gen_range(0..25), rng.gen_range(1..10), rng.gen_range(0..10));
    doc.authors = (0..rng.gen_range(0..4)).map(|i| format!("Author{i} {}", pick(rng, WORDS))).collect();
    doc.journal = rng.gen_bool(0.5).then(|| text(rng, 2));
    let n = rng.gen_range(0..=max_sentences);
    let plain: Vec<String> = (0..n)
        .map(|_| {
            let words = rng.gen_range(1..15);
            text(rng, words)
        })
        .collect();
    let mut budget = max_annotations;
    let mut mentions = Vec::new();
    for (i, s) in plain.iter().enumerate() {
        let words = word_bounds(s);
        nested_mentions(rng, &words, 0, words.len(), 3, &mut budget, i, &mut mentions);
    }
    let dropped = doc.set_content(&plain, mentions);
    assert!(dropped.is_empty(), "generator produced crossing mentions");
    doc
}

/// Formula for the triple count of a document, computed from its parts.
pub fn expected_document_triples(doc: &AnnotatedDocument) -> usize {
    let metadata = 2 + doc.authors.len() + usize::from(doc.journal.is_some());
    let mut per_annotation = 0;
    for a in &doc.annotations {
        per_annotation += 2 + a.concepts.len(); // document-level
        per_annotation += 2; // sentence-level
    }
    metadata + per_annotation + 2 * doc.sentences.len()
}

// ---------------------------------------------------------------- store

/// Term pools addressed by small integers so that an oracle can scan plain
/// index triples.
pub struct Pools {
    pub terms: Vec<Term>,
    pub subjects: usize,
    pub predicates: usize,
}

impl Pools {
    pub fn new(subjects: usize, predicates: usize, strings: usize, ints: usize) -> Self {
        let mut terms = Vec::new();
        for i in 0..subjects {
            terms.push(Term::Iri(Iri::new(format!("http://ex.org/s/{i}")).unwrap()));
        }
        for i in 0..predicates {
            terms.push(Term::Iri(Iri::new(format!("http://ex.org/p/{i}")).unwrap()));
        }
        for i in 0..strings {
            terms.push(Term::str(format!("lit \"{i}\"\n")));
        }
        for i in 0..ints {
            terms.push(Term::Int(i as i64 * 37 - 300));
        }
        Pools { terms, subjects, predicates }
    }

    pub fn subject(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(0..self.subjects)
    }

    pub fn predicate(&self, rng: &mut impl Rng) -> usize {
        self.subjects + rng.gen_range(0..self.predicates)
    }

    pub fn object(&self, rng: &mut impl Rng) -> usize {
        if rng.gen_bool(0.4) {
            self.subject(rng)
        } else {
            rng.gen_range(self.subjects + self.predicates..self.terms.len())
        }
    }

    pub fn iri(&self, i: usize) -> Iri {
        self.terms[i].as_iri().unwrap().clone()
    }

    pub fn triple(&self, [s, p, o]: [usize; 3]) -> Triple {
        Triple::new(self.iri(s), self.iri(p), self.terms[o].clone())
    }

    pub fn index_of(&self) -> HashMap<Term, usize> {
        self.terms.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect()
    }

    /// Up to `n` distinct index triples.
    pub fn random_triples(&self, rng: &mut impl Rng, n: usize) -> Vec<[usize; 3]> {
        let set: BTreeSet<[usize; 3]> = (0..n)
            .map(|_| [self.subject(rng), self.predicate(rng), self.object(rng)])
            .collect();
        set.into_iter().collect()
    }

    /// A pattern with each slot independently bound with probability 1/2.
    pub fn random_pattern(&self, rng: &mut impl Rng) -> [Option<usize>; 3] {
        [
            rng.gen_bool(0.5).then(|| self.subject(rng)),
            rng.gen_bool(0.5).then(|| self.predicate(rng)),
            rng.gen_bool(0.5).then(|| self.object(rng)),
        ]
    }

    pub fn to_pattern(&self, p: [Option<usize>; 3], names: [&str; 3]) -> TriplePattern {
        let slot = |k: usize| match p[k] {
            Some(i) => Slot::Term(self.terms[i].clone()),
            None => Slot::var(names[k]),
        };
        TriplePattern::new(slot(0), slot(1), slot(2))
    }
}

/// Linear scan over index triples, preserving their order.
pub fn scan(triples: &[[usize; 3]], p: [Option<usize>; 3]) -> Vec<[usize; 3]> {
    triples
        .iter()
        .filter(|t| (0..3).all(|k| p[k].is_none_or(|v| v == t[k])))
        .copied()
        .collect()
}

/// Nested-loop join over a triple list, patterns taken in the given order.
/// Returns distinct rows projected onto `projection`.
pub fn nested_loop(
    triples: &[Triple],
    patterns: &[TriplePattern],
    projection: &[String],
) -> BTreeSet<Vec<Term>> {
    fn go(
        triples: &[Triple],
        patterns: &[TriplePattern],
        env: &mut BTreeMap<String, Term>,
        projection: &[String],
        out: &mut BTreeSet<Vec<Term>>,
    ) {
        let Some((first, rest)) = patterns.split_first() else {
            out.insert(projection.iter().map(|v| env[v].clone()).collect());
            return;
        };
        for t in triples {
            let values = [Term::Iri(t.subject.clone()), Term::Iri(t.predicate.clone()), t.object.clone()];
            let mut added = Vec::new();
            let mut ok = true;
            for (slot, value) in first.slots().into_iter().zip(values) {
                match slot {
                    Slot::Term(c) => ok &= *c == value,
                    Slot::Var(v) => match env.get(v) {
                        Some(bound) => ok &= *bound == value,
                        None => {
                            env.insert(v.clone(), value);
                            added.push(v.clone());
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                go(triples, rest, env, projection, out);
            }
            for v in added {
                env.remove(&v);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(triples, patterns, &mut BTreeMap::new(), projection, &mut out);
    out
}

// ---------------------------------------------------------------- harmonizer

/// Mentions of one annotator over fixed sentence lengths: random spans,
/// possibly overlapping each other.
pub fn random_mentions(rng: &mut impl Rng, sentence_lengths: &[usize], max: usize, group: SemanticGroup) -> Vec<Annotation> {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| {
            let s = rng.gen_range(0..sentence_lengths.len());
            let len = sentence_lengths[s];
            let start = rng.gen_range(0..len - 1);
            let end = rng.gen_range(start + 1..=len.min(start + 8));
            Annotation::mention(s, Span::new(start, end), group)
        })
        .collect()
}

/// Three annotators that share a pool of "true" mentions, each keeping a
/// random subset, jittering some boundaries and adding noise.
pub fn tri_annotator_fixture(rng: &mut impl Rng, docs: usize) -> Vec<AnnotationSet> {
    let group = SemanticGroup::Prge;
    let mut sets: Vec<AnnotationSet> = ["ann1", "ann2", "ann3"].iter().map(|id| AnnotationSet::new(*id, group)).collect();
    for d in 0..docs {
        let lengths: Vec<usize> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(20..60)).collect();
        let truth = random_mentions(rng, &lengths, 6, group);
        for set in sets.iter_mut() {
            let mut mine = Vec::new();
            for a in &truth {
                if !rng.gen_bool(0.7) {
                    continue;
                }
                let mut a = a.clone();
                if rng.gen_bool(0.2) && a.text_span.end < lengths[a.sentence_index] {
                    a.text_span.end += 1;
                    a.span = a.text_span;
                }
                mine.push(a);
            }
            mine.extend(random_mentions(rng, &lengths, 2, group));
            mine.shuffle(rng);
            set.documents.insert(format!("doc{d}"), mine);
        }
    }
    sets
}

/// Leftmost-first greedy one-to-one matching, written from scratch.
fn greedy(left: &[Annotation], right: &[Annotation], accepts: &dyn Fn(Span, Span) -> bool) -> Vec<(usize, usize)> {
    let key = |a: &Annotation, i: usize| (a.sentence_index, a.text_span.start, a.text_span.end, i);
    let mut li: Vec<usize> = (0..left.len()).collect();
    li.sort_by_key(|&i| key(&left[i], i));
    let mut ri: Vec<usize> = (0..right.len()).collect();
    ri.sort_by_key(|&i| key(&right[i], i));
    let mut taken = BTreeSet::new();
    let mut pairs = Vec::new();
    for i in li {
        for &j in &ri {
            if !taken.contains(&j)
                && left[i].sentence_index == right[j].sentence_index
                && accepts(left[i].text_span, right[j].text_span)
            {
                taken.insert(j);
                pairs.push((i, j));
                break;
            }
        }
    }
    pairs
}

pub fn scheme_accepts(scheme: &str) -> Box<dyn Fn(Span, Span) -> bool> {
    match scheme {
        "exact" => Box::new(|a: Span, b: Span| a == b),
        "overlap" => Box::new(|a: Span, b: Span| a.start < b.end && b.start < a.end),
        "nested" => Box::new(|a: Span, b: Span| (a.start <= b.start && b.end <= a.end) || (b.start <= a.start && a.end <= b.end)),
        other => panic!("unknown scheme {other}"),
    }
}

/// Vote-count oracle: connected components of the pairwise matching graph
/// by transitive closure of a reachability matrix; a component survives
/// when at least `threshold` distinct annotators contribute to it. Its span
/// is the most frequent one, then the longest, then the leftmost.
/// Returns `(sentence, start, end)` of the survivors.
pub fn vote_oracle(sets: &[&[Annotation]], scheme: &str, threshold: usize) -> BTreeSet<(usize, usize, usize)> {
    let accepts = scheme_accepts(scheme);
    let nodes: Vec<(usize, &Annotation)> = sets
        .iter()
        .enumerate()
        .flat_map(|(k, anns)| anns.iter().map(move |a| (k, a)))
        .collect();
    let base: Vec<usize> = sets
        .iter()
        .scan(0, |acc, s| {
            let b = *acc;
            *acc += s.len();
            Some(b)
        })
        .collect();
    let n = nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for a in 0..sets.len() {
        for b in a + 1..sets.len() {
            for (l, r) in greedy(sets[a], sets[b], &*accepts) {
                let (x, y) = (base[a] + l, base[b] + r);
                reach[x][y] = true;
                reach[y][x] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
        for &m in &members {
            seen[m] = true;
        }
        let voters: BTreeSet<usize> = members.iter().map(|&m| nodes[m].0).collect();
        if voters.len() < threshold {
            continue;
        }
        let mut freq: BTreeMap<Span, usize> = BTreeMap::new();
        for &m in &members {
            *freq.entry(nodes[m].1.text_span).or_default() += 1;
        }
        let best = freq
            .iter()
            .max_by(|(sa, ca), (sb, cb)| {
                ca.cmp(cb)
                    .then((sa.end - sa.start).cmp(&(sb.end - sb.start)))
                    .then(sb.start.cmp(&sa.start))
            })
            .map(|(s, _)| *s)
            .unwrap();
        out.insert((nodes[i].1.sentence_index, best.start, best.end));
    }
    out
}

// ---------------------------------------------------------------- queries

pub const FLAGSHIP_QUERY: &str = r#"PREFIX lexebi: <http://www.ebi.ac.uk/Rebholz/core/lexebi#>
PREFIX xsd: <http://www.w3.org/2001/XMLSchema#>
PREFIX owl: <http://www.w3.org/2002/07/owl#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
PREFIX ebi: <http://www.ebi.ac.uk/Rebholz/core/>
PREFIX obo: <http://purl.obolibrary.org/obo/>
PREFIX expasy: <http://www.expasy.org/enzyme/>
PREFIX taxo: <http://purl.org/obo/owl/NCBITaxon#>
PREFIX interpro: <http://www.ebi.ac.uk/interpro/>
PREFIX umls: <http://url_umls#>
PREFIX uniprot: <http://purl.uniprot.org/uniprot/>
PREFIX pubmed: <http://www.ncbi.nlm.nih.gov/pubmed/>
PREFIX dc: <http://purl.org/dc/elements/1.1/>
PREFIX calbc: <http://www.ebi.ac.uk/Rebholz/core/calbc#>

SELECT * WHERE {
  ?pmid calbc:hasAnnotation [calbc:hasLabel "String_to_query"] .
  ?lexebi_entity lexebi:hasVariant [lexebi:surfaceForm
"String_to_query", lexebi:frequencyInMedline ?mfreq].
}
ORDER BY DESC(?mfreq)
"#;

pub const LEXICON_HEADER: &str = "cluster_id\tgroup\tpreferred\tsurface\tfreq_medline\tfreq_bnc\tconcept_count\tflags\n";
