mod common;

use std::collections::BTreeSet;

use calbc_core::harmonizer::{harmonize, AnnotationSet, HarmonizationConfig, MatchScheme};
use calbc_core::query::{cooccur, execute, parse_query, Order, Scope};
use calbc_core::store::{format_term, parse_line, IndexKind};
use calbc_core::{
    document_to_triples, evaluate, parse_concept_id, parse_document, serialize_document,
    AnnotatedDocument, Annotation, SemanticGroup, Span, Store, Term, Triple, Variant,
};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn small_store(seed: u64) -> (Pools, Vec<[usize; 3]>, Store) {
    let mut rng = rng(seed);
    let pools = Pools::new(rng.gen_range(2..12), rng.gen_range(1..4), 4, 4);
    let size = rng.gen_range(0..150);
    let triples = pools.random_triples(&mut rng, size);
    let mut store = Store::new();
    for t in &triples {
        store.insert(&pools.triple(*t)).unwrap();
    }
    (pools, triples, store)
}

const VARS: [&str; 4] = ["a", "b", "c", "d"];

/// Random basic graph pattern over the pools, rendered as query text.
fn random_bgp(rng: &mut impl Rng, pools: &Pools) -> Vec<String> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            let s = if rng.gen_bool(0.7) { format!("?{}", VARS[rng.gen_range(0..4)]) } else { format_term(&pools.terms[pools.subject(rng)]) };
            let p = if rng.gen_bool(0.3) { format!("?{}", VARS[rng.gen_range(0..4)]) } else { format_term(&pools.terms[pools.predicate(rng)]) };
            let o = if rng.gen_bool(0.7) { format!("?{}", VARS[rng.gen_range(0..4)]) } else { format_term(&pools.terms[pools.object(rng)]) };
            format!("{s} {p} {o}")
        })
        .collect()
}

fn rows_as_tuples(rows: &[calbc_core::BindingRow], projection: &[String]) -> Vec<Vec<Term>> {
    rows.iter()
        .map(|r| projection.iter().map(|v| r.get(v).unwrap().clone()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_index_agrees_with_a_scan(seed in any::<u64>()) {
        let (pools, triples, store) = small_store(seed);
        let mut rng = rng(seed ^ 1);
        for _ in 0..40 {
            let p = pools.random_pattern(&mut rng);
            let want: BTreeSet<Triple> = scan(&triples, p).into_iter().map(|t| pools.triple(t)).collect();
            let pattern = pools.to_pattern(p, ["s", "p", "o"]);
            for kind in [IndexKind::Spo, IndexKind::Pos, IndexKind::Osp] {
                let got: BTreeSet<Triple> = store.match_with(kind, &pattern).into_iter().collect();
                prop_assert_eq!(&got, &want);
            }
        }
        prop_assert_eq!(store.index_sizes(), [triples.len(); 3]);
    }

    #[test]
    fn ntriples_round_trip(seed in any::<u64>()) {
        let (_, _, store) = small_store(seed);
        let text = store.to_ntriples();
        let back = Store::from_ntriples(&text).unwrap();
        prop_assert_eq!(back.to_ntriples(), text);
        prop_assert_eq!(back.count(), store.count());
    }

    #[test]
    fn literal_escapes_survive(s in "\\PC*", n in any::<i64>()) {
        let subj = calbc_core::Iri::new("http://x/s").unwrap();
        for object in [Term::str(s.clone()), Term::Int(n)] {
            let t = Triple::new(subj.clone(), subj.clone(), object);
            let line = t.to_string();
            prop_assert_eq!(parse_line(&line).unwrap(), Some(t));
        }
    }

    #[test]
    fn execute_matches_nested_loop(seed in any::<u64>()) {
        let (pools, _, store) = small_store(seed);
        let mut rng = rng(seed ^ 2);
        let patterns = random_bgp(&mut rng, &pools);
        let q = parse_query(&format!("SELECT * WHERE {{ {} }}", patterns.join(" . "))).unwrap();
        let rows = execute(&q, &store).unwrap();
        let projection = q.projection();
        let triples: Vec<Triple> = store.triples().collect();
        let oracle = nested_loop(&triples, &q.patterns, &projection);
        let got: BTreeSet<Vec<Term>> = rows_as_tuples(&rows, &projection).into_iter().collect();
        prop_assert_eq!(got.len(), rows.len());
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn join_order_does_not_change_results(seed in any::<u64>()) {
        let (pools, _, store) = small_store(seed);
        let mut rng = rng(seed ^ 3);
        let mut patterns = random_bgp(&mut rng, &pools);
        let text = |ps: &[String]| format!("SELECT * WHERE {{ {} }} ORDER BY ?a", ps.join(" . "));
        let first = parse_query(&text(&patterns)).unwrap();
        patterns.shuffle(&mut rng);
        let second = parse_query(&text(&patterns)).unwrap();
        match (execute(&first, &store), execute(&second, &store)) {
            (Ok(a), Ok(b)) => {
                // column order follows first appearance, so compare as sets
                let a: BTreeSet<_> = a.into_iter().map(|r| r.0).collect();
                let b: BTreeSet<_> = b.into_iter().map(|r| r.0).collect();
                prop_assert_eq!(a, b);
            }
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn desc_reverses_asc_without_ties(seed in any::<u64>()) {
        let (_, _, store) = small_store(seed);
        // projecting only ?o makes every row key distinct
        let mut asc = parse_query("SELECT ?o WHERE { ?s ?p ?o }").unwrap();
        asc.order_by = Some(("o".into(), Order::Asc));
        let mut desc = asc.clone();
        desc.order_by = Some(("o".into(), Order::Desc));
        let a = execute(&asc, &store).unwrap();
        let mut d = execute(&desc, &store).unwrap();
        d.reverse();
        prop_assert_eq!(a, d);
    }

    #[test]
    fn iexml_round_trip(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), "d1", 10, 20);
        let xml = serialize_document(&doc);
        let back = parse_document(&xml).unwrap();
        prop_assert_eq!(&back, &doc);
        for a in &back.annotations {
            prop_assert_eq!(a.sentence_text_len_ok(&back), true);
        }
    }

    #[test]
    fn concept_alternatives_split(n in 1usize..6, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ids: Vec<String> = (0..n).map(|i| format!("Src{i}:ID{}:T{:03}:PRGE", rng.gen_range(0..99), rng.gen_range(0..999))).collect();
        let joined = ids.join("|");
        let refs = parse_concept_id(&joined).unwrap();
        prop_assert_eq!(refs.len(), joined.matches('|').count() + 1);
    }

    #[test]
    fn counting_formula(seed in any::<u64>()) {
        let doc = random_document(&mut rng(seed), "42", 10, 20);
        prop_assert_eq!(document_to_triples(&doc).len(), expected_document_triples(&doc));
    }

    #[test]
    fn harmonization_is_monotone_and_idempotent(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let sets = tri_annotator_fixture(&mut rng, 3);
        for scheme in MatchScheme::ALL {
            let mut prev: Option<BTreeSet<(String, usize, Span)>> = None;
            for t in 1..=3 {
                let out = harmonize(&sets, &HarmonizationConfig::new(scheme, t)).unwrap();
                let got: BTreeSet<_> = out.documents.iter()
                    .flat_map(|(d, a)| a.iter().map(move |a| (d.clone(), a.sentence_index, a.text_span)))
                    .collect();
                if let Some(p) = &prev {
                    prop_assert!(got.is_subset(p));
                }
                prev = Some(got);
            }
            let copies: Vec<AnnotationSet> = (0..3)
                .map(|k| AnnotationSet { annotator_id: format!("c{k}"), ..sets[0].clone() })
                .collect();
            let out = harmonize(&copies, &HarmonizationConfig::new(scheme, 3)).unwrap();
            for (d, anns) in &sets[0].documents {
                let mut want: Vec<_> = anns.iter().map(|a| (a.sentence_index, a.text_span)).collect();
                let mut got: Vec<_> = out.documents[d].iter().map(|a| (a.sentence_index, a.text_span)).collect();
                want.sort();
                got.sort();
                prop_assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn self_evaluation_is_perfect(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let mut set = AnnotationSet::new("x", SemanticGroup::Spe);
        set.documents.insert("d".into(), random_mentions(&mut rng, &[30, 40], 10, SemanticGroup::Spe));
        for scheme in MatchScheme::ALL {
            let r = evaluate(&set, &set, scheme).unwrap();
            prop_assert_eq!((r.precision, r.recall, r.f_measure), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn specificity_is_monotone(m in 0u64..1_000_000, b in 0u64..1_000_000, dm in 0u64..1000, db in 0u64..1000) {
        let base = Variant::new("x", m, b);
        prop_assert!(Variant::new("x", m + dm, b).cmp_specificity(&base).is_ge());
        prop_assert!(Variant::new("x", m, b + db).cmp_specificity(&base).is_le());
    }

    #[test]
    fn cooccur_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let doc = random_document(&mut rng, "7", 4, 12);
        let mut store = Store::new();
        store.extend(&document_to_triples(&doc)).unwrap();
        let groups = SemanticGroup::ALL;
        let (ga, gb) = (groups[rng.gen_range(0..4)], groups[rng.gen_range(0..4)]);
        for scope in [Scope::Sentence, Scope::Document] {
            let Ok(ab) = cooccur(&store, ga, gb, scope) else {
                prop_assert!(doc.sentences.is_empty() || doc.annotations.is_empty() || scope == Scope::Sentence);
                continue;
            };
            let ba = cooccur(&store, gb, ga, scope).unwrap();
            let key = |h: &calbc_core::CooccurrenceHit, swap: bool| {
                let (x, y) = if swap { (&h.b, &h.a) } else { (&h.a, &h.b) };
                (h.doc_id.clone(), x.sentence_index, x.span, y.sentence_index, y.span, h.confidence)
            };
            let left: BTreeSet<_> = ab.iter().map(|h| key(h, false)).collect();
            let mut right: BTreeSet<_> = ba.iter().map(|h| key(h, true)).collect();
            if ga == gb {
                right = right.into_iter().chain(ba.iter().map(|h| key(h, false))).collect();
                prop_assert!(left.is_subset(&right));
            } else {
                prop_assert_eq!(&left, &right);
            }
            for h in &ab {
                let c = h.confidence.value();
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn confidence_falls_with_gap(len in 2usize..200, g1 in 0usize..200, g2 in 0usize..200) {
        let (lo, hi) = (g1.min(g2) % len, g1.max(g2) % len);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let sentence = |gap: usize| {
            let mut doc = AnnotatedDocument::new("g");
            let text: String = "x".repeat(len);
            let a = Annotation::mention(0, Span::new(0, 1), SemanticGroup::Prge);
            let b_start = (1 + gap).min(len - 1);
            let b = Annotation::mention(0, Span::new(b_start, b_start + 1), SemanticGroup::Diso);
            doc.set_content(&[text], vec![a, b]);
            let mut store = Store::new();
            store.extend(&document_to_triples(&doc)).unwrap();
            cooccur(&store, SemanticGroup::Prge, SemanticGroup::Diso, Scope::Sentence).unwrap()[0].confidence
        };
        prop_assert!(sentence(lo) >= sentence(hi));
    }
}

trait SentenceCheck {
    fn sentence_text_len_ok(&self, doc: &AnnotatedDocument) -> bool;
}

impl SentenceCheck for Annotation {
    /// The plain-text span lies inside its sentence and spells the surface.
    fn sentence_text_len_ok(&self, doc: &AnnotatedDocument) -> bool {
        let Some(text) = doc.sentence_text(self.sentence_index) else {
            return false;
        };
        let surface: String = text.chars().skip(self.text_span.start).take(self.text_span.len()).collect();
        surface == self.surface
    }
}

#[test]
fn parallel_harmonization_matches_sequential() {
    use rayon::prelude::*;
    let fixtures: Vec<Vec<AnnotationSet>> = (0..32).map(|s| tri_annotator_fixture(&mut rng(s), 3)).collect();
    let cfg = HarmonizationConfig::new(MatchScheme::Overlap, 2);
    let seq: Vec<AnnotationSet> = fixtures.iter().map(|f| harmonize(f, &cfg).unwrap()).collect();
    let par: Vec<AnnotationSet> = fixtures.par_iter().map(|f| harmonize(f, &cfg).unwrap()).collect();
    assert_eq!(seq, par);
}
