//! Deterministic conversion of documents, lexicon entries, protein records
//! and expression experiments into triples.
//!
//! Anonymous nodes are skolemized under `urn:calbc:node:` with keys that
//! can be decoded again:
//!
//! | node       | IRI local part                                  |
//! |------------|-------------------------------------------------|
//! | sentence   | `s.{doc}.{index}.{length}`                      |
//! | annotation | `a.{doc}.{sentence}.{start}.{end}.{GROUP}`      |
//! | variant    | `v.{cluster}.{surface}`                         |
//!
//! `{doc}`, `{cluster}` and `{surface}` are percent-encoded so that `.`
//! only ever separates fields. Sentence length and annotation offsets are
//! code points over the plain sentence text, so distances between mentions
//! do not depend on markup.

mod records;
pub mod vocab;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use crate::group::SemanticGroup;
use crate::iexml::{AnnotatedDocument, ConceptRef, Span};
use crate::lexicon::Lexicon;
use crate::store::{Iri, Term, Triple};

pub use records::{
    parse_experiments, parse_proteins, read_experiments, read_proteins, ExpressionExperiment,
    ProteinRecord, RecordError,
};
use vocab::{calbc, dc, lexebi, ns, owl, uniprot};

/// Characters kept verbatim in IRI local parts.
const LOCAL: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.');
/// Skolem key fields additionally escape `.`, the field separator.
const KEY_FIELD: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_');

fn enc_local(s: &str) -> String {
    utf8_percent_encode(s, LOCAL).to_string()
}

fn enc_field(s: &str) -> String {
    utf8_percent_encode(s, KEY_FIELD).to_string()
}

fn dec_field(s: &str) -> Option<String> {
    percent_decode_str(s).decode_utf8().ok().map(|c| c.into_owned())
}

fn iri(base: &str, local: &str) -> Iri {
    Iri::new(format!("{base}{local}")).expect("encoded local parts are valid IRI text")
}

/// IRI of a document.
pub fn document_iri(doc_id: &str) -> Iri {
    iri(ns::PUBMED, &enc_local(doc_id))
}

/// Decoded sentence node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentenceKey {
    pub doc_id: String,
    pub index: usize,
    /// Code points of plain sentence text.
    pub length: usize,
}

impl SentenceKey {
    pub fn iri(&self) -> Iri {
        iri(
            ns::NODE,
            &format!("s.{}.{}.{}", enc_field(&self.doc_id), self.index, self.length),
        )
    }

    pub fn parse(iri: &Iri) -> Option<Self> {
        let key = iri.as_str().strip_prefix(ns::NODE)?.strip_prefix("s.")?;
        let mut parts = key.split('.');
        let (doc, index, length) = (parts.next()?, parts.next()?, parts.next()?);
        if parts.next().is_some() {
            return None;
        }
        Some(SentenceKey {
            doc_id: dec_field(doc)?,
            index: index.parse().ok()?,
            length: length.parse().ok()?,
        })
    }
}

/// Decoded annotation node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnnotationKey {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Plain-text offsets.
    pub span: Span,
    pub group: SemanticGroup,
}

impl AnnotationKey {
    pub fn iri(&self) -> Iri {
        iri(
            ns::NODE,
            &format!(
                "a.{}.{}.{}.{}.{}",
                enc_field(&self.doc_id),
                self.sentence_index,
                self.span.start,
                self.span.end,
                self.group
            ),
        )
    }

    pub fn parse(iri: &Iri) -> Option<Self> {
        let key = iri.as_str().strip_prefix(ns::NODE)?.strip_prefix("a.")?;
        let parts: Vec<&str> = key.split('.').collect();
        let [doc, sentence, start, end, group] = parts.as_slice() else {
            return None;
        };
        Some(AnnotationKey {
            doc_id: dec_field(doc)?,
            sentence_index: sentence.parse().ok()?,
            span: Span::new(start.parse().ok()?, end.parse().ok()?),
            group: group.parse().ok()?,
        })
    }
}

fn variant_iri(cluster_id: &str, surface: &str) -> Iri {
    iri(
        ns::NODE,
        &format!("v.{}.{}", enc_field(cluster_id), enc_field(surface)),
    )
}

/// IRI of a semantic group, e.g. `calbc:PRGE`.
pub fn group_iri(group: SemanticGroup) -> Iri {
    iri(ns::CALBC, group.code())
}

pub fn group_from_iri(iri: &Iri) -> Option<SemanticGroup> {
    iri.as_str().strip_prefix(ns::CALBC)?.parse().ok()
}

const OBO_SOURCES: &[&str] = &["go", "chebi", "efo", "doid", "hp", "so", "uberon", "cl", "pr", "mondo"];

/// Maps a `(source, id)` reference onto a namespace, or `None` when the
/// source has no registered namespace.
pub fn resolve_reference(source: &str, id: &str) -> Option<Iri> {
    let lower = source.trim().to_ascii_lowercase();
    let id = id.trim();
    let local = enc_local(id);
    let base = match lower.as_str() {
        "uniprot" | "uniprotkb" | "swissprot" | "sp" => ns::UNIPROT,
        "umls" => ns::UMLS,
        "pubmed" | "pmid" | "medline" => ns::PUBMED,
        "interpro" => ns::INTERPRO,
        "expasy" | "ec" | "enzyme" => ns::EXPASY,
        "lexebi" => ns::LEXEBI,
        "ncbitaxon" | "taxon" | "taxonomy" | "ncbi_taxonomy" => {
            return Some(iri(ns::TAXO, &format!("NCBITaxon_{local}")))
        }
        s if OBO_SOURCES.contains(&s) => {
            return Some(iri(ns::OBO, &format!("{}_{local}", lower.to_ascii_uppercase())))
        }
        _ => return None,
    };
    Some(iri(base, &local))
}

/// [`resolve_reference`] for `SRC:ID` strings.
pub fn resolve_curie(curie: &str) -> Option<Iri> {
    let (source, id) = curie.split_once(':')?;
    resolve_reference(source, id)
}

/// Concept IRI with the UMLS-namespace fallback for unregistered sources.
pub fn concept_iri(c: &ConceptRef) -> Iri {
    resolve_reference(&c.source, &c.concept_id).unwrap_or_else(|| {
        iri(ns::UMLS, &format!("{}_{}", enc_local(&c.source), enc_local(&c.concept_id)))
    })
}

/// Concept sources in `doc` that fall back to the UMLS namespace.
pub fn unresolved_sources(doc: &AnnotatedDocument) -> Vec<String> {
    let mut out: Vec<String> = doc
        .annotations
        .iter()
        .flat_map(|a| &a.concepts)
        .filter(|c| resolve_reference(&c.source, &c.concept_id).is_none())
        .map(|c| c.source.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Expected length of [`document_to_triples`] output:
/// `(2 + authors + has_journal) + Σ_ann (2 + concepts) + Σ_sent 2 + Σ_ann 2`.
pub fn document_triple_count(doc: &AnnotatedDocument) -> usize {
    let metadata = 2 + doc.authors.len() + usize::from(doc.journal.is_some());
    let annotations: usize = doc.annotations.iter().map(|a| 2 + a.concepts.len() + 2).sum();
    metadata + annotations + 2 * doc.sentences.len()
}

/// Dublin Core metadata, document-level annotations and sentence-level
/// entity links of one document.
///
/// Per annotation `A` in sentence `S`: `doc calbc:hasAnnotation A`,
/// `A calbc:hasLabel "surface"`, `A calbc:hasGroup calbc:GROUP`,
/// `A calbc:hasConcept C` per concept, and `S calbc:hasEntity A`. Per
/// sentence: `doc calbc:hasSentence S` and `S calbc:index i`.
pub fn document_to_triples(doc: &AnnotatedDocument) -> Vec<Triple> {
    let d = document_iri(&doc.doc_id);
    let mut out = Vec::with_capacity(document_triple_count(doc));
    out.push(Triple::new(d.clone(), dc::title(), Term::str(&doc.title)));
    out.push(Triple::new(d.clone(), dc::date(), Term::str(&doc.date)));
    for a in &doc.authors {
        out.push(Triple::new(d.clone(), dc::creator(), Term::str(a)));
    }
    if let Some(j) = &doc.journal {
        out.push(Triple::new(d.clone(), dc::source(), Term::str(j)));
    }

    let sentence_nodes: Vec<Iri> = doc
        .plain_sentences()
        .iter()
        .enumerate()
        .map(|(i, text)| {
            SentenceKey {
                doc_id: doc.doc_id.clone(),
                index: i,
                length: text.chars().count(),
            }
            .iri()
        })
        .collect();
    for (i, s) in sentence_nodes.iter().enumerate() {
        out.push(Triple::new(d.clone(), calbc::has_sentence(), s.clone()));
        out.push(Triple::new(s.clone(), calbc::index(), Term::Int(i as i64)));
    }

    for ann in &doc.annotations {
        let a = AnnotationKey {
            doc_id: doc.doc_id.clone(),
            sentence_index: ann.sentence_index,
            span: ann.text_span,
            group: ann.group,
        }
        .iri();
        out.push(Triple::new(d.clone(), calbc::has_annotation(), a.clone()));
        out.push(Triple::new(a.clone(), calbc::has_label(), Term::str(&ann.surface)));
        out.push(Triple::new(a.clone(), calbc::has_group(), group_iri(ann.group)));
        for c in &ann.concepts {
            out.push(Triple::new(a.clone(), calbc::has_concept(), concept_iri(c)));
        }
        if let Some(s) = sentence_nodes.get(ann.sentence_index) {
            out.push(Triple::new(s.clone(), calbc::has_entity(), a));
        }
    }
    out
}

/// IRI of a lexicon cluster.
pub fn cluster_iri(cluster_id: &str) -> Iri {
    iri(ns::LEXEBI, &enc_local(cluster_id))
}

/// Per cluster `C`: `C lexebi:preferredTerm`, `C lexebi:semanticGroup`,
/// `C owl:sameAs` the primary resource entry; per variant `V`:
/// `C lexebi:hasVariant V`, `V lexebi:surfaceForm`,
/// `V lexebi:frequencyInMedline`.
pub fn lexicon_to_triples(lex: &Lexicon) -> Vec<Triple> {
    let mut out = Vec::new();
    for entry in lex.entries() {
        let c = cluster_iri(&entry.cluster_id);
        out.push(Triple::new(c.clone(), lexebi::preferred_term(), Term::str(&entry.preferred_term)));
        out.push(Triple::new(c.clone(), lexebi::semantic_group(), group_iri(entry.group)));
        let primary = resolve_curie(&entry.cluster_id)
            .unwrap_or_else(|| iri(ns::UMLS, &enc_local(&entry.cluster_id.replacen(':', "_", 1))));
        out.push(Triple::new(c.clone(), owl::same_as(), primary));
        for v in &entry.variants {
            let node = variant_iri(&entry.cluster_id, &v.surface);
            out.push(Triple::new(c.clone(), lexebi::has_variant(), node.clone()));
            out.push(Triple::new(node.clone(), lexebi::surface_form(), Term::str(&v.surface)));
            out.push(Triple::new(
                node,
                lexebi::frequency_in_medline(),
                Term::Int(i64::try_from(v.freq_medline).unwrap_or(i64::MAX)),
            ));
        }
    }
    out
}

/// IRI of a protein accession.
pub fn protein_iri(accession: &str) -> Iri {
    iri(ns::UNIPROT, &enc_local(accession))
}

fn taxon_iri(taxon: &str) -> Iri {
    let id = taxon
        .trim()
        .strip_prefix("NCBITaxon:")
        .or_else(|| taxon.trim().strip_prefix("taxon:"))
        .unwrap_or(taxon.trim());
    iri(ns::TAXO, &format!("NCBITaxon_{}", enc_local(id)))
}

fn same_as_target(resource: &str, id: &str) -> Iri {
    resolve_reference(resource, id).unwrap_or_else(|| {
        iri(
            "http://identifiers.org/",
            &format!("{}/{}", enc_local(&resource.to_ascii_lowercase()), enc_local(id)),
        )
    })
}

/// `uniprot:organism` plus one triple per same-as link, GO term,
/// interaction partner and Medline citation.
pub fn protein_to_triples(rec: &ProteinRecord) -> Vec<Triple> {
    let p = protein_iri(&rec.accession);
    let mut out = vec![Triple::new(p.clone(), uniprot::organism(), taxon_iri(&rec.species))];
    for (resource, id) in &rec.same_as {
        out.push(Triple::new(p.clone(), uniprot::same_as(resource), same_as_target(resource, id)));
    }
    for go in &rec.go_terms {
        let target = resolve_curie(go).unwrap_or_else(|| iri(ns::OBO, &format!("GO_{}", enc_local(go))));
        out.push(Triple::new(p.clone(), uniprot::classified_with(), target));
    }
    for partner in &rec.interactions {
        out.push(Triple::new(p.clone(), uniprot::interacts_with(), protein_iri(partner)));
    }
    for pmid in &rec.medline_refs {
        out.push(Triple::new(p.clone(), uniprot::citation(), document_iri(pmid)));
    }
    out
}

/// IRI of an expression experiment.
pub fn experiment_iri(id: &str) -> Iri {
    iri(ns::EBI, &enc_local(id))
}

/// Genes given as `SRC:ID` resolve through the registered namespaces; bare
/// identifiers are taken as UniProt accessions.
pub fn gene_iri(gene: &str) -> Iri {
    match gene.split_once(':') {
        Some((src, id)) => resolve_reference(src, id).unwrap_or_else(|| same_as_target(src, id)),
        None => protein_iri(gene),
    }
}

/// `E calbc:mentionsGene g` per gene and `E calbc:hasFactor f` per factor.
pub fn experiment_to_triples(e: &ExpressionExperiment) -> Vec<Triple> {
    let x = experiment_iri(&e.experiment_id);
    let mut out = Vec::with_capacity(e.gene_ids.len() + e.factor_terms.len());
    for g in &e.gene_ids {
        out.push(Triple::new(x.clone(), calbc::mentions_gene(), gene_iri(g)));
    }
    for f in &e.factor_terms {
        let target = resolve_curie(f).unwrap_or_else(|| iri(ns::OBO, &enc_local(&f.replacen(':', "_", 1))));
        out.push(Triple::new(x.clone(), calbc::has_factor(), target));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iexml::parse_document;
    use crate::lexicon::Lexicon;

    const INS: &str = r#"<doc id="1"><s i="0">the <e id="Uniprot:P01308:T028:PRGE">INS gene</e>.</s></doc>"#;

    #[test]
    fn metadata_only_document() {
        let mut doc = AnnotatedDocument::new("42");
        doc.title = "T".into();
        doc.date = "2010".into();
        doc.authors = vec!["Croset S".into()];
        doc.sentences = vec!["No entities.".into()];
        let triples = document_to_triples(&doc);
        assert_eq!(triples.len(), 3 + 2);
        assert_eq!(triples.len(), document_triple_count(&doc));
    }

    #[test]
    fn ins_fragment_triples() {
        let doc = parse_document(INS).unwrap();
        let triples = document_to_triples(&doc);
        assert_eq!(triples.len(), document_triple_count(&doc));
        assert_eq!(triples.len(), 2 + 2 + (2 + 1) + 2);
        let a = AnnotationKey {
            doc_id: "1".into(),
            sentence_index: 0,
            span: doc.annotations[0].text_span,
            group: SemanticGroup::Prge,
        }
        .iri();
        assert!(triples.contains(&Triple::new(a.clone(), calbc::has_label(), Term::str("INS gene"))));
        let p01308 = Iri::new("http://purl.uniprot.org/uniprot/P01308").unwrap();
        assert!(triples.contains(&Triple::new(a, calbc::has_concept(), p01308)));
        assert_eq!(document_to_triples(&doc), triples);
    }

    #[test]
    fn skolem_keys_round_trip() {
        let s = SentenceKey { doc_id: "PMC.1/x y".into(), index: 3, length: 120 };
        assert_eq!(SentenceKey::parse(&s.iri()), Some(s));
        let a = AnnotationKey {
            doc_id: "a.b".into(),
            sentence_index: 2,
            span: Span::new(10, 20),
            group: SemanticGroup::Diso,
        };
        assert_eq!(AnnotationKey::parse(&a.iri()), Some(a.clone()));
        assert_eq!(SentenceKey::parse(&a.iri()), None);
        let other = AnnotationKey { group: SemanticGroup::Spe, ..a.clone() };
        assert_ne!(other.iri(), a.iri());
    }

    #[test]
    fn lexicon_counting() {
        assert!(lexicon_to_triples(&Lexicon::default()).is_empty());
        let lex = Lexicon::from_reader(
            "cluster_id\tgroup\tpreferred\tsurface\tfreq_medline\tfreq_bnc\tconcept_count\tflags\n\
             UniProt:P01308\tPRGE\tinsulin\tinsulin\t5000\t40\t1\t\n\
             UniProt:P01308\tPRGE\tinsulin\tINS gene\t80\t0\t1\t\n"
                .as_bytes(),
        )
        .unwrap();
        let triples = lexicon_to_triples(&lex);
        assert_eq!(triples.len(), 2 + 2 * 3 + 1);
        let preds: Vec<&str> = triples.iter().map(|t| t.predicate.as_str()).collect();
        assert!(preds.contains(&"http://www.ebi.ac.uk/Rebholz/core/lexebi#surfaceForm"));
        assert!(preds.contains(&"http://www.ebi.ac.uk/Rebholz/core/lexebi#frequencyInMedline"));
        let same_as = triples.iter().find(|t| t.predicate == owl::same_as()).unwrap();
        assert_eq!(same_as.object, Term::Iri(protein_iri("P01308")));
    }

    #[test]
    fn protein_counting() {
        let rec = ProteinRecord {
            accession: "P04637".into(),
            species: "9606".into(),
            same_as: vec![("HGNC".into(), "11998".into())],
            go_terms: vec!["GO:0005515".into(), "GO:0006915".into()],
            interactions: vec!["Q00987".into()],
            medline_refs: vec!["12345".into()],
        };
        let triples = protein_to_triples(&rec);
        assert_eq!(triples.len(), 6);
        assert!(triples.iter().any(|t| t.predicate.as_str().ends_with("sameAsHGNC")));
        assert!(triples
            .iter()
            .any(|t| t.object == Term::Iri(Iri::new("http://purl.obolibrary.org/obo/GO_0005515").unwrap())));
        // no reverse interaction is synthesized
        assert_eq!(
            triples.iter().filter(|t| t.predicate == uniprot::interacts_with()).count(),
            1
        );
        let bare = ProteinRecord { accession: "P1".into(), species: "9606".into(), ..Default::default() };
        assert_eq!(protein_to_triples(&bare).len(), 1);
    }

    #[test]
    fn experiment_counting() {
        let empty = ExpressionExperiment { experiment_id: "E-1".into(), ..Default::default() };
        assert!(experiment_to_triples(&empty).is_empty());
        let e = ExpressionExperiment {
            experiment_id: "E-MTAB-62".into(),
            gene_ids: vec!["P04637".into(), "P01308".into(), "ENSEMBL:ENSG00000141510".into()],
            factor_terms: vec!["EFO:0000311".into(), "EFO:0000616".into()],
        };
        assert_eq!(experiment_to_triples(&e).len(), 5);
    }

    #[test]
    fn unknown_sources_fall_back() {
        let c = ConceptRef {
            source: "MyDB".into(),
            concept_id: "X1".into(),
            sem_type: "T028".into(),
            group: SemanticGroup::Prge,
        };
        assert_eq!(concept_iri(&c).as_str(), "http://url_umls#MyDB_X1");
        let doc = parse_document(r#"<doc id="1"><s i="0"><e id="MyDB:X1:T028:PRGE">x</e></s></doc>"#).unwrap();
        assert_eq!(unresolved_sources(&doc), vec!["MyDB".to_string()]);
        assert!(unresolved_sources(&parse_document(INS).unwrap()).is_empty());
    }
}
