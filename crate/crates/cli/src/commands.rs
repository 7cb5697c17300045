//! Command bodies. Each returns the text for standard output, or a
//! [`Failure`] carrying the exit code and the diagnostic.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};
use std::fs::{File, OpenOptions};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use calbc_core::harmonizer::{render_consensus, BoundaryRule, HarmonizationConfig, MatchScheme};
use calbc_core::query::{format_tsv, parse_query_with, Scope};
use calbc_core::rdfizer::vocab::{calbc, dc, lexebi};
use calbc_core::rdfizer::{group_iri, parse_experiments, parse_proteins, unresolved_sources};
use calbc_core::{
    document_to_triples, evaluate, experiment_to_triples, harmonize as vote, lexicon_to_triples, parse_corpus,
    protein_to_triples, serialize_corpus, AnnotatedDocument, AnnotationSet, Iri, Lexicon, PrefixMap,
    QueryError, SemanticGroup, Store, Term, Triple,
};

use crate::Format;

pub const EXIT_DATA: u8 = 1;
pub const EXIT_SYNTAX: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    /// Output produced before the failure, still printed.
    pub partial: String,
}

impl Failure {
    pub fn data(message: impl fmt::Display) -> Self {
        Failure { code: EXIT_DATA, message: message.to_string(), partial: String::new() }
    }

    fn syntax(message: impl fmt::Display) -> Self {
        Failure { code: EXIT_SYNTAX, message: message.to_string(), partial: String::new() }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

/// Default prefixes with the entries of `path` layered on top.
pub fn load_prefixes(path: Option<&Path>) -> Result<Option<PrefixMap>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let extra = PrefixMap::parse(&read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let mut map = PrefixMap::default();
    for (p, base) in extra.iter() {
        map.insert(p, base);
    }
    Ok(Some(map))
}

/// Advisory lock on `<store>.lock`, released on drop.
struct StoreLock(#[allow(dead_code)] File);

impl StoreLock {
    fn acquire(store: &Path, exclusive: bool) -> Result<Self, Failure> {
        let mut name = store.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        let fail = |e: io::Error| Failure::data(format!("{}: {e}", path.display()));
        let file = OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(fail)?;
        if exclusive { file.lock() } else { file.lock_shared() }.map_err(fail)?;
        Ok(StoreLock(file))
    }
}

fn open_store(path: &Path) -> Result<(Store, StoreLock), Failure> {
    if !path.exists() {
        return Err(Failure::data(format!("{}: no such store", path.display())));
    }
    let lock = StoreLock::acquire(path, false)?;
    let store = Store::load(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Ok((store, lock))
}

fn file_triples(format: Format, path: &Path) -> Result<Vec<Triple>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    match format {
        Format::Iexml => {
            let docs = parse_corpus(&text).map_err(|e| e.to_string())?;
            let mut out = Vec::new();
            for d in &docs {
                let unknown = unresolved_sources(d);
                if !unknown.is_empty() {
                    eprintln!(
                        "calbc: {}: document {}: unknown concept sources {}, kept as umls fallbacks",
                        path.display(),
                        d.doc_id,
                        unknown.join(", ")
                    );
                }
                out.extend(document_to_triples(d));
            }
            Ok(out)
        }
        Format::Lexicon => {
            let lex = Lexicon::from_reader(text.as_bytes()).map_err(|e| e.to_string())?;
            Ok(lexicon_to_triples(&lex))
        }
        Format::Uniprot => Ok(parse_proteins(&text)
            .map_err(|e| e.to_string())?
            .iter()
            .flat_map(protein_to_triples)
            .collect()),
        Format::Atlas => Ok(parse_experiments(&text)
            .map_err(|e| e.to_string())?
            .iter()
            .flat_map(experiment_to_triples)
            .collect()),
    }
}

/// Adds each file's triples to the store. A file that fails to parse adds
/// nothing; the rest still go in and the command exits 1.
pub fn ingest(format: Format, store_path: &Path, files: &[PathBuf], prefixes: Option<&PrefixMap>) -> Result<String, Failure> {
    let _lock = StoreLock::acquire(store_path, true)?;
    let mut store = if store_path.exists() {
        Store::load(store_path).map_err(|e| Failure::data(format!("{}: {e}", store_path.display())))?
    } else {
        Store::new()
    };
    if let Some(p) = prefixes {
        store.set_prefixes(p.clone());
    }

    let mut out = String::new();
    let mut errors = Vec::new();
    let mut committed = 0usize;
    let mut total = 0usize;
    for path in files {
        match file_triples(format, path) {
            Ok(triples) => {
                let mut added = 0;
                for t in &triples {
                    if store.insert(t).map_err(Failure::data)? {
                        added += 1;
                    }
                }
                committed += 1;
                total += added;
                let _ = writeln!(out, "{}\t{added}", path.display());
            }
            Err(e) => errors.push(format!("{}: {e}", path.display())),
        }
    }
    if committed > 0 {
        store.save(store_path).map_err(|e| Failure::data(format!("{}: {e}", store_path.display())))?;
    }
    let _ = writeln!(out, "total\t{total}");
    if errors.is_empty() {
        Ok(out)
    } else {
        let mut f = Failure::data(format!("{} of {} files not ingested\n{}", errors.len(), files.len(), errors.join("\n")));
        f.partial = out;
        Err(f)
    }
}

/// Writes the consensus corpus to `out` and the per-annotator report
/// against it to `<out>.report.tsv`; the report is also returned.
pub fn harmonize(
    files: &[PathBuf],
    scheme: MatchScheme,
    threshold: usize,
    boundary: BoundaryRule,
    group: Option<SemanticGroup>,
    out: &Path,
) -> Result<String, Failure> {
    let mut sets = Vec::new();
    let mut base: Vec<AnnotatedDocument> = Vec::new();
    let mut seen_docs = HashSet::new();
    let mut seen_ids = HashSet::new();
    for path in files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Failure::data(format!("{}: no file name", path.display())))?;
        if !seen_ids.insert(id.clone()) {
            return Err(Failure::data(format!("{}: annotator id `{id}` used twice", path.display())));
        }
        let docs = parse_corpus(&read(path)?).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        let set = AnnotationSet::from_documents(id, &docs, group)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        for d in docs {
            if seen_docs.insert(d.doc_id.clone()) {
                base.push(d);
            }
        }
        sets.push(set);
    }

    let cfg = HarmonizationConfig { scheme, vote_threshold: threshold, boundary_rule: boundary };
    let consensus = vote(&sets, &cfg).map_err(Failure::data)?;
    let (docs, dropped) = render_consensus(&base, &consensus);
    if dropped > 0 {
        eprintln!("calbc: {dropped} consensus annotations cross another annotation and were left out of {}", out.display());
    }
    std::fs::write(out, serialize_corpus(&docs)).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;

    let mut report = String::from("annotator_id\tgroup\tprecision\trecall\tf_measure\ttp\tfp\tfn\n");
    for set in &sets {
        let r = evaluate(set, &consensus, scheme).map_err(Failure::data)?;
        let _ = writeln!(
            report,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
            set.annotator_id, set.group, r.precision, r.recall, r.f_measure, r.tp, r.fp, r.fn_
        );
    }
    let mut report_path = out.as_os_str().to_owned();
    report_path.push(".report.tsv");
    let report_path = PathBuf::from(report_path);
    std::fs::write(&report_path, &report).map_err(|e| Failure::data(format!("{}: {e}", report_path.display())))?;
    Ok(report)
}

pub fn query(store_path: &Path, file: Option<&Path>, prefixes: Option<&PrefixMap>) -> Result<String, Failure> {
    let text = match file {
        Some(p) => read(p)?,
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Failure::data(format!("standard input: {e}")))?;
            s
        }
    };
    let (store, _lock) = open_store(store_path)?;
    let base = prefixes.unwrap_or(store.prefixes());
    // every error found before evaluation is a fault in the query text
    let q = parse_query_with(&text, base).map_err(Failure::syntax)?;
    let rows = calbc_core::execute(&q, &store).map_err(|e| match e {
        QueryError::Syntax { .. } | QueryError::UnknownPrefix(_) | QueryError::UnboundOrderVariable(_) => {
            Failure::syntax(e)
        }
        QueryError::MissingPositionTriples => Failure::data(e),
    })?;
    Ok(format_tsv(&q.projection(), &rows, &q.prefixes))
}

fn distinct_subjects(store: &Store, predicate: Iri) -> usize {
    let Some(p) = store.id_of(&Term::Iri(predicate)) else { return 0 };
    store
        .match_ids([None, Some(p), None])
        .map(|[s, _, _]| s)
        .collect::<BTreeSet<_>>()
        .len()
}

fn count_matches(store: &Store, predicate: Iri, object: Term) -> usize {
    match (store.id_of(&Term::Iri(predicate)), store.id_of(&object)) {
        (Some(p), Some(o)) => store.match_ids([None, Some(p), Some(o)]).count(),
        _ => 0,
    }
}

pub fn stats(store_path: &Path) -> Result<String, Failure> {
    let (store, _lock) = open_store(store_path)?;
    let mut out = String::new();
    let _ = writeln!(out, "triples\t{}", store.count());
    let _ = writeln!(out, "documents\t{}", distinct_subjects(&store, dc::title()));
    let _ = writeln!(out, "lexicon_clusters\t{}", distinct_subjects(&store, lexebi::preferred_term()));
    for g in SemanticGroup::ALL {
        let n = count_matches(&store, calbc::has_group(), Term::Iri(group_iri(g)));
        let _ = writeln!(out, "{g}\t{n}");
    }
    Ok(out)
}

pub fn cooccur(store_path: &Path, group_a: SemanticGroup, group_b: SemanticGroup, scope: Scope) -> Result<String, Failure> {
    let (store, _lock) = open_store(store_path)?;
    let hits = calbc_core::cooccur(&store, group_a, group_b, scope).map_err(Failure::data)?;
    let mut out = String::from("doc_id\tsentence_index\tlabel_a\tlabel_b\tconfidence\n");
    for h in hits {
        let sentence = h.sentence_index.map(|i| i.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{}\t{sentence}\t{}\t{}\t{}", h.doc_id, clean(&h.a.label), clean(&h.b.label), h.confidence);
    }
    Ok(out)
}

/// Keeps labels on one TSV cell.
fn clean(label: &str) -> String {
    label.replace(['\t', '\n', '\r'], " ")
}
