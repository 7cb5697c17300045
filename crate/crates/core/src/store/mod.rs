//! In-memory triple store with interned terms and SPO/POS/OSP indexes.

mod ntriples;
mod prefixes;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Bound;
use std::path::Path;
use std::sync::{Arc, RwLock};

pub use ntriples::{format_term, parse_line};
pub use prefixes::PrefixMap;

pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store is closed for writing")]
    StoreClosed,
    #[error("invalid IRI `{0}`")]
    InvalidIri(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An absolute IRI. Never contains whitespace or the characters `<>"{}|^`\`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(iri: impl Into<String>) -> Result<Self, StoreError> {
        let iri = iri.into();
        let bad = iri.is_empty()
            || iri.chars().any(|c| {
                c.is_whitespace()
                    || c.is_control()
                    || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
            });
        if bad {
            Err(StoreError::InvalidIri(iri))
        } else {
            Ok(Iri(iri))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Str(String),
    Int(i64),
}

impl Term {
    pub fn str(s: impl Into<String>) -> Self {
        Term::Str(s.into())
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Term::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Absolute IRI, literal text, or decimal integer.
    pub fn lexical(&self) -> std::borrow::Cow<'_, str> {
        match self {
            Term::Iri(i) => i.as_str().into(),
            Term::Str(s) => s.as_str().into(),
            Term::Int(n) => n.to_string().into(),
        }
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_term(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject,
            predicate,
            object: object.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, format_term(&self.object))
    }
}

/// One slot of a [`TriplePattern`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Var(String),
    Term(Term),
}

impl Slot {
    pub fn var(name: impl Into<String>) -> Self {
        Slot::Var(name.into())
    }

    pub fn as_term(&self) -> Option<&Term> {
        match self {
            Slot::Term(t) => Some(t),
            Slot::Var(_) => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Slot::Var(v) => Some(v),
            Slot::Term(_) => None,
        }
    }
}

impl From<Term> for Slot {
    fn from(t: Term) -> Self {
        Slot::Term(t)
    }
}

impl From<Iri> for Slot {
    fn from(i: Iri) -> Self {
        Slot::Term(Term::Iri(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriplePattern {
    pub subject: Slot,
    pub predicate: Slot,
    pub object: Slot,
}

impl TriplePattern {
    pub fn new(subject: impl Into<Slot>, predicate: impl Into<Slot>, object: impl Into<Slot>) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn slots(&self) -> [&Slot; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    /// True when `t` satisfies the constants and repeated variables of the pattern.
    pub fn matches(&self, t: &Triple) -> bool {
        let values = [Term::Iri(t.subject.clone()), Term::Iri(t.predicate.clone()), t.object.clone()];
        let mut seen: Vec<(&str, &Term)> = Vec::new();
        for (slot, value) in self.slots().into_iter().zip(values.iter()) {
            match slot {
                Slot::Term(c) if c != value => return false,
                Slot::Term(_) => {}
                Slot::Var(v) => match seen.iter().find(|(n, _)| n == v) {
                    Some((_, prev)) if *prev != value => return false,
                    Some(_) => {}
                    None => seen.push((v, value)),
                },
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Identifies one of the three permutation indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Spo,
    Pos,
    Osp,
}

impl IndexKind {
    pub const ALL: [IndexKind; 3] = [IndexKind::Spo, IndexKind::Pos, IndexKind::Osp];

    /// Positions of (s, p, o) inside this index's key.
    fn order(self) -> [usize; 3] {
        match self {
            IndexKind::Spo => [0, 1, 2],
            IndexKind::Pos => [1, 2, 0],
            IndexKind::Osp => [2, 0, 1],
        }
    }

    fn to_key(self, spo: [TermId; 3]) -> [TermId; 3] {
        let o = self.order();
        [spo[o[0]], spo[o[1]], spo[o[2]]]
    }

    fn key_to_spo(self, key: [TermId; 3]) -> [TermId; 3] {
        let o = self.order();
        let mut spo = key;
        for (k, &slot) in o.iter().enumerate() {
            spo[slot] = key[k];
        }
        spo
    }

    /// Number of leading key components bound by the given (s, p, o) mask.
    fn bound_prefix(self, bound: [bool; 3]) -> usize {
        self.order().iter().take_while(|&&slot| bound[slot]).count()
    }

    /// The index with the longest bound key prefix for this slot mask.
    pub fn best_for(bound: [bool; 3]) -> IndexKind {
        match bound {
            [true, _, false] | [true, true, true] | [false, false, false] => IndexKind::Spo,
            [_, true, _] => IndexKind::Pos,
            [_, false, true] => IndexKind::Osp,
        }
    }
}

/// Term dictionary plus three full permutation indexes.
#[derive(Debug, Clone, Default)]
pub struct Store {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    spo: BTreeSet<[TermId; 3]>,
    pos: BTreeSet<[TermId; 3]>,
    osp: BTreeSet<[TermId; 3]>,
    prefixes: PrefixMap,
    closed: bool,
}

/// Single-writer, multi-reader handle.
pub type SharedStore = Arc<RwLock<Store>>;

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn with_prefixes(prefixes: PrefixMap) -> Self {
        Store {
            prefixes,
            ..Store::default()
        }
    }

    pub fn into_shared(self) -> SharedStore {
        Arc::new(RwLock::new(self))
    }

    pub fn prefixes(&self) -> &PrefixMap {
        &self.prefixes
    }

    pub fn set_prefixes(&mut self, prefixes: PrefixMap) {
        self.prefixes = prefixes;
    }

    /// Rejects all further writes.
    pub fn close(&mut self) {
        self.closed = true;
    }

    fn intern(&mut self, term: &Term) -> TermId {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = TermId(u32::try_from(self.terms.len()).expect("term dictionary overflow"));
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }

    pub fn id_of(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.index()]
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Adds `t` to all three indexes; `Ok(false)` if it was already present.
    pub fn insert(&mut self, t: &Triple) -> Result<bool, StoreError> {
        if self.closed {
            return Err(StoreError::StoreClosed);
        }
        let spo = [
            self.intern(&Term::Iri(t.subject.clone())),
            self.intern(&Term::Iri(t.predicate.clone())),
            self.intern(&t.object),
        ];
        if !self.spo.insert(spo) {
            return Ok(false);
        }
        self.pos.insert(IndexKind::Pos.to_key(spo));
        self.osp.insert(IndexKind::Osp.to_key(spo));
        Ok(true)
    }

    /// Inserts every triple, returning how many were new.
    pub fn extend<'a>(&mut self, triples: impl IntoIterator<Item = &'a Triple>) -> Result<usize, StoreError> {
        let mut added = 0;
        for t in triples {
            added += usize::from(self.insert(t)?);
        }
        Ok(added)
    }

    pub fn count(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// Sizes of the SPO, POS and OSP indexes.
    pub fn index_sizes(&self) -> [usize; 3] {
        [self.spo.len(), self.pos.len(), self.osp.len()]
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.resolve(t).is_some_and(|spo| self.spo.contains(&spo))
    }

    fn resolve(&self, t: &Triple) -> Option<[TermId; 3]> {
        Some([
            self.id_of(&Term::Iri(t.subject.clone()))?,
            self.id_of(&Term::Iri(t.predicate.clone()))?,
            self.id_of(&t.object)?,
        ])
    }

    fn index(&self, kind: IndexKind) -> &BTreeSet<[TermId; 3]> {
        match kind {
            IndexKind::Spo => &self.spo,
            IndexKind::Pos => &self.pos,
            IndexKind::Osp => &self.osp,
        }
    }

    /// Id-level lookup through a specific index. Bound slots that form a
    /// prefix of the index key are answered by a range scan; the rest are
    /// filtered.
    pub fn match_ids_with(
        &self,
        kind: IndexKind,
        pattern: [Option<TermId>; 3],
    ) -> impl Iterator<Item = [TermId; 3]> + '_ {
        let bound = pattern.map(|p| p.is_some());
        let prefix_len = kind.bound_prefix(bound);
        let key = kind.to_key(pattern.map(|p| p.unwrap_or(TermId(0))));
        let mut lo = [TermId(0); 3];
        let mut hi = [TermId(u32::MAX); 3];
        lo[..prefix_len].copy_from_slice(&key[..prefix_len]);
        hi[..prefix_len].copy_from_slice(&key[..prefix_len]);
        self.index(kind)
            .range((Bound::Included(lo), Bound::Included(hi)))
            .map(move |&k| kind.key_to_spo(k))
            .filter(move |spo| {
                pattern
                    .iter()
                    .zip(spo.iter())
                    .all(|(want, got)| want.is_none_or(|w| w == *got))
            })
    }

    /// Id-level lookup through the index chosen by the bound slots.
    pub fn match_ids(&self, pattern: [Option<TermId>; 3]) -> impl Iterator<Item = [TermId; 3]> + '_ {
        self.match_ids_with(IndexKind::best_for(pattern.map(|p| p.is_some())), pattern)
    }

    fn pattern_ids(&self, p: &TriplePattern) -> Option<[Option<TermId>; 3]> {
        let mut out = [None; 3];
        for (slot, dst) in p.slots().into_iter().zip(out.iter_mut()) {
            if let Slot::Term(t) = slot {
                *dst = Some(self.id_of(t)?);
            }
        }
        Some(out)
    }

    fn to_triple(&self, spo: [TermId; 3]) -> Triple {
        let iri = |id: TermId| match self.term(id) {
            Term::Iri(i) => i.clone(),
            other => unreachable!("non-IRI {other:?} in subject or predicate position"),
        };
        Triple {
            subject: iri(spo[0]),
            predicate: iri(spo[1]),
            object: self.term(spo[2]).clone(),
        }
    }

    /// All triples matching `p` via the given index, in index order.
    pub fn match_with(&self, kind: IndexKind, p: &TriplePattern) -> Vec<Triple> {
        let Some(ids) = self.pattern_ids(p) else {
            return Vec::new();
        };
        self.match_ids_with(kind, ids)
            .map(|spo| self.to_triple(spo))
            .filter(|t| p.matches(t))
            .collect()
    }

    /// All triples matching `p`, each once, ordered by the chosen index.
    pub fn match_pattern(&self, p: &TriplePattern) -> Vec<Triple> {
        let bound = p.slots().map(|s| matches!(s, Slot::Term(_)));
        self.match_with(IndexKind::best_for(bound), p)
    }

    /// Every triple in SPO id order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&spo| self.to_triple(spo))
    }

    /// Canonical N-Triples text: one line per triple, sorted by the
    /// serialized subject, predicate and object.
    pub fn to_ntriples(&self) -> String {
        let mut lines: Vec<(String, String, String)> = self
            .triples()
            .map(|t| {
                (
                    t.subject.to_string(),
                    t.predicate.to_string(),
                    format_term(&t.object),
                )
            })
            .collect();
        lines.sort();
        let mut out = String::new();
        for (s, p, o) in lines {
            out.push_str(&s);
            out.push(' ');
            out.push_str(&p);
            out.push(' ');
            out.push_str(&o);
            out.push_str(" .\n");
        }
        out
    }

    pub fn from_ntriples(text: &str) -> Result<Self, StoreError> {
        let mut store = Store::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(t) = parse_line(line).map_err(|message| StoreError::Parse { line: n + 1, message })? {
                store.insert(&t)?;
            }
        }
        Ok(store)
    }

    fn prefix_path(path: &Path) -> std::path::PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".prefixes");
        name.into()
    }

    /// Writes the triples to `path` and the prefix map to `<path>.prefixes`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let path = path.as_ref();
        let tmp = {
            let mut name = path.as_os_str().to_owned();
            name.push(".tmp");
            std::path::PathBuf::from(name)
        };
        std::fs::write(&tmp, self.to_ntriples())?;
        std::fs::rename(&tmp, path)?;
        std::fs::write(Self::prefix_path(path), self.prefixes.to_text())?;
        Ok(())
    }

    /// Reads a store written by [`Store::save`]. Without a sidecar prefix
    /// file the default prefix map is used.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let mut store = Self::from_ntriples(&std::fs::read_to_string(path)?)?;
        let sidecar = Self::prefix_path(path);
        if sidecar.exists() {
            store.prefixes = PrefixMap::parse(&std::fs::read_to_string(sidecar)?)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://ex.org/{s}")).unwrap()
    }

    fn t(s: &str, p: &str, o: Term) -> Triple {
        Triple::new(iri(s), iri(p), o)
    }

    #[test]
    fn insert_is_idempotent() {
        let mut store = Store::new();
        let a = t("a", "p", Term::str("x"));
        assert!(store.insert(&a).unwrap());
        assert!(!store.insert(&a).unwrap());
        assert_eq!(store.count(), 1);
        store.insert(&t("a", "p", Term::Int(1))).unwrap();
        store.insert(&t("b", "p", Term::Iri(iri("a")))).unwrap();
        assert_eq!(store.count(), 3);
        assert_eq!(store.index_sizes(), [3, 3, 3]);
    }

    #[test]
    fn fresh_store_is_empty() {
        assert_eq!(Store::new().count(), 0);
    }

    #[test]
    fn closed_store_rejects_writes() {
        let mut store = Store::new();
        store.close();
        assert!(matches!(
            store.insert(&t("a", "p", Term::Int(1))),
            Err(StoreError::StoreClosed)
        ));
    }

    #[test]
    fn match_bound_and_unbound() {
        let mut store = Store::new();
        let a = t("a", "p", Term::str("x"));
        let b = t("b", "p", Term::str("x"));
        let c = t("a", "q", Term::Iri(iri("b")));
        store.extend([&a, &b, &c]).unwrap();
        let all = TriplePattern::new(Slot::var("s"), Slot::var("p"), Slot::var("o"));
        assert_eq!(store.match_pattern(&all).len(), 3);
        let exact = TriplePattern::new(iri("a"), iri("p"), Term::str("x"));
        assert_eq!(store.match_pattern(&exact), vec![a.clone()]);
        let by_obj = TriplePattern::new(Slot::var("s"), iri("p"), Term::str("x"));
        assert_eq!(store.match_pattern(&by_obj).len(), 2);
        let missing = TriplePattern::new(Slot::var("s"), iri("nope"), Slot::var("o"));
        assert!(store.match_pattern(&missing).is_empty());
        for kind in IndexKind::ALL {
            assert_eq!(store.match_with(kind, &by_obj).len(), 2);
        }
    }

    #[test]
    fn repeated_variables_must_agree() {
        let mut store = Store::new();
        store.insert(&t("a", "p", Term::Iri(iri("a")))).unwrap();
        store.insert(&t("a", "p", Term::Iri(iri("b")))).unwrap();
        let pat = TriplePattern::new(Slot::var("x"), Slot::var("p"), Slot::var("x"));
        assert_eq!(store.match_pattern(&pat).len(), 1);
    }

    #[test]
    fn index_choice() {
        assert_eq!(IndexKind::best_for([true, true, false]), IndexKind::Spo);
        assert_eq!(IndexKind::best_for([false, true, true]), IndexKind::Pos);
        assert_eq!(IndexKind::best_for([true, false, true]), IndexKind::Osp);
        assert_eq!(IndexKind::best_for([false, false, true]), IndexKind::Osp);
        assert_eq!(IndexKind::best_for([false, true, false]), IndexKind::Pos);
        for kind in IndexKind::ALL {
            let key = [TermId(1), TermId(2), TermId(3)];
            assert_eq!(kind.key_to_spo(kind.to_key(key)), key);
        }
    }

    #[test]
    fn invalid_iris() {
        assert!(Iri::new("").is_err());
        assert!(Iri::new("http://a b").is_err());
        assert!(Iri::new("http://a>b").is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.nt");
        let mut store = Store::new();
        store.insert(&t("b", "p", Term::str("quote \" back \\ nl \n"))).unwrap();
        store.insert(&t("a", "p", Term::Int(-42))).unwrap();
        store.insert(&t("a", "q", Term::Iri(iri("b")))).unwrap();
        store.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let loaded = Store::load(&path).unwrap();
        assert_eq!(loaded.count(), 3);
        assert_eq!(loaded.to_ntriples(), text);
        assert!(text.starts_with("<http://ex.org/a> <http://ex.org/p> \"-42\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n"));
        for tr in store.triples() {
            assert!(loaded.contains(&tr));
        }
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.nt");
        Store::new().save(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        assert_eq!(Store::load(&path).unwrap().count(), 0);
    }

    #[test]
    fn malformed_line_names_the_line() {
        let text = "<http://a> <http://b> \"c\" .\n<http://a> <http://b> oops .\n";
        match Store::from_ntriples(text) {
            Err(StoreError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn readers_run_concurrently() {
        let mut store = Store::new();
        for i in 0..100 {
            store.insert(&t(&format!("s{i}"), "p", Term::Int(i))).unwrap();
        }
        let shared = store.into_shared();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let s = shared.clone();
                std::thread::spawn(move || {
                    let guard = s.read().unwrap();
                    guard
                        .match_pattern(&TriplePattern::new(Slot::var("s"), iri("p"), Slot::var("o")))
                        .len()
                })
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), 100);
        }
        shared.write().unwrap().insert(&t("x", "p", Term::Int(0))).unwrap();
        assert_eq!(shared.read().unwrap().count(), 101);
    }
}
