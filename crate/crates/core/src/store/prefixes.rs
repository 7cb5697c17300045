use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Iri, StoreError};

/// Namespaces used for the corpus, lexicon and database vocabularies.
pub const DEFAULT_PREFIXES: &[(&str, &str)] = &[
    ("lexebi", "http://www.ebi.ac.uk/Rebholz/core/lexebi#"),
    ("xsd", "http://www.w3.org/2001/XMLSchema#"),
    ("owl", "http://www.w3.org/2002/07/owl#"),
    ("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("ebi", "http://www.ebi.ac.uk/Rebholz/core/"),
    ("obo", "http://purl.obolibrary.org/obo/"),
    ("expasy", "http://www.expasy.org/enzyme/"),
    ("taxo", "http://purl.org/obo/owl/NCBITaxon#"),
    ("interpro", "http://www.ebi.ac.uk/interpro/"),
    ("umls", "http://url_umls#"),
    ("uniprot", "http://purl.uniprot.org/uniprot/"),
    ("pubmed", "http://www.ncbi.nlm.nih.gov/pubmed/"),
    ("dc", "http://purl.org/dc/elements/1.1/"),
    ("calbc", "http://www.ebi.ac.uk/Rebholz/core/calbc#"),
    ("_node", "urn:calbc:node:"),
];

/// Prefix name to namespace IRI mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMap {
    map: BTreeMap<String, String>,
}

impl Default for PrefixMap {
    fn default() -> Self {
        PrefixMap {
            map: DEFAULT_PREFIXES
                .iter()
                .map(|(p, b)| (p.to_string(), b.to_string()))
                .collect(),
        }
    }
}

fn local_is_printable(local: &str) -> bool {
    !local.ends_with('.')
        && !local.starts_with(['.', '-'])
        && local
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '%'))
}

impl PrefixMap {
    pub fn empty() -> Self {
        PrefixMap { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, prefix: impl Into<String>, base: impl Into<String>) {
        self.map.insert(prefix.into(), base.into());
    }

    pub fn get(&self, prefix: &str) -> Option<&str> {
        self.map.get(prefix).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(p, b)| (p.as_str(), b.as_str()))
    }

    /// `prefix:local` as an absolute IRI.
    pub fn expand(&self, prefix: &str, local: &str) -> Option<Result<Iri, StoreError>> {
        self.get(prefix).map(|base| Iri::new(format!("{base}{local}")))
    }

    /// Expands `prefix:local`, panicking on an unregistered prefix. For
    /// vocabulary terms built into this crate.
    pub fn iri(&self, prefix: &str, local: &str) -> Iri {
        match self.expand(prefix, local) {
            Some(Ok(iri)) => iri,
            _ => panic!("cannot expand {prefix}:{local}"),
        }
    }

    /// Shortest prefixed form of `iri`, if any namespace matches.
    pub fn compact(&self, iri: &Iri) -> Option<String> {
        self.map
            .iter()
            .filter_map(|(p, base)| {
                let local = iri.as_str().strip_prefix(base.as_str())?;
                local_is_printable(local).then_some((base.len(), p, local))
            })
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, p, local)| format!("{p}:{local}"))
    }

    /// `PREFIX name: <iri>` lines, one per entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, b) in &self.map {
            let _ = writeln!(out, "PREFIX {p}: <{b}>");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, StoreError> {
        let mut map = PrefixMap::empty();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| StoreError::Parse {
                line: n + 1,
                message: message.to_string(),
            };
            let rest = line
                .strip_prefix("PREFIX")
                .or_else(|| line.strip_prefix("@prefix"))
                .ok_or_else(|| err("expected `PREFIX name: <iri>`"))?
                .trim_start();
            let colon = rest.find(':').ok_or_else(|| err("missing `:` after prefix name"))?;
            let name = &rest[..colon];
            let iri = rest[colon + 1..]
                .trim()
                .trim_end_matches('.')
                .trim()
                .strip_prefix('<')
                .and_then(|r| r.strip_suffix('>'))
                .ok_or_else(|| err("expected `<iri>`"))?;
            Iri::new(iri).map_err(|_| err("invalid IRI"))?;
            map.insert(name, iri);
        }
        Ok(map)
    }
}
