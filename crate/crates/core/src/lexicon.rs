//! Terminological resource: concept clusters with their term variants and
//! frequency features, plus specificity-based sense ranking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use bitflags::bitflags;

use crate::group::SemanticGroup;

bitflags! {
    /// Known polysemy classes of a term variant.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct PolysemyFlags: u8 {
        /// Also a general-English word (`GEN`).
        const GENERAL_ENGLISH = 1;
        /// Used as a hypernym, e.g. a generic enzyme name (`HYP`).
        const HYPERNYM = 1 << 1;
        /// Shared by orthologous or homologous genes (`ORT`).
        const ORTHOLOG = 1 << 2;
        /// Has an alternative biomedical meaning (`ALT`).
        const ALT_BIOMEDICAL = 1 << 3;
    }
}

const FLAG_CODES: [(&str, PolysemyFlags); 4] = [
    ("GEN", PolysemyFlags::GENERAL_ENGLISH),
    ("HYP", PolysemyFlags::HYPERNYM),
    ("ORT", PolysemyFlags::ORTHOLOG),
    ("ALT", PolysemyFlags::ALT_BIOMEDICAL),
];

impl PolysemyFlags {
    pub fn parse_codes(s: &str) -> Result<Self, String> {
        let mut flags = PolysemyFlags::empty();
        for code in s.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let (_, f) = FLAG_CODES
                .iter()
                .find(|(c, _)| *c == code)
                .ok_or_else(|| format!("unknown polysemy flag `{code}`"))?;
            flags |= *f;
        }
        Ok(flags)
    }

    pub fn codes(self) -> String {
        FLAG_CODES
            .iter()
            .filter(|(_, f)| self.contains(*f))
            .map(|(c, _)| *c)
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variant {
    pub surface: String,
    pub freq_medline: u64,
    pub freq_bnc: u64,
    /// Number of concept ids sharing this surface form.
    pub concept_count: u64,
    pub polysemy_flags: PolysemyFlags,
    /// Optional resource features carried through unchanged.
    pub mesh_nodes: Option<u64>,
    pub taxon_ids: Option<u64>,
}

impl Variant {
    pub fn new(surface: impl Into<String>, freq_medline: u64, freq_bnc: u64) -> Self {
        Variant {
            surface: surface.into(),
            freq_medline,
            freq_bnc,
            concept_count: 1,
            polysemy_flags: PolysemyFlags::empty(),
            mesh_nodes: None,
            taxon_ids: None,
        }
    }

    /// Add-one smoothed Medline/BNC frequency ratio.
    pub fn specificity(&self) -> f64 {
        (self.freq_medline as f64 + 1.0) / (self.freq_bnc as f64 + 1.0)
    }

    /// Exact comparison of [`Variant::specificity`] by cross-multiplication.
    pub fn cmp_specificity(&self, other: &Variant) -> Ordering {
        let lhs = (u128::from(self.freq_medline) + 1) * (u128::from(other.freq_bnc) + 1);
        let rhs = (u128::from(other.freq_medline) + 1) * (u128::from(self.freq_bnc) + 1);
        lhs.cmp(&rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexicalEntry {
    /// Reference to the primary resource, e.g. `UniProt:P01308`.
    pub cluster_id: String,
    pub group: SemanticGroup,
    pub preferred_term: String,
    pub variants: Vec<Variant>,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: cluster `{cluster_id}` appears in more than one block")]
    DuplicateCluster { line: usize, cluster_id: String },
    #[error("no lexicon entry has the surface form `{0}`")]
    UnknownSurface(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupStats {
    pub clusters: usize,
    pub variants: usize,
    pub unique_surfaces: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LexiconStats {
    pub per_group: BTreeMap<SemanticGroup, GroupStats>,
    pub total: GroupStats,
}

/// A candidate sense for a surface form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sense<'a> {
    pub cluster_id: &'a str,
    pub group: SemanticGroup,
    pub variant: &'a Variant,
    pub score: f64,
}

pub const TSV_HEADER: [&str; 8] = [
    "cluster_id",
    "group",
    "preferred",
    "surface",
    "freq_medline",
    "freq_bnc",
    "concept_count",
    "flags",
];

/// Immutable after loading; safe to share between threads.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexicalEntry>,
    by_cluster: HashMap<String, usize>,
    by_surface: HashMap<String, Vec<(usize, usize)>>,
}

impl Lexicon {
    /// Builds a lexicon, checking the entry invariants.
    pub fn from_entries(entries: Vec<LexicalEntry>) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (n, entry) in entries.into_iter().enumerate() {
            let line = n + 1;
            check_entry(&entry).map_err(|message| LexiconError::Parse { line, message })?;
            if lex.by_cluster.contains_key(&entry.cluster_id) {
                return Err(LexiconError::DuplicateCluster {
                    line,
                    cluster_id: entry.cluster_id,
                });
            }
            lex.push(entry);
        }
        lex.finish();
        Ok(lex)
    }

    fn push(&mut self, entry: LexicalEntry) {
        let e = self.entries.len();
        for (v, variant) in entry.variants.iter().enumerate() {
            self.by_surface
                .entry(variant.surface.clone())
                .or_default()
                .push((e, v));
        }
        self.by_cluster.insert(entry.cluster_id.clone(), e);
        self.entries.push(entry);
    }

    fn finish(&mut self) {
        let entries = &self.entries;
        for hits in self.by_surface.values_mut() {
            hits.sort_by(|a, b| entries[a.0].cluster_id.cmp(&entries[b.0].cluster_id).then(a.1.cmp(&b.1)));
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Reads the tab-separated lexicon format. Rows of one cluster must be
    /// contiguous.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        let mut current: Option<(usize, LexicalEntry)> = None;
        let mut closed: HashSet<String> = HashSet::new();

        let flush = |lex: &mut Lexicon, current: Option<(usize, LexicalEntry)>| -> Result<(), LexiconError> {
            if let Some((line, entry)) = current {
                check_entry(&entry).map_err(|message| LexiconError::Parse { line, message })?;
                lex.push(entry);
            }
            Ok(())
        };

        for (n, line) in reader.lines().enumerate() {
            let line_no = n + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            let parse_err = |message: String| LexiconError::Parse { line: line_no, message };
            if line_no == 1 {
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() < TSV_HEADER.len() || cols[..TSV_HEADER.len()] != TSV_HEADER {
                    return Err(parse_err(format!("expected header `{}`", TSV_HEADER.join("\\t"))));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 8 && cols.len() != 10 {
                return Err(parse_err(format!("expected 8 or 10 columns, found {}", cols.len())));
            }
            let num = |i: usize| -> Result<u64, LexiconError> {
                cols[i]
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| parse_err(format!("column `{}`: `{}` is not a count", column_name(i), cols[i])))
            };
            let cluster_id = cols[0].trim();
            if cluster_id.is_empty() {
                return Err(parse_err("empty cluster_id".into()));
            }
            let group = cols[1].trim().parse::<SemanticGroup>().map_err(|e| parse_err(e.to_string()))?;
            let variant = Variant {
                surface: cols[3].to_string(),
                freq_medline: num(4)?,
                freq_bnc: num(5)?,
                concept_count: num(6)?,
                polysemy_flags: PolysemyFlags::parse_codes(cols[7]).map_err(parse_err)?,
                mesh_nodes: if cols.len() == 10 { Some(num(8)?) } else { None },
                taxon_ids: if cols.len() == 10 { Some(num(9)?) } else { None },
            };

            match &mut current {
                Some((_, entry)) if entry.cluster_id == cluster_id => {
                    if entry.group != group || entry.preferred_term != cols[2] {
                        return Err(parse_err(format!(
                            "cluster `{cluster_id}` changes its group or preferred term"
                        )));
                    }
                    if entry.variants.iter().any(|v| v.surface == variant.surface) {
                        return Err(parse_err(format!(
                            "variant `{}` repeated in cluster `{cluster_id}`",
                            variant.surface
                        )));
                    }
                    entry.variants.push(variant);
                }
                _ => {
                    if closed.contains(cluster_id) {
                        return Err(LexiconError::DuplicateCluster {
                            line: line_no,
                            cluster_id: cluster_id.to_string(),
                        });
                    }
                    if let Some((_, prev)) = &current {
                        closed.insert(prev.cluster_id.clone());
                    }
                    flush(&mut lex, current.take())?;
                    current = Some((
                        line_no,
                        LexicalEntry {
                            cluster_id: cluster_id.to_string(),
                            group,
                            preferred_term: cols[2].to_string(),
                            variants: vec![variant],
                        },
                    ));
                }
            }
        }
        flush(&mut lex, current)?;
        lex.finish();
        Ok(lex)
    }

    pub fn entries(&self) -> &[LexicalEntry] {
        &self.entries
    }

    pub fn get(&self, cluster_id: &str) -> Option<&LexicalEntry> {
        self.by_cluster.get(cluster_id).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact, case-sensitive surface lookup ordered by cluster id.
    pub fn lookup(&self, surface: &str) -> Vec<(&str, &Variant)> {
        self.by_surface
            .get(surface)
            .map(|hits| {
                hits.iter()
                    .map(|&(e, v)| {
                        let entry = &self.entries[e];
                        (entry.cluster_id.as_str(), &entry.variants[v])
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Candidate clusters for `surface`, most specific first. Ties are
    /// broken by cluster id.
    pub fn rank_senses(&self, surface: &str) -> Result<Vec<Sense<'_>>, LexiconError> {
        let hits = self
            .by_surface
            .get(surface)
            .ok_or_else(|| LexiconError::UnknownSurface(surface.to_string()))?;
        let mut senses: Vec<Sense<'_>> = hits
            .iter()
            .map(|&(e, v)| {
                let entry = &self.entries[e];
                let variant = &entry.variants[v];
                Sense {
                    cluster_id: &entry.cluster_id,
                    group: entry.group,
                    variant,
                    score: variant.specificity(),
                }
            })
            .collect();
        senses.sort_by(|a, b| {
            b.variant
                .cmp_specificity(a.variant)
                .then_with(|| a.cluster_id.cmp(b.cluster_id))
        });
        Ok(senses)
    }

    pub fn stats(&self) -> LexiconStats {
        let mut stats = LexiconStats::default();
        let mut surfaces: BTreeMap<SemanticGroup, HashSet<&str>> = BTreeMap::new();
        let mut all: HashSet<&str> = HashSet::new();
        for entry in &self.entries {
            let g = stats.per_group.entry(entry.group).or_default();
            g.clusters += 1;
            g.variants += entry.variants.len();
            let set = surfaces.entry(entry.group).or_default();
            for v in &entry.variants {
                set.insert(&v.surface);
                all.insert(&v.surface);
            }
        }
        for (group, set) in surfaces {
            stats.per_group.entry(group).or_default().unique_surfaces = set.len();
        }
        stats.total = GroupStats {
            clusters: self.entries.len(),
            variants: self.entries.iter().map(|e| e.variants.len()).sum(),
            unique_surfaces: all.len(),
        };
        stats
    }
}

fn column_name(i: usize) -> &'static str {
    match i {
        8 => "mesh_nodes",
        9 => "taxon_ids",
        _ => TSV_HEADER[i],
    }
}

fn check_entry(entry: &LexicalEntry) -> Result<(), String> {
    if entry.cluster_id.is_empty() {
        return Err("empty cluster_id".into());
    }
    if entry.variants.iter().any(|v| v.surface.is_empty()) {
        return Err(format!("cluster `{}` has an empty surface form", entry.cluster_id));
    }
    if !entry.variants.iter().any(|v| v.surface == entry.preferred_term) {
        return Err(format!(
            "preferred term `{}` of cluster `{}` is not among its variants",
            entry.preferred_term, entry.cluster_id
        ));
    }
    Ok(())
}

/// Loads a lexicon file.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    Lexicon::load(path)
}
