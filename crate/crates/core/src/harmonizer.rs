//! Alignment of annotation sets from several annotators, evaluation against
//! a reference, and consensus voting into a silver-standard set.
//!
//! Spans are compared on [`Annotation::text_span`], the markup-free offsets,
//! because raw offsets depend on how many tags each annotator inserted
//! earlier in the sentence.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::group::SemanticGroup;
use crate::iexml::{AnnotatedDocument, Annotation, Span};

/// Annotator id given to harmonized output.
pub const CONSENSUS_ID: &str = "SSC";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatchScheme {
    /// Identical boundaries.
    Exact,
    /// At least one shared character.
    Overlap,
    /// One span contains the other.
    Nested,
}

impl MatchScheme {
    pub const ALL: [MatchScheme; 3] = [MatchScheme::Exact, MatchScheme::Overlap, MatchScheme::Nested];

    pub fn accepts(self, a: &Span, b: &Span) -> bool {
        match self {
            MatchScheme::Exact => a == b,
            MatchScheme::Overlap => a.overlaps(b),
            MatchScheme::Nested => a.nests_with(b),
        }
    }
}

impl FromStr for MatchScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(MatchScheme::Exact),
            "overlap" => Ok(MatchScheme::Overlap),
            "nested" => Ok(MatchScheme::Nested),
            _ => Err(format!("unknown scheme `{s}` (exact, overlap, nested)")),
        }
    }
}

impl fmt::Display for MatchScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchScheme::Exact => "exact",
            MatchScheme::Overlap => "overlap",
            MatchScheme::Nested => "nested",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryRule {
    /// The span proposed most often; ties go to the longest, then leftmost.
    MostFrequent,
    /// The longest proposed span; ties go to the leftmost.
    Longest,
}

impl FromStr for BoundaryRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "most-frequent" | "mostfrequent" => Ok(BoundaryRule::MostFrequent),
            "longest" => Ok(BoundaryRule::Longest),
            _ => Err(format!("unknown boundary rule `{s}` (most-frequent, longest)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonizationConfig {
    pub scheme: MatchScheme,
    pub vote_threshold: usize,
    pub boundary_rule: BoundaryRule,
}

impl HarmonizationConfig {
    pub fn new(scheme: MatchScheme, vote_threshold: usize) -> Self {
        HarmonizationConfig {
            scheme,
            vote_threshold,
            boundary_rule: BoundaryRule::MostFrequent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarmonizeError {
    #[error("annotation sets disagree on semantic group ({0} vs {1})")]
    GroupMismatch(SemanticGroup, SemanticGroup),
    #[error("vote threshold {threshold} must be between 1 and the number of sets ({sets})")]
    InvalidThreshold { threshold: usize, sets: usize },
    #[error("harmonization needs at least two annotation sets, got {0}")]
    TooFewSets(usize),
    #[error("annotator `{0}` has no annotations to infer a semantic group from")]
    NoGroup(String),
}

/// One annotator's annotations of a single semantic group, per document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSet {
    pub annotator_id: String,
    pub group: SemanticGroup,
    pub documents: BTreeMap<String, Vec<Annotation>>,
}

impl AnnotationSet {
    pub fn new(annotator_id: impl Into<String>, group: SemanticGroup) -> Self {
        AnnotationSet {
            annotator_id: annotator_id.into(),
            group,
            documents: BTreeMap::new(),
        }
    }

    /// Collects the annotations of `docs`. With `group` given, annotations of
    /// other groups are ignored; otherwise all annotations must share one group.
    pub fn from_documents(
        annotator_id: impl Into<String>,
        docs: &[AnnotatedDocument],
        group: Option<SemanticGroup>,
    ) -> Result<Self, HarmonizeError> {
        let annotator_id = annotator_id.into();
        let group = match group {
            Some(g) => g,
            None => {
                let first = docs
                    .iter()
                    .flat_map(|d| d.annotations.first())
                    .next()
                    .ok_or_else(|| HarmonizeError::NoGroup(annotator_id.clone()))?
                    .group;
                if let Some(other) = docs.iter().flat_map(|d| &d.annotations).find(|a| a.group != first) {
                    return Err(HarmonizeError::GroupMismatch(first, other.group));
                }
                first
            }
        };
        let mut set = AnnotationSet::new(annotator_id, group);
        for d in docs {
            set.documents.insert(
                d.doc_id.clone(),
                d.annotations.iter().filter(|a| a.group == group).cloned().collect(),
            );
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.documents.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn doc(&self, doc_id: &str) -> &[Annotation] {
        self.documents.get(doc_id).map_or(&[], Vec::as_slice)
    }
}

/// Indices of two matched annotations within one document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MatchedPair {
    pub doc_id: String,
    pub left: usize,
    pub right: usize,
}

fn alignment_order(anns: &[Annotation]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..anns.len()).collect();
    order.sort_by_key(|&i| (anns[i].sentence_index, anns[i].text_span.start, anns[i].text_span.end, i));
    order
}

/// Greedy leftmost-first one-to-one matching of two annotation lists from
/// the same document. Returns (left, right) index pairs in left order.
pub fn align_annotations(left: &[Annotation], right: &[Annotation], scheme: MatchScheme) -> Vec<(usize, usize)> {
    let mut right_by_sentence: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for j in alignment_order(right) {
        right_by_sentence.entry(right[j].sentence_index).or_default().push(j);
    }
    let mut used = vec![false; right.len()];
    let mut pairs = Vec::new();
    for i in alignment_order(left) {
        let a = &left[i];
        let Some(candidates) = right_by_sentence.get(&a.sentence_index) else {
            continue;
        };
        if let Some(&j) = candidates
            .iter()
            .find(|&&j| !used[j] && scheme.accepts(&a.text_span, &right[j].text_span))
        {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

fn check_groups(a: &AnnotationSet, b: &AnnotationSet) -> Result<(), HarmonizeError> {
    if a.group != b.group {
        return Err(HarmonizeError::GroupMismatch(a.group, b.group));
    }
    Ok(())
}

fn doc_ids<'a>(sets: impl IntoIterator<Item = &'a AnnotationSet>) -> BTreeSet<&'a str> {
    sets.into_iter()
        .flat_map(|s| s.documents.keys().map(String::as_str))
        .collect()
}

/// Pairwise alignment of two sets of the same group, document by document.
pub fn align_pair(a: &AnnotationSet, b: &AnnotationSet, scheme: MatchScheme) -> Result<Vec<MatchedPair>, HarmonizeError> {
    check_groups(a, b)?;
    let mut out = Vec::new();
    for doc_id in doc_ids([a, b]) {
        out.extend(
            align_annotations(a.doc(doc_id), b.doc(doc_id), scheme)
                .into_iter()
                .map(|(left, right)| MatchedPair {
                    doc_id: doc_id.to_string(),
                    left,
                    right,
                }),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl EvalResult {
    /// Scores from match counts. Both sets empty scores 1 throughout; any
    /// other zero denominator scores 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        if tp + fp == 0 && tp + fn_ == 0 {
            return EvalResult { precision: 1.0, recall: 1.0, f_measure: 1.0, tp, fp, fn_ };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        EvalResult {
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            // equals 2PR/(P+R), and 0 when tp = 0
            f_measure: ratio(2 * tp, 2 * tp + fp + fn_),
            tp,
            fp,
            fn_,
        }
    }
}

pub fn evaluate(candidate: &AnnotationSet, reference: &AnnotationSet, scheme: MatchScheme) -> Result<EvalResult, HarmonizeError> {
    let tp = align_pair(candidate, reference, scheme)?.len();
    Ok(EvalResult::from_counts(tp, candidate.len() - tp, reference.len() - tp))
}

/// Keeps, per annotator, the submission with the highest F-measure against
/// `reference`; earlier submissions win ties. Output follows the order in
/// which annotators first appear.
pub fn select_best(
    submissions: &[AnnotationSet],
    reference: &AnnotationSet,
    scheme: MatchScheme,
) -> Result<Vec<(AnnotationSet, EvalResult)>, HarmonizeError> {
    let mut best: Vec<(usize, EvalResult)> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (i, sub) in submissions.iter().enumerate() {
        let score = evaluate(sub, reference, scheme)?;
        match slot.get(sub.annotator_id.as_str()) {
            Some(&k) => {
                if score.f_measure > best[k].1.f_measure {
                    best[k] = (i, score);
                }
            }
            None => {
                slot.insert(&sub.annotator_id, best.len());
                best.push((i, score));
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|(i, score)| (submissions[i].clone(), score))
        .collect())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

fn choose_span(spans: &[Span], rule: BoundaryRule) -> Span {
    let mut counts: BTreeMap<Span, usize> = BTreeMap::new();
    for s in spans {
        *counts.entry(*s).or_default() += 1;
    }
    let key = |(span, count): (&Span, &usize)| match rule {
        BoundaryRule::MostFrequent => (*count, span.len(), Reverse(span.start)),
        BoundaryRule::Longest => (0, span.len(), Reverse(span.start)),
    };
    counts
        .iter()
        .max_by_key(|&e| key(e))
        .map(|(s, _)| *s)
        .expect("clusters are never empty")
}

/// Consensus annotations of one document. `docs[k]` holds the annotations of
/// the k-th set; sets are expected in canonical (annotator id) order.
pub fn harmonize_document(docs: &[&[Annotation]], cfg: &HarmonizationConfig) -> Vec<Annotation> {
    let offsets: Vec<usize> = docs
        .iter()
        .scan(0, |acc, d| {
            let start = *acc;
            *acc += d.len();
            Some(start)
        })
        .collect();
    let total: usize = docs.iter().map(|d| d.len()).sum();
    let mut uf = UnionFind::new(total);
    for i in 0..docs.len() {
        for j in i + 1..docs.len() {
            for (l, r) in align_annotations(docs[i], docs[j], cfg.scheme) {
                uf.union(offsets[i] + l, offsets[j] + r);
            }
        }
    }

    let mut clusters: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (set, anns) in docs.iter().enumerate() {
        for k in 0..anns.len() {
            clusters.entry(uf.find(offsets[set] + k)).or_default().push((set, k));
        }
    }

    let mut out: Vec<Annotation> = clusters
        .into_values()
        .filter(|members| {
            members.iter().map(|&(set, _)| set).collect::<BTreeSet<_>>().len() >= cfg.vote_threshold
        })
        .map(|members| {
            let spans: Vec<Span> = members.iter().map(|&(s, k)| docs[s][k].text_span).collect();
            let chosen = choose_span(&spans, cfg.boundary_rule);
            let &(s, k) = members
                .iter()
                .find(|&&(s, k)| docs[s][k].text_span == chosen)
                .expect("chosen span comes from a member");
            docs[s][k].clone()
        })
        .collect();
    out.sort_by_key(|a| (a.sentence_index, a.text_span.start, Reverse(a.text_span.end), a.span.start));
    out
}

/// Votes a consensus set out of several annotators' sets.
pub fn harmonize(sets: &[AnnotationSet], cfg: &HarmonizationConfig) -> Result<AnnotationSet, HarmonizeError> {
    if sets.len() < 2 {
        return Err(HarmonizeError::TooFewSets(sets.len()));
    }
    for s in &sets[1..] {
        check_groups(&sets[0], s)?;
    }
    if cfg.vote_threshold == 0 || cfg.vote_threshold > sets.len() {
        return Err(HarmonizeError::InvalidThreshold {
            threshold: cfg.vote_threshold,
            sets: sets.len(),
        });
    }
    let mut ordered: Vec<&AnnotationSet> = sets.iter().collect();
    ordered.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id));

    let mut out = AnnotationSet::new(CONSENSUS_ID, sets[0].group);
    for doc_id in doc_ids(sets.iter()) {
        let per_set: Vec<&[Annotation]> = ordered.iter().map(|s| s.doc(doc_id)).collect();
        out.documents
            .insert(doc_id.to_string(), harmonize_document(&per_set, cfg));
    }
    Ok(out)
}

/// Renders a consensus set into documents, taking metadata and sentence text
/// from `base`. Returns the documents and the number of annotations that
/// could not be placed because they cross another annotation.
pub fn render_consensus(base: &[AnnotatedDocument], consensus: &AnnotationSet) -> (Vec<AnnotatedDocument>, usize) {
    let mut dropped = 0;
    let docs = base
        .iter()
        .map(|d| {
            let mut doc = d.clone();
            let plain = d.plain_sentences();
            let anns = consensus.documents.get(&d.doc_id).cloned().unwrap_or_default();
            dropped += doc.set_content(&plain, anns).len();
            doc
        })
        .collect();
    (docs, dropped)
}
