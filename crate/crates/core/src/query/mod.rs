//! Basic-graph-pattern queries and entity co-occurrence over a [`Store`].
//!
//! The accepted language is `PREFIX` declarations, `SELECT *` or a
//! variable list, a `WHERE` block of `.`-separated triple patterns with
//! bracketed property lists, and an optional `ORDER BY [ASC|DESC](?v)`.
//! Each bracket introduces a fresh variable `?_b0`, `?_b1`, … in reading
//! order; these are hidden from `SELECT *` and may not be written by hand.

mod cooccur;
mod parser;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::store::{format_term, PrefixMap, Slot, Store, Term, TermId, TriplePattern};

pub use cooccur::{cooccur, Confidence, CooccurrenceHit, HitEntity, Scope};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        /// Byte offset into the query text.
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown prefix `{0}:`")]
    UnknownPrefix(String),
    #[error("ORDER BY variable ?{0} is not bound by any pattern")]
    UnboundOrderVariable(String),
    #[error("store has no sentence-level position triples (calbc:hasEntity); ingest IeXML documents first or use document scope")]
    MissingPositionTriples,
}

impl QueryError {
    fn syntax(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let before = &src[..offset.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
        QueryError::Syntax {
            offset,
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Select {
    All,
    Vars(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    /// Base prefixes merged with the query's own declarations.
    pub prefixes: PrefixMap,
    pub select: Select,
    /// Patterns after bracket desugaring.
    pub patterns: Vec<TriplePattern>,
    pub order_by: Option<(String, Order)>,
    /// Top-level subject statements in the `WHERE` block.
    pub statements: usize,
    /// User variables in order of first appearance.
    pub variables: Vec<String>,
}

impl Query {
    /// Column names of the result, in output order.
    pub fn projection(&self) -> Vec<String> {
        match &self.select {
            Select::All => self.variables.clone(),
            Select::Vars(v) => v.clone(),
        }
    }

    /// Every variable in the patterns, fresh ones included.
    pub fn pattern_variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.patterns {
            for s in p.slots() {
                if let Slot::Var(v) = s {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }

    /// Replaces every occurrence of the constant `from` by `to`.
    pub fn substitute(&mut self, from: &Term, to: &Term) {
        for p in &mut self.patterns {
            let [s, pr, o] = p.slots().map(|s| match s {
                Slot::Term(t) if t == from => Slot::Term(to.clone()),
                other => other.clone(),
            });
            *p = TriplePattern::new(s, pr, o);
        }
    }
}

/// Parses with the default prefix map as the base.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    parse_query_with(text, &PrefixMap::default())
}

/// Parses with `base` as the prefixes in scope before any `PREFIX` line.
pub fn parse_query_with(text: &str, base: &PrefixMap) -> Result<Query, QueryError> {
    parser::parse(text, base)
}

/// One solution, restricted to the projected variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BindingRow(pub BTreeMap<String, Term>);

impl BindingRow {
    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }
}

/// Integers compare numerically; everything else by lexical form, with
/// the term kind as a final tiebreak.
pub fn compare_terms(a: &Term, b: &Term) -> Ordering {
    fn kind(t: &Term) -> u8 {
        match t {
            Term::Iri(_) => 0,
            Term::Str(_) => 1,
            Term::Int(_) => 2,
        }
    }
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => x.cmp(y),
        _ => a.lexical().cmp(&b.lexical()).then(kind(a).cmp(&kind(b))),
    }
}

/// Evaluates `q` as a natural join of its patterns with set semantics.
pub fn execute(q: &Query, store: &Store) -> Result<Vec<BindingRow>, QueryError> {
    let vars = q.pattern_variables();
    let order = match &q.order_by {
        Some((v, o)) => {
            let i = vars
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| QueryError::UnboundOrderVariable(v.clone()))?;
            Some((i, *o))
        }
        None => None,
    };
    let projection = q.projection();
    let proj_idx: Vec<usize> = projection
        .iter()
        .map(|v| vars.iter().position(|x| x == v).expect("parser checks selected variables"))
        .collect();

    let solutions = match join(q, store, &vars) {
        Some(s) => s,
        None => return Ok(Vec::new()),
    };

    let mut rows: Vec<Vec<&Term>> = solutions
        .iter()
        .map(|sol| sol.iter().map(|id| store.term(*id)).collect())
        .collect();
    rows.sort_by(|a, b| {
        let key = match order {
            Some((i, Order::Asc)) => compare_terms(a[i], b[i]),
            Some((i, Order::Desc)) => compare_terms(b[i], a[i]),
            None => Ordering::Equal,
        };
        key.then_with(|| {
            proj_idx
                .iter()
                .map(|&i| compare_terms(a[i], b[i]))
                .chain(a.iter().zip(b.iter()).map(|(x, y)| compare_terms(x, y)))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    });

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        let projected: Vec<&Term> = proj_idx.iter().map(|&i| row[i]).collect();
        if seen.insert(projected.clone()) {
            out.push(BindingRow(
                projection
                    .iter()
                    .cloned()
                    .zip(projected.into_iter().cloned())
                    .collect(),
            ));
        }
    }
    Ok(out)
}

enum Compiled {
    Var(usize),
    Const(TermId),
}

/// Distinct full solutions as term ids indexed like `vars`, or `None` when
/// a constant does not occur in the store.
fn join(q: &Query, store: &Store, vars: &[String]) -> Option<Vec<Vec<TermId>>> {
    let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut compiled = Vec::with_capacity(q.patterns.len());
    for p in &q.patterns {
        let mut slots = Vec::with_capacity(3);
        for s in p.slots() {
            slots.push(match s {
                Slot::Var(v) => Compiled::Var(index[v.as_str()]),
                Slot::Term(t) => Compiled::Const(store.id_of(t)?),
            });
        }
        compiled.push(slots);
    }

    // greedy plan: next pattern is the one with the most bound slots
    let mut bound = vec![false; vars.len()];
    let mut remaining: Vec<usize> = (0..compiled.len()).collect();
    let mut plan = Vec::with_capacity(compiled.len());
    while !remaining.is_empty() {
        let score = |pi: usize| {
            compiled[pi]
                .iter()
                .filter(|s| match s {
                    Compiled::Const(_) => true,
                    Compiled::Var(v) => bound[*v],
                })
                .count()
        };
        let (pos, &pi) = remaining
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| score(a).cmp(&score(b)).then(b.cmp(&a)))
            .expect("nonempty");
        remaining.remove(pos);
        for s in &compiled[pi] {
            if let Compiled::Var(v) = s {
                bound[*v] = true;
            }
        }
        plan.push(pi);
    }

    let mut partial: Vec<Vec<Option<TermId>>> = vec![vec![None; vars.len()]];
    for pi in plan {
        let slots = &compiled[pi];
        let mut next = Vec::new();
        for sol in &partial {
            let key: [Option<TermId>; 3] = std::array::from_fn(|k| match &slots[k] {
                Compiled::Const(id) => Some(*id),
                Compiled::Var(v) => sol[*v],
            });
            'triples: for spo in store.match_ids(key) {
                let mut ext = sol.clone();
                for (slot, id) in slots.iter().zip(spo) {
                    if let Compiled::Var(v) = slot {
                        match ext[*v] {
                            Some(prev) if prev != id => continue 'triples,
                            _ => ext[*v] = Some(id),
                        }
                    }
                }
                next.push(ext);
            }
        }
        next.sort_unstable();
        next.dedup();
        partial = next;
        if partial.is_empty() {
            break;
        }
    }
    Some(
        partial
            .into_iter()
            .map(|s| s.into_iter().map(|id| id.expect("every variable bound")).collect())
            .collect(),
    )
}

/// Prefixed name when a namespace matches, else `<absolute>`; strings
/// quoted, integers bare.
pub fn display_term(t: &Term, prefixes: &PrefixMap) -> String {
    match t {
        Term::Iri(i) => prefixes.compact(i).unwrap_or_else(|| format!("<{}>", i.as_str())),
        Term::Int(n) => n.to_string(),
        Term::Str(_) => format_term(t),
    }
}

/// TSV with a `?var` header line and one line per row.
pub fn format_tsv(columns: &[String], rows: &[BindingRow], prefixes: &PrefixMap) -> String {
    let mut out = String::new();
    let header: Vec<String> = columns.iter().map(|c| format!("?{c}")).collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| row.get(c).map(|t| display_term(t, prefixes)).unwrap_or_default())
            .collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}
