//! Protein and expression-experiment records and their TSV readers.
//!
//! Both formats are tab separated, allow `#` comment lines and an optional
//! header line. List-valued columns are `;`-separated; `-` or an empty
//! field means an empty list.

use std::collections::HashSet;
use std::io::{self, BufRead, BufReader, Read};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A protein database entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProteinRecord {
    pub accession: String,
    /// NCBI taxonomy id, bare or as `NCBITaxon:ID`.
    pub species: String,
    /// `(resource, id)` cross references.
    pub same_as: Vec<(String, String)>,
    pub go_terms: Vec<String>,
    pub interactions: Vec<String>,
    pub medline_refs: Vec<String>,
}

/// A gene expression experiment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpressionExperiment {
    pub experiment_id: String,
    pub gene_ids: Vec<String>,
    pub factor_terms: Vec<String>,
}

fn list(field: &str) -> Vec<String> {
    let field = field.trim();
    if field.is_empty() || field == "-" {
        return Vec::new();
    }
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Yields `(line_number, fields)` for data lines.
fn rows<R: Read>(
    reader: R,
    header_first: &'static str,
) -> impl Iterator<Item = Result<(usize, Vec<String>), RecordError>> {
    BufReader::new(reader)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                return None;
            }
            let fields: Vec<String> = trimmed.split('\t').map(String::from).collect();
            if fields[0].trim().eq_ignore_ascii_case(header_first) {
                return None;
            }
            Some(Ok((i + 1, fields)))
        })
}

fn parse_err(line: usize, message: impl Into<String>) -> RecordError {
    RecordError::Parse { line, message: message.into() }
}

/// Columns: accession, species, same_as (`RES=ID;…`), go_terms,
/// interactions, medline_refs.
pub fn read_proteins<R: Read>(reader: R) -> Result<Vec<ProteinRecord>, RecordError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rows(reader, "accession") {
        let (line, f) = row?;
        if f.len() != 6 {
            return Err(parse_err(line, format!("expected 6 columns, found {}", f.len())));
        }
        let accession = f[0].trim().to_string();
        let species = f[1].trim().to_string();
        if accession.is_empty() || species.is_empty() {
            return Err(parse_err(line, "accession and species are required"));
        }
        if !seen.insert(accession.clone()) {
            return Err(parse_err(line, format!("duplicate accession {accession}")));
        }
        let same_as = list(&f[2])
            .into_iter()
            .map(|x| match x.split_once('=') {
                Some((r, id)) if !r.trim().is_empty() && !id.trim().is_empty() => {
                    Ok((r.trim().to_string(), id.trim().to_string()))
                }
                _ => Err(parse_err(line, format!("bad cross reference {x:?}, expected RES=ID"))),
            })
            .collect::<Result<_, _>>()?;
        out.push(ProteinRecord {
            accession,
            species,
            same_as,
            go_terms: list(&f[3]),
            interactions: list(&f[4]),
            medline_refs: list(&f[5]),
        });
    }
    Ok(out)
}

/// Columns: experiment_id, gene_ids, factor_terms.
pub fn read_experiments<R: Read>(reader: R) -> Result<Vec<ExpressionExperiment>, RecordError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in rows(reader, "experiment_id") {
        let (line, f) = row?;
        if f.len() != 3 {
            return Err(parse_err(line, format!("expected 3 columns, found {}", f.len())));
        }
        let experiment_id = f[0].trim().to_string();
        if experiment_id.is_empty() {
            return Err(parse_err(line, "experiment_id is required"));
        }
        if !seen.insert(experiment_id.clone()) {
            return Err(parse_err(line, format!("duplicate experiment {experiment_id}")));
        }
        out.push(ExpressionExperiment {
            experiment_id,
            gene_ids: list(&f[1]),
            factor_terms: list(&f[2]),
        });
    }
    Ok(out)
}

pub fn parse_proteins(text: &str) -> Result<Vec<ProteinRecord>, RecordError> {
    read_proteins(text.as_bytes())
}

pub fn parse_experiments(text: &str) -> Result<Vec<ExpressionExperiment>, RecordError> {
    read_experiments(text.as_bytes())
}
