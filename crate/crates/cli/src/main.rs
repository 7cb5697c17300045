use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use calbc_core::harmonizer::{BoundaryRule, MatchScheme};
use calbc_core::query::Scope;
use calbc_core::SemanticGroup;
use clap::{Parser, Subcommand, ValueEnum};

mod commands;

use commands::Failure;

/// Load annotated corpora, lexicons and database records into a triple
/// store, and query it.
#[derive(Debug, Parser)]
#[command(name = "calbc", version)]
struct Cli {
    /// File of `PREFIX name: <iri>` lines layered over the default prefix map.
    #[arg(long, global = true, value_name = "FILE")]
    prefixes: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// IeXML annotated documents.
    Iexml,
    /// Lexicon clusters with variants.
    Lexicon,
    /// Protein records, tab separated.
    Uniprot,
    /// Gene expression experiments, tab separated.
    Atlas,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert files to triples and add them to the store.
    Ingest {
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long, value_name = "PATH")]
        store: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Vote a consensus corpus out of several annotators' IeXML files.
    Harmonize {
        #[arg(long, value_parser = parse_with::<MatchScheme>)]
        scheme: MatchScheme,
        #[arg(long)]
        threshold: usize,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Only consider annotations of this group.
        #[arg(long, value_parser = parse_with::<SemanticGroup>)]
        group: Option<SemanticGroup>,
        /// How a cluster's boundaries are chosen.
        #[arg(long, default_value = "most-frequent", value_parser = parse_with::<BoundaryRule>)]
        boundary: BoundaryRule,
        /// One file per annotator; the file stem is the annotator id.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run a query read from FILE, or from standard input.
    Query {
        #[arg(long, value_name = "PATH")]
        store: PathBuf,
        file: Option<PathBuf>,
    },
    /// Print triple, document, cluster and per-group annotation counts.
    Stats {
        #[arg(long, value_name = "PATH")]
        store: PathBuf,
    },
    /// List co-occurring entity pairs of two groups.
    Cooccur {
        #[arg(long, value_name = "PATH")]
        store: PathBuf,
        #[arg(long, value_parser = parse_with::<SemanticGroup>)]
        group_a: SemanticGroup,
        #[arg(long, value_parser = parse_with::<SemanticGroup>)]
        group_b: SemanticGroup,
        #[arg(long, default_value = "sentence", value_parser = parse_with::<Scope>)]
        scope: Scope,
    },
}

fn parse_with<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

fn run(cli: Cli) -> Result<String, Failure> {
    let prefixes = commands::load_prefixes(cli.prefixes.as_deref())?;
    match cli.command {
        Command::Ingest { format, store, files } => commands::ingest(format, &store, &files, prefixes.as_ref()),
        Command::Harmonize { scheme, threshold, out, group, boundary, files } => {
            commands::harmonize(&files, scheme, threshold, boundary, group, &out)
        }
        Command::Query { store, file } => commands::query(&store, file.as_deref(), prefixes.as_ref()),
        Command::Stats { store } => commands::stats(&store),
        Command::Cooccur { store, group_a, group_b, scope } => commands::cooccur(&store, group_a, group_b, scope),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(commands::EXIT_DATA);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(commands::EXIT_DATA);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let _ = io::stdout().lock().write_all(f.partial.as_bytes());
            eprintln!("calbc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
