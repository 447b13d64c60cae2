//! Command-line entry point wiring ingest, conversion, emission, scoring
//! and statistics.
//!
//! Exit codes: 0 = success, 1 = diagnostics found, 2 = usage or parse
//! error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::analysis::DeterminerLexicon;
use crate::conll::{emit_conll2012, parse_conll2012, Conll2012Document};
use crate::ingest::{validate_document, CorpusSource};
use crate::model::{Document, Genre};
use crate::pipeline::{convert, ConvertOptions};
use crate::scorer::{Averaging, DocumentScore, ScoreReport, ScoredDocument};
use crate::stats::corpus_stats;

#[derive(Debug, Parser)]
#[command(
    name = "corefconv",
    version,
    about = "Converts richly annotated coreference corpora to the OntoNotes scheme, \
             emits CoNLL-2012 files, and scores and summarizes them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus and write one CoNLL-2012 file per document
    Convert(ConvertArgs),
    /// Score response files against key files
    Score(ScoreArgs),
    /// Print genre-breakdown corpus statistics
    Stats(StatsArgs),
    /// Check corpus files and print diagnostics
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Corpus directory holding *.dep.tsv / *.coref.tsv pairs
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory for <doc_id>.conll files
    #[arg(long = "out", value_name = "DIR")]
    pub output: PathBuf,
    /// Keep singleton mentions instead of removing them in the final step
    #[arg(long)]
    pub retain_singletons: bool,
    /// Stop the pipeline after the given step
    #[arg(long, value_name = "K", value_parser = clap::value_parser!(u8).range(1..=8))]
    pub stop_after_step: Option<u8>,
    /// Write a <doc_id>.trace.tsv mutation log next to each output file
    #[arg(long)]
    pub trace: bool,
    /// Only convert documents of this genre
    #[arg(long, value_name = "GENRE")]
    pub genre: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Key (gold) CoNLL-2012 file or directory
    #[arg(long, value_name = "PATH")]
    pub key: PathBuf,
    /// Response (system) CoNLL-2012 file or directory
    #[arg(long, value_name = "PATH")]
    pub response: PathBuf,
    /// Average per-document scores instead of summing counts (non-standard)
    #[arg(long)]
    pub macro_average: bool,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus directory holding *.dep.tsv / *.coref.tsv pairs
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Compute statistics on the unconverted corpus
    #[arg(long)]
    pub pre_conversion: bool,
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Corpus directory holding *.dep.tsv / *.coref.tsv pairs
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Tsv,
}

/// Parses arguments and runs the selected command, mapping errors onto the
/// exit-code contract.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Convert(args) => run_convert(args),
        Command::Score(args) => run_score(args),
        Command::Stats(args) => run_stats(args),
        Command::Validate(args) => run_validate(args),
    }
}

fn load_corpus(root: &Path, genre_filter: Option<&str>) -> Result<Vec<Document>> {
    if !root.exists() {
        bail!("corpus directory {} does not exist", root.display());
    }
    let source = CorpusSource::discover(root)?;
    let mut docs = Vec::new();
    for (doc_id, genre) in source.documents() {
        if let Some(wanted) = genre_filter {
            if genre.map(Genre::label) != Some(wanted) {
                continue;
            }
        }
        docs.push(source.load_document(doc_id)?);
    }
    Ok(docs)
}

fn lexicon() -> Result<DeterminerLexicon> {
    DeterminerLexicon::from_env_or_default().context("loading determiner lexicon")
}

fn run_convert(args: ConvertArgs) -> Result<i32> {
    let docs = load_corpus(&args.input, args.genre.as_deref())?;
    let options = ConvertOptions {
        retain_singletons: args.retain_singletons,
        stop_after_step: args.stop_after_step,
        lexicon: lexicon()?,
    };

    let mut diagnostics_found = false;
    for doc in &docs {
        for diagnostic in validate_document(doc) {
            diagnostics_found = true;
            eprintln!("{}: {}", doc.doc_id(), diagnostic);
        }
    }

    fs::create_dir_all(&args.output)
        .with_context(|| format!("creating output directory {}", args.output.display()))?;

    let outputs: Vec<Result<(String, String, Option<String>)>> = docs
        .par_iter()
        .map(|doc| {
            let (converted, trace) = convert(doc, &options);
            let conll = emit_conll2012(&converted)
                .with_context(|| format!("emitting {}", doc.doc_id()))?;
            let trace_text = args.trace.then(|| trace.to_tsv());
            Ok((doc.doc_id().to_string(), conll, trace_text))
        })
        .collect();

    for output in outputs {
        let (doc_id, conll, trace_text) = output?;
        let path = args.output.join(format!("{doc_id}.conll"));
        fs::write(&path, conll).with_context(|| format!("writing {}", path.display()))?;
        if let Some(text) = trace_text {
            let path = args.output.join(format!("{doc_id}.trace.tsv"));
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(if diagnostics_found { 1 } else { 0 })
}

fn conll_files(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        bail!("{} does not exist", path.display());
    }
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = WalkDir::new(path)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".conll"))
        .map(|e| e.into_path())
        .collect();
    files.sort();
    Ok(files)
}

fn load_conll_units(path: &Path) -> Result<BTreeMap<(String, u32), Conll2012Document>> {
    let mut units = BTreeMap::new();
    for file in conll_files(path)? {
        let text =
            fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        for unit in parse_conll2012(&text)
            .map_err(|e| anyhow!("{}: {e}", file.display()))?
        {
            let key = (unit.doc_id.clone(), unit.part);
            if units.insert(key.clone(), unit).is_some() {
                bail!("{}: duplicate document part {}#{}", file.display(), key.0, key.1);
            }
        }
    }
    Ok(units)
}

fn run_score(args: ScoreArgs) -> Result<i32> {
    let key_units = load_conll_units(&args.key)?;
    let mut response_units = load_conll_units(&args.response)?;

    let mut pairs = Vec::new();
    for (id, key_unit) in key_units {
        let response_unit = response_units
            .remove(&id)
            .ok_or_else(|| anyhow!("response is missing document {}#{}", id.0, id.1))?;
        pairs.push((id, key_unit, response_unit));
    }
    if let Some((id, _)) = response_units.into_iter().next() {
        bail!("response contains unknown document {}#{}", id.0, id.1);
    }

    let documents: Vec<ScoredDocument> = pairs
        .par_iter()
        .map(|(id, key_unit, response_unit)| ScoredDocument {
            doc_id: id.0.clone(),
            part: id.1,
            genre: Genre::from_doc_id(&id.0),
            score: DocumentScore::compute(&key_unit.clusters, &response_unit.clusters),
        })
        .collect();

    let report = ScoreReport::new(
        documents,
        if args.macro_average {
            Averaging::Macro
        } else {
            Averaging::Micro
        },
    );
    match args.format {
        OutputFormat::Table => print!("{}", report.render_table()),
        OutputFormat::Tsv => print!("{}", report.render_tsv()),
    }
    Ok(0)
}

fn run_stats(args: StatsArgs) -> Result<i32> {
    let docs = load_corpus(&args.input, None)?;
    let docs = if args.pre_conversion {
        docs
    } else {
        let options = ConvertOptions {
            lexicon: lexicon()?,
            ..ConvertOptions::default()
        };
        docs.par_iter().map(|doc| convert(doc, &options).0).collect()
    };
    let stats = corpus_stats(&docs);
    match args.format {
        OutputFormat::Table => print!("{}", stats.render_table()),
        OutputFormat::Tsv => print!("{}", stats.render_tsv()),
    }
    Ok(0)
}

fn run_validate(args: ValidateArgs) -> Result<i32> {
    let docs = load_corpus(&args.input, None)?;
    let mut found = false;
    for doc in &docs {
        for diagnostic in validate_document(doc) {
            found = true;
            println!("{}: {}", doc.doc_id(), diagnostic);
        }
    }
    Ok(if found { 1 } else { 0 })
}
