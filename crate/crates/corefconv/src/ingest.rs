//! Parsing of the two-file input format (dependency layer + coreference
//! layer) into [`Document`]s, plus the matching serializers and structural
//! validation.
//!
//! Dependency files (`<doc_id>.dep.tsv`) carry ten tab-separated columns per
//! token line: ID, FORM, LEMMA, UPOS, XPOS, HEAD, DEPREL, DEPS, MISC,
//! SPEAKER. `#`-prefixed lines are comments, a blank line ends a sentence,
//! `# newdoc id = <doc_id>` begins a document and `# speaker = <name>` sets
//! the sentence speaker. Coreference files (`<doc_id>.coref.tsv`) carry
//! markable lines `M\t<id>\t<start>-<end>\t<etype>` with document-global
//! inclusive token offsets and relation lines
//! `R\t<anaphor>\t<antecedent>\t<rel_type>`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;
use walkdir::WalkDir;

use crate::model::{
    Document, Genre, Markable, MarkableId, ModelError, RelType, RelationEdge, Token,
};

pub const DEP_SUFFIX: &str = ".dep.tsv";
pub const COREF_SUFFIX: &str = ".coref.tsv";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: token id `{value}` is not an integer")]
    BadTokenId { line: usize, value: String },
    #[error("line {line}: token id {found} out of sequence (expected {expected})")]
    TokenIdOutOfSequence {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("line {line}: head `{value}` is not an integer")]
    NonIntegerHead { line: usize, value: String },
    #[error("line {line}: {source}")]
    InvalidStructure { line: usize, source: ModelError },
    #[error("line {line}: expected 4 tab-separated columns, found {found}")]
    CorefColumnCount { line: usize, found: usize },
    #[error("line {line}: unknown record type `{value}` (expected M or R)")]
    UnknownRecordType { line: usize, value: String },
    #[error("line {line}: malformed span `{value}` (expected <start>-<end>)")]
    MalformedSpan { line: usize, value: String },
    #[error("line {line}: unknown relation type `{value}`")]
    UnknownRelType { line: usize, value: String },
    #[error("line {line}: duplicate markable id {id}")]
    DuplicateMarkable { line: usize, id: MarkableId },
    #[error("line {line}: relation references itself ({id})")]
    SelfLoop { line: usize, id: MarkableId },
    #[error("relation references undefined markable {0}")]
    UndefinedMarkable(MarkableId),
    #[error(transparent)]
    Structure(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Parsed dependency layer: the sentences plus the document id announced by
/// a `# newdoc id = ...` comment, when present.
#[derive(Debug, Clone, Default)]
pub struct ParsedDependencies {
    pub doc_id: Option<String>,
    pub sentences: Vec<Vec<Token>>,
}

/// Markable line before head computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMarkable {
    pub id: MarkableId,
    pub start: usize,
    pub end: usize,
    pub entity_type: String,
}

/// Parses a dependency file into sentences of tokens.
///
/// Multiword-token range lines (`3-4 ...`) are skipped for indexing. A
/// sentence-level `# speaker =` comment applies to all tokens of the
/// sentence unless overridden by the SPEAKER column or a `Speaker=` entry in
/// MISC.
pub fn parse_dependency_file(text: &str) -> Result<ParsedDependencies, ParseError> {
    let mut parsed = ParsedDependencies::default();
    let mut sentence: Vec<Token> = Vec::new();
    let mut sentence_speaker: Option<String> = None;
    let mut first_token_line = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            flush_sentence(
                &mut parsed.sentences,
                &mut sentence,
                &mut sentence_speaker,
                first_token_line,
            )?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(id) = comment.strip_prefix("newdoc id =") {
                parsed.doc_id = Some(id.trim().to_string());
            } else if let Some(name) = comment.strip_prefix("speaker =") {
                sentence_speaker = Some(name.trim().to_string());
            }
            continue;
        }

        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 10 {
            return Err(ParseError::ColumnCount {
                line: lineno,
                found: fields.len(),
            });
        }
        let id_field = fields[0];
        if is_range_id(id_field) {
            // Multiword token line; surface-only, skipped for indexing.
            continue;
        }
        let id: usize = id_field.parse().map_err(|_| ParseError::BadTokenId {
            line: lineno,
            value: id_field.to_string(),
        })?;
        if id != sentence.len() + 1 {
            return Err(ParseError::TokenIdOutOfSequence {
                line: lineno,
                found: id,
                expected: sentence.len() + 1,
            });
        }
        if sentence.is_empty() {
            first_token_line = lineno;
        }
        let head: usize = fields[5].parse().map_err(|_| ParseError::NonIntegerHead {
            line: lineno,
            value: fields[5].to_string(),
        })?;

        let mut token = Token::new(fields[1], fields[2], fields[3], fields[4], head, fields[6]);
        // Speaker precedence: SPEAKER column, then MISC `Speaker=`, then the
        // sentence-level comment (applied at flush time).
        if fields[9] != "_" {
            token.speaker = Some(fields[9].to_string());
        } else if let Some(name) = misc_speaker(fields[8]) {
            token.speaker = Some(name.to_string());
        }
        sentence.push(token);
    }
    flush_sentence(
        &mut parsed.sentences,
        &mut sentence,
        &mut sentence_speaker,
        first_token_line,
    )?;
    Ok(parsed)
}

fn flush_sentence(
    sentences: &mut Vec<Vec<Token>>,
    sentence: &mut Vec<Token>,
    speaker: &mut Option<String>,
    line: usize,
) -> Result<(), ParseError> {
    if sentence.is_empty() {
        return Ok(());
    }
    check_sentence(sentence, line)?;
    if let Some(name) = speaker.take() {
        for token in sentence.iter_mut() {
            if token.speaker.is_none() {
                token.speaker = Some(name.clone());
            }
        }
    }
    sentences.push(std::mem::take(sentence));
    Ok(())
}

fn is_range_id(field: &str) -> bool {
    match field.split_once('-') {
        Some((a, b)) => !a.is_empty() && !b.is_empty() && is_digits(a) && is_digits(b),
        None => false,
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn misc_speaker(misc: &str) -> Option<&str> {
    misc.split('|')
        .find_map(|entry| entry.strip_prefix("Speaker="))
}

/// Per-sentence head checks with line-number reporting; document
/// construction re-validates, but there the line context is gone.
fn check_sentence(sentence: &[Token], line: usize) -> Result<(), ParseError> {
    let len = sentence.len();
    let mut roots = 0usize;
    for (i, token) in sentence.iter().enumerate() {
        if token.head > len {
            return Err(ParseError::InvalidStructure {
                line,
                source: ModelError::HeadOutOfRange {
                    sentence: 0,
                    token: i + 1,
                    head: token.head,
                    len,
                },
            });
        }
        if token.head == i + 1 {
            return Err(ParseError::InvalidStructure {
                line,
                source: ModelError::HeadSelfReference {
                    sentence: 0,
                    token: i + 1,
                },
            });
        }
        if token.head == 0 {
            roots += 1;
        }
    }
    if roots != 1 {
        return Err(ParseError::InvalidStructure {
            line,
            source: ModelError::RootCount {
                sentence: 0,
                count: roots,
            },
        });
    }
    Ok(())
}

/// Parses a coreference file into markables and typed edges. Relation types
/// outside the five recognized ones are rejected; `bridge:` subtypes
/// normalize to `bridge`.
pub fn parse_coref_file(
    text: &str,
) -> Result<(Vec<RawMarkable>, Vec<RelationEdge>), ParseError> {
    let mut markables: Vec<RawMarkable> = Vec::new();
    let mut edges: Vec<RelationEdge> = Vec::new();
    let mut ids: HashSet<MarkableId> = HashSet::new();

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(ParseError::CorefColumnCount {
                line: lineno,
                found: fields.len(),
            });
        }
        match fields[0] {
            "M" => {
                let id = MarkableId::new(fields[1]);
                if !ids.insert(id.clone()) {
                    return Err(ParseError::DuplicateMarkable { line: lineno, id });
                }
                let (start, end) =
                    fields[2]
                        .split_once('-')
                        .and_then(|(a, b)| {
                            Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?))
                        })
                        .ok_or_else(|| ParseError::MalformedSpan {
                            line: lineno,
                            value: fields[2].to_string(),
                        })?;
                markables.push(RawMarkable {
                    id,
                    start,
                    end,
                    entity_type: fields[3].to_string(),
                });
            }
            "R" => {
                let anaphor = MarkableId::new(fields[1]);
                let antecedent = MarkableId::new(fields[2]);
                if anaphor == antecedent {
                    return Err(ParseError::SelfLoop {
                        line: lineno,
                        id: anaphor,
                    });
                }
                let rel_type =
                    RelType::parse(fields[3]).ok_or_else(|| ParseError::UnknownRelType {
                        line: lineno,
                        value: fields[3].to_string(),
                    })?;
                edges.push(RelationEdge {
                    anaphor,
                    antecedent,
                    rel_type,
                });
            }
            other => {
                return Err(ParseError::UnknownRecordType {
                    line: lineno,
                    value: other.to_string(),
                });
            }
        }
    }

    for edge in &edges {
        for endpoint in [&edge.anaphor, &edge.antecedent] {
            if !ids.contains(endpoint) {
                return Err(ParseError::UndefinedMarkable(endpoint.clone()));
            }
        }
    }
    Ok((markables, edges))
}

/// Assembles a document from the two parsed layers, computing markable heads
/// and checking structural integrity (span bounds, sentence containment,
/// unique ids, edge endpoints).
pub fn build_document(
    doc_id: &str,
    sentences: Vec<Vec<Token>>,
    markables: Vec<RawMarkable>,
    edges: Vec<RelationEdge>,
) -> Result<Document, ParseError> {
    let markables = markables
        .into_iter()
        .map(|raw| Markable::new(raw.id, raw.start, raw.end, raw.entity_type))
        .collect();
    Ok(Document::new(doc_id, sentences, markables, edges)?)
}

/// Parses both layers of a document from in-memory text.
pub fn parse_document(
    doc_id: &str,
    dep_text: &str,
    coref_text: &str,
) -> Result<Document, ParseError> {
    let deps = parse_dependency_file(dep_text)?;
    let (markables, edges) = parse_coref_file(coref_text)?;
    let doc_id = deps.doc_id.as_deref().unwrap_or(doc_id);
    build_document(doc_id, deps.sentences, markables, edges)
}

/// Serializes the dependency layer in normalized form: a `# newdoc id`
/// header, ten columns per token, speakers in the SPEAKER column, one blank
/// line after every sentence.
pub fn write_dependency_file(doc: &Document) -> String {
    let mut out = String::new();
    out.push_str(&format!("# newdoc id = {}\n", doc.doc_id()));
    for sentence in doc.sentences() {
        for token in sentence {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_\t{}\n",
                token.sentence_index,
                token.form,
                token.lemma,
                token.upos,
                token.xpos,
                token.head,
                token.deprel,
                token.speaker.as_deref().unwrap_or("_"),
            ));
        }
        out.push('\n');
    }
    out
}

/// Serializes the coreference layer in normalized form: markables in
/// document order, then relations in stored order.
pub fn write_coref_file(doc: &Document) -> String {
    let mut out = String::new();
    for mk in doc.markables() {
        out.push_str(&format!(
            "M\t{}\t{}-{}\t{}\n",
            mk.id, mk.start, mk.end, mk.entity_type
        ));
    }
    for edge in doc.edges() {
        out.push_str(&format!(
            "R\t{}\t{}\t{}\n",
            edge.anaphor, edge.antecedent, edge.rel_type
        ));
    }
    out
}

/// A structural finding reported by [`validate_document`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A non-cataphoric edge points forward in the text, or a cataphoric
    /// edge points backward.
    EdgeDirection { edge: RelationEdge },
    /// A markable's head index lies outside its span.
    HeadOutsideSpan { id: MarkableId },
    /// The document id does not carry one of the twelve genre labels.
    UnknownGenre { doc_id: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EdgeDirection { edge } => match edge.rel_type {
                RelType::Cata => write!(
                    f,
                    "cataphoric edge {edge} must point forward (antecedent after anaphor)"
                ),
                _ => write!(
                    f,
                    "edge {edge} must point backward (antecedent before anaphor)"
                ),
            },
            Diagnostic::HeadOutsideSpan { id } => {
                write!(f, "markable {id} has its head outside its span")
            }
            Diagnostic::UnknownGenre { doc_id } => {
                write!(f, "document id `{doc_id}` carries no known genre label")
            }
        }
    }
}

/// Checks the invariants that are data quality findings rather than hard
/// structural errors. An empty result means the document is valid.
pub fn validate_document(doc: &Document) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    if doc.genre().is_none() {
        diagnostics.push(Diagnostic::UnknownGenre {
            doc_id: doc.doc_id().to_string(),
        });
    }
    for mk in doc.markables() {
        if mk.head_index < mk.start || mk.head_index > mk.end {
            diagnostics.push(Diagnostic::HeadOutsideSpan { id: mk.id.clone() });
        }
    }
    for edge in doc.edges() {
        let anaphor = doc.markable(&edge.anaphor).expect("validated endpoint");
        let antecedent = doc.markable(&edge.antecedent).expect("validated endpoint");
        let ok = match edge.rel_type {
            RelType::Cata => antecedent.start > anaphor.start,
            _ => antecedent.start < anaphor.start,
        };
        if !ok {
            diagnostics.push(Diagnostic::EdgeDirection { edge: edge.clone() });
        }
    }
    diagnostics
}

/// A corpus directory with its discovered documents.
#[derive(Debug, Clone)]
pub struct CorpusSource {
    root: PathBuf,
    documents: Vec<(String, Option<Genre>)>,
}

impl CorpusSource {
    /// Walks `root` for `*.dep.tsv` files. Document ids are the file names
    /// minus the suffix; order is deterministic (sorted by id).
    pub fn discover(root: impl Into<PathBuf>) -> Result<CorpusSource, IngestError> {
        let root = root.into();
        let mut documents = Vec::new();
        for entry in WalkDir::new(&root).sort_by_file_name() {
            let entry = entry.map_err(|e| IngestError::Io {
                path: root.clone(),
                source: e.into(),
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let name = entry.file_name().to_string_lossy();
            if let Some(doc_id) = name.strip_suffix(DEP_SUFFIX) {
                documents.push((doc_id.to_string(), Genre::from_doc_id(doc_id)));
            }
        }
        documents.sort();
        Ok(CorpusSource { root, documents })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Discovered `(doc_id, genre)` pairs in deterministic order.
    pub fn documents(&self) -> &[(String, Option<Genre>)] {
        &self.documents
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    fn find_file(&self, file_name: &str) -> Option<PathBuf> {
        WalkDir::new(&self.root)
            .sort_by_file_name()
            .into_iter()
            .filter_map(Result::ok)
            .find(|e| e.file_type().is_file() && e.file_name().to_string_lossy() == file_name)
            .map(|e| e.into_path())
    }

    pub fn load_document(&self, doc_id: &str) -> Result<Document, IngestError> {
        let dep_path = self
            .find_file(&format!("{doc_id}{DEP_SUFFIX}"))
            .unwrap_or_else(|| self.root.join(format!("{doc_id}{DEP_SUFFIX}")));
        let coref_path = self
            .find_file(&format!("{doc_id}{COREF_SUFFIX}"))
            .unwrap_or_else(|| self.root.join(format!("{doc_id}{COREF_SUFFIX}")));
        let dep_text = read(&dep_path)?;
        let coref_text = read(&coref_path)?;
        parse_document(doc_id, &dep_text, &coref_text).map_err(|source| IngestError::Parse {
            path: dep_path.clone(),
            source,
        })
    }

    pub fn load_all(&self) -> Result<Vec<Document>, IngestError> {
        self.documents
            .iter()
            .map(|(doc_id, _)| self.load_document(doc_id))
            .collect()
    }
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
