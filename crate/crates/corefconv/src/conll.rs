//! Serialization of converted documents to the CoNLL-2012 coreference
//! format and parsing of that format back for scoring and round-trip tests.
//!
//! Emitted files carry twelve whitespace-aligned columns per token row:
//! document id, part number, token number, form, POS, parse bit, lemma
//! slot, frameset slot, sense slot, speaker, named-entity slot and the
//! coreference cell. The parse bit is always `*` (no constituency trees are
//! available) and the reference scorer ignores it.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Document, RelType};
use crate::scorer::Span;

pub const COLUMNS: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("cluster {cluster}: overlapping mentions {a}-{b} and {c}-{d} share a boundary token and cannot be expressed unambiguously",
        a = .first.start, b = .first.end, c = .second.start, d = .second.end)]
    AmbiguousBoundary {
        cluster: usize,
        first: Span,
        second: Span,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConllParseError {
    #[error("line {line}: content outside a #begin/#end document block")]
    ContentOutsideDocument { line: usize },
    #[error("line {line}: malformed #begin document header")]
    BadHeader { line: usize },
    #[error("missing #end document sentinel for {doc_id}")]
    MissingEndSentinel { doc_id: String },
    #[error("line {line}: expected {COLUMNS} columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: token number {found} does not match position {expected}")]
    TokenNumberMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: row document id or part does not match the block header")]
    HeaderMismatch { line: usize },
    #[error("line {line}: malformed coreference cell `{cell}`")]
    BadCorefCell { line: usize, cell: String },
    #[error("line {line}: close bracket for cluster {cluster} without a matching open")]
    UnbalancedClose { line: usize, cluster: usize },
    #[error("cluster {cluster}: open bracket without a matching close")]
    UnbalancedOpen { cluster: usize },
}

/// One token row: the twelve column values, stored verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllRow {
    pub cells: [String; COLUMNS],
}

impl ConllRow {
    pub fn form(&self) -> &str {
        &self.cells[3]
    }

    pub fn speaker(&self) -> &str {
        &self.cells[9]
    }

    pub fn coref(&self) -> &str {
        &self.cells[11]
    }
}

/// One `(document id, part)` unit of a CoNLL-2012 file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conll2012Document {
    pub doc_id: String,
    pub part: u32,
    pub sentences: Vec<Vec<ConllRow>>,
    /// Cluster partition extracted from the coreference column. Mentions are
    /// document-global token spans; clusters are ordered by first mention.
    pub clusters: Vec<Vec<Span>>,
}

impl Conll2012Document {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Renders the unit back to text, byte-identical to what [`emit_conll2012`]
    /// produced for it.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#begin document ({}); part {:03}", self.doc_id, self.part);
        for sentence in &self.sentences {
            let mut widths = [0usize; COLUMNS];
            for row in sentence {
                for (c, cell) in row.cells.iter().enumerate() {
                    widths[c] = widths[c].max(cell.chars().count());
                }
            }
            for row in sentence {
                let mut line = String::new();
                for (c, cell) in row.cells.iter().enumerate() {
                    if c > 0 {
                        line.push(' ');
                    }
                    line.push_str(cell);
                    if c + 1 < COLUMNS {
                        for _ in cell.chars().count()..widths[c] {
                            line.push(' ');
                        }
                    }
                }
                out.push_str(&line);
                out.push('\n');
            }
            out.push('\n');
        }
        out.push_str("#end document\n");
        out
    }
}

/// Serializes a converted document. Clusters are derived from the identity
/// edges and numbered from zero in order of first mention; mentions with
/// identical spans within one cluster collapse to a single mention.
pub fn emit_conll2012(doc: &Document) -> Result<String, EmitError> {
    Ok(to_conll_document(doc)?.render())
}

/// Builds the row representation of a converted document.
pub fn to_conll_document(doc: &Document) -> Result<Conll2012Document, EmitError> {
    let clusters = cluster_spans(doc);
    check_expressible(&clusters)?;

    #[derive(PartialEq, Eq)]
    enum Part {
        Open { end: usize, cluster: usize },
        Single { cluster: usize },
        Close { start: usize, cluster: usize },
    }

    let mut parts_at: Vec<Vec<Part>> = (0..doc.token_count()).map(|_| Vec::new()).collect();
    for (n, cluster) in clusters.iter().enumerate() {
        for span in cluster {
            if span.start == span.end {
                parts_at[span.start].push(Part::Single { cluster: n });
            } else {
                parts_at[span.start].push(Part::Open {
                    end: span.end,
                    cluster: n,
                });
                parts_at[span.end].push(Part::Close {
                    start: span.start,
                    cluster: n,
                });
            }
        }
    }

    let mut sentences = Vec::with_capacity(doc.sentences().len());
    for sentence in doc.sentences() {
        let mut rows = Vec::with_capacity(sentence.len());
        for (t, token) in sentence.iter().enumerate() {
            let parts = &mut parts_at[token.index];
            parts.sort_by_key(|p| match p {
                // Outermost opens first, then singles, then innermost closes.
                Part::Open { end, cluster } => (0, usize::MAX - end, *cluster),
                Part::Single { cluster } => (1, 0, *cluster),
                Part::Close { start, cluster } => (2, usize::MAX - start, *cluster),
            });
            let coref = if parts.is_empty() {
                "-".to_string()
            } else {
                parts
                    .iter()
                    .map(|p| match p {
                        Part::Open { cluster, .. } => format!("({cluster}"),
                        Part::Single { cluster } => format!("({cluster})"),
                        Part::Close { cluster, .. } => format!("{cluster})"),
                    })
                    .collect::<Vec<_>>()
                    .join("|")
            };
            rows.push(ConllRow {
                cells: [
                    doc.doc_id().to_string(),
                    "0".to_string(),
                    t.to_string(),
                    token.form.clone(),
                    token.xpos.clone(),
                    "*".to_string(),
                    "-".to_string(),
                    "-".to_string(),
                    "-".to_string(),
                    token.speaker.clone().unwrap_or_else(|| "-".to_string()),
                    "*".to_string(),
                    coref,
                ],
            });
        }
        sentences.push(rows);
    }

    Ok(Conll2012Document {
        doc_id: doc.doc_id().to_string(),
        part: 0,
        sentences,
        clusters,
    })
}

/// Cluster partition of a document as span lists: derived from identity
/// edges, clusters ordered by first mention, spans deduplicated.
pub fn cluster_spans(doc: &Document) -> Vec<Vec<Span>> {
    doc.derive_clusters(&RelType::IDENTITY)
        .iter()
        .map(|cluster| {
            let mut spans: Vec<Span> = cluster
                .members
                .iter()
                .map(|id| {
                    let mk = doc.markable(id).expect("cluster member exists");
                    Span::new(mk.start, mk.end)
                })
                .collect();
            spans.sort();
            spans.dedup();
            spans
        })
        .collect()
}

fn check_expressible(clusters: &[Vec<Span>]) -> Result<(), EmitError> {
    for (n, cluster) in clusters.iter().enumerate() {
        for (i, a) in cluster.iter().enumerate() {
            for b in &cluster[i + 1..] {
                let overlap = a.start <= b.end && b.start <= a.end;
                let boundary_shared = a.end == b.start || b.end == a.start;
                if overlap && boundary_shared {
                    return Err(EmitError::AmbiguousBoundary {
                        cluster: n,
                        first: *a,
                        second: *b,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Parses CoNLL-2012 text into its `(document id, part)` units. Inverse of
/// [`emit_conll2012`] up to cluster renumbering.
pub fn parse_conll2012(text: &str) -> Result<Vec<Conll2012Document>, ConllParseError> {
    let mut documents = Vec::new();
    let mut current: Option<DocBuilder> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix("#begin document ") {
            if current.is_some() {
                return Err(ConllParseError::ContentOutsideDocument { line: lineno });
            }
            let (doc_id, part) = parse_header(rest)
                .ok_or(ConllParseError::BadHeader { line: lineno })?;
            current = Some(DocBuilder::new(doc_id, part));
            continue;
        }
        if line == "#end document" {
            let builder = current
                .take()
                .ok_or(ConllParseError::ContentOutsideDocument { line: lineno })?;
            documents.push(builder.finish()?);
            continue;
        }
        let Some(builder) = current.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(ConllParseError::ContentOutsideDocument { line: lineno });
        };
        if line.trim().is_empty() {
            builder.end_sentence();
            continue;
        }
        builder.push_row(line, lineno)?;
    }

    if let Some(builder) = current {
        return Err(ConllParseError::MissingEndSentinel {
            doc_id: builder.doc_id,
        });
    }
    Ok(documents)
}

fn parse_header(rest: &str) -> Option<(String, u32)> {
    // `(<doc_id>); part <NNN>`
    let rest = rest.strip_prefix('(')?;
    let (doc_id, tail) = rest.split_once(')')?;
    let part = tail.strip_prefix("; part ")?.trim().parse().ok()?;
    Some((doc_id.to_string(), part))
}

struct DocBuilder {
    doc_id: String,
    part: u32,
    sentences: Vec<Vec<ConllRow>>,
    sentence: Vec<ConllRow>,
    global_index: usize,
    open: Vec<(usize, Vec<usize>)>,
    mentions: Vec<(usize, Span)>,
}

impl DocBuilder {
    fn new(doc_id: String, part: u32) -> DocBuilder {
        DocBuilder {
            doc_id,
            part,
            sentences: Vec::new(),
            sentence: Vec::new(),
            global_index: 0,
            open: Vec::new(),
            mentions: Vec::new(),
        }
    }

    fn end_sentence(&mut self) {
        if !self.sentence.is_empty() {
            self.sentences.push(std::mem::take(&mut self.sentence));
        }
    }

    fn push_row(&mut self, line: &str, lineno: usize) -> Result<(), ConllParseError> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != COLUMNS {
            return Err(ConllParseError::ColumnCount {
                line: lineno,
                found: fields.len(),
            });
        }
        if fields[0] != self.doc_id || fields[1].parse() != Ok(self.part) {
            return Err(ConllParseError::HeaderMismatch { line: lineno });
        }
        let number: usize = fields[2]
            .parse()
            .map_err(|_| ConllParseError::TokenNumberMismatch {
                line: lineno,
                expected: self.sentence.len(),
                found: usize::MAX,
            })?;
        if number != self.sentence.len() {
            return Err(ConllParseError::TokenNumberMismatch {
                line: lineno,
                expected: self.sentence.len(),
                found: number,
            });
        }

        self.read_coref_cell(fields[11], lineno)?;

        let mut cells: [String; COLUMNS] = Default::default();
        for (c, field) in fields.iter().enumerate() {
            cells[c] = field.to_string();
        }
        self.sentence.push(ConllRow { cells });
        self.global_index += 1;
        Ok(())
    }

    fn read_coref_cell(&mut self, cell: &str, lineno: usize) -> Result<(), ConllParseError> {
        if cell == "-" {
            return Ok(());
        }
        let bad = |cell: &str| ConllParseError::BadCorefCell {
            line: lineno,
            cell: cell.to_string(),
        };
        for part in cell.split('|') {
            if part.is_empty() {
                return Err(bad(cell));
            }
            let opens = part.starts_with('(');
            let closes = part.ends_with(')');
            let digits = part.trim_start_matches('(').trim_end_matches(')');
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad(cell));
            }
            let cluster: usize = digits.parse().map_err(|_| bad(cell))?;
            match (opens, closes) {
                (true, true) => {
                    self.mentions
                        .push((cluster, Span::new(self.global_index, self.global_index)));
                }
                (true, false) => {
                    let start = self.global_index;
                    self.stack_for(cluster).push(start);
                }
                (false, true) => {
                    let start = self
                        .stack_for(cluster)
                        .pop()
                        .ok_or(ConllParseError::UnbalancedClose {
                            line: lineno,
                            cluster,
                        })?;
                    self.mentions
                        .push((cluster, Span::new(start, self.global_index)));
                }
                (false, false) => return Err(bad(cell)),
            }
        }
        Ok(())
    }

    fn stack_for(&mut self, cluster: usize) -> &mut Vec<usize> {
        if let Some(pos) = self.open.iter().position(|(c, _)| *c == cluster) {
            return &mut self.open[pos].1;
        }
        self.open.push((cluster, Vec::new()));
        &mut self.open.last_mut().unwrap().1
    }

    fn finish(mut self) -> Result<Conll2012Document, ConllParseError> {
        self.end_sentence();
        for (cluster, stack) in &self.open {
            if !stack.is_empty() {
                return Err(ConllParseError::UnbalancedOpen { cluster: *cluster });
            }
        }

        // Group mentions by their file-local cluster id, then order
        // clusters canonically by first mention.
        let mut by_id: Vec<(usize, Vec<Span>)> = Vec::new();
        for (cluster, span) in self.mentions.drain(..) {
            match by_id.iter_mut().find(|(c, _)| *c == cluster) {
                Some((_, spans)) => spans.push(span),
                None => by_id.push((cluster, vec![span])),
            }
        }
        let mut clusters: Vec<Vec<Span>> = by_id
            .into_iter()
            .map(|(_, mut spans)| {
                spans.sort();
                spans.dedup();
                spans
            })
            .collect();
        clusters.sort_by_key(|spans| spans[0]);

        Ok(Conll2012Document {
            doc_id: self.doc_id,
            part: self.part,
            sentences: self.sentences,
            clusters,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Markable, RelationEdge};
    use crate::testkit::{doc_with, tok};

    fn two_mention_doc() -> Document {
        doc_with(
            vec![
                vec![
                    tok("the", "DET", 2, "det"),
                    tok("farm", "NOUN", 0, "root"),
                ],
                vec![tok("it", "PRON", 2, "nsubj"), tok("grew", "VERB", 0, "root")],
            ],
            vec![
                Markable::new("m1", 0, 1, "place"),
                Markable::new("m2", 2, 2, "place"),
            ],
            vec![RelationEdge::new("m2", "m1", RelType::Ana)],
        )
    }

    #[test]
    fn single_token_mention_cell() {
        let text = emit_conll2012(&two_mention_doc()).unwrap();
        let cells: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split_whitespace().last().unwrap())
            .collect();
        assert_eq!(cells, vec!["(0", "0)", "(0)", "-"]);
    }

    #[test]
    fn sentinels_and_columns() {
        let doc = two_mention_doc();
        let text = emit_conll2012(&doc).unwrap();
        assert!(text.starts_with("#begin document (GUM_news_x); part 000\n"));
        assert!(text.ends_with("#end document\n"));
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            assert_eq!(line.split_whitespace().count(), COLUMNS);
        }
    }

    #[test]
    fn token_opening_one_cluster_and_closing_another() {
        // Overlapping spans of different clusters: [0,2] in cluster 0 and
        // [2,3] in... not expressible if same cluster, but across clusters
        // the cell carries both parts.
        let doc = doc_with(
            vec![vec![
                tok("a", "NOUN", 0, "root"),
                tok("b", "NOUN", 1, "obj"),
                tok("c", "NOUN", 1, "obj"),
                tok("d", "NOUN", 1, "obj"),
                tok("e", "NOUN", 1, "obj"),
                tok("f", "NOUN", 1, "obj"),
            ]],
            vec![
                Markable::new("m1", 0, 2, "object"),
                Markable::new("m2", 2, 3, "object"),
                Markable::new("m3", 4, 4, "object"),
                Markable::new("m4", 5, 5, "object"),
            ],
            vec![
                RelationEdge::new("m3", "m1", RelType::Coref),
                RelationEdge::new("m4", "m2", RelType::Coref),
            ],
        );
        let text = emit_conll2012(&doc).unwrap();
        let cells: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| l.split_whitespace().last().unwrap())
            .collect();
        // Token 2 closes cluster 0 and opens cluster 1.
        assert_eq!(cells[2], "(1|0)");
        assert_eq!(cells, vec!["(0", "-", "(1|0)", "1)", "(0)", "(1)"]);
    }

    #[test]
    fn same_cluster_boundary_sharing_is_an_error() {
        let doc = doc_with(
            vec![vec![
                tok("a", "NOUN", 0, "root"),
                tok("b", "NOUN", 1, "obj"),
                tok("c", "NOUN", 1, "obj"),
            ]],
            vec![
                Markable::new("m1", 0, 1, "object"),
                Markable::new("m2", 1, 2, "object"),
            ],
            vec![RelationEdge::new("m2", "m1", RelType::Coref)],
        );
        assert!(matches!(
            emit_conll2012(&doc),
            Err(EmitError::AmbiguousBoundary { cluster: 0, .. })
        ));
    }

    #[test]
    fn round_trip_preserves_partition_and_bytes() {
        let doc = two_mention_doc();
        let text = emit_conll2012(&doc).unwrap();
        let parsed = parse_conll2012(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].clusters, cluster_spans(&doc));
        assert_eq!(parsed[0].render(), text);
    }

    #[test]
    fn unbalanced_open_is_an_error() {
        let text = "#begin document (GUM_news_x); part 000\n\
             GUM_news_x 0 0 a NN * - - - - * (3\n\n\
             #end document\n";
        assert_eq!(
            parse_conll2012(text),
            Err(ConllParseError::UnbalancedOpen { cluster: 3 })
        );
    }

    #[test]
    fn unbalanced_close_is_an_error() {
        let text = "#begin document (GUM_news_x); part 000\n\
             GUM_news_x 0 0 a NN * - - - - * 3)\n\n\
             #end document\n";
        assert!(matches!(
            parse_conll2012(text),
            Err(ConllParseError::UnbalancedClose { cluster: 3, .. })
        ));
    }

    #[test]
    fn token_number_mismatch_is_an_error() {
        let text = "#begin document (GUM_news_x); part 000\n\
             GUM_news_x 0 1 a NN * - - - - * -\n\n\
             #end document\n";
        assert!(matches!(
            parse_conll2012(text),
            Err(ConllParseError::TokenNumberMismatch { expected: 0, found: 1, .. })
        ));
    }

    #[test]
    fn missing_end_sentinel_is_an_error() {
        let text = "#begin document (GUM_news_x); part 000\n\
             GUM_news_x 0 0 a NN * - - - - * -\n";
        assert!(matches!(
            parse_conll2012(text),
            Err(ConllParseError::MissingEndSentinel { .. })
        ));
    }

    #[test]
    fn two_parts_parse_as_separate_units() {
        let text = "#begin document (GUM_news_x); part 000\n\
             GUM_news_x 0 0 a NN * - - - - * (0)\n\
             GUM_news_x 0 1 b NN * - - - - * (0)\n\n\
             #end document\n\
             #begin document (GUM_news_x); part 001\n\
             GUM_news_x 1 0 c NN * - - - - * (7)\n\
             GUM_news_x 1 1 d NN * - - - - * (7)\n\n\
             #end document\n";
        let units = parse_conll2012(text).unwrap();
        assert_eq!(units.len(), 2);
        assert_eq!(units[0].part, 0);
        assert_eq!(units[1].part, 1);
        assert_eq!(units[0].clusters, vec![vec![Span::new(0, 0), Span::new(1, 1)]]);
        assert_eq!(units[1].clusters, vec![vec![Span::new(0, 0), Span::new(1, 1)]]);
    }

    #[test]
    fn nested_same_cluster_spans_round_trip() {
        // Nested spans in one cluster: close matches the most recent open.
        let text = "#begin document (GUM_news_x); part 000\n\
             GUM_news_x 0 0 a NN * - - - - * (2|(2\n\
             GUM_news_x 0 1 b NN * - - - - * 2)\n\
             GUM_news_x 0 2 c NN * - - - - * 2)\n\n\
             #end document\n";
        let units = parse_conll2012(text).unwrap();
        assert_eq!(
            units[0].clusters,
            vec![vec![Span::new(0, 1), Span::new(0, 2)]]
        );
    }
}
