//! Genre-breakdown corpus statistics: documents, tokens, mentions by type,
//! and cluster counts, with a total row.

use std::fmt::Write as _;

use crate::analysis::{classify_mention_type, MentionType};
use crate::model::{Document, Genre, RelType};

/// Counts for one genre (or the total row).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenreStats {
    pub genre_label: String,
    pub documents: usize,
    pub tokens: usize,
    pub mentions: usize,
    pub proper: usize,
    pub pronoun: usize,
    pub other: usize,
    pub clusters: usize,
}

impl GenreStats {
    fn absorb(&mut self, doc: &Document) {
        self.documents += 1;
        self.tokens += doc.token_count();
        for mk in doc.markables() {
            self.mentions += 1;
            match classify_mention_type(doc, mk) {
                MentionType::Proper => self.proper += 1,
                MentionType::Pronoun => self.pronoun += 1,
                MentionType::Other => self.other += 1,
            }
        }
        self.clusters += doc.derive_clusters(&RelType::IDENTITY).len();
    }

    fn add(&mut self, other: &GenreStats) {
        self.documents += other.documents;
        self.tokens += other.tokens;
        self.mentions += other.mentions;
        self.proper += other.proper;
        self.pronoun += other.pronoun;
        self.other += other.other;
        self.clusters += other.clusters;
    }
}

/// Per-genre rows in alphabetical order plus the total row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    pub rows: Vec<GenreStats>,
    pub total: GenreStats,
}

/// Computes the genre table over (converted) documents. Mentions are the
/// markables present in the input documents, typed by their head POS;
/// clusters are the derived identity clusters. On fully converted corpora
/// all clusters have size two or more.
pub fn corpus_stats(docs: &[Document]) -> CorpusStats {
    let mut per_genre: Vec<(Option<Genre>, GenreStats)> = Genre::ALL
        .iter()
        .map(|&g| {
            (
                Some(g),
                GenreStats {
                    genre_label: g.label().to_string(),
                    ..GenreStats::default()
                },
            )
        })
        .collect();
    per_genre.push((
        None,
        GenreStats {
            genre_label: "unknown".to_string(),
            ..GenreStats::default()
        },
    ));

    for doc in docs {
        let slot = per_genre
            .iter_mut()
            .find(|(g, _)| *g == doc.genre())
            .expect("every genre has a slot");
        slot.1.absorb(doc);
    }

    let mut total = GenreStats {
        genre_label: "total".to_string(),
        ..GenreStats::default()
    };
    let rows: Vec<GenreStats> = per_genre
        .into_iter()
        .map(|(_, stats)| stats)
        .filter(|stats| stats.documents > 0)
        .collect();
    for row in &rows {
        total.add(row);
    }
    CorpusStats { rows, total }
}

impl CorpusStats {
    /// Aligned text table mirroring the genre-breakdown layout.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>9} {:>8} {:>8} {:>7} {:>6} {:>6} {:>8}",
            "Genre", "Documents", "Tokens", "Mentions", "Proper", "Pron.", "Other", "Clusters"
        );
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                out,
                "{:<14} {:>9} {:>8} {:>8} {:>7} {:>6} {:>6} {:>8}",
                row.genre_label,
                row.documents,
                row.tokens,
                row.mentions,
                row.proper,
                row.pronoun,
                row.other,
                row.clusters
            );
        }
        out
    }

    /// Tab-separated rows in the same column order, with a header line.
    pub fn render_tsv(&self) -> String {
        let mut out = String::from(
            "genre\tdocuments\ttokens\tmentions\tproper\tpronoun\tother\tclusters\n",
        );
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.genre_label,
                row.documents,
                row.tokens,
                row.mentions,
                row.proper,
                row.pronoun,
                row.other,
                row.clusters
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Markable, RelationEdge};
    use crate::testkit::{doc_with_id, tok};

    fn sample_doc(doc_id: &str) -> Document {
        doc_with_id(
            doc_id,
            vec![vec![
                tok("Zurbarán", "PROPN", 2, "nsubj"),
                tok("painted", "VERB", 0, "root"),
                tok("it", "PRON", 2, "obj"),
                tok("canvas", "NOUN", 2, "obl"),
            ]],
            vec![
                Markable::new("m1", 0, 0, "person"),
                Markable::new("m2", 2, 2, "object"),
                Markable::new("m3", 3, 3, "object"),
            ],
            vec![RelationEdge::new("m3", "m2", RelType::Coref)],
        )
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let stats = corpus_stats(&[]);
        assert!(stats.rows.is_empty());
        assert_eq!(stats.total.documents, 0);
        assert_eq!(stats.total.tokens, 0);
        assert_eq!(stats.total.mentions, 0);
    }

    #[test]
    fn counts_by_genre_with_total() {
        let docs = vec![
            sample_doc("GUM_news_one"),
            sample_doc("GUM_news_two"),
            sample_doc("GUM_vlog_three"),
        ];
        let stats = corpus_stats(&docs);
        assert_eq!(stats.rows.len(), 2);
        // Alphabetical genre order.
        assert_eq!(stats.rows[0].genre_label, "news");
        assert_eq!(stats.rows[1].genre_label, "vlog");
        assert_eq!(stats.rows[0].documents, 2);
        assert_eq!(stats.rows[1].documents, 1);
        assert_eq!(stats.total.documents, 3);
        assert_eq!(stats.total.tokens, 12);
        assert_eq!(stats.total.mentions, 9);
        assert_eq!(stats.total.proper, 3);
        assert_eq!(stats.total.pronoun, 3);
        assert_eq!(stats.total.other, 3);
        // 2 derived clusters per document: {m1} and {m2, m3}.
        assert_eq!(stats.total.clusters, 6);
    }

    #[test]
    fn mention_types_sum_to_mentions_and_rows_to_total() {
        let docs = vec![sample_doc("GUM_news_one"), sample_doc("GUM_whow_two")];
        let stats = corpus_stats(&docs);
        let mut summed = GenreStats::default();
        for row in &stats.rows {
            assert_eq!(row.proper + row.pronoun + row.other, row.mentions);
            summed.add(row);
        }
        assert_eq!(summed.documents, stats.total.documents);
        assert_eq!(summed.tokens, stats.total.tokens);
        assert_eq!(summed.mentions, stats.total.mentions);
        assert_eq!(summed.clusters, stats.total.clusters);
    }
}
