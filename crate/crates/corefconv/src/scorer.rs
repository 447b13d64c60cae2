//! The standard coreference metrics: MUC, B³ and CEAF_φ4, their average,
//! and mention-detection precision/recall, with corpus-level count
//! aggregation (micro averaging, matching the reference scorer).
//!
//! Precision and recall with a zero denominator are defined as 0, and the
//! F1 of (0, 0) is 0. Mentions are exact `(start, end)` token spans; there
//! is no partial-span credit.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use crate::model::Genre;

/// A mention span in document-global token indices, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Numerators and denominators for one metric over one or more documents.
/// Summable across documents; scores are computed from the sums.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricCounts {
    pub recall_num: f64,
    pub recall_den: f64,
    pub precision_num: f64,
    pub precision_den: f64,
}

impl MetricCounts {
    pub fn recall(&self) -> f64 {
        ratio(self.recall_num, self.recall_den)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.precision_num, self.precision_den)
    }

    pub fn f1(&self) -> f64 {
        let p = self.precision();
        let r = self.recall();
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

impl Add for MetricCounts {
    type Output = MetricCounts;

    fn add(self, other: MetricCounts) -> MetricCounts {
        MetricCounts {
            recall_num: self.recall_num + other.recall_num,
            recall_den: self.recall_den + other.recall_den,
            precision_num: self.precision_num + other.precision_num,
            precision_den: self.precision_den + other.precision_den,
        }
    }
}

impl AddAssign for MetricCounts {
    fn add_assign(&mut self, other: MetricCounts) {
        *self = *self + other;
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn mention_map(clusters: &[Vec<Span>]) -> HashMap<Span, usize> {
    let mut map = HashMap::new();
    for (i, cluster) in clusters.iter().enumerate() {
        for span in cluster {
            map.insert(*span, i);
        }
    }
    map
}

/// Link-based MUC counts. Recall is Σ(|Kᵢ| − |p(Kᵢ)|) / Σ(|Kᵢ| − 1) where
/// p(Kᵢ) partitions the key cluster by the response; mentions missing from
/// the response partition into their own cells. Precision swaps the roles.
pub fn score_muc(key: &[Vec<Span>], response: &[Vec<Span>]) -> MetricCounts {
    MetricCounts {
        recall_num: muc_numerator(key, response),
        recall_den: muc_denominator(key),
        precision_num: muc_numerator(response, key),
        precision_den: muc_denominator(response),
    }
}

fn muc_numerator(own: &[Vec<Span>], other: &[Vec<Span>]) -> f64 {
    let other_map = mention_map(other);
    let mut num = 0.0;
    for cluster in own {
        let mut cells: Vec<usize> = Vec::new();
        let mut unmatched = 0usize;
        for span in cluster {
            match other_map.get(span) {
                Some(&c) => {
                    if !cells.contains(&c) {
                        cells.push(c);
                    }
                }
                None => unmatched += 1,
            }
        }
        num += cluster.len() as f64 - (cells.len() + unmatched) as f64;
    }
    num
}

fn muc_denominator(own: &[Vec<Span>]) -> f64 {
    own.iter().map(|c| c.len() as f64 - 1.0).sum()
}

/// Mention-based B³ counts. Recall is the mean over key mentions of
/// |K_m ∩ R_m| / |K_m|; mentions absent from the response contribute zero.
/// Precision swaps the roles.
pub fn score_b3(key: &[Vec<Span>], response: &[Vec<Span>]) -> MetricCounts {
    MetricCounts {
        recall_num: b3_numerator(key, response),
        recall_den: key.iter().map(Vec::len).sum::<usize>() as f64,
        precision_num: b3_numerator(response, key),
        precision_den: response.iter().map(Vec::len).sum::<usize>() as f64,
    }
}

fn b3_numerator(own: &[Vec<Span>], other: &[Vec<Span>]) -> f64 {
    let other_map = mention_map(other);
    let mut num = 0.0;
    for cluster in own {
        for span in cluster {
            let Some(&o) = other_map.get(span) else {
                continue;
            };
            let intersection = cluster
                .iter()
                .filter(|s| other_map.get(s) == Some(&o))
                .count();
            num += intersection as f64 / cluster.len() as f64;
        }
    }
    num
}

/// Entity-based CEAF_φ4 counts. φ4(K, R) = 2|K∩R| / (|K| + |R|); clusters
/// are aligned one-to-one by maximum-weight bipartite matching and the
/// total similarity is divided by the key (recall) or response (precision)
/// cluster count.
pub fn score_ceaf_e(key: &[Vec<Span>], response: &[Vec<Span>]) -> MetricCounts {
    let total = if key.is_empty() || response.is_empty() {
        0.0
    } else {
        let weights: Vec<Vec<f64>> = key
            .iter()
            .map(|k| response.iter().map(|r| phi4(k, r)).collect())
            .collect();
        max_assignment_total(&weights)
    };
    MetricCounts {
        recall_num: total,
        recall_den: key.len() as f64,
        precision_num: total,
        precision_den: response.len() as f64,
    }
}

fn phi4(key: &[Span], response: &[Span]) -> f64 {
    let key_set: HashMap<&Span, ()> = key.iter().map(|s| (s, ())).collect();
    let common = response.iter().filter(|s| key_set.contains_key(s)).count();
    2.0 * common as f64 / (key.len() + response.len()) as f64
}

/// Exact-span mention detection counts.
pub fn score_mention_detection(key: &[Vec<Span>], response: &[Vec<Span>]) -> MetricCounts {
    let key_mentions = mention_map(key);
    let response_mentions = mention_map(response);
    let matched = response_mentions
        .keys()
        .filter(|s| key_mentions.contains_key(s))
        .count() as f64;
    MetricCounts {
        recall_num: matched,
        recall_den: key_mentions.len() as f64,
        precision_num: matched,
        precision_den: response_mentions.len() as f64,
    }
}

/// Arithmetic mean of the three F1 values, reported ×100 with one decimal.
pub fn conll_average(muc_f1: f64, b3_f1: f64, ceaf_f1: f64) -> f64 {
    let mean = (muc_f1 + b3_f1 + ceaf_f1) / 3.0;
    (mean * 1000.0).round() / 10.0
}

/// Sums counts across documents (micro aggregation): F1 is computed from the
/// summed numerators and denominators, not averaged over documents.
pub fn aggregate(counts: impl IntoIterator<Item = MetricCounts>) -> MetricCounts {
    counts
        .into_iter()
        .fold(MetricCounts::default(), MetricCounts::add)
}

/// Maximum total weight of a one-to-one assignment between rows and columns
/// of a non-negative weight matrix (Hungarian algorithm, O(n³)). Ties are
/// resolved deterministically in favor of the lowest index pair.
fn max_assignment_total(weights: &[Vec<f64>]) -> f64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    // The shortest-augmenting-path formulation solves minimization with
    // rows <= cols; negate for maximization and transpose when needed.
    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let cost = |i: usize, j: usize| -> f64 {
        if transpose {
            -weights[j][i]
        } else {
            -weights[i][j]
        }
    };

    const INF: f64 = f64::INFINITY;
    // 1-based arrays; assignment[j] is the row matched to column j.
    let mut potential_row = vec![0.0f64; n + 1];
    let mut potential_col = vec![0.0f64; m + 1];
    let mut assignment = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        assignment[0] = i;
        let mut j0 = 0usize;
        let mut min_value = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = assignment[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let current = cost(i0 - 1, j - 1) - potential_row[i0] - potential_col[j];
                if current < min_value[j] {
                    min_value[j] = current;
                    way[j] = j0;
                }
                if min_value[j] < delta {
                    delta = min_value[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    potential_row[assignment[j]] += delta;
                    potential_col[j] -= delta;
                } else {
                    min_value[j] -= delta;
                }
            }
            j0 = j1;
            if assignment[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assignment[j0] = assignment[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0.0;
    for j in 1..=m {
        if assignment[j] != 0 {
            total -= cost(assignment[j] - 1, j - 1);
        }
    }
    total
}

/// The four per-document metric count sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct DocumentScore {
    pub muc: MetricCounts,
    pub b3: MetricCounts,
    pub ceaf_e: MetricCounts,
    pub mentions: MetricCounts,
}

impl DocumentScore {
    pub fn compute(key: &[Vec<Span>], response: &[Vec<Span>]) -> DocumentScore {
        DocumentScore {
            muc: score_muc(key, response),
            b3: score_b3(key, response),
            ceaf_e: score_ceaf_e(key, response),
            mentions: score_mention_detection(key, response),
        }
    }

    pub fn conll_f1(&self) -> f64 {
        conll_average(self.muc.f1(), self.b3.f1(), self.ceaf_e.f1())
    }
}

impl Add for DocumentScore {
    type Output = DocumentScore;

    fn add(self, other: DocumentScore) -> DocumentScore {
        DocumentScore {
            muc: self.muc + other.muc,
            b3: self.b3 + other.b3,
            ceaf_e: self.ceaf_e + other.ceaf_e,
            mentions: self.mentions + other.mentions,
        }
    }
}

/// One scored document with its grouping key.
#[derive(Debug, Clone)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub part: u32,
    pub genre: Option<Genre>,
    pub score: DocumentScore,
}

/// Averaging mode for report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Sum counts, then score. Matches the reference scorer.
    Micro,
    /// Mean of per-document P/R/F1. Non-standard; labeled as such.
    Macro,
}

/// Per-genre score report in the standard table layout.
#[derive(Debug, Clone)]
pub struct ScoreReport {
    documents: Vec<ScoredDocument>,
    averaging: Averaging,
}

#[derive(Debug, Clone, Copy, Default)]
struct RowScores {
    muc: (f64, f64, f64),
    b3: (f64, f64, f64),
    ceaf_e: (f64, f64, f64),
    mentions: (f64, f64, f64),
}

impl RowScores {
    fn conll(&self) -> f64 {
        conll_average(self.muc.2, self.b3.2, self.ceaf_e.2)
    }
}

impl ScoreReport {
    pub fn new(documents: Vec<ScoredDocument>, averaging: Averaging) -> ScoreReport {
        ScoreReport {
            documents,
            averaging,
        }
    }

    fn row(&self, docs: &[&ScoredDocument]) -> RowScores {
        fn prf(counts: MetricCounts) -> (f64, f64, f64) {
            (counts.precision(), counts.recall(), counts.f1())
        }
        match self.averaging {
            Averaging::Micro => {
                let total = docs
                    .iter()
                    .fold(DocumentScore::default(), |acc, d| acc + d.score);
                RowScores {
                    muc: prf(total.muc),
                    b3: prf(total.b3),
                    ceaf_e: prf(total.ceaf_e),
                    mentions: prf(total.mentions),
                }
            }
            Averaging::Macro => {
                let n = docs.len().max(1) as f64;
                let mut row = RowScores::default();
                for doc in docs {
                    for (slot, counts) in [
                        (&mut row.muc, doc.score.muc),
                        (&mut row.b3, doc.score.b3),
                        (&mut row.ceaf_e, doc.score.ceaf_e),
                        (&mut row.mentions, doc.score.mentions),
                    ] {
                        slot.0 += counts.precision() / n;
                        slot.1 += counts.recall() / n;
                        slot.2 += counts.f1() / n;
                    }
                }
                row
            }
        }
    }

    fn rows(&self) -> Vec<(String, RowScores)> {
        let mut rows = Vec::new();
        for genre in Genre::ALL {
            let docs: Vec<&ScoredDocument> = self
                .documents
                .iter()
                .filter(|d| d.genre == Some(genre))
                .collect();
            if !docs.is_empty() {
                rows.push((genre.label().to_string(), self.row(&docs)));
            }
        }
        let unknown: Vec<&ScoredDocument> = self
            .documents
            .iter()
            .filter(|d| d.genre.is_none())
            .collect();
        if !unknown.is_empty() {
            rows.push(("unknown".to_string(), self.row(&unknown)));
        }
        rows
    }

    fn all_row(&self) -> RowScores {
        self.row(&self.documents.iter().collect::<Vec<_>>())
    }

    /// Aligned text table: P/R/F1 per metric, the CoNLL average, and
    /// mention detection, one row per genre plus a total row.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        if self.averaging == Averaging::Macro {
            out.push_str("# macro-averaged over documents (non-standard)\n");
        }
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>6} {:>6}   {:>6} {:>6} {:>6}   {:>6} {:>6} {:>6}   {:>7}   {:>6} {:>6} {:>6}",
            "Genre", "MUC-P", "MUC-R", "MUC-F1", "B3-P", "B3-R", "B3-F1",
            "CEAF-P", "CEAF-R", "CEAF-F1", "Avg-F1", "MD-P", "MD-R", "MD-F1",
        );
        let mut write_row = |label: &str, row: &RowScores| {
            let _ = writeln!(
                out,
                "{:<14} {:>6.1} {:>6.1} {:>6.1}   {:>6.1} {:>6.1} {:>6.1}   {:>6.1} {:>6.1} {:>6.1}   {:>7.1}   {:>6.1} {:>6.1} {:>6.1}",
                label,
                row.muc.0 * 100.0, row.muc.1 * 100.0, row.muc.2 * 100.0,
                row.b3.0 * 100.0, row.b3.1 * 100.0, row.b3.2 * 100.0,
                row.ceaf_e.0 * 100.0, row.ceaf_e.1 * 100.0, row.ceaf_e.2 * 100.0,
                row.conll(),
                row.mentions.0 * 100.0, row.mentions.1 * 100.0, row.mentions.2 * 100.0,
            );
        };
        for (label, row) in self.rows() {
            write_row(&label, &row);
        }
        write_row("all", &self.all_row());
        out
    }

    /// Machine-readable lines: `genre<TAB>metric<TAB>P<TAB>R<TAB>F1`.
    /// The CoNLL average appears as metric `conll` with `-` placeholders
    /// for P and R.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        let mut write_rows = |label: &str, row: &RowScores| {
            for (metric, (p, r, f1)) in [
                ("muc", row.muc),
                ("b3", row.b3),
                ("ceafe", row.ceaf_e),
                ("mentions", row.mentions),
            ] {
                let _ = writeln!(
                    out,
                    "{label}\t{metric}\t{:.1}\t{:.1}\t{:.1}",
                    p * 100.0,
                    r * 100.0,
                    f1 * 100.0
                );
            }
            let _ = writeln!(out, "{label}\tconll\t-\t-\t{:.1}", row.conll());
        };
        for (label, row) in self.rows() {
            write_rows(&label, &row);
        }
        write_rows("all", &self.all_row());
        out
    }
}
