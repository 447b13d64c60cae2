//! In-memory representation of an annotated document and derivation of
//! coreference clusters from the relation graph.
//!
//! A [`Document`] is immutable after construction: every transformation
//! returns a new value, so documents can be processed in parallel without
//! shared mutable state. Clusters are never stored; they are always derived
//! from the edge set via [`Document::derive_clusters`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Identifier for a markable, unique within a document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkableId(String);

impl MarkableId {
    pub fn new(id: impl Into<String>) -> Self {
        MarkableId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for MarkableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for MarkableId {
    fn from(s: &str) -> Self {
        MarkableId(s.to_string())
    }
}

impl From<String> for MarkableId {
    fn from(s: String) -> Self {
        MarkableId(s)
    }
}

/// The twelve genre labels a document id may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Genre {
    Academic,
    Bio,
    Conversation,
    Fiction,
    Interview,
    News,
    Reddit,
    Speech,
    Textbook,
    Vlog,
    Voyage,
    Whow,
}

impl Genre {
    /// All genres in alphabetical order, the canonical report order.
    pub const ALL: [Genre; 12] = [
        Genre::Academic,
        Genre::Bio,
        Genre::Conversation,
        Genre::Fiction,
        Genre::Interview,
        Genre::News,
        Genre::Reddit,
        Genre::Speech,
        Genre::Textbook,
        Genre::Vlog,
        Genre::Voyage,
        Genre::Whow,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Genre::Academic => "academic",
            Genre::Bio => "bio",
            Genre::Conversation => "conversation",
            Genre::Fiction => "fiction",
            Genre::Interview => "interview",
            Genre::News => "news",
            Genre::Reddit => "reddit",
            Genre::Speech => "speech",
            Genre::Textbook => "textbook",
            Genre::Vlog => "vlog",
            Genre::Voyage => "voyage",
            Genre::Whow => "whow",
        }
    }

    pub fn parse(label: &str) -> Option<Genre> {
        Genre::ALL.into_iter().find(|g| g.label() == label)
    }

    /// Extracts the genre from a `<corpus>_<genre>_<name>` document id.
    /// Returns `None` when the id does not follow the pattern or the genre
    /// label is not one of the twelve known ones.
    pub fn from_doc_id(doc_id: &str) -> Option<Genre> {
        let mut parts = doc_id.split('_');
        let _corpus = parts.next()?;
        let genre = parts.next()?;
        parts.next()?; // a name part must exist
        Genre::parse(genre)
    }
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Type of a coreference relation edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelType {
    Coref,
    Ana,
    Cata,
    Bridge,
    Appos,
}

impl RelType {
    /// Relation types that assert identity of reference. Bridging and
    /// cataphora links are excluded when deriving output clusters.
    pub const IDENTITY: [RelType; 3] = [RelType::Coref, RelType::Ana, RelType::Appos];

    pub fn label(self) -> &'static str {
        match self {
            RelType::Coref => "coref",
            RelType::Ana => "ana",
            RelType::Cata => "cata",
            RelType::Bridge => "bridge",
            RelType::Appos => "appos",
        }
    }

    /// Parses a relation label. Subtyped bridging labels (`bridge:aggr`,
    /// `bridge:part`, ...) normalize to [`RelType::Bridge`].
    pub fn parse(label: &str) -> Option<RelType> {
        match label {
            "coref" => Some(RelType::Coref),
            "ana" => Some(RelType::Ana),
            "cata" => Some(RelType::Cata),
            "bridge" => Some(RelType::Bridge),
            "appos" => Some(RelType::Appos),
            other if other.starts_with("bridge:") => Some(RelType::Bridge),
            _ => None,
        }
    }
}

impl fmt::Display for RelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One word with its morphosyntactic and dependency attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Document-global ordinal, 0-based. Assigned at document construction.
    pub index: usize,
    /// 1-based position within the sentence. Assigned at construction.
    pub sentence_index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    /// Sentence-local 1-based index of the governing token; 0 = root.
    pub head: usize,
    pub deprel: String,
    pub speaker: Option<String>,
}

impl Token {
    pub fn new(
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        xpos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Token {
        Token {
            index: 0,
            sentence_index: 0,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            xpos: xpos.into(),
            head,
            deprel: deprel.into(),
            speaker: None,
        }
    }

    pub fn with_speaker(mut self, speaker: impl Into<String>) -> Token {
        self.speaker = Some(speaker.into());
        self
    }
}

/// A token span with an entity-layer identity and a syntactic head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Markable {
    pub id: MarkableId,
    /// Document-global token index, inclusive.
    pub start: usize,
    /// Document-global token index, inclusive.
    pub end: usize,
    /// Document-global index of the syntactic head token. Computed at
    /// document construction; always within `[start, end]`.
    pub head_index: usize,
    pub entity_type: String,
}

impl Markable {
    pub fn new(
        id: impl Into<MarkableId>,
        start: usize,
        end: usize,
        entity_type: impl Into<String>,
    ) -> Markable {
        Markable {
            id: id.into(),
            start,
            end,
            head_index: start,
            entity_type: entity_type.into(),
        }
    }

    /// True iff this span strictly contains `other` (contains it and the
    /// spans are not identical).
    pub fn strictly_contains(&self, other: &Markable) -> bool {
        self.start <= other.start
            && other.end <= self.end
            && (self.start, self.end) != (other.start, other.end)
    }
}

/// A typed directed link from an anaphor to its antecedent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationEdge {
    pub anaphor: MarkableId,
    pub antecedent: MarkableId,
    pub rel_type: RelType,
}

impl RelationEdge {
    pub fn new(
        anaphor: impl Into<MarkableId>,
        antecedent: impl Into<MarkableId>,
        rel_type: RelType,
    ) -> RelationEdge {
        RelationEdge {
            anaphor: anaphor.into(),
            antecedent: antecedent.into(),
            rel_type,
        }
    }

    pub fn touches(&self, id: &MarkableId) -> bool {
        &self.anaphor == id || &self.antecedent == id
    }
}

impl fmt::Display for RelationEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}", self.anaphor, self.antecedent, self.rel_type)
    }
}

/// A derived coreference cluster: markable ids in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub members: Vec<MarkableId>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("sentence {0} is empty")]
    EmptySentence(usize),
    #[error("sentence {sentence}, token {token}: head {head} out of range (sentence has {len} tokens)")]
    HeadOutOfRange {
        sentence: usize,
        token: usize,
        head: usize,
        len: usize,
    },
    #[error("sentence {sentence}, token {token}: token is its own head")]
    HeadSelfReference { sentence: usize, token: usize },
    #[error("sentence {sentence} has {count} root tokens, expected exactly one")]
    RootCount { sentence: usize, count: usize },
    #[error("duplicate markable id {0}")]
    DuplicateMarkableId(MarkableId),
    #[error("markable {id}: invalid span {start}-{end}")]
    InvalidSpan {
        id: MarkableId,
        start: usize,
        end: usize,
    },
    #[error("markable {id}: span {start}-{end} out of bounds (document has {len} tokens)")]
    SpanOutOfBounds {
        id: MarkableId,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("markable {id}: span {start}-{end} crosses a sentence boundary")]
    SpanCrossesSentence {
        id: MarkableId,
        start: usize,
        end: usize,
    },
    #[error("edge references unknown markable {0}")]
    UnknownEdgeEndpoint(MarkableId),
    #[error("edge on {0} links a markable to itself")]
    SelfLoopEdge(MarkableId),
    #[error("unknown markable {0}")]
    UnknownMarkable(MarkableId),
}

/// Sentences, markables and relation edges of one annotated document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    genre: Option<Genre>,
    sentences: Vec<Vec<Token>>,
    sentence_offsets: Vec<usize>,
    markables: Vec<Markable>,
    edges: Vec<RelationEdge>,
    has_gold_speakers: bool,
}

impl Document {
    /// Builds a document, assigning token indices, computing markable heads
    /// and validating the structural invariants.
    pub fn new(
        doc_id: impl Into<String>,
        mut sentences: Vec<Vec<Token>>,
        mut markables: Vec<Markable>,
        edges: Vec<RelationEdge>,
    ) -> Result<Document, ModelError> {
        let doc_id = doc_id.into();

        let mut offsets = Vec::with_capacity(sentences.len());
        let mut global = 0usize;
        for (s, sentence) in sentences.iter_mut().enumerate() {
            if sentence.is_empty() {
                return Err(ModelError::EmptySentence(s));
            }
            offsets.push(global);
            let len = sentence.len();
            let mut roots = 0usize;
            for (t, token) in sentence.iter_mut().enumerate() {
                token.index = global;
                token.sentence_index = t + 1;
                global += 1;
                if token.head > len {
                    return Err(ModelError::HeadOutOfRange {
                        sentence: s,
                        token: t + 1,
                        head: token.head,
                        len,
                    });
                }
                if token.head == token.sentence_index {
                    return Err(ModelError::HeadSelfReference {
                        sentence: s,
                        token: t + 1,
                    });
                }
                if token.head == 0 {
                    roots += 1;
                }
            }
            if roots != 1 {
                return Err(ModelError::RootCount {
                    sentence: s,
                    count: roots,
                });
            }
        }
        let token_count = global;

        let mut seen = HashSet::new();
        for mk in &mut markables {
            if !seen.insert(mk.id.clone()) {
                return Err(ModelError::DuplicateMarkableId(mk.id.clone()));
            }
            if mk.start > mk.end {
                return Err(ModelError::InvalidSpan {
                    id: mk.id.clone(),
                    start: mk.start,
                    end: mk.end,
                });
            }
            if mk.end >= token_count {
                return Err(ModelError::SpanOutOfBounds {
                    id: mk.id.clone(),
                    start: mk.start,
                    end: mk.end,
                    len: token_count,
                });
            }
            if sentence_of(&offsets, token_count, mk.start) != sentence_of(&offsets, token_count, mk.end)
            {
                return Err(ModelError::SpanCrossesSentence {
                    id: mk.id.clone(),
                    start: mk.start,
                    end: mk.end,
                });
            }
            mk.head_index = head_of_span(&sentences, &offsets, mk.start, mk.end);
        }
        markables.sort_by(|a, b| (a.start, a.end, &a.id).cmp(&(b.start, b.end, &b.id)));

        let mut deduped: Vec<RelationEdge> = Vec::with_capacity(edges.len());
        let mut edge_seen = HashSet::new();
        for edge in edges {
            if edge.anaphor == edge.antecedent {
                return Err(ModelError::SelfLoopEdge(edge.anaphor));
            }
            for endpoint in [&edge.anaphor, &edge.antecedent] {
                if !seen.contains(endpoint) {
                    return Err(ModelError::UnknownEdgeEndpoint(endpoint.clone()));
                }
            }
            if edge_seen.insert(edge.clone()) {
                deduped.push(edge);
            }
        }

        let has_gold_speakers = sentences
            .iter()
            .flatten()
            .any(|token| token.speaker.is_some());
        let genre = Genre::from_doc_id(&doc_id);

        Ok(Document {
            doc_id,
            genre,
            sentences,
            sentence_offsets: offsets,
            markables,
            edges: deduped,
            has_gold_speakers,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn genre(&self) -> Option<Genre> {
        self.genre
    }

    pub fn sentences(&self) -> &[Vec<Token>] {
        &self.sentences
    }

    pub fn markables(&self) -> &[Markable] {
        &self.markables
    }

    pub fn edges(&self) -> &[RelationEdge] {
        &self.edges
    }

    pub fn has_gold_speakers(&self) -> bool {
        self.has_gold_speakers
    }

    pub fn token_count(&self) -> usize {
        self.sentence_offsets
            .last()
            .map(|off| off + self.sentences.last().map_or(0, Vec::len))
            .unwrap_or(0)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flatten()
    }

    /// Token by document-global index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        let s = self.sentence_of(index)?;
        self.sentences[s].get(index - self.sentence_offsets[s])
    }

    /// Index of the sentence containing the given global token index.
    pub fn sentence_of(&self, index: usize) -> Option<usize> {
        if index >= self.token_count() {
            return None;
        }
        Some(sentence_of(&self.sentence_offsets, self.token_count(), index))
    }

    pub fn sentence_offset(&self, sentence: usize) -> usize {
        self.sentence_offsets[sentence]
    }

    /// Global index of the governor of the token at `index`, or `None` when
    /// that token is the sentence root.
    pub fn governor(&self, index: usize) -> Option<usize> {
        let token = self.token(index)?;
        if token.head == 0 {
            return None;
        }
        let s = self.sentence_of(index)?;
        Some(self.sentence_offsets[s] + token.head - 1)
    }

    /// Tokens of the sentence containing `index` that attach to it.
    pub fn dependents(&self, index: usize) -> Vec<&Token> {
        let Some(s) = self.sentence_of(index) else {
            return Vec::new();
        };
        let local = index - self.sentence_offsets[s] + 1;
        self.sentences[s]
            .iter()
            .filter(|t| t.head == local)
            .collect()
    }

    pub fn markable(&self, id: &MarkableId) -> Option<&Markable> {
        self.markables.iter().find(|m| &m.id == id)
    }

    pub(crate) fn compute_head(&self, start: usize, end: usize) -> usize {
        head_of_span(&self.sentences, &self.sentence_offsets, start, end)
    }

    /// Connected components of the undirected graph induced by edges whose
    /// type is in `edge_filter`. Markables touching no such edge appear as
    /// singleton clusters. Members are sorted by (start, end); clusters by
    /// their first member.
    pub fn derive_clusters(&self, edge_filter: &[RelType]) -> Vec<Cluster> {
        let index_of: HashMap<&MarkableId, usize> = self
            .markables
            .iter()
            .enumerate()
            .map(|(i, m)| (&m.id, i))
            .collect();

        let mut parent: Vec<usize> = (0..self.markables.len()).collect();
        fn find(parent: &mut Vec<usize>, i: usize) -> usize {
            if parent[i] != i {
                let root = find(parent, parent[i]);
                parent[i] = root;
            }
            parent[i]
        }

        for edge in &self.edges {
            if !edge_filter.contains(&edge.rel_type) {
                continue;
            }
            let a = index_of[&edge.anaphor];
            let b = index_of[&edge.antecedent];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }

        let mut groups: BTreeMap<usize, Vec<MarkableId>> = BTreeMap::new();
        for i in 0..self.markables.len() {
            let root = find(&mut parent, i);
            groups
                .entry(root)
                .or_default()
                .push(self.markables[i].id.clone());
        }

        // Markables are stored sorted by (start, end, id), so group members
        // are already in document order; clusters sort by first member.
        let mut clusters: Vec<Cluster> = groups
            .into_values()
            .map(|members| Cluster { members })
            .collect();
        clusters.sort_by_key(|c| index_of[&c.members[0]]);
        clusters
    }

    /// Returns a copy of this document without the given markable and
    /// without any edge incident to it.
    pub fn remove_markable(&self, id: &MarkableId) -> Result<Document, ModelError> {
        if self.markable(id).is_none() {
            return Err(ModelError::UnknownMarkable(id.clone()));
        }
        let markables = self
            .markables
            .iter()
            .filter(|m| &m.id != id)
            .cloned()
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| !e.touches(id))
            .cloned()
            .collect();
        Document::new(self.doc_id.clone(), self.sentences.clone(), markables, edges)
    }

    /// Rebuilds this document with new markables and edges. The sentences
    /// are carried over unchanged; markable heads are recomputed.
    pub(crate) fn rebuild(
        &self,
        markables: Vec<Markable>,
        edges: Vec<RelationEdge>,
    ) -> Document {
        Document::new(self.doc_id.clone(), self.sentences.clone(), markables, edges)
            .expect("pipeline transformations preserve document validity")
    }
}

fn sentence_of(offsets: &[usize], token_count: usize, index: usize) -> usize {
    debug_assert!(index < token_count);
    match offsets.binary_search(&index) {
        Ok(s) => s,
        Err(ins) => ins - 1,
    }
}

/// The unique token in the span whose dependency head lies outside the span
/// or is the sentence root; when several qualify, the leftmost. When none
/// qualifies (ill-formed tree), falls back to the leftmost token.
fn head_of_span(
    sentences: &[Vec<Token>],
    offsets: &[usize],
    start: usize,
    end: usize,
) -> usize {
    let token_count = offsets
        .last()
        .map(|off| off + sentences.last().map_or(0, Vec::len))
        .unwrap_or(0);
    let s = sentence_of(offsets, token_count, start);
    let base = offsets[s];
    for global in start..=end {
        let token = &sentences[s][global - base];
        if token.head == 0 {
            return global;
        }
        let governor = base + token.head - 1;
        if governor < start || governor > end {
            return global;
        }
    }
    start
}
