#![allow(dead_code)]

//! Shared helpers for the integration suites: fixture loading, a randomized
//! small-document generator, invariant checks over converted documents, and
//! independent brute-force scorers used as oracles.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::Rng;

use corefconv::analysis::{classify_definiteness, is_common_compound_modifier, DeterminerLexicon};
use corefconv::ingest::CorpusSource;
use corefconv::model::{Document, Genre, Markable, RelType, RelationEdge, Token};
use corefconv::scorer::Span;

pub const FIXTURE_DOC_IDS: [&str; 7] = [
    "GUM_academic_insights",
    "GUM_fiction_farm",
    "GUM_news_lens",
    "GUM_reddit_visit",
    "GUM_speech_worldcup",
    "GUM_voyage_gallery",
    "GUM_voyage_viewing",
];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn load_fixture(doc_id: &str) -> Document {
    CorpusSource::discover(fixture_dir())
        .expect("fixture dir")
        .load_document(doc_id)
        .unwrap_or_else(|e| panic!("loading fixture {doc_id}: {e}"))
}

pub fn load_all_fixtures() -> Vec<Document> {
    FIXTURE_DOC_IDS.iter().map(|id| load_fixture(id)).collect()
}

/// The cluster partition of a document as a canonical set of span sets.
pub fn partition(doc: &Document) -> BTreeSet<BTreeSet<(usize, usize)>> {
    doc.derive_clusters(&RelType::IDENTITY)
        .iter()
        .map(|cluster| {
            cluster
                .members
                .iter()
                .map(|id| {
                    let mk = doc.markable(id).expect("member exists");
                    (mk.start, mk.end)
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Randomized document generation
// ---------------------------------------------------------------------------

const NOUNS: [&str; 8] = [
    "farm", "lens", "report", "surgery", "gallery", "way", "collection", "town",
];
const PROPER: [&str; 6] = ["Rachel", "Carroll", "Allergan", "Zurbaran", "Claire", "Smith"];
const PRONOUNS: [&str; 6] = ["it", "she", "he", "they", "we", "that"];
const VERBS: [&str; 6] = ["took", "lived", "said", "means", "holds", "knew"];
const ADJECTIVES: [&str; 5] = ["good", "complex", "unique", "foldable", "novel"];
const DETERMINERS: [&str; 6] = ["the", "a", "this", "some", "every", "another"];
const ADPOSITIONS: [&str; 4] = ["on", "at", "with", "for"];
const ENTITY_TYPES: [&str; 5] = ["person", "place", "object", "event", "abstract"];

fn make_token(rng: &mut StdRng, head: usize, is_root: bool) -> Token {
    let class = if is_root { 4 } else { rng.gen_range(0..12) };
    let (form, upos, xpos, deprel): (&str, &str, &str, &str) = match class {
        0 | 1 | 2 => (
            NOUNS[rng.gen_range(0..NOUNS.len())],
            "NOUN",
            "NN",
            ["nsubj", "obj", "obl", "nmod"][rng.gen_range(0..4)],
        ),
        3 => (
            PROPER[rng.gen_range(0..PROPER.len())],
            "PROPN",
            "NNP",
            ["nsubj", "obj", "obl", "flat"][rng.gen_range(0..4)],
        ),
        4 | 5 => (
            VERBS[rng.gen_range(0..VERBS.len())],
            "VERB",
            "VBD",
            if is_root { "root" } else { ["advcl", "ccomp", "xcomp", "acl"][rng.gen_range(0..4)] },
        ),
        6 | 7 => (
            PRONOUNS[rng.gen_range(0..PRONOUNS.len())],
            "PRON",
            "PRP",
            ["nsubj", "obj", "obl", "nmod:poss"][rng.gen_range(0..4)],
        ),
        8 => (
            DETERMINERS[rng.gen_range(0..DETERMINERS.len())],
            "DET",
            "DT",
            "det",
        ),
        9 => (
            ADJECTIVES[rng.gen_range(0..ADJECTIVES.len())],
            "ADJ",
            "JJ",
            "amod",
        ),
        10 => (
            ADPOSITIONS[rng.gen_range(0..ADPOSITIONS.len())],
            "ADP",
            "IN",
            "case",
        ),
        _ => (",", ",", ",", "punct"),
    };
    let upos = if class == 11 { "PUNCT" } else { upos };
    Token::new(form, form.to_lowercase(), upos, xpos, head, deprel)
}

struct SentencePlan {
    tokens: Vec<Token>,
    /// Local (0-based) positions of appositive template pairs (first, second).
    appos_pairs: Vec<(usize, usize)>,
}

/// A random dependency tree: every non-root token attaches to a token that
/// is already connected, so the result is always a single tree.
fn random_sentence(rng: &mut StdRng) -> SentencePlan {
    let n = rng.gen_range(4..=10);
    let root = rng.gen_range(0..n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order.retain(|&i| i != root);
    order.insert(0, root);

    let mut heads = vec![0usize; n];
    let mut attached = vec![root];
    for &node in order.iter().skip(1) {
        let head = attached[rng.gen_range(0..attached.len())];
        heads[node] = head + 1;
        attached.push(node);
    }

    let mut tokens: Vec<Token> = (0..n)
        .map(|i| {
            let t = make_token(rng, heads[i], i == root);
            t
        })
        .collect();

    let mut appos_pairs = Vec::new();
    if rng.gen_bool(0.45) {
        // Appositive template: "N , N" where the second noun attaches to the
        // first and the first attaches into the existing tree.
        let attach_to = rng.gen_range(0..tokens.len());
        let first = tokens.len();
        tokens.push(Token::new(
            NOUNS[rng.gen_range(0..NOUNS.len())],
            "noun",
            "NOUN",
            "NN",
            attach_to + 1,
            "obl",
        ));
        tokens.push(Token::new(",", ",", "PUNCT", ",", first + 1, "punct"));
        tokens.push(Token::new(
            NOUNS[rng.gen_range(0..NOUNS.len())],
            "noun",
            "NOUN",
            "NN",
            first + 1,
            "appos",
        ));
        appos_pairs.push((first, first + 2));
    }
    if rng.gen_bool(0.35) {
        // Compound template: a common-noun modifier under a common noun.
        let attach_to = rng.gen_range(0..tokens.len());
        let modifier = tokens.len();
        tokens.push(Token::new(
            NOUNS[rng.gen_range(0..NOUNS.len())],
            "noun",
            "NOUN",
            "NN",
            modifier + 2,
            "compound",
        ));
        tokens.push(Token::new(
            NOUNS[rng.gen_range(0..NOUNS.len())],
            "noun",
            "NOUN",
            "NN",
            attach_to + 1,
            "obl",
        ));
    }
    SentencePlan {
        tokens,
        appos_pairs,
    }
}

fn crosses(a: (usize, usize), b: (usize, usize)) -> bool {
    let overlap = a.0 <= b.1 && b.0 <= a.1;
    let nested = (a.0 <= b.0 && b.1 <= a.1) || (b.0 <= a.0 && a.1 <= b.1);
    overlap && !nested
}

fn contains(outer: (usize, usize), inner: (usize, usize)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1 && outer != inner
}

/// Generates a small random document that satisfies the input contract:
/// valid trees, in-sentence non-crossing markable spans, chain-shaped edges
/// (at most one outgoing identity edge per markable, nested mentions only
/// linked to their innermost container), and appositions restricted to
/// adjacent single-token nominals so that merging cannot create crossing or
/// verbal-headed spans.
pub fn random_document(rng: &mut StdRng, index: usize) -> Document {
    let genre = Genre::ALL[rng.gen_range(0..Genre::ALL.len())];
    let doc_id = format!("GUM_{}_rand{index}", genre.label());

    let n_sentences = rng.gen_range(1..=5);
    let mut plans: Vec<SentencePlan> = (0..n_sentences).map(|_| random_sentence(rng)).collect();

    if rng.gen_bool(0.3) {
        for (s, plan) in plans.iter_mut().enumerate() {
            let name = format!("S{}", s % 2 + 1);
            for token in &mut plan.tokens {
                token.speaker = Some(name.clone());
            }
        }
    }

    let mut offsets = Vec::new();
    let mut total = 0usize;
    for plan in &plans {
        offsets.push(total);
        total += plan.tokens.len();
    }

    // Spans: appositive template tokens first, then random spans that never
    // cross an existing span.
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut appos_candidates: Vec<(usize, usize)> = Vec::new();
    for (s, plan) in plans.iter().enumerate() {
        for &(first, second) in &plan.appos_pairs {
            let a = offsets[s] + first;
            let b = offsets[s] + second;
            if rng.gen_bool(0.85) {
                spans.push((a, a));
                spans.push((b, b));
                appos_candidates.push((spans.len() - 2, spans.len() - 1));
            }
        }
    }

    let target = rng.gen_range(1..=30usize).saturating_sub(spans.len());
    for _ in 0..target * 3 {
        if spans.len() >= 30 {
            break;
        }
        let s = rng.gen_range(0..plans.len());
        let len = plans[s].tokens.len();
        let start_local = rng.gen_range(0..len);
        let width = rng.gen_range(1..=4.min(len - start_local));
        let candidate = (
            offsets[s] + start_local,
            offsets[s] + start_local + width - 1,
        );
        if spans.contains(&candidate) {
            continue;
        }
        if spans.iter().any(|&existing| crosses(existing, candidate)) {
            continue;
        }
        spans.push(candidate);
    }

    let markables: Vec<Markable> = spans
        .iter()
        .enumerate()
        .map(|(i, &(start, end))| {
            Markable::new(
                format!("m{i}"),
                start,
                end,
                ENTITY_TYPES[rng.gen_range(0..ENTITY_TYPES.len())],
            )
        })
        .collect();

    // Innermost strict container of each span, if any.
    let container: Vec<Option<usize>> = spans
        .iter()
        .map(|&span| {
            spans
                .iter()
                .enumerate()
                .filter(|(_, &other)| contains(other, span))
                .min_by_key(|(_, &other)| other.1 - other.0)
                .map(|(i, _)| i)
        })
        .collect();

    // Heads are needed before edge generation: a mention nested inside a
    // verbal span never links to it (the container contracts to its head
    // verb, which would reorder the pair mid-chain).
    let sentences: Vec<Vec<Token>> = plans.into_iter().map(|p| p.tokens).collect();
    let probe = Document::new(doc_id.clone(), sentences.clone(), markables.clone(), Vec::new())
        .expect("generated document is valid");
    let verbal_headed = |idx: usize| -> bool {
        let mk = probe.markable(&markables[idx].id).expect("probe markable");
        probe.token(mk.head_index).map_or(false, |t| t.upos == "VERB")
    };

    let mut edges: Vec<RelationEdge> = Vec::new();
    let mut in_appos: BTreeSet<usize> = BTreeSet::new();

    // Appositive template edges, subject to the hull condition: nothing else
    // may intrude between the two conjuncts.
    for &(a, b) in &appos_candidates {
        let hull = (spans[a].0, spans[b].1);
        let intrudes = spans.iter().enumerate().any(|(i, &s)| {
            i != a
                && i != b
                && s.0 <= hull.1
                && hull.0 <= s.1
                && !contains(spans[a], s)
                && !contains(spans[b], s)
        });
        if !intrudes && rng.gen_bool(0.8) {
            edges.push(RelationEdge::new(
                markables[b].id.clone(),
                markables[a].id.clone(),
                RelType::Appos,
            ));
            in_appos.insert(a);
            in_appos.insert(b);
        }
    }

    // Chain edges in document order: each markable picks at most one
    // antecedent (or a forward cataphoric target).
    let mut order: Vec<usize> = (0..spans.len()).collect();
    order.sort_by_key(|&i| spans[i]);
    for (pos, &j) in order.iter().enumerate() {
        if in_appos.contains(&j) && edges.iter().any(|e| e.anaphor == markables[j].id) {
            continue;
        }
        if let Some(c) = container[j] {
            // Nested mentions may only link to their innermost container.
            if spans[c].0 < spans[j].0 && !verbal_headed(c) && rng.gen_bool(0.5) {
                edges.push(RelationEdge::new(
                    markables[j].id.clone(),
                    markables[c].id.clone(),
                    if rng.gen_bool(0.5) { RelType::Ana } else { RelType::Coref },
                ));
            }
            continue;
        }
        let earlier: Vec<usize> = order[..pos]
            .iter()
            .copied()
            .filter(|&i| container[i].is_none() && spans[i].0 < spans[j].0)
            .collect();
        let later: Vec<usize> = order[pos + 1..]
            .iter()
            .copied()
            .filter(|&k| container[k].is_none() && spans[k].0 > spans[j].0)
            .collect();
        if !later.is_empty() && rng.gen_bool(0.08) {
            let k = later[rng.gen_range(0..later.len())];
            edges.push(RelationEdge::new(
                markables[j].id.clone(),
                markables[k].id.clone(),
                RelType::Cata,
            ));
            continue;
        }
        if earlier.is_empty() || !rng.gen_bool(0.6) {
            continue;
        }
        let i = earlier[rng.gen_range(0..earlier.len())];
        let rel = match rng.gen_range(0..7) {
            0 => RelType::Bridge,
            1 | 2 | 3 => RelType::Ana,
            _ => RelType::Coref,
        };
        edges.push(RelationEdge::new(
            markables[j].id.clone(),
            markables[i].id.clone(),
            rel,
        ));
    }

    Document::new(doc_id, sentences, markables, edges).expect("generated document is valid")
}

// ---------------------------------------------------------------------------
// Converted-document invariants
// ---------------------------------------------------------------------------

/// Checks the post-conversion invariants and returns human-readable
/// violations (empty = all good).
pub fn converted_invariant_violations(doc: &Document) -> Vec<String> {
    let mut violations = Vec::new();
    let lexicon = DeterminerLexicon::default();

    for edge in doc.edges() {
        if matches!(
            edge.rel_type,
            RelType::Bridge | RelType::Cata | RelType::Appos
        ) {
            violations.push(format!("{}: residual edge {edge}", doc.doc_id()));
        }
    }

    for mk in doc.markables() {
        if is_common_compound_modifier(doc, mk) {
            violations.push(format!(
                "{}: compound-modifier mention {} survived",
                doc.doc_id(),
                mk.id
            ));
        }
        let head_is_verb = doc.token(mk.head_index).map_or(false, |t| t.upos == "VERB");
        if head_is_verb && mk.start != mk.end {
            violations.push(format!(
                "{}: verbal mention {} spans {}-{}",
                doc.doc_id(),
                mk.id,
                mk.start,
                mk.end
            ));
        }
    }

    for cluster in doc.derive_clusters(&RelType::IDENTITY) {
        if cluster.is_singleton() {
            violations.push(format!(
                "{}: singleton cluster {}",
                doc.doc_id(),
                cluster.members[0]
            ));
        }
        let members: Vec<&Markable> = cluster
            .members
            .iter()
            .map(|id| doc.markable(id).expect("member exists"))
            .collect();
        for mk in members.iter().skip(1) {
            if !classify_definiteness(doc, mk, &lexicon).is_definite() {
                violations.push(format!(
                    "{}: indefinite non-initial mention {}",
                    doc.doc_id(),
                    mk.id
                ));
            }
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if a.strictly_contains(b) || b.strictly_contains(a) {
                    violations.push(format!(
                        "{}: nested coreferent pair {} / {}",
                        doc.doc_id(),
                        a.id,
                        b.id
                    ));
                }
            }
        }
    }
    violations
}

// ---------------------------------------------------------------------------
// Independent scoring oracles
// ---------------------------------------------------------------------------

fn find_cluster<'a>(clusters: &'a [Vec<Span>], mention: &Span) -> Option<&'a Vec<Span>> {
    clusters.iter().find(|c| c.contains(mention))
}

/// Direct evaluation of the MUC formula with naive scans.
pub fn muc_oracle(key: &[Vec<Span>], response: &[Vec<Span>]) -> (f64, f64, f64, f64) {
    fn side(own: &[Vec<Span>], other: &[Vec<Span>]) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for cluster in own {
            let mut cells: Vec<Option<usize>> = Vec::new();
            let mut unmatched = 0;
            for mention in cluster {
                match other.iter().position(|c| c.contains(mention)) {
                    Some(idx) => {
                        if !cells.contains(&Some(idx)) {
                            cells.push(Some(idx));
                        }
                    }
                    None => unmatched += 1,
                }
            }
            num += cluster.len() as f64 - (cells.len() + unmatched) as f64;
            den += cluster.len() as f64 - 1.0;
        }
        (num, den)
    }
    let (rn, rd) = side(key, response);
    let (pn, pd) = side(response, key);
    (rn, rd, pn, pd)
}

/// Direct evaluation of the B³ formula with naive scans.
pub fn b3_oracle(key: &[Vec<Span>], response: &[Vec<Span>]) -> (f64, f64, f64, f64) {
    fn side(own: &[Vec<Span>], other: &[Vec<Span>]) -> (f64, f64) {
        let mut num = 0.0;
        let mut den = 0.0;
        for cluster in own {
            for mention in cluster {
                den += 1.0;
                if let Some(other_cluster) = find_cluster(other, mention) {
                    let intersection = cluster
                        .iter()
                        .filter(|m| other_cluster.contains(m))
                        .count();
                    num += intersection as f64 / cluster.len() as f64;
                }
            }
        }
        (num, den)
    }
    let (rn, rd) = side(key, response);
    let (pn, pd) = side(response, key);
    (rn, rd, pn, pd)
}

/// CEAF_φ4 by exhaustive enumeration of all one-to-one cluster alignments.
pub fn ceaf_oracle_total(key: &[Vec<Span>], response: &[Vec<Span>]) -> f64 {
    fn phi4(a: &[Span], b: &[Span]) -> f64 {
        let common = a.iter().filter(|m| b.contains(m)).count();
        2.0 * common as f64 / (a.len() + b.len()) as f64
    }
    fn best(key: &[Vec<Span>], response: &[Vec<Span>], used: &mut Vec<bool>, i: usize) -> f64 {
        if i == key.len() {
            return 0.0;
        }
        // Leaving a key cluster unaligned is never better than aligning it
        // (weights are non-negative) but is enumerated for completeness.
        let mut max = best(key, response, used, i + 1);
        for j in 0..response.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let total = phi4(&key[i], &response[j]) + best(key, response, used, i + 1);
            used[j] = false;
            if total > max {
                max = total;
            }
        }
        max
    }
    best(key, response, &mut vec![false; response.len()], 0)
}

/// All clusterings of subsets of a `universe`-mention document into at most
/// `max_blocks` clusters, including the empty clustering.
pub fn enumerate_configurations(universe: usize, max_blocks: usize) -> Vec<Vec<Vec<Span>>> {
    let mut configs = Vec::new();
    let mut blocks: Vec<Vec<Span>> = Vec::new();
    fn recurse(
        item: usize,
        universe: usize,
        max_blocks: usize,
        blocks: &mut Vec<Vec<Span>>,
        configs: &mut Vec<Vec<Vec<Span>>>,
    ) {
        if item == universe {
            configs.push(blocks.clone());
            return;
        }
        let mention = Span::new(item, item);
        // Skip this mention entirely.
        recurse(item + 1, universe, max_blocks, blocks, configs);
        for b in 0..blocks.len() {
            blocks[b].push(mention);
            recurse(item + 1, universe, max_blocks, blocks, configs);
            blocks[b].pop();
        }
        if blocks.len() < max_blocks {
            blocks.push(vec![mention]);
            recurse(item + 1, universe, max_blocks, blocks, configs);
            blocks.pop();
        }
    }
    recurse(0, universe, max_blocks, &mut blocks, &mut configs);
    configs
}
