//! Dependency-tree classifiers the conversion rules consult: head finding,
//! definiteness, mention type, and copula/compound/nesting detection.
//!
//! All functions here are pure and deterministic; they inspect the tokens of
//! a span and their dependents but never mutate the document.

use std::collections::BTreeSet;
use std::env;
use std::fs;
use std::path::Path;

use crate::model::{Document, Markable};

/// Environment variable naming a determiner-lexicon file that overrides the
/// built-in list.
pub const DET_LEXICON_ENV: &str = "COREFCONV_DET_LEXICON";

const DEFAULT_DEFINITE_DETERMINERS: [&str; 10] = [
    "the", "this", "that", "these", "those", "both", "all", "every", "each", "any",
];

/// Lemmas of determiners that mark a nominal as definite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterminerLexicon {
    lemmas: BTreeSet<String>,
}

impl Default for DeterminerLexicon {
    fn default() -> Self {
        DeterminerLexicon {
            lemmas: DEFAULT_DEFINITE_DETERMINERS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl DeterminerLexicon {
    /// Parses a lexicon file: one lemma per line, `#` comments allowed.
    pub fn parse(text: &str) -> DeterminerLexicon {
        let lemmas = text
            .lines()
            .map(str::trim)
            .filter(|line| !line.is_empty() && !line.starts_with('#'))
            .map(|line| line.to_string())
            .collect();
        DeterminerLexicon { lemmas }
    }

    pub fn from_file(path: &Path) -> std::io::Result<DeterminerLexicon> {
        Ok(DeterminerLexicon::parse(&fs::read_to_string(path)?))
    }

    /// Loads the file named by [`DET_LEXICON_ENV`] when set, otherwise the
    /// built-in lexicon.
    pub fn from_env_or_default() -> std::io::Result<DeterminerLexicon> {
        match env::var_os(DET_LEXICON_ENV) {
            Some(path) => DeterminerLexicon::from_file(Path::new(&path)),
            None => Ok(DeterminerLexicon::default()),
        }
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.lemmas.contains(lemma)
    }
}

/// Which of the four definiteness cases fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefiniteReason {
    Pronoun,
    Possessed,
    Proper,
    DefiniteDeterminer,
}

/// Result of the four-case definiteness test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    Definite(DefiniteReason),
    Indefinite,
}

impl Definiteness {
    pub fn is_definite(self) -> bool {
        matches!(self, Definiteness::Definite(_))
    }
}

/// Coarse mention type used for corpus statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MentionType {
    Proper,
    Pronoun,
    Other,
}

/// Syntactic head of a markable span: the unique token whose dependency head
/// lies outside the span (or is the sentence root); the leftmost when several
/// qualify, the leftmost token of the span when none does.
pub fn find_head(doc: &Document, markable: &Markable) -> usize {
    doc.compute_head(markable.start, markable.end)
}

/// Classifies a markable as definite or indefinite. A markable is definite
/// iff its head is a pronoun, the head is possessed (`nmod:poss`), the head
/// is a proper noun, or a definite determiner attaches to the head via `det`.
///
/// Only tokens inside the span are considered as dependents of the head, so
/// the result never changes when tokens outside the span are added.
pub fn classify_definiteness(
    doc: &Document,
    markable: &Markable,
    lexicon: &DeterminerLexicon,
) -> Definiteness {
    let head = doc
        .token(markable.head_index)
        .expect("markable head within document");

    if head.upos == "PRON" {
        return Definiteness::Definite(DefiniteReason::Pronoun);
    }

    let span_dependents: Vec<_> = doc
        .dependents(markable.head_index)
        .into_iter()
        .filter(|t| t.index >= markable.start && t.index <= markable.end)
        .collect();

    if span_dependents.iter().any(|t| t.deprel == "nmod:poss") {
        return Definiteness::Definite(DefiniteReason::Possessed);
    }
    if head.upos == "PROPN" {
        return Definiteness::Definite(DefiniteReason::Proper);
    }
    if span_dependents
        .iter()
        .any(|t| t.deprel == "det" && lexicon.contains(&t.lemma))
    {
        return Definiteness::Definite(DefiniteReason::DefiniteDeterminer);
    }
    Definiteness::Indefinite
}

/// Mention type from the head POS tag: PROPN is proper, PRON is pronoun,
/// anything else counts as other.
pub fn classify_mention_type(doc: &Document, markable: &Markable) -> MentionType {
    let head = doc
        .token(markable.head_index)
        .expect("markable head within document");
    match head.upos.as_str() {
        "PROPN" => MentionType::Proper,
        "PRON" => MentionType::Pronoun,
        _ => MentionType::Other,
    }
}

/// True iff `predicate` is the predicate of a copula construction whose
/// subject is `subject`: the predicate head is the clausal head, a token
/// attaches to it as `cop`, and the subject head attaches to it as `nsubj`.
pub fn is_copula_predicate(doc: &Document, subject: &Markable, predicate: &Markable) -> bool {
    let pred_head = predicate.head_index;
    // Clausal head: the predicate head's own governor lies outside the
    // predicate span, or the head is the sentence root.
    match doc.governor(pred_head) {
        Some(gov) if gov >= predicate.start && gov <= predicate.end => return false,
        _ => {}
    }
    let dependents = doc.dependents(pred_head);
    if !dependents.iter().any(|t| t.deprel == "cop") {
        return false;
    }
    dependents
        .iter()
        .any(|t| t.index == subject.head_index && t.deprel == "nsubj")
}

/// True iff the markable's head is a common-noun compound modifier of a
/// common noun. Proper-name modifiers are exempt.
pub fn is_common_compound_modifier(doc: &Document, markable: &Markable) -> bool {
    let head = doc
        .token(markable.head_index)
        .expect("markable head within document");
    if head.deprel != "compound" || head.upos != "NOUN" {
        return false;
    }
    match doc.governor(markable.head_index) {
        Some(gov) => doc.token(gov).map_or(false, |t| t.upos == "NOUN"),
        None => false,
    }
}

/// True iff `inner` is strictly contained within `outer` (contained and not
/// span-identical).
pub fn is_nested_in_antecedent(inner: &Markable, outer: &Markable) -> bool {
    outer.strictly_contains(inner)
}
