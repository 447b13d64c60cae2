//! Deterministic conversion of richly annotated multilayer coreference
//! corpora (dependency trees plus an exhaustive markable/relation layer)
//! into the OntoNotes coreference scheme, with CoNLL-2012 emission, the
//! standard coreference metrics (MUC, B³, CEAF_φ4) and genre-breakdown
//! corpus statistics.
//!
//! The conversion applies eight ordered rules: bridging and cataphora
//! removal, verbal span contraction, apposition merging, noun-compound
//! unlinking, copula predicate removal, nested entity removal, chain
//! adjustment by definiteness, and finally singleton removal.

pub mod analysis;
pub mod cli;
pub mod conll;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod scorer;
pub mod stats;

pub use model::{
    Cluster, Document, Genre, Markable, MarkableId, ModelError, RelType, RelationEdge, Token,
};
pub use pipeline::{convert, ConversionTrace, ConvertOptions};
pub use scorer::Span;

#[cfg(test)]
pub(crate) mod testkit {
    use crate::model::{Document, Markable, RelationEdge, Token};

    pub fn tok(form: &str, upos: &str, head: usize, deprel: &str) -> Token {
        let xpos = match upos {
            "NOUN" => "NN",
            "PROPN" => "NNP",
            "PRON" => "PRP",
            "VERB" => "VBD",
            "AUX" => "VBZ",
            "DET" => "DT",
            "ADJ" => "JJ",
            "ADV" => "RB",
            "ADP" => "IN",
            "PART" => "TO",
            "SCONJ" => "IN",
            "CCONJ" => "CC",
            "PUNCT" => ".",
            _ => "XX",
        };
        Token::new(form, form.to_lowercase(), upos, xpos, head, deprel)
    }

    pub fn doc_with(
        sentences: Vec<Vec<Token>>,
        markables: Vec<Markable>,
        edges: Vec<RelationEdge>,
    ) -> Document {
        doc_with_id("GUM_news_x", sentences, markables, edges)
    }

    pub fn doc_with_id(
        doc_id: &str,
        sentences: Vec<Vec<Token>>,
        markables: Vec<Markable>,
        edges: Vec<RelationEdge>,
    ) -> Document {
        Document::new(doc_id, sentences, markables, edges).expect("valid test document")
    }
}
