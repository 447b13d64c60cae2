//! The eight ordered conversion steps that map the exhaustive source
//! annotation scheme onto the OntoNotes one, plus the orchestrator.
//!
//! Every step is a pure transformation `Document -> Document` that touches
//! only the markable and edge sets; tokens are never modified. Steps strand
//! markables as singletons instead of deleting them; deletion happens once,
//! in the final step, so that singletons created along the way are caught.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use crate::analysis::{
    classify_definiteness, is_common_compound_modifier, is_copula_predicate,
    is_nested_in_antecedent, DeterminerLexicon,
};
use crate::model::{Document, Markable, MarkableId, RelType, RelationEdge};

/// The conversion steps in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineStep {
    RemoveBridgingAndCataphora,
    ContractVerbalSpans,
    MergeAppositions,
    RemoveNnCompounding,
    RemoveCopula,
    RemoveNestedEntities,
    AdjustChainsByDefiniteness,
    RemoveSingletons,
}

impl PipelineStep {
    pub const ALL: [PipelineStep; 8] = [
        PipelineStep::RemoveBridgingAndCataphora,
        PipelineStep::ContractVerbalSpans,
        PipelineStep::MergeAppositions,
        PipelineStep::RemoveNnCompounding,
        PipelineStep::RemoveCopula,
        PipelineStep::RemoveNestedEntities,
        PipelineStep::AdjustChainsByDefiniteness,
        PipelineStep::RemoveSingletons,
    ];

    /// 1-based step number.
    pub fn number(self) -> u8 {
        match self {
            PipelineStep::RemoveBridgingAndCataphora => 1,
            PipelineStep::ContractVerbalSpans => 2,
            PipelineStep::MergeAppositions => 3,
            PipelineStep::RemoveNnCompounding => 4,
            PipelineStep::RemoveCopula => 5,
            PipelineStep::RemoveNestedEntities => 6,
            PipelineStep::AdjustChainsByDefiniteness => 7,
            PipelineStep::RemoveSingletons => 8,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PipelineStep::RemoveBridgingAndCataphora => "remove_bridging_and_cataphora",
            PipelineStep::ContractVerbalSpans => "contract_verbal_spans",
            PipelineStep::MergeAppositions => "merge_appositions",
            PipelineStep::RemoveNnCompounding => "remove_nn_compounding",
            PipelineStep::RemoveCopula => "remove_copula",
            PipelineStep::RemoveNestedEntities => "remove_nested_entities",
            PipelineStep::AdjustChainsByDefiniteness => "adjust_chains_by_definiteness",
            PipelineStep::RemoveSingletons => "remove_singletons",
        }
    }
}

impl fmt::Display for PipelineStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A span change recorded in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanRewrite {
    pub id: MarkableId,
    pub old: (usize, usize),
    pub new: (usize, usize),
}

/// An edge endpoint redirect recorded in the trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRelink {
    pub old: RelationEdge,
    pub new: RelationEdge,
}

/// What one step did to the document.
#[derive(Debug, Clone, Default)]
pub struct StepRecord {
    pub step_number: u8,
    pub step_label: &'static str,
    pub edges_removed: Vec<RelationEdge>,
    pub edges_relinked: Vec<EdgeRelink>,
    pub spans_rewritten: Vec<SpanRewrite>,
    pub markables_removed: Vec<MarkableId>,
    pub chains_split: usize,
    pub diagnostics: Vec<String>,
}

impl StepRecord {
    fn new(step: PipelineStep) -> StepRecord {
        StepRecord {
            step_number: step.number(),
            step_label: step.label(),
            ..StepRecord::default()
        }
    }

    pub fn is_noop(&self) -> bool {
        self.edges_removed.is_empty()
            && self.edges_relinked.is_empty()
            && self.spans_rewritten.is_empty()
            && self.markables_removed.is_empty()
            && self.diagnostics.is_empty()
    }
}

/// Per-step mutation log for one conversion run. Step order matches the
/// fixed pipeline order.
#[derive(Debug, Clone, Default)]
pub struct ConversionTrace {
    pub steps: Vec<StepRecord>,
}

impl ConversionTrace {
    /// Line-oriented serialization:
    /// `STEP<k>\t<rule>\t<action>\t<subject>\t<detail>`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for record in &self.steps {
            let mut line = |action: &str, subject: &str, detail: &str| {
                out.push_str(&format!(
                    "STEP{}\t{}\t{}\t{}\t{}\n",
                    record.step_number, record.step_label, action, subject, detail
                ));
            };
            for edge in &record.edges_removed {
                line(
                    "remove_edge",
                    &format!("{}->{}", edge.anaphor, edge.antecedent),
                    edge.rel_type.label(),
                );
            }
            for relink in &record.edges_relinked {
                line(
                    "relink_edge",
                    &format!("{}->{}", relink.old.anaphor, relink.old.antecedent),
                    &format!(
                        "=> {}->{}:{}",
                        relink.new.anaphor, relink.new.antecedent, relink.new.rel_type
                    ),
                );
            }
            for rewrite in &record.spans_rewritten {
                line(
                    "rewrite_span",
                    rewrite.id.as_str(),
                    &format!(
                        "{}-{} => {}-{}",
                        rewrite.old.0, rewrite.old.1, rewrite.new.0, rewrite.new.1
                    ),
                );
            }
            for id in &record.markables_removed {
                line("remove_markable", id.as_str(), "-");
            }
            if record.chains_split > 0 {
                line("chains_split", "-", &record.chains_split.to_string());
            }
            for diagnostic in &record.diagnostics {
                line("diagnostic", "-", diagnostic);
            }
        }
        out
    }
}

/// Options for [`convert`].
#[derive(Debug, Clone)]
pub struct ConvertOptions {
    /// Keep markables with no incident edges instead of running the final
    /// singleton-removal step. Debug aid.
    pub retain_singletons: bool,
    /// Stop after the given step (1-8).
    pub stop_after_step: Option<u8>,
    pub lexicon: DeterminerLexicon,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            retain_singletons: false,
            stop_after_step: None,
            lexicon: DeterminerLexicon::default(),
        }
    }
}

/// Deletes every bridging and cataphoric edge. No markables are deleted;
/// stranded mentions persist as singletons until the final step.
pub fn step1_remove_bridging_and_cataphora(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::RemoveBridgingAndCataphora);
    let (kept, removed): (Vec<_>, Vec<_>) = doc
        .edges()
        .iter()
        .cloned()
        .partition(|e| !matches!(e.rel_type, RelType::Bridge | RelType::Cata));
    record.edges_removed = removed;
    let out = doc.rebuild(doc.markables().to_vec(), kept);
    record.chains_split = count_chain_splits(doc, &out);
    (out, record)
}

/// Contracts every markable whose head token is a verb to that single head
/// token. Ids and edges are preserved.
pub fn step2_contract_verbal_spans(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::ContractVerbalSpans);
    let markables = doc
        .markables()
        .iter()
        .map(|mk| {
            let head_is_verb = doc
                .token(mk.head_index)
                .map_or(false, |t| t.upos == "VERB");
            if head_is_verb && (mk.start, mk.end) != (mk.head_index, mk.head_index) {
                record.spans_rewritten.push(SpanRewrite {
                    id: mk.id.clone(),
                    old: (mk.start, mk.end),
                    new: (mk.head_index, mk.head_index),
                });
                let mut contracted = mk.clone();
                contracted.start = mk.head_index;
                contracted.end = mk.head_index;
                contracted
            } else {
                mk.clone()
            }
        })
        .collect();
    let out = doc.rebuild(markables, doc.edges().to_vec());
    (out, record)
}

/// Merges appositive constructions into single mentions: the antecedent span
/// absorbs the apposition span, the apposition markable is removed, and its
/// other edges re-attach to the merged markable. Cascading appositions merge
/// left to right. Appositions spanning a sentence boundary are dropped with
/// a diagnostic instead of merged.
pub fn step3_merge_appositions(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::MergeAppositions);
    let mut current = doc.clone();

    let limit = doc.edges().len() + 1;
    for _ in 0..limit {
        let Some(edge) = next_apposition(&current) else {
            break;
        };
        let anaphor = current.markable(&edge.anaphor).unwrap().clone();
        let antecedent = current.markable(&edge.antecedent).unwrap().clone();

        if current.sentence_of(anaphor.start) != current.sentence_of(antecedent.start) {
            record.diagnostics.push(format!(
                "appos {}->{} spans a sentence boundary; edge dropped",
                edge.anaphor, edge.antecedent
            ));
            record.edges_removed.push(edge.clone());
            let edges = current
                .edges()
                .iter()
                .filter(|e| *e != &edge)
                .cloned()
                .collect();
            current = current.rebuild(current.markables().to_vec(), edges);
            continue;
        }

        let new_span = (
            antecedent.start.min(anaphor.start),
            antecedent.end.max(anaphor.end),
        );
        if new_span != (antecedent.start, antecedent.end) {
            record.spans_rewritten.push(SpanRewrite {
                id: antecedent.id.clone(),
                old: (antecedent.start, antecedent.end),
                new: new_span,
            });
        }
        record.edges_removed.push(edge.clone());
        record.markables_removed.push(anaphor.id.clone());

        let markables: Vec<Markable> = current
            .markables()
            .iter()
            .filter(|m| m.id != anaphor.id)
            .map(|m| {
                if m.id == antecedent.id {
                    let mut merged = m.clone();
                    merged.start = new_span.0;
                    merged.end = new_span.1;
                    merged
                } else {
                    m.clone()
                }
            })
            .collect();

        let mut edges: Vec<RelationEdge> = Vec::with_capacity(current.edges().len());
        for e in current.edges() {
            if *e == edge {
                continue;
            }
            if !e.touches(&anaphor.id) {
                edges.push(e.clone());
                continue;
            }
            let mut redirected = e.clone();
            if redirected.anaphor == anaphor.id {
                redirected.anaphor = antecedent.id.clone();
            }
            if redirected.antecedent == anaphor.id {
                redirected.antecedent = antecedent.id.clone();
            }
            if redirected.anaphor == redirected.antecedent {
                record.edges_removed.push(e.clone());
                continue;
            }
            record.edges_relinked.push(EdgeRelink {
                old: e.clone(),
                new: redirected.clone(),
            });
            edges.push(redirected);
        }
        current = current.rebuild(markables, dedupe_edges(edges));
    }

    record.chains_split = count_chain_splits(doc, &current);
    (current, record)
}

fn next_apposition(doc: &Document) -> Option<RelationEdge> {
    // Left-to-right: lowest antecedent start, then lowest anaphor start.
    doc.edges()
        .iter()
        .filter(|e| e.rel_type == RelType::Appos)
        .min_by_key(|e| {
            let ana = doc.markable(&e.anaphor).unwrap();
            let ant = doc.markable(&e.antecedent).unwrap();
            (ant.start, ant.end, ana.start, ana.end)
        })
        .cloned()
}

/// Strands every markable whose head is a common-noun compound modifier by
/// deleting all of its incident edges. Applied until a fixpoint is reached.
pub fn step4_remove_nn_compounding(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::RemoveNnCompounding);
    let mut current = doc.clone();
    // The classifier only reads the (immutable) tree, so one pass reaches
    // the fixpoint; the loop guards the recursive contract regardless.
    let limit = doc.markables().len() + 1;
    for _ in 0..limit {
        let stranded: HashSet<MarkableId> = current
            .markables()
            .iter()
            .filter(|mk| is_common_compound_modifier(&current, mk))
            .filter(|mk| current.edges().iter().any(|e| e.touches(&mk.id)))
            .map(|mk| mk.id.clone())
            .collect();
        if stranded.is_empty() {
            break;
        }
        let (kept, removed): (Vec<_>, Vec<_>) = current
            .edges()
            .iter()
            .cloned()
            .partition(|e| !stranded.contains(&e.anaphor) && !stranded.contains(&e.antecedent));
        record.edges_removed.extend(removed);
        current = current.rebuild(current.markables().to_vec(), kept);
    }
    record.chains_split = count_chain_splits(doc, &current);
    (current, record)
}

/// Unlinks copula predicates from their clusters: the predicate's edges are
/// deleted and any markable that had the predicate as antecedent is
/// re-linked to the subject, so the chain stays connected through the
/// subject span.
pub fn step5_remove_copula(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::RemoveCopula);
    let mut current = doc.clone();

    let limit = doc.edges().len() + 1;
    for _ in 0..limit {
        // The earliest (subject, predicate) pair connected by an edge where
        // the predicate is a copula predicate of the subject.
        let pair = current
            .edges()
            .iter()
            .filter_map(|e| {
                let pred = current.markable(&e.anaphor)?;
                let subj = current.markable(&e.antecedent)?;
                if subj.start < pred.start
                    && current.sentence_of(subj.start) == current.sentence_of(pred.start)
                    && is_copula_predicate(&current, subj, pred)
                {
                    Some((subj.id.clone(), pred.id.clone(), pred.start, pred.end))
                } else {
                    None
                }
            })
            .min_by_key(|(_, _, start, end)| (*start, *end));
        let Some((subj_id, pred_id, _, _)) = pair else {
            break;
        };

        let mut edges: Vec<RelationEdge> = Vec::with_capacity(current.edges().len());
        for e in current.edges() {
            if e.anaphor == pred_id {
                record.edges_removed.push(e.clone());
                continue;
            }
            if e.antecedent == pred_id {
                let mut redirected = e.clone();
                redirected.antecedent = subj_id.clone();
                if redirected.anaphor == redirected.antecedent {
                    record.edges_removed.push(e.clone());
                    continue;
                }
                record.edges_relinked.push(EdgeRelink {
                    old: e.clone(),
                    new: redirected.clone(),
                });
                edges.push(redirected);
                continue;
            }
            edges.push(e.clone());
        }
        current = current.rebuild(current.markables().to_vec(), dedupe_edges(edges));
    }

    record.chains_split = count_chain_splits(doc, &current);
    (current, record)
}

/// Unlinks nested coreferent mentions: when an edge connects two markables
/// and one strictly contains the other, the edges between them are deleted
/// and downstream anaphors of the inner markable re-link to the outer one.
pub fn step6_remove_nested_entities(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::RemoveNestedEntities);
    let mut current = doc.clone();

    let limit = doc.edges().len() + 1;
    for _ in 0..limit {
        let pair = current
            .edges()
            .iter()
            .filter_map(|e| {
                let anaphor = current.markable(&e.anaphor)?;
                let antecedent = current.markable(&e.antecedent)?;
                if is_nested_in_antecedent(anaphor, antecedent) {
                    Some((anaphor.id.clone(), antecedent.id.clone()))
                } else if is_nested_in_antecedent(antecedent, anaphor) {
                    Some((antecedent.id.clone(), anaphor.id.clone()))
                } else {
                    None
                }
            })
            .min_by_key(|(inner, outer)| {
                let i = current.markable(inner).unwrap();
                let o = current.markable(outer).unwrap();
                (i.start, i.end, o.start, o.end)
            });
        let Some((inner_id, outer_id)) = pair else {
            break;
        };

        let mut edges: Vec<RelationEdge> = Vec::with_capacity(current.edges().len());
        for e in current.edges() {
            if e.touches(&inner_id) && e.touches(&outer_id) {
                record.edges_removed.push(e.clone());
                continue;
            }
            if e.antecedent == inner_id {
                let mut redirected = e.clone();
                redirected.antecedent = outer_id.clone();
                if redirected.anaphor == redirected.antecedent {
                    record.edges_removed.push(e.clone());
                    continue;
                }
                record.edges_relinked.push(EdgeRelink {
                    old: e.clone(),
                    new: redirected.clone(),
                });
                edges.push(redirected);
                continue;
            }
            edges.push(e.clone());
        }
        current = current.rebuild(current.markables().to_vec(), dedupe_edges(edges));
    }

    record.chains_split = count_chain_splits(doc, &current);
    (current, record)
}

/// Deletes every edge whose anaphor classifies as indefinite. The indefinite
/// markable keeps its incoming edges, so it heads a new cluster; the
/// antecedent's own earlier links are unaffected.
pub fn step7_adjust_chains_by_definiteness(
    doc: &Document,
    lexicon: &DeterminerLexicon,
) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::AdjustChainsByDefiniteness);
    let (kept, removed): (Vec<_>, Vec<_>) = doc.edges().iter().cloned().partition(|e| {
        let anaphor = doc.markable(&e.anaphor).expect("validated endpoint");
        classify_definiteness(doc, anaphor, lexicon).is_definite()
    });
    record.edges_removed = removed;
    let out = doc.rebuild(doc.markables().to_vec(), kept);
    record.chains_split = count_chain_splits(doc, &out);
    (out, record)
}

/// Deletes every markable with no incident edge. The resulting document
/// contains only clusters of size two or more.
pub fn step8_remove_singletons(doc: &Document) -> (Document, StepRecord) {
    let mut record = StepRecord::new(PipelineStep::RemoveSingletons);
    let mut linked: HashSet<&MarkableId> = HashSet::new();
    for edge in doc.edges() {
        linked.insert(&edge.anaphor);
        linked.insert(&edge.antecedent);
    }
    let (kept, removed): (Vec<_>, Vec<_>) = doc
        .markables()
        .iter()
        .cloned()
        .partition(|m| linked.contains(&m.id));
    record.markables_removed = removed.into_iter().map(|m| m.id).collect();
    let out = doc.rebuild(kept, doc.edges().to_vec());
    (out, record)
}

/// Applies the eight steps in their fixed order and returns the converted
/// document together with the mutation trace.
pub fn convert(doc: &Document, options: &ConvertOptions) -> (Document, ConversionTrace) {
    let mut current = doc.clone();
    let mut trace = ConversionTrace::default();
    for step in PipelineStep::ALL {
        if let Some(stop) = options.stop_after_step {
            if step.number() > stop {
                break;
            }
        }
        if step == PipelineStep::RemoveSingletons && options.retain_singletons {
            break;
        }
        let (next, record) = run_step(&current, step, &options.lexicon);
        trace.steps.push(record);
        current = next;
    }
    (current, trace)
}

pub(crate) fn run_step(
    doc: &Document,
    step: PipelineStep,
    lexicon: &DeterminerLexicon,
) -> (Document, StepRecord) {
    match step {
        PipelineStep::RemoveBridgingAndCataphora => step1_remove_bridging_and_cataphora(doc),
        PipelineStep::ContractVerbalSpans => step2_contract_verbal_spans(doc),
        PipelineStep::MergeAppositions => step3_merge_appositions(doc),
        PipelineStep::RemoveNnCompounding => step4_remove_nn_compounding(doc),
        PipelineStep::RemoveCopula => step5_remove_copula(doc),
        PipelineStep::RemoveNestedEntities => step6_remove_nested_entities(doc),
        PipelineStep::AdjustChainsByDefiniteness => {
            step7_adjust_chains_by_definiteness(doc, lexicon)
        }
        PipelineStep::RemoveSingletons => step8_remove_singletons(doc),
    }
}

fn dedupe_edges(edges: Vec<RelationEdge>) -> Vec<RelationEdge> {
    let mut seen = HashSet::new();
    edges.into_iter().filter(|e| seen.insert(e.clone())).collect()
}

/// Number of identity clusters of `before` whose surviving members end up
/// in two or more clusters of `after`.
fn count_chain_splits(before: &Document, after: &Document) -> usize {
    let after_component: HashMap<MarkableId, usize> = after
        .derive_clusters(&RelType::IDENTITY)
        .into_iter()
        .enumerate()
        .flat_map(|(i, c)| c.members.into_iter().map(move |id| (id, i)))
        .collect();
    before
        .derive_clusters(&RelType::IDENTITY)
        .iter()
        .filter(|cluster| {
            let components: BTreeMap<usize, ()> = cluster
                .members
                .iter()
                .filter_map(|id| after_component.get(id))
                .map(|&i| (i, ()))
                .collect();
            components.len() > 1
        })
        .count()
}
