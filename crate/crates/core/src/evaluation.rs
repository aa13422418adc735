//! Sentence-edition evaluation of explanations.
//!
//! Words whose importance clears a threshold drive an edit of the query:
//! words supporting the prediction are deleted, words opposing it are
//! inserted at their most likely position. The resulting confidence drop
//! measures completeness, the drop per edit operation compactness, and the
//! change in mean compactness when the threshold is raised correctness.
//! A random editor that drops a few words and inserts one strong
//! opposite-class word serves as the baseline.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edition::{best_placement, ContextModel};
use crate::error::{Error, Result};
use crate::explainer::{derive_rng, Explainer, Explanation};
use crate::model::{strong_opposite_words, BlackBox, PredictedClass, TokenSequence};
use crate::surrogate::{Origin, WordImportances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub eta: f64,
    pub eta_high: f64,
    pub max_drops: usize,
    pub strong_word_count: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            eta: 0.1,
            eta_high: 0.3,
            max_drops: 3,
            strong_word_count: 100,
        }
    }
}

impl EvaluationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if !(self.eta_high > self.eta) {
            return Err(Error::InvalidArgument(
                "eta_high must exceed eta".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EditResult {
    pub edited: TokenSequence,
    pub operations: usize,
}

/// Apply the explanation-guided edit at threshold `eta`.
///
/// Deletions (every occurrence of an intrinsic supporting word, one
/// operation per word) run first, then insertions of opposing words in
/// decreasing `|weight|` order, each at the best insertion gap of the text
/// edited so far. A deletion that would empty the text is skipped.
pub fn guided_edit(
    query: &TokenSequence,
    importances: &WordImportances,
    eta: f64,
    ctx: &ContextModel,
) -> Result<EditResult> {
    let mut text = query.clone();
    let mut operations = 0;
    for w in importances.important(eta) {
        if w.origin == Origin::Intrinsic && w.weight > 0.0 {
            let kept = text.iter().filter(|t| **t != w.token).count();
            if kept == 0 || kept == text.len() {
                continue;
            }
            text.tokens_mut().retain(|t| *t != w.token);
            operations += 1;
        }
    }
    for w in importances.important(eta) {
        if w.weight < 0.0 {
            let placement = best_placement(&text, &w.token, ctx, false)?;
            text = placement.apply(&text, &w.token);
            operations += 1;
        }
    }
    Ok(EditResult {
        edited: text,
        operations,
    })
}

/// Drop `d ~ U{0..=min(max_drops, |query| - 1)}` distinct random tokens and
/// insert one random strong opposite-class word at a random gap.
pub fn baseline_edit<R: Rng + ?Sized>(
    query: &TokenSequence,
    strong_words: &[String],
    max_drops: usize,
    rng: &mut R,
) -> Result<EditResult> {
    query.ensure_non_empty()?;
    let word = strong_words
        .choose(rng)
        .ok_or_else(|| Error::InvalidArgument("no strong opposite-class words".into()))?;
    let drops = rng.gen_range(0..=max_drops.min(query.len() - 1));
    let mut dropped = vec![false; query.len()];
    for i in index::sample(rng, query.len(), drops) {
        dropped[i] = true;
    }
    let mut toks: Vec<String> = query
        .iter()
        .zip(&dropped)
        .filter(|(_, d)| !**d)
        .map(|(t, _)| t.clone())
        .collect();
    let gap = rng.gen_range(0..=toks.len());
    toks.insert(gap, word.clone());
    Ok(EditResult {
        edited: TokenSequence::from_tokens_unchecked(toks),
        operations: drops + 1,
    })
}

/// Confidence lost by the originally predicted class.
pub fn confidence_drop(
    blackbox: &dyn BlackBox,
    original: &TokenSequence,
    edited: &TokenSequence,
) -> Result<f64> {
    let before = blackbox.predict(original)?;
    let after = blackbox.predict(edited)?;
    let class = before.class();
    Ok(before.prob(class) - after.prob(class))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditionRow {
    pub index: usize,
    pub query: String,
    pub edited: String,
    pub confidence_drop: f64,
    pub operations: usize,
}

impl EditionRow {
    pub fn compactness(&self) -> Option<f64> {
        (self.operations > 0).then(|| self.confidence_drop / self.operations as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    /// Population mean and standard deviation; zero for an empty sample.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0, count: 0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt(), count: values.len() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditionAggregate {
    pub completeness: MeanStd,
    /// Instances with zero operations are left out.
    pub compactness: MeanStd,
    pub zero_operation_instances: usize,
}

impl EditionAggregate {
    pub fn of(rows: &[EditionRow]) -> Self {
        let drops: Vec<f64> = rows.iter().map(|r| r.confidence_drop).collect();
        let per_op: Vec<f64> = rows.iter().filter_map(EditionRow::compactness).collect();
        EditionAggregate {
            completeness: MeanStd::of(&drops),
            compactness: MeanStd::of(&per_op),
            zero_operation_instances: rows.iter().filter(|r| r.operations == 0).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub rows: Vec<EditionRow>,
    pub aggregate: EditionAggregate,
    /// Rows and aggregate at the raised threshold (threshold-driven methods only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows_high: Option<Vec<EditionRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate_high: Option<EditionAggregate>,
    /// Mean compactness at the raised threshold minus mean compactness at the base one.
    pub correctness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationHeader {
    pub eta: f64,
    pub eta_high: f64,
    pub seed: u64,
    pub instances: usize,
    pub evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceFailure {
    pub index: usize,
    pub query: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub header: EvaluationHeader,
    pub guided: MethodReport,
    pub baseline: MethodReport,
    pub failures: Vec<InstanceFailure>,
}

/// Row for one explained instance at threshold `eta`.
pub fn guided_row(
    index: usize,
    explanation: &Explanation,
    eta: f64,
    blackbox: &dyn BlackBox,
) -> Result<EditionRow> {
    let edit = guided_edit(
        &explanation.query,
        &explanation.importances,
        eta,
        &explanation.context,
    )?;
    row(index, &explanation.query, edit, blackbox)
}

fn row(index: usize, query: &TokenSequence, edit: EditResult, blackbox: &dyn BlackBox) -> Result<EditionRow> {
    Ok(EditionRow {
        index,
        query: query.to_string(),
        confidence_drop: confidence_drop(blackbox, query, &edit.edited)?,
        edited: edit.edited.to_string(),
        operations: edit.operations,
    })
}

/// Explanation stream for instance `i`; the baseline uses the next one.
pub fn explanation_stream(index: usize) -> u64 {
    2 * index as u64
}

/// Explain every test text once, then score the guided editor at both
/// thresholds and the baseline editor. Instances run in parallel on the
/// current rayon pool; results keep input order.
pub fn evaluate(
    test_set: &[TokenSequence],
    explainer: &Explainer<'_>,
    config: &EvaluationConfig,
    seed: u64,
) -> Result<EvaluationReport> {
    config.validate()?;
    if test_set.is_empty() {
        return Err(Error::InvalidArgument("test set is empty".into()));
    }
    let blackbox = explainer.models().blackbox;
    let vocabulary = explainer.corpus().vocabulary();
    let strong = |class| strong_opposite_words(blackbox, &vocabulary, class, config.strong_word_count);
    let strong_for_pos = strong(PredictedClass::Positive)?;
    let strong_for_neg = strong(PredictedClass::Negative)?;

    type Outcome = std::result::Result<(EditionRow, EditionRow, EditionRow), String>;
    let outcomes: Vec<Outcome> = test_set
        .par_iter()
        .enumerate()
        .map(|(i, query)| -> Outcome {
            let run = || -> Result<_> {
                let ex = explainer.explain(query, seed, explanation_stream(i))?;
                let low = guided_row(i, &ex, config.eta, blackbox)?;
                let high = guided_row(i, &ex, config.eta_high, blackbox)?;
                let words = match ex.class {
                    PredictedClass::Positive => &strong_for_pos,
                    PredictedClass::Negative => &strong_for_neg,
                };
                let mut rng = derive_rng(seed, explanation_stream(i) + 1);
                let edit = baseline_edit(query, words, config.max_drops, &mut rng)?;
                let base = row(i, query, edit, blackbox)?;
                Ok((low, high, base))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let mut low_rows = Vec::new();
    let mut high_rows = Vec::new();
    let mut base_rows = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok((low, high, base)) => {
                low_rows.push(low);
                high_rows.push(high);
                base_rows.push(base);
            }
            Err(error) => failures.push(InstanceFailure {
                index: i,
                query: test_set[i].to_string(),
                error,
            }),
        }
    }

    let low = EditionAggregate::of(&low_rows);
    let high = EditionAggregate::of(&high_rows);
    let correctness = Some(high.compactness.mean - low.compactness.mean);
    Ok(EvaluationReport {
        header: EvaluationHeader {
            eta: config.eta,
            eta_high: config.eta_high,
            seed,
            instances: test_set.len(),
            evaluated: low_rows.len(),
        },
        guided: MethodReport {
            rows: low_rows,
            aggregate: low,
            rows_high: Some(high_rows),
            aggregate_high: Some(high),
            correctness,
        },
        baseline: MethodReport {
            aggregate: EditionAggregate::of(&base_rows),
            rows: base_rows,
            rows_high: None,
            aggregate_high: None,
            correctness: None,
        },
        failures,
    })
}
