//! Single-word editions of the query: place a word where the neighborhood's
//! local context makes it most likely, then ask the black box again.
//!
//! A placement is scored by `sum_j ln(P(word | token at pos + j) + eps)` over
//! the in-bounds context offsets `j` in `[-l, l] \ {0}` of the edited text.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlackBox, ConfidenceVector, PredictedClass, TokenSequence};

pub const DEFAULT_WINDOW: usize = 2;
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Windowed co-occurrence statistics estimated on neighborhood texts.
///
/// `P(w | u)` is the fraction of occurrences of `u` that have `w` at least
/// once within `l` positions on either side.
#[derive(Debug, Clone, Default)]
pub struct ContextModel {
    window: usize,
    epsilon: f64,
    unigram: HashMap<String, f64>,
    cooccurrence: HashMap<(String, String), f64>,
}

impl ContextModel {
    pub fn build<'a, I>(texts: I, window: usize, epsilon: f64) -> Self
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut model = ContextModel {
            window,
            epsilon,
            ..Default::default()
        };
        for text in texts {
            let toks = text.tokens();
            for (i, u) in toks.iter().enumerate() {
                *model.unigram.entry(u.clone()).or_default() += 1.0;
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(toks.len().saturating_sub(1));
                let mut seen: Vec<&String> = Vec::new();
                for (j, w) in toks.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != i && !seen.contains(&w) {
                        seen.push(w);
                        *model
                            .cooccurrence
                            .entry((u.clone(), w.clone()))
                            .or_default() += 1.0;
                    }
                }
            }
        }
        model
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `P(word | context)`; zero for unseen context tokens.
    pub fn prob(&self, word: &str, context: &str) -> f64 {
        let Some(n) = self.unigram.get(context) else {
            return 0.0;
        };
        self.cooccurrence
            .get(&(context.to_owned(), word.to_owned()))
            .map_or(0.0, |c| c / n)
    }

    /// Log-likelihood of `edited[pos]` given its in-bounds context.
    pub fn score_at(&self, edited: &[String], pos: usize) -> f64 {
        let word = &edited[pos];
        let lo = pos.saturating_sub(self.window);
        let hi = (pos + self.window).min(edited.len() - 1);
        (lo..=hi)
            .filter(|&i| i != pos)
            .map(|i| (self.prob(word, &edited[i]) + self.epsilon).ln())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Insert,
    Replace,
}

impl EditOp {
    pub fn as_str(self) -> &'static str {
        match self {
            EditOp::Insert => "insert",
            EditOp::Replace => "replace",
        }
    }
}

/// Where to put a word. For inserts `position` is the gap index
/// (`0..=len`), for replacements the replaced token index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub op: EditOp,
    pub position: usize,
    pub score: f64,
}

impl Placement {
    pub fn apply(&self, query: &TokenSequence, word: &str) -> TokenSequence {
        let mut toks = query.tokens().to_vec();
        match self.op {
            EditOp::Insert => toks.insert(self.position, word.to_owned()),
            EditOp::Replace => toks[self.position] = word.to_owned(),
        }
        TokenSequence::from_tokens_unchecked(toks)
    }
}

/// Highest-scoring placement of `word` among the allowed operations.
/// Ties go to the leftmost position, insertion before replacement.
pub fn best_placement(
    query: &TokenSequence,
    word: &str,
    ctx: &ContextModel,
    allow_replace: bool,
) -> Result<Placement> {
    query.ensure_non_empty()?;
    let n = query.len();
    let mut best: Option<Placement> = None;
    let mut consider = |op: EditOp, position: usize| {
        let candidate = Placement { op, position, score: 0.0 };
        let edited = candidate.apply(query, word);
        let score = ctx.score_at(edited.tokens(), position);
        if best.is_none_or(|b| score > b.score) {
            best = Some(Placement { score, ..candidate });
        }
    };
    for i in 0..=n {
        consider(EditOp::Insert, i);
        if allow_replace && i < n {
            consider(EditOp::Replace, i);
        }
    }
    Ok(best.expect("at least one gap exists"))
}

/// A query with one word inserted or replaced, and the black box's verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Edition {
    pub edited: TokenSequence,
    pub op: EditOp,
    pub position: usize,
    pub word: String,
    pub score: f64,
    pub new_confidence: ConfidenceVector,
    pub flipped: bool,
}

pub fn best_edition(
    query: &TokenSequence,
    word: &str,
    ctx: &ContextModel,
    blackbox: &dyn BlackBox,
    original: PredictedClass,
) -> Result<Edition> {
    if word.is_empty() || word.chars().any(char::is_whitespace) {
        return Err(Error::InvalidToken(word.to_owned()));
    }
    let placement = best_placement(query, word, ctx, true)?;
    let edited = placement.apply(query, word);
    let new_confidence = blackbox.predict(&edited)?;
    Ok(Edition {
        flipped: new_confidence.class() != original,
        edited,
        op: placement.op,
        position: placement.position,
        word: word.to_owned(),
        score: placement.score,
        new_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{Lexicon, LexiconBlackBox};

    fn ts(s: &str) -> TokenSequence {
        TokenSequence::parse(s)
    }

    #[test]
    fn two_token_neighborhood_counts() {
        let texts = [ts("a b")];
        let ctx = ContextModel::build(&texts, 1, 1e-6);
        assert_eq!(ctx.prob("b", "a"), 1.0);
        assert_eq!(ctx.prob("a", "b"), 1.0);
        assert_eq!(ctx.prob("c", "a"), 0.0);
        assert_eq!(ctx.prob("a", "zzz"), 0.0);
    }

    #[test]
    fn never_cooccurring_word_costs_log_epsilon() {
        let texts = [ts("a b"), ts("c d")];
        let ctx = ContextModel::build(&texts, 1, 1e-6);
        let edited: Vec<String> = ["a", "d"].iter().map(|s| s.to_string()).collect();
        assert!((ctx.score_at(&edited, 1) - (1e-6f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn duplicated_neighborhood_keeps_ratios() {
        let texts = vec![ts("x a b a"), ts("b c a")];
        let doubled: Vec<TokenSequence> = texts.iter().chain(&texts).cloned().collect();
        let one = ContextModel::build(&texts, 2, 1e-6);
        let two = ContextModel::build(&doubled, 2, 1e-6);
        for u in ["x", "a", "b", "c"] {
            for w in ["x", "a", "b", "c"] {
                assert_eq!(one.prob(w, u), two.prob(w, u));
                assert!((0.0..=1.0).contains(&one.prob(w, u)));
            }
        }
    }

    #[test]
    fn repeated_word_in_window_counts_once() {
        let texts = [ts("a b b")];
        let ctx = ContextModel::build(&texts, 2, 1e-6);
        assert_eq!(ctx.prob("b", "a"), 1.0);
    }

    #[test]
    fn single_token_query_ties_to_leftmost_insert() {
        let texts = [ts("w x"), ts("x w")];
        let ctx = ContextModel::build(&texts, 1, 1e-6);
        let p = best_placement(&ts("x"), "w", &ctx, true).unwrap();
        assert_eq!((p.op, p.position), (EditOp::Insert, 0));
    }

    #[test]
    fn planted_context_replaces_the_negation() {
        let texts = [
            ts("would definitely recommend ."),
            ts("i would definitely recommend this place ."),
        ];
        let ctx = ContextModel::build(&texts, 2, 1e-6);
        let bb = LexiconBlackBox::new(
            Lexicon::parse("not\t-1.5\ndefinitely\t1\nrecommend\t0.5\n").unwrap(),
        );
        let q = ts("would not recommend .");
        let original = bb.predict(&q).unwrap().class();
        assert_eq!(original, PredictedClass::Negative);
        let e = best_edition(&q, "definitely", &ctx, &bb, original).unwrap();
        assert_eq!(e.edited.to_string(), "would definitely recommend .");
        assert_eq!((e.op, e.position), (EditOp::Replace, 1));
        assert!(e.flipped);
        assert_eq!(e.new_confidence.class(), PredictedClass::Positive);
    }

    #[test]
    fn empty_query_is_rejected() {
        let ctx = ContextModel::default();
        assert!(best_placement(&TokenSequence::default(), "w", &ctx, true).is_err());
    }

    #[test]
    fn edited_lengths() {
        let q = ts("a b c");
        let ins = Placement { op: EditOp::Insert, position: 3, score: 0.0 }.apply(&q, "w");
        let rep = Placement { op: EditOp::Replace, position: 2, score: 0.0 }.apply(&q, "w");
        assert_eq!(ins.to_string(), "a b c w");
        assert_eq!(rep.to_string(), "a b w");
    }
}
