//! Contracts for the encoder, decoder and black-box classifier, plus the
//! landmark corpus they are evaluated against.
//!
//! Every model works on batches; the single-item methods are conveniences
//! layered on top. Implementations must be deterministic per input
//! (decoders may opt out through [`Decoder::is_deterministic`]).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LatentVector;

/// An ordered list of whitespace-free, non-empty word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        for t in &tokens {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::InvalidToken(t.clone()));
            }
        }
        Ok(TokenSequence(tokens))
    }

    /// Split pre-tokenized text on whitespace.
    pub fn parse(text: &str) -> Self {
        TokenSequence(text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.iter().any(|t| t == token)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        TokenSequence(tokens)
    }

    pub(crate) fn tokens_mut(&mut self) -> &mut Vec<String> {
        &mut self.0
    }

    pub(crate) fn ensure_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyText)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedClass {
    Positive,
    Negative,
}

impl PredictedClass {
    pub fn opposite(self) -> Self {
        match self {
            PredictedClass::Positive => PredictedClass::Negative,
            PredictedClass::Negative => PredictedClass::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PredictedClass::Positive => "positive",
            PredictedClass::Negative => "negative",
        }
    }
}

impl fmt::Display for PredictedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Black-box output `<p_pos, p_neg>`; the two entries sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceVector {
    pub p_pos: f64,
    pub p_neg: f64,
}

impl ConfidenceVector {
    pub fn from_positive(p_pos: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_pos) {
            return Err(Error::InvalidArgument(format!(
                "probability {p_pos} outside [0, 1]"
            )));
        }
        Ok(ConfidenceVector {
            p_pos,
            p_neg: 1.0 - p_pos,
        })
    }

    /// Accept a pair reported by an external model, normalizing float noise.
    pub fn from_pair(p_pos: f64, p_neg: f64) -> Result<Self> {
        if !p_pos.is_finite() || !p_neg.is_finite() || p_pos < 0.0 || p_neg < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "invalid confidence pair [{p_pos}, {p_neg}]"
            )));
        }
        if (p_pos + p_neg - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "confidence pair [{p_pos}, {p_neg}] does not sum to 1"
            )));
        }
        Self::from_positive(p_pos.min(1.0))
    }

    /// Argmax; an exact tie goes to the positive class.
    pub fn class(&self) -> PredictedClass {
        if self.p_pos >= self.p_neg {
            PredictedClass::Positive
        } else {
            PredictedClass::Negative
        }
    }

    pub fn prob(&self, class: PredictedClass) -> f64 {
        match class {
            PredictedClass::Positive => self.p_pos,
            PredictedClass::Negative => self.p_neg,
        }
    }
}

pub trait Encoder: Send + Sync {
    fn latent_dim(&self) -> usize;

    fn encode_batch(&self, texts: &[TokenSequence]) -> Result<Vec<LatentVector>>;

    fn encode(&self, text: &TokenSequence) -> Result<LatentVector> {
        single(self.encode_batch(std::slice::from_ref(text))?, "encode")
    }
}

pub trait Decoder: Send + Sync {
    fn decode_batch(&self, latents: &[LatentVector]) -> Result<Vec<TokenSequence>>;

    /// Whether decoding the same vector twice always yields the same text.
    fn is_deterministic(&self) -> bool {
        true
    }

    fn decode(&self, latent: &LatentVector) -> Result<TokenSequence> {
        single(self.decode_batch(std::slice::from_ref(latent))?, "decode")
    }
}

pub trait BlackBox: Send + Sync {
    fn predict_batch(&self, texts: &[TokenSequence]) -> Result<Vec<ConfidenceVector>>;

    fn predict(&self, text: &TokenSequence) -> Result<ConfidenceVector> {
        single(self.predict_batch(std::slice::from_ref(text))?, "predict")
    }
}

fn single<T>(mut out: Vec<T>, op: &'static str) -> Result<T> {
    if out.len() != 1 {
        return Err(Error::Model {
            op,
            vector: None,
            message: format!("expected 1 result, got {}", out.len()),
        });
    }
    Ok(out.pop().unwrap())
}

/// The three models an explanation run talks to.
#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub encoder: &'a dyn Encoder,
    pub decoder: &'a dyn Decoder,
    pub blackbox: &'a dyn BlackBox,
}

impl<'a> Models<'a> {
    pub fn new(
        encoder: &'a dyn Encoder,
        decoder: &'a dyn Decoder,
        blackbox: &'a dyn BlackBox,
    ) -> Self {
        Models {
            encoder,
            decoder,
            blackbox,
        }
    }
}

/// The `count` vocabulary words whose one-token texts get the highest
/// confidence for the class opposite to `class`. Ties break lexicographically.
pub fn strong_opposite_words(
    blackbox: &dyn BlackBox,
    vocabulary: &[String],
    class: PredictedClass,
    count: usize,
) -> Result<Vec<String>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let unique: Vec<String> = vocabulary
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let probes: Vec<TokenSequence> = unique
        .iter()
        .map(|w| TokenSequence::from_tokens_unchecked(vec![w.clone()]))
        .collect();
    let scores = blackbox.predict_batch(&probes)?;
    let target = class.opposite();
    let mut ranked: Vec<(f64, &String)> = scores
        .iter()
        .map(|c| c.prob(target))
        .zip(&unique)
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(ranked.into_iter().take(count).map(|(_, w)| w.clone()).collect())
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub text: TokenSequence,
    pub latent: LatentVector,
    pub class: PredictedClass,
}

/// Landmark corpus with latent vectors and black-box labels precomputed.
#[derive(Debug, Clone)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
}

impl Corpus {
    /// Encode and label every text. Empty texts are rejected.
    pub fn build(
        texts: Vec<TokenSequence>,
        encoder: &dyn Encoder,
        blackbox: &dyn BlackBox,
    ) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::InvalidArgument("corpus is empty".into()));
        }
        for t in &texts {
            t.ensure_non_empty()?;
        }
        let latents = encoder.encode_batch(&texts)?;
        let scores = blackbox.predict_batch(&texts)?;
        if latents.len() != texts.len() || scores.len() != texts.len() {
            return Err(Error::Model {
                op: "corpus build",
                vector: None,
                message: "model returned a misaligned batch".into(),
            });
        }
        let entries = texts
            .into_iter()
            .zip(latents)
            .zip(scores)
            .map(|((text, latent), conf)| CorpusEntry {
                text,
                latent,
                class: conf.class(),
            })
            .collect();
        Ok(Corpus { entries })
    }

    pub fn from_entries(entries: Vec<CorpusEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("corpus is empty".into()));
        }
        let dim = entries[0].latent.dim();
        if let Some(e) = entries.iter().find(|e| e.latent.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.latent.dim(),
            });
        }
        Ok(Corpus { entries })
    }

    pub fn load(path: &Path, encoder: &dyn Encoder, blackbox: &dyn BlackBox) -> Result<Self> {
        Self::build(read_texts(path)?, encoder, blackbox)
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, class: PredictedClass) -> usize {
        self.entries.iter().filter(|e| e.class == class).count()
    }

    /// Sorted unique tokens over all corpus texts.
    pub fn vocabulary(&self) -> Vec<String> {
        self.entries
            .iter()
            .flat_map(|e| e.text.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// One pre-tokenized text per line; blank lines are skipped.
pub fn read_texts(path: &Path) -> Result<Vec<TokenSequence>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_texts(&raw))
}

pub fn parse_texts(raw: &str) -> Vec<TokenSequence> {
    raw.lines()
        .map(TokenSequence::parse)
        .filter(|t| !t.is_empty())
        .collect()
}
