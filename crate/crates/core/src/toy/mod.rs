//! Deterministic in-process models for desk-scale runs and tests.
//!
//! The embedding table is derived from a documented integer recipe
//! (FNV-1a of the token bytes, mixed with the table seed, driving a
//! SplitMix64 stream) so that an external process can rebuild the exact
//! same table without sharing any state.

mod blackbox;
mod codec;
mod decoders;
pub mod reviews;

use std::collections::HashMap;
use std::sync::Arc;

pub use blackbox::{LatentLinearBlackBox, Lexicon, LexiconBlackBox};
pub use codec::HexCodec;
pub use decoders::{CorpusNnDecoder, GreedyBowDecoder, GREEDY_MAX_TOKENS};

use crate::error::{Error, Result};
use crate::geometry::LatentVector;
use crate::model::{Corpus, Decoder, Encoder, Models, TokenSequence};

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_TABLE_SEED: u64 = 0x5eed_0f_7e47;
/// Scale of the planted sentiment axis relative to the unit random part.
pub const DEFAULT_PLANT_STRENGTH: f64 = 1.5;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1)`.
    fn next_symmetric(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Embedding-average encoder: a text maps to the L2-normalized mean of its
/// token embeddings.
///
/// Each token embedding is a seeded pseudo-random unit vector; tokens with a
/// planted sentiment weight are additionally pushed along axis 0 by
/// `strength * weight` before renormalization.
#[derive(Debug, Clone)]
pub struct ToyEncoder {
    dim: usize,
    seed: u64,
    strength: f64,
    planted: HashMap<String, f64>,
}

impl ToyEncoder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim >= 2, "toy encoder needs at least two dimensions");
        ToyEncoder {
            dim,
            seed,
            strength: DEFAULT_PLANT_STRENGTH,
            planted: HashMap::new(),
        }
    }

    pub fn with_planted_lexicon(mut self, lexicon: &Lexicon, strength: f64) -> Self {
        self.strength = strength;
        self.planted = lexicon
            .iter()
            .map(|(w, v)| (w.to_owned(), v))
            .collect();
        self
    }

    /// Unit-norm embedding of a single token.
    pub fn embedding(&self, token: &str) -> Vec<f64> {
        let mut rng = SplitMix64(fnv1a(token.as_bytes()) ^ self.seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.next_symmetric()).collect();
        normalize_in_place(&mut v);
        if let Some(w) = self.planted.get(token) {
            v[0] += self.strength * w;
            normalize_in_place(&mut v);
        }
        v
    }

    fn encode_one(&self, text: &TokenSequence) -> Result<LatentVector> {
        text.ensure_non_empty()?;
        let mut acc = vec![0.0; self.dim];
        for tok in text {
            for (a, e) in acc.iter_mut().zip(self.embedding(tok)) {
                *a += e;
            }
        }
        let n = text.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        LatentVector::new(acc)?.normalized()
    }
}

fn normalize_in_place(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

impl Encoder for ToyEncoder {
    fn latent_dim(&self) -> usize {
        self.dim
    }

    fn encode_batch(&self, texts: &[TokenSequence]) -> Result<Vec<LatentVector>> {
        texts.iter().map(|t| self.encode_one(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ToyDecoderKind {
    /// Nearest corpus text in cosine distance.
    #[default]
    CorpusNearest,
    /// Greedy matching pursuit over the corpus vocabulary.
    GreedyBagOfWords,
}

/// Toy encoder, decoder and lexicon classifier bundled together.
pub struct ToyBackend {
    pub encoder: Arc<ToyEncoder>,
    pub decoder: Box<dyn Decoder>,
    pub blackbox: LexiconBlackBox,
}

impl ToyBackend {
    /// Build the backend and the labelled landmark corpus in one pass.
    pub fn build(
        lexicon: Lexicon,
        texts: Vec<TokenSequence>,
        dim: usize,
        decoder: ToyDecoderKind,
    ) -> Result<(Self, Corpus)> {
        let encoder = Arc::new(
            ToyEncoder::new(dim, DEFAULT_TABLE_SEED)
                .with_planted_lexicon(&lexicon, DEFAULT_PLANT_STRENGTH),
        );
        let blackbox = LexiconBlackBox::new(lexicon);
        let corpus = Corpus::build(texts, encoder.as_ref(), &blackbox)?;
        let decoder: Box<dyn Decoder> = match decoder {
            ToyDecoderKind::CorpusNearest => Box::new(CorpusNnDecoder::from_corpus(&corpus)),
            ToyDecoderKind::GreedyBagOfWords => Box::new(GreedyBowDecoder::new(
                encoder.as_ref(),
                &corpus.vocabulary(),
            )),
        };
        Ok((
            ToyBackend {
                encoder,
                decoder,
                blackbox,
            },
            corpus,
        ))
    }

    pub fn models(&self) -> Models<'_> {
        Models::new(self.encoder.as_ref(), self.decoder.as_ref(), &self.blackbox)
    }
}

impl std::fmt::Debug for ToyBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToyBackend")
            .field("encoder", &self.encoder)
            .field("blackbox", &self.blackbox)
            .finish_non_exhaustive()
    }
}

pub(crate) fn dim_check(expected: usize, v: &LatentVector) -> Result<()> {
    if v.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cosine_distance;

    fn ts(s: &str) -> TokenSequence {
        TokenSequence::parse(s)
    }

    #[test]
    fn encode_is_bitwise_deterministic() {
        let e = ToyEncoder::new(16, 3);
        let a = e.encode(&ts("the food was great .")).unwrap();
        let b = e.encode(&ts("the food was great .")).unwrap();
        assert_eq!(a.bit_key(), b.bit_key());
    }

    #[test]
    fn single_token_encodes_to_its_embedding() {
        let e = ToyEncoder::new(16, 3);
        let z = e.encode(&ts("good")).unwrap();
        let emb = e.embedding("good");
        for (x, y) in z.as_slice().iter().zip(&emb) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((z.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_tokens_encode_to_normalized_mean() {
        let e = ToyEncoder::new(8, 11);
        let a = e.embedding("good");
        let b = e.embedding("food");
        let mean: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
        let n = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        let z = e.encode(&ts("good food")).unwrap();
        for (x, m) in z.as_slice().iter().zip(&mean) {
            assert!((x - m / n).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_text_cannot_be_encoded() {
        let e = ToyEncoder::new(8, 1);
        assert!(matches!(e.encode(&TokenSequence::default()), Err(Error::EmptyText)));
    }

    #[test]
    fn planted_words_separate_along_sentiment_axis() {
        let lex = Lexicon::parse("good\t2\nbad\t-2\n").unwrap();
        let e = ToyEncoder::new(32, 9).with_planted_lexicon(&lex, 1.5);
        let good = e.encode(&ts("good")).unwrap();
        let bad = e.encode(&ts("bad")).unwrap();
        assert!(good[0] > 0.5 && bad[0] < -0.5);
        assert!(cosine_distance(&good, &bad).unwrap() > 1.0);
    }

    #[test]
    fn embedding_table_reference_values() {
        // Frozen so that a mirrored implementation elsewhere can be checked
        // against the same numbers.
        let mut rng = SplitMix64(0);
        assert_eq!(rng.next_u64(), 0xe220_a839_7b1d_cdaf);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
