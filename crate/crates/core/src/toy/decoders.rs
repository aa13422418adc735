use crate::error::{Error, Result};
use crate::geometry::{dot, LatentVector};
use crate::model::{Corpus, Decoder, Encoder, TokenSequence};

use super::dim_check;

/// Longest text the greedy decoder emits.
pub const GREEDY_MAX_TOKENS: usize = 12;

/// Decodes a vector to the corpus text with the smallest cosine distance.
/// Ties go to the earliest corpus entry.
#[derive(Debug, Clone)]
pub struct CorpusNnDecoder {
    dim: usize,
    texts: Vec<TokenSequence>,
    units: Vec<Vec<f64>>,
}

impl CorpusNnDecoder {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::new(
            corpus
                .entries()
                .iter()
                .map(|e| (e.text.clone(), e.latent.clone())),
        )
        .expect("corpus latents are non-degenerate")
    }

    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TokenSequence, LatentVector)>,
    {
        let mut texts = Vec::new();
        let mut units = Vec::new();
        for (t, z) in entries {
            units.push(z.normalized()?.into_vec());
            texts.push(t);
        }
        let dim = units
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("decoder corpus is empty".into()))?;
        Ok(CorpusNnDecoder { dim, texts, units })
    }

    fn nearest(&self, z: &LatentVector) -> Result<usize> {
        dim_check(self.dim, z)?;
        if z.is_zero() {
            return Err(Error::DegenerateVector);
        }
        let mut best = 0;
        let mut best_sim = f64::NEG_INFINITY;
        for (i, u) in self.units.iter().enumerate() {
            let sim = dot(u, z.as_slice());
            if sim > best_sim {
                best_sim = sim;
                best = i;
            }
        }
        Ok(best)
    }
}

impl Decoder for CorpusNnDecoder {
    fn decode_batch(&self, latents: &[LatentVector]) -> Result<Vec<TokenSequence>> {
        latents
            .iter()
            .map(|z| {
                self.nearest(z)
                    .map(|i| self.texts[i].clone())
                    .map_err(|e| e.at_vector("decode", z.as_slice()))
            })
            .collect()
    }
}

/// Greedy matching pursuit over a vocabulary: repeatedly appends the token
/// whose embedding, added to the running sum, maximizes the cosine with the
/// target vector. Stops when no token improves the cosine or after
/// [`GREEDY_MAX_TOKENS`] tokens. The first token is always emitted.
#[derive(Debug, Clone)]
pub struct GreedyBowDecoder {
    dim: usize,
    vocab: Vec<String>,
    embeddings: Vec<Vec<f64>>,
    max_tokens: usize,
}

impl GreedyBowDecoder {
    /// `encoder` must map a one-token text to that token's embedding.
    pub fn new(encoder: &dyn Encoder, vocabulary: &[String]) -> Self {
        let embeddings = vocabulary
            .iter()
            .map(|w| {
                encoder
                    .encode(&TokenSequence::from_tokens_unchecked(vec![w.clone()]))
                    .expect("vocabulary tokens encode")
                    .into_vec()
            })
            .collect();
        GreedyBowDecoder {
            dim: encoder.latent_dim(),
            vocab: vocabulary.to_vec(),
            embeddings,
            max_tokens: GREEDY_MAX_TOKENS,
        }
    }

    fn pursue(&self, z: &LatentVector) -> Result<TokenSequence> {
        dim_check(self.dim, z)?;
        if self.vocab.is_empty() {
            return Err(Error::InvalidArgument("decoder vocabulary is empty".into()));
        }
        let target = z.normalized()?;
        let target = target.as_slice();
        let aligned: Vec<f64> = self.embeddings.iter().map(|e| dot(e, target)).collect();
        let self_norms: Vec<f64> = self.embeddings.iter().map(|e| dot(e, e)).collect();

        let mut sum = vec![0.0; self.dim];
        let mut sum_sq = 0.0;
        let mut sum_aligned = 0.0;
        let mut current = f64::NEG_INFINITY;
        let mut out = Vec::new();
        while out.len() < self.max_tokens {
            let mut best: Option<(usize, f64)> = None;
            for (i, e) in self.embeddings.iter().enumerate() {
                let norm_sq = sum_sq + 2.0 * dot(&sum, e) + self_norms[i];
                if norm_sq <= 0.0 {
                    continue;
                }
                let cos = (sum_aligned + aligned[i]) / norm_sq.sqrt();
                if best.is_none_or(|(_, c)| cos > c) {
                    best = Some((i, cos));
                }
            }
            let Some((i, cos)) = best else { break };
            if !out.is_empty() && cos <= current + 1e-12 {
                break;
            }
            current = cos;
            let e = &self.embeddings[i];
            sum.iter_mut().zip(e).for_each(|(s, x)| *s += x);
            sum_sq = dot(&sum, &sum);
            sum_aligned += aligned[i];
            out.push(self.vocab[i].clone());
        }
        Ok(TokenSequence::from_tokens_unchecked(out))
    }
}

impl Decoder for GreedyBowDecoder {
    fn decode_batch(&self, latents: &[LatentVector]) -> Result<Vec<TokenSequence>> {
        latents
            .iter()
            .map(|z| self.pursue(z).map_err(|e| e.at_vector("decode", z.as_slice())))
            .collect()
    }
}
