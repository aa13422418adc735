use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::LatentVector;
use crate::model::{BlackBox, ConfidenceVector, Encoder, TokenSequence};

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Token sentiment weights; file format is `token<TAB>weight` per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon(BTreeMap<String, f64>);

impl Lexicon {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Lexicon(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn parse(raw: &str) -> Result<Self> {
        Self::parse_named(raw, Path::new("<lexicon>"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_named(&raw, path)
    }

    fn parse_named(raw: &str, path: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (tok, w) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected token<TAB>weight".into()))?;
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(parse_err(format!("invalid token {tok:?}")));
            }
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad weight: {e}")))?;
            if !w.is_finite() {
                return Err(parse_err("weight must be finite".into()));
            }
            map.insert(tok.to_owned(), w);
        }
        Ok(Lexicon(map))
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.0.get(token).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Summed weight over all tokens, counting repeats.
    pub fn score(&self, text: &TokenSequence) -> f64 {
        text.iter().filter_map(|t| self.get(t)).sum()
    }
}

/// `p_pos = logistic(score)` where `score` sums lexicon weights over tokens.
/// Order-insensitive.
#[derive(Debug, Clone)]
pub struct LexiconBlackBox {
    lexicon: Lexicon,
}

impl LexiconBlackBox {
    pub fn new(lexicon: Lexicon) -> Self {
        LexiconBlackBox { lexicon }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl BlackBox for LexiconBlackBox {
    fn predict_batch(&self, texts: &[TokenSequence]) -> Result<Vec<ConfidenceVector>> {
        texts
            .iter()
            .map(|t| {
                t.ensure_non_empty()?;
                ConfidenceVector::from_positive(logistic(self.lexicon.score(t)))
            })
            .collect()
    }
}

/// Classifier with a planted hyperplane in latent space:
/// `p_pos = logistic(scale * (w . encode(text) + bias))`.
#[derive(Clone)]
pub struct LatentLinearBlackBox {
    encoder: Arc<dyn Encoder>,
    weight: LatentVector,
    bias: f64,
    scale: f64,
}

impl LatentLinearBlackBox {
    pub fn new(encoder: Arc<dyn Encoder>, weight: LatentVector, bias: f64, scale: f64) -> Result<Self> {
        if weight.dim() != encoder.latent_dim() {
            return Err(Error::DimensionMismatch {
                expected: encoder.latent_dim(),
                found: weight.dim(),
            });
        }
        Ok(LatentLinearBlackBox {
            encoder,
            weight,
            bias,
            scale,
        })
    }

    /// Signed margin `w . z + bias`.
    pub fn margin(&self, z: &LatentVector) -> Result<f64> {
        Ok(self.weight.dot(z)? + self.bias)
    }
}

impl BlackBox for LatentLinearBlackBox {
    fn predict_batch(&self, texts: &[TokenSequence]) -> Result<Vec<ConfidenceVector>> {
        let zs = self.encoder.encode_batch(texts)?;
        zs.iter()
            .map(|z| ConfidenceVector::from_positive(logistic(self.scale * self.margin(z)?)))
            .collect()
    }
}

impl std::fmt::Debug for LatentLinearBlackBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatentLinearBlackBox")
            .field("dim", &self.weight.dim())
            .field("bias", &self.bias)
            .field("scale", &self.scale)
            .finish()
    }
}
