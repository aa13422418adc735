//! Locally weighted linear surrogate over binary bag-of-words features.
//!
//! Each neighbor is weighted by `exp(-d^2 / sigma^2)` where `d` is its
//! cosine distance to the pivot; the target is the black-box probability
//! of the positive class. The intercept is unpenalized; coefficients carry
//! a small ridge term so the normal equations stay solvable when the
//! vocabulary outgrows the neighborhood.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cosine_distance, LatentVector};
use crate::model::{PredictedClass, TokenSequence};
use crate::neighborhood::Neighbor;

pub const DEFAULT_KERNEL_WIDTH: f64 = 0.25;
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Query tokens first (in order of appearance), then unseen neighbor tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build<'a, I>(query: &TokenSequence, neighbors: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in query.iter().chain(neighbors.into_iter().flat_map(|s| s.iter())) {
            if !vocab.index.contains_key(t) {
                vocab.index.insert(t.clone(), vocab.tokens.len());
                vocab.tokens.push(t.clone());
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Binary presence vector over `vocab`; out-of-vocabulary tokens are ignored.
pub fn featurize(text: &TokenSequence, vocab: &Vocabulary) -> Vec<f64> {
    let mut x = vec![0.0; vocab.len()];
    for t in text {
        if let Some(i) = vocab.index_of(t) {
            x[i] = 1.0;
        }
    }
    x
}

/// Kernel weight of a neighbor at cosine distance `d` from the pivot.
pub fn kernel_weight(d: f64, sigma: f64) -> f64 {
    (-(d * d) / (sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateConfig {
    pub sigma: f64,
    pub ridge: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            sigma: DEFAULT_KERNEL_WIDTH,
            ridge: DEFAULT_RIDGE,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument("sigma must be positive".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidArgument("ridge must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateModel {
    pub vocabulary: Vocabulary,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub config: SurrogateConfig,
}

impl SurrogateModel {
    pub fn predict(&self, text: &TokenSequence) -> f64 {
        let x = featurize(text, &self.vocabulary);
        self.intercept + x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn coefficient(&self, token: &str) -> Option<f64> {
        self.vocabulary.index_of(token).map(|i| self.coefficients[i])
    }
}

/// Fit on neighbors using their latent distance to `pivot` for the kernel
/// weights and `p_pos` as the target.
pub fn fit(
    neighbors: &[Neighbor],
    pivot: &LatentVector,
    query: &TokenSequence,
    config: SurrogateConfig,
) -> Result<SurrogateModel> {
    config.validate()?;
    let vocab = Vocabulary::build(query, neighbors.iter().map(|n| &n.text));
    let rows: Vec<Vec<f64>> = neighbors.iter().map(|n| featurize(&n.text, &vocab)).collect();
    let weights = neighbors
        .iter()
        .map(|n| Ok(kernel_weight(cosine_distance(&n.latent, pivot)?, config.sigma)))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<f64> = neighbors.iter().map(|n| n.confidence.p_pos).collect();
    let (coefficients, intercept) = weighted_ridge(&rows, &targets, &weights, config.ridge)?;
    Ok(SurrogateModel {
        vocabulary: vocab,
        coefficients,
        intercept,
        config,
    })
}

/// Minimize `sum_i w_i (y_i - c - x_i . b)^2 + ridge * |b|^2`.
///
/// Solved on weighted-centered data, which eliminates the unpenalized
/// intercept exactly; one round of iterative refinement follows.
pub fn weighted_ridge(
    rows: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    ridge: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = rows.len();
    if n != targets.len() || n != weights.len() {
        return Err(Error::InvalidArgument("misaligned regression inputs".into()));
    }
    let distinct = {
        let mut r: Vec<&Vec<f64>> = rows.iter().collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r.dedup();
        r.len()
    };
    if distinct < 2 {
        return Err(Error::SurrogateUnderdetermined(
            "need at least two neighbors with distinct features".into(),
        ));
    }
    let p = rows[0].len();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::SurrogateUnderdetermined(
            "kernel weights vanish".into(),
        ));
    }

    let mut x_mean = vec![0.0; p];
    let mut y_mean = 0.0;
    for ((row, y), w) in rows.iter().zip(targets).zip(weights) {
        for (m, x) in x_mean.iter_mut().zip(row) {
            *m += w * x;
        }
        y_mean += w * y;
    }
    x_mean.iter_mut().for_each(|m| *m /= total);
    y_mean /= total;

    let xc = DMatrix::from_fn(n, p, |i, j| (rows[i][j] - x_mean[j]) * weights[i].sqrt());
    let yc = DVector::from_fn(n, |i, _| (targets[i] - y_mean) * weights[i].sqrt());
    let mut a = xc.transpose() * &xc;
    for j in 0..p {
        a[(j, j)] += ridge;
    }
    let b = xc.transpose() * &yc;

    let solve = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
        match a.clone().cholesky() {
            Some(ch) => Some(ch.solve(rhs)),
            None => a.clone().lu().solve(rhs),
        }
    };
    let mut beta = solve(&b).ok_or_else(|| {
        Error::SurrogateUnderdetermined("normal equations are singular".into())
    })?;
    if let Some(delta) = solve(&(&b - &a * &beta)) {
        beta += delta;
    }
    if beta.iter().any(|c| !c.is_finite()) {
        return Err(Error::SurrogateUnderdetermined(
            "solution is not finite".into(),
        ));
    }
    let intercept = y_mean - beta.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok((beta.iter().copied().collect(), intercept))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Intrinsic,
    Extrinsic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    PredictedClass,
    OppositeClass,
}

/// A word's decision-oriented weight: positive supports the prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordImportance {
    pub token: String,
    pub weight: f64,
    pub origin: Origin,
    pub supports: Support,
}

/// All vocabulary words, sorted by decreasing `|weight|`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WordImportances {
    all: Vec<WordImportance>,
}

impl WordImportances {
    pub fn all(&self) -> &[WordImportance] {
        &self.all
    }

    pub fn important(&self, eta: f64) -> impl Iterator<Item = &WordImportance> {
        self.all.iter().filter(move |w| w.weight.abs() >= eta)
    }

    pub fn intrinsic(&self) -> impl Iterator<Item = &WordImportance> {
        self.all.iter().filter(|w| w.origin == Origin::Intrinsic)
    }

    pub fn extrinsic(&self) -> impl Iterator<Item = &WordImportance> {
        self.all.iter().filter(|w| w.origin == Origin::Extrinsic)
    }

    pub fn get(&self, token: &str) -> Option<&WordImportance> {
        self.all.iter().find(|w| w.token == token)
    }
}

impl FromIterator<WordImportance> for WordImportances {
    fn from_iter<I: IntoIterator<Item = WordImportance>>(iter: I) -> Self {
        let mut all: Vec<WordImportance> = iter.into_iter().collect();
        all.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()));
        WordImportances { all }
    }
}

/// Flip coefficients into decision-oriented weights and tag their origin.
/// Ties in `|weight|` keep vocabulary order.
pub fn extract_importances(
    model: &SurrogateModel,
    query: &TokenSequence,
    predicted: PredictedClass,
) -> WordImportances {
    let sign = match predicted {
        PredictedClass::Positive => 1.0,
        PredictedClass::Negative => -1.0,
    };
    model
        .vocabulary
        .tokens()
        .iter()
        .zip(&model.coefficients)
        .map(|(token, c)| {
            let weight = sign * c;
            WordImportance {
                token: token.clone(),
                weight,
                origin: if query.contains(token) {
                    Origin::Intrinsic
                } else {
                    Origin::Extrinsic
                },
                supports: if weight >= 0.0 {
                    Support::PredictedClass
                } else {
                    Support::OppositeClass
                },
            }
        })
        .collect()
}
