//! The full pipeline: neighborhood, surrogate, exemplars and editions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::edition::{best_edition, ContextModel, Edition, DEFAULT_EPSILON, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::exemplars::{self, ExemplarConfig};
use crate::model::{ConfidenceVector, Corpus, Models, PredictedClass, TokenSequence};
use crate::neighborhood::{construct, Neighbor, Neighborhood, NeighborhoodConfig};
use crate::surrogate::{self, extract_importances, SurrogateConfig, WordImportance, WordImportances};

/// Generator for one explanation: stream `stream` of the master `seed`.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainerConfig {
    pub neighborhood: NeighborhoodConfig,
    pub surrogate: SurrogateConfig,
    pub exemplars: ExemplarConfig,
    /// Importance threshold for reported extrinsic words and editions.
    pub eta: f64,
    pub context_window: usize,
    pub epsilon: f64,
    pub edition_cap: usize,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig {
            neighborhood: NeighborhoodConfig::default(),
            surrogate: SurrogateConfig::default(),
            exemplars: ExemplarConfig::default(),
            eta: 0.1,
            context_window: DEFAULT_WINDOW,
            epsilon: DEFAULT_EPSILON,
            edition_cap: 3,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        self.neighborhood.validate()?;
        self.surrogate.validate()?;
        self.exemplars.validate()?;
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument("eta must be positive".into()));
        }
        if self.context_window == 0 {
            return Err(Error::InvalidArgument("context window must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub stream: u64,
    pub config: ExplainerConfig,
    pub neighborhood_size: usize,
    pub factual_count: usize,
    pub counterfactual_count: usize,
    pub decode_calls: usize,
    pub iterations: usize,
    pub seed_min_distance: f64,
    pub best_counterfactual_distance: f64,
}

#[derive(Debug, Clone)]
pub struct Explanation {
    pub query: TokenSequence,
    pub prediction: ConfidenceVector,
    pub class: PredictedClass,
    pub importances: WordImportances,
    pub factuals: Vec<Neighbor>,
    pub counterfactuals: Vec<Neighbor>,
    pub editions: Vec<Edition>,
    /// Context statistics the editions were placed with.
    pub context: ContextModel,
    pub neighborhood: Neighborhood,
    pub provenance: Provenance,
}

impl Explanation {
    pub fn intrinsic(&self) -> impl Iterator<Item = &WordImportance> {
        self.importances.intrinsic()
    }

    /// Extrinsic words at or above the configured threshold.
    pub fn extrinsic(&self) -> impl Iterator<Item = &WordImportance> {
        let eta = self.provenance.config.eta;
        self.importances.extrinsic().filter(move |w| w.weight.abs() >= eta)
    }

    pub fn to_record(&self) -> ExplanationRecord {
        let weights = |it: &mut dyn Iterator<Item = &WordImportance>| {
            it.map(|w| TokenWeight { token: w.token.clone(), weight: w.weight })
                .collect()
        };
        let exemplars = |ns: &[Neighbor]| {
            ns.iter()
                .map(|n| ExemplarRecord { text: n.text.to_string(), p_pos: n.confidence.p_pos })
                .collect()
        };
        ExplanationRecord {
            query: self.query.to_string(),
            prediction: PredictionRecord {
                p_pos: self.prediction.p_pos,
                p_neg: self.prediction.p_neg,
                label: self.class,
            },
            intrinsic: weights(&mut self.intrinsic()),
            extrinsic: weights(&mut self.extrinsic()),
            factuals: exemplars(&self.factuals),
            counterfactuals: exemplars(&self.counterfactuals),
            editions: self
                .editions
                .iter()
                .map(|e| EditionRecord {
                    text: e.edited.to_string(),
                    op: e.op.as_str().to_owned(),
                    word: e.word.clone(),
                    flipped: e.flipped,
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRecord {
    pub p_pos: f64,
    pub p_neg: f64,
    pub label: PredictedClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TokenWeight {
    pub token: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExemplarRecord {
    pub text: String,
    pub p_pos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EditionRecord {
    pub text: String,
    pub op: String,
    pub word: String,
    pub flipped: bool,
}

/// One output line of `explain`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationRecord {
    pub query: String,
    pub prediction: PredictionRecord,
    pub intrinsic: Vec<TokenWeight>,
    pub extrinsic: Vec<TokenWeight>,
    pub factuals: Vec<ExemplarRecord>,
    pub counterfactuals: Vec<ExemplarRecord>,
    pub editions: Vec<EditionRecord>,
    pub provenance: Provenance,
}

pub struct Explainer<'a> {
    corpus: &'a Corpus,
    models: Models<'a>,
    config: ExplainerConfig,
    context: Option<ContextModel>,
}

impl<'a> Explainer<'a> {
    pub fn new(corpus: &'a Corpus, models: Models<'a>, config: ExplainerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Explainer { corpus, models, config, context: None })
    }

    /// Place editions with fixed context statistics instead of ones
    /// estimated on each neighborhood.
    pub fn with_context(mut self, context: ContextModel) -> Self {
        self.context = Some(context);
        self
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn models(&self) -> Models<'a> {
        self.models
    }

    pub fn config(&self) -> &ExplainerConfig {
        &self.config
    }

    pub fn explain(&self, query: &TokenSequence, seed: u64, stream: u64) -> Result<Explanation> {
        let cfg = &self.config;
        let mut rng = derive_rng(seed, stream);
        let nb = construct(query, self.corpus, &cfg.neighborhood, self.models, &mut rng)?;
        let neighbors: Vec<Neighbor> = nb.all().cloned().collect();
        let model = surrogate::fit(&neighbors, &nb.pivot, query, cfg.surrogate)?;
        let importances = extract_importances(&model, query, nb.query_class);
        let factuals = exemplars::select(&nb.factuals, &nb.pivot, &cfg.exemplars)?;
        let counterfactuals = exemplars::select(&nb.counterfactuals, &nb.pivot, &cfg.exemplars)?;
        let context = match &self.context {
            Some(c) => c.clone(),
            None => ContextModel::build(neighbors.iter().map(|n| &n.text), cfg.context_window, cfg.epsilon),
        };
        let editions = importances
            .extrinsic()
            .filter(|w| w.weight.abs() >= cfg.eta)
            .take(cfg.edition_cap)
            .map(|w| best_edition(query, &w.token, &context, self.models.blackbox, nb.query_class))
            .collect::<Result<Vec<_>>>()?;
        let provenance = Provenance {
            seed,
            stream,
            config: cfg.clone(),
            neighborhood_size: nb.len(),
            factual_count: nb.factuals.len(),
            counterfactual_count: nb.counterfactuals.len(),
            decode_calls: nb.stats.decode_calls,
            iterations: nb.stats.trace.len(),
            seed_min_distance: nb.stats.seed_min_distance,
            best_counterfactual_distance: nb.stats.best_counterfactual_distance(),
        };
        Ok(Explanation {
            query: query.clone(),
            prediction: nb.query_confidence,
            class: nb.query_class,
            importances,
            factuals,
            counterfactuals,
            editions,
            context,
            neighborhood: nb,
            provenance,
        })
    }
}
