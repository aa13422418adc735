//! Local explanations for black-box text classifiers.
//!
//! A query is encoded into a latent space, a neighborhood of decoded texts is
//! grown by interpolating toward progressively closer counterfactuals, and a
//! kernel-weighted linear surrogate fitted on that neighborhood yields word
//! importances. Diverse factual and counterfactual exemplars plus single-word
//! editions complete the explanation.
//!
//! ```no_run
//! use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind, DEFAULT_DIM};
//! use proxplain::{Explainer, ExplainerConfig, TokenSequence};
//!
//! let texts = reviews::generate(500, 1);
//! let (backend, corpus) =
//!     ToyBackend::build(reviews::lexicon(), texts, DEFAULT_DIM, ToyDecoderKind::CorpusNearest)?;
//! let explainer = Explainer::new(&corpus, backend.models(), ExplainerConfig::default())?;
//! let ex = explainer.explain(&TokenSequence::parse("great food ."), 7, 0)?;
//! println!("{}", serde_json::to_string(&ex.to_record()).unwrap());
//! # Ok::<(), proxplain::Error>(())
//! ```

pub mod bridge;
pub mod cli;
pub mod edition;
pub mod error;
pub mod evaluation;
pub mod exemplars;
pub mod explainer;
pub mod geometry;
pub mod model;
pub mod neighborhood;
pub mod surrogate;
pub mod toy;

pub use error::{BridgeError, Error, Result};
pub use explainer::{Explainer, ExplainerConfig, Explanation, ExplanationRecord};
pub use geometry::{cosine_distance, interpolate, LatentVector};
pub use model::{
    BlackBox, ConfidenceVector, Corpus, CorpusEntry, Decoder, Encoder, Models, PredictedClass,
    TokenSequence,
};
pub use neighborhood::{construct, Neighbor, Neighborhood, NeighborhoodConfig};
