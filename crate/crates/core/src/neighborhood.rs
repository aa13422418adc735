//! Progressive neighborhood approximation around a query text.
//!
//! Counterfactual landmarks seeded from the corpus are refined round after
//! round: pairs of landmarks are interpolated (first stage), every
//! counterfactual point on that segment is interpolated towards the pivot
//! (second stage), and the closest counterfactual of each second-stage sweep
//! becomes a landmark for the next round. Every decoded second-stage point
//! is kept as a neighbor candidate.

use std::collections::HashMap;

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cosine_distance, interpolate, LatentVector};
use crate::model::{ConfidenceVector, Corpus, Models, PredictedClass, TokenSequence};

/// A generated text with its latent point and black-box verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub text: TokenSequence,
    /// The latent point the text was decoded from (not a re-encoding).
    pub latent: LatentVector,
    pub confidence: ConfidenceVector,
    pub class: PredictedClass,
    pub distance_to_pivot: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub latent: LatentVector,
    pub text: TokenSequence,
    pub distance_to_pivot: f64,
}

/// Counterfactual latent vectors steering exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    landmarks: Vec<Landmark>,
    capacity: usize,
}

impl LandmarkSet {
    pub fn new(landmarks: Vec<Landmark>, capacity: usize) -> Result<Self> {
        if landmarks.is_empty() {
            return Err(Error::InvalidArgument("landmark set is empty".into()));
        }
        Ok(LandmarkSet {
            landmarks,
            capacity,
        })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn min_distance(&self) -> f64 {
        self.landmarks
            .iter()
            .map(|l| l.distance_to_pivot)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeighborhoodConfig {
    /// Landmark count, also the number of repeats per round.
    pub k: usize,
    /// Interpolation steps for both stages.
    pub s: usize,
    /// Neighbors kept per class.
    pub n: usize,
    pub max_iterations: usize,
    pub patience: usize,
    pub improvement_tol: f64,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        NeighborhoodConfig {
            k: 25,
            s: 10,
            n: 100,
            max_iterations: 8,
            patience: 2,
            improvement_tol: 1e-6,
        }
    }
}

impl NeighborhoodConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k", self.k),
            ("s", self.s),
            ("n", self.n),
            ("max_iterations", self.max_iterations),
            ("patience", self.patience),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.improvement_tol >= 0.0) {
            return Err(Error::InvalidArgument(
                "improvement_tol must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Upper bound on decode calls for one construction run.
    pub fn decode_budget(&self) -> usize {
        self.max_iterations * self.k * (self.s + 1) * (self.s + 1)
    }
}

/// The `k` opposite-class corpus entries closest to the pivot (stable on ties).
pub fn seed_landmarks(
    pivot: &LatentVector,
    query_class: PredictedClass,
    corpus: &Corpus,
    k: usize,
) -> Result<LandmarkSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let opposite = query_class.opposite();
    let mut candidates = corpus
        .entries()
        .iter()
        .filter(|e| e.class == opposite)
        .map(|e| {
            Ok(Landmark {
                distance_to_pivot: cosine_distance(&e.latent, pivot)?,
                latent: e.latent.clone(),
                text: e.text.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if candidates.is_empty() {
        return Err(Error::CannotSeedLandmarks {
            opposite: opposite.as_str(),
        });
    }
    if candidates.len() < k {
        warn!(
            "only {} counterfactuals in the corpus, fewer than k = {k}",
            candidates.len()
        );
    }
    candidates.sort_by(|a, b| a.distance_to_pivot.total_cmp(&b.distance_to_pivot));
    candidates.truncate(k);
    LandmarkSet::new(candidates, k)
}

/// One round of the construction loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace {
    pub landmark_min_distance: f64,
    pub best_counterfactual_distance: f64,
    pub new_neighbors: usize,
    pub retained_landmarks: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConstructionStats {
    pub seed_min_distance: f64,
    pub decode_calls: usize,
    pub candidates_before_dedup: usize,
    pub candidates_after_dedup: usize,
    pub trace: Vec<IterationTrace>,
}

impl ConstructionStats {
    pub fn best_counterfactual_distance(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.seed_min_distance, |t| t.best_counterfactual_distance)
    }

    fn diagnostics(&self, seeds: &LandmarkSet) -> String {
        let seeds: Vec<String> = seeds
            .landmarks()
            .iter()
            .take(5)
            .map(|l| format!("{:.4}", l.distance_to_pivot))
            .collect();
        let trace: Vec<String> = self
            .trace
            .iter()
            .map(|t| format!("{:.4}/{}", t.landmark_min_distance, t.new_neighbors))
            .collect();
        format!(
            "seed landmark distances [{}], iterations (min landmark distance/new neighbors) [{}]",
            seeds.join(", "),
            trace.join(", ")
        )
    }
}

/// The selected neighborhood of a query.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub query: TokenSequence,
    pub pivot: LatentVector,
    pub query_confidence: ConfidenceVector,
    pub query_class: PredictedClass,
    pub seeds: LandmarkSet,
    /// Closest same-class neighbors, ascending distance.
    pub factuals: Vec<Neighbor>,
    /// Closest opposite-class neighbors, ascending distance.
    pub counterfactuals: Vec<Neighbor>,
    pub stats: ConstructionStats,
}

impl Neighborhood {
    pub fn all(&self) -> impl Iterator<Item = &Neighbor> {
        self.factuals.iter().chain(&self.counterfactuals)
    }

    pub fn len(&self) -> usize {
        self.factuals.len() + self.counterfactuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Decodes and labels latent points, at most once per distinct point.
struct DecodeMemo<'m> {
    models: Models<'m>,
    seen: HashMap<Vec<u64>, (TokenSequence, ConfidenceVector)>,
    decode_calls: usize,
}

impl<'m> DecodeMemo<'m> {
    fn new(models: Models<'m>) -> Self {
        DecodeMemo {
            models,
            seen: HashMap::new(),
            decode_calls: 0,
        }
    }

    fn resolve(&mut self, points: &[LatentVector]) -> Result<Vec<(TokenSequence, ConfidenceVector)>> {
        let keys: Vec<Vec<u64>> = points.iter().map(LatentVector::bit_key).collect();
        let mut pending: Vec<LatentVector> = Vec::new();
        let mut pending_keys: Vec<Vec<u64>> = Vec::new();
        for (p, key) in points.iter().zip(&keys) {
            if !self.seen.contains_key(key) && !pending_keys.contains(key) {
                pending.push(p.clone());
                pending_keys.push(key.clone());
            }
        }
        if !pending.is_empty() {
            let texts = self.decode(&pending)?;
            let scores = self.predict(&pending, &texts)?;
            self.decode_calls += pending.len();
            for ((key, text), conf) in pending_keys.into_iter().zip(texts).zip(scores) {
                self.seen.insert(key, (text, conf));
            }
        }
        Ok(keys.iter().map(|k| self.seen[k].clone()).collect())
    }

    fn decode(&self, points: &[LatentVector]) -> Result<Vec<TokenSequence>> {
        let out = match self.models.decoder.decode_batch(points) {
            Ok(out) => out,
            Err(err) => return Err(self.locate("decode", points, err)),
        };
        if out.len() != points.len() {
            return Err(misaligned("decode", out.len(), points.len()));
        }
        for (t, z) in out.iter().zip(points) {
            if t.is_empty() {
                return Err(Error::EmptyText.at_vector("decode", z.as_slice()));
            }
        }
        Ok(out)
    }

    fn predict(&self, points: &[LatentVector], texts: &[TokenSequence]) -> Result<Vec<ConfidenceVector>> {
        let out = self.models.blackbox.predict_batch(texts).map_err(|err| {
            // find the offending text so its latent point can be reported
            for (t, z) in texts.iter().zip(points) {
                if let Err(e) = self.models.blackbox.predict(t) {
                    return e.at_vector("predict", z.as_slice());
                }
            }
            err
        })?;
        if out.len() != texts.len() {
            return Err(misaligned("predict", out.len(), texts.len()));
        }
        Ok(out)
    }

    fn locate(&self, op: &'static str, points: &[LatentVector], err: Error) -> Error {
        if let Error::Model { vector: Some(_), .. } = err {
            return err;
        }
        if points.len() > 1 {
            for z in points {
                if let Err(e) = self.models.decoder.decode(z) {
                    return e.at_vector(op, z.as_slice());
                }
            }
        } else if let Some(z) = points.first() {
            return err.at_vector(op, z.as_slice());
        }
        err
    }
}

fn misaligned(op: &'static str, got: usize, want: usize) -> Error {
    Error::Model {
        op,
        vector: None,
        message: format!("expected {want} results, got {got}"),
    }
}

/// Runs approximation rounds for one query; holds the decode memo.
pub struct Approximator<'m> {
    pivot: LatentVector,
    query_class: PredictedClass,
    config: NeighborhoodConfig,
    memo: DecodeMemo<'m>,
}

/// Output of one approximation round.
#[derive(Debug, Clone)]
pub struct Round {
    pub neighbors: Vec<Neighbor>,
    pub landmarks: LandmarkSet,
    /// Repeats whose sweep held no counterfactual, so a drawn landmark was kept.
    pub retained: usize,
}

impl<'m> Approximator<'m> {
    pub fn new(
        pivot: LatentVector,
        query_class: PredictedClass,
        config: NeighborhoodConfig,
        models: Models<'m>,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Approximator {
            pivot,
            query_class,
            config,
            memo: DecodeMemo::new(models),
        })
    }

    pub fn decode_calls(&self) -> usize {
        self.memo.decode_calls
    }

    fn neighbor(&self, latent: LatentVector, text: TokenSequence, confidence: ConfidenceVector) -> Result<Neighbor> {
        let distance_to_pivot = cosine_distance(&latent, &self.pivot)
            .map_err(|e| e.at_vector("distance", latent.as_slice()))?;
        Ok(Neighbor {
            text,
            class: confidence.class(),
            confidence,
            latent,
            distance_to_pivot,
        })
    }

    /// `k` repeats of: draw two landmarks with replacement, interpolate
    /// between them, sweep every counterfactual point towards the pivot and
    /// keep the closest counterfactual of the sweep as a new landmark.
    pub fn approximate<R: Rng + ?Sized>(&mut self, landmarks: &LandmarkSet, rng: &mut R) -> Result<Round> {
        if landmarks.is_empty() {
            return Err(Error::InvalidArgument("landmark set is empty".into()));
        }
        let s = self.config.s;
        let mut neighbors = Vec::new();
        let mut next = Vec::with_capacity(self.config.k);
        let mut retained = 0;
        for _ in 0..self.config.k {
            let p = &landmarks.landmarks[rng.gen_range(0..landmarks.len())];
            let q = &landmarks.landmarks[rng.gen_range(0..landmarks.len())];
            let first_stage = interpolate(&p.latent, &q.latent, s)?;
            let decoded = self.memo.resolve(&first_stage)?;

            let mut sweep: Vec<LatentVector> = Vec::new();
            for (z, (_, conf)) in first_stage.iter().zip(&decoded) {
                if conf.class() != self.query_class {
                    sweep.extend(interpolate(z, &self.pivot, s)?);
                }
            }
            let labelled = self.memo.resolve(&sweep)?;

            let mut closest: Option<Neighbor> = None;
            for (z, (text, conf)) in sweep.into_iter().zip(labelled) {
                let nb = self.neighbor(z, text, conf)?;
                if nb.class != self.query_class
                    && closest
                        .as_ref()
                        .is_none_or(|c| nb.distance_to_pivot < c.distance_to_pivot)
                {
                    closest = Some(nb.clone());
                }
                neighbors.push(nb);
            }
            match closest {
                Some(c) => next.push(Landmark {
                    latent: c.latent,
                    text: c.text,
                    distance_to_pivot: c.distance_to_pivot,
                }),
                None => {
                    retained += 1;
                    let keep = if q.distance_to_pivot < p.distance_to_pivot { q } else { p };
                    next.push(keep.clone());
                }
            }
        }
        Ok(Round {
            neighbors,
            landmarks: LandmarkSet::new(next, self.config.k)?,
            retained,
        })
    }
}

/// Build the neighborhood of `query`: seed landmarks from the corpus, run
/// approximation rounds until the closest counterfactual stops improving,
/// drop duplicate texts and keep the `n` closest neighbors of each class.
pub fn construct<R: Rng + ?Sized>(
    query: &TokenSequence,
    corpus: &Corpus,
    config: &NeighborhoodConfig,
    models: Models<'_>,
    rng: &mut R,
) -> Result<Neighborhood> {
    config.validate()?;
    query.ensure_non_empty()?;
    let pivot = models.encoder.encode(query)?;
    let query_confidence = models.blackbox.predict(query)?;
    let query_class = query_confidence.class();

    let seeds = seed_landmarks(&pivot, query_class, corpus, config.k)?;
    let mut stats = ConstructionStats {
        seed_min_distance: seeds.min_distance(),
        ..Default::default()
    };

    let mut approximator = Approximator::new(pivot.clone(), query_class, config.clone(), models)?;
    let mut landmarks = seeds.clone();
    let mut pool: Vec<Neighbor> = Vec::new();
    let mut best = stats.seed_min_distance;
    let mut stale = 0;
    for _ in 0..config.max_iterations {
        let round = approximator.approximate(&landmarks, rng)?;
        let round_best = round
            .neighbors
            .iter()
            .filter(|n| n.class != query_class)
            .map(|n| n.distance_to_pivot)
            .fold(round.landmarks.min_distance(), f64::min);
        if best - round_best > config.improvement_tol {
            stale = 0;
        } else {
            stale += 1;
        }
        best = best.min(round_best);
        stats.trace.push(IterationTrace {
            landmark_min_distance: round.landmarks.min_distance(),
            best_counterfactual_distance: best,
            new_neighbors: round.neighbors.len(),
            retained_landmarks: round.retained,
        });
        pool.extend(round.neighbors);
        landmarks = round.landmarks;
        if stale >= config.patience {
            break;
        }
    }
    stats.decode_calls = approximator.decode_calls();
    stats.candidates_before_dedup = pool.len();

    let unique = dedup_closest(pool);
    stats.candidates_after_dedup = unique.len();
    let (mut factuals, mut counterfactuals): (Vec<_>, Vec<_>) =
        unique.into_iter().partition(|n| n.class == query_class);
    for side in [&mut factuals, &mut counterfactuals] {
        side.sort_by(|a, b| a.distance_to_pivot.total_cmp(&b.distance_to_pivot));
        side.truncate(config.n);
    }
    for (side, missing) in [(&counterfactuals, "counterfactual"), (&factuals, "factual")] {
        if side.is_empty() {
            return Err(Error::DegenerateNeighborhood {
                missing,
                diagnostics: stats.diagnostics(&seeds),
            });
        }
    }

    Ok(Neighborhood {
        query: query.clone(),
        pivot,
        query_confidence,
        query_class,
        seeds,
        factuals,
        counterfactuals,
        stats,
    })
}

/// One neighbor per distinct text: the closest occurrence, in first-seen order.
fn dedup_closest(pool: Vec<Neighbor>) -> Vec<Neighbor> {
    let mut index: HashMap<TokenSequence, usize> = HashMap::new();
    let mut out: Vec<Neighbor> = Vec::new();
    for nb in pool {
        match index.get(&nb.text) {
            Some(&i) => {
                if nb.distance_to_pivot < out[i].distance_to_pivot {
                    out[i] = nb;
                }
            }
            None => {
                index.insert(nb.text.clone(), out.len());
                out.push(nb);
            }
        }
    }
    out
}
