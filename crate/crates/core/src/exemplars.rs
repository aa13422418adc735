//! Greedy selection of close but mutually diverse (counter-)factuals.
//!
//! Candidate quality trades closeness to the pivot against the mean pairwise
//! cosine distance between the difference vectors `z_i - pivot` of the set
//! after absorbing the candidate:
//!
//! ```text
//! r_i = (1 - lambda) * -dist(z_i, pivot)
//!     + lambda * sum_{pairs of S + {i}} dist(dz_p, dz_q) / ((|S|^2 + |S|) / 2)
//! ```
//!
//! With an empty selection the pair sum is empty and the diversity term is
//! zero, so the first exemplar is always the closest candidate. Candidates
//! sitting exactly on the pivot contribute zero to every pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cosine_distance, LatentVector};
use crate::neighborhood::Neighbor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExemplarConfig {
    pub lambda: f64,
    pub set_size: usize,
}

impl Default for ExemplarConfig {
    fn default() -> Self {
        ExemplarConfig {
            lambda: 0.5,
            set_size: 5,
        }
    }
}

impl ExemplarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        if self.set_size == 0 {
            return Err(Error::InvalidArgument("set_size must be positive".into()));
        }
        Ok(())
    }
}

/// Precomputed geometry of a candidate pool.
struct Pool {
    distance: Vec<f64>,
    pair: Vec<Vec<f64>>,
}

impl Pool {
    fn new(candidates: &[Neighbor], pivot: &LatentVector) -> Result<Self> {
        let distance = candidates
            .iter()
            .map(|c| cosine_distance(&c.latent, pivot))
            .collect::<Result<Vec<_>>>()?;
        let deltas = candidates
            .iter()
            .map(|c| {
                let d = c.latent.sub(pivot)?;
                Ok((!d.is_zero()).then_some(d))
            })
            .collect::<Result<Vec<Option<LatentVector>>>>()?;
        let n = candidates.len();
        let mut pair = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                if let (Some(a), Some(b)) = (&deltas[i], &deltas[j]) {
                    let d = cosine_distance(a, b)?;
                    pair[i][j] = d;
                    pair[j][i] = d;
                }
            }
        }
        Ok(Pool { distance, pair })
    }
}

/// Indices into `candidates` in selection order.
pub fn select_indices(
    candidates: &[Neighbor],
    pivot: &LatentVector,
    config: &ExemplarConfig,
) -> Result<Vec<usize>> {
    config.validate()?;
    let Some(first) = candidates.first() else {
        return Err(Error::InvalidArgument("no exemplar candidates".into()));
    };
    if candidates.iter().any(|c| c.class != first.class) {
        return Err(Error::InvalidArgument(
            "exemplar candidates mix classes".into(),
        ));
    }
    let pool = Pool::new(candidates, pivot)?;
    let lambda = config.lambda;
    let target = config.set_size.min(candidates.len());

    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    let mut taken = vec![false; candidates.len()];
    let mut internal = 0.0;
    while chosen.len() < target {
        let m = chosen.len() as f64;
        let normalizer = (m * m + m) / 2.0;
        let mut best: Option<(usize, f64, f64)> = None;
        for i in (0..candidates.len()).filter(|&i| !taken[i]) {
            let diversity = if chosen.is_empty() {
                0.0
            } else {
                let added: f64 = chosen.iter().map(|&j| pool.pair[i][j]).sum();
                (internal + added) / normalizer
            };
            let r = (1.0 - lambda) * -pool.distance[i] + lambda * diversity;
            let better = match best {
                None => true,
                Some((_, br, bd)) => r > br || (r == br && pool.distance[i] < bd),
            };
            if better {
                best = Some((i, r, pool.distance[i]));
            }
        }
        let (i, _, _) = best.expect("a candidate remains");
        internal += chosen.iter().map(|&j| pool.pair[i][j]).sum::<f64>();
        taken[i] = true;
        chosen.push(i);
    }
    Ok(chosen)
}

/// Greedily pick up to `set_size` exemplars from same-class candidates.
pub fn select(
    candidates: &[Neighbor],
    pivot: &LatentVector,
    config: &ExemplarConfig,
) -> Result<Vec<Neighbor>> {
    Ok(select_indices(candidates, pivot, config)?
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect())
}

/// Mean pairwise cosine distance between difference vectors of a set.
pub fn mean_pairwise_diversity(set: &[Neighbor], pivot: &LatentVector) -> Result<f64> {
    if set.len() < 2 {
        return Ok(0.0);
    }
    let pool = Pool::new(set, pivot)?;
    let mut sum = 0.0;
    for i in 0..set.len() {
        for j in (i + 1)..set.len() {
            sum += pool.pair[i][j];
        }
    }
    let n = set.len() as f64;
    Ok(sum / (n * (n - 1.0) / 2.0))
}
