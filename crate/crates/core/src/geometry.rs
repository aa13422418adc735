//! Latent-space vector arithmetic: cosine distance and linear interpolation.
//!
//! The interpolation walks from the first endpoint towards the second,
//! `z_p + i * (z_q - z_p) / s` for `i = 0..=s`, so element `0` is `z_p` and
//! element `s` is `z_q` (bit-exact at both ends).

use std::ops::Index;

use crate::error::{Error, Result};

/// A point in the encoder's latent space. All components are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateVector);
        }
        Ok(LatentVector(components))
    }

    pub fn zeros(dim: usize) -> Self {
        LatentVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &LatentVector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// `self - other`, componentwise.
    pub fn sub(&self, other: &LatentVector) -> Result<LatentVector> {
        check_dims(self, other)?;
        Ok(LatentVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Unit-norm copy; errors on the zero vector.
    pub fn normalized(&self) -> Result<LatentVector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateVector);
        }
        Ok(LatentVector(self.0.iter().map(|c| c / n).collect()))
    }

    /// Bit pattern of every component; usable as an exact hash key.
    pub(crate) fn bit_key(&self) -> Vec<u64> {
        self.0.iter().map(|c| c.to_bits()).collect()
    }
}

impl Index<usize> for LatentVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for LatentVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        LatentVector::new(v)
    }
}

fn check_dims(a: &LatentVector, b: &LatentVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1 - cos(a, b)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &LatentVector, b: &LatentVector) -> Result<f64> {
    check_dims(a, b)?;
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::DegenerateVector);
    }
    let cos = dot(&a.0, &b.0) / (na * nb);
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

/// `s + 1` evenly spaced points from `from` to `to`, both endpoints included.
pub fn interpolate(from: &LatentVector, to: &LatentVector, steps: usize) -> Result<Vec<LatentVector>> {
    check_dims(from, to)?;
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "interpolation needs at least one step".into(),
        ));
    }
    let delta: Vec<f64> = to.0.iter().zip(&from.0).map(|(b, a)| b - a).collect();
    let s = steps as f64;
    let mut points = Vec::with_capacity(steps + 1);
    points.push(from.clone());
    for i in 1..steps {
        let t = i as f64 / s;
        points.push(LatentVector(
            from.0.iter().zip(&delta).map(|(a, d)| a + t * d).collect(),
        ));
    }
    points.push(to.clone());
    Ok(points)
}
