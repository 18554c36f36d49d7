//! Training objectives: squared cover distortion, binary cross-entropy on
//! the revealed secret, and their weighted batch combination.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Probabilities are clamped into `[BCE_EPS, 1 − BCE_EPS]` before the log.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl LossWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be finite and non-negative, got alpha={alpha} beta={beta}"
            )));
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::InvalidConfig("alpha and beta cannot both be zero".into()));
        }
        Ok(Self { alpha, beta })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 1.0,
        }
    }
}

/// `Σ (cover − container)²` over every channel and pixel.
pub fn cover_loss<T: Scalar>(cover: &Tensor<T>, container: &Tensor<T>) -> Result<T> {
    container.ensure_shape("cover_loss", cover.shape())?;
    Ok(cover
        .data()
        .iter()
        .zip(container.data())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum())
}

pub(crate) fn cover_loss_grad<T: Scalar>(cover: &Tensor<T>, container: &Tensor<T>, upstream: T) -> Vec<T> {
    let two = T::lit(2.0) * upstream;
    cover
        .data()
        .iter()
        .zip(container.data())
        .map(|(&c, &p)| two * (p - c))
        .collect()
}

#[inline]
fn clamp_prob<T: Scalar>(p: T) -> T {
    let lo = T::lit(BCE_EPS);
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// `−Σ [s·log r + (1 − s)·log(1 − r)]` with `r` clamped away from 0 and 1.
pub fn secret_loss<T: Scalar>(secret: &Tensor<T>, revealed: &Tensor<T>) -> Result<T> {
    revealed.ensure_shape("secret_loss", secret.shape())?;
    let total: T = secret
        .data()
        .iter()
        .zip(revealed.data())
        .map(|(&s, &r)| {
            let r = clamp_prob(r);
            s * r.ln() + (T::one() - s) * (T::one() - r).ln()
        })
        .sum();
    Ok(-total)
}

/// Zero where the clamp is active, matching the flat clamped forward.
pub(crate) fn secret_loss_grad<T: Scalar>(secret: &Tensor<T>, revealed: &Tensor<T>, upstream: T) -> Vec<T> {
    let lo = T::lit(BCE_EPS);
    let hi = T::one() - lo;
    secret
        .data()
        .iter()
        .zip(revealed.data())
        .map(|(&s, &r)| {
            if r < lo || r > hi {
                T::zero()
            } else {
                upstream * ((T::one() - s) / (T::one() - r) - s / r)
            }
        })
        .collect()
}

/// Images of one secret/cover pair after a forward pass.
#[derive(Debug, Clone, Copy)]
pub struct PairImages<'a, T> {
    pub secret: &'a Tensor<T>,
    pub cover: &'a Tensor<T>,
    pub container: &'a Tensor<T>,
    pub revealed: &'a Tensor<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    /// `α·mean(cover) + β·mean(secret)`
    pub all: f64,
    /// Batch mean of the cover loss.
    pub mse: f64,
    /// Batch mean of the secret loss.
    pub bce: f64,
}

impl LossBreakdown {
    pub fn from_means(mse: f64, bce: f64, weights: LossWeights) -> Self {
        Self {
            all: weights.alpha * mse + weights.beta * bce,
            mse,
            bce,
        }
    }
}

pub fn combined_loss<T: Scalar>(batch: &[PairImages<'_, T>], weights: LossWeights) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("combined_loss: empty batch".into()));
    }
    let n = batch.len() as f64;
    let mut mse = 0.0;
    let mut bce = 0.0;
    for pair in batch {
        mse += cover_loss(pair.cover, pair.container)?.as_f64();
        bce += secret_loss(pair.secret, pair.revealed)?.as_f64();
    }
    Ok(LossBreakdown::from_means(mse / n, bce / n, weights))
}
