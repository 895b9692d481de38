use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points with a coordinate below this are treated as outside the open
/// simplex; they are rejected, never clamped.
pub const INTERIOR_MARGIN: f64 = 1e-12;

/// Allowed deviation of `Σ p_i` from one.
pub const SUM_TOL: f64 = 1e-12;

/// A strictly positive probability vector of length `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a simplex point needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some((i, v)) = probs
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < INTERIOR_MARGIN)
        {
            return Err(Error::InvalidInput(format!(
                "probability {i} is {v}, outside the open simplex"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalises a positive vector onto the simplex.
    pub fn from_positive(v: &[f64]) -> Result<Self> {
        let total: f64 = v.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidInput("cannot normalise a vector with sum <= 0".into()));
        }
        Self::new(v.iter().map(|x| x / total).collect())
    }

    pub fn uniform(len: usize) -> Self {
        Self(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    /// Number of outcomes `n + 1`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Manifold dimension `n`.
    pub fn manifold_dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn min_prob(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Expectation coordinates `η_i = p_i`, `i = 1..n`.
    pub fn eta(&self) -> Vec<f64> {
        self.0[..self.0.len() - 1].to_vec()
    }

    /// Inverse of [`Self::eta`]: appends `1 − Σ η_i`.
    pub fn from_eta(eta: &[f64]) -> Result<Self> {
        let last = 1.0 - eta.iter().sum::<f64>();
        let mut p = eta.to_vec();
        p.push(last);
        Self::new(p)
    }

    /// Canonical coordinates `θ^i = log(p_i / p_{n+1})`.
    pub fn theta(&self) -> Vec<f64> {
        let last = self.0[self.0.len() - 1];
        self.0[..self.0.len() - 1].iter().map(|p| (p / last).ln()).collect()
    }

    /// Inverse of [`Self::theta`]: `p_i = exp(θ^i − ψ(θ))`.
    pub fn from_theta(theta: &[f64]) -> Result<Self> {
        let psi = log_partition(theta);
        let mut p: Vec<f64> = theta.iter().map(|t| (t - psi).exp()).collect();
        p.push((-psi).exp());
        Self::new(p)
    }
}

impl AsRef<[f64]> for SimplexPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

/// `ψ(θ) = log(1 + Σ exp θ^i)`, evaluated with a max shift.
pub fn log_partition(theta: &[f64]) -> f64 {
    let m = theta.iter().copied().fold(0.0f64, f64::max);
    let s: f64 = (-m).exp() + theta.iter().map(|t| (t - m).exp()).sum::<f64>();
    m + s.ln()
}
