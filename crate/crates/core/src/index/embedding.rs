use serde::{Deserialize, Serialize};

use super::IndexError;

/// A non-empty vector with finite entries and non-zero norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(v: Vec<f64>) -> Result<Self, IndexError> {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.iter().all(|&x| x == 0.0) {
            return Err(IndexError::ZeroVector);
        }
        Ok(Embedding(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = IndexError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Embedding::new(v)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

/// `u·v / (‖u‖‖v‖)`.
pub fn cosine_sim(u: &Embedding, v: &Embedding) -> Result<f64, IndexError> {
    if u.dim() != v.dim() {
        return Err(IndexError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    let denom = u.norm() * v.norm();
    if denom == 0.0 {
        return Err(IndexError::ZeroVector);
    }
    Ok(dot / denom)
}
