use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundSet {
    LeftVertices,
    RightVertices,
    Edges,
}

/// A probability vector over a tagged ground set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub ground_set: GroundSet,
    pub weights: Vec<f64>,
}

impl Distribution {
    pub fn new(ground_set: GroundSet, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty ground set".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("weights sum to {sum}")));
        }
        Ok(Self { ground_set, weights })
    }

    /// Normalises nonnegative weights.
    pub fn from_weights(ground_set: GroundSet, weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if sum.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidDistribution("weights must be nonnegative with positive sum".into()));
        }
        Self::new(ground_set, weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(ground_set: GroundSet, n: usize) -> Result<Self> {
        Self::from_weights(ground_set, &vec![1.0; n])
    }

    pub fn point(ground_set: GroundSet, n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::InvalidDistribution(format!("point {at} outside ground set of size {n}")));
        }
        let mut w = vec![0.0; n];
        w[at] = 1.0;
        Self::new(ground_set, w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `|p - u|_1` against the uniform distribution on the same ground set.
    pub fn l1_from_uniform(&self) -> f64 {
        let u = 1.0 / self.len() as f64;
        self.weights.iter().map(|w| (w - u).abs()).sum()
    }

    /// `‖p - u‖²`.
    pub fn l2_sq_from_uniform(&self) -> f64 {
        let u = 1.0 / self.len() as f64;
        self.weights.iter().map(|w| (w - u) * (w - u)).sum()
    }

    fn expect(&self, ground_set: GroundSet, len: usize) -> Result<()> {
        if self.ground_set != ground_set || self.len() != len {
            return Err(Error::SizeMismatch(format!(
                "expected a {ground_set:?} distribution of length {len}, got {:?} of length {}",
                self.ground_set,
                self.len()
            )));
        }
        Ok(())
    }
}

/// `π_e ∝ μ_S(x) μ_T(y)` over edge instances `e = (x, y)`; copies of a
/// multi-edge share the pair's weight equally.
pub fn edge_distribution(g: &Game, mu_s: &Distribution, mu_t: &Distribution) -> Result<Distribution> {
    mu_s.expect(GroundSet::LeftVertices, g.n_left())?;
    mu_t.expect(GroundSet::RightVertices, g.n_right())?;
    let raw: Vec<f64> = g.edges().iter().map(|&(x, y)| mu_s.weights[x] * mu_t.weights[y]).collect();
    let z: f64 = raw.iter().sum();
    if z <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(Distribution { ground_set: GroundSet::Edges, weights: raw.into_iter().map(|w| w / z).collect() })
}
