use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, GroundSet};
use crate::error::{Error, Result};
use crate::game::Game;

/// The two halves of the closeness argument for rectangle distributions.
///
/// With `d` the left degree of the game graph, `n = |X|`, `m = |Y|`:
/// `claim1 = Σ_E |π − μ_S μ_T m/d|`, `claim2 = Σ_E |μ_S μ_T m/d − 1/(nd)|`
/// and `total = |π − u|₁`. `eps1`, `eps2` are the achieved deviations of the
/// two marginals (`ℓ₁`, and `ℓ₂²` scaled by the side size).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationBound {
    pub claim1: f64,
    pub claim2: f64,
    pub total: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub lambda0: f64,
    /// `λ₀ ε₂`
    pub claim1_bound: f64,
    /// `2ε₁ + ε₁² + λ₀ε₂`
    pub claim2_bound: f64,
    /// `2ε₁ + ε₁² + 2λ₀ε₂`
    pub bound: f64,
}

pub fn deviation_bound(g: &Game, mu_s: &Distribution, mu_t: &Distribution, lambda0: f64) -> Result<DeviationBound> {
    let graph = g.graph();
    if !graph.is_biregular() || graph.n_edges() == 0 {
        return Err(Error::NotBiregular);
    }
    let (n, m) = (g.n_left(), g.n_right());
    if mu_s.ground_set != GroundSet::LeftVertices || mu_s.len() != n || mu_t.ground_set != GroundSet::RightVertices || mu_t.len() != m {
        return Err(Error::SizeMismatch("marginals must match the game's sides".into()));
    }
    let d = graph.left_degree().expect("bi-regular") as f64;
    let (s, t) = (&mu_s.weights, &mu_t.weights);
    let z: f64 = g.edges().iter().map(|&(x, y)| s[x] * t[y]).sum();
    if z <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let scale = m as f64 / d;
    let u = 1.0 / g.n_edges() as f64;
    let (mut claim1, mut claim2, mut total) = (0.0, 0.0, 0.0);
    for &(x, y) in g.edges() {
        let p = s[x] * t[y];
        claim1 += (p / z - p * scale).abs();
        claim2 += (p * scale - u).abs();
        total += (p / z - u).abs();
    }
    let eps1 = mu_s.l1_from_uniform().max(mu_t.l1_from_uniform());
    let eps2 = (n as f64 * mu_s.l2_sq_from_uniform()).max(m as f64 * mu_t.l2_sq_from_uniform());
    Ok(DeviationBound {
        claim1,
        claim2,
        total,
        eps1,
        eps2,
        lambda0,
        claim1_bound: lambda0 * eps2,
        claim2_bound: 2.0 * eps1 + eps1 * eps1 + lambda0 * eps2,
        bound: 2.0 * eps1 + eps1 * eps1 + 2.0 * lambda0 * eps2,
    })
}
