//! Spectral expansion of bipartite graphs.
//!
//! For a left-regular graph `H` with left-degree `D` the normalised adjacency
//! matrix is the `n_right × n_left` matrix `H(y, x) = mult(x, y) / D`. Its
//! expansion is
//!
//! ```text
//! λ(H) = max_{v ⊥ 1} ‖Hv‖/‖v‖ · ‖1‖/‖H1‖
//! ```
//!
//! For bi-regular graphs the all-ones vector is the top right singular vector,
//! `‖H1‖/‖1‖ = σ₁ = sqrt(n_left / n_right)`, and so `λ = σ₂ / σ₁`. Square
//! graphs recover the usual second singular value. Other sources normalise
//! the non-square case differently.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::rng::{derive_seed, SeedStream};

pub const EXACT_TOLERANCE: f64 = 1e-12;
pub const POWER_TOLERANCE: f64 = 1e-9;
pub const POWER_MAX_ITERATIONS: usize = 200_000;
pub const MAX_EXPANDER_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMethod {
    ExactSvd,
    PowerIteration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderCertificate {
    pub lambda: f64,
    pub n_left: usize,
    pub n_right: usize,
    pub left_degree: usize,
    pub method: LambdaMethod,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn normalized_adjacency(h: &BipartiteGraph) -> Result<DMatrix<f64>> {
    let d = h.left_degree().ok_or(Error::NotLeftRegular)?;
    let mut m = DMatrix::zeros(h.n_right(), h.n_left());
    if d == 0 {
        return Ok(m);
    }
    for &(x, y) in h.edges() {
        m[(y, x)] += 1.0 / d as f64;
    }
    Ok(m)
}

/// `λ(H)` by full SVD.
pub fn spectral_lambda(h: &BipartiteGraph) -> Result<ExpanderCertificate> {
    spectral_lambda_with(h, LambdaMethod::ExactSvd)
}

pub fn spectral_lambda_with(h: &BipartiteGraph, method: LambdaMethod) -> Result<ExpanderCertificate> {
    if !h.is_biregular() || h.n_edges() == 0 {
        return Err(Error::NotBiregular);
    }
    let m = normalized_adjacency(h)?;
    let sigma1 = (h.n_left() as f64 / h.n_right() as f64).sqrt();
    let sigma2 = match method {
        LambdaMethod::ExactSvd => {
            let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            sv.get(1).copied().unwrap_or(0.0)
        }
        LambdaMethod::PowerIteration => second_singular_value(&m)?,
    };
    Ok(ExpanderCertificate {
        lambda: sigma2 / sigma1,
        n_left: h.n_left(),
        n_right: h.n_right(),
        left_degree: h.left_degree().unwrap_or(0),
        method,
        tolerance: match method {
            LambdaMethod::ExactSvd => EXACT_TOLERANCE,
            LambdaMethod::PowerIteration => POWER_TOLERANCE,
        },
        seed: None,
    })
}

/// Power iteration on the Gram matrix of the smaller side with the all-ones
/// direction projected out; for a bi-regular matrix that direction is the
/// top singular vector on both sides.
fn second_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    let gram = if m.ncols() <= m.nrows() { m.transpose() * m } else { m * m.transpose() };
    let n = gram.nrows();
    if n < 2 {
        return Ok(0.0);
    }
    let deflate = |v: &mut DVector<f64>| {
        let mean = v.sum() / n as f64;
        v.add_scalar_mut(-mean);
    };
    let mut rng = SeedStream::new(0x5eed);
    let mut v = DVector::from_fn(n, |_, _| rng.unit() - 0.5);
    deflate(&mut v);
    for iteration in 0..POWER_MAX_ITERATIONS {
        let norm = v.norm();
        if norm < 1e-300 {
            return Ok(0.0);
        }
        v /= norm;
        let mut w = &gram * &v;
        deflate(&mut w);
        let theta = v.dot(&w);
        let residual = (&w - &v * theta).norm();
        if residual <= POWER_TOLERANCE * theta.abs().max(1e-3) || w.norm() < 1e-14 {
            return Ok(theta.max(0.0).sqrt());
        }
        v = w;
        // Rescale periodically in case the iterate collapses.
        if iteration % 64 == 63 {
            deflate(&mut v);
        }
    }
    Err(Error::NoConvergence { iterations: POWER_MAX_ITERATIONS })
}

/// Union of `left_degree` random half-edge matchings: left stubs in order,
/// right stubs shuffled. Multi-edges may occur.
pub fn random_biregular(n_left: usize, n_right: usize, left_degree: usize, seed: u64) -> Result<BipartiteGraph> {
    if n_left == 0 || n_right == 0 || left_degree == 0 {
        return Err(Error::InvalidParameter("sides and degree must be positive".into()));
    }
    let total = n_left * left_degree;
    if !total.is_multiple_of(n_right) {
        return Err(Error::Divisibility { total, n_right });
    }
    let right_degree = total / n_right;
    let mut stubs: Vec<usize> = (0..n_right).flat_map(|y| std::iter::repeat_n(y, right_degree)).collect();
    SeedStream::new(seed).shuffle(&mut stubs);
    let edges = (0..n_left)
        .flat_map(|x| std::iter::repeat_n(x, left_degree))
        .zip(stubs)
        .collect();
    BipartiteGraph::new(n_left, n_right, edges)
}

/// Draws bi-regular graphs until one certifies `λ ≤ target` by exact SVD.
/// Attempt 0 uses `seed`; later attempts use seeds derived from it.
pub fn random_expander(
    n_left: usize,
    n_right: usize,
    left_degree: usize,
    target: f64,
    seed: u64,
) -> Result<(BipartiteGraph, ExpanderCertificate)> {
    let mut best = f64::INFINITY;
    for attempt in 0..MAX_EXPANDER_ATTEMPTS {
        let s = if attempt == 0 { seed } else { derive_seed(seed, "expander-retry", attempt as u64) };
        let h = random_biregular(n_left, n_right, left_degree, s)?;
        let mut cert = spectral_lambda(&h)?;
        if cert.lambda <= target {
            cert.seed = Some(s);
            return Ok((h, cert));
        }
        best = best.min(cert.lambda);
    }
    Err(Error::TargetLambdaUnmet { target, attempts: MAX_EXPANDER_ATTEMPTS, best })
}

/// `| |E(A,B)|/|E| − |A|/|P| · |B|/|Q| |`.
pub fn mixing_discrepancy(h: &BipartiteGraph, a: &[usize], b: &[usize]) -> Result<f64> {
    if h.n_left() != h.n_right() {
        return Err(Error::SizeMismatch(format!("{} left vs {} right vertices", h.n_left(), h.n_right())));
    }
    if !h.is_biregular() || h.n_edges() == 0 {
        return Err(Error::NotBiregular);
    }
    let in_a = crate::game::membership(h.n_left(), a)?;
    let in_b = crate::game::membership(h.n_right(), b)?;
    let (ca, cb) = (in_a.iter().filter(|&&v| v).count(), in_b.iter().filter(|&&v| v).count());
    let between = h.edges().iter().filter(|&&(x, y)| in_a[x] && in_b[y]).count();
    let n = h.n_left() as f64;
    Ok((between as f64 / h.n_edges() as f64 - (ca as f64 / n) * (cb as f64 / n)).abs())
}
