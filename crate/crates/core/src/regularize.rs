//! Making a game bi-regular: every vertex of one side is replaced by a cloud
//! of clones wired to its edge endpoints through a regular expander.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, Labeling};
use crate::graph::BipartiteGraph;
use crate::rng::derive_seed;
use crate::spectral::{random_expander, spectral_lambda};

/// Safety factor applied to the λ a side needs.
pub const LAMBDA_SAFETY: f64 = 0.9;
/// Gadget degrees are searched up to this cap (and the lcm of cloud sizes).
pub const MAX_GADGET_DEGREE: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Expander wired between the endpoints of a vertex's edges and its clones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gadget {
    pub vertex: usize,
    pub cloud: usize,
    pub lambda: f64,
    /// Seed of the certified random draw; `None` for a complete multigraph.
    pub seed: Option<u64>,
    #[serde(skip_serializing)]
    pub graph: BipartiteGraph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetPlan {
    pub side: Side,
    /// Cloud size (= degree) of every vertex on `side`.
    pub cloud_sizes: Vec<usize>,
    pub degree: usize,
    pub target_lambda: f64,
    pub seed: u64,
    /// One gadget per non-isolated vertex, in vertex order.
    pub gadgets: Vec<Gadget>,
}

impl GadgetPlan {
    /// Largest certified λ among the gadgets.
    pub fn lambda(&self) -> f64 {
        self.gadgets.iter().map(|g| g.lambda).fold(0.0, f64::max)
    }
}

fn purpose(side: Side) -> &'static str {
    match side {
        Side::Left => "gadget-left",
        Side::Right => "gadget-right",
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// A `degree`-regular gadget on `n + n` vertices with `λ ≤ target`.
fn supply(n: usize, degree: usize, target: f64, seed: u64) -> Result<(BipartiteGraph, f64, Option<u64>)> {
    if degree.is_multiple_of(n) {
        let copies = degree / n;
        let edges = (0..n).flat_map(|a| (0..n).flat_map(move |b| std::iter::repeat_n((a, b), copies))).collect();
        let h = BipartiteGraph::new(n, n, edges)?;
        let lambda = spectral_lambda(&h)?.lambda;
        return Ok((h, lambda, None));
    }
    // ‖M‖_F² ≥ n/d forces λ² ≥ (n/d − 1)/(n − 1); skip hopeless draws.
    let floor = ((n as f64 / degree as f64 - 1.0) / (n as f64 - 1.0)).max(0.0).sqrt();
    if floor > target {
        return Err(Error::TargetLambdaUnmet { target, attempts: 0, best: floor });
    }
    let (h, cert) = random_expander(n, n, degree, target, seed)?;
    Ok((h, cert.lambda, cert.seed))
}

/// Smallest gadget degree for which every cloud on `side` gets a gadget with
/// `λ ≤ target_lambda`.
pub fn plan_side(g: &Game, side: Side, target_lambda: f64, seed: u64) -> Result<GadgetPlan> {
    let cloud_sizes = match side {
        Side::Left => g.graph().left_degrees().to_vec(),
        Side::Right => g.graph().right_degrees().to_vec(),
    };
    let touched: Vec<(usize, usize)> = cloud_sizes.iter().copied().enumerate().filter(|&(_, n)| n > 0).collect();
    if touched.is_empty() {
        return Err(Error::InvalidGame("game has no edges".into()));
    }
    let lcm = touched.iter().fold(1usize, |acc, &(_, n)| (acc / gcd(acc, n)).saturating_mul(n));
    'degree: for degree in 1..=lcm.min(MAX_GADGET_DEGREE) {
        let mut gadgets = Vec::with_capacity(touched.len());
        for &(vertex, cloud) in &touched {
            match supply(cloud, degree, target_lambda, derive_seed(seed, purpose(side), vertex as u64)) {
                Ok((graph, lambda, s)) => gadgets.push(Gadget { vertex, cloud, lambda, seed: s, graph }),
                Err(Error::TargetLambdaUnmet { .. }) => continue 'degree,
                Err(e) => return Err(e),
            }
        }
        return Ok(GadgetPlan { side, cloud_sizes, degree, target_lambda, seed, gadgets });
    }
    let cloud = touched.iter().map(|&(_, n)| n).max().expect("non-empty");
    Err(Error::GadgetUnavailable { cloud, degree: MAX_GADGET_DEGREE, target: target_lambda })
}

/// Replaces every vertex of `plan.side` by its cloud of clones.
///
/// Slot `i` of vertex `v` is its `i`-th edge instance in canonical edge
/// order; gadget edge `(slot i, clone j)` becomes an edge from the slot's
/// other endpoint to clone `j`, carrying that instance's relation. Clones
/// are numbered cloud by cloud in vertex order.
pub fn regularize_side(g: &Game, plan: &GadgetPlan) -> Result<Game> {
    match plan.side {
        Side::Right => regularize_right(g, plan),
        Side::Left => Ok(regularize_right(&g.transpose(), plan)?.transpose()),
    }
}

fn side_edges(g: &Game, side: Side) -> Vec<Vec<usize>> {
    let n = match side {
        Side::Left => g.n_left(),
        Side::Right => g.n_right(),
    };
    let mut slots = vec![Vec::new(); n];
    for (i, &(x, y)) in g.edges().iter().enumerate() {
        slots[if side == Side::Left { x } else { y }].push(i);
    }
    slots
}

fn regularize_right(g: &Game, plan: &GadgetPlan) -> Result<Game> {
    let degrees = g.graph().right_degrees();
    if plan.cloud_sizes != degrees {
        return Err(Error::SizeMismatch("plan cloud sizes differ from vertex degrees".into()));
    }
    let slots = side_edges(g, Side::Right);
    let mut edges = Vec::with_capacity(g.n_edges() * plan.degree);
    let mut offset = 0;
    for gadget in &plan.gadgets {
        let instances = &slots[gadget.vertex];
        for &(slot, clone) in gadget.graph.edges() {
            let e = instances[slot];
            edges.push(((g.edges()[e].0, offset + clone), g.relations()[e].clone()));
        }
        offset += gadget.cloud;
    }
    Game::new(g.n_left(), offset, g.sigma_x(), g.sigma_y(), edges)
}

/// λ a side needs so that its value inflation stays within `eps / 2`.
pub fn side_target(eps: f64, alphabet: usize) -> f64 {
    LAMBDA_SAFETY * eps / (2.0 * alphabet as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizeManifest {
    pub epsilon: f64,
    pub seed: u64,
    /// Edge duplication factor applied first.
    pub duplicate: usize,
    pub right: GadgetPlan,
    pub left: GadgetPlan,
    pub edges_before: usize,
    pub edges_after: usize,
    pub blowup: f64,
    /// `((|Σ_X| + |Σ_Y|)/ε)^5`, the size factor the construction is measured against.
    pub reference_blowup: f64,
}

/// Bi-regular game with value at most `val(g) + eps`.
pub fn biregularize(g: &Game, eps: f64, seed: u64) -> Result<(Game, RegularizeManifest)> {
    biregularize_with(g, eps, seed, 1)
}

/// [`biregularize`] after multiplying every edge `duplicate` times.
pub fn biregularize_with(g: &Game, eps: f64, seed: u64, duplicate: usize) -> Result<(Game, RegularizeManifest)> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let base = g.duplicate_edges(duplicate)?;
    let right = plan_side(&base, Side::Right, side_target(eps, g.sigma_y()), seed)?;
    let mid = regularize_side(&base, &right)?;
    let left = plan_side(&mid, Side::Left, side_target(eps, g.sigma_x()), seed)?;
    let out = regularize_side(&mid, &left)?;
    debug_assert!(out.graph().is_biregular());
    let (before, after) = (g.n_edges(), out.n_edges());
    let manifest = RegularizeManifest {
        epsilon: eps,
        seed,
        duplicate,
        right,
        left,
        edges_before: before,
        edges_after: after,
        blowup: after as f64 / before as f64,
        reference_blowup: ((g.sigma_x() + g.sigma_y()) as f64 / eps).powi(5),
    };
    Ok((out, manifest))
}

/// Satisfied fraction between one vertex's endpoints and its clones, against
/// the randomized-labeling expectation `δ_v` plus the mixing allowance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudAccounting {
    pub vertex: usize,
    pub satisfied_fraction: f64,
    pub delta_v: f64,
    pub lambda: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Per-cloud accounting for a labeling of `regularize_side(g, plan)`.
pub fn cloud_accounting(g: &Game, plan: &GadgetPlan, labeling: &Labeling) -> Result<Vec<CloudAccounting>> {
    let (g, labeling) = match plan.side {
        Side::Right => (g.clone(), labeling.clone()),
        Side::Left => (g.transpose(), Labeling { left: labeling.right.clone(), right: labeling.left.clone() }),
    };
    let sigma = g.sigma_y();
    let slots = side_edges(&g, Side::Right);
    let mut out = Vec::with_capacity(plan.gadgets.len());
    let mut offset = 0;
    for gadget in &plan.gadgets {
        let instances = &slots[gadget.vertex];
        let clones = &labeling.right[offset..offset + gadget.cloud];
        let sat = |slot: usize, label: usize| {
            let e = instances[slot];
            g.relations()[e].contains(labeling.left[g.edges()[e].0], label)
        };
        let satisfied = gadget.graph.edges().iter().filter(|&&(slot, clone)| sat(slot, clones[clone])).count();
        let satisfied_fraction = satisfied as f64 / gadget.graph.n_edges() as f64;
        let n = gadget.cloud as f64;
        let delta_v = (0..sigma)
            .map(|s| {
                let p = clones.iter().filter(|&&l| l == s).count() as f64 / n;
                let q = (0..gadget.cloud).filter(|&slot| sat(slot, s)).count() as f64 / n;
                p * q
            })
            .sum::<f64>();
        let bound = delta_v + gadget.lambda * sigma as f64;
        out.push(CloudAccounting {
            vertex: gadget.vertex,
            satisfied_fraction,
            delta_v,
            lambda: gadget.lambda,
            bound,
            ok: satisfied_fraction <= bound + 1e-9,
        });
        offset += gadget.cloud;
    }
    Ok(out)
}
