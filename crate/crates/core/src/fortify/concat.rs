use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::graph::BipartiteGraph;
use crate::relation::Relation;
use crate::value::{weighted_value, GameValue, ValueOptions};

/// Largest `|derived edges| · |Σ_W| · |Σ_Z|` that [`ConcatenatedGame::derived_game`] builds.
pub const DERIVED_GAME_CAP: u128 = 1 << 26;

/// The game `H₁ ∘ G ∘ H₂` on `(W, Z)`.
///
/// A label of `w` is a word over `Σ_X` with one letter per neighbour slot of
/// `w` in `H₁`, slots sorted by neighbour index (repeated for multi-edges).
/// Letter `i` is digit `i` of the label in base `|Σ_X|`, least significant
/// first. Labels of `z` are encoded the same way over `Σ_Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConcatDoc", into = "ConcatDoc")]
pub struct ConcatenatedGame {
    base: Game,
    h1: BipartiteGraph,
    h2: BipartiteGraph,
    w_slots: Vec<Vec<usize>>,
    z_slots: Vec<Vec<usize>>,
    sigma_w: usize,
    sigma_z: usize,
}

#[derive(Serialize, Deserialize)]
struct ConcatDoc {
    base: Game,
    h1: BipartiteGraph,
    h2: BipartiteGraph,
}

impl TryFrom<ConcatDoc> for ConcatenatedGame {
    type Error = Error;
    fn try_from(doc: ConcatDoc) -> Result<Self> {
        concatenate(&doc.h1, &doc.base, &doc.h2)
    }
}

impl From<ConcatenatedGame> for ConcatDoc {
    fn from(cg: ConcatenatedGame) -> Self {
        ConcatDoc { base: cg.base, h1: cg.h1, h2: cg.h2 }
    }
}

/// One derived edge: slot `i` of `w` meets slot `j` of `z` over `base_edge`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DerivedEdge {
    pub w: usize,
    pub i: usize,
    pub z: usize,
    pub j: usize,
    pub base_edge: usize,
}

fn gadget_degree(h: &BipartiteGraph) -> Result<usize> {
    match h.left_degree() {
        None => Err(Error::NotLeftRegular),
        Some(0) => Err(Error::InvalidGraph("gadget has no edges".into())),
        Some(d) => Ok(d),
    }
}

fn alphabet_power(base: usize, exponent: usize) -> Result<usize> {
    u32::try_from(exponent)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .filter(|&v| v <= u32::MAX as usize)
        .ok_or(Error::AlphabetTooLarge { base, exponent })
}

pub fn concatenate(h1: &BipartiteGraph, g: &Game, h2: &BipartiteGraph) -> Result<ConcatenatedGame> {
    if h1.n_right() != g.n_left() {
        return Err(Error::DimensionMismatch(format!("h1 has {} right vertices, game has {} left", h1.n_right(), g.n_left())));
    }
    if h2.n_right() != g.n_right() {
        return Err(Error::DimensionMismatch(format!("h2 has {} right vertices, game has {} right", h2.n_right(), g.n_right())));
    }
    let d1 = gadget_degree(h1)?;
    let d2 = gadget_degree(h2)?;
    Ok(ConcatenatedGame {
        base: g.clone(),
        h1: h1.clone(),
        h2: h2.clone(),
        w_slots: h1.left_adjacency(),
        z_slots: h2.left_adjacency(),
        sigma_w: alphabet_power(g.sigma_x(), d1)?,
        sigma_z: alphabet_power(g.sigma_y(), d2)?,
    })
}

/// Concatenates the same gadget on both sides of a game on `(X, X)`.
pub fn concatenate_symmetric(h: &BipartiteGraph, g: &Game) -> Result<ConcatenatedGame> {
    if g.n_left() != g.n_right() {
        return Err(Error::DimensionMismatch("symmetric concatenation needs a game on (X, X)".into()));
    }
    concatenate(h, g, h)
}

fn digit(label: usize, position: usize, sigma: usize) -> usize {
    label / sigma.pow(position as u32) % sigma
}

impl ConcatenatedGame {
    pub fn base(&self) -> &Game {
        &self.base
    }

    pub fn h1(&self) -> &BipartiteGraph {
        &self.h1
    }

    pub fn h2(&self) -> &BipartiteGraph {
        &self.h2
    }

    pub fn sigma_w(&self) -> usize {
        self.sigma_w
    }

    pub fn sigma_z(&self) -> usize {
        self.sigma_z
    }

    pub fn n_w(&self) -> usize {
        self.h1.n_left()
    }

    pub fn n_z(&self) -> usize {
        self.h2.n_left()
    }

    /// Letter for slot `i` of `w` under super-label `label`.
    pub fn decode_w(&self, label: usize, i: usize) -> usize {
        digit(label, i, self.base.sigma_x())
    }

    pub fn decode_z(&self, label: usize, j: usize) -> usize {
        digit(label, j, self.base.sigma_y())
    }

    /// Whether the derived edge accepts super-labels `(a, b)`.
    pub fn accepts(&self, e: &DerivedEdge, a: usize, b: usize) -> bool {
        self.base.relations()[e.base_edge].contains(self.decode_w(a, e.i), self.decode_z(b, e.j))
    }

    /// Every derived edge, ordered by `(w, i, z, j, base edge)`.
    pub fn derived_edges(&self) -> Vec<DerivedEdge> {
        let mut edges_at: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
        for (e, &(x, y)) in self.base.edges().iter().enumerate() {
            edges_at.entry((x, y)).or_default().push(e);
        }
        let mut out = Vec::new();
        for (w, ws) in self.w_slots.iter().enumerate() {
            for (i, &x) in ws.iter().enumerate() {
                for (z, zs) in self.z_slots.iter().enumerate() {
                    for (j, &y) in zs.iter().enumerate() {
                        if let Some(es) = edges_at.get(&(x, y)) {
                            out.extend(es.iter().map(|&base_edge| DerivedEdge { w, i, z, j, base_edge }));
                        }
                    }
                }
            }
        }
        out
    }

    /// Materialises `H₁ ∘ G ∘ H₂` as a plain game.
    pub fn derived_game(&self) -> Result<Game> {
        let edges = self.derived_edges();
        let size = edges.len() as u128 * self.sigma_w as u128 * self.sigma_z as u128;
        if size > DERIVED_GAME_CAP {
            return Err(Error::BudgetExceeded { needed: size, budget: DERIVED_GAME_CAP });
        }
        let list = edges
            .iter()
            .map(|e| ((e.w, e.z), Relation::from_fn(self.sigma_w, self.sigma_z, |a, b| self.accepts(e, a, b))))
            .collect();
        Game::new(self.n_w(), self.n_z(), self.sigma_w, self.sigma_z, list)
    }

    /// Number of `H₁` edge instances from `s` into each `x`.
    pub fn left_counts(&self, s: &[usize]) -> Vec<u64> {
        counts(&self.w_slots, self.base.n_left(), s)
    }

    pub fn right_counts(&self, t: &[usize]) -> Vec<u64> {
        counts(&self.z_slots, self.base.n_right(), t)
    }

    /// Base-edge weights `d_S(x)·d_T(y)`: the number of derived edges in
    /// `S × T` lying over each base edge.
    pub fn rectangle_weights(&self, s: &[usize], t: &[usize]) -> Vec<u64> {
        let (ls, rt) = (self.left_counts(s), self.right_counts(t));
        self.base.edges().iter().map(|&(x, y)| ls[x] * rt[y]).collect()
    }

    /// Exact value of the sub-game on `S × T`, computed on the base game.
    ///
    /// Lifting a base labeling letter-wise satisfies every derived edge over
    /// a satisfied base edge. Conversely any derived labeling, read through a
    /// uniformly random slot for each base vertex, is a randomised base
    /// strategy that satisfies each base edge with exactly the derived
    /// acceptance rate over it. So the sub-game value equals the value of the
    /// base game with edge weights `d_S(x)·d_T(y)`.
    pub fn subgame_value(&self, s: &[usize], t: &[usize], opts: &ValueOptions) -> Result<GameValue> {
        weighted_value(&self.base, &self.rectangle_weights(s, t), opts)
    }

    /// `val(H₁ ∘ G ∘ H₂)`.
    pub fn value(&self, opts: &ValueOptions) -> Result<GameValue> {
        let all_w: Vec<usize> = (0..self.n_w()).collect();
        let all_z: Vec<usize> = (0..self.n_z()).collect();
        self.subgame_value(&all_w, &all_z, opts)
    }

    /// Lifts a base labeling to super-labels.
    pub fn lift(&self, labeling: &crate::game::Labeling) -> crate::game::Labeling {
        let encode = |slots: &[usize], labels: &[usize], sigma: usize| {
            slots.iter().rev().fold(0usize, |acc, &v| acc * sigma + labels[v])
        };
        crate::game::Labeling {
            left: self.w_slots.iter().map(|s| encode(s, &labeling.left, self.base.sigma_x())).collect(),
            right: self.z_slots.iter().map(|s| encode(s, &labeling.right, self.base.sigma_y())).collect(),
        }
    }

    pub fn value_exact(&self, opts: &ValueOptions) -> Result<Ratio<u64>> {
        Ok(self.value(opts)?.value)
    }
}

fn counts(slots: &[Vec<usize>], n: usize, set: &[usize]) -> Vec<u64> {
    let mut c = vec![0u64; n];
    for &w in set {
        for &x in &slots[w] {
            c[x] += 1;
        }
    }
    c
}
