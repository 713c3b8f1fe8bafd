//! Two-prover games on bipartite multigraphs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::relation::Relation;

/// A general two-prover game: a bipartite multigraph whose every edge
/// instance carries its own relation over `Σ_X × Σ_Y`.
///
/// Edge instances are kept in canonical order (by endpoints, then by
/// relation), and `relations()[i]` belongs to `graph().edges()[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GameDoc", into = "GameDoc")]
pub struct Game {
    graph: BipartiteGraph,
    sigma_x: usize,
    sigma_y: usize,
    relations: Vec<Relation>,
    is_projection: bool,
}

/// Assignment of labels to both sides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl Game {
    pub fn new(
        n_left: usize,
        n_right: usize,
        sigma_x: usize,
        sigma_y: usize,
        edges: Vec<((usize, usize), Relation)>,
    ) -> Result<Self> {
        if sigma_x == 0 || sigma_y == 0 {
            return Err(Error::InvalidGame("alphabets must be nonempty".into()));
        }
        for (_, rel) in &edges {
            if rel.sigma_x() != sigma_x || rel.sigma_y() != sigma_y {
                return Err(Error::InvalidGame(format!(
                    "relation over {}x{} in a {sigma_x}x{sigma_y} game",
                    rel.sigma_x(),
                    rel.sigma_y()
                )));
            }
        }
        let mut edges = edges;
        edges.sort();
        let (pairs, relations): (Vec<_>, Vec<_>) = edges.into_iter().unzip();
        let graph = BipartiteGraph::new(n_left, n_right, pairs)?;
        let is_projection = relations.iter().all(|r| r.as_function().is_some());
        Ok(Self { graph, sigma_x, sigma_y, relations, is_projection })
    }

    /// Projection game from per-edge label maps `Σ_X -> Σ_Y`.
    pub fn projection(
        n_left: usize,
        n_right: usize,
        sigma_x: usize,
        sigma_y: usize,
        edges: Vec<((usize, usize), Vec<usize>)>,
    ) -> Result<Self> {
        let edges = edges
            .into_iter()
            .map(|(e, map)| {
                if map.len() != sigma_x {
                    return Err(Error::InvalidGame(format!("label map of length {} for |Σ_X| = {sigma_x}", map.len())));
                }
                Ok((e, Relation::from_map(sigma_y, &map)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_left, n_right, sigma_x, sigma_y, edges)
    }

    /// Every edge of `graph` gets the same relation.
    pub fn uniform(graph: &BipartiteGraph, relation: Relation) -> Result<Self> {
        let (sx, sy) = (relation.sigma_x(), relation.sigma_y());
        let edges = graph.edges().iter().map(|&e| (e, relation.clone())).collect();
        Self::new(graph.n_left(), graph.n_right(), sx, sy, edges)
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn n_left(&self) -> usize {
        self.graph.n_left()
    }

    pub fn n_right(&self) -> usize {
        self.graph.n_right()
    }

    pub fn sigma_x(&self) -> usize {
        self.sigma_x
    }

    pub fn sigma_y(&self) -> usize {
        self.sigma_y
    }

    pub fn n_edges(&self) -> usize {
        self.relations.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.graph.edges()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn is_projection(&self) -> bool {
        self.is_projection
    }

    /// Per-edge label maps when this is a projection game.
    pub fn projection_maps(&self) -> Option<Vec<Vec<usize>>> {
        self.relations.iter().map(Relation::as_function).collect()
    }

    /// `(edge, relation)` pairs in canonical order.
    pub fn edge_list(&self) -> Vec<((usize, usize), Relation)> {
        self.edges().iter().copied().zip(self.relations.iter().cloned()).collect()
    }

    /// Same game with the sides swapped.
    pub fn transpose(&self) -> Self {
        let edges = self
            .edges()
            .iter()
            .zip(&self.relations)
            .map(|(&(x, y), r)| ((y, x), r.transpose()))
            .collect();
        Self::new(self.n_right(), self.n_left(), self.sigma_y, self.sigma_x, edges).expect("valid")
    }

    /// Indices of the edges lying in `s × t`.
    pub fn edges_in(&self, s: &[usize], t: &[usize]) -> Result<Vec<usize>> {
        let in_s = membership(self.n_left(), s)?;
        let in_t = membership(self.n_right(), t)?;
        Ok(self
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, &(x, y))| in_s[x] && in_t[y])
            .map(|(i, _)| i)
            .collect())
    }

    /// Weight of the edges satisfied by `labeling`.
    pub fn satisfied(&self, labeling: &Labeling) -> usize {
        self.edges()
            .iter()
            .zip(&self.relations)
            .filter(|(&(x, y), r)| r.contains(labeling.left[x], labeling.right[y]))
            .count()
    }

    pub fn check_labeling(&self, labeling: &Labeling) -> Result<()> {
        if labeling.left.len() != self.n_left() || labeling.right.len() != self.n_right() {
            return Err(Error::SizeMismatch("labeling length".into()));
        }
        if labeling.left.iter().any(|&a| a >= self.sigma_x) || labeling.right.iter().any(|&b| b >= self.sigma_y) {
            return Err(Error::InvalidParameter("label out of range".into()));
        }
        Ok(())
    }

    /// Multiplies every edge instance `t` times.
    pub fn duplicate_edges(&self, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter("duplication factor must be >= 1".into()));
        }
        let edges = self.edge_list().into_iter().flat_map(|e| std::iter::repeat_n(e, t)).collect();
        Self::new(self.n_left(), self.n_right(), self.sigma_x, self.sigma_y, edges)
    }
}

pub(crate) fn membership(n: usize, set: &[usize]) -> Result<Vec<bool>> {
    let mut m = vec![false; n];
    for &v in set {
        if v >= n {
            return Err(Error::InvalidParameter(format!("vertex {v} out of range {n}")));
        }
        m[v] = true;
    }
    Ok(m)
}

/// The symmetrized game on `(X, X)`.
///
/// For every right vertex `y` and every ordered pair of edge instances
/// `(x, y)`, `(x', y)` (the pair of an instance with itself included) there
/// is an edge `(x, x')` accepting `(a, a')` iff both projections send the
/// labels to the same `Σ_Y` symbol. The output is generally not a projection
/// game.
pub fn symmetrize(g: &Game) -> Result<Game> {
    let maps = g.projection_maps().ok_or(Error::NotProjection)?;
    let mut by_right: Vec<Vec<usize>> = vec![Vec::new(); g.n_right()];
    for (i, &(_, y)) in g.edges().iter().enumerate() {
        by_right[y].push(i);
    }
    let sx = g.sigma_x();
    let mut edges = Vec::new();
    for instances in &by_right {
        for &e1 in instances {
            for &e2 in instances {
                let (m1, m2) = (&maps[e1], &maps[e2]);
                let rel = Relation::from_fn(sx, sx, |a, b| m1[a] == m2[b]);
                edges.push(((g.edges()[e1].0, g.edges()[e2].0), rel));
            }
        }
    }
    Game::new(g.n_left(), g.n_left(), sx, sx, edges)
}

#[derive(Serialize, Deserialize)]
struct GameDoc {
    n_left: usize,
    n_right: usize,
    sigma_x: usize,
    sigma_y: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relations: Option<Vec<Vec<[usize; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    projection: Option<Vec<Vec<usize>>>,
}

impl TryFrom<GameDoc> for Game {
    type Error = Error;
    fn try_from(doc: GameDoc) -> Result<Self> {
        let n = doc.edges.len();
        let from_relations = match &doc.relations {
            Some(rels) => {
                if rels.len() != n {
                    return Err(Error::InvalidGame("relations must be parallel to edges".into()));
                }
                Some(
                    rels.iter()
                        .map(|pairs| Relation::from_pairs(doc.sigma_x, doc.sigma_y, pairs.iter().map(|&[a, b]| (a, b))))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };
        let from_projection = match &doc.projection {
            Some(maps) => {
                if maps.len() != n {
                    return Err(Error::InvalidGame("projection must be parallel to edges".into()));
                }
                Some(
                    maps.iter()
                        .map(|m| {
                            if m.len() != doc.sigma_x {
                                return Err(Error::InvalidGame("projection map length must equal sigma_x".into()));
                            }
                            Relation::from_map(doc.sigma_y, m)
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };
        let relations = match (from_relations, from_projection) {
            (Some(r), Some(p)) => {
                if r != p {
                    return Err(Error::InvalidGame("relations disagree with projection".into()));
                }
                r
            }
            (Some(r), None) => r,
            (None, Some(p)) => p,
            (None, None) => return Err(Error::InvalidGame("need relations or projection".into())),
        };
        let edges = doc.edges.iter().map(|&[x, y]| (x, y)).zip(relations).collect();
        Game::new(doc.n_left, doc.n_right, doc.sigma_x, doc.sigma_y, edges)
    }
}

impl From<Game> for GameDoc {
    fn from(g: Game) -> Self {
        GameDoc {
            n_left: g.n_left(),
            n_right: g.n_right(),
            sigma_x: g.sigma_x,
            sigma_y: g.sigma_y,
            edges: g.edges().iter().map(|&(x, y)| [x, y]).collect(),
            relations: Some(g.relations.iter().map(|r| r.pairs().map(|(a, b)| [a, b]).collect()).collect()),
            projection: g.projection_maps(),
        }
    }
}


#[cfg(test)]
mod symmetrize_value {
    use super::*;
    use crate::rng::SeedStream;
    use crate::spectral::random_biregular;
    use crate::value::game_value;
    use proptest::prelude::*;

    /// Random projection game on a right-regular graph.
    fn projection_game(nl: usize, nr: usize, deg: usize, sx: usize, sy: usize, seed: u64) -> Game {
        let graph = random_biregular(nl, nr, deg, seed).unwrap();
        let mut rng = SeedStream::derived(seed, "projection-maps", 0);
        let edges = graph.edges().iter().map(|&e| (e, (0..sx).map(|_| rng.below(sy as u64) as usize).collect())).collect();
        Game::projection(nl, nr, sx, sy, edges).unwrap()
    }

    #[test]
    fn seed_seven_value_at_least_square() {
        let g = projection_game(3, 3, 2, 3, 2, 7);
        let (v, vs) = (game_value(&g).unwrap().as_f64(), game_value(&symmetrize(&g).unwrap()).unwrap().as_f64());
        assert!(vs >= v * v - 1e-12, "{vs} < {v}²");
        assert!(vs.ln().abs() <= 2.0 * v.ln().abs() + 1e-12);
    }

    #[test]
    fn satisfiable_stays_satisfiable() {
        let g = Game::projection(2, 2, 2, 2, vec![((0, 0), vec![0, 1]), ((1, 0), vec![1, 0]), ((1, 1), vec![0, 0])]).unwrap();
        assert_eq!(game_value(&g).unwrap().as_f64(), 1.0);
        assert_eq!(game_value(&symmetrize(&g).unwrap()).unwrap().as_f64(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn right_regular_symmetrization_is_within_a_square(seed in any::<u64>(), deg in 1usize..=3) {
            let g = projection_game(3, 3, deg, 3, 2, seed);
            let v = game_value(&g).unwrap().as_f64();
            let vs = game_value(&symmetrize(&g).unwrap()).unwrap().as_f64();
            prop_assert!(vs >= v * v - 1e-12);
            prop_assert!(vs <= 1.0);
        }
    }
}
