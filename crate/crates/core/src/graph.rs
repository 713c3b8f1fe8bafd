use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// A bipartite multigraph `((L, R), E)`.
///
/// Edges are stored as a sorted multiset of `(left, right)` pairs; a repeated
/// pair is a multi-edge. Degrees are derived once at construction.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct BipartiteGraph {
    n_left: usize,
    n_right: usize,
    edges: Vec<(usize, usize)>,
    left_deg: Vec<usize>,
    right_deg: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    n_left: usize,
    n_right: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphDoc> for BipartiteGraph {
    type Error = Error;
    fn try_from(doc: GraphDoc) -> Result<Self> {
        BipartiteGraph::new(doc.n_left, doc.n_right, doc.edges.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<BipartiteGraph> for GraphDoc {
    fn from(g: BipartiteGraph) -> Self {
        GraphDoc {
            n_left: g.n_left,
            n_right: g.n_right,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl BipartiteGraph {
    pub fn new(n_left: usize, n_right: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut left_deg = vec![0; n_left];
        let mut right_deg = vec![0; n_right];
        for &(l, r) in &edges {
            if l >= n_left || r >= n_right {
                return Err(Error::InvalidGraph(format!(
                    "edge ({l}, {r}) out of range for {n_left}x{n_right}"
                )));
            }
            left_deg[l] += 1;
            right_deg[r] += 1;
        }
        edges.sort_unstable();
        Ok(Self { n_left, n_right, edges, left_deg, right_deg })
    }

    /// Complete bipartite graph `K_{n_left, n_right}`.
    pub fn complete(n_left: usize, n_right: usize) -> Self {
        let edges = (0..n_left).flat_map(|l| (0..n_right).map(move |r| (l, r))).collect();
        Self::new(n_left, n_right, edges).expect("in range")
    }

    /// Identity perfect matching on `n + n` vertices.
    pub fn matching(n: usize) -> Self {
        Self::new(n, n, (0..n).map(|i| (i, i)).collect()).expect("in range")
    }

    /// Perfect matching `l -> perm[l]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        Self::new(n, n, perm.iter().enumerate().map(|(l, &r)| (l, r)).collect())
    }

    /// The bipartite `2n`-cycle: left `i` is adjacent to right `i` and `i + 1 mod n`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 2, "cycle needs n >= 2");
        let edges = (0..n).flat_map(|i| [(i, i), (i, (i + 1) % n)]).collect();
        Self::new(n, n, edges).expect("in range")
    }

    /// Every left vertex picks `degree` distinct right neighbours uniformly.
    pub fn random_left_regular(n_left: usize, n_right: usize, degree: usize, seed: u64) -> Result<Self> {
        if degree > n_right {
            return Err(Error::InvalidParameter(format!(
                "left degree {degree} exceeds n_right = {n_right}"
            )));
        }
        let mut rng = SeedStream::new(seed);
        let mut edges = Vec::with_capacity(n_left * degree);
        for l in 0..n_left {
            for r in rng.subset(n_right, degree) {
                edges.push((l, r));
            }
        }
        Self::new(n_left, n_right, edges)
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    /// Sorted edge multiset.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn left_degrees(&self) -> &[usize] {
        &self.left_deg
    }

    pub fn right_degrees(&self) -> &[usize] {
        &self.right_deg
    }

    /// Common left degree, if the graph is left-regular.
    pub fn left_degree(&self) -> Option<usize> {
        common(&self.left_deg)
    }

    pub fn right_degree(&self) -> Option<usize> {
        common(&self.right_deg)
    }

    pub fn is_left_regular(&self) -> bool {
        self.left_degree().is_some()
    }

    pub fn is_biregular(&self) -> bool {
        self.left_degree().is_some() && self.right_degree().is_some()
    }

    /// Right neighbours of every left vertex, ascending, repeated by multiplicity.
    pub fn left_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_left];
        for &(l, r) in &self.edges {
            adj[l].push(r);
        }
        adj
    }

    /// Left neighbours of every right vertex, ascending, repeated by multiplicity.
    pub fn right_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_right];
        for &(l, r) in &self.edges {
            adj[r].push(l);
        }
        adj
    }

    pub fn multiplicity(&self, l: usize, r: usize) -> usize {
        let lo = self.edges.partition_point(|&e| e < (l, r));
        let hi = self.edges.partition_point(|&e| e <= (l, r));
        hi - lo
    }

    /// Swaps the roles of the two sides.
    pub fn transpose(&self) -> Self {
        Self::new(self.n_right, self.n_left, self.edges.iter().map(|&(l, r)| (r, l)).collect())
            .expect("in range")
    }

    /// Renames left vertex `l` to `left_perm[l]` and right vertex `r` to `right_perm[r]`.
    pub fn relabel(&self, left_perm: &[usize], right_perm: &[usize]) -> Result<Self> {
        if left_perm.len() != self.n_left || right_perm.len() != self.n_right {
            return Err(Error::SizeMismatch("permutation length".into()));
        }
        Self::new(
            self.n_left,
            self.n_right,
            self.edges.iter().map(|&(l, r)| (left_perm[l], right_perm[r])).collect(),
        )
    }

    /// Two-step product `self . other`: edge `(v, x)` with multiplicity
    /// `sum_w mult_self(v, w) * mult_other(w, x)`.
    pub fn product(&self, other: &BipartiteGraph) -> Result<Self> {
        if self.n_right != other.n_left {
            return Err(Error::DimensionMismatch(format!(
                "inner sides differ: {} vs {}",
                self.n_right, other.n_left
            )));
        }
        let other_adj = other.left_adjacency();
        let mut edges = Vec::new();
        for &(v, w) in &self.edges {
            for &x in &other_adj[w] {
                edges.push((v, x));
            }
        }
        Self::new(self.n_left, other.n_right, edges)
    }

    /// Number of edges (with multiplicity) between `a` (left) and `b` (right).
    pub fn edges_between(&self, a: &[usize], b: &[usize]) -> usize {
        let mut in_a = vec![false; self.n_left];
        let mut in_b = vec![false; self.n_right];
        a.iter().for_each(|&v| in_a[v] = true);
        b.iter().for_each(|&v| in_b[v] = true);
        self.edges.iter().filter(|&&(l, r)| in_a[l] && in_b[r]).count()
    }
}

fn common(degs: &[usize]) -> Option<usize> {
    match degs.split_first() {
        None => Some(0),
        Some((first, rest)) => rest.iter().all(|d| d == first).then_some(*first),
    }
}
