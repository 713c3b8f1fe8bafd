//! Exact game values by exhaustive enumeration.
//!
//! The value of a game splits over connected components of its (active)
//! constraint graph. Inside a component one side is enumerated exhaustively
//! ("outer", whichever side has fewer labelings) while every vertex on the
//! other side independently takes its best label, which is exact because
//! inner vertices do not interact. Outer labelings are visited in row-major
//! order (vertex 0 is the most significant digit) and per-vertex scores are
//! updated incrementally as the odometer ticks. The maximum is taken over
//! deterministic chunks in parallel; ties go to the lowest labeling index, so
//! the witness does not depend on the schedule.

use num_rational::Ratio;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{membership, Game, Labeling};

pub const DEFAULT_VALUE_BUDGET: u128 = 100_000_000;

const CHUNK: u64 = 1 << 12;

#[derive(Clone, Debug)]
pub struct ValueOptions {
    /// Upper bound on the number of outer labelings visited, summed over components.
    pub budget: u128,
    pub parallel: bool,
}

impl Default for ValueOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_VALUE_BUDGET, parallel: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameValue {
    pub value: Ratio<u64>,
    /// Satisfied weight of the witness labeling.
    pub satisfied: u64,
    pub total: u64,
    pub labeling: Labeling,
}

impl GameValue {
    pub fn as_f64(&self) -> f64 {
        self.satisfied as f64 / self.total as f64
    }
}

pub fn game_value(g: &Game) -> Result<GameValue> {
    game_value_with(g, &ValueOptions::default())
}

pub fn game_value_with(g: &Game, opts: &ValueOptions) -> Result<GameValue> {
    weighted_value(g, &vec![1; g.n_edges()], opts)
}

/// Value of the sub-game whose edges are those of `g` inside `s × t`.
pub fn subgame_value(g: &Game, s: &[usize], t: &[usize]) -> Result<GameValue> {
    subgame_value_with(g, s, t, &ValueOptions::default())
}

pub fn subgame_value_with(g: &Game, s: &[usize], t: &[usize], opts: &ValueOptions) -> Result<GameValue> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::EmptySet);
    }
    let in_s = membership(g.n_left(), s)?;
    let in_t = membership(g.n_right(), t)?;
    let weights: Vec<u64> = g.edges().iter().map(|&(x, y)| u64::from(in_s[x] && in_t[y])).collect();
    weighted_value(g, &weights, opts)
}

/// Maximum over labelings of `sum_e weights[e] * [labeling satisfies e]`,
/// normalised by the total weight. Edges of weight zero are ignored.
pub fn weighted_value(g: &Game, weights: &[u64], opts: &ValueOptions) -> Result<GameValue> {
    if weights.len() != g.n_edges() {
        return Err(Error::SizeMismatch("one weight per edge".into()));
    }
    let total: u64 = weights.iter().sum();
    if total == 0 {
        return Err(Error::EmptySubgame);
    }
    let components = split_components(g, weights);
    let needed = components.iter().fold(0u128, |acc, c| acc.saturating_add(c.cost(g)));
    if needed > opts.budget {
        return Err(Error::BudgetExceeded { needed, budget: opts.budget });
    }
    let mut labeling = Labeling { left: vec![0; g.n_left()], right: vec![0; g.n_right()] };
    let mut satisfied = 0;
    for comp in &components {
        let solver = Solver::new(g, weights, comp);
        let (best, index) = solver.search(opts.parallel);
        satisfied += best;
        solver.write_witness(index, &mut labeling);
    }
    Ok(GameValue { value: Ratio::new(satisfied, total), satisfied, total, labeling })
}

struct Component {
    left: Vec<usize>,
    right: Vec<usize>,
    edges: Vec<usize>,
}

impl Component {
    fn cost(&self, g: &Game) -> u128 {
        let l = pow_sat(g.sigma_x(), self.left.len());
        let r = pow_sat(g.sigma_y(), self.right.len());
        l.min(r)
    }
}

pub(crate) fn pow_sat(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn split_components(g: &Game, weights: &[u64]) -> Vec<Component> {
    let nl = g.n_left();
    let mut parent: Vec<usize> = (0..nl + g.n_right()).collect();
    for (i, &(x, y)) in g.edges().iter().enumerate() {
        if weights[i] > 0 {
            let (a, b) = (find(&mut parent, x), find(&mut parent, nl + y));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut slot = vec![usize::MAX; parent.len()];
    let mut comps: Vec<Component> = Vec::new();
    let mut seen = vec![false; parent.len()];
    for (i, &(x, y)) in g.edges().iter().enumerate() {
        if weights[i] == 0 {
            continue;
        }
        let root = find(&mut parent, x);
        if slot[root] == usize::MAX {
            slot[root] = comps.len();
            comps.push(Component { left: Vec::new(), right: Vec::new(), edges: Vec::new() });
        }
        let c = &mut comps[slot[root]];
        c.edges.push(i);
        if !seen[x] {
            seen[x] = true;
            c.left.push(x);
        }
        if !seen[nl + y] {
            seen[nl + y] = true;
            c.right.push(y);
        }
    }
    for c in &mut comps {
        c.left.sort_unstable();
        c.right.sort_unstable();
    }
    comps
}

/// One component, oriented so that `outer` is the enumerated side.
struct Solver<'a> {
    outer_is_left: bool,
    outer: Vec<usize>,
    inner: Vec<usize>,
    sigma_outer: usize,
    sigma_inner: usize,
    words: usize,
    /// (outer local, inner local, weight) per component edge.
    edges: Vec<(usize, usize, u64)>,
    /// `masks[(e * sigma_outer + a) * words ..]`: inner labels accepted by edge `e` when its outer end has label `a`.
    masks: Vec<u64>,
    incident: Vec<Vec<usize>>,
    count: u64,
    _game: &'a Game,
}

impl<'a> Solver<'a> {
    fn new(g: &'a Game, weights: &[u64], comp: &Component) -> Self {
        let outer_is_left = pow_sat(g.sigma_x(), comp.left.len()) <= pow_sat(g.sigma_y(), comp.right.len());
        let (outer, inner, so, si) = if outer_is_left {
            (comp.left.clone(), comp.right.clone(), g.sigma_x(), g.sigma_y())
        } else {
            (comp.right.clone(), comp.left.clone(), g.sigma_y(), g.sigma_x())
        };
        let local = |set: &[usize], v: usize| set.binary_search(&v).expect("vertex in component");
        let words = si.div_ceil(64);
        let mut edges = Vec::with_capacity(comp.edges.len());
        let mut masks = vec![0u64; comp.edges.len() * so * words];
        let mut incident = vec![Vec::new(); outer.len()];
        for (k, &e) in comp.edges.iter().enumerate() {
            let (x, y) = g.edges()[e];
            let rel = &g.relations()[e];
            let (o, i) = if outer_is_left { (local(&outer, x), local(&inner, y)) } else { (local(&outer, y), local(&inner, x)) };
            edges.push((o, i, weights[e]));
            incident[o].push(k);
            for a in 0..so {
                let base = (k * so + a) * words;
                for b in 0..si {
                    let ok = if outer_is_left { rel.contains(a, b) } else { rel.contains(b, a) };
                    if ok {
                        masks[base + b / 64] |= 1 << (b % 64);
                    }
                }
            }
        }
        let count = u64::try_from(pow_sat(so, outer.len())).expect("within budget");
        Self { outer_is_left, outer, inner, sigma_outer: so, sigma_inner: si, words, edges, masks, incident, count, _game: g }
    }

    fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    fn decode(&self, mut index: u64) -> Vec<usize> {
        let mut labels = vec![0; self.outer.len()];
        for slot in labels.iter_mut().rev() {
            *slot = (index % self.sigma_outer as u64) as usize;
            index /= self.sigma_outer as u64;
        }
        labels
    }

    #[inline]
    fn apply(&self, scores: &mut [u64], e: usize, label: usize, add: bool) {
        let (_, v, w) = self.edges[e];
        let base = (e * self.sigma_outer + label) * self.words;
        let row = &mut scores[v * self.sigma_inner..(v + 1) * self.sigma_inner];
        for word in 0..self.words {
            let mut bits = self.masks[base + word];
            while bits != 0 {
                let b = word * 64 + bits.trailing_zeros() as usize;
                if add {
                    row[b] += w;
                } else {
                    row[b] -= w;
                }
                bits &= bits - 1;
            }
        }
    }

    fn row_max(&self, scores: &[u64], v: usize) -> u64 {
        scores[v * self.sigma_inner..(v + 1) * self.sigma_inner].iter().copied().max().unwrap_or(0)
    }

    /// Best satisfied weight and its first labeling index within `[start, end)`.
    fn scan(&self, start: u64, end: u64) -> (u64, u64) {
        let perfect = self.total_weight();
        let mut labels = self.decode(start);
        let mut scores = vec![0u64; self.inner.len() * self.sigma_inner];
        for (e, &(o, _, _)) in self.edges.iter().enumerate() {
            self.apply(&mut scores, e, labels[o], true);
        }
        let mut best_row: Vec<u64> = (0..self.inner.len()).map(|v| self.row_max(&scores, v)).collect();
        let mut current: u64 = best_row.iter().sum();
        let (mut best, mut best_index) = (current, start);
        let mut dirty = vec![false; self.inner.len()];
        let mut dirty_list = Vec::new();
        let last = self.outer.len() - 1;
        let mut index = start + 1;
        while index < end && best < perfect {
            let mut pos = last;
            loop {
                let old = labels[pos];
                let new = if old + 1 == self.sigma_outer { 0 } else { old + 1 };
                for &e in &self.incident[pos] {
                    self.apply(&mut scores, e, old, false);
                    self.apply(&mut scores, e, new, true);
                    let v = self.edges[e].1;
                    if !dirty[v] {
                        dirty[v] = true;
                        dirty_list.push(v);
                    }
                }
                labels[pos] = new;
                if new != 0 || pos == 0 {
                    break;
                }
                pos -= 1;
            }
            for v in dirty_list.drain(..) {
                dirty[v] = false;
                let m = self.row_max(&scores, v);
                current = current - best_row[v] + m;
                best_row[v] = m;
            }
            if current > best {
                best = current;
                best_index = index;
            }
            index += 1;
        }
        (best, best_index)
    }

    fn search(&self, parallel: bool) -> (u64, u64) {
        if !parallel || self.count <= 4 * CHUNK {
            return self.scan(0, self.count);
        }
        let chunk = (self.count / 1024).max(CHUNK);
        let starts: Vec<u64> = (0..self.count).step_by(chunk as usize).collect();
        starts
            .par_iter()
            .map(|&s| self.scan(s, (s + chunk).min(self.count)))
            .reduce(|| (0, u64::MAX), pick)
    }

    fn write_witness(&self, index: u64, labeling: &mut Labeling) {
        let labels = self.decode(index);
        let mut scores = vec![0u64; self.inner.len() * self.sigma_inner];
        for (e, &(o, _, _)) in self.edges.iter().enumerate() {
            self.apply(&mut scores, e, labels[o], true);
        }
        let inner_labels: Vec<usize> = (0..self.inner.len())
            .map(|v| {
                let row = &scores[v * self.sigma_inner..(v + 1) * self.sigma_inner];
                let m = row.iter().copied().max().unwrap_or(0);
                row.iter().position(|&s| s == m).unwrap_or(0)
            })
            .collect();
        let (outer_dst, inner_dst) =
            if self.outer_is_left { (&mut labeling.left, &mut labeling.right) } else { (&mut labeling.right, &mut labeling.left) };
        for (k, &v) in self.outer.iter().enumerate() {
            outer_dst[v] = labels[k];
        }
        for (k, &v) in self.inner.iter().enumerate() {
            inner_dst[v] = inner_labels[k];
        }
    }
}

fn pick(a: (u64, u64), b: (u64, u64)) -> (u64, u64) {
    match a.0.cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}
