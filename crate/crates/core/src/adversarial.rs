//! Negative examples: an extractor rewired so that one dense set induces a
//! skewed distribution, and the low-degree bad-subset witness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fortifier::DeviationKernel;
use crate::graph::BipartiteGraph;
use crate::subsets::normalize_set;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewReport {
    /// Common S-degree `t = |S|·D/|X|` after step 1.
    pub s_degree: usize,
    /// Edges moved off each `x ≠ x₁` in step 2: `⌊ε·t⌋`.
    pub per_vertex_moves: usize,
    pub step1_relocated: usize,
    pub step2_relocated: usize,
    pub edges_relocated: usize,
    /// `Σ_x |d_S(x) − t|` before step 1; equals `|S|·D·|μ_S − u|₁`.
    pub step1_degree_change: usize,
    /// `Σ_x |d'_S(x) − t|` after step 2.
    pub step2_degree_change: usize,
    /// `ε·δ·|W|·D = ε·|S|·D`.
    pub relocation_budget: f64,
    /// `(|X| − 1)·(ε·t − ⌊ε·t⌋)`: step-2 moves lost to flooring.
    pub rounding_slack: f64,
    pub x1: usize,
    pub target_mass: f64,
    pub achieved_mass: f64,
    /// `|μ_S − u|₁` before and after the rewiring.
    pub l1_on_s_before: f64,
    pub l1_on_s_after: f64,
}

fn s_degrees(h: &BipartiteGraph, in_s: &[bool]) -> Vec<usize> {
    let mut d = vec![0; h.n_right()];
    for &(w, x) in h.edges() {
        if in_s[w] {
            d[x] += 1;
        }
    }
    d
}

/// Moves one S-edge from `from` to `to`, preferring the lowest-index
/// `w ∈ S` not already adjacent to `to`.
fn relocate(edges: &mut [(usize, usize)], in_s: &[bool], from: usize, to: usize) {
    let candidates: Vec<usize> = (0..edges.len()).filter(|&i| in_s[edges[i].0] && edges[i].1 == from).collect();
    let fresh = candidates.iter().copied().find(|&i| {
        let w = edges[i].0;
        !edges.iter().any(|&(v, x)| v == w && x == to)
    });
    let i = fresh.or_else(|| candidates.first().copied()).expect("donor has an S-edge");
    edges[i].1 = to;
}

fn membership(h: &BipartiteGraph, s: &[usize]) -> Vec<bool> {
    let mut m = vec![false; h.n_left()];
    s.iter().for_each(|&w| m[w] = true);
    m
}

/// Common S-degree `|S|·D/|X|`, if integral.
fn uniform_s_degree(h: &BipartiteGraph, s: &[usize]) -> Result<usize> {
    let d = h.left_degree().ok_or(Error::NotLeftRegular)?;
    let total = s.len() * d;
    if !total.is_multiple_of(h.n_right()) {
        return Err(Error::ParameterInfeasible(format!("|S|·D = {total} is not divisible by |X| = {}", h.n_right())));
    }
    Ok(total / h.n_right())
}

/// Step 1: rewire S-edges so every `x` has S-degree exactly `|S|·D/|X|`.
/// Donors (lowest index first) only lose S-edges and recipients only gain.
/// Returns the new graph and the number of edges moved.
pub fn uniformize(h: &BipartiteGraph, s: &[usize]) -> Result<(BipartiteGraph, usize)> {
    let s = normalize_set(h.n_left(), s)?;
    let t = uniform_s_degree(h, &s)?;
    let in_s = membership(h, &s);
    let mut deg = s_degrees(h, &in_s);
    let mut edges = h.edges().to_vec();
    let mut moved = 0;
    let (mut donor, mut recipient) = (0, 0);
    loop {
        while donor < deg.len() && deg[donor] <= t {
            donor += 1;
        }
        while recipient < deg.len() && deg[recipient] >= t {
            recipient += 1;
        }
        if donor == deg.len() || recipient == deg.len() {
            break;
        }
        relocate(&mut edges, &in_s, donor, recipient);
        deg[donor] -= 1;
        deg[recipient] += 1;
        moved += 1;
    }
    Ok((BipartiteGraph::new(h.n_left(), h.n_right(), edges)?, moved))
}

/// Step 2: move `per_vertex` S-edges from every `x ≠ x1` onto `x1`.
pub fn concentrate(h: &BipartiteGraph, s: &[usize], per_vertex: usize, x1: usize) -> Result<BipartiteGraph> {
    let s = normalize_set(h.n_left(), s)?;
    if x1 >= h.n_right() {
        return Err(Error::InvalidParameter(format!("x1 = {x1} out of range")));
    }
    let in_s = membership(h, &s);
    let deg = s_degrees(h, &in_s);
    if let Some(x) = (0..h.n_right()).find(|&x| x != x1 && deg[x] < per_vertex) {
        return Err(Error::ParameterInfeasible(format!("vertex {x} has only {} S-edges", deg[x])));
    }
    let mut edges = h.edges().to_vec();
    for x in (0..h.n_right()).filter(|&x| x != x1) {
        for _ in 0..per_vertex {
            relocate(&mut edges, &in_s, x, x1);
        }
    }
    BipartiteGraph::new(h.n_left(), h.n_right(), edges)
}

/// Rewires a left-regular extractor so that `S` (with `|S|·D/|X|` integral)
/// induces mass about `eps` on `x1` and `(1 − eps)/(|X| − 1)` elsewhere.
/// Only edges inside `S × X` move, so left-degrees are unchanged.
pub fn skew_extractor(h: &BipartiteGraph, s: &[usize], eps: f64, x1: usize) -> Result<(BipartiteGraph, SkewReport)> {
    let d = h.left_degree().ok_or(Error::NotLeftRegular)?;
    let s = normalize_set(h.n_left(), s)?;
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1)")));
    }
    let t = uniform_s_degree(h, &s)?;
    let r = (eps * t as f64 + 1e-9).floor() as usize;
    if r == 0 {
        return Err(Error::ParameterInfeasible(format!(
            "eps·|S|·D/|X| = {} < 1, so no edge would move in step 2",
            eps * t as f64
        )));
    }
    let n = h.n_right();
    let in_s = membership(h, &s);
    let before = s_degrees(h, &in_s);
    let kernel = DeviationKernel::new(h);
    let l1_before = kernel.eval(&s).l1;

    let (uniform, step1) = uniformize(h, &s)?;
    let skewed = concentrate(&uniform, &s, r, x1)?;
    let after = s_degrees(&skewed, &in_s);
    let step2 = r * (n - 1);
    let sd = (s.len() * d) as f64;
    let report = SkewReport {
        s_degree: t,
        per_vertex_moves: r,
        step1_relocated: step1,
        step2_relocated: step2,
        edges_relocated: step1 + step2,
        step1_degree_change: before.iter().map(|&v| v.abs_diff(t)).sum(),
        step2_degree_change: after.iter().map(|&v| v.abs_diff(t)).sum(),
        relocation_budget: eps * sd,
        rounding_slack: (n - 1) as f64 * (eps * t as f64 - r as f64),
        x1,
        target_mass: eps,
        achieved_mass: after[x1] as f64 / sd,
        l1_on_s_before: l1_before,
        l1_on_s_after: DeviationKernel::new(&skewed).eval(&s).l1,
    };
    Ok((skewed, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadSubsetCase {
    /// A quarter of `X` has degree below half the average; `S = W`.
    SparseDegrees,
    /// Neighbourhood of mid-degree vertices plus a disjoint block.
    Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadSubset {
    pub subset: Vec<usize>,
    /// `|X|·‖π − u‖²` for the returned subset.
    pub achieved: f64,
    pub case: BadSubsetCase,
    /// Split case: the mid-degree vertices used.
    pub x_prime: Vec<usize>,
    /// Split case: achieved values of `S₁` (when dense enough) and `S₂`.
    pub candidates: Vec<f64>,
}

/// Constructs a subset of density at least `delta` whose induced
/// distribution is far from uniform in `ℓ₂`, for left-degree `D ≈ 1/(cεδ)`.
///
/// If a quarter of `X` has degree below `d_avg/2`, `W` itself works.
/// Otherwise `X'` is the `⌈cεδ²|X|⌉` mid-degree vertices (`d_avg/2 < deg <
/// 2d_avg`) of largest degree, `S₀ = N(X')`, `S₁` the `⌈δ|W|⌉` lowest-index
/// vertices outside `S₀`, and the better of `S₁` and `S₂ = S₀ ∪ S₁` is
/// returned: `π₁` vanishes on `X'` while `π₂` is large there.
pub fn find_bad_subset(h: &BipartiteGraph, delta: f64, eps: f64, c: f64) -> Result<BadSubset> {
    let d = h.left_degree().ok_or(Error::NotLeftRegular)?;
    if d == 0 {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let (m, n) = (h.n_left(), h.n_right());
    let d_avg = (m * d) as f64 / n as f64;
    let kernel = DeviationKernel::new(h);
    let deg = h.right_degrees();
    let sparse = deg.iter().filter(|&&v| (v as f64) < 0.5 * d_avg).count();
    if 4 * sparse >= n {
        let all: Vec<usize> = (0..m).collect();
        let achieved = kernel.eval(&all).l2_scaled;
        return Ok(BadSubset { subset: all, achieved, case: BadSubsetCase::SparseDegrees, x_prime: vec![], candidates: vec![] });
    }
    let k = (c * eps * delta * delta * n as f64 - 1e-9).ceil().max(1.0) as usize;
    let mut mid: Vec<usize> = (0..n).filter(|&x| (deg[x] as f64) > 0.5 * d_avg && (deg[x] as f64) < 2.0 * d_avg).collect();
    if mid.len() < k {
        return Err(Error::ParameterInfeasible(format!("only {} mid-degree vertices, need {k}", mid.len())));
    }
    mid.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
    let mut x_prime = mid[..k].to_vec();
    x_prime.sort_unstable();
    let mut in_s0 = vec![false; m];
    let right_adj = h.right_adjacency();
    for &x in &x_prime {
        for &w in &right_adj[x] {
            in_s0[w] = true;
        }
    }
    let need = (delta * m as f64 - 1e-9).ceil().max(1.0) as usize;
    let s1: Vec<usize> = (0..m).filter(|&w| !in_s0[w]).take(need).collect();
    let mut s2: Vec<usize> = (0..m).filter(|&w| in_s0[w]).chain(s1.iter().copied()).collect();
    s2.sort_unstable();
    if s2.len() < need {
        return Err(Error::ParameterInfeasible(format!("N(X') and its complement give {} vertices, need {need}", s2.len())));
    }
    // When N(X') leaves too few vertices, S₁ is not dense enough to count.
    let a1 = (s1.len() == need).then(|| kernel.eval(&s1).l2_scaled);
    let a2 = kernel.eval(&s2).l2_scaled;
    let (subset, achieved) = match a1 {
        Some(a1) if a1 >= a2 => (s1, a1),
        _ => (s2, a2),
    };
    let candidates = a1.into_iter().chain([a2]).collect();
    Ok(BadSubset { subset, achieved, case: BadSubsetCase::Split, x_prime, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fortifier::induced_distribution;
    use crate::spectral::random_biregular;

    fn s_neighbourhoods(h: &BipartiteGraph, s: &[usize]) -> Vec<Vec<usize>> {
        let in_s = membership(h, s);
        let mut out = vec![Vec::new(); h.n_right()];
        for &(w, x) in h.edges() {
            if in_s[w] {
                out[x].push(w);
            }
        }
        out
    }

    fn is_sub_multiset(a: &[usize], b: &[usize]) -> bool {
        let mut b = b.to_vec();
        a.iter().all(|v| match b.iter().position(|u| u == v) {
            Some(i) => {
                b.swap_remove(i);
                true
            }
            None => false,
        })
    }

    #[test]
    fn already_uniform_moves_nothing_in_step_one() {
        let h = BipartiteGraph::complete(4, 4);
        let (_, report) = skew_extractor(&h, &[0, 1], 0.5, 0).unwrap();
        assert_eq!(report.step1_relocated, 0);
        assert_eq!(report.per_vertex_moves, 1);
    }

    #[test]
    fn skew_preserves_left_degrees_and_is_monotone() {
        let h = random_biregular(400, 20, 5, 7).unwrap();
        let s: Vec<usize> = (0..40).collect();
        let (uniform, _) = uniformize(&h, &s).unwrap();
        let (skewed, report) = skew_extractor(&h, &s, 0.2, 3).unwrap();
        for g in [&uniform, &skewed] {
            assert_eq!(g.left_degrees(), h.left_degrees());
        }
        for (a, b) in [(&h, &uniform), (&uniform, &skewed)] {
            let (na, nb) = (s_neighbourhoods(a, &s), s_neighbourhoods(b, &s));
            for x in 0..h.n_right() {
                assert!(is_sub_multiset(&na[x], &nb[x]) || is_sub_multiset(&nb[x], &na[x]), "vertex {x}");
            }
        }
        // Edges outside S × X never move.
        let outside = |g: &BipartiteGraph| g.edges().iter().filter(|e| e.0 >= 40).copied().collect::<Vec<_>>();
        assert_eq!(outside(&skewed), outside(&h));
        assert_eq!(report.s_degree, 10);
        assert_eq!(report.per_vertex_moves, 2);
        let p = induced_distribution(&skewed, &s).unwrap();
        assert!((p.weights[3] - report.achieved_mass).abs() < 1e-12);
        assert!((report.achieved_mass - (10.0 + 2.0 * 19.0) / 200.0).abs() < 1e-12);
        for x in (0..20).filter(|&x| x != 3) {
            assert!((p.weights[x] - 8.0 / 200.0).abs() < 1e-12);
        }
        // Step 1 undoes exactly the S-degree imbalance.
        assert_eq!(2 * report.step1_relocated, report.step1_degree_change);
        assert!((report.step1_degree_change as f64 - 200.0 * report.l1_on_s_before).abs() < 1e-9);
        assert_eq!(report.step2_degree_change, 2 * report.step2_relocated);
        assert!(report.step2_relocated as f64 <= report.relocation_budget);
    }

    #[test]
    fn fractional_step_two_moves_are_infeasible() {
        let h = random_biregular(200, 50, 10, 1).unwrap();
        let s: Vec<usize> = (0..20).collect();
        assert!(matches!(skew_extractor(&h, &s, 0.1, 0), Err(Error::ParameterInfeasible(_))));
        assert!(matches!(skew_extractor(&h, &(0..21).collect::<Vec<_>>(), 0.1, 0), Err(Error::ParameterInfeasible(_))));
    }

    #[test]
    fn skew_rejects_irregular_graphs() {
        let h = BipartiteGraph::new(2, 2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        assert_eq!(skew_extractor(&h, &[0], 0.5, 0).unwrap_err(), Error::NotLeftRegular);
    }

    #[test]
    fn small_instance_reports_its_own_deviation() {
        // D = 1/(2εδ) exceeds |X| here, so N(X') swallows W and the
        // construction degenerates; the output is still a dense set whose
        // reported deviation is exact.
        let (delta, eps) = (0.1f64, 0.05f64);
        let d = (1.0 / (2.0 * eps * delta)).round() as usize;
        let h = random_biregular(400, 40, d, 3).unwrap();
        let bad = find_bad_subset(&h, delta, eps, 2.0).unwrap();
        assert!(bad.subset.len() as f64 >= delta * 400.0);
        let p = induced_distribution(&h, &bad.subset).unwrap();
        assert!((bad.achieved - 40.0 * p.l2_sq_from_uniform()).abs() < 1e-12);
        assert_eq!(find_bad_subset(&h, delta, eps, 2.0).unwrap(), bad);
    }

    #[test]
    fn bad_subset_beats_threshold_on_low_degree_graphs() {
        let (delta, eps) = (0.1f64, 0.1f64);
        let d = (0.2 / (eps * delta) + 1e-9).floor() as usize;
        let c = 1.0 / (d as f64 * eps * delta);
        for seed in 0..5 {
            let h = BipartiteGraph::random_left_regular(2000, 200, d, seed).unwrap();
            let bad = find_bad_subset(&h, delta, eps, c).unwrap();
            assert_eq!(bad.case, BadSubsetCase::Split);
            assert!(bad.subset.len() >= 200);
            assert!(bad.achieved > eps, "seed {seed}: {:?}", bad.candidates);
        }
    }

    #[test]
    fn complete_graph_has_no_bad_subset() {
        let bad = find_bad_subset(&BipartiteGraph::complete(40, 10), 0.1, 0.1, 1.0).unwrap();
        assert!(bad.achieved.abs() < 1e-12);
    }

    #[test]
    fn sparse_degree_case_meets_the_cauchy_schwarz_floor() {
        // Every edge lands in the first half of X.
        let edges = (0..20).flat_map(|w| [(w, w % 5), (w, (w + 1) % 5)]).collect();
        let h = BipartiteGraph::new(20, 10, edges).unwrap();
        let bad = find_bad_subset(&h, 0.1, 0.1, 1.0).unwrap();
        assert_eq!(bad.case, BadSubsetCase::SparseDegrees);
        assert_eq!(bad.subset.len(), 20);
        assert!(bad.achieved >= 1.0 / 16.0);
    }
}
