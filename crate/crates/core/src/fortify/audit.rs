use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::concat::ConcatenatedGame;
use crate::error::{Error, Result};
use crate::game::Game;
use crate::subsets::{count_at_least, min_size, next_combination, normalize_set, sampled_subset, unrank, ScanMode};
use crate::value::{game_value_with, subgame_value_with, GameValue, ValueOptions};

pub const DEFAULT_RECTANGLE_BUDGET: u128 = 2_000_000;

const TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    ExactValue,
    DistanceCertificate,
}

/// How sub-game values of a concatenated game are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// On the base game with rectangle-dependent edge weights.
    Reduced,
    /// On the materialised derived game; only for tiny instances.
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Robust,
    Violated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rectangle {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub scan: ScanMode,
    pub engine: Engine,
    pub rectangle_budget: u128,
    pub value: ValueOptionsDoc,
    /// Rectangles always examined in sampled mode.
    pub extra: Vec<Rectangle>,
}

/// Serialisable mirror of [`ValueOptions`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueOptionsDoc {
    pub budget: u128,
    pub parallel: bool,
}

impl From<&ValueOptionsDoc> for ValueOptions {
    fn from(d: &ValueOptionsDoc) -> Self {
        ValueOptions { budget: d.budget, parallel: d.parallel }
    }
}

impl Default for AuditOptions {
    fn default() -> Self {
        let v = ValueOptions::default();
        Self {
            scan: ScanMode::Exhaustive,
            engine: Engine::Reduced,
            rectangle_budget: DEFAULT_RECTANGLE_BUDGET,
            // Rectangles are already processed in parallel.
            value: ValueOptionsDoc { budget: v.budget, parallel: false },
            extra: Vec::new(),
        }
    }
}

impl AuditOptions {
    pub fn sampled(trials: usize, seed: u64) -> Self {
        Self { scan: ScanMode::Sampled { trials, seed }, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub delta: f64,
    pub epsilon: f64,
    pub mode: AuditMode,
    pub scan: ScanMode,
    pub rectangles_checked: u64,
    /// Rectangles carrying no edge; their sub-game is undefined and skipped.
    pub empty_rectangles: u64,
    pub worst_rectangle: Rectangle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_value: Option<f64>,
    /// `numerator/denominator` of the worst sub-game value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_value_exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_l1_distance: Option<f64>,
    pub val_base: f64,
    /// Value the exact audit adds `epsilon` to: that of the audited game itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub val_game: Option<f64>,
    /// Distance mode: every audited sub-game value is at most `val_base + worst_l1_distance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implied_value_bound: Option<f64>,
    pub bound: f64,
    pub verdict: Verdict,
}

fn ratio_string(r: &Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

struct RectScan<T> {
    worst: Option<(T, Rectangle)>,
    checked: u64,
    empty: u64,
}

fn all_subsets(n: usize, k_min: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for k in k_min.max(1)..=n {
        let mut c = unrank(n, k, 0);
        loop {
            out.push(c.clone());
            if !next_combination(&mut c, n) {
                break;
            }
        }
    }
    out
}

enum Source {
    Product(Vec<Vec<usize>>, Vec<Vec<usize>>),
    Sampled { trials: usize, seed: u64, extra: Vec<Rectangle>, kl: usize, kr: usize, n_left: usize, n_right: usize },
}

impl Source {
    fn len(&self) -> usize {
        match self {
            Source::Product(l, r) => l.len() * r.len(),
            Source::Sampled { trials, extra, .. } => trials + extra.len(),
        }
    }

    fn get(&self, i: usize) -> Rectangle {
        match self {
            Source::Product(l, r) => Rectangle { s: l[i / r.len()].clone(), t: r[i % r.len()].clone() },
            Source::Sampled { seed, extra, kl, kr, n_left, n_right, .. } => {
                if i < extra.len() {
                    return extra[i].clone();
                }
                let t = i - extra.len();
                Rectangle {
                    s: sampled_subset(*n_left, *kl, *seed, "rectangle-left", t),
                    t: sampled_subset(*n_right, *kr, *seed, "rectangle-right", t),
                }
            }
        }
    }
}

/// Maximum of `f` over rectangles of density at least `delta` on both sides.
/// `f` returns `None` for rectangles without edges. Ties keep the rectangle
/// enumerated first.
fn scan_rectangles<T, F>(
    n_left: usize,
    n_right: usize,
    delta: f64,
    opts: &AuditOptions,
    f: F,
) -> Result<RectScan<T>>
where
    T: PartialOrd + Send,
    F: Fn(&[usize], &[usize]) -> Result<Option<T>> + Sync,
{
    let (kl, kr) = (min_size(delta, n_left)?, min_size(delta, n_right)?);
    let extra = opts
        .extra
        .iter()
        .map(|r| Ok(Rectangle { s: normalize_set(n_left, &r.s)?, t: normalize_set(n_right, &r.t)? }))
        .collect::<Result<Vec<_>>>()?;
    let source = match &opts.scan {
        ScanMode::Exhaustive => {
            let needed = count_at_least(n_left, kl).saturating_mul(count_at_least(n_right, kr));
            if needed > opts.rectangle_budget {
                return Err(Error::BudgetExceeded { needed, budget: opts.rectangle_budget });
            }
            Source::Product(all_subsets(n_left, kl), all_subsets(n_right, kr))
        }
        ScanMode::Sampled { trials, seed } => {
            if *trials == 0 && extra.is_empty() {
                return Err(Error::InvalidParameter("sampled audits need at least one trial".into()));
            }
            Source::Sampled { trials: *trials, seed: *seed, extra, kl, kr, n_left, n_right }
        }
    };
    let total = source.len();
    let rects = |i: usize| source.get(i);
    let results = (0..total)
        .into_par_iter()
        .map(|i| {
            let r = rects(i);
            if r.s.is_empty() || r.t.is_empty() {
                return Err(Error::EmptySet);
            }
            Ok(f(&r.s, &r.t)?.map(|v| (v, i, r)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scan = RectScan { worst: None, checked: total as u64, empty: 0 };
    for item in results {
        match item {
            None => scan.empty += 1,
            Some((v, _, r)) => {
                if scan.worst.as_ref().is_none_or(|(best, _)| v > *best) {
                    scan.worst = Some((v, r));
                }
            }
        }
    }
    Ok(scan)
}

fn optional_value(r: Result<GameValue>) -> Result<Option<Ratio<u64>>> {
    match r {
        Ok(v) => Ok(Some(v.value)),
        Err(Error::EmptySubgame) => Ok(None),
        Err(e) => Err(e),
    }
}

fn exact_report(
    scan: RectScan<Ratio<u64>>,
    delta: f64,
    epsilon: f64,
    opts: &AuditOptions,
    val_base: Ratio<u64>,
    val_game: Ratio<u64>,
) -> Result<AuditReport> {
    let (worst, rect) = scan.worst.ok_or(Error::EmptySubgame)?;
    let bound = to_f64(&val_game) + epsilon;
    let verdict = if to_f64(&worst) <= bound + TOLERANCE { Verdict::Robust } else { Verdict::Violated };
    Ok(AuditReport {
        delta,
        epsilon,
        mode: AuditMode::ExactValue,
        scan: opts.scan.clone(),
        rectangles_checked: scan.checked,
        empty_rectangles: scan.empty,
        worst_rectangle: rect,
        worst_value: Some(to_f64(&worst)),
        worst_value_exact: Some(ratio_string(&worst)),
        worst_l1_distance: None,
        val_base: to_f64(&val_base),
        val_game: Some(to_f64(&val_game)),
        implied_value_bound: None,
        bound,
        verdict,
    })
}

/// Robustness audit of a concatenated game by exact sub-game values.
///
/// The verdict compares the worst sub-game value with `val(H₁∘G∘H₂) + ε`;
/// for bi-regular gadgets that equals `val(G) + ε`.
pub fn audit_exact(cg: &ConcatenatedGame, delta: f64, epsilon: f64, opts: &AuditOptions) -> Result<AuditReport> {
    let vopts = ValueOptions::from(&opts.value);
    let val_base = game_value_with(cg.base(), &vopts)?.value;
    let val_game = cg.value(&vopts)?.value;
    let scan = match opts.engine {
        Engine::Reduced => scan_rectangles(cg.n_w(), cg.n_z(), delta, opts, |s, t| optional_value(cg.subgame_value(s, t, &vopts)))?,
        Engine::Direct => {
            let derived = cg.derived_game()?;
            scan_rectangles(cg.n_w(), cg.n_z(), delta, opts, |s, t| optional_value(subgame_value_with(&derived, s, t, &vopts)))?
        }
    };
    exact_report(scan, delta, epsilon, opts, val_base, val_game)
}

/// Robustness audit of a plain game: every rectangle `S × T` with density at
/// least `delta` on both sides must have sub-game value at most `val(g) + ε`.
pub fn audit_game(g: &Game, delta: f64, epsilon: f64, opts: &AuditOptions) -> Result<AuditReport> {
    let vopts = ValueOptions::from(&opts.value);
    let val = game_value_with(g, &vopts)?.value;
    let scan = scan_rectangles(g.n_left(), g.n_right(), delta, opts, |s, t| optional_value(subgame_value_with(g, s, t, &vopts)))?;
    exact_report(scan, delta, epsilon, opts, val, val)
}

/// Worst `ℓ₁` distance of the rectangle edge distribution from uniform.
///
/// The verdict compares the distance with `epsilon`. Since a strategy's
/// success differs between two edge distributions by at most their `ℓ₁`
/// distance, each audited sub-game value is at most `val(G)` plus it.
pub fn audit_distance(cg: &ConcatenatedGame, delta: f64, epsilon: f64, opts: &AuditOptions) -> Result<AuditReport> {
    let vopts = ValueOptions::from(&opts.value);
    let val_base = to_f64(&game_value_with(cg.base(), &vopts)?.value);
    let m = cg.base().n_edges() as u128;
    let scan = scan_rectangles(cg.n_w(), cg.n_z(), delta, opts, |s, t| {
        let w = cg.rectangle_weights(s, t);
        let total: u128 = w.iter().map(|&v| v as u128).sum();
        if total == 0 {
            return Ok(None);
        }
        // |π_e − 1/|E|| = |w_e·|E| − W| / (W·|E|)
        let num: u128 = w.iter().map(|&v| (v as u128 * m).abs_diff(total)).sum();
        Ok(Some(num as f64 / (total as f64 * m as f64)))
    })?;
    let (worst, rect) = scan.worst.ok_or(Error::EmptySubgame)?;
    Ok(AuditReport {
        delta,
        epsilon,
        mode: AuditMode::DistanceCertificate,
        scan: opts.scan.clone(),
        rectangles_checked: scan.checked,
        empty_rectangles: scan.empty,
        worst_rectangle: rect,
        worst_value: None,
        worst_value_exact: None,
        worst_l1_distance: Some(worst),
        val_base,
        val_game: None,
        implied_value_bound: Some(val_base + worst),
        bound: epsilon,
        verdict: if worst <= epsilon + TOLERANCE { Verdict::Robust } else { Verdict::Violated },
    })
}

/// Consequence of a distance audit on a matching base game with the same
/// gadget `H` on both sides: if every rectangle's edge distribution is within
/// `ε < 1` of uniform, each dense `S` has `|μ_S − u|₁ ≤ ε` (take `T = W`) and
/// `|X|·‖μ_S − u‖² ≤ ((1 + ε)/(1 − ε))² − 1` (take `T = S`).
/// Returns `(l1, l2_scaled)` bounds.
pub fn necessity_bound(eps: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("distance {eps} outside [0, 1)")));
    }
    Ok((eps, ((1.0 + eps) / (1.0 - eps)).powi(2) - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fortifier::{measure_subsets, CheckOptions};
    use crate::fortify::concat::{concatenate, concatenate_symmetric};
    use crate::graph::BipartiteGraph;
    use crate::relation::Relation;
    use crate::rng::SeedStream;
    use crate::spectral::random_biregular;

    fn random_projection(graph: &BipartiteGraph, sx: usize, sy: usize, seed: u64) -> Game {
        let mut rng = SeedStream::new(seed);
        let edges = graph.edges().iter().map(|&e| (e, (0..sx).map(|_| rng.below(sy as u64) as usize).collect())).collect();
        Game::projection(graph.n_left(), graph.n_right(), sx, sy, edges).unwrap()
    }

    #[test]
    fn full_density_gives_the_game_value() {
        let g = random_projection(&BipartiteGraph::matching(3), 2, 2, 1);
        let h = random_biregular(4, 3, 3, 2).unwrap();
        let cg = concatenate_symmetric(&h, &g).unwrap();
        let r = audit_exact(&cg, 1.0, 0.0, &AuditOptions::default()).unwrap();
        assert_eq!(r.rectangles_checked, 1);
        assert_eq!(r.worst_value, Some(r.val_base));
        assert_eq!(r.verdict, Verdict::Robust);
    }

    #[test]
    fn satisfiable_base_is_robust_at_zero() {
        let g = Game::uniform(&BipartiteGraph::matching(3), Relation::equality(2)).unwrap();
        let h = random_biregular(5, 3, 3, 4).unwrap();
        let cg = concatenate_symmetric(&h, &g).unwrap();
        let r = audit_exact(&cg, 0.2, 0.0, &AuditOptions::default()).unwrap();
        assert_eq!(r.worst_value, Some(1.0));
        assert_eq!(r.verdict, Verdict::Robust);
    }

    #[test]
    fn direct_and_reduced_engines_agree() {
        for seed in 0..4 {
            let g = random_projection(&BipartiteGraph::cycle(2), 2, 2, seed);
            let h1 = random_biregular(3, 2, 2, seed + 10).unwrap();
            let h2 = random_biregular(4, 2, 1, seed + 20).unwrap();
            let cg = concatenate(&h1, &g, &h2).unwrap();
            let reduced = audit_exact(&cg, 0.3, 0.1, &AuditOptions::default()).unwrap();
            let direct = audit_exact(&cg, 0.3, 0.1, &AuditOptions { engine: Engine::Direct, ..Default::default() }).unwrap();
            assert_eq!(reduced, direct);
        }
    }

    #[test]
    fn complete_gadgets_have_zero_distance() {
        let g = random_projection(&BipartiteGraph::matching(4), 2, 2, 3);
        let k = BipartiteGraph::complete(5, 4);
        let r = audit_distance(&concatenate_symmetric(&k, &g).unwrap(), 0.2, 0.0, &AuditOptions::default()).unwrap();
        assert_eq!(r.worst_l1_distance, Some(0.0));
        assert_eq!(r.verdict, Verdict::Robust);
    }

    #[test]
    fn distance_certificate_bounds_exact_values() {
        for seed in 0..6 {
            let graph = random_biregular(3, 3, 2, seed).unwrap();
            let g = random_projection(&graph, 2, 2, seed + 1);
            let h = random_biregular(6, 3, 2, seed + 2).unwrap();
            let cg = concatenate_symmetric(&h, &g).unwrap();
            let exact = audit_exact(&cg, 0.3, 0.0, &AuditOptions::default()).unwrap();
            let dist = audit_distance(&cg, 0.3, 0.0, &AuditOptions::default()).unwrap();
            assert!(exact.worst_value.unwrap() <= dist.implied_value_bound.unwrap() + 1e-9);
        }
    }

    #[test]
    fn distance_audit_implies_subset_bounds_on_matchings() {
        for seed in 0..5 {
            let n = 4;
            let g = random_projection(&BipartiteGraph::matching(n), 2, 2, seed);
            let h = random_biregular(8, n, 3, seed + 7).unwrap();
            let delta = 0.5;
            let dist = audit_distance(&concatenate_symmetric(&h, &g).unwrap(), delta, 0.0, &AuditOptions::default()).unwrap();
            let eps = dist.worst_l1_distance.unwrap();
            if eps >= 1.0 {
                continue;
            }
            let (l1, l2) = necessity_bound(eps).unwrap();
            let subsets = measure_subsets(&h, delta, &CheckOptions::default()).unwrap();
            assert!(subsets.worst_l1.value <= l1 + 1e-12);
            assert!(subsets.worst_l2.value <= l2 + 1e-12);
        }
    }

    #[test]
    fn sampled_audits_are_reproducible_and_include_extras() {
        let g = random_projection(&BipartiteGraph::matching(4), 2, 2, 5);
        let h = random_biregular(12, 4, 2, 6).unwrap();
        let cg = concatenate_symmetric(&h, &g).unwrap();
        let mut opts = AuditOptions::sampled(40, 3);
        opts.extra.push(Rectangle { s: (0..12).collect(), t: (0..12).collect() });
        let a = audit_exact(&cg, 0.25, 0.1, &opts).unwrap();
        assert_eq!(a, audit_exact(&cg, 0.25, 0.1, &opts).unwrap());
        assert_eq!(a.rectangles_checked, 41);
    }

    #[test]
    fn rectangle_budget_is_enforced() {
        let g = random_projection(&BipartiteGraph::matching(2), 2, 2, 0);
        let h = random_biregular(20, 2, 1, 0).unwrap();
        let opts = AuditOptions { rectangle_budget: 1000, ..Default::default() };
        let err = audit_exact(&concatenate_symmetric(&h, &g).unwrap(), 0.1, 0.1, &opts).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn plain_game_audit() {
        // A matching with one satisfiable edge is badly non-robust at δ = 1/n.
        let mut edges = vec![((0, 0), Relation::equality(2))];
        edges.extend((1..4).map(|i| ((i, i), Relation::empty(2, 2))));
        let g = Game::new(4, 4, 2, 2, edges).unwrap();
        let r = audit_game(&g, 0.25, 0.5, &AuditOptions::default()).unwrap();
        assert_eq!(r.worst_value, Some(1.0));
        assert_eq!(r.worst_value_exact.as_deref(), Some("1/1"));
        assert_eq!(r.verdict, Verdict::Violated);
        assert_eq!(audit_game(&g, 1.0, 0.0, &AuditOptions::default()).unwrap().verdict, Verdict::Robust);
    }

    #[test]
    fn necessity_bound_values() {
        assert_eq!(necessity_bound(0.0).unwrap(), (0.0, 0.0));
        let (_, c) = necessity_bound(0.5).unwrap();
        assert!((c - 8.0).abs() < 1e-12);
        assert!(necessity_bound(1.0).is_err());
    }
}
