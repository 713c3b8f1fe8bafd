//! Parallel repetition of small games and checks of the robust-game bound
//! `val(G^k) ≤ val(G^{k−1})·(val(G) + ε) + ε`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fortify::{audit_game, AuditOptions, Verdict};
use crate::game::{symmetrize, Game, Labeling};
use crate::relation::Relation;
use crate::value::{game_value_with, pow_sat, GameValue, ValueOptions};

/// Largest `|E|^k · (|Σ_X||Σ_Y|)^k` that [`repeat_game`] materialises.
pub const REPEAT_CAP: u128 = 1 << 28;

const TOLERANCE: f64 = 1e-12;

/// Digits of `index` in base `base`, most significant first.
fn tuple(mut index: usize, base: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = index % base;
        index /= base;
    }
    out
}

fn index_of(digits: impl IntoIterator<Item = usize>, base: usize) -> usize {
    digits.into_iter().fold(0, |acc, d| acc * base + d)
}

/// The `k`-fold repetition `G^k` on `(X^k, Y^k)` with edge multiset `E^k`.
///
/// Tuples of vertices, edges and labels are indexed lexicographically with
/// the first coordinate most significant. Relations are materialised.
pub fn repeat_game(g: &Game, k: usize) -> Result<Game> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let (sx, sy, m) = (g.sigma_x(), g.sigma_y(), g.n_edges());
    let size = pow_sat(m, k).saturating_mul(pow_sat(sx * sy, k));
    if size > REPEAT_CAP {
        return Err(Error::BudgetExceeded { needed: size, budget: REPEAT_CAP });
    }
    let (nl, nr) = (g.n_left().pow(k as u32), g.n_right().pow(k as u32));
    let (skx, sky) = (sx.pow(k as u32), sy.pow(k as u32));
    let mut edges = Vec::with_capacity(m.pow(k as u32));
    for e in 0..m.pow(k as u32) {
        let es = tuple(e, m, k);
        let x = index_of(es.iter().map(|&i| g.edges()[i].0), g.n_left());
        let y = index_of(es.iter().map(|&i| g.edges()[i].1), g.n_right());
        let rel = Relation::from_fn(skx, sky, |a, b| {
            let (la, lb) = (tuple(a, sx, k), tuple(b, sy, k));
            es.iter().zip(la.iter().zip(&lb)).all(|(&i, (&p, &q))| g.relations()[i].contains(p, q))
        });
        edges.push(((x, y), rel));
    }
    Game::new(nl, nr, skx, sky, edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// General games: precondition `2δ(|Σ_X||Σ_Y|)^{k−1} ≤ ε`.
    General,
    /// Symmetrized projection games: precondition `2δ|Σ_Y|^{k−1} ≤ ε`.
    Symmetrized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub j: usize,
    /// `val(G^j)`
    pub lhs: f64,
    /// `val(G^{j−1})·(val(G) + ε) + ε`
    pub rhs: f64,
    pub holds: bool,
}

/// Query-space partition from the `k = 2` argument for one optimal strategy.
///
/// For a query `(v₁, v₂)` the labels the strategy puts on `x₁`, `y₁` define a
/// rectangle `S × T` of second-round vertices; it is accepting when those
/// labels satisfy `v₁` and large when both sides have density at least `δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionAccounting {
    pub total: u64,
    /// Non-accepting, accepting-large and accepting-small queries.
    pub a0: u64,
    pub a1: u64,
    pub a2: u64,
    /// Queries won by the strategy (`val(G²)·|E|²`).
    pub successes: u64,
    pub successes_in_a1: u64,
    /// `|A₁| + |A₂| ≤ val(G)·|E|²`.
    pub first_round_ok: bool,
    /// On every accepting large rectangle, successes `≤ val(G_{S×T})·|E(S×T)|`.
    pub rectangles_ok: bool,
    /// `2δ·|E|²·|Σ|`, with `|Σ|` per the variant.
    pub a2_bound: f64,
    pub a2_ok: bool,
    /// `(val(G) + ε)·|A₁| + |A₂|`; meaningful when `G` is robust.
    pub success_bound: f64,
    pub success_bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub variant: Variant,
    pub k: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub val_base: f64,
    /// `val(G^j)` for `j = 1..=k`, as `p/q`.
    pub values_exact: Vec<String>,
    pub values: Vec<f64>,
    pub val_repeated: f64,
    /// `val(G)^k ≤ val(G^k) ≤ val(G)`.
    pub sandwich_ok: bool,
    pub biregular: bool,
    pub robust: bool,
    /// Worst rectangle value found by the exhaustive audit.
    pub audit_worst: f64,
    pub precondition_ok: bool,
    /// Whether the robust bounds were asserted (robust, bi-regular, precondition).
    pub bound_asserted: bool,
    pub steps: Vec<StepCheck>,
    /// `(val(G) + ε)^k + kε`.
    pub bound_general: f64,
    /// The same closed form for `G_sym`, set by the symmetrized variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_projection: Option<f64>,
    pub closed_form_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionAccounting>,
}

impl RepetitionReport {
    /// Every asserted check passed.
    pub fn ok(&self) -> bool {
        let bounds = !self.bound_asserted || (self.steps.iter().all(|s| s.holds) && self.closed_form_ok);
        let partition = self.partition.as_ref().is_none_or(|p| {
            p.first_round_ok && p.rectangles_ok && (!self.biregular || p.a2_ok) && (!self.bound_asserted || p.success_bound_ok)
        });
        self.sandwich_ok && bounds && partition
    }
}

fn to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Checks the repetition bounds for `g` up to `k` rounds.
pub fn verify_recursion(g: &Game, k: usize, delta: f64, epsilon: f64, opts: &AuditOptions) -> Result<RepetitionReport> {
    let alphabet = g.sigma_x() * g.sigma_y();
    verify(g, Variant::General, alphabet, k, delta, epsilon, opts)
}

/// The symmetrized form: checks `G_sym` of the projection game `g`, with the
/// precondition counted over `Σ_Y` only.
pub fn verify_recursion_symmetrized(g: &Game, k: usize, delta: f64, epsilon: f64, opts: &AuditOptions) -> Result<RepetitionReport> {
    let sym = symmetrize(g)?;
    verify(&sym, Variant::Symmetrized, g.sigma_y(), k, delta, epsilon, opts)
}

fn verify(g: &Game, variant: Variant, alphabet: usize, k: usize, delta: f64, epsilon: f64, opts: &AuditOptions) -> Result<RepetitionReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let vopts = ValueOptions::from(&opts.value);
    let mut exact = Vec::with_capacity(k);
    let mut witness_2: Option<GameValue> = None;
    for j in 1..=k {
        let v = game_value_with(&repeat_game(g, j)?, &vopts)?;
        exact.push(v.value);
        if j == 2 {
            witness_2 = Some(v);
        }
    }
    let values: Vec<f64> = exact.iter().map(to_f64).collect();
    let val = values[0];
    let sandwich_ok = exact.iter().enumerate().all(|(i, v)| {
        // val(G)^j ≤ val(G^j) ≤ val(G), compared exactly.
        let base = exact[0];
        let mut power = Ratio::from_integer(1u64);
        for _ in 0..=i {
            power *= base;
        }
        power <= *v && *v <= base
    });
    let audit = audit_game(g, delta, epsilon, opts)?;
    let robust = audit.verdict == Verdict::Robust;
    let precondition_ok = 2.0 * delta * (alphabet as f64).powi(k as i32 - 1) <= epsilon;
    let biregular = g.graph().is_biregular();
    let bound_asserted = robust && precondition_ok && biregular;
    let steps = (2..=k)
        .map(|j| {
            let rhs = values[j - 2] * (val + epsilon) + epsilon;
            StepCheck { j, lhs: values[j - 1], rhs, holds: values[j - 1] <= rhs + TOLERANCE }
        })
        .collect();
    let bound_general = (val + epsilon).powi(k as i32) + k as f64 * epsilon;
    let partition = match witness_2 {
        Some(w) => Some(partition_accounting(g, &w.labeling, alphabet, delta, epsilon, val, &vopts)?),
        None => None,
    };
    Ok(RepetitionReport {
        variant,
        k,
        delta,
        epsilon,
        val_base: val,
        values_exact: exact.iter().map(|r| format!("{}/{}", r.numer(), r.denom())).collect(),
        values: values.clone(),
        val_repeated: values[k - 1],
        sandwich_ok,
        biregular,
        robust,
        audit_worst: audit.worst_value.unwrap_or(0.0),
        precondition_ok,
        bound_asserted,
        steps,
        bound_general,
        bound_projection: (variant == Variant::Symmetrized).then_some(bound_general),
        closed_form_ok: values[k - 1] <= bound_general + TOLERANCE,
        partition,
    })
}

/// Recomputes the `A₀/A₁/A₂` partition of `E²` for a strategy on `G²`.
pub fn partition_accounting(
    g: &Game,
    strategy: &Labeling,
    alphabet: usize,
    delta: f64,
    epsilon: f64,
    val: f64,
    vopts: &ValueOptions,
) -> Result<PartitionAccounting> {
    let (nl, nr, sx, sy, m) = (g.n_left(), g.n_right(), g.sigma_x(), g.sigma_y(), g.n_edges());
    let g2 = repeat_game(g, 2)?;
    g2.check_labeling(strategy)?;
    // Labels the strategy gives in round `r` to the pair (a, b) of vertices.
    let left = |a: usize, b: usize, r: usize| tuple(strategy.left[a * nl + b], sx, 2)[r];
    let right = |a: usize, b: usize, r: usize| tuple(strategy.right[a * nr + b], sy, 2)[r];
    let edges = g.edges();
    let rels = g.relations();
    let (kl, kr) = (crate::subsets::min_size(delta, nl)?, crate::subsets::min_size(delta, nr)?);
    let (mut a0, mut a1, mut a2, mut successes, mut successes_in_a1) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut rectangles_ok = true;
    let mut seen = std::collections::HashSet::new();
    for e1 in 0..m {
        let (x1, y1) = edges[e1];
        for e2 in 0..m {
            let (x2, y2) = edges[e2];
            let (s1, t1) = (left(x1, x2, 0), right(y1, y2, 0));
            let won = rels[e1].contains(s1, t1) && rels[e2].contains(left(x1, x2, 1), right(y1, y2, 1));
            successes += u64::from(won);
            if !rels[e1].contains(s1, t1) {
                a0 += 1;
                continue;
            }
            let s: Vec<usize> = (0..nl).filter(|&x| left(x1, x, 0) == s1).collect();
            let t: Vec<usize> = (0..nr).filter(|&y| right(y1, y, 0) == t1).collect();
            if s.len() >= kl && t.len() >= kr {
                a1 += 1;
                successes_in_a1 += u64::from(won);
                if seen.insert((e1, s1, t1)) {
                    // Second-round play on this rectangle is a labeling of G.
                    let inside = g.edges_in(&s, &t)?;
                    let wins = inside
                        .iter()
                        .filter(|&&e| rels[e].contains(left(x1, edges[e].0, 1), right(y1, edges[e].1, 1)))
                        .count() as u64;
                    let sub = crate::value::subgame_value_with(g, &s, &t, vopts)?;
                    if Ratio::new(wins, inside.len() as u64) > sub.value {
                        rectangles_ok = false;
                    }
                }
            } else {
                a2 += 1;
            }
        }
    }
    let total = (m * m) as u64;
    let a2_bound = 2.0 * delta * total as f64 * alphabet as f64;
    let success_bound = (val + epsilon) * a1 as f64 + a2 as f64;
    Ok(PartitionAccounting {
        total,
        a0,
        a1,
        a2,
        successes,
        successes_in_a1,
        first_round_ok: (a1 + a2) as f64 <= val * total as f64 + 1e-9,
        rectangles_ok,
        a2_bound,
        a2_ok: a2 as f64 <= a2_bound + 1e-9,
        success_bound,
        success_bound_ok: successes as f64 <= success_bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;
    use crate::rng::SeedStream;
    use crate::value::game_value;

    fn contradiction() -> Game {
        Game::new(
            1,
            2,
            2,
            1,
            vec![((0, 0), Relation::from_pairs(2, 1, [(0, 0)]).unwrap()), ((0, 1), Relation::from_pairs(2, 1, [(1, 0)]).unwrap())],
        )
        .unwrap()
    }

    fn random_game(nl: usize, nr: usize, seed: u64) -> Game {
        let mut rng = SeedStream::new(seed);
        let edges = (0..nl)
            .flat_map(|x| (0..nr).map(move |y| (x, y)))
            .map(|e| (e, Relation::from_fn(2, 2, |_, _| rng.unit() < 0.5)))
            .collect::<Vec<_>>();
        Game::new(nl, nr, 2, 2, edges).unwrap()
    }

    #[test]
    fn one_round_is_the_game() {
        let g = random_game(2, 2, 1);
        assert_eq!(repeat_game(&g, 1).unwrap(), g);
    }

    #[test]
    fn satisfiable_games_stay_satisfiable() {
        let g = Game::uniform(&BipartiteGraph::complete(2, 2), Relation::equality(2)).unwrap();
        for k in 1..=3 {
            assert_eq!(game_value(&repeat_game(&g, k).unwrap()).unwrap().value, Ratio::from_integer(1));
        }
    }

    #[test]
    fn contradiction_squared() {
        let g2 = repeat_game(&contradiction(), 2).unwrap();
        assert_eq!((g2.n_left(), g2.n_right(), g2.n_edges()), (1, 4, 4));
        let v = game_value(&g2).unwrap().value;
        assert!(Ratio::new(1, 4) <= v && v <= Ratio::new(1, 2));
        // The single left vertex answers all four queries with one label pair.
        assert_eq!(v, Ratio::new(1, 4));
    }

    #[test]
    fn repeated_relations_require_every_round() {
        let g = random_game(1, 2, 4);
        let g2 = repeat_game(&g, 2).unwrap();
        for (e, &(x, y)) in g2.edges().iter().enumerate() {
            assert_eq!(x, 0);
            let (e1, e2) = (y / 2, y % 2);
            for a in 0..4 {
                for b in 0..4 {
                    let ok = g.relations()[e1].contains(a / 2, b / 2) && g.relations()[e2].contains(a % 2, b % 2);
                    assert_eq!(g2.relations()[e].contains(a, b), ok);
                }
            }
        }
    }

    #[test]
    fn sandwich_and_partition_on_random_games() {
        for seed in 0..10 {
            let g = random_game(2, 2, seed);
            let r = verify_recursion(&g, 2, 0.5, 1.0, &AuditOptions::default()).unwrap();
            assert!(r.sandwich_ok, "{r:?}");
            let p = r.partition.as_ref().unwrap();
            assert_eq!(p.a0 + p.a1 + p.a2, p.total);
            assert!(p.first_round_ok && p.rectangles_ok && p.a2_ok, "{p:?}");
            assert_eq!(p.successes as f64, r.values[1] * p.total as f64);
            assert!(r.ok());
        }
    }

    #[test]
    fn robust_bound_on_a_covering_instance() {
        // δ small enough that only full rectangles are large, ε covering.
        let g = random_game(3, 3, 7);
        let r = verify_recursion(&g, 2, 0.3, 0.9, &AuditOptions::default()).unwrap();
        if r.bound_asserted {
            assert!(r.steps.iter().all(|s| s.holds) && r.closed_form_ok);
        }
        assert!(r.ok());
    }

    #[test]
    fn satisfiable_game_trivially_meets_bound() {
        let g = Game::uniform(&BipartiteGraph::complete(2, 2), Relation::full(2, 2)).unwrap();
        let r = verify_recursion(&g, 2, 0.05, 0.5, &AuditOptions::default()).unwrap();
        assert_eq!(r.values, vec![1.0, 1.0]);
        assert!(r.robust && r.precondition_ok && r.bound_asserted && r.ok());
    }

    #[test]
    fn symmetrized_variant_uses_the_smaller_alphabet() {
        let g = Game::projection(2, 1, 2, 2, vec![((0, 0), vec![0, 1]), ((1, 0), vec![1, 0])]).unwrap();
        let r = verify_recursion_symmetrized(&g, 2, 0.5, 2.0, &AuditOptions::default()).unwrap();
        assert_eq!(r.variant, Variant::Symmetrized);
        assert!(r.precondition_ok);
        assert!(r.ok());
        let relation_game = random_game(1, 1, 0);
        if relation_game.is_projection() {
            return;
        }
        assert_eq!(verify_recursion_symmetrized(&relation_game, 2, 0.5, 1.0, &AuditOptions::default()).unwrap_err(), Error::NotProjection);
    }

    #[test]
    fn repeat_budget() {
        let g = Game::uniform(&BipartiteGraph::complete(3, 3), Relation::full(4, 4)).unwrap();
        assert!(matches!(repeat_game(&g, 4), Err(Error::BudgetExceeded { .. })));
        assert!(repeat_game(&g, 0).is_err());
    }
}
