use fortification::distribution::{edge_distribution, Distribution, GroundSet};
use fortification::regularize::biregularize;
use fortification::repetition::repeat_game;
use fortification::rng::SeedStream;
use fortification::spectral::{random_biregular, spectral_lambda};
use fortification::{game_value, subgame_value, BipartiteGraph, Game, Relation};
use proptest::prelude::*;

fn game_from_seed(nl: usize, nr: usize, seed: u64, density: f64) -> Game {
    let mut rng = SeedStream::new(seed);
    let mut edges = Vec::new();
    for e in (0..nl).flat_map(|x| (0..nr).map(move |y| (x, y))) {
        if rng.unit() < density {
            edges.push((e, Relation::from_fn(2, 2, |_, _| rng.unit() < 0.4)));
        }
    }
    Game::new(nl, nr, 2, 2, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enlarging_relations_never_lowers_value(seed in any::<u64>(), extra in 0usize..4) {
        let g = game_from_seed(3, 3, seed, 0.7);
        prop_assume!(g.n_edges() > 0);
        let grown: Vec<_> = g
            .edge_list()
            .into_iter()
            .enumerate()
            .map(|(i, (e, r))| if i % 4 == extra { (e, r.union(&Relation::from_pairs(2, 2, [(0, 0)]).unwrap())) } else { (e, r) })
            .collect();
        let h = Game::new(3, 3, 2, 2, grown).unwrap();
        prop_assert!(game_value(&h).unwrap().value >= game_value(&g).unwrap().value);
    }

    #[test]
    fn full_rectangle_is_the_whole_game(seed in any::<u64>()) {
        let g = game_from_seed(3, 2, seed, 0.8);
        prop_assume!(g.n_edges() > 0);
        let sub = subgame_value(&g, &[0, 1, 2], &[0, 1]).unwrap();
        prop_assert_eq!(sub.value, game_value(&g).unwrap().value);
    }

    #[test]
    fn edge_distribution_is_a_distribution(seed in any::<u64>()) {
        let g = Game::uniform(&random_biregular(6, 3, 2, seed).unwrap(), Relation::full(1, 1)).unwrap();
        let mut rng = SeedStream::new(seed);
        let s: Vec<f64> = (0..6).map(|_| 0.1 + rng.unit()).collect();
        let t: Vec<f64> = (0..3).map(|_| 0.1 + rng.unit()).collect();
        let pi = edge_distribution(
            &g,
            &Distribution::from_weights(GroundSet::LeftVertices, &s).unwrap(),
            &Distribution::from_weights(GroundSet::RightVertices, &t).unwrap(),
        )
        .unwrap();
        prop_assert!((pi.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pi.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn lambda_is_invariant_under_relabeling(seed in any::<u64>(), n in 4usize..10, d in 1usize..4) {
        let h = random_biregular(n, n, d, seed).unwrap();
        let mut rng = SeedStream::new(seed ^ 1);
        let mut p: Vec<usize> = (0..n).collect();
        let mut q = p.clone();
        rng.shuffle(&mut p);
        rng.shuffle(&mut q);
        let a = spectral_lambda(&h).unwrap().lambda;
        let b = spectral_lambda(&h.relabel(&p, &q).unwrap()).unwrap().lambda;
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&a));
    }

    #[test]
    fn duplication_preserves_value(seed in any::<u64>(), t in 1usize..4) {
        let g = game_from_seed(2, 3, seed, 0.8);
        prop_assume!(g.n_edges() > 0);
        prop_assert_eq!(game_value(&g.duplicate_edges(t).unwrap()).unwrap().value, game_value(&g).unwrap().value);
    }

    #[test]
    fn squared_game_is_sandwiched(seed in any::<u64>()) {
        let g = game_from_seed(2, 2, seed, 0.8);
        prop_assume!(g.n_edges() > 0);
        let v = game_value(&g).unwrap().value;
        let v2 = game_value(&repeat_game(&g, 2).unwrap()).unwrap().value;
        prop_assert!(v * v <= v2 && v2 <= v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn biregularized_games_are_biregular(seed in any::<u64>(), eps in prop::sample::select(vec![0.2, 0.5, 1.0])) {
        let g = game_from_seed(3, 2, seed, 0.7);
        prop_assume!(g.n_edges() > 0);
        let (out, manifest) = biregularize(&g, eps, seed).unwrap();
        prop_assert!(out.graph().is_biregular());
        prop_assert_eq!(manifest.edges_after, out.n_edges());
        prop_assert!(game_value(&out).unwrap().as_f64() <= game_value(&g).unwrap().as_f64() + eps + 1e-12);
    }
}

#[test]
fn complete_graph_has_zero_lambda() {
    assert!(spectral_lambda(&BipartiteGraph::complete(5, 5)).unwrap().lambda < 1e-12);
}
