use fortification::fortify::{audit_distance, audit_exact, concatenate_symmetric, AuditOptions, Engine, Verdict};
use fortification::spectral::random_expander;
use fortification::{game_value, BipartiteGraph, Game, Relation};

fn half_game(n: usize) -> Game {
    let edges = (0..n)
        .map(|i| ((i, i), if i % 2 == 0 { Relation::equality(2) } else { Relation::empty(2, 2) }))
        .collect();
    Game::new(n, n, 2, 2, edges).unwrap()
}

#[test]
fn expander_concatenation_audits_robust() {
    let g = half_game(4);
    let (h, cert) = random_expander(8, 4, 3, 0.6, 2).unwrap();
    let cg = concatenate_symmetric(&h, &g).unwrap();
    let eps = cert.lambda / 0.5f64.sqrt();
    let exact = audit_exact(&cg, 0.5, 4.0 * eps, &AuditOptions::default()).unwrap();
    assert_eq!(exact.verdict, Verdict::Robust);
    assert!((exact.val_base - 0.5).abs() < 1e-12);
    let distance = audit_distance(&cg, 0.5, 4.0 * eps, &AuditOptions::default()).unwrap();
    assert!(distance.worst_l1_distance.unwrap() <= 4.0 * eps + 1e-9);
}

#[test]
fn engines_agree_on_small_instances() {
    let g = half_game(2);
    let h = BipartiteGraph::cycle(2);
    let cg = concatenate_symmetric(&h, &g).unwrap();
    let reduced = audit_exact(&cg, 0.5, 0.1, &AuditOptions::default()).unwrap();
    let direct = audit_exact(&cg, 0.5, 0.1, &AuditOptions { engine: Engine::Direct, ..AuditOptions::default() }).unwrap();
    assert_eq!(reduced.worst_value_exact, direct.worst_value_exact);
    assert_eq!(reduced.rectangles_checked, direct.rectangles_checked);
    assert_eq!(game_value(&cg.derived_game().unwrap()).unwrap().value, game_value(&g).unwrap().value);
}

#[test]
fn reports_round_trip_through_json() {
    let g = half_game(2);
    let cg = concatenate_symmetric(&BipartiteGraph::complete(2, 2), &g).unwrap();
    let report = audit_exact(&cg, 0.5, 0.1, &AuditOptions::default()).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    assert_eq!(serde_json::from_str::<fortification::fortify::AuditReport>(&json).unwrap(), report);
    let game_json = serde_json::to_string(&g).unwrap();
    assert_eq!(serde_json::from_str::<Game>(&game_json).unwrap(), g);
}
