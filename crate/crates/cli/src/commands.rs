use std::error::Error;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use fortification::adversarial::{find_bad_subset, skew_extractor};
use fortification::fortifier::{
    check_extractor, check_fortifier, fortifier_from_expander, measure_subsets, product_fortifier, CheckOptions,
    ExtractorCheck, FortifierCheck,
};
use fortification::fortify::{
    audit_distance, audit_exact, concatenate, AuditOptions, ConcatenatedGame, Engine, Rectangle, Verdict,
};
use fortification::regularize::biregularize_with;
use fortification::relation::Relation;
use fortification::repetition::{verify_recursion, verify_recursion_symmetrized};
use fortification::rng::SeedStream;
use fortification::spectral::{mixing_discrepancy, random_biregular, random_expander, spectral_lambda_with, LambdaMethod};
use fortification::value::{subgame_value_with, ValueOptions, DEFAULT_VALUE_BUDGET};
use fortification::{game_value_with, symmetrize, BipartiteGraph, Game};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{AuditKind, Cli, Command, Concatenation, Counterexample, Format, Gen, GraphKind, Method, Scan};
use crate::manifest::{self, Digest256, RunManifest};

pub type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violated,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violated => 2,
        }
    }
}

#[derive(Default)]
struct Inputs(Vec<Digest256>);

impl Inputs {
    fn load<T: DeserializeOwned>(&mut self, path: &Path) -> CliResult<T> {
        let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.0.push(Digest256::of(&path.display().to_string(), &bytes));
        serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()).into())
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("outputs serialize")
}

pub fn run(cli: &Cli) -> CliResult<Status> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let (value, status) = dispatch(cli, &mut inputs)?;
    let text = render(&value, cli.format);
    let target = match &cli.output {
        Some(path) => {
            std::fs::write(path, &text)?;
            path.display().to_string()
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            "stdout".to_string()
        }
    };
    if let Some(path) = &cli.manifest {
        manifest::write(
            path,
            &RunManifest {
                command: std::env::args().skip(1).collect(),
                version: env!("CARGO_PKG_VERSION").into(),
                seed: cli.seed,
                inputs: inputs.0,
                wall_time_ms: start.elapsed().as_millis(),
                outputs: vec![Digest256::of(&target, text.as_bytes())],
            },
        )?;
    }
    Ok(status)
}

/// JSON, or one `key value` line per top-level field.
fn render(value: &Value, format: Format) -> String {
    match (format, value) {
        (Format::Table, Value::Object(map)) => {
            let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
            map.iter()
                .map(|(k, v)| match v {
                    Value::String(s) => format!("{k:width$}  {s}\n"),
                    other => format!("{k:width$}  {other}\n"),
                })
                .collect()
        }
        (Format::Table, Value::String(s)) => format!("{s}\n"),
        _ => format!("{}\n", serde_json::to_string_pretty(value).expect("serializes")),
    }
}

fn value_options(cli: &Cli) -> ValueOptions {
    ValueOptions { budget: cli.budget.unwrap_or(DEFAULT_VALUE_BUDGET), parallel: true }
}

fn check_options(cli: &Cli, scan: &Scan) -> CheckOptions {
    match scan.trials {
        Some(trials) => CheckOptions { extra: scan.include.iter().map(|s| s.0.clone()).collect(), ..CheckOptions::sampled(trials, cli.seed) },
        None => CheckOptions::default(),
    }
}

fn dispatch(cli: &Cli, inputs: &mut Inputs) -> CliResult<(Value, Status)> {
    let ok = |v: Value| Ok((v, Status::Ok));
    match &cli.command {
        Command::Gen(Gen::Graph { kind, n_left, n_right, degree, target }) => {
            let (nl, nr) = (*n_left, n_right.unwrap_or(*n_left));
            let graph = match kind {
                GraphKind::Complete => BipartiteGraph::complete(nl, nr),
                GraphKind::Matching => BipartiteGraph::matching(nl),
                GraphKind::Cycle => {
                    if nl < 2 {
                        return Err("a cycle needs n_left >= 2".into());
                    }
                    BipartiteGraph::cycle(nl)
                }
                GraphKind::Biregular => random_biregular(nl, nr, *degree, cli.seed)?,
                GraphKind::LeftRegular => BipartiteGraph::random_left_regular(nl, nr, *degree, cli.seed)?,
                GraphKind::Expander => random_expander(nl, nr, *degree, *target, cli.seed)?.0,
            };
            ok(to_json(&graph))
        }
        Command::Gen(Gen::Game { graph, sigma_x, sigma_y, density, projection }) => {
            let graph: BipartiteGraph = inputs.load(graph)?;
            let mut rng = SeedStream::derived(cli.seed, "gen-game", 0);
            let (nl, nr) = (graph.n_left(), graph.n_right());
            let game = if *projection {
                let edges = graph
                    .edges()
                    .iter()
                    .map(|&e| (e, (0..*sigma_x).map(|_| rng.below(*sigma_y as u64) as usize).collect()))
                    .collect();
                Game::projection(nl, nr, *sigma_x, *sigma_y, edges)?
            } else {
                let edges = graph
                    .edges()
                    .iter()
                    .map(|&e| (e, Relation::from_fn(*sigma_x, *sigma_y, |_, _| rng.unit() < *density)))
                    .collect();
                Game::new(nl, nr, *sigma_x, *sigma_y, edges)?
            };
            ok(to_json(&game))
        }
        Command::Lambda { graph, method } => {
            let graph: BipartiteGraph = inputs.load(graph)?;
            let method = match method {
                Method::ExactSvd => LambdaMethod::ExactSvd,
                Method::PowerIteration => LambdaMethod::PowerIteration,
            };
            ok(to_json(&spectral_lambda_with(&graph, method)?))
        }
        Command::Value { game, s, t } => {
            let game: Game = inputs.load(game)?;
            let opts = value_options(cli);
            let v = match (s, t) {
                (Some(s), Some(t)) => subgame_value_with(&game, &s.0, &t.0, &opts)?,
                _ => game_value_with(&game, &opts)?,
            };
            ok(json!({
                "value": v.value.to_string(),
                "value_f64": v.as_f64(),
                "satisfied": v.satisfied,
                "total": v.total,
                "labeling": v.labeling,
            }))
        }
        Command::Symmetrize { game } => {
            let game: Game = inputs.load(game)?;
            ok(to_json(&symmetrize(&game)?))
        }
        Command::Fortify(g) => {
            let game: Game = inputs.load(&g.game)?;
            let h1: BipartiteGraph = inputs.load(&g.h1)?;
            let h2: BipartiteGraph = match &g.h2 {
                Some(p) => inputs.load(p)?,
                None => h1.clone(),
            };
            ok(to_json(&concatenate(&h1, &game, &h2)?))
        }
        Command::Audit { source, mode, delta, epsilon, scan, direct } => {
            let cg = load_concatenation(source, inputs)?;
            let mut opts = match scan.trials {
                Some(trials) => AuditOptions::sampled(trials, cli.seed),
                None => AuditOptions::default(),
            };
            opts.extra = scan.include.iter().map(|s| Rectangle { s: s.0.clone(), t: s.0.clone() }).collect();
            opts.value.budget = cli.budget.unwrap_or(opts.value.budget);
            if *direct {
                opts.engine = Engine::Direct;
            }
            let report = match mode {
                AuditKind::Exact => audit_exact(&cg, *delta, *epsilon, &opts)?,
                AuditKind::Distance => audit_distance(&cg, *delta, *epsilon, &opts)?,
            };
            let status = if report.verdict == Verdict::Violated { Status::Violated } else { Status::Ok };
            Ok((to_json(&report), status))
        }
        Command::Certify { graph, delta, eps1, eps2, spectral, scan } => {
            let graph: BipartiteGraph = inputs.load(graph)?;
            if *spectral {
                let cert = spectral_lambda_with(&graph, LambdaMethod::ExactSvd)?;
                return ok(to_json(&fortifier_from_expander(&cert, *delta)?));
            }
            let opts = check_options(cli, scan);
            match (eps1, eps2) {
                (_, Some(eps2)) => {
                    // ℓ₁ distances never exceed 2, so a missing ℓ₁ bound is vacuous.
                    let check = check_fortifier(&graph, *delta, eps1.unwrap_or(2.0), *eps2, &opts)?;
                    let status = matches!(check, FortifierCheck::Violated(_)).then_some(Status::Violated).unwrap_or(Status::Ok);
                    Ok((to_json(&check), status))
                }
                (Some(eps), None) => {
                    let check = check_extractor(&graph, *delta, *eps, &opts)?;
                    let status = matches!(check, ExtractorCheck::Violated(_)).then_some(Status::Violated).unwrap_or(Status::Ok);
                    Ok((to_json(&check), status))
                }
                (None, None) => ok(to_json(&measure_subsets(&graph, *delta, &opts)?)),
            }
        }
        Command::Product { extractor, expander, delta, eps } => {
            let h1: BipartiteGraph = inputs.load(extractor)?;
            let h2: BipartiteGraph = inputs.load(expander)?;
            let opts = CheckOptions::default();
            let eps = match eps {
                Some(e) => *e,
                None => measure_subsets(&h1, *delta, &opts)?.worst_l1.value,
            };
            let ext = match check_extractor(&h1, *delta, eps, &opts)? {
                ExtractorCheck::Certified(c) => c,
                violated => return Ok((to_json(&violated), Status::Violated)),
            };
            let exp = spectral_lambda_with(&h2, LambdaMethod::ExactSvd)?;
            let (graph, certificate) = product_fortifier(&h1, &ext, &h2, &exp)?;
            ok(json!({ "graph": graph, "certificate": certificate }))
        }
        Command::Counterexample(Counterexample::Skew { graph, subset, eps, x1 }) => {
            let h: BipartiteGraph = inputs.load(graph)?;
            let (graph, report) = skew_extractor(&h, &subset.0, *eps, *x1)?;
            ok(json!({ "graph": graph, "report": report }))
        }
        Command::Counterexample(Counterexample::Lowdeg { graph, delta, eps, c }) => {
            let h: BipartiteGraph = inputs.load(graph)?;
            let d = h.left_degree().ok_or(fortification::Error::NotLeftRegular)?;
            let c = c.unwrap_or(1.0 / (d as f64 * eps * delta));
            let bad = find_bad_subset(&h, *delta, *eps, c)?;
            let exceeds = bad.achieved > *eps;
            ok(json!({ "c": c, "exceeds_threshold": exceeds, "bad_subset": bad }))
        }
        Command::Repeat { game, k, delta, epsilon, symmetrized } => {
            let game: Game = inputs.load(game)?;
            let mut opts = AuditOptions::default();
            opts.value.budget = cli.budget.unwrap_or(opts.value.budget);
            let report = if *symmetrized {
                verify_recursion_symmetrized(&game, *k, *delta, *epsilon, &opts)?
            } else {
                verify_recursion(&game, *k, *delta, *epsilon, &opts)?
            };
            let status = if report.ok() { Status::Ok } else { Status::Violated };
            Ok((to_json(&report), status))
        }
        Command::Regularize { game, eps, duplicate } => {
            let game: Game = inputs.load(game)?;
            let (out, manifest) = biregularize_with(&game, *eps, cli.seed, *duplicate)?;
            ok(json!({ "game": out, "manifest": manifest }))
        }
        Command::Mixing { graph, a, b } => {
            let h: BipartiteGraph = inputs.load(graph)?;
            let discrepancy = mixing_discrepancy(&h, &a.0, &b.0)?;
            let lambda = spectral_lambda_with(&h, LambdaMethod::ExactSvd)?.lambda;
            ok(json!({ "discrepancy": discrepancy, "lambda": lambda, "within_lambda": discrepancy <= lambda + 1e-9 }))
        }
    }
}

fn load_concatenation(source: &Concatenation, inputs: &mut Inputs) -> CliResult<ConcatenatedGame> {
    if let Some(path) = &source.concat {
        return inputs.load(path);
    }
    let (Some(game), Some(h1)) = (&source.game, &source.h1) else {
        return Err("pass --concat, or --game with --h1".into());
    };
    let game: Game = inputs.load(game)?;
    let h1: BipartiteGraph = inputs.load(h1)?;
    let h2: BipartiteGraph = match &source.h2 {
        Some(p) => inputs.load(p)?,
        None => h1.clone(),
    };
    Ok(concatenate(&h1, &game, &h2)?)
}
