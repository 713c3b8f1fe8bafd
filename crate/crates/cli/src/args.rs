use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exact values, fortifiers and robustness audits for two-prover games.
///
/// Exit status: 0 on success, 2 when an audit or check is violated, 1 on errors.
#[derive(Debug, Parser)]
#[command(name = "fortification", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads for enumeration; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Root seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Write a run manifest (inputs, outputs, digests, timing) here.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Labeling budget for exact values.
    #[arg(long, global = true, env = "FORTIFY_BUDGET")]
    pub budget: Option<u128>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph or a random game.
    #[command(subcommand)]
    Gen(Gen),
    /// Spectral expansion λ of a bi-regular graph.
    Lambda {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::ExactSvd)]
        method: Method,
    },
    /// Exact value of a game, or of its sub-game on a rectangle.
    Value {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_parser = parse_set, requires = "t")]
        s: Option<VertexSet>,
        #[arg(long, value_parser = parse_set, requires = "s")]
        t: Option<VertexSet>,
    },
    /// Symmetrized game of a projection game.
    Symmetrize {
        #[arg(long)]
        game: PathBuf,
    },
    /// Concatenate gadgets onto a game.
    Fortify(Gadgets),
    /// Robustness audit of a concatenated game.
    Audit {
        #[command(flatten)]
        source: Concatenation,
        #[arg(long, value_enum, default_value_t = AuditKind::Exact)]
        mode: AuditKind,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        #[command(flatten)]
        scan: Scan,
        /// Compute sub-game values on the materialised derived game.
        #[arg(long)]
        direct: bool,
    },
    /// Check a graph as a fortifier or an extractor.
    Certify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        delta: f64,
        /// ℓ₁ bound; measured and reported when omitted.
        #[arg(long)]
        eps1: Option<f64>,
        /// Scaled ℓ₂ bound; the check is an extractor check when omitted.
        #[arg(long)]
        eps2: Option<f64>,
        /// Certify from the spectral gap instead of enumerating subsets.
        #[arg(long, conflicts_with_all = ["eps1", "eps2"])]
        spectral: bool,
        #[command(flatten)]
        scan: Scan,
    },
    /// Product of a bi-regular extractor and a bi-regular expander.
    Product {
        #[arg(long)]
        extractor: PathBuf,
        #[arg(long)]
        expander: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Extractor parameter; measured exhaustively when omitted.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Constructions that defeat robustness.
    #[command(subcommand)]
    Counterexample(Counterexample),
    /// Parallel repetition bounds for a small game.
    Repeat {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        epsilon: f64,
        /// Check the symmetrized projection game instead.
        #[arg(long)]
        symmetrized: bool,
    },
    /// Make a game bi-regular with value inflation at most ε.
    Regularize {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1)]
        duplicate: usize,
    },
    /// Expander-mixing discrepancy of a set pair.
    Mixing {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_set)]
        a: VertexSet,
        #[arg(long, value_parser = parse_set)]
        b: VertexSet,
    },
}

#[derive(Debug, Subcommand)]
pub enum Gen {
    /// A bipartite graph.
    Graph {
        #[arg(long, value_enum)]
        kind: GraphKind,
        #[arg(long)]
        n_left: usize,
        /// Defaults to `n_left`.
        #[arg(long)]
        n_right: Option<usize>,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// λ target for `expander`.
        #[arg(long, default_value_t = 1.0)]
        target: f64,
    },
    /// A game with random relations on a given graph.
    Game {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 2)]
        sigma_x: usize,
        #[arg(long, default_value_t = 2)]
        sigma_y: usize,
        /// Probability that a label pair is accepted.
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        /// Draw a projection game instead.
        #[arg(long)]
        projection: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    Complete,
    Matching,
    Cycle,
    Biregular,
    LeftRegular,
    Expander,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ExactSvd,
    PowerIteration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AuditKind {
    Exact,
    Distance,
}

#[derive(Debug, Args)]
pub struct Gadgets {
    #[arg(long)]
    pub game: PathBuf,
    /// Gadget on the left side, `(W, X)`.
    #[arg(long)]
    pub h1: PathBuf,
    /// Gadget on the right side, `(Z, Y)`; defaults to `h1`.
    #[arg(long)]
    pub h2: Option<PathBuf>,
}

/// Either a concatenated game file or the pieces to build one.
#[derive(Debug, Args)]
pub struct Concatenation {
    #[arg(long, conflicts_with_all = ["game", "h1", "h2"], required_unless_present = "game")]
    pub concat: Option<PathBuf>,
    #[arg(long, requires = "h1")]
    pub game: Option<PathBuf>,
    #[arg(long)]
    pub h1: Option<PathBuf>,
    #[arg(long)]
    pub h2: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Scan {
    /// Sample this many subsets (or rectangles) instead of enumerating.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Subsets always examined when sampling.
    #[arg(long = "include", value_parser = parse_set)]
    pub include: Vec<VertexSet>,
}

#[derive(Debug, Subcommand)]
pub enum Counterexample {
    /// Rewire a bi-regular graph so `S` concentrates mass on one vertex.
    Skew {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_parser = parse_set)]
        subset: VertexSet,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        x1: usize,
    },
    /// A dense subset far from uniform for a low-degree graph.
    Lowdeg {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eps: f64,
        /// Constant in the degree bound `D ≈ 1/(cεδ)`; inferred from the degree when omitted.
        #[arg(long)]
        c: Option<f64>,
    },
}

/// A vertex set given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet(pub Vec<usize>);

/// Comma-separated vertices with optional half-open ranges: `0,3,5..9`.
pub fn parse_set(s: &str) -> Result<VertexSet, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.parse().map_err(|e| format!("{part}: {e}"))?, b.parse().map_err(|e| format!("{part}: {e}"))?);
                out.extend(a..b);
            }
            None => out.push(part.parse().map_err(|e| format!("{part}: {e}"))?),
        }
    }
    Ok(VertexSet(out))
}
