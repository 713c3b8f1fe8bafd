//! Two-prover games, fortifier gadgets, and brute-force robustness audits.

pub mod adversarial;
pub mod distribution;
pub mod error;
pub mod fortifier;
pub mod fortify;
pub mod game;
pub mod graph;
pub mod regularize;
pub mod relation;
pub mod repetition;
pub mod rng;
pub mod spectral;
pub mod subsets;
pub mod value;

pub use error::{Error, Result};
pub use game::{symmetrize, Game, Labeling};
pub use graph::BipartiteGraph;
pub use relation::Relation;
pub use value::{game_value, game_value_with, subgame_value, GameValue, ValueOptions};
pub use distribution::{edge_distribution, Distribution, GroundSet};
pub use spectral::{random_biregular, random_expander, spectral_lambda, ExpanderCertificate, LambdaMethod};
