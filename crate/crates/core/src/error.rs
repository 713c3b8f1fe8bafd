use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("enumeration needs {needed} steps, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("no edge survives the restriction to the rectangle")]
    EmptySubgame,

    #[error("game is not a projection game")]
    NotProjection,

    #[error("distributions touch no edge of the game")]
    ZeroDenominator,

    #[error("graph is not left-regular")]
    NotLeftRegular,

    #[error("graph is not bi-regular")]
    NotBiregular,

    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("n_left * left_degree = {total} is not divisible by n_right = {n_right}")]
    Divisibility { total: usize, n_right: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vertex set is empty")]
    EmptySet,

    #[error("vertex {0} has no neighbours")]
    IsolatedVertex(usize),

    #[error("infeasible parameters: {0}")]
    ParameterInfeasible(String),

    #[error("no gadget with lambda <= {target} found for cloud of size {cloud} at degree {degree}")]
    GadgetUnavailable { cloud: usize, degree: usize, target: f64 },

    #[error("no graph with lambda <= {target} after {attempts} attempts (best {best})")]
    TargetLambdaUnmet { target: f64, attempts: usize, best: f64 },

    #[error("alphabet of size {base}^{exponent} is too large to materialise")]
    AlphabetTooLarge { base: usize, exponent: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
