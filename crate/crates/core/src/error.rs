use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x = {x} lies outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("invalid bathymetry: {0}")]
    InvalidBathymetry(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("array length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("near-dry node {node} at x = {x}: depth {depth:e} below h_min {h_min:e} (t = {t})")]
    NearDry {
        t: f64,
        node: usize,
        x: f64,
        depth: f64,
        h_min: f64,
    },

    #[error("non-finite value at node {node} (x = {x}, t = {t})")]
    NumericBlowUp { t: f64, node: usize, x: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid Riemann invariants at node {node}: P = {p} must exceed Q = {q}")]
    InvalidInvariants { node: usize, p: f64, q: f64 },

    #[error("invalid degenerate spec: {0}")]
    InvalidDegenerateSpec(String),

    #[error("states are on different grids or have different sizes")]
    GridMismatch,

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Strips any step annotation and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_near_dry(&self) -> bool {
        matches!(self.root(), Error::NearDry { .. })
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self.root(), Error::NumericBlowUp { .. })
    }
}
