use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
///
/// Every variant maps onto one machine-readable category (see [`Error::category`])
/// which the command line tool turns into a distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),

    #[error("generation failure: {0}")]
    GenerationFailure(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("assembly error in triangle {triangle}: {reason}")]
    Assembly { triangle: usize, reason: String },

    #[error("solver failure (relative residual {residual:.3e}): {reason}")]
    SolverFailure { residual: f64, reason: String },

    #[error("point ({x}, {y}) is outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("no reduced-basis database for polygons with {0} vertices")]
    NoDatabaseForN(usize),

    #[error("reduced solver failure for node {node}: {reason}")]
    ReducedSolver { node: usize, reason: String },

    #[error("parse error at {path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("database load error ({path}): {reason}")]
    Load { path: PathBuf, reason: String },

    #[error("database not found: {0}")]
    DatabaseNotFound(PathBuf),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short stable tag naming the error family.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateTriangle(_) => "degenerate-triangle",
            Error::GenerationFailure(_) => "generation-failure",
            Error::ResourceLimit(_) => "resource-limit",
            Error::Assembly { .. } => "assembly-error",
            Error::SolverFailure { .. } => "solver-failure",
            Error::OutOfDomain { .. } => "out-of-domain",
            Error::NumericFailure(_) => "numeric-failure",
            Error::NoDatabaseForN(_) => "no-database-for-n",
            Error::ReducedSolver { .. } => "reduced-solver-failure",
            Error::Parse { .. } => "parse-error",
            Error::Load { .. } => "load-error",
            Error::DatabaseNotFound(_) => "db-not-found",
            Error::Cell { source, .. } => source.category(),
            Error::Io { .. } => "io-error",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_cell(self, cell: usize) -> Self {
        match self {
            e @ Error::Cell { .. } => e,
            e => Error::Cell {
                cell,
                source: Box::new(e),
            },
        }
    }
}
