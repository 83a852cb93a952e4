use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid rectangle [{x0}, {x1}] x [{y0}, {y1}]")]
    InvalidRect { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("grid needs at least one cell per direction, got nx={nx}, ny={ny}")]
    ZeroSubdivisions { nx: usize, ny: usize },
    #[error("fluid and solid meshes must share the x partition (fluid nx={fluid_nx}, solid nx={solid_nx})")]
    MismatchedInterface { fluid_nx: usize, solid_nx: usize },
    #[error("interface nodes do not coincide: fluid {fluid:?}, solid {solid:?}")]
    NonMatchingNodes { fluid: [f64; 2], solid: [f64; 2] },
    #[error("({a}, {b}) is not a boundary edge")]
    NotBoundaryEdge { a: usize, b: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfRange { row: usize, col: usize, nrows: usize, ncols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("relative residual {achieved:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { achieved: f64, tol: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("triangle {triangle} has non-positive area {area:e}")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("interface has no edges")]
    EmptyInterface,
    #[error("invalid physical parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    Type { key: String, value: String, expected: &'static str },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

/// Failure inside a time loop.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("time level {level}: {source}")]
    Step { level: usize, source: SparseError },
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("{0}")]
    Diagnostics(String),
}

impl SolverError {
    pub fn at_level(level: usize) -> impl FnOnce(SparseError) -> SolverError {
        move |source| SolverError::Step { level, source }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl BenchError {
    /// Process exit status: 1 for invalid input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Solver(_) | BenchError::Output { .. } => 2,
        }
    }
}
