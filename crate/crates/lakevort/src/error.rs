use thiserror::Error;

/// Errors produced by lake construction, solvers, and the CLI harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth: profile({t}) = {value} is negative")]
    InvalidDepth { t: f64, value: f64 },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("field of shape {got_nx}x{got_ny} does not match grid {nx}x{ny}")]
    Shape {
        nx: usize,
        ny: usize,
        got_nx: usize,
        got_ny: usize,
    },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("empty domain: lake has no interior cells")]
    EmptyDomain,

    #[error(
        "solver did not converge after {iters} iterations \
         (relative residual {residual:.3e}, target {target:.3e})"
    )]
    Solver {
        iters: usize,
        residual: f64,
        target: f64,
    },

    #[error(
        "inconsistent circulations: |sum c_i - integral of zeta dmu| = {defect:.3e} \
         exceeds tolerance {tol:.3e}"
    )]
    Consistency { defect: f64, tol: f64 },

    #[error("point ({x}, {y}) is outside the domain")]
    DomainPoint { x: f64, y: f64 },

    #[error("green function singularity: x = y = ({x}, {y})")]
    Singularity { x: f64, y: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("experiment error: {0}")]
    Experiment(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("rotation speed {nu} is outside the admissible range |nu| < {bound}")]
    Admissibility { nu: f64, bound: f64 },

    #[error("undefined vortex part: {0}")]
    UndefinedPart(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
