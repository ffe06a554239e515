use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped by the subsystem that raises them; the CLI maps them
/// onto process exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    // input validation
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("duplicate points {0} and {1} (zero off-diagonal distance)")]
    DuplicatePoints(usize, usize),
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    // kernel solves
    #[error("similarity matrix is not numerically positive definite (pivot {pivot}, condition estimate {condition:.3e})")]
    NotPositiveDefinite { pivot: usize, condition: f64 },
    #[error("similarity matrix too ill-conditioned (condition estimate {condition:.3e} > {limit:.1e})")]
    IllConditioned { condition: f64, limit: f64 },
    #[error("weight residual {residual:.3e} exceeds {limit:.1e}")]
    ResidualTooLarge { residual: f64, limit: f64 },
    #[error("{failed} of {total} scales failed; first: {first}")]
    CurveIncomplete {
        failed: usize,
        total: usize,
        first: String,
    },

    // geometry
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("intrinsic volumes need a convex domain, got {0}")]
    NonConvexSpec(String),

    // asymptotics
    #[error("lambda_n is not set; c3 cannot be predicted")]
    MissingLambda,
    #[error("design matrix is numerically rank deficient (singular value ratio {0:.3e})")]
    RankDeficient(f64),
    #[error("calibration unstable: {0}")]
    CalibrationUnstable(String),

    // symbol engine
    #[error("requested cutoff {requested} lies below what the inputs determine ({available})")]
    CutoffTooLow { requested: i32, available: i32 },
    #[error("principal symbol is not invertible: {0}")]
    NotElliptic(String),
    #[error("scalar `{0}` has no binding")]
    UnboundScalar(String),
    #[error("jet too shallow: `{scalar}` needs order {needed}, jet stores order {stored}")]
    JetTooShallow {
        scalar: String,
        needed: u32,
        stored: u32,
    },
    #[error("unsupported symbol: {0}")]
    UnsupportedSymbol(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::IllConditioned { .. }
            | Error::ResidualTooLarge { .. }
            | Error::CurveIncomplete { .. }
            | Error::RankDeficient(_)
            | Error::CalibrationUnstable(_) => 3,
            Error::DegenerateMesh(_) => 4,
            Error::MissingLambda => 5,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
