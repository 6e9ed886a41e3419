use thiserror::Error;

/// Errors produced by model construction, analysis and simulation.
#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate or inconsistent channel labels: {0}")]
    BadLabels(String),

    #[error("algebraic loop: feedthrough coupling is singular")]
    AlgebraicLoop,

    #[error("H-infinity norm undefined: system is not asymptotically stable (spectral abscissa {abscissa:.3e})")]
    UnstableSystem { abscissa: f64 },

    #[error("operating point infeasible: Newton residual {residual:.3e} after {iterations} iterations")]
    InfeasibleOperatingPoint { residual: f64, iterations: usize },

    #[error("interior subnetwork is floating: grounded Laplacian interior block is singular")]
    SingularInterior,

    #[error("matrix is not symmetric within tolerance: max asymmetry {0:.3e}")]
    NotSymmetric(f64),

    #[error("no stabilizing gain found: best spectral abscissa {best_abscissa:.6e}")]
    NoStabilizingGain { best_abscissa: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("unknown controller template kind: {0}")]
    UnknownTemplate(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("simulation step size too large: dt = {dt:.3e} s exceeds 1/(20 f_res) = {limit:.3e} s")]
    StepSizeTooLarge { dt: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
