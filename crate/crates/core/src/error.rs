use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("basis capacity exceeded: {requested} amplitudes (limit {limit})")]
    Capacity { requested: usize, limit: usize },

    #[error("mode {0:?} is not present in a {1}-mode basis")]
    UnknownMode(crate::fock::Mode, usize),

    #[error("expected {expected} single-mode factors, got {got}")]
    ModeCountMismatch { expected: usize, got: usize },

    #[error("truncation error: norm {norm} below {required} at cutoff {cutoff}")]
    Truncation {
        norm: f64,
        required: f64,
        cutoff: usize,
    },

    #[error("invalid pulse schedule: {0}")]
    Schedule(String),

    #[error("time {t} outside schedule [{t_start}, {t_end}]")]
    OutsideSchedule { t: f64, t_start: f64, t_end: f64 },

    #[error(
        "integration unstable at t = {t} (seed {seed}): pre-normalization norm {norm} \
         outside [0.5, 1.5]; reduce dt"
    )]
    StepSize { t: f64, seed: u64, norm: f64 },

    #[error(
        "step guard violated: dt * (max coupling + gamma (2 nbar + 1) cutoff) = {product} \
         exceeds {limit}; reduce dt"
    )]
    StepGuard { product: f64, limit: f64 },

    #[error("no stable steady-state root found among {} candidates", roots.len())]
    Bistability { roots: Vec<(f64, f64, f64)> },

    #[error("steady-state iteration did not converge: {0}")]
    IterationLimit(String),

    #[error("density matrix of dimension {0} exceeds the oracle cap of {1}")]
    DimensionCap(usize, usize),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
