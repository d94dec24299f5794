use thiserror::Error;

/// Every failure the library reports. Numerical checks that merely measure a
/// residual never produce an error; only violated preconditions do.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least 2 phases, got {0}")]
    TooFewPhases(usize),

    #[error("at most {max} phases are supported, got {got}")]
    TooManyPhases { got: usize, max: usize },

    #[error("{phases} phases but {weights} weights")]
    LengthMismatch { phases: usize, weights: usize },

    #[error("phases must be strictly increasing (index {index})")]
    Ordering { index: usize },

    #[error("gap {gap:e} after phase {index} is below the degeneracy floor {floor:e}")]
    DegenerateGap { index: usize, gap: f64, floor: f64 },

    #[error("weight {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("order {k} outside {min}..={max}")]
    OrderOutOfRange { k: usize, min: usize, max: usize },

    #[error("time vector has {len} entries, cap is {cap}")]
    TooManyTimes { len: usize, cap: usize },

    #[error("flow index {index} outside 1..={max}")]
    FlowIndexOutOfRange { index: usize, max: usize },

    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("leading minor {index} of the flow matrix is not positive; LU factorization broke down")]
    DegenerateFlow { index: usize },

    #[error("Jacobi spectrum deviates from the phases by {deviation:e}")]
    SpectrumMismatch { deviation: f64 },

    #[error("wavefunction pole at zeta = {zeta}")]
    Pole { zeta: f64 },

    #[error("essential singularity at the point at infinity of the plus sheet")]
    EssentialSingularity,

    #[error("divisor is malformed: {0}")]
    MalformedDivisor(String),

    #[error("divisor is not realizable: weight {index} came out as {value}")]
    UnrealizableDivisor { index: usize, value: f64 },

    #[error("oval occupancy {counts:?} after collision resolution")]
    Occupancy { counts: Vec<usize> },

    #[error("every anchor phase collides with a divisor point")]
    AnchorUnavailable,

    #[error("dual divisor routes disagree by {deviation:e}")]
    DualityViolation { deviation: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_order(k: usize, min: usize, max: usize) -> Result<()> {
    if k < min || k > max {
        Err(Error::OrderOutOfRange { k, min, max })
    } else {
        Ok(())
    }
}
