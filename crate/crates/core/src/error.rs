use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not a projection (idempotency defect {defect:.3e})")]
    NotProjection { defect: f64 },

    #[error("not a density state: {reason}")]
    NotDensityState { reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} outside supported range 1..={max}")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("generators {first} and {second} do not commute (commutator norm {norm:.3e})")]
    NonCommuting {
        first: usize,
        second: usize,
        norm: f64,
    },

    #[error("generators only produce the trivial context C·1")]
    TrivialContext,

    #[error("context poset exceeds the cap of {0} contexts")]
    PosetTooLarge(usize),

    #[error("operator does not lie in context {context} (membership defect {defect:.3e})")]
    NotInContext { context: String, defect: f64 },

    #[error("clopen subset belongs to context {found}, expected {expected}")]
    ContextMismatch { expected: String, found: String },

    #[error("context {to} is not a subcontext of {from}")]
    NotSubcontext { from: String, to: String },

    #[error("restriction from {from} to {to} has {candidates} candidate targets")]
    NoUniqueTarget {
        from: String,
        to: String,
        candidates: usize,
    },

    #[error("spectral index {index} out of range for context with {len} points")]
    SpectralIndexOutOfRange { index: usize, len: usize },

    #[error("context order is inconsistent: {0}")]
    InconsistentOrder(String),

    #[error("unknown context id {0}")]
    UnknownContext(String),

    #[error("subobject belongs to poset {found}, expected {expected}")]
    PosetMismatch { expected: String, found: String },

    #[error("component map violates the antitone condition on arrow {lower} <= {upper}")]
    NotAntitone { lower: String, upper: String },

    #[error("measure table has no entry for subobject {0}")]
    NotTabulated(String),

    #[error("value table for subobject {key} is not an order-reversing [0,1] function: {reason}")]
    NotOrderReversing { key: String, reason: String },

    #[error("pseudo-state formulas disagree at context {context}")]
    PseudoStateMismatch { context: String },

    #[error("convex coefficient {0} outside [0, 1]")]
    BadCoefficient(f64),

    #[error("family members {first} and {second} overlap at context {context}")]
    NotLocallyDisjoint {
        context: String,
        first: usize,
        second: usize,
    },

    #[error("no context of the poset contains the projection")]
    NoContainingContext,

    #[error("measure assigns inconsistent values to one projection (spread {spread:.3e})")]
    WellDefinednessViolation { spread: f64 },

    #[error("no (subobject, context) pair in the pool corresponds to the projection")]
    EmptyWitnessSet,

    #[error("projection pool has rank {rank}, tomographic completeness needs {needed}")]
    PoolRankDeficient { rank: usize, needed: usize },

    #[error("measure is not induced by any state (residual {residual:.3e} after PSD projection)")]
    InfeasibleMeasure { residual: f64 },

    #[error("vector is not normalised (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("global section search exceeded its budget of {0} nodes")]
    SearchBudgetExceeded(u64),

    #[error("subobject enumeration exceeds the cap of {0} families")]
    EnumerationTooLarge(usize),

    #[error("scenario error: {0}")]
    Scenario(String),
}
