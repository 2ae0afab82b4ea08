use thiserror::Error;

/// Everything that can go wrong while planning, simulating or certifying a transfer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("hypercube dimension {0} out of range (1..={max})", max = crate::hypergraph::MAX_DIMENSION)]
    DimensionOutOfRange(usize),

    #[error("label length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid vertex label {0:?}")]
    InvalidLabel(String),

    #[error("endpoints coincide; a transfer needs two distinct vertices")]
    DegeneratePair,

    #[error("bit position {position} out of range for dimension {dimension}")]
    PositionOutOfRange { position: usize, dimension: usize },

    #[error("pattern has {pattern} bits but {positions} positions were given")]
    PatternLength { pattern: usize, positions: usize },

    #[error("vertex index {index} out of range for {size} vertices")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("subcube spec does not match graph: {0}")]
    SpecMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("time grid is empty")]
    EmptyGrid,

    #[error("time grid must be nondecreasing and finite")]
    InvalidGrid,

    #[error("state space too large: {0}")]
    SizeOverflow(String),

    #[error("hamiltonian couples the single-excitation sector to other sectors (max leak {0:e})")]
    SubspaceLeak(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("qubit and coupler are resonant (detuning {0} GHz)")]
    Resonant(f64),

    #[error("outside the dispersive regime: g/|Delta| = {ratio:.4} exceeds {limit}")]
    NonDispersive { ratio: f64, limit: f64 },

    #[error("qubit frequencies differ ({0} vs {1} GHz); use the full coupling formula")]
    UnequalFrequencies(f64, f64),

    #[error("no cutoff frequency: {0}")]
    NoCutoff(String),

    #[error("deviation for ({0}, {1}) given twice with different values")]
    AsymmetricDeviation(usize, usize),

    #[error("numerical contract violated: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of a numerical guarantee rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::SubspaceLeak(_) | Error::NotSymmetric(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
