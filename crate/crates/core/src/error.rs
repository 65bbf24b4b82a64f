use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadric has no base point on its regular locus; the chord backend needs one")]
    NoBasePoint,

    #[error("quadric zero set is not known to be bounded; supply an enumeration region")]
    UnboundedQuadric,

    #[error("target is not on the quadric: |P(x)| may be as large as {residual:e}")]
    TargetOffSurface { residual: f64 },

    #[error("no rational points with denominator <= {q_max}")]
    EmptyEnumeration { q_max: u64 },

    #[error("too few approximation records: need {needed}, found {found}")]
    TooFewRecords { needed: usize, found: usize },

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("measure bracket too loose: [{lower:e}, {upper:e}]; raise the recursion depth")]
    LooseBracket { lower: f64, upper: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("no admissible next point found; achieved depth {achieved}")]
    SearchExhausted { achieved: usize },

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Budget and diagnostic failures map to exit status 2, everything else to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded(_)
            | Error::SearchExhausted { .. }
            | Error::Diagnostic(_)
            | Error::LooseBracket { .. } => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidInput(_) => "invalid_input",
            Error::NoBasePoint => "no_base_point",
            Error::UnboundedQuadric => "unbounded_quadric",
            Error::TargetOffSurface { .. } => "target_off_surface",
            Error::EmptyEnumeration { .. } => "empty_enumeration",
            Error::TooFewRecords { .. } => "too_few_records",
            Error::Overflow => "overflow",
            Error::LooseBracket { .. } => "loose_bracket",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::SearchExhausted { .. } => "search_exhausted",
            Error::Diagnostic(_) => "diagnostic",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
