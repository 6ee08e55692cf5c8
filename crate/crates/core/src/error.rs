use thiserror::Error;

/// Errors raised by msp-core operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dictionary must contain at least one word")]
    EmptyDictionary,
    #[error("duplicate word {0:?} in dictionary")]
    DuplicateWord(String),
    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),
    #[error("word {0:?} is not in the dictionary")]
    UnknownWord(String),
    #[error("word id {id} out of range for a dictionary of {size} words")]
    WordIdOutOfRange { id: u32, size: usize },
    #[error("empty sentence where a non-empty one is required ({0})")]
    EmptySentence(&'static str),
    #[error("substitute pair members must differ")]
    DegeneratePair,
    #[error("domain would contain {requested} sentences, above the budget of {budget}")]
    DomainBudget { requested: u128, budget: usize },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid sub-probability: {0}")]
    InvalidSubProbability(String),
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),
    #[error("sentence {0:?} lies outside the model support")]
    OutsideSupport(String),
    #[error("substitute property fails: {0}")]
    Verification(String),
    #[error("inconsistent exponents: residual {residual:e} at (a, y, y', b) = {quadruple:?}")]
    InconsistentExponents { residual: f64, quadruple: [u32; 4] },
    #[error("missing exponent for pair {0}")]
    MissingExponent(String),
    #[error("{what} did not converge after {iterations} iterations (last change {last:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: f64,
    },
    #[error("rejection sampling exhausted {tries} tries (acceptance rate estimate {rate:e})")]
    SamplingBudget { tries: usize, rate: f64 },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
