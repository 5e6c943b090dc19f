//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Result`]. Variant names are
//! stable and are surfaced verbatim by the command-line front end (see
//! [`Error::name`]).

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All error conditions raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two values (or a value and an expected carrier) live in different carriers.
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    /// Multiplication was requested on a carrier that is only an abelian group.
    #[error("multiplication on non-ring carrier {0}")]
    MulOnGroup(String),
    /// A predicate or formula constructor received the wrong number of arguments.
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    /// A structure document is malformed.
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    /// A relation or weight tuple does not respect the declared arity.
    #[error("arity error: {0}")]
    ArityError(String),
    /// A nonzero weight sits on a tuple that is neither unary, constant, nor covered by a relation tuple.
    #[error("locality violation: {0}")]
    LocalityViolation(String),
    /// An element id outside the universe was referenced.
    #[error("unknown element {0}")]
    UnknownElement(usize),
    /// Two structures (or a structure and a formula) disagree on their signature.
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    /// A formula text is not in the grammar.
    #[error("syntax error at offset {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    /// A formula is syntactically fine but ill-typed.
    #[error("type error: {0}")]
    TypeError(String),
    /// A weight application repeats a variable.
    #[error("variables of weight application {0} are not pairwise distinct")]
    DistinctnessError(String),
    /// Evaluation met a free variable without a value.
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    /// Localisation around an empty tuple of variables was requested.
    #[error("localisation needs at least one anchor variable")]
    NoAnchors,
    /// The input expression lies outside the fragment an operation supports.
    #[error("not in fragment: {0}")]
    NotInFragment(String),
    /// A formula claimed to be local failed a semantic spot check.
    #[error("formula is not {0}-local")]
    NotLocal(usize),
    /// An intermediate construction exceeded the configured size cap.
    #[error("blowup exceeded: {what} needs {needed} > cap {cap}")]
    BlowupExceeded { what: String, needed: usize, cap: usize },
    /// The unary weight `one` of type Z is not available with the expected type.
    #[error("weight symbol `one` of type Z and arity 1 is required")]
    MissingOneWeight,
    /// A numeric parameter is outside its admissible range.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// A training sequence was empty where a nonempty one is needed.
    #[error("empty training sequence")]
    EmptyTraining,
    /// Reading or writing a file failed.
    #[error("io error: {0}")]
    IoError(String),
}

impl Error {
    /// Stable name of the variant, used on the diagnostic stream of the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::CarrierMismatch(_) => "CarrierMismatch",
            Error::MulOnGroup(_) => "MulOnGroup",
            Error::ArityMismatch(_) => "ArityMismatch",
            Error::ParseError { .. } => "ParseError",
            Error::ArityError(_) => "ArityError",
            Error::LocalityViolation(_) => "LocalityViolation",
            Error::UnknownElement(_) => "UnknownElement",
            Error::SignatureMismatch(_) => "SignatureMismatch",
            Error::SyntaxError { .. } => "SyntaxError",
            Error::TypeError(_) => "TypeError",
            Error::DistinctnessError(_) => "DistinctnessError",
            Error::UnboundVariable(_) => "UnboundVariable",
            Error::NoAnchors => "NoAnchors",
            Error::NotInFragment(_) => "NotInFragment",
            Error::NotLocal(_) => "NotLocal",
            Error::BlowupExceeded { .. } => "BlowupExceeded",
            Error::MissingOneWeight => "MissingOneWeight",
            Error::OutOfRange(_) => "OutOfRange",
            Error::EmptyTraining => "EmptyTraining",
            Error::IoError(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::IoError(e.to_string())
    }
}
