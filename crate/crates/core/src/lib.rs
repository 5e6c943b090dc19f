//! First-order logic with weight aggregation over finite weighted structures.
//!
//! The crate provides exact carrier arithmetic, weighted structures with a local-access
//! oracle, a parser, static analysis and reference evaluator for the logic, locality
//! transformations (Gaifman-style normal forms and Feferman–Vaught decompositions), the
//! normal form for the aggregation fragment used by local-access learners, and the
//! learners themselves.

pub mod algebra;
pub mod clkernel;
pub mod error;
pub mod gen;
pub mod learning;
pub mod locality;
pub mod logic;
pub mod structure;

pub use algebra::{ArithOp, Carrier, CarrierValue, PredKind, PredicateDef, PREDICATE_LIBRARY_VERSION};
pub use error::{Error, Result};
pub use logic::{
    analyze, evaluate, evaluate_all, parse_expression, parse_formula, parse_term, Expression, ExprInfo, Formula,
    Fragment, Term, Value, Var,
};
pub use structure::{LocalAccessOracle, QueryCounts, Signature, StructureBuilder, WeightedStructure};
pub use learning::{exact_learn, pac_learn, sample_size, Hypothesis, HypothesisClass, TrainingSequence};
