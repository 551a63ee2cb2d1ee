//! Exact and numerical tools for truncated moment problems whose moment
//! matrix is indefinite: flat extensions, shift matrices and signed or
//! complex atomic measures.

pub mod error;
pub mod extension;
pub mod hankel;
pub mod matrix;
pub mod measure;
pub mod multiindex;
pub mod poly;
pub mod problem;
pub mod rational;
pub mod relation;
pub mod solve;
pub mod spectral;

pub use error::{Error, Result};
pub use extension::{
    extend_chain, extend_sequence, ChainOptions, ExtensionChain, MAX_CHAIN_DEGREE,
};
pub use hankel::{build_moment_matrix, InertiaReport, MomentMatrix, TruncatedSequence};
pub use matrix::RatMatrix;
pub use measure::{Atom, AtomicMeasure, Classification};
pub use multiindex::MultiIndex;
pub use problem::{parse_problem, Problem, ProblemError, ProblemFile, ProblemOptions};
pub use rational::{parse_rational, Rational};
pub use relation::ColumnRelation;
pub use solve::{solve, SolveOptions, SolveReport, SolveStatus};
pub use spectral::{ShiftSystem, Tolerances, VarietyClass, VarietyPoints};
