use thiserror::Error;

use crate::multiindex::MultiIndex;

/// Errors raised by the solver stages.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension too large: binomial({n}+{d}, {d}) does not fit")]
    DimensionTooLarge { n: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exponent {value} exceeds the per-axis cap of {cap}")]
    ExponentTooLarge { value: u32, cap: u32 },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("insufficient degree: M({n}) needs moments up to degree {needed}, sequence stops at {available}")]
    InsufficientDegree {
        n: usize,
        needed: usize,
        available: usize,
    },

    #[error("missing moment {0}")]
    MissingMoment(MultiIndex),

    #[error("duplicate moment {0}")]
    DuplicateMoment(MultiIndex),

    #[error("moment {index} has degree above the declared bound {bound}")]
    MomentAboveDegree { index: MultiIndex, bound: usize },

    #[error("index out of range: {0} is not a label of the matrix")]
    IndexOutOfRange(MultiIndex),

    #[error("invalid rational {0:?}")]
    InvalidRational(String),

    #[error("invalid relation for {target}: {reason}")]
    InvalidRelation { target: MultiIndex, reason: String },

    #[error("inconsistent relations: {0}")]
    InconsistentRelations(String),

    #[error("incomplete relations: moments {} are not determined", format_indices(.0))]
    IncompleteRelations(Vec<MultiIndex>),

    #[error("no stabilization: rank still growing at degree cap {cap}")]
    NoStabilization { cap: usize },

    #[error("block mismatch: {0}")]
    BlockMismatch(String),

    #[error("singular basis matrix")]
    SingularBasisMatrix,

    #[error("not simultaneously diagonalizable: {0}")]
    NotSimultaneouslyDiagonalizable(String),

    #[error("conjugate symmetry violated at point {0}")]
    ConjugateSymmetryViolated(usize),

    #[error("ill-conditioned Vandermonde (condition estimate {0:.3e})")]
    IllConditionedVandermonde(f64),

    #[error("weight formulas disagree (discrepancy {0:.3e})")]
    WeightFormulasDisagree(f64),

    #[error("classification mismatch: {0}")]
    ClassificationMismatch(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),
}

fn format_indices(v: &[MultiIndex]) -> String {
    let parts: Vec<String> = v.iter().map(|m| m.to_string()).collect();
    parts.join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
