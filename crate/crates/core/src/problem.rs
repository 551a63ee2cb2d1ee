//! JSON problem files: moments as exact rational strings, optional column
//! relations, and solver options.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use thiserror::Error;

use crate::error::Error;
use crate::hankel::TruncatedSequence;
use crate::multiindex::MultiIndex;
use crate::rational::{parse_rational, Rational};
use crate::relation::ColumnRelation;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub d: usize,
    /// Largest moment degree; must be even.
    pub degree: usize,
    pub moments: Vec<TermEntry>,
    #[serde(default)]
    pub relations: Vec<RelationEntry>,
    #[serde(default)]
    pub options: ProblemOptions,
}

/// An exponent vector with a rational value written as `"p/q"` or `"p"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermEntry {
    pub alpha: Vec<u32>,
    pub value: String,
}

/// `X^target = Σ coeff · X^alpha`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    pub target: Vec<u32>,
    #[serde(default)]
    pub coeffs: Vec<TermEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_match: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_relations: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill_free: Option<bool>,
}

/// A parsed and validated problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sequence: TruncatedSequence,
    pub relations: Vec<ColumnRelation>,
    pub options: ProblemOptions,
}

impl Problem {
    /// Half of the moment degree.
    pub fn n(&self) -> usize {
        self.sequence.degree() / 2
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProblemError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {source}")]
    Field {
        field: String,
        #[source]
        source: Error,
    },
    #[error("{0}")]
    Invalid(Error),
}

fn field(name: String) -> impl FnOnce(Error) -> ProblemError {
    move |source| ProblemError::Field {
        field: name,
        source,
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ProblemError> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let detail = full.strip_suffix(&suffix).unwrap_or(&full);
        let message = match e.classify() {
            Category::Data => detail.to_string(),
            _ => format!("malformed JSON: {detail}"),
        };
        ProblemError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    file.validate()
}

fn index(d: usize, alpha: &[u32]) -> Result<MultiIndex, Error> {
    if alpha.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: alpha.len(),
        });
    }
    MultiIndex::new(alpha)
}

impl ProblemFile {
    pub fn validate(&self) -> Result<Problem, ProblemError> {
        let d = self.d;
        if d == 0 {
            return Err(field("d".into())(Error::ZeroDimension));
        }
        if !self.degree.is_multiple_of(2) {
            return Err(field("degree".into())(Error::InvalidOption(format!(
                "moment degree {} must be even",
                self.degree
            ))));
        }
        let mut values = BTreeMap::new();
        for (i, m) in self.moments.iter().enumerate() {
            let g = index(d, &m.alpha).map_err(field(format!("moments[{i}].alpha")))?;
            let v = parse_rational(&m.value).map_err(field(format!("moments[{i}].value")))?;
            if g.degree() > self.degree {
                return Err(field(format!("moments[{i}].alpha"))(
                    Error::MomentAboveDegree {
                        index: g,
                        bound: self.degree,
                    },
                ));
            }
            if values.insert(g.clone(), v).is_some() {
                return Err(field(format!("moments[{i}].alpha"))(
                    Error::DuplicateMoment(g),
                ));
            }
        }
        let sequence =
            TruncatedSequence::new(d, self.degree, values).map_err(ProblemError::Invalid)?;
        let mut relations = Vec::new();
        for (i, r) in self.relations.iter().enumerate() {
            let target = index(d, &r.target).map_err(field(format!("relations[{i}].target")))?;
            let mut coeffs: Vec<(MultiIndex, Rational)> = Vec::new();
            for (j, c) in r.coeffs.iter().enumerate() {
                let path = format!("relations[{i}].coeffs[{j}]");
                let g = index(d, &c.alpha).map_err(field(format!("{path}.alpha")))?;
                let v = parse_rational(&c.value).map_err(field(format!("{path}.value")))?;
                coeffs.push((g, v));
            }
            let rel =
                ColumnRelation::new(target, coeffs).map_err(field(format!("relations[{i}]")))?;
            if self.options.axis_relations == Some(true) && !rel.is_axis() {
                return Err(field(format!("relations[{i}]"))(Error::InvalidRelation {
                    target: rel.target().clone(),
                    reason: "axis-only mode requires a univariate relation in one variable".into(),
                }));
            }
            relations.push(rel);
        }
        Ok(Problem {
            sequence,
            relations,
            options: self.options.clone(),
        })
    }

    /// The file form of a sequence and relations.
    pub fn from_parts(
        sequence: &TruncatedSequence,
        relations: &[ColumnRelation],
        options: ProblemOptions,
    ) -> ProblemFile {
        ProblemFile {
            d: sequence.dim(),
            degree: sequence.degree(),
            moments: sequence
                .iter()
                .map(|(g, v)| TermEntry {
                    alpha: g.entries(),
                    value: v.to_string(),
                })
                .collect(),
            relations: relations
                .iter()
                .map(|r| RelationEntry {
                    target: r.target().entries(),
                    coeffs: r
                        .coeffs()
                        .iter()
                        .map(|(g, v)| TermEntry {
                            alpha: g.entries(),
                            value: v.to_string(),
                        })
                        .collect(),
                })
                .collect(),
            options,
        }
    }
}
