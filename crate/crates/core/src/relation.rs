//! Column relations `X^target = Σ c_λ X^λ` and the polynomials they encode.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::rational::Rational;

/// A column identity in a moment matrix. Every coefficient index sorts
/// strictly before `target` in graded lexicographic order, so the target
/// column is written in terms of earlier ones.
#[derive(Clone, PartialEq, Eq)]
pub struct ColumnRelation {
    target: MultiIndex,
    coeffs: BTreeMap<MultiIndex, Rational>,
}

impl ColumnRelation {
    /// Zero coefficients are dropped.
    pub fn new(
        target: MultiIndex,
        coeffs: impl IntoIterator<Item = (MultiIndex, Rational)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, c) in coeffs {
            if idx.dim() != target.dim() {
                return Err(Error::InvalidRelation {
                    target,
                    reason: format!("coefficient index {idx} has the wrong dimension"),
                });
            }
            if idx >= target {
                return Err(Error::InvalidRelation {
                    target,
                    reason: format!("coefficient index {idx} does not precede the target"),
                });
            }
            if map.contains_key(&idx) {
                return Err(Error::InvalidRelation {
                    target,
                    reason: format!("coefficient index {idx} repeated"),
                });
            }
            if !c.is_zero() {
                map.insert(idx, c);
            }
        }
        Ok(ColumnRelation {
            target,
            coeffs: map,
        })
    }

    /// Reads `p(x) = 0` as a relation on the graded-lex largest monomial of
    /// `p`. Fails on the zero polynomial.
    pub fn from_polynomial(terms: &BTreeMap<MultiIndex, Rational>) -> Result<Self> {
        let (lead, lc) = terms
            .iter()
            .rev()
            .find(|(_, c)| !c.is_zero())
            .ok_or_else(|| Error::InvalidOption("zero polynomial has no leading term".into()))?;
        let scale = -lc.recip();
        let coeffs = terms
            .iter()
            .filter(|(k, c)| *k != lead && !c.is_zero())
            .map(|(k, c)| (k.clone(), c * &scale));
        ColumnRelation::new(lead.clone(), coeffs)
    }

    pub fn target(&self) -> &MultiIndex {
        &self.target
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Total degree of the encoded polynomial, which is the target's degree.
    pub fn degree(&self) -> usize {
        self.target.degree()
    }

    /// The polynomial `x^target − Σ c_λ x^λ`.
    pub fn to_polynomial(&self) -> BTreeMap<MultiIndex, Rational> {
        let mut p: BTreeMap<MultiIndex, Rational> =
            self.coeffs.iter().map(|(k, c)| (k.clone(), -c)).collect();
        p.insert(self.target.clone(), Rational::one());
        p
    }

    /// Terms of the polynomial, target first.
    pub fn terms(&self) -> Vec<(MultiIndex, Rational)> {
        let mut out = vec![(self.target.clone(), Rational::one())];
        out.extend(self.coeffs.iter().map(|(k, c)| (k.clone(), -c)));
        out
    }

    /// The relation multiplied through by `x^shift`.
    pub fn shifted(&self, shift: &MultiIndex) -> ColumnRelation {
        ColumnRelation {
            target: self.target.plus(shift),
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, c)| (k.plus(shift), c.clone()))
                .collect(),
        }
    }

    /// True when the target is a pure power `X_j^k` and every other term is
    /// a power of the same variable.
    pub fn is_axis(&self) -> bool {
        let Some((j, _)) = self.target.as_axis_power() else {
            return false;
        };
        self.coeffs
            .keys()
            .all(|k| k.degree() == 0 || matches!(k.as_axis_power(), Some((i, _)) if i == j))
    }
}

impl fmt::Display for ColumnRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = ", self.target.monomial())?;
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.coeffs.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match (k.degree(), mag.is_one(), mag.is_integer()) {
                (0, _, _) => write!(f, "{mag}")?,
                (_, true, _) => write!(f, "{}", k.monomial())?,
                (_, false, true) => write!(f, "{mag}*{}", k.monomial())?,
                (_, false, false) => write!(f, "({mag})*{}", k.monomial())?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ColumnRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
