//! Exponent vectors, the graded lexicographic order on them, and the
//! counting helpers used to size moment matrices and bound extension chains.
//!
//! Within a fixed total degree the order puts larger leading exponents
//! first, so for two variables the monomials run
//! `1, X1, X2, X1^2, X1 X2, X2^2, X1^3, ...`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest exponent accepted on any single axis when an index is built from
/// external data.
pub const MAX_AXIS_DEGREE: u32 = 32;

/// Exponent vector `γ = (γ_1, …, γ_d)`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(SmallVec<[u8; 4]>);

impl MultiIndex {
    pub fn new(entries: &[u32]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::ZeroDimension);
        }
        let mut v = SmallVec::with_capacity(entries.len());
        for &e in entries {
            if e > MAX_AXIS_DEGREE {
                return Err(Error::ExponentTooLarge {
                    value: e,
                    cap: MAX_AXIS_DEGREE,
                });
            }
            v.push(e as u8);
        }
        Ok(MultiIndex(v))
    }

    /// The zero index `0_d`.
    pub fn zero(d: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, d))
    }

    /// The unit index `e_j` (zero-based axis).
    pub fn unit(d: usize, j: usize) -> Self {
        let mut m = Self::zero(d);
        m.0[j] = 1;
        m
    }

    /// `k · e_j`.
    pub fn axis_power(d: usize, j: usize, k: u32) -> Result<Self> {
        let mut e = vec![0u32; d];
        e[j] = k;
        Self::new(&e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j] as u32
    }

    pub fn entries(&self) -> Vec<u32> {
        self.0.iter().map(|&e| e as u32).collect()
    }

    /// Componentwise sum. Exponents produced internally stay well under the
    /// storage limit because inputs are capped at [`MAX_AXIS_DEGREE`].
    pub fn plus(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.checked_add(*b).expect("exponent overflow"))
                .collect(),
        )
    }

    /// Componentwise difference, `None` if any entry would go negative.
    pub fn minus(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut out = SmallVec::with_capacity(self.dim());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    /// True when `other` divides `self` as monomials.
    pub fn divisible_by(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a >= b)
    }

    /// If this index is `k · e_j` with `k ≥ 1`, returns `(j, k)`.
    pub fn as_axis_power(&self) -> Option<(usize, u32)> {
        let nz: Vec<usize> = (0..self.dim()).filter(|&j| self.0[j] != 0).collect();
        match nz.as_slice() {
            [j] => Some((*j, self.0[*j] as u32)),
            _ => None,
        }
    }

    /// Monomial notation such as `X1^2*X2`, or `1` for the zero index.
    pub fn monomial(&self) -> String {
        let mut parts = Vec::new();
        for (j, &e) in self.0.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("X{}", j + 1)),
                _ => parts.push(format!("X{}^{}", j + 1, e)),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        MultiIndex::new(&v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Vec<u32> {
        m.entries()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn graded_lex(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.degree().cmp(&b.degree()).then_with(|| {
        // larger leading exponent sorts first
        for (x, y) in a.0.iter().zip(b.0.iter()) {
            match y.cmp(x) {
                Ordering::Equal => continue,
                other => return other,
            }
        }
        Ordering::Equal
    })
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim()
            .cmp(&other.dim())
            .then_with(|| graded_lex(self, other))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded lexicographic comparison; indices must share a dimension.
pub fn compare_graded_lex(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(graded_lex(a, b))
}

/// `binomial(n + d, d)`, the number of monomials of degree at most `n` in `d`
/// variables.
pub fn dimension(n: usize, d: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if n + d > 64 {
        return Err(Error::DimensionTooLarge { n, d });
    }
    let k = d.min(n) as u128;
    let total = (n + d) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc = binomial(total - k + i + 1, i + 1)
        acc = acc * (total - k + i + 1) / (i + 1);
    }
    usize::try_from(acc).map_err(|_| Error::DimensionTooLarge { n, d })
}

/// All indices of total degree exactly `t`, in graded lexicographic order.
pub fn monomials_of_degree(t: usize, d: usize) -> Vec<MultiIndex> {
    fn fill(rest: usize, axis: usize, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        let d = cur.len();
        if axis == d - 1 {
            cur[axis] = rest as u8;
            out.push(MultiIndex(SmallVec::from_slice(cur)));
            return;
        }
        for e in (0..=rest).rev() {
            cur[axis] = e as u8;
            fill(rest - e, axis + 1, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0u8; d];
    fill(t, 0, &mut cur, &mut out);
    out
}

/// All indices of total degree at most `n`, in graded lexicographic order.
pub fn enumerate_monomials(n: usize, d: usize) -> Result<Vec<MultiIndex>> {
    let count = dimension(n, d)?;
    if n > 4 * MAX_AXIS_DEGREE as usize {
        return Err(Error::DimensionTooLarge { n, d });
    }
    let mut out = Vec::with_capacity(count);
    for t in 0..=n {
        out.extend(monomials_of_degree(t, d));
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

/// Smallest total degree `m` at which every index of degree `m` has some
/// coordinate at least `nprime`.
///
/// The closed form is `nprime + (nprime - 1)(d - 1)`: the index with every
/// coordinate equal to `nprime - 1` has degree one less and misses the
/// threshold, while anything heavier must push some coordinate past it.
pub fn saturation_degree(nprime: usize, d: usize) -> usize {
    debug_assert!(nprime >= 1 && d >= 1);
    nprime + (nprime - 1) * (d - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    #[test]
    fn dimension_values() {
        assert_eq!(dimension(2, 2).unwrap(), 6);
        assert_eq!(dimension(3, 2).unwrap(), 10);
        for d in 1..6 {
            assert_eq!(dimension(0, d).unwrap(), 1);
        }
        assert_eq!(dimension(32, 32).unwrap(), 1832624140942590534);
        assert!(matches!(
            dimension(60, 5),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn listing_matches_two_variable_order() {
        let got = enumerate_monomials(3, 2).unwrap();
        let want: Vec<MultiIndex> = [
            [0, 0],
            [1, 0],
            [0, 1],
            [2, 0],
            [1, 1],
            [0, 2],
            [3, 0],
            [2, 1],
            [1, 2],
            [0, 3],
        ]
        .iter()
        .map(|v| mi(v))
        .collect();
        assert_eq!(got, want);
        assert_eq!(enumerate_monomials(0, 3).unwrap(), vec![mi(&[0, 0, 0])]);
        assert_eq!(
            enumerate_monomials(1, 2).unwrap(),
            vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]
        );
    }

    #[test]
    fn comparisons() {
        assert_eq!(
            compare_graded_lex(&mi(&[1, 0]), &mi(&[0, 1])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            compare_graded_lex(&mi(&[2, 0]), &mi(&[0, 1])).unwrap(),
            Ordering::Greater
        );
        assert_eq!(
            compare_graded_lex(&mi(&[1, 1]), &mi(&[1, 1])).unwrap(),
            Ordering::Equal
        );
        assert!(compare_graded_lex(&mi(&[1, 1]), &mi(&[1, 1, 0])).is_err());
    }

    #[test]
    fn lengths_for_small_grid() {
        for d in 1..=4 {
            for n in 0..=8 {
                let v = enumerate_monomials(n, d).unwrap();
                assert_eq!(v.len(), dimension(n, d).unwrap());
                assert!(v.windows(2).all(|w| w[0] < w[1]));
                assert_eq!(v[0], MultiIndex::zero(d));
            }
        }
    }

    #[test]
    fn saturation_examples() {
        for d in 1..6 {
            assert_eq!(saturation_degree(1, d), 1);
        }
        assert_eq!(saturation_degree(2, 2), 3);
        assert_eq!(saturation_degree(3, 2), 5);
    }

    #[test]
    fn exchange_keeps_total_degree() {
        // λ + ξ = γ + η componentwise
        let (l, x, g, e) = (mi(&[2, 1]), mi(&[0, 3]), mi(&[1, 2]), mi(&[1, 2]));
        assert_eq!(l.plus(&x), g.plus(&e));
        assert_eq!(l.degree() + x.degree(), g.degree() + e.degree());
    }

    #[test]
    fn rejects_large_exponents() {
        assert!(MultiIndex::new(&[33]).is_err());
        assert!(MultiIndex::new(&[]).is_err());
    }

    #[test]
    fn monomial_text() {
        assert_eq!(mi(&[0, 0]).monomial(), "1");
        assert_eq!(mi(&[2, 1]).monomial(), "X1^2*X2");
        assert_eq!(mi(&[2, 1]).to_string(), "(2,1)");
    }
}
