//! Truncated sequences, their d-Hankel moment matrices, and exact rank,
//! inertia and column-space structure over the rationals.

use std::collections::{BTreeMap, HashMap};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RatMatrix;
use crate::multiindex::{enumerate_monomials, MultiIndex};
use crate::rational::Rational;
use crate::relation::ColumnRelation;

/// Moments `s_γ` for every `γ` with `|γ| ≤ m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSequence {
    d: usize,
    m: usize,
    values: BTreeMap<MultiIndex, Rational>,
}

impl TruncatedSequence {
    /// Checks that every index of degree at most `m` is present and nothing
    /// else is.
    pub fn new(d: usize, m: usize, values: BTreeMap<MultiIndex, Rational>) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        for k in values.keys() {
            if k.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: k.dim(),
                });
            }
            if k.degree() > m {
                return Err(Error::MomentAboveDegree {
                    index: k.clone(),
                    bound: m,
                });
            }
        }
        for g in enumerate_monomials(m, d)? {
            if !values.contains_key(&g) {
                return Err(Error::MissingMoment(g));
            }
        }
        Ok(TruncatedSequence { d, m, values })
    }

    /// Like [`TruncatedSequence::new`] but rejects repeated indices.
    pub fn from_pairs(
        d: usize,
        m: usize,
        pairs: impl IntoIterator<Item = (MultiIndex, Rational)>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, v) in pairs {
            if values.contains_key(&k) {
                return Err(Error::DuplicateMoment(k));
            }
            values.insert(k, v);
        }
        Self::new(d, m, values)
    }

    pub fn from_fn(d: usize, m: usize, mut f: impl FnMut(&MultiIndex) -> Rational) -> Result<Self> {
        let values = enumerate_monomials(m, d)?
            .into_iter()
            .map(|g| {
                let v = f(&g);
                (g, v)
            })
            .collect();
        Self::new(d, m, values)
    }

    pub fn zero(d: usize, m: usize) -> Result<Self> {
        Self::from_fn(d, m, |_| Rational::zero())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn get(&self, g: &MultiIndex) -> Option<&Rational> {
        self.values.get(g)
    }

    /// Moments in graded lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Rational)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The moments of degree at most `m`.
    pub fn truncate(&self, m: usize) -> TruncatedSequence {
        TruncatedSequence {
            d: self.d,
            m: m.min(self.m),
            values: self
                .values
                .iter()
                .filter(|(k, _)| k.degree() <= m)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

/// The d-Hankel matrix `M(n)` with entry `s_{λ+ξ}` at row `X^λ`, column `X^ξ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentMatrix {
    n: usize,
    d: usize,
    labels: Vec<MultiIndex>,
    entries: RatMatrix,
}

/// Rank and the numbers of positive and negative eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InertiaReport {
    pub rank: usize,
    pub i_plus: usize,
    pub i_minus: usize,
}

pub fn build_moment_matrix(s: &TruncatedSequence, n: usize) -> Result<MomentMatrix> {
    if 2 * n > s.m {
        return Err(Error::InsufficientDegree {
            n,
            needed: 2 * n,
            available: s.m,
        });
    }
    MomentMatrix::from_moments(n, s.d, |g| {
        s.get(g)
            .cloned()
            .ok_or_else(|| Error::MissingMoment(g.clone()))
    })
}

impl MomentMatrix {
    /// Builds `M(n)` by looking up `s_{λ+ξ}` once per distinct index.
    pub fn from_moments(
        n: usize,
        d: usize,
        mut moment: impl FnMut(&MultiIndex) -> Result<Rational>,
    ) -> Result<Self> {
        let labels = enumerate_monomials(n, d)?;
        let k = labels.len();
        let mut cache: HashMap<MultiIndex, Rational> = HashMap::new();
        let mut entries = RatMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let g = labels[i].plus(&labels[j]);
                let v = match cache.get(&g) {
                    Some(v) => v.clone(),
                    None => {
                        let v = moment(&g)?;
                        cache.insert(g, v.clone());
                        v
                    }
                };
                entries[(j, i)] = v.clone();
                entries[(i, j)] = v;
            }
        }
        Ok(MomentMatrix {
            n,
            d,
            labels,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[MultiIndex] {
        &self.labels
    }

    pub fn entries(&self) -> &RatMatrix {
        &self.entries
    }

    /// Row/column position of a label.
    pub fn position(&self, label: &MultiIndex) -> Option<usize> {
        if label.dim() != self.d {
            return None;
        }
        self.labels.binary_search(label).ok()
    }

    pub fn entry(&self, row: &MultiIndex, col: &MultiIndex) -> Result<&Rational> {
        let i = self
            .position(row)
            .ok_or_else(|| Error::IndexOutOfRange(row.clone()))?;
        let j = self
            .position(col)
            .ok_or_else(|| Error::IndexOutOfRange(col.clone()))?;
        Ok(&self.entries[(i, j)])
    }

    /// `s_γ` for `|γ| ≤ 2n`, read from the matrix.
    pub fn moment(&self, g: &MultiIndex) -> Option<&Rational> {
        if g.dim() != self.d || g.degree() > 2 * self.n {
            return None;
        }
        // split γ = λ + ξ with |λ| ≤ n, filling λ from the first axis
        let mut room = self.n as u32;
        let mut lam = vec![0u32; self.d];
        for (j, l) in lam.iter_mut().enumerate() {
            let take = g.get(j).min(room);
            *l = take;
            room -= take;
        }
        let lam = MultiIndex::new(&lam).ok()?;
        let xi = g.minus(&lam)?;
        self.entry(&lam, &xi).ok()
    }

    /// The sequence `(s_γ)_{|γ| ≤ 2n}` underlying the matrix.
    pub fn moments(&self) -> TruncatedSequence {
        TruncatedSequence::from_fn(self.d, 2 * self.n, |g| {
            self.moment(g).cloned().expect("index within 2n")
        })
        .expect("complete by construction")
    }

    /// `M(k)` for `k ≤ n`, the leading principal block.
    pub fn leading(&self, k: usize) -> MomentMatrix {
        let k = k.min(self.n);
        let labels: Vec<MultiIndex> = self
            .labels
            .iter()
            .take_while(|l| l.degree() <= k)
            .cloned()
            .collect();
        let idx: Vec<usize> = (0..labels.len()).collect();
        MomentMatrix {
            n: k,
            d: self.d,
            entries: self.entries.select(&idx, &idx),
            labels,
        }
    }

    pub fn is_d_hankel(&self) -> bool {
        validate_d_hankel(&self.labels, &self.entries)
    }
}

/// First pair of positions whose entries should agree by the d-Hankel
/// identity but do not. Entries `(λ, ξ)` and `(γ, η)` must match whenever
/// `λ + ξ = γ + η`.
pub fn first_hankel_violation(
    labels: &[MultiIndex],
    m: &RatMatrix,
) -> Option<((MultiIndex, MultiIndex), (MultiIndex, MultiIndex))> {
    if !m.is_square() || m.rows() != labels.len() {
        let z = MultiIndex::zero(labels.first().map_or(1, |l| l.dim()));
        return Some(((z.clone(), z.clone()), (z.clone(), z)));
    }
    let mut seen: HashMap<MultiIndex, (usize, usize)> = HashMap::new();
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            let g = labels[i].plus(&labels[j]);
            match seen.get(&g) {
                Some(&(a, b)) => {
                    if m[(a, b)] != m[(i, j)] {
                        return Some((
                            (labels[a].clone(), labels[b].clone()),
                            (labels[i].clone(), labels[j].clone()),
                        ));
                    }
                }
                None => {
                    seen.insert(g, (i, j));
                }
            }
        }
    }
    None
}

/// True iff the labelled square matrix is d-Hankel.
pub fn validate_d_hankel(labels: &[MultiIndex], m: &RatMatrix) -> bool {
    let d = labels.first().map_or(1, |l| l.dim());
    labels.iter().all(|l| l.dim() == d) && first_hankel_violation(labels, m).is_none()
}

pub fn rank_and_inertia(m: &MomentMatrix) -> InertiaReport {
    inertia_of(&m.entries)
}

/// Exact inertia of a symmetric rational matrix by congruence elimination.
///
/// A nonzero diagonal entry is used as a 1×1 pivot and contributes its sign.
/// When the remaining diagonal is zero, a nonzero off-diagonal `a` at
/// `(i, j)` gives the 2×2 pivot `[[0, a], [a, 0]]`, which has one eigenvalue
/// of each sign. The Schur complement keeps the rest congruent.
///
/// Only the upper triangle is read.
pub fn inertia_of(m: &RatMatrix) -> InertiaReport {
    assert!(m.is_square(), "inertia needs a square matrix");
    let n = m.rows();
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i <= j {
                        m[(i, j)].clone()
                    } else {
                        m[(j, i)].clone()
                    }
                })
                .collect()
        })
        .collect();
    let mut active: Vec<usize> = (0..n).collect();
    let (mut plus, mut minus) = (0, 0);
    loop {
        if let Some(pos) = active.iter().position(|&i| !a[i][i].is_zero()) {
            let p = active.remove(pos);
            let piv = a[p][p].clone();
            if piv.is_positive() {
                plus += 1;
            } else {
                minus += 1;
            }
            let inv = piv.recip();
            for (x, &r) in active.iter().enumerate() {
                if a[r][p].is_zero() {
                    continue;
                }
                let f = &a[r][p] * &inv;
                for &c in &active[x..] {
                    if a[p][c].is_zero() {
                        continue;
                    }
                    let v = &a[r][c] - &f * &a[p][c];
                    a[c][r] = v.clone();
                    a[r][c] = v;
                }
            }
            continue;
        }
        let mut pair = None;
        'outer: for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                if !a[i][j].is_zero() {
                    pair = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = pair else {
            break;
        };
        plus += 1;
        minus += 1;
        active.retain(|&k| k != i && k != j);
        let inv = a[i][j].recip();
        // A' = A - [a_i a_j] [[0, 1/a], [1/a, 0]] [a_i a_j]^T
        for (x, &r) in active.iter().enumerate() {
            for &c in &active[x..] {
                let t = &a[r][i] * &a[j][c] + &a[r][j] * &a[i][c];
                if t.is_zero() {
                    continue;
                }
                let v = &a[r][c] - t * &inv;
                a[c][r] = v.clone();
                a[r][c] = v;
            }
        }
    }
    InertiaReport {
        rank: plus + minus,
        i_plus: plus,
        i_minus: minus,
    }
}

/// Greedy column basis: a column joins when it is independent of the
/// columns already chosen, scanning in graded lexicographic order.
pub fn column_basis(m: &MomentMatrix) -> Vec<MultiIndex> {
    m.entries
        .rref()
        .pivots
        .iter()
        .map(|&p| m.labels[p].clone())
        .collect()
}

/// One relation per non-basis column, expressing it through the basis
/// columns that precede it.
pub fn kernel_relations(m: &MomentMatrix) -> Vec<ColumnRelation> {
    let red = m.entries.rref();
    let mut out = Vec::new();
    let mut next_pivot = 0;
    for c in 0..m.size() {
        if red.pivots.get(next_pivot) == Some(&c) {
            next_pivot += 1;
            continue;
        }
        let coeffs = red.pivots[..next_pivot]
            .iter()
            .enumerate()
            .map(|(row, &p)| (m.labels[p].clone(), red.matrix[(row, c)].clone()));
        out.push(
            ColumnRelation::new(m.labels[c].clone(), coeffs)
                .expect("basis columns precede the dependent column"),
        );
    }
    out
}

/// The block with the given row and column labels.
pub fn submatrix(m: &MomentMatrix, rows: &[MultiIndex], cols: &[MultiIndex]) -> Result<RatMatrix> {
    let pos = |l: &MultiIndex| {
        m.position(l)
            .ok_or_else(|| Error::IndexOutOfRange(l.clone()))
    };
    let r: Vec<usize> = rows.iter().map(pos).collect::<Result<_>>()?;
    let c: Vec<usize> = cols.iter().map(pos).collect::<Result<_>>()?;
    Ok(m.entries.select(&r, &c))
}

/// True when the polynomial with the given terms gives the zero column in
/// `m`, i.e. `Σ_γ p_γ s_{λ+γ} = 0` for every row label `λ`. Terms outside
/// the matrix make the check fail; the zero polynomial passes.
pub fn annihilates(terms: &BTreeMap<MultiIndex, Rational>, m: &MomentMatrix) -> bool {
    let mut cols = Vec::new();
    for (g, c) in terms {
        if c.is_zero() {
            continue;
        }
        match m.position(g) {
            Some(j) => cols.push((j, c)),
            None => return false,
        }
    }
    (0..m.size()).all(|i| {
        let mut acc = Rational::zero();
        for (j, c) in &cols {
            acc += *c * &m.entries[(i, *j)];
        }
        acc.is_zero()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    fn univariate(s: &[i64]) -> TruncatedSequence {
        TruncatedSequence::from_fn(1, s.len() - 1, |g| int(s[g.get(0) as usize])).unwrap()
    }

    #[test]
    fn univariate_layout() {
        let m = build_moment_matrix(&univariate(&[1, 0, 0]), 1).unwrap();
        assert_eq!(
            m.entries(),
            &RatMatrix::from_rows(vec![vec![int(1), int(0)], vec![int(0), int(0)]])
        );
        let m = build_moment_matrix(&univariate(&[0, 0, 0, 1, 0, -2, 0]), 3).unwrap();
        let want = [[0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, -2], [1, 0, -2, 0]];
        for (i, row) in want.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(m.entries()[(i, j)], int(x));
            }
        }
        let r = rank_and_inertia(&m);
        assert_eq!((r.rank, r.i_plus, r.i_minus), (4, 2, 2));
        assert_eq!(column_basis(&m).len(), 4);
        assert!(kernel_relations(&m).is_empty());
    }

    #[test]
    fn insufficient_degree() {
        assert!(matches!(
            build_moment_matrix(&univariate(&[1, 0, 0]), 2),
            Err(Error::InsufficientDegree { .. })
        ));
    }

    #[test]
    fn missing_and_duplicate() {
        let pairs = vec![(mi(&[0, 0]), int(1)), (mi(&[1, 0]), int(1))];
        assert_eq!(
            TruncatedSequence::from_pairs(2, 1, pairs.clone()),
            Err(Error::MissingMoment(mi(&[0, 1])))
        );
        let mut dup = pairs;
        dup.push((mi(&[1, 0]), int(2)));
        assert_eq!(
            TruncatedSequence::from_pairs(2, 1, dup),
            Err(Error::DuplicateMoment(mi(&[1, 0])))
        );
    }

    #[test]
    fn hankel_check_and_perturbation() {
        let s = TruncatedSequence::from_fn(2, 4, |g| {
            rat(g.get(0) as i64 * 3 - g.get(1) as i64, 1 + g.degree() as i64)
        })
        .unwrap();
        let m = build_moment_matrix(&s, 2).unwrap();
        assert!(m.is_d_hankel());
        let (x1, x2) = (
            m.position(&mi(&[1, 0])).unwrap(),
            m.position(&mi(&[0, 1])).unwrap(),
        );
        let mut bad = m.entries().clone();
        bad[(x1, x2)] += int(1);
        assert!(!validate_d_hankel(m.labels(), &bad));
        assert!(validate_d_hankel(&[mi(&[0, 0])], &RatMatrix::identity(1)));
        assert_eq!(m.moments(), s);
    }

    #[test]
    fn submatrix_extraction() {
        let s = TruncatedSequence::from_fn(2, 4, |g| int(10 * g.get(0) as i64 + g.get(1) as i64))
            .unwrap();
        let m = build_moment_matrix(&s, 2).unwrap();
        let b = submatrix(&m, &[mi(&[0, 0]), mi(&[1, 0])], &[mi(&[1, 0]), mi(&[2, 0])]).unwrap();
        assert_eq!(
            b,
            RatMatrix::from_rows(vec![vec![int(10), int(20)], vec![int(20), int(30)]])
        );
        assert!(submatrix(&m, &[mi(&[3, 0])], &[mi(&[0, 0])]).is_err());
        assert_eq!(
            submatrix(&m, &[mi(&[0, 0])], &[mi(&[0, 0])]).unwrap(),
            RatMatrix::from_rows(vec![vec![int(0)]])
        );
    }

    #[test]
    fn zero_matrix_inertia() {
        let r = inertia_of(&RatMatrix::zeros(3, 3));
        assert_eq!((r.rank, r.i_plus, r.i_minus), (0, 0, 0));
    }

    #[test]
    fn two_by_two_pivot() {
        let m = RatMatrix::from_rows(vec![
            vec![int(0), int(2), int(1)],
            vec![int(2), int(0), int(0)],
            vec![int(1), int(0), int(0)],
        ]);
        let r = inertia_of(&m);
        assert_eq!((r.rank, r.i_plus, r.i_minus), (2, 1, 1));
    }
}
