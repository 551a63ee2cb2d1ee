//! Extensions `M(n) → M(n+1) → …` driven by column relations, the
//! rank-preservation test, and the chain that runs until the rank stops
//! growing.
//!
//! Relations are treated as generators. A relation `p(X) = 0` in a flat
//! extension forces `L(x^α p) = 0` for every multiplier `α`, where `L` maps
//! `x^γ` to `s_γ`. Each stage solves these linear equations exactly for the
//! moments of the two new degrees. When they do not pin the new moments
//! down, equations of higher degree are added (with the moments they
//! mention as extra unknowns) until they do or a window limit is reached.

use std::collections::HashMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::hankel::{
    annihilates, build_moment_matrix, inertia_of, rank_and_inertia, InertiaReport, MomentMatrix,
    TruncatedSequence,
};
use crate::matrix::RatMatrix;
use crate::multiindex::{monomials_of_degree, MultiIndex, MAX_AXIS_DEGREE};
use crate::rational::Rational;
use crate::relation::ColumnRelation;

/// Largest matrix degree a chain may reach, so that every moment index stays
/// within the per-axis exponent cap.
pub const MAX_CHAIN_DEGREE: usize = (MAX_AXIS_DEGREE as usize - 2) / 2;

#[derive(Clone, Debug, Default)]
pub struct ChainOptions {
    /// Largest degree `N` of a stage `M(N)`; defaults to `n·d + 2`, clamped
    /// to [`MAX_CHAIN_DEGREE`].
    pub max_degree: Option<usize>,
    /// Set moments the relations leave undetermined to zero instead of
    /// failing.
    pub fill_free: bool,
}

#[derive(Clone, Debug)]
pub struct ExtensionChain {
    pub base: MomentMatrix,
    /// `M(n+1), M(n+2), …`.
    pub stages: Vec<MomentMatrix>,
    /// Inertia of the base followed by each stage.
    pub inertia: Vec<InertiaReport>,
    /// First `N` with `rank M(N) = rank M(N+1)`.
    pub stabilized_at: usize,
    /// Column relations imposed on each stage: every multiple `x^α p` of a
    /// generator with degree at most the stage degree.
    pub relations_used: Vec<Vec<ColumnRelation>>,
    /// Moments set to zero because nothing determined them.
    pub free_moments: Vec<MultiIndex>,
    pub warnings: Vec<String>,
}

impl ExtensionChain {
    pub fn ranks(&self) -> Vec<usize> {
        self.inertia.iter().map(|r| r.rank).collect()
    }

    /// `M(k)` if the chain contains it.
    pub fn matrix(&self, k: usize) -> Option<&MomentMatrix> {
        if k == self.base.n() {
            Some(&self.base)
        } else {
            k.checked_sub(self.base.n() + 1)
                .and_then(|i| self.stages.get(i))
        }
    }

    /// `(M(N), M(N+1))` at the stabilization degree.
    pub fn stabilized_pair(&self) -> (&MomentMatrix, &MomentMatrix) {
        let n = self.stabilized_at;
        (
            self.matrix(n).expect("stabilized stage present"),
            self.matrix(n + 1)
                .expect("stage after stabilization present"),
        )
    }

    /// The stabilized rank, which is the rank of every later flat extension.
    pub fn final_rank(&self) -> usize {
        self.inertia.last().map_or(0, |r| r.rank)
    }

    /// All moments produced by the chain, up to degree `2N + 2`.
    pub fn moments(&self) -> TruncatedSequence {
        self.stages.last().unwrap_or(&self.base).moments()
    }
}

/// Proposes `M(n+1)` from `M(n)` and the given relations. No lookahead:
/// only equations of degree at most `2n + 2` are used, so the relations must
/// determine the new moments on their own.
pub fn propose_extension(m: &MomentMatrix, rels: &[ColumnRelation]) -> Result<MomentMatrix> {
    let mut ctx = Context::new(m, rels)?;
    ctx.check_base()?;
    let n = m.n();
    let rank = rank_and_inertia(m).rank;
    let free = ctx.solve_stage(n, 2 * n + 2, rank == 0)?;
    debug_assert!(free.is_empty() || rank == 0);
    ctx.matrix(n + 1)
}

/// Both tests of rank preservation for a symmetric extension with leading
/// block `a`: equal ranks, and the existence of `W` with `B = AW`,
/// `C = WᵀAW`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankPreservation {
    pub by_rank: bool,
    pub by_factorization: bool,
}

/// Splits `ext` as `[[A, B], [Bᵀ, C]]` with `A` equal to `a` and runs both
/// rank-preservation tests.
pub fn rank_preservation_blocks(a: &RatMatrix, ext: &RatMatrix) -> Result<RankPreservation> {
    let k = a.rows();
    if !a.is_square() || !ext.is_square() || ext.rows() < k {
        return Err(Error::BlockMismatch(
            "matrices are not nested squares".into(),
        ));
    }
    let lead: Vec<usize> = (0..k).collect();
    if &ext.select(&lead, &lead) != a {
        return Err(Error::BlockMismatch(
            "leading block of the extension differs from the base".into(),
        ));
    }
    let rest: Vec<usize> = (k..ext.rows()).collect();
    let b = ext.select(&lead, &rest);
    let c = ext.select(&rest, &rest);
    let by_rank = ext.rank() == a.rank();
    let by_factorization = match a.solve(&b) {
        Some(w) => w.transpose().mul(a).mul(&w) == c,
        None => false,
    };
    Ok(RankPreservation {
        by_rank,
        by_factorization,
    })
}

/// Rank preservation of a square block extension. Both tests are run and
/// the result is their conjunction; they agree for symmetric input.
pub fn verify_rank_preserving_blocks(a: &RatMatrix, ext: &RatMatrix) -> Result<bool> {
    let r = rank_preservation_blocks(a, ext)?;
    Ok(r.by_rank && r.by_factorization)
}

/// True iff `ext` (degree `n+1`) is a rank-preserving extension of `a`
/// (degree `n`).
pub fn verify_rank_preserving(a: &MomentMatrix, ext: &MomentMatrix) -> Result<bool> {
    if ext.n() != a.n() + 1 || ext.dim() != a.dim() {
        return Err(Error::BlockMismatch(format!(
            "expected M({}) in dimension {}, found M({}) in dimension {}",
            a.n() + 1,
            a.dim(),
            ext.n(),
            ext.dim()
        )));
    }
    verify_rank_preserving_blocks(a.entries(), ext.entries())
}

/// True iff the relation still gives a zero column in the extension.
pub fn propagate_relation(p: &ColumnRelation, ext: &MomentMatrix) -> bool {
    annihilates(&p.to_polynomial(), ext)
}

/// Extends `m` stage by stage until the rank stabilizes.
pub fn extend_chain(
    m: &MomentMatrix,
    rels: &[ColumnRelation],
    opts: &ChainOptions,
) -> Result<ExtensionChain> {
    let n = m.n();
    let d = m.dim();
    let cap = opts
        .max_degree
        .unwrap_or((n * d + 2).min(MAX_CHAIN_DEGREE).max(n + 1));
    if cap > MAX_CHAIN_DEGREE {
        return Err(Error::InvalidOption(format!(
            "max degree {cap} exceeds the supported limit {MAX_CHAIN_DEGREE}"
        )));
    }
    if cap <= n {
        return Err(Error::InvalidOption(format!(
            "max degree {cap} must exceed the base degree {n}"
        )));
    }
    let mut ctx = Context::new(m, rels)?;
    ctx.check_base()?;
    let mut chain = ExtensionChain {
        base: m.clone(),
        stages: Vec::new(),
        inertia: vec![rank_and_inertia(m)],
        stabilized_at: n,
        relations_used: Vec::new(),
        free_moments: Vec::new(),
        warnings: Vec::new(),
    };
    let window_max = (2 * cap + 2).min(MAX_AXIS_DEGREE as usize);
    for k in n..cap {
        let prev_rank = chain.inertia.last().expect("base inertia").rank;
        let free = ctx.solve_stage(k, window_max, opts.fill_free || prev_rank == 0)?;
        if !free.is_empty() {
            chain.warnings.push(format!(
                "moments {} were not determined by the relations and were set to zero",
                free.iter()
                    .map(|g| g.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
            chain.free_moments.extend(free);
        }
        let next = ctx.matrix(k + 1)?;
        let used = ctx.relations_up_to(k + 1);
        if let Some(bad) = used.iter().find(|r| !propagate_relation(r, &next)) {
            return Err(Error::InconsistentRelations(format!(
                "relation {bad} does not hold in the constructed M({})",
                k + 1
            )));
        }
        let inertia = inertia_of(next.entries());
        chain.stages.push(next);
        chain.relations_used.push(used);
        chain.inertia.push(inertia);
        if inertia.rank == prev_rank {
            chain.stabilized_at = k;
            return Ok(chain);
        }
    }
    Err(Error::NoStabilization { cap })
}

/// Moments known so far and the generators that constrain the rest.
struct Context {
    d: usize,
    n: usize,
    gens: Vec<ColumnRelation>,
    known: HashMap<MultiIndex, Rational>,
}

/// One moment equation `Σ c s_{γ+α} = 0` from generator `gen` times `x^α`.
struct Equation {
    gen: usize,
    shift: MultiIndex,
    terms: Vec<(MultiIndex, Rational)>,
}

impl Context {
    fn new(m: &MomentMatrix, rels: &[ColumnRelation]) -> Result<Self> {
        let d = m.dim();
        if let Some(r) = rels.iter().find(|r| r.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.dim(),
            });
        }
        let known = m
            .moments()
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(Context {
            d,
            n: m.n(),
            gens: rels.to_vec(),
            known,
        })
    }

    /// Equations of total degree exactly `t`.
    fn equations_of_degree(&self, t: usize) -> Vec<Equation> {
        let mut out = Vec::new();
        for (gi, g) in self.gens.iter().enumerate() {
            let Some(rest) = t.checked_sub(g.degree()) else {
                continue;
            };
            for shift in monomials_of_degree(rest, self.d) {
                let terms = g
                    .terms()
                    .into_iter()
                    .map(|(k, c)| (k.plus(&shift), c))
                    .collect();
                out.push(Equation {
                    gen: gi,
                    shift,
                    terms,
                });
            }
        }
        out
    }

    fn describe(&self, eq: &Equation) -> String {
        let g = &self.gens[eq.gen];
        if eq.shift.degree() == 0 {
            format!("relation {g}")
        } else {
            format!("relation {g} multiplied by {}", eq.shift.monomial())
        }
    }

    /// Every equation that only involves given moments must hold.
    fn check_base(&self) -> Result<()> {
        for t in 0..=2 * self.n {
            for eq in self.equations_of_degree(t) {
                let mut acc = Rational::zero();
                for (k, c) in &eq.terms {
                    acc += c * &self.known[k];
                }
                if !acc.is_zero() {
                    return Err(Error::InconsistentRelations(format!(
                        "{} fails on the given moments (residual {acc})",
                        self.describe(&eq)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Determines the moments of degree `2k+1` and `2k+2`. Returns those
    /// that had to be set to zero.
    fn solve_stage(
        &mut self,
        k: usize,
        window_max: usize,
        allow_fill: bool,
    ) -> Result<Vec<MultiIndex>> {
        let lo = 2 * k + 1;
        let targets: Vec<MultiIndex> = (lo..=lo + 1)
            .flat_map(|t| monomials_of_degree(t, self.d))
            .collect();
        let mut window = lo + 1;
        loop {
            let unknowns: Vec<MultiIndex> = (lo..=window)
                .flat_map(|t| monomials_of_degree(t, self.d))
                .collect();
            let index: HashMap<&MultiIndex, usize> =
                unknowns.iter().enumerate().map(|(i, g)| (g, i)).collect();
            let mut sys = Echelon::new(unknowns.len());
            for t in lo..=window {
                for eq in self.equations_of_degree(t) {
                    let mut row = vec![Rational::zero(); unknowns.len() + 1];
                    for (g, c) in &eq.terms {
                        match index.get(g) {
                            Some(&i) => row[i] += c,
                            None => row[unknowns.len()] -= c * &self.known[g],
                        }
                    }
                    if sys.add(row) == Added::Inconsistent {
                        return Err(Error::InconsistentRelations(format!(
                            "{} contradicts the moments forced so far, at degree {t}",
                            self.describe(&eq)
                        )));
                    }
                }
            }
            let undetermined: Vec<usize> =
                (0..targets.len()).filter(|&i| !sys.determined(i)).collect();
            if undetermined.is_empty() || window >= window_max {
                if !undetermined.is_empty() && !allow_fill {
                    return Err(Error::IncompleteRelations(
                        undetermined.iter().map(|&i| targets[i].clone()).collect(),
                    ));
                }
                for (i, g) in targets.iter().enumerate() {
                    self.known.insert(g.clone(), sys.particular(i));
                }
                return Ok(undetermined.iter().map(|&i| targets[i].clone()).collect());
            }
            window += 1;
        }
    }

    fn matrix(&self, k: usize) -> Result<MomentMatrix> {
        MomentMatrix::from_moments(k, self.d, |g| {
            self.known
                .get(g)
                .cloned()
                .ok_or_else(|| Error::MissingMoment(g.clone()))
        })
    }

    /// Multiples `x^α p` of the generators with degree at most `k`.
    fn relations_up_to(&self, k: usize) -> Vec<ColumnRelation> {
        let mut out = Vec::new();
        for g in &self.gens {
            for t in g.degree()..=k {
                for shift in monomials_of_degree(t - g.degree(), self.d) {
                    out.push(g.shifted(&shift));
                }
            }
        }
        out
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Added {
    Independent,
    Redundant,
    Inconsistent,
}

/// Incrementally maintained reduced row echelon form of `[A | b]`.
struct Echelon {
    cols: usize,
    rows: Vec<(usize, Vec<Rational>)>,
    pivot_row: Vec<Option<usize>>,
}

impl Echelon {
    fn new(cols: usize) -> Self {
        Echelon {
            cols,
            rows: Vec::new(),
            pivot_row: vec![None; cols],
        }
    }

    fn add(&mut self, mut row: Vec<Rational>) -> Added {
        for (p, r) in &self.rows {
            if row[*p].is_zero() {
                continue;
            }
            let f = row[*p].clone();
            for (x, y) in row.iter_mut().zip(r) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        let Some(p) = (0..self.cols).find(|&j| !row[j].is_zero()) else {
            return if row[self.cols].is_zero() {
                Added::Redundant
            } else {
                Added::Inconsistent
            };
        };
        let inv = row[p].recip();
        for x in row.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        for (_, r) in self.rows.iter_mut() {
            if r[p].is_zero() {
                continue;
            }
            let f = r[p].clone();
            for (x, y) in r.iter_mut().zip(&row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.pivot_row[p] = Some(self.rows.len());
        self.rows.push((p, row));
        Added::Independent
    }

    /// Unknown `j` has the same value in every solution.
    fn determined(&self, j: usize) -> bool {
        let Some(r) = self.pivot_row[j] else {
            return false;
        };
        let row = &self.rows[r].1;
        (0..self.cols).all(|c| c == j || row[c].is_zero() || self.pivot_row[c].is_some())
    }

    /// Value of unknown `j` in the solution with every free unknown zero.
    fn particular(&self, j: usize) -> Rational {
        match self.pivot_row[j] {
            Some(r) => self.rows[r].1[self.cols].clone(),
            None => Rational::zero(),
        }
    }
}

/// Builds `M(n)` from the given moments and extends it with the relations.
pub fn extend_sequence(
    s: &TruncatedSequence,
    n: usize,
    rels: &[ColumnRelation],
    opts: &ChainOptions,
) -> Result<ExtensionChain> {
    let m = build_moment_matrix(s, n)?;
    extend_chain(&m, rels, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    fn univariate(s: &[i64]) -> TruncatedSequence {
        TruncatedSequence::from_fn(1, s.len() - 1, |g| int(s[g.get(0) as usize])).unwrap()
    }

    fn quartic() -> ColumnRelation {
        ColumnRelation::new(mi(&[4]), [(mi(&[2]), int(-2)), (mi(&[0]), int(3))]).unwrap()
    }

    #[test]
    fn univariate_quartic_extension() {
        let m = build_moment_matrix(&univariate(&[0, 0, 0, 1, 0, -2, 0]), 3).unwrap();
        let ext = propose_extension(&m, &[quartic()]).unwrap();
        assert_eq!(ext.moment(&mi(&[7])), Some(&int(7)));
        assert_eq!(ext.moment(&mi(&[8])), Some(&int(0)));
        assert!(ext.is_d_hankel());
        assert!(verify_rank_preserving(&m, &ext).unwrap());
        assert!(propagate_relation(&quartic(), &ext));
    }

    #[test]
    fn inconsistent_relation_on_data() {
        let m = build_moment_matrix(&univariate(&[0, 0, 0, 1, 0, -2, 0]), 3).unwrap();
        let bad = ColumnRelation::new(mi(&[4]), [(mi(&[2]), int(2)), (mi(&[0]), int(3))]).unwrap();
        assert!(matches!(
            propose_extension(&m, &[bad]),
            Err(Error::InconsistentRelations(_))
        ));
    }

    #[test]
    fn zero_sequence_extends_by_zero() {
        let m = build_moment_matrix(&univariate(&[0, 0, 0]), 1).unwrap();
        let ext = propose_extension(&m, &[]).unwrap();
        assert!(ext.entries().is_zero());
        let chain = extend_chain(&m, &[], &ChainOptions::default()).unwrap();
        assert_eq!(chain.ranks(), vec![0, 0]);
        assert_eq!(chain.stabilized_at, 1);
    }

    #[test]
    fn constant_chain() {
        let m = build_moment_matrix(&univariate(&[1, 1, 1]), 1).unwrap();
        let rel = ColumnRelation::new(mi(&[2]), [(mi(&[1]), int(1))]).unwrap();
        let chain = extend_chain(&m, &[rel], &ChainOptions::default()).unwrap();
        assert_eq!(chain.ranks(), vec![1, 1]);
        assert_eq!(chain.stabilized_at, 1);
    }

    #[test]
    fn padded_block_is_not_rank_preserving() {
        let a = RatMatrix::from_rows(vec![vec![int(1), int(2)], vec![int(2), int(5)]]);
        let mut ext = RatMatrix::zeros(3, 3);
        for i in 0..2 {
            for j in 0..2 {
                ext[(i, j)] = a[(i, j)].clone();
            }
        }
        ext[(2, 2)] = int(1);
        let r = rank_preservation_blocks(&a, &ext).unwrap();
        assert_eq!(
            r,
            RankPreservation {
                by_rank: false,
                by_factorization: false
            }
        );
        ext[(0, 0)] = int(7);
        assert!(matches!(
            verify_rank_preserving_blocks(&a, &ext),
            Err(Error::BlockMismatch(_))
        ));
    }

    #[test]
    fn corrupted_extension_breaks_relation() {
        let m = build_moment_matrix(&univariate(&[1, 1, 1]), 1).unwrap();
        let rel = ColumnRelation::new(mi(&[2]), [(mi(&[1]), int(1))]).unwrap();
        let ext = propose_extension(&m, std::slice::from_ref(&rel)).unwrap();
        assert!(propagate_relation(&rel, &ext));
        let mut s = ext.moments();
        let bad = TruncatedSequence::from_fn(1, 4, |g| {
            if g.get(0) == 4 {
                int(5)
            } else {
                s.get(g).unwrap().clone()
            }
        })
        .unwrap();
        s = bad;
        let corrupted = build_moment_matrix(&s, 2).unwrap();
        assert!(!propagate_relation(&rel, &corrupted));
        assert!(annihilates(&Default::default(), &corrupted));
    }
}
