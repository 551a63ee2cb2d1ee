//! Atomic measures: Vandermonde matrices, weight recovery, classification
//! and the checks that tie a measure back to its moments.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{
    build_moment_matrix, rank_and_inertia, InertiaReport, MomentMatrix, TruncatedSequence,
};
use crate::matrix::RatMatrix;
use crate::multiindex::MultiIndex;
use crate::rational::to_f64;
use crate::spectral::{Tolerances, VarietyPoints};

/// Largest accepted condition estimate of the equilibrated Vandermonde
/// system.
pub const MAX_CONDITION: f64 = 1e12;
/// Atoms whose weight is smaller than this in modulus are dropped.
pub const ZERO_WEIGHT: f64 = 1e-12;
/// Largest accepted disagreement between the two weight formulas, relative
/// to the largest weight.
pub const WEIGHT_AGREEMENT: f64 = 1e-6;

/// Rows are points, columns are monomials: entry `(a, λ) = (z^(a))^λ`.
#[derive(Clone, Debug)]
pub struct Vandermonde {
    pub points: Vec<Vec<Complex64>>,
    pub columns: Vec<MultiIndex>,
    pub entries: DMatrix<Complex64>,
}

/// `z^γ = Π_j z_j^{γ_j}`.
pub fn monomial_value(z: &[Complex64], g: &MultiIndex) -> Complex64 {
    z.iter()
        .enumerate()
        .fold(Complex64::new(1.0, 0.0), |acc, (j, x)| {
            acc * x.powu(g.get(j))
        })
}

pub fn build_vandermonde(points: &[Vec<Complex64>], columns: &[MultiIndex]) -> Vandermonde {
    Vandermonde {
        points: points.to_vec(),
        columns: columns.to_vec(),
        entries: DMatrix::from_fn(points.len(), columns.len(), |a, l| {
            monomial_value(&points[a], &columns[l])
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<Complex64>,
    pub weight: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Positive,
    Signed,
    QuasiComplex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    pub classification: Classification,
    /// Positive and negative weight counts; only for real measures.
    pub jordan_plus: Option<usize>,
    pub jordan_minus: Option<usize>,
}

impl AtomicMeasure {
    /// Classifies and sorts the atoms.
    pub fn new(mut atoms: Vec<Atom>) -> AtomicMeasure {
        canonical_sort(&mut atoms);
        let real = atoms
            .iter()
            .all(|a| a.weight.im == 0.0 && a.point.iter().all(|z| z.im == 0.0));
        let classification = if !real {
            Classification::QuasiComplex
        } else if atoms.iter().all(|a| a.weight.re > 0.0) {
            Classification::Positive
        } else {
            Classification::Signed
        };
        let (jordan_plus, jordan_minus) = if real {
            (
                Some(atoms.iter().filter(|a| a.weight.re > 0.0).count()),
                Some(atoms.iter().filter(|a| a.weight.re < 0.0).count()),
            )
        } else {
            (None, None)
        };
        AtomicMeasure {
            atoms,
            classification,
            jordan_plus,
            jordan_minus,
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ_a ϱ_a (z^(a))^γ`.
    pub fn moment(&self, g: &MultiIndex) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| a.weight * monomial_value(&a.point, g))
            .sum()
    }
}

fn point_norm(p: &[Complex64]) -> f64 {
    p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Order by distance from the origin (compared at nine significant digits
/// so that rounding noise does not reorder ties), then lexicographically on
/// `(re, im)` of each coordinate.
pub fn canonical_order(a: &[Complex64], b: &[Complex64]) -> Ordering {
    let q = |p: &[Complex64]| {
        let r = point_norm(p);
        if r == 0.0 {
            0.0
        } else {
            let e = 10f64.powi(8 - r.log10().floor() as i32);
            (r * e).round() / e
        }
    };
    q(a).total_cmp(&q(b)).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

pub fn canonical_sort(atoms: &mut [Atom]) {
    atoms.sort_by(|a, b| canonical_order(&a.point, &b.point));
}

/// Weights from both formulas and how well they agree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightSolution {
    /// From `V_Bᵀ ϱ = (s_b)_{b∈B}`.
    pub weights: Vec<Complex64>,
    /// From `ϱ_a = 1 / (v_aᵀ M_B⁻¹ v_a)`, `v_a` the row of `V_B` for atom `a`.
    pub alternate: Vec<Complex64>,
    /// Largest difference between the two, relative to the largest weight.
    pub discrepancy: f64,
    /// Condition estimate of the row-equilibrated system.
    pub condition: f64,
}

/// Solves for the weights given the basis block `M_B` and the square
/// Vandermonde matrix on the basis monomials.
///
/// The first route reads `s_b` from the row of `M_B` labelled by the
/// constant monomial, which any basis of a nonzero flat extension contains.
/// The second uses `M_B = V_Bᵀ R V_B`, whose inverse gives each weight on its
/// own.
pub fn solve_weights(m_b: &RatMatrix, v_b: &Vandermonde) -> Result<WeightSolution> {
    let r = v_b.points.len();
    if r == 0 {
        return Ok(WeightSolution {
            weights: Vec::new(),
            alternate: Vec::new(),
            discrepancy: 0.0,
            condition: 1.0,
        });
    }
    if v_b.columns.len() != r || m_b.rows() != r || !m_b.is_square() {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: v_b.columns.len(),
        });
    }
    let d = v_b.points[0].len();
    let zero_pos = v_b
        .columns
        .iter()
        .position(|c| *c == MultiIndex::zero(d))
        .ok_or(Error::SingularBasisMatrix)?;
    // V_Bᵀ ϱ = col(s_b), rows scaled to unit max modulus
    let mut a = v_b.entries.transpose();
    let mut rhs: Vec<Complex64> = (0..r)
        .map(|b| Complex64::new(to_f64(&m_b[(zero_pos, b)]), 0.0))
        .collect();
    for i in 0..r {
        let s = a.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for j in 0..r {
                a[(i, j)] /= s;
            }
            rhs[i] /= s;
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &x| {
        (hi.max(x), lo.min(x))
    });
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::IllConditionedVandermonde(condition));
    }
    let weights: Vec<Complex64> = a
        .lu()
        .solve(&nalgebra::DVector::from_vec(rhs))
        .ok_or(Error::IllConditionedVandermonde(f64::INFINITY))?
        .iter()
        .copied()
        .collect();

    let inv = m_b.inverse().ok_or(Error::SingularBasisMatrix)?.to_f64();
    let invc = inv.map(|x| Complex64::new(x, 0.0));
    let alternate: Vec<Complex64> = (0..r)
        .map(|i| {
            let v = v_b.entries.row(i).transpose();
            let q = (v.transpose() * &invc * &v)[(0, 0)];
            Complex64::new(1.0, 0.0) / q
        })
        .collect();
    let scale = weights
        .iter()
        .map(|w| w.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let discrepancy = weights
        .iter()
        .zip(&alternate)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale;
    if discrepancy.is_nan() || discrepancy > WEIGHT_AGREEMENT {
        return Err(Error::WeightFormulasDisagree(discrepancy));
    }
    Ok(WeightSolution {
        weights,
        alternate,
        discrepancy,
        condition,
    })
}

/// Turns variety points and weights into a measure: weights on real points
/// lose imaginary noise, conjugate points get conjugate weights, and
/// negligible weights are dropped. Returns the measure and warnings.
pub fn assemble_measure(
    v: &VarietyPoints,
    weights: &[Complex64],
    tol: &Tolerances,
) -> (AtomicMeasure, Vec<String>) {
    let mut warnings = Vec::new();
    let mut w = weights.to_vec();
    let scale = w.iter().map(|x| x.norm()).fold(1.0, f64::max);
    for a in 0..w.len() {
        let b = v.pairing[a];
        if b == a {
            if w[a].im.abs() > tol.matching * scale {
                warnings.push(format!(
                    "weight of real point {a} has imaginary part {:.3e}",
                    w[a].im
                ));
            }
            w[a].im = 0.0;
        } else if a < b {
            let gap = (w[a] - w[b].conj()).norm();
            if gap > tol.matching * scale {
                warnings.push(format!(
                    "weights of conjugate points {a} and {b} differ from conjugates by {gap:.3e}"
                ));
            }
            let avg = (w[a] + w[b].conj()) * 0.5;
            w[a] = avg;
            w[b] = avg.conj();
        }
    }
    let mut atoms = Vec::new();
    for (a, weight) in w.into_iter().enumerate() {
        if weight.norm() < ZERO_WEIGHT {
            warnings.push(format!(
                "dropped atom {a} with negligible weight {:.3e}",
                weight.norm()
            ));
            continue;
        }
        atoms.push(Atom {
            point: v.points[a].clone(),
            weight,
        });
    }
    (AtomicMeasure::new(atoms), warnings)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    /// `max_γ |Σ ϱ z^γ − s_γ| / max(1, |s_γ|)`.
    pub residual: f64,
    /// Largest imaginary part of a reconstructed moment, same scaling.
    pub imaginary: f64,
}

/// Compares the measure's moments with every moment of `s`.
pub fn verify_moments(mu: &AtomicMeasure, s: &TruncatedSequence) -> MomentCheck {
    let mut out = MomentCheck {
        residual: 0.0,
        imaginary: 0.0,
    };
    for (g, v) in s.iter() {
        let target = to_f64(v);
        let got = mu.moment(g);
        let denom = target.abs().max(1.0);
        out.residual = out
            .residual
            .max((got - Complex64::new(target, 0.0)).norm() / denom);
        out.imaginary = out.imaginary.max(got.im.abs() / denom);
    }
    out
}

/// Entrywise distance between `Vᵀ R V` and `M(n)`, relative to
/// `max(1, |entry|)`.
pub fn factorization_residual(mu: &AtomicMeasure, m: &MomentMatrix) -> f64 {
    let points: Vec<Vec<Complex64>> = mu.atoms.iter().map(|a| a.point.clone()).collect();
    let v = build_vandermonde(&points, m.labels()).entries;
    let rv = DMatrix::from_fn(v.nrows(), v.ncols(), |a, l| v[(a, l)] * mu.atoms[a].weight);
    let rebuilt = v.transpose() * rv;
    let mut worst: f64 = 0.0;
    for i in 0..m.size() {
        for j in 0..m.size() {
            let want = to_f64(&m.entries()[(i, j)]);
            let diff = (rebuilt[(i, j)] - Complex64::new(want, 0.0)).norm();
            worst = worst.max(diff / want.abs().max(1.0));
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JordanCheck {
    pub plus: usize,
    pub minus: usize,
    pub i_plus: usize,
    pub i_minus: usize,
    pub matches: bool,
}

/// Positive and negative weight counts of a real measure against an
/// inertia.
pub fn jordan_counts(mu: &AtomicMeasure, inertia: &InertiaReport) -> Result<JordanCheck> {
    if mu.classification == Classification::QuasiComplex {
        return Err(Error::ClassificationMismatch(
            "Jordan counts need a measure with real atoms and weights".into(),
        ));
    }
    let plus = mu.atoms.iter().filter(|a| a.weight.re > 0.0).count();
    let minus = mu.atoms.iter().filter(|a| a.weight.re < 0.0).count();
    Ok(JordanCheck {
        plus,
        minus,
        i_plus: inertia.i_plus,
        i_minus: inertia.i_minus,
        matches: plus == inertia.i_plus && minus == inertia.i_minus,
    })
}

/// `rank M(⌊m/2⌋) ≤ card supp μ`.
pub fn rank_support_bound(s: &TruncatedSequence, mu: &AtomicMeasure) -> Result<bool> {
    let m = build_moment_matrix(s, s.degree() / 2)?;
    Ok(rank_and_inertia(&m).rank <= mu.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v).unwrap()
    }

    #[test]
    fn vandermonde_entries() {
        let v = build_vandermonde(
            &[vec![c(1.0, 0.0), c(2.0, 0.0)]],
            &[mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1])],
        );
        let row: Vec<f64> = v.entries.row(0).iter().map(|z| z.re).collect();
        assert_eq!(row, vec![1.0, 1.0, 2.0, 2.0]);
        let v = build_vandermonde(&[vec![c(0.0, 0.0)]], &[mi(&[0])]);
        assert_eq!(v.entries[(0, 0)], c(1.0, 0.0));
    }

    #[test]
    fn delta_at_origin() {
        let v = build_vandermonde(&[vec![c(0.0, 0.0), c(0.0, 0.0)]], &[mi(&[0, 0])]);
        let w = solve_weights(&RatMatrix::from_rows(vec![vec![int(1)]]), &v).unwrap();
        assert!((w.weights[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(w.discrepancy < 1e-15);
    }

    #[test]
    fn empty_measure_matches_zero_sequence() {
        let s = TruncatedSequence::zero(2, 4).unwrap();
        let mu = AtomicMeasure::new(vec![]);
        assert_eq!(verify_moments(&mu, &s).residual, 0.0);
        assert!(rank_support_bound(&s, &mu).unwrap());
    }

    #[test]
    fn jordan_of_signed_pair() {
        let mu = AtomicMeasure::new(vec![
            Atom {
                point: vec![c(0.0, 0.0)],
                weight: c(1.0, 0.0),
            },
            Atom {
                point: vec![c(1.0, 0.0)],
                weight: c(-1.0, 0.0),
            },
        ]);
        assert_eq!(mu.classification, Classification::Signed);
        let inertia = InertiaReport {
            rank: 2,
            i_plus: 1,
            i_minus: 1,
        };
        assert!(jordan_counts(&mu, &inertia).unwrap().matches);
        let q = AtomicMeasure::new(vec![Atom {
            point: vec![c(0.0, 1.0)],
            weight: c(1.0, 0.0),
        }]);
        assert!(jordan_counts(&q, &inertia).is_err());
    }

    #[test]
    fn one_atom_cannot_carry_rank_two() {
        let s = TruncatedSequence::from_fn(1, 2, |g| int([1, 0, 1][g.get(0) as usize])).unwrap();
        let mu = AtomicMeasure::new(vec![Atom {
            point: vec![c(0.0, 0.0)],
            weight: c(1.0, 0.0),
        }]);
        assert!(!rank_support_bound(&s, &mu).unwrap());
    }

    #[test]
    fn canonical_order_puts_origin_first() {
        let mut atoms = vec![
            Atom {
                point: vec![c(0.0, -1.0)],
                weight: c(1.0, 0.0),
            },
            Atom {
                point: vec![c(0.0, 1.0)],
                weight: c(1.0, 0.0),
            },
            Atom {
                point: vec![c(0.0, 0.0)],
                weight: c(1.0, 0.0),
            },
            Atom {
                point: vec![c(-1.0, 0.0)],
                weight: c(1.0, 0.0),
            },
        ];
        canonical_sort(&mut atoms);
        let pts: Vec<Complex64> = atoms.iter().map(|a| a.point[0]).collect();
        assert_eq!(
            pts,
            vec![c(0.0, 0.0), c(-1.0, 0.0), c(0.0, -1.0), c(0.0, 1.0)]
        );
    }
}
