//! Shift matrices of a flat extension, their exact certification, and the
//! numerical extraction of the common eigenpoints.
//!
//! For a basis `B` of the column space, `T_j = M_B⁻¹ M_{B,B+e_j}` represents
//! multiplication by `x_j`. On a common eigenvector of the transposes the
//! eigenvalue of `T_jᵀ` is the `j`-th coordinate of a point of the variety.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::ExtensionChain;
use crate::hankel::{submatrix, MomentMatrix};
use crate::matrix::RatMatrix;
use crate::multiindex::MultiIndex;
use crate::poly::Poly;
use crate::rational::{int, Rational};
use num_traits::Zero;

/// Retry budget for the random combination.
const MAX_ATTEMPTS: u64 = 10;
/// Iteration cap for the real Schur decomposition.
const SCHUR_MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigen-residuals and the reality test.
    pub eig: f64,
    /// Matching points, conjugate partners, and weight formulas.
    pub matching: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig: 1e-10,
            matching: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ShiftSystem {
    pub d: usize,
    pub basis: Vec<MultiIndex>,
    /// `T_1, …, T_d`, exact.
    pub t: Vec<RatMatrix>,
    pub commuting: bool,
    pub minimal_polynomials: Vec<Poly>,
    pub diagonalizable: Vec<bool>,
}

impl ShiftSystem {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Commuting and every `T_j` diagonalizable.
    pub fn certified(&self) -> bool {
        self.commuting && self.diagonalizable.iter().all(|&b| b)
    }
}

/// Shift matrices at the stabilized stage of a chain.
pub fn shift_matrices(chain: &ExtensionChain, basis: &[MultiIndex]) -> Result<ShiftSystem> {
    let (_, next) = chain.stabilized_pair();
    shift_matrices_from(next, basis)
}

/// Shift matrices read from `M(N+1)` for a basis of degree at most `N`.
pub fn shift_matrices_from(next: &MomentMatrix, basis: &[MultiIndex]) -> Result<ShiftSystem> {
    let d = next.dim();
    let mb = submatrix(next, basis, basis)?;
    let inv = mb.inverse().ok_or(Error::SingularBasisMatrix)?;
    let mut t = Vec::with_capacity(d);
    for j in 0..d {
        let e = MultiIndex::unit(d, j);
        let shifted: Vec<MultiIndex> = basis.iter().map(|b| b.plus(&e)).collect();
        t.push(inv.mul(&submatrix(next, basis, &shifted)?));
    }
    let commuting = (0..d).all(|j| (j + 1..d).all(|k| t[j].mul(&t[k]) == t[k].mul(&t[j])));
    let minimal_polynomials: Vec<Poly> = t.iter().map(minimal_polynomial).collect();
    let diagonalizable = minimal_polynomials
        .iter()
        .map(Poly::is_squarefree)
        .collect();
    Ok(ShiftSystem {
        d,
        basis: basis.to_vec(),
        t,
        commuting,
        minimal_polynomials,
        diagonalizable,
    })
}

/// Monic polynomial of least degree vanishing on the vector under `t`.
///
/// Krylov vectors are reduced against the earlier ones as they arrive; each
/// reduced vector remembers the polynomial in `t` that produced it, so the
/// first vector that reduces to zero yields the annihilator.
fn krylov_annihilator(t: &RatMatrix, v: Vec<Rational>) -> Poly {
    let mut reduced: Vec<(usize, Vec<Rational>, Poly)> = Vec::new();
    let mut w = v;
    for k in 0..=t.rows() {
        let mut vec = w.clone();
        let mut coeffs = vec![Rational::zero(); k + 1];
        coeffs[k] = int(1);
        let mut comb = Poly::new(coeffs);
        for (p, u, c) in &reduced {
            if vec[*p].is_zero() {
                continue;
            }
            let f = vec[*p].clone();
            for (x, y) in vec.iter_mut().zip(u) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
            comb = comb.sub(&c.scale(&f));
        }
        match vec.iter().position(|x| !x.is_zero()) {
            None => return comb,
            Some(p) => {
                let inv = vec[p].recip();
                for x in vec.iter_mut() {
                    *x *= &inv;
                }
                reduced.push((p, vec, comb.scale(&inv)));
            }
        }
        w = t.mul_vec(&w);
    }
    unreachable!("more than r independent vectors in dimension r")
}

/// Exact minimal polynomial of a square rational matrix.
///
/// Krylov annihilators of a few seeded random vectors are combined by lcm.
/// Unless that already has full degree, it is confirmed by evaluating it at
/// the matrix, falling back to all unit vectors (whose annihilators' lcm is
/// always the answer).
pub fn minimal_polynomial(t: &RatMatrix) -> Poly {
    let r = t.rows();
    if r == 0 {
        return Poly::one();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d696e);
    let mut mu = Poly::one();
    // Every annihilator divides the minimal polynomial, whose degree is at
    // most r, so reaching degree r settles it.
    for _ in 0..2 {
        let v: Vec<Rational> = (0..r).map(|_| int(rng.random_range(-5..=5))).collect();
        mu = mu.lcm(&krylov_annihilator(t, v));
        if mu.degree() == Some(r) {
            return mu;
        }
    }
    if mu.eval_matrix(t).is_zero() {
        return mu;
    }
    for i in 0..r {
        let v: Vec<Rational> = (0..r).map(|k| int((k == i) as i64)).collect();
        mu = mu.lcm(&krylov_annihilator(t, v));
    }
    debug_assert!(mu.eval_matrix(t).is_zero());
    mu
}

/// True iff the minimal polynomial is squarefree.
pub fn certify_diagonalizable(t: &RatMatrix) -> bool {
    minimal_polynomial(t).is_squarefree()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarietyPoints {
    pub points: Vec<Vec<Complex64>>,
    /// `pairing[a]` is the index of the conjugate of point `a`.
    pub pairing: Vec<usize>,
    pub all_real: bool,
    pub tolerance: Tolerances,
    /// Largest scaled eigen-residual over all points and coordinates.
    pub max_residual: f64,
    /// Largest distance between a coordinate spectrum and the eigenvalues
    /// of the corresponding `T_j` computed separately.
    pub spectrum_mismatch: f64,
    /// Seed offset of the combination that succeeded.
    pub attempts: u64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarietyClass {
    Real,
    QuasiComplex,
}

fn is_real_point(p: &[Complex64], tol: f64) -> bool {
    let mag = p.iter().map(|z| z.norm()).fold(1.0, f64::max);
    p.iter().all(|z| z.im.abs() < tol * mag)
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Involution sending each point to its complex conjugate. Real points
/// (imaginary parts below `tol_real`, relative) are their own partners; a
/// nonreal point must have a distinct partner within `tol_match`.
pub fn conjugate_pairing(
    points: &[Vec<Complex64>],
    tol_real: f64,
    tol_match: f64,
) -> Result<Vec<usize>> {
    let n = points.len();
    let mut pairing = vec![usize::MAX; n];
    for a in 0..n {
        if pairing[a] != usize::MAX {
            continue;
        }
        if is_real_point(&points[a], tol_real) {
            pairing[a] = a;
            continue;
        }
        let conj: Vec<Complex64> = points[a].iter().map(|z| z.conj()).collect();
        let mag = conj.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let best = (0..n)
            .filter(|&b| b != a && pairing[b] == usize::MAX)
            .map(|b| (b, distance(&conj, &points[b])))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((b, dist)) if dist <= tol_match * mag => {
                pairing[a] = b;
                pairing[b] = a;
            }
            _ => return Err(Error::ConjugateSymmetryViolated(a)),
        }
    }
    Ok(pairing)
}

/// Real when every point is real within `tol`; otherwise the conjugate
/// pairing must exist.
pub fn classify_variety(v: &VarietyPoints, tol: f64) -> Result<VarietyClass> {
    if v.points.iter().all(|p| is_real_point(p, tol)) {
        return Ok(VarietyClass::Real);
    }
    conjugate_pairing(&v.points, tol, v.tolerance.matching.max(tol))?;
    Ok(VarietyClass::QuasiComplex)
}

fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn eigenvalues(m: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Unit eigenvector of `a` for an eigenvalue near `lambda`, by inverse
/// iteration with a slightly offset shift.
fn inverse_iteration(
    a: &DMatrix<Complex64>,
    lambda: Complex64,
    scale: f64,
    start: &DVector<Complex64>,
) -> Option<DVector<Complex64>> {
    let n = a.nrows();
    for bump in [1e-12, 1e-10, 1e-8] {
        let sigma = lambda + Complex64::new(bump * scale, 0.0);
        let shifted = a - DMatrix::from_diagonal_element(n, n, sigma);
        let lu = shifted.lu();
        let mut x = start.clone();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    let nrm = y.norm();
                    if nrm == 0.0 || !nrm.is_finite() {
                        ok = false;
                        break;
                    }
                    x = y / Complex64::new(nrm, 0.0);
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(x);
        }
    }
    None
}

/// Greedy matching distance between two multisets of complex numbers of
/// equal size, relative to `max(1, |z|)`.
fn multiset_mismatch(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let best = (0..b.len())
            .filter(|&i| !used[i])
            .min_by(|&i, &k| (b[i] - x).norm().total_cmp(&(b[k] - x).norm()));
        match best {
            Some(i) => {
                used[i] = true;
                worst = worst.max((b[i] - x).norm() / x.norm().max(1.0));
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Common eigenpoints of the shift matrices.
///
/// A seeded random combination `Σ c_j T_jᵀ` is eigendecomposed in double
/// precision; its eigenvectors are common eigenvectors of all `T_jᵀ` when
/// the combination has distinct eigenvalues, and the coordinates are read
/// off as Rayleigh quotients. Clustered combinations and failed residual
/// checks are retried with the next seed.
pub fn simultaneous_eigenpoints(
    sys: &ShiftSystem,
    tol: &Tolerances,
    seed: u64,
) -> Result<VarietyPoints> {
    let r = sys.rank();
    if r == 0 {
        return Ok(VarietyPoints {
            points: Vec::new(),
            pairing: Vec::new(),
            all_real: true,
            tolerance: *tol,
            max_residual: 0.0,
            spectrum_mismatch: 0.0,
            attempts: 0,
            warnings: Vec::new(),
        });
    }
    let tt: Vec<DMatrix<f64>> = sys.t.iter().map(|t| t.to_f64().transpose()).collect();
    let norms: Vec<f64> = tt.iter().map(|m| frobenius(m).max(1.0)).collect();
    let ttc: Vec<DMatrix<Complex64>> = tt
        .iter()
        .map(|m| m.map(|x| Complex64::new(x, 0.0)))
        .collect();
    let mut last_err = Error::NotSimultaneouslyDiagonalizable("no attempt made".into());
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let coeffs: Vec<f64> = (0..sys.d)
            .map(|_| {
                let c: f64 = rng.random_range(0.5..1.5);
                if rng.random_bool(0.5) {
                    c
                } else {
                    -c
                }
            })
            .collect();
        let mut a = DMatrix::<f64>::zeros(r, r);
        for (c, m) in coeffs.iter().zip(&tt) {
            a += m * *c;
        }
        let Some(lambdas) = eigenvalues(&a) else {
            last_err = Error::NotSimultaneouslyDiagonalizable(
                "eigenvalue iteration did not converge".into(),
            );
            continue;
        };
        let scale = frobenius(&a).max(1.0);
        let min_gap = (0..r)
            .flat_map(|i| (i + 1..r).map(move |k| (i, k)))
            .map(|(i, k)| (lambdas[i] - lambdas[k]).norm())
            .fold(f64::INFINITY, f64::min);
        if min_gap < tol.eig.sqrt() * scale {
            last_err = Error::NotSimultaneouslyDiagonalizable(format!(
                "combination eigenvalues cluster (gap {min_gap:.3e})"
            ));
            continue;
        }
        let start = DVector::from_fn(r, |_, _| Complex64::new(rng.random_range(0.5..1.5), 0.0));
        let ac = a.map(|x| Complex64::new(x, 0.0));
        let mut points = Vec::with_capacity(r);
        let mut max_residual: f64 = 0.0;
        let mut failed = None;
        for lambda in &lambdas {
            let Some(xi) = inverse_iteration(&ac, *lambda, scale, &start) else {
                failed = Some(format!("no eigenvector for eigenvalue {lambda}"));
                break;
            };
            let mut point = Vec::with_capacity(sys.d);
            for (j, m) in ttc.iter().enumerate() {
                let y = m * &xi;
                let z = xi.dotc(&y) / xi.dotc(&xi);
                let res = (&y - &xi * z).norm() / xi.norm() / norms[j];
                max_residual = max_residual.max(res);
                point.push(z);
            }
            points.push(point);
        }
        if let Some(msg) = failed {
            last_err = Error::NotSimultaneouslyDiagonalizable(msg);
            continue;
        }
        if max_residual >= tol.eig {
            last_err = Error::NotSimultaneouslyDiagonalizable(format!(
                "eigen-residual {max_residual:.3e} exceeds tolerance {:.1e}",
                tol.eig
            ));
            continue;
        }
        let pairing = match conjugate_pairing(&points, tol.eig, tol.matching) {
            Ok(p) => p,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        for a in 0..r {
            let b = pairing[a];
            if b == a {
                for z in points[a].iter_mut() {
                    z.im = 0.0;
                }
            } else if a < b {
                let avg: Vec<Complex64> = points[a]
                    .iter()
                    .zip(&points[b])
                    .map(|(x, y)| (x + y.conj()) * 0.5)
                    .collect();
                points[b] = avg.iter().map(|z| z.conj()).collect();
                points[a] = avg;
            }
        }
        let mut warnings = Vec::new();
        for a in 0..r {
            for b in a + 1..r {
                let mag = points[a].iter().map(|z| z.norm()).fold(1.0, f64::max);
                if distance(&points[a], &points[b]) < tol.matching * mag {
                    warnings.push(format!("points {a} and {b} coincide within tolerance"));
                }
            }
        }
        let mut spectrum_mismatch: f64 = 0.0;
        for (j, m) in tt.iter().enumerate() {
            let coord: Vec<Complex64> = points.iter().map(|p| p[j]).collect();
            match eigenvalues(m) {
                Some(ev) => {
                    spectrum_mismatch = spectrum_mismatch.max(multiset_mismatch(&coord, &ev))
                }
                None => warnings.push(format!("eigenvalues of T_{} did not converge", j + 1)),
            }
        }
        let all_real = pairing.iter().enumerate().all(|(a, &b)| a == b);
        return Ok(VarietyPoints {
            points,
            pairing,
            all_real,
            tolerance: *tol,
            max_residual,
            spectrum_mismatch,
            attempts: attempt,
            warnings,
        });
    }
    Err(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| int(v)).collect())
                .collect(),
        )
    }

    fn system(t: Vec<RatMatrix>) -> ShiftSystem {
        let r = t[0].rows();
        let d = t.len();
        let mp: Vec<Poly> = t.iter().map(minimal_polynomial).collect();
        ShiftSystem {
            d,
            basis: (0..r)
                .map(|i| MultiIndex::axis_power(d, 0, i as u32).unwrap())
                .collect(),
            commuting: true,
            diagonalizable: mp.iter().map(Poly::is_squarefree).collect(),
            minimal_polynomials: mp,
            t,
        }
    }

    #[test]
    fn certification_examples() {
        let companion = m(&[&[0, 0, 0, 3], &[1, 0, 0, 0], &[0, 1, 0, -2], &[0, 0, 1, 0]]);
        assert_eq!(minimal_polynomial(&companion).degree(), Some(4));
        assert!(certify_diagonalizable(&companion));
        assert!(!certify_diagonalizable(&m(&[&[0, 1], &[0, 0]])));
        assert!(certify_diagonalizable(&RatMatrix::identity(3)));
        assert_eq!(
            minimal_polynomial(&RatMatrix::identity(3)).degree(),
            Some(1)
        );
    }

    #[test]
    fn repeated_eigenvalue_is_still_diagonalizable() {
        let t = RatMatrix::from_rows(vec![
            vec![rat(1, 2), int(0), int(0)],
            vec![int(0), rat(1, 2), int(0)],
            vec![int(0), int(0), int(3)],
        ]);
        assert_eq!(minimal_polynomial(&t).degree(), Some(2));
        assert!(certify_diagonalizable(&t));
    }

    #[test]
    fn diagonal_toy() {
        let sys = system(vec![m(&[&[1, 0], &[0, 2]]), m(&[&[3, 0], &[0, 4]])]);
        let v = simultaneous_eigenpoints(&sys, &Tolerances::default(), 0).unwrap();
        let mut pts: Vec<(f64, f64)> = v.points.iter().map(|p| (p[0].re, p[1].re)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!((pts[0].0 - 1.0).abs() < 1e-12 && (pts[0].1 - 3.0).abs() < 1e-12);
        assert!((pts[1].0 - 2.0).abs() < 1e-12 && (pts[1].1 - 4.0).abs() < 1e-12);
        assert!(v.all_real);
        assert_eq!(classify_variety(&v, 1e-10).unwrap(), VarietyClass::Real);
    }

    #[test]
    fn companion_roots() {
        let companion = m(&[&[0, 0, 0, 3], &[1, 0, 0, 0], &[0, 1, 0, -2], &[0, 0, 1, 0]]);
        let v =
            simultaneous_eigenpoints(&system(vec![companion]), &Tolerances::default(), 0).unwrap();
        let s3 = 3f64.sqrt();
        for want in [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, s3),
            Complex64::new(0.0, -s3),
        ] {
            assert!(
                v.points.iter().any(|p| (p[0] - want).norm() < 1e-10),
                "{want}"
            );
        }
        assert!(!v.all_real);
        assert_eq!(
            classify_variety(&v, 1e-10).unwrap(),
            VarietyClass::QuasiComplex
        );
        for (a, &b) in v.pairing.iter().enumerate() {
            assert_eq!(v.pairing[b], a);
            assert_eq!(v.points[b][0], v.points[a][0].conj());
        }
    }

    #[test]
    fn unpaired_nonreal_point_is_rejected() {
        let pts = vec![
            vec![Complex64::new(1.0, 1.0)],
            vec![Complex64::new(2.0, 0.0)],
        ];
        assert_eq!(
            conjugate_pairing(&pts, 1e-10, 1e-8),
            Err(Error::ConjugateSymmetryViolated(0))
        );
        let single = VarietyPoints {
            points: vec![vec![Complex64::new(0.0, 0.0); 2]],
            pairing: vec![0],
            all_real: true,
            tolerance: Tolerances::default(),
            max_residual: 0.0,
            spectrum_mismatch: 0.0,
            attempts: 0,
            warnings: vec![],
        };
        assert_eq!(
            classify_variety(&single, 1e-10).unwrap(),
            VarietyClass::Real
        );
    }
}
