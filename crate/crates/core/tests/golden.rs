use std::path::PathBuf;
use std::time::{Duration, Instant};

use flatmoment::{
    parse_problem, solve, Classification, Problem, SolveOptions, SolveReport, SolveStatus,
};
use num_complex::Complex64;

fn load(name: &str) -> Problem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.json"));
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(name: &str, budget: Duration) -> SolveReport {
    let p = load(name);
    let t = Instant::now();
    let report = solve(&p.sequence, &p.relations, &SolveOptions::default());
    let elapsed = t.elapsed();
    // Debug builds are slower by a large factor, so only release timings are enforced.
    if !cfg!(debug_assertions) {
        assert!(elapsed < budget, "{name} took {elapsed:?}");
    }
    report
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// For each expected point, the index of the closest computed atom. Panics
/// unless the matching is a bijection within `tol`.
fn match_points(report: &SolveReport, expected: &[Vec<Complex64>], tol: f64) -> Vec<usize> {
    let atoms = report.atoms();
    assert_eq!(atoms.len(), expected.len());
    let mut used = vec![false; atoms.len()];
    expected
        .iter()
        .map(|e| {
            let (i, d) = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, a)| (i, dist(&a.point, e)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            assert!(d < tol, "no atom near {e:?}: closest at {d:e}");
            used[i] = true;
            i
        })
        .collect()
}

#[test]
fn univariate_quasi_complex_example() {
    let report = run("quasi_complex_line", Duration::from_secs(1));
    assert_eq!(report.status, SolveStatus::Solved, "{:?}", report.failure);
    let r3 = 3f64.sqrt();
    let points = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, r3), c(0.0, -r3)].map(|z| vec![z]);
    let weights = [
        c(0.125, 0.0),
        c(-0.125, 0.0),
        c(0.0, r3 / 24.0),
        c(0.0, -r3 / 24.0),
    ];
    let idx = match_points(&report, &points, 1e-10);
    for (k, &i) in idx.iter().enumerate() {
        let w = report.atoms()[i].weight;
        assert!(
            (w - weights[k]).norm() < 1e-10,
            "weight {w} vs {}",
            weights[k]
        );
    }
    assert!(report.moment_residual.unwrap() < 1e-12);
    assert_eq!(
        report.measure.as_ref().unwrap().classification,
        Classification::QuasiComplex
    );
}

#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const TWELVE_POINTS: [[f64; 4]; 12] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.6585688908335371, 0.0, 0.2856298787956733, 0.0],
    [1.367436555562332, 0.0, 2.556946004386548, 0.0],
    [1.698286037615674, 0.0, 4.898154923194823, 0.0],
    [1.995426735187136, 0.0, 7.945246215103228, 0.0],
    [1.161581775737723, 2.514035960495372, -20.45761353392138, -5.713297928140102],
    [-1.369713057599855, 2.577649039498679, 24.73251126202266, -2.618718696770263],
    [-0.9983878163914217, 0.0, -0.9951712423919440, 0.0],
    [-2.001787809774772, 0.0, -8.021472900594320, 0.0],
    [-2.303280029308220, 0.0, -12.21912833469656, 0.0],
    [-1.369713057599855, -2.577649039498679, 24.73251126202266, 2.618718696770263],
    [1.161581775737723, -2.514035960495372, -20.45761353392138, 5.713297928140102],
];

#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const TWELVE_WEIGHTS: [[f64; 2]; 12] = [
    [0.75251705199900, 0.0],
    [8.157396366263352, 0.0],
    [1.23049608230004, 0.0],
    [-0.19997425644493, 0.0],
    [1.049869493443501, 0.0],
    [-4.4036738951e-7, 0.1181009400413e-5],
    [4.91682149450e-7, 5.3431516336e-8],
    [1.011062561963828, 0.0],
    [1.003988449908174, 0.0],
    [0.9946441479402077, 0.0],
    [4.91682148481e-7, -5.3431516336e-8],
    [-4.4036739099e-7, -0.1181009399657e-5],
];

#[test]
fn twelve_atom_quasi_complex_example() {
    let report = run("twelve_atoms", Duration::from_secs(30));
    assert_eq!(report.status, SolveStatus::Solved, "{:?}", report.failure);
    let ranks: Vec<usize> = report.stages.iter().map(|s| s.rank).collect();
    assert_eq!(ranks, [8, 11, 12, 12]);
    let cert = report.certification.as_ref().unwrap();
    assert!(cert.commuting);
    assert_eq!(cert.diagonalizable, [true, true]);
    let expected: Vec<Vec<Complex64>> = TWELVE_POINTS
        .iter()
        .map(|p| vec![c(p[0], p[1]), c(p[2], p[3])])
        .collect();
    let idx = match_points(&report, &expected, 1e-6);
    let origin = &report.atoms()[idx[0]];
    assert!(dist(&origin.point, &[c(0.0, 0.0), c(0.0, 0.0)]) < 1e-10);
    for (k, &i) in idx.iter().enumerate() {
        let w = report.atoms()[i].weight;
        let e = c(TWELVE_WEIGHTS[k][0], TWELVE_WEIGHTS[k][1]);
        assert!((w - e).norm() < 1e-6, "weight {k}: {w} vs {e}");
    }
    assert_eq!(report.input.moments, 28);
    assert!(report.moment_residual.unwrap() < 1e-6);
    assert_eq!(
        report.measure.as_ref().unwrap().classification,
        Classification::QuasiComplex
    );
}

#[rustfmt::skip]
#[allow(clippy::excessive_precision)]
const FIFTEEN_POINTS: [[f64; 2]; 12] = [
    [0.7624922873183873, 0.4339289106669871],
    [0.7624922873183873, 5.285799329792782],
    [0.7624922873183873, -2.297920726423880],
    [1.945840648481577, 6.400158217920288],
    [1.945840648481577, 8.202371056743452],
    [1.945840648481577, -0.8264236004499402],
    [-1.455383893896135, -0.6507966134719535],
    [-1.455383893896135, -4.542562147613256],
    [-1.455383893896135, -10.79125031050597],
    [-2.252949041903829, -0.5871708139396136],
    [-2.252949041903829, -10.05498263445494],
    [-2.252949041903829, -12.32115066826395],
];

const FIFTEEN_WEIGHTS: [f64; 15] = [
    1.1485082102759,
    0.67540495615813,
    0.13925685438668,
    8.69674628194238,
    -0.27487370942507,
    -0.31699335231750,
    0.45867407020225,
    0.78731658438486,
    0.013888883967842,
    0.21808644955274,
    0.96056711695518,
    -0.06450309890826,
    -0.013834083055744,
    0.74414479745023,
    0.827610038430212,
];

#[test]
fn fifteen_atom_signed_example() {
    let report = run("fifteen_atoms", Duration::from_secs(60));
    assert_eq!(report.status, SolveStatus::Solved, "{:?}", report.failure);
    let ranks: Vec<usize> = report.stages.iter().map(|s| s.rank).collect();
    assert_eq!(ranks, [8, 12, 14, 15, 15]);
    assert_eq!(report.stabilized_at, Some(6));
    let mu = report.measure.as_ref().unwrap();
    assert_eq!(mu.classification, Classification::Signed);
    for a in &mu.atoms {
        assert!(a.point.iter().all(|z| z.im.abs() < 1e-8));
        assert!(a.weight.im.abs() < 1e-8);
    }
    let root = 889f64.sqrt();
    let mut expected = vec![
        vec![c(0.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c((-13.0 + root) / 8.0, 0.0)],
        vec![c(0.0, 0.0), c((-13.0 - root) / 8.0, 0.0)],
    ];
    expected.extend(
        FIFTEEN_POINTS
            .iter()
            .map(|p| vec![c(p[0], 0.0), c(p[1], 0.0)]),
    );
    let idx = match_points(&report, &expected, 1e-6);
    assert!(dist(&mu.atoms[idx[1]].point, &expected[1]) < 1e-10);
    for (k, &i) in idx.iter().enumerate() {
        let w = mu.atoms[i].weight.re;
        let e = FIFTEEN_WEIGHTS[k];
        assert!(
            (w - e).abs() < 1e-6 * e.abs().max(1.0),
            "weight {k}: {w} vs {e}"
        );
    }
    let negative = mu.atoms.iter().filter(|a| a.weight.re < 0.0).count();
    assert_eq!(negative, 4);
    let j = report.jordan.as_ref().unwrap();
    assert!(j.matches);
    assert_eq!((j.plus, j.minus), (11, 4));
    let inertia = report.basis_inertia.unwrap();
    assert_eq!((inertia.i_plus, inertia.i_minus), (11, 4));
    assert!(report.moment_residual.unwrap() < 1e-6);
    assert!(report.rank_support_bound.unwrap());
}

#[test]
fn recursive_relations_stabilize_early() {
    let report = run("twelve_atoms_recursive", Duration::from_secs(30));
    let ranks: Vec<usize> = report.stages.iter().map(|s| s.rank).collect();
    assert_eq!(ranks, [8, 9, 9], "{:?}", report.failure);
}

#[test]
fn jordan_block_has_no_minimal_measure() {
    let report = run("jordan_block", Duration::from_secs(1));
    assert_eq!(report.status, SolveStatus::NoMinimalMeasure);
    assert_eq!(report.exit_code(), 4);
    assert_eq!(report.certification.unwrap().diagonalizable, [false]);
    assert!(report.measure.is_none());
}

#[test]
fn quartic_three_atoms() {
    let report = run("quartic", Duration::from_secs(5));
    assert_eq!(report.status, SolveStatus::Solved, "{:?}", report.failure);
    let expected = [
        vec![c(0.0, 0.0), c(0.0, 0.0)],
        vec![c(1.0, 0.0), c(2.0, 0.0)],
        vec![c(-1.0, 0.0), c(0.5, 0.0)],
    ];
    let idx = match_points(&report, &expected, 1e-9);
    let weights = [1.0, 2.0, -0.5];
    for (k, &i) in idx.iter().enumerate() {
        assert!((report.atoms()[i].weight - c(weights[k], 0.0)).norm() < 1e-9);
    }
}

#[test]
fn zero_sequence_gives_empty_measure() {
    let report = run("zero", Duration::from_secs(1));
    assert_eq!(report.status, SolveStatus::Solved, "{:?}", report.failure);
    assert!(report.atoms().is_empty());
}
