//! End-to-end pipeline: moment matrix, extension chain, shift matrices,
//! eigenpoints, weights and verification, collected in a report.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::extension::{extend_chain, verify_rank_preserving, ChainOptions, ExtensionChain};
use crate::hankel::{
    build_moment_matrix, column_basis, inertia_of, submatrix, InertiaReport, TruncatedSequence,
};
use crate::measure::{
    assemble_measure, build_vandermonde, factorization_residual, jordan_counts, rank_support_bound,
    solve_weights, verify_moments, AtomicMeasure, Classification, JordanCheck,
};
use crate::multiindex::MultiIndex;
use crate::relation::ColumnRelation;
use crate::spectral::{shift_matrices, simultaneous_eigenpoints, Tolerances, VarietyClass};

/// Moment residual above which a solved report carries a warning.
const RESIDUAL_WARNING: f64 = 1e-6;

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub tol: Tolerances,
    pub seed: u64,
    /// Largest chain degree; defaults to `n·d + 2`.
    pub max_degree: Option<usize>,
    /// Require every relation to be univariate in one variable.
    pub axis_relations: bool,
    /// Set moments the relations leave free to zero.
    pub fill_free: bool,
    /// Accept an odd moment degree by dropping the top degree.
    pub truncate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    NoMinimalMeasure,
    InconsistentRelations,
    Error,
}

impl SolveStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Solved => 0,
            SolveStatus::Error => 2,
            SolveStatus::InconsistentRelations => 3,
            SolveStatus::NoMinimalMeasure => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub d: usize,
    pub degree: usize,
    pub n: usize,
    pub moments: usize,
    pub relations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionsSummary {
    pub tol_eig: f64,
    pub tol_match: f64,
    pub seed: u64,
    pub max_degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub degree: usize,
    pub size: usize,
    pub rank: usize,
    pub i_plus: usize,
    pub i_minus: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub commuting: bool,
    pub diagonalizable: Vec<bool>,
    pub minimal_polynomial_degrees: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarietySummary {
    pub class: VarietyClass,
    pub points: usize,
    pub max_residual: f64,
    pub spectrum_mismatch: f64,
    pub seed_offset: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub discrepancy: f64,
    pub condition: f64,
}

/// Counting bounds for relations that are univariate polynomials, one per
/// variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub rank_lower: usize,
    /// Product of the relation degrees, the size of the grid.
    pub grid_upper: usize,
    pub atoms: usize,
    pub plus_lower: usize,
    pub minus_lower: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub input: InputSummary,
    pub options: OptionsSummary,
    pub stages: Vec<StageReport>,
    pub stabilized_at: Option<usize>,
    pub rank_preserving: Option<bool>,
    pub free_moments: Vec<MultiIndex>,
    pub basis: Vec<MultiIndex>,
    pub basis_inertia: Option<InertiaReport>,
    pub certification: Option<Certification>,
    pub variety: Option<VarietySummary>,
    pub weights: Option<WeightSummary>,
    /// Atoms and classification; present only when solved.
    #[serde(flatten, default)]
    pub measure: Option<AtomicMeasure>,
    pub moment_residual: Option<f64>,
    pub imaginary_residual: Option<f64>,
    pub factorization_residual: Option<f64>,
    pub jordan: Option<JordanCheck>,
    pub rank_support_bound: Option<bool>,
    pub grid_bounds: Option<GridBounds>,
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn atoms(&self) -> &[crate::measure::Atom] {
        self.measure.as_ref().map_or(&[], |m| &m.atoms)
    }

    fn fail(&mut self, stage: &str, err: &Error) {
        self.status = match err {
            Error::InconsistentRelations(_) => SolveStatus::InconsistentRelations,
            Error::NotSimultaneouslyDiagonalizable(_) => SolveStatus::NoMinimalMeasure,
            _ => SolveStatus::Error,
        };
        self.failure = Some(Failure {
            stage: stage.to_string(),
            reason: err.to_string(),
        });
        self.measure = None;
    }
}

fn stage_report(degree: usize, size: usize, r: &InertiaReport) -> StageReport {
    StageReport {
        degree,
        size,
        rank: r.rank,
        i_plus: r.i_plus,
        i_minus: r.i_minus,
    }
}

/// Runs the whole pipeline. Failures are reported through the status and
/// `failure` fields rather than returned.
pub fn solve(s: &TruncatedSequence, rels: &[ColumnRelation], opts: &SolveOptions) -> SolveReport {
    let mut report = SolveReport {
        status: SolveStatus::Solved,
        failure: None,
        input: InputSummary {
            d: s.dim(),
            degree: s.degree(),
            n: s.degree() / 2,
            moments: s.len(),
            relations: rels.iter().map(|r| r.to_string()).collect(),
        },
        options: OptionsSummary {
            tol_eig: opts.tol.eig,
            tol_match: opts.tol.matching,
            seed: opts.seed,
            max_degree: opts.max_degree,
        },
        stages: Vec::new(),
        stabilized_at: None,
        rank_preserving: None,
        free_moments: Vec::new(),
        basis: Vec::new(),
        basis_inertia: None,
        certification: None,
        variety: None,
        weights: None,
        measure: None,
        moment_residual: None,
        imaginary_residual: None,
        factorization_residual: None,
        jordan: None,
        rank_support_bound: None,
        grid_bounds: None,
        notes: Vec::new(),
        warnings: Vec::new(),
    };
    if let Err((stage, e)) = run(s, rels, opts, &mut report) {
        report.fail(stage, &e);
    }
    report
}

fn run(
    s: &TruncatedSequence,
    rels: &[ColumnRelation],
    opts: &SolveOptions,
    report: &mut SolveReport,
) -> Result<(), (&'static str, Error)> {
    let input = |e| ("input", e);
    if !(opts.tol.eig > 0.0 && opts.tol.matching > 0.0) {
        return Err(input(Error::InvalidOption(
            "tolerances must be positive".into(),
        )));
    }
    if opts.axis_relations {
        if let Some(r) = rels.iter().find(|r| !r.is_axis()) {
            return Err(input(Error::InvalidRelation {
                target: r.target().clone(),
                reason: "axis-only mode requires a univariate relation in one variable".into(),
            }));
        }
    }
    let seq = if s.degree() % 2 == 1 {
        if !opts.truncate {
            return Err(input(Error::InvalidOption(format!(
                "moment degree {} is odd; enable truncation to drop the top degree",
                s.degree()
            ))));
        }
        report
            .notes
            .push(format!("moments of degree {} were ignored", s.degree()));
        s.truncate(s.degree() - 1)
    } else {
        s.clone()
    };
    let n = seq.degree() / 2;
    let d = seq.dim();
    let base = build_moment_matrix(&seq, n).map_err(|e| ("moment_matrix", e))?;
    let chain_opts = ChainOptions {
        max_degree: opts.max_degree,
        fill_free: opts.fill_free,
    };
    let chain = extend_chain(&base, rels, &chain_opts).map_err(|e| ("extension", e))?;
    record_chain(&chain, report);
    if d > 2 {
        report.notes.push(
            "extension chains in more than two variables are consistency-checked, not proved"
                .into(),
        );
    }
    let (cur, next) = chain.stabilized_pair();
    report.rank_preserving = Some(verify_rank_preserving(cur, next).map_err(|e| ("extension", e))?);

    let basis = column_basis(cur);
    report.basis = basis.clone();
    let m_b = submatrix(cur, &basis, &basis).map_err(|e| ("shift_matrices", e))?;
    let basis_inertia = inertia_of(&m_b);
    report.basis_inertia = Some(basis_inertia);

    let sys = shift_matrices(&chain, &basis).map_err(|e| ("shift_matrices", e))?;
    report.certification = Some(Certification {
        commuting: sys.commuting,
        diagonalizable: sys.diagonalizable.clone(),
        minimal_polynomial_degrees: sys
            .minimal_polynomials
            .iter()
            .map(|p| p.degree().unwrap_or(0))
            .collect(),
    });
    if !sys.commuting {
        return Err((
            "certification",
            Error::NotSimultaneouslyDiagonalizable("shift matrices do not commute".into()),
        ));
    }
    if let Some(j) = sys.diagonalizable.iter().position(|&b| !b) {
        return Err((
            "certification",
            Error::NotSimultaneouslyDiagonalizable(format!(
                "minimal polynomial of T_{} has a repeated factor, so no minimal measure exists for this extension",
                j + 1
            )),
        ));
    }

    let variety =
        simultaneous_eigenpoints(&sys, &opts.tol, opts.seed).map_err(|e| ("eigenpoints", e))?;
    let class = if variety.all_real {
        VarietyClass::Real
    } else {
        VarietyClass::QuasiComplex
    };
    report.variety = Some(VarietySummary {
        class,
        points: variety.points.len(),
        max_residual: variety.max_residual,
        spectrum_mismatch: variety.spectrum_mismatch,
        seed_offset: variety.attempts,
    });
    report.warnings.extend(variety.warnings.iter().cloned());
    if variety.spectrum_mismatch > opts.tol.matching {
        report.warnings.push(format!(
            "coordinate spectra differ from separately computed eigenvalues by {:.3e}",
            variety.spectrum_mismatch
        ));
    }

    let v_b = build_vandermonde(&variety.points, &basis);
    let ws = solve_weights(&m_b, &v_b).map_err(|e| ("weights", e))?;
    report.weights = Some(WeightSummary {
        discrepancy: ws.discrepancy,
        condition: ws.condition,
    });
    let (mu, warnings) = assemble_measure(&variety, &ws.weights, &opts.tol);
    report.warnings.extend(warnings);

    let check = verify_moments(&mu, &seq);
    report.moment_residual = Some(check.residual);
    report.imaginary_residual = Some(check.imaginary);
    if check.residual > RESIDUAL_WARNING {
        report
            .warnings
            .push(format!("moment residual {:.3e} is large", check.residual));
    }
    report.factorization_residual = Some(factorization_residual(&mu, &base));
    let bound = rank_support_bound(&seq, &mu).map_err(|e| ("verification", e))?;
    report.rank_support_bound = Some(bound);
    if !bound {
        report
            .warnings
            .push("fewer atoms than the rank of the moment matrix".into());
    }
    if mu.len() != chain.final_rank() {
        report.warnings.push(format!(
            "{} atoms for stabilized rank {}",
            mu.len(),
            chain.final_rank()
        ));
    }
    if mu.classification != Classification::QuasiComplex {
        let j = jordan_counts(&mu, &basis_inertia).map_err(|e| ("verification", e))?;
        if !j.matches {
            report.warnings.push(format!(
                "weight signs ({}, {}) differ from the inertia ({}, {}) of the basis block",
                j.plus, j.minus, j.i_plus, j.i_minus
            ));
        }
        report.jordan = Some(j);
    }
    report.grid_bounds = grid_bounds(rels, d, &report.stages[0], &mu);
    report.notes.push(
        "the measure is the only finitely atomic one representing the extended sequence; this follows from theory and is not checked numerically"
            .into(),
    );
    report.measure = Some(mu);
    Ok(())
}

fn record_chain(chain: &ExtensionChain, report: &mut SolveReport) {
    let n = chain.base.n();
    report.stages = chain
        .inertia
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let m = chain.matrix(n + i).expect("stage present");
            stage_report(n + i, m.size(), r)
        })
        .collect();
    report.stabilized_at = Some(chain.stabilized_at);
    report.free_moments = chain.free_moments.clone();
    report.warnings.extend(chain.warnings.iter().cloned());
}

/// Bounds for grid relations: one univariate relation per variable.
fn grid_bounds(
    rels: &[ColumnRelation],
    d: usize,
    base: &StageReport,
    mu: &AtomicMeasure,
) -> Option<GridBounds> {
    let mut degree = vec![None; d];
    for r in rels {
        if !r.is_axis() {
            return None;
        }
        let (j, k) = r.target().as_axis_power()?;
        let k = k as usize;
        degree[j] = Some(degree[j].map_or(k, |x: usize| x.min(k)));
    }
    let grid_upper = degree
        .iter()
        .try_fold(1usize, |acc, k| k.and_then(|k| acc.checked_mul(k)))?;
    let plus = mu
        .atoms
        .iter()
        .filter(|a| a.weight.re > 0.0 && a.weight.im == 0.0)
        .count();
    let minus = mu
        .atoms
        .iter()
        .filter(|a| a.weight.re < 0.0 && a.weight.im == 0.0)
        .count();
    let real = mu.classification != Classification::QuasiComplex;
    let atoms = mu.len();
    Some(GridBounds {
        rank_lower: base.rank,
        grid_upper,
        atoms,
        plus_lower: base.i_plus,
        minus_lower: base.i_minus,
        holds: base.rank <= atoms
            && atoms <= grid_upper
            && (!real || (plus >= base.i_plus && minus >= base.i_minus)),
    })
}
