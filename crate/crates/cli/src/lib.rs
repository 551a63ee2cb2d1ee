//! Subcommands of the `flatmoment` binary as plain functions returning the
//! exit code and both output streams.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use flatmoment::hankel::{
    column_basis, first_hankel_violation, kernel_relations, rank_and_inertia,
};
use flatmoment::problem::RelationEntry;
use flatmoment::{
    build_moment_matrix, parse_problem, solve, MultiIndex, Problem, ProblemFile, SolveOptions,
    SolveReport, SolveStatus, Tolerances,
};
use num_complex::Complex64;
use serde::Serialize;

/// Exit code for unreadable or invalid input.
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Outcome {
        Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn error(stderr: String) -> Outcome {
        Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    #[default]
    Text,
}

/// Command-line overrides; unset fields fall back to the problem file and
/// then to the defaults.
#[derive(Clone, Debug, Default)]
pub struct SolveFlags {
    pub tol_eig: Option<f64>,
    pub tol_match: Option<f64>,
    pub seed: Option<u64>,
    pub max_degree: Option<usize>,
    pub axis_relations: bool,
    pub fill_free: bool,
}

fn read_problem(path: &Path) -> Result<Problem, Outcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Outcome::error(format!("{}: {e}\n", path.display())))?;
    parse_problem(&text).map_err(|e| Outcome::error(format!("{}: {e}\n", path.display())))
}

pub fn cmd_validate(path: &Path) -> Outcome {
    let p = match read_problem(path) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let m = match build_moment_matrix(&p.sequence, p.n()) {
        Ok(m) => m,
        Err(e) => return Outcome::error(format!("{}: {e}\n", path.display())),
    };
    if let Some(((a, b), (c, d))) = first_hankel_violation(m.labels(), m.entries()) {
        return Outcome::error(format!(
            "{}: entry ({a}, {b}) differs from entry ({c}, {d})\n",
            path.display()
        ));
    }
    Outcome::ok(format!(
        "ok: d = {}, degree {}, {} moments, M({}) is {}x{}, {} relation(s)\n",
        p.sequence.dim(),
        p.sequence.degree(),
        p.sequence.len(),
        p.n(),
        m.size(),
        m.size(),
        p.relations.len()
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub d: usize,
    pub degree: usize,
    pub n: usize,
    pub size: usize,
    pub rank: usize,
    pub i_plus: usize,
    pub i_minus: usize,
    pub basis: Vec<MultiIndex>,
    pub relations: Vec<RelationEntry>,
    pub relations_text: Vec<String>,
}

pub fn analyze(p: &Problem) -> flatmoment::Result<AnalyzeReport> {
    let m = build_moment_matrix(&p.sequence, p.n())?;
    let inertia = rank_and_inertia(&m);
    let rels = kernel_relations(&m);
    Ok(AnalyzeReport {
        d: p.sequence.dim(),
        degree: p.sequence.degree(),
        n: p.n(),
        size: m.size(),
        rank: inertia.rank,
        i_plus: inertia.i_plus,
        i_minus: inertia.i_minus,
        basis: column_basis(&m),
        relations: ProblemFile::from_parts(&p.sequence, &rels, Default::default()).relations,
        relations_text: rels.iter().map(|r| r.to_string()).collect(),
    })
}

pub fn cmd_analyze(path: &Path, format: Format) -> Outcome {
    let p = match read_problem(path) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let a = match analyze(&p) {
        Ok(a) => a,
        Err(e) => return Outcome::error(format!("{}: {e}\n", path.display())),
    };
    match format {
        Format::Json => Outcome::ok(to_json(&a)),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "M({}) of size {}x{}", a.n, a.size, a.size);
            let _ = writeln!(s, "rank {}, i+ = {}, i- = {}", a.rank, a.i_plus, a.i_minus);
            let basis: Vec<String> = a.basis.iter().map(|g| g.monomial()).collect();
            let _ = writeln!(s, "basis: {}", basis.join(", "));
            if a.relations_text.is_empty() {
                let _ = writeln!(s, "no column relations");
            } else {
                let _ = writeln!(s, "column relations:");
                for r in &a.relations_text {
                    let _ = writeln!(s, "  {r}");
                }
            }
            Outcome::ok(s)
        }
    }
}

/// Problem-file options overridden by flags.
pub fn solve_options(p: &Problem, flags: &SolveFlags) -> SolveOptions {
    let defaults = Tolerances::default();
    SolveOptions {
        tol: Tolerances {
            eig: flags.tol_eig.or(p.options.tol_eig).unwrap_or(defaults.eig),
            matching: flags
                .tol_match
                .or(p.options.tol_match)
                .unwrap_or(defaults.matching),
        },
        seed: flags.seed.or(p.options.seed).unwrap_or(0),
        max_degree: flags.max_degree.or(p.options.max_degree),
        axis_relations: flags.axis_relations || p.options.axis_relations.unwrap_or(false),
        fill_free: flags.fill_free || p.options.fill_free.unwrap_or(false),
        truncate: false,
    }
}

pub fn cmd_solve(
    path: &Path,
    output: Option<&Path>,
    flags: &SolveFlags,
    format: Format,
) -> Outcome {
    let p = match read_problem(path) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let report = solve(&p.sequence, &p.relations, &solve_options(&p, flags));
    let json = to_json(&report);
    if let Some(out) = output {
        if let Err(e) = std::fs::write(out, &json) {
            return Outcome::error(format!("{}: {e}\n", out.display()));
        }
    }
    let stdout = match format {
        Format::Json => json,
        Format::Text => summary(&report),
    };
    let stderr = match &report.failure {
        Some(f) => format!(
            "{}: {} at {}: {}\n",
            path.display(),
            status_name(report.status),
            f.stage,
            f.reason
        ),
        None => String::new(),
    };
    Outcome {
        code: report.exit_code(),
        stdout,
        stderr,
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Solved => "solved",
        SolveStatus::NoMinimalMeasure => "no_minimal_measure",
        SolveStatus::InconsistentRelations => "inconsistent_relations",
        SolveStatus::Error => "error",
    }
}

fn real(x: f64) -> String {
    if x == 0.0 || (1e-4..1e6).contains(&x.abs()) {
        format!("{x:.12}")
    } else {
        format!("{x:.6e}")
    }
}

fn complex(z: Complex64) -> String {
    if z.im == 0.0 {
        real(z.re)
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", real(z.re), real(z.im.abs()))
    }
}

/// Human-readable summary of a report.
pub fn summary(r: &SolveReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", status_name(r.status));
    if let Some(f) = &r.failure {
        let _ = writeln!(s, "failed at {}: {}", f.stage, f.reason);
    }
    if !r.stages.is_empty() {
        let _ = writeln!(
            s,
            "{:>6} {:>6} {:>6} {:>6} {:>6}",
            "degree", "size", "rank", "i+", "i-"
        );
        for st in &r.stages {
            let _ = writeln!(
                s,
                "{:>6} {:>6} {:>6} {:>6} {:>6}",
                st.degree, st.size, st.rank, st.i_plus, st.i_minus
            );
        }
    }
    if let Some(k) = r.stabilized_at {
        let _ = writeln!(s, "rank M({k}) = rank M({})", k + 1);
    }
    if let Some(mu) = &r.measure {
        let class = serde_json::to_value(mu.classification).expect("enum serializes");
        let _ = writeln!(s, "classification: {}", class.as_str().unwrap_or_default());
        let _ = writeln!(s, "atoms: {}", mu.len());
        for (i, a) in mu.atoms.iter().enumerate() {
            let pt: Vec<String> = a.point.iter().map(|z| complex(*z)).collect();
            let _ = writeln!(
                s,
                "  {:>3}  ({})  weight {}",
                i + 1,
                pt.join(", "),
                complex(a.weight)
            );
        }
    }
    if let Some(x) = r.moment_residual {
        let _ = writeln!(s, "max moment residual: {x:.3e}");
    }
    if let Some(j) = &r.jordan {
        let verdict = if j.matches { "holds" } else { "fails" };
        let _ = writeln!(
            s,
            "inertia identity {verdict}: {} positive, {} negative weights; i+ = {}, i- = {}",
            j.plus, j.minus, j.i_plus, j.i_minus
        );
    }
    for w in &r.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}
