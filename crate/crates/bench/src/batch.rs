//! Batch runs: many seeded problems, several solvers, CG steps needed to
//! reach each gap-reduction threshold, and efficiency curves.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{BenchError, Result};
use crate::generators::{gen_experiment1, gen_experiment2, gen_l1svm_sized, SvmSizes};
use crate::io::ProblemFile;
use crate::output::{fmt_f64, write_table, BATCH_FORMAT, EFFICIENCY_FORMAT};
use crate::solvers::{run_solver, BaseConfigs, Overrides, SolverKind};

#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    Experiment1 { m_eq: usize, m_ineq: usize, n: usize },
    Experiment2 { j: usize },
    Svm { sizes: SvmSizes, lambda: f64 },
}

impl GenSpec {
    pub fn generate(&self, seed: u64) -> ProblemFile {
        match self {
            GenSpec::Experiment1 { m_eq, m_ineq, n } => gen_experiment1(seed, *m_eq, *m_ineq, *n),
            GenSpec::Experiment2 { j } => gen_experiment2(seed, *j),
            GenSpec::Svm { sizes, lambda } => gen_l1svm_sized(seed, *sizes, *lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    pub generator: GenSpec,
    pub count: usize,
    /// Problem `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    pub solvers: Vec<SolverKind>,
    /// Gap reductions to record, as fractions (`0.95` means 95%).
    pub thresholds: Vec<f64>,
    pub base: BaseConfigs,
    /// Applied to every solve; the gap-reduction stop is set from the
    /// largest threshold unless given here.
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub problem: usize,
    pub seed: u64,
    pub solver: SolverKind,
    pub threshold: f64,
    /// Cumulative CG steps when the threshold was first met.
    pub cg_steps: Option<usize>,
    pub iterations: usize,
    pub wall_ns: u128,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyPoint {
    pub solver: SolverKind,
    pub threshold: f64,
    pub cg_steps: usize,
    pub fraction_solved: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub rows: Vec<BatchRow>,
    pub efficiency: Vec<EfficiencyPoint>,
    /// Some solve failed, hit its iteration cap, or missed a threshold.
    pub any_flagged: bool,
}

impl BatchResult {
    /// Problems that reached `threshold` with `solver` within `budget` CG steps.
    pub fn solved_within(&self, solver: SolverKind, threshold: f64, budget: usize) -> usize {
        self.rows
            .iter()
            .filter(|r| r.solver == solver && r.threshold == threshold)
            .filter(|r| r.cg_steps.is_some_and(|c| c <= budget))
            .count()
    }
}

fn run_one(spec: &BatchSpec, ov: &Overrides, problem: usize) -> (Vec<BatchRow>, bool) {
    let seed = spec.base_seed + problem as u64;
    let file = spec.generator.generate(seed);
    let mut rows = Vec::new();
    let mut flagged = false;
    let p = match file.to_problem() {
        Ok(p) => p,
        Err(e) => {
            for &solver in &spec.solvers {
                for &threshold in &spec.thresholds {
                    rows.push(failed_row(problem, seed, solver, threshold, e.to_string()));
                }
            }
            return (rows, true);
        }
    };
    let x0 = vec![0.0; p.n()];
    for &solver in &spec.solvers {
        match run_solver(&p, solver, &spec.base, ov, &x0) {
            Ok(rep) => {
                flagged |= rep.flagged();
                let wall = rep.trace.last().map_or(0, |r| r.wall_ns);
                for &threshold in &spec.thresholds {
                    let cg_steps = rep.cg_to_reach(1.0 - threshold);
                    flagged |= cg_steps.is_none();
                    rows.push(BatchRow {
                        problem,
                        seed,
                        solver,
                        threshold,
                        cg_steps,
                        iterations: rep.iterations,
                        wall_ns: wall,
                        error: None,
                    });
                }
            }
            Err(e) => {
                flagged = true;
                for &threshold in &spec.thresholds {
                    rows.push(failed_row(problem, seed, solver, threshold, e.to_string()));
                }
            }
        }
    }
    (rows, flagged)
}

fn failed_row(problem: usize, seed: u64, solver: SolverKind, threshold: f64, error: String) -> BatchRow {
    BatchRow {
        problem,
        seed,
        solver,
        threshold,
        cg_steps: None,
        iterations: 0,
        wall_ns: 0,
        error: Some(error),
    }
}

/// Runs every problem (in parallel, results kept in problem order).
pub fn run_batch(spec: &BatchSpec) -> Result<BatchResult> {
    if spec.thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(BenchError::Format("thresholds must lie in (0, 1)".into()));
    }
    let top = spec.thresholds.iter().copied().fold(0.0, f64::max);
    let mut ov = spec.overrides.clone();
    if ov.gap_reduction.is_none() {
        ov.gap_reduction = Some(1.0 - top);
    }
    let results: Vec<(Vec<BatchRow>, bool)> = (0..spec.count).into_par_iter().map(|i| run_one(spec, &ov, i)).collect();
    let any_flagged = results.iter().any(|(_, f)| *f);
    let rows: Vec<BatchRow> = results.into_iter().flat_map(|(r, _)| r).collect();
    let efficiency = efficiency_curves(&rows, &spec.solvers, &spec.thresholds, spec.count);
    Ok(BatchResult {
        rows,
        efficiency,
        any_flagged,
    })
}

/// Fraction of problems solved at each distinct CG budget where the count changes.
pub fn efficiency_curves(
    rows: &[BatchRow],
    solvers: &[SolverKind],
    thresholds: &[f64],
    count: usize,
) -> Vec<EfficiencyPoint> {
    let mut out = Vec::new();
    for &solver in solvers {
        for &threshold in thresholds {
            let mut steps: Vec<usize> = rows
                .iter()
                .filter(|r| r.solver == solver && r.threshold == threshold)
                .filter_map(|r| r.cg_steps)
                .collect();
            steps.sort_unstable();
            steps.dedup();
            for &budget in &steps {
                let solved = rows
                    .iter()
                    .filter(|r| r.solver == solver && r.threshold == threshold)
                    .filter(|r| r.cg_steps.is_some_and(|c| c <= budget))
                    .count();
                out.push(EfficiencyPoint {
                    solver,
                    threshold,
                    cg_steps: budget,
                    fraction_solved: solved as f64 / count.max(1) as f64,
                });
            }
        }
    }
    out
}

pub const BATCH_HEADER: [&str; 8] = [
    "problem",
    "seed",
    "solver",
    "threshold",
    "cg_steps",
    "iterations",
    "wall_ns",
    "error",
];

pub const EFFICIENCY_HEADER: [&str; 4] = ["solver", "threshold", "cg_steps", "fraction_solved"];

pub fn batch_records(rows: &[BatchRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.problem.to_string(),
                r.seed.to_string(),
                r.solver.name().to_string(),
                fmt_f64(r.threshold),
                r.cg_steps.map_or_else(String::new, |c| c.to_string()),
                r.iterations.to_string(),
                r.wall_ns.to_string(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

pub fn efficiency_records(points: &[EfficiencyPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                p.solver.name().to_string(),
                fmt_f64(p.threshold),
                p.cg_steps.to_string(),
                fmt_f64(p.fraction_solved),
            ]
        })
        .collect()
}

/// Writes `batch.csv` and `efficiency.csv` into `dir`.
pub fn write_batch(dir: &Path, spec: &BatchSpec, result: &BatchResult) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let comment = |fmt: &str| {
        format!(
            "format={fmt} base_seed={} count={} generator={:?}",
            spec.base_seed, spec.count, spec.generator
        )
    };
    let path = dir.join("batch.csv");
    let f = std::fs::File::create(&path).map_err(|e| BenchError::io(&path, e))?;
    write_table(f, &comment(BATCH_FORMAT), &BATCH_HEADER, &batch_records(&result.rows))?;
    let path = dir.join("efficiency.csv");
    let f = std::fs::File::create(&path).map_err(|e| BenchError::io(&path, e))?;
    write_table(
        f,
        &comment(EFFICIENCY_FORMAT),
        &EFFICIENCY_HEADER,
        &efficiency_records(&result.efficiency),
    )?;
    Ok(())
}
