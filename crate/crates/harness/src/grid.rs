//! Solver grids: one row per (solver, seed, outer loop).

use riot_core::solvers::Termination;
use riot_core::{SolverReport, WorkCounts};

use crate::config::SolverSpec;
use crate::error::HarnessError;
use crate::exec::Pool;
use crate::output::{fmt_f64, Table};
use crate::problem::Experiment;

pub const RESULT_HEADER: [&str; 27] = [
    "window",
    "method",
    "m",
    "l",
    "oversample",
    "precond",
    "rotation",
    "adaptive",
    "seed",
    "outer",
    "cost",
    "cost_after",
    "increment_norm",
    "kind",
    "retained",
    "smallest_eig",
    "dofs",
    "dofs_first",
    "deflations",
    "work_units",
    "depth",
    "total_work_units",
    "total_depth",
    "nonlinear_runs",
    "tl_runs",
    "ad_runs",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LoopStats {
    pub outer: usize,
    pub cost: f64,
    pub cost_after: f64,
    pub increment_norm: f64,
    pub kind: Option<&'static str>,
    pub retained: usize,
    pub smallest_eig: Option<f64>,
    pub dofs: f64,
    pub deflations: usize,
    pub work: WorkCounts,
    pub total: WorkCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowBody {
    Loop(LoopStats),
    Diverged { outer: usize, step: usize },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub window: String,
    pub solver: SolverSpec,
    pub seed: u64,
    /// DOFs estimated in the first outer loop of the cell.
    pub dofs_first: Option<f64>,
    pub body: RowBody,
}

impl ResultRow {
    pub fn cost(&self) -> Option<f64> {
        match &self.body {
            RowBody::Loop(s) => Some(s.cost),
            _ => None,
        }
    }

    pub fn stats(&self) -> Option<&LoopStats> {
        match &self.body {
            RowBody::Loop(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self.body, RowBody::Loop(_))
    }

    pub fn record(&self) -> Vec<String> {
        let s = &self.solver;
        let mut out = vec![
            self.window.clone(),
            s.method.clone(),
            s.m.to_string(),
            s.l.to_string(),
            s.oversample.to_string(),
            s.precond.to_string(),
            s.rotation.to_string(),
            s.adaptive.clone(),
            self.seed.to_string(),
        ];
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        match &self.body {
            RowBody::Loop(l) => {
                out.extend([
                    l.outer.to_string(),
                    fmt_f64(l.cost),
                    fmt_f64(l.cost_after),
                    fmt_f64(l.increment_norm),
                    l.kind.unwrap_or("").to_string(),
                    l.retained.to_string(),
                    opt(l.smallest_eig),
                    fmt_f64(l.dofs),
                    opt(self.dofs_first),
                    l.deflations.to_string(),
                    l.work.work_units.to_string(),
                    l.work.sequential_depth.to_string(),
                    l.total.work_units.to_string(),
                    l.total.sequential_depth.to_string(),
                    l.work.nonlinear_runs.to_string(),
                    l.work.tl_runs.to_string(),
                    l.work.ad_runs.to_string(),
                    "ok".to_string(),
                ]);
            }
            RowBody::Diverged { outer, step } => {
                out.push(outer.to_string());
                out.extend(std::iter::repeat_n(String::new(), 7));
                out.push(opt(self.dofs_first));
                out.extend(std::iter::repeat_n(String::new(), 8));
                out.push(format!("diverged at step {step}"));
            }
            RowBody::Failed(msg) => {
                out.extend(std::iter::repeat_n(String::new(), 17));
                out.push(format!("error: {msg}"));
            }
        }
        out
    }
}

/// Rows of one completed (or diverged) solver run.
pub fn report_rows(window: &str, solver: &SolverSpec, seed: u64, report: &SolverReport) -> Vec<ResultRow> {
    let dofs_first = report.records.first().map(|r| r.dofs);
    let mut rows: Vec<ResultRow> = report
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| ResultRow {
            window: window.to_string(),
            solver: solver.clone(),
            seed,
            dofs_first,
            body: RowBody::Loop(LoopStats {
                outer: r.outer,
                cost: r.cost,
                cost_after: report.cost_after(i).unwrap_or(f64::NAN),
                increment_norm: r.increment_norm,
                kind: r.kind.map(|k| k.as_str()),
                retained: r.eigenvalues.len(),
                smallest_eig: r.eigenvalues.last().copied(),
                dofs: r.dofs,
                deflations: r.deflations,
                work: r.work,
                total: r.cumulative,
            }),
        })
        .collect();
    if let Termination::Diverged { outer, step } = report.termination {
        rows.push(ResultRow {
            window: window.to_string(),
            solver: solver.clone(),
            seed,
            dofs_first,
            body: RowBody::Diverged { outer, step },
        });
    }
    rows
}

/// Builds the seed's problem and runs one solver on it.
pub fn run_cell(
    exp: &Experiment,
    solver: &SolverSpec,
    seed: u64,
    pool: &Pool,
) -> Result<SolverReport, HarnessError> {
    let problem = exp.build_problem(seed)?;
    let cfg = solver.to_config(seed, exp.spec.outer_loops)?;
    Ok(riot_core::solvers::run(&problem, &cfg, pool)?)
}

fn cell_rows(exp: &Experiment, solver: &SolverSpec, seed: u64, pool: &Pool) -> Vec<ResultRow> {
    let window = &exp.spec.window.label;
    match run_cell(exp, solver, seed, pool) {
        Ok(report) => report_rows(window, solver, seed, &report),
        Err(e) => vec![ResultRow {
            window: window.clone(),
            solver: solver.clone(),
            seed,
            dofs_first: None,
            body: RowBody::Failed(format!("{}: {e}", e.category())),
        }],
    }
}

/// Every configured solver on every seed, ordered by solver then seed then
/// outer loop. A failing cell contributes one error row.
///
/// With at least as many cells as threads the cells run concurrently, each on
/// one thread; otherwise cells run in turn with parallel batches inside.
/// Both paths produce the same rows.
pub fn run_grid(exp: &Experiment, pool: &Pool) -> Vec<ResultRow> {
    let spec = &exp.spec;
    let cells: Vec<(&SolverSpec, u64)> = spec
        .solvers
        .iter()
        .flat_map(|s| spec.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let per_cell = if cells.len() >= pool.threads() {
        let inner = pool.single();
        pool.map_ordered(cells.len(), &|i| cell_rows(exp, cells[i].0, cells[i].1, &inner))
    } else {
        cells.iter().map(|(s, seed)| cell_rows(exp, s, *seed, pool)).collect()
    };
    per_cell.into_iter().flatten().collect()
}

pub fn result_table(rows: &[ResultRow]) -> Table {
    Table::new(&RESULT_HEADER, rows.iter().map(ResultRow::record).collect())
}
