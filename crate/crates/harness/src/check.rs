//! Self-tests behind `riot check`.

use riot_core::Method;

use crate::config::{ExperimentSpec, SolverSpec};
use crate::diagnostics::{adjoint_defect, convergence_order, taylor_remainders};
use crate::error::HarnessError;
use crate::exec::Pool;
use crate::grid::run_cell;
use crate::problem::Experiment;
use crate::sweep::Oracle;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Twelve-site L-96 instance with six observations over two steps. The
/// prior length scale is one cell: at twelve sites the cyclic Gaussian with
/// `ℓ = 1.5` is not positive definite.
pub fn tiny_spec(seed: u64) -> ExperimentSpec {
    let mut s = ExperimentSpec::l96(12, "tiny", 6, vec![seed]);
    s.window.steps = Some(2);
    s.model.spinup_steps = 2000;
    s.covariance.length_scale = 1.0;
    s.outer_loops = 1;
    s
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

pub fn run_checks(pool: &Pool) -> Result<Vec<CheckOutcome>, HarnessError> {
    let mut out = Vec::new();

    let mut s = ExperimentSpec::l96(40, "48h", 20, vec![1]);
    s.model.spinup_steps = 2000;
    let p = Experiment::new(s)?.build_problem(1)?;
    let defect = adjoint_defect(&p, 20, 7)?;
    out.push(outcome("adjoint identity", defect <= 1e-12, format!("max relative defect {defect:.3e}")));

    let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let order = convergence_order(&eps, &taylor_remainders(&p, &eps, 8)?);
    out.push(outcome("tangent-linear Taylor order", order >= 1.9, format!("order {order:.4}")));

    let exp = Experiment::new(tiny_spec(3))?;
    let problem = exp.build_problem(3)?;
    let oracle = Oracle::new(&problem, &Pool::sequential(0))?;
    let solvers = [
        SolverSpec::new(Method::VarCg, 12),
        SolverSpec::new(Method::Riot, 12).with_oversample(6),
        SolverSpec::new(Method::GaussNewton, 1),
    ];
    for solver in &solvers {
        let report = run_cell(&exp, solver, 3, pool)?;
        let err = (&report.records[0].control_increment - &oracle.increment).norm();
        out.push(outcome(
            match report.method {
                Method::VarCg => "dense oracle: varcg increment",
                Method::Riot => "dense oracle: riot increment",
                _ => "dense oracle: gauss-newton increment",
            },
            err <= 1e-6,
            format!("|dv - dv_exact| = {err:.3e}"),
        ));
    }
    Ok(out)
}
