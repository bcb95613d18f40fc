//! Outer-loop drivers.
//!
//! Every method shares the same outer loop: run the model at the current
//! state, solve an inner problem for a control-space increment, update the
//! state and record the loop. The methods differ only in the inner solve.

mod config;
mod gauss_newton;
pub mod krylov;
mod psas;
mod report;
mod riot;
mod varbl;
mod varcg;

pub use config::{AdaptiveStrategy, Method, SolverConfig};
pub use report::{OuterRecord, SolverReport, Termination};

use alloc::vec::Vec;

use crate::dynamics::Dynamics;
use crate::hessian::{OuterState, Problem};
use crate::posterior::{adaptive_kind, PosteriorEstimate, UpdateKind};
use crate::precond::SpectralPreconditioner;
use crate::rsvd::{dofs, EigenPairs};
use crate::{BatchExecutor, Error, Result, Vector, WorkLedger};

/// Result of one inner solve.
struct Step {
    x: Vector,
    v: Vector,
    eigs: EigenPairs,
    kind: Option<UpdateKind>,
    deflations: usize,
    /// `eigs` are eigenpairs of the unpreconditioned control-space Hessian.
    control_space: bool,
}

trait InnerSolver {
    fn solve(&mut self, state: &OuterState) -> Result<Step>;
}

/// Runs `cfg.outer_loops` outer loops of the configured method.
pub fn run<M: Dynamics>(
    problem: &Problem<M>,
    cfg: &SolverConfig,
    exec: &dyn BatchExecutor,
) -> Result<SolverReport> {
    cfg.validate(problem.dim(), problem.obs_count())?;
    let ledger = WorkLedger::new();
    let ctx = Context {
        problem,
        cfg,
        exec,
        ledger: &ledger,
    };
    match cfg.method {
        Method::VarCg => drive(&ctx, &mut varcg::VarCg::new(ctx)),
        Method::VarBl => drive(&ctx, &mut varbl::VarBl::new(ctx)),
        Method::Riot => drive(&ctx, &mut riot::Riot::new(ctx)),
        Method::RiotPsas => drive(&ctx, &mut psas::RiotPsas::new(ctx)),
        Method::GaussNewton => drive(&ctx, &mut gauss_newton::GaussNewton::new(ctx)),
    }
}

struct Context<'a, M> {
    problem: &'a Problem<M>,
    cfg: &'a SolverConfig,
    exec: &'a dyn BatchExecutor,
    ledger: &'a WorkLedger,
}

impl<M> Clone for Context<'_, M> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<M> Copy for Context<'_, M> {}

impl<M: Dynamics> Context<'_, M> {
    /// Applies a preconditioned increment `δu`: `δv = P δu`,
    /// `v ← v + δv`, `x ← x + L δv`.
    fn advance(
        &self,
        state: &OuterState,
        pc: &SpectralPreconditioner,
        du: &Vector,
    ) -> (Vector, Vector) {
        let dv = pc.lift_increment(du);
        let x = &state.x + self.problem.prior_sqrt().apply(&dv);
        (x, &state.v + &dv)
    }

    /// Kind chosen by every strategy except `Deterministic`, which needs
    /// cost evaluations and is handled by the caller.
    fn rule_kind(&self, eigs: &EigenPairs) -> UpdateKind {
        match self.cfg.adaptive {
            AdaptiveStrategy::Spectral | AdaptiveStrategy::Deterministic => adaptive_kind(eigs),
            AdaptiveStrategy::Forced(kind) => kind,
            AdaptiveStrategy::TransitionRank(t) if eigs.len() < t => UpdateKind::Lra,
            AdaptiveStrategy::TransitionRank(_) => UpdateKind::Lru,
        }
    }

    /// Picks the update kind and candidate state. Under the deterministic
    /// strategy both candidates are evaluated with the nonlinear model and
    /// the lower cost wins (LRU on ties or when both diverge).
    fn choose<T>(
        &self,
        eigs: &EigenPairs,
        candidate: impl Fn(UpdateKind) -> (Vector, T),
    ) -> Result<(UpdateKind, Vector, T)> {
        if self.cfg.adaptive != AdaptiveStrategy::Deterministic {
            let kind = self.rule_kind(eigs);
            let (x, extra) = candidate(kind);
            return Ok((kind, x, extra));
        }
        let mut best: Option<(f64, UpdateKind, Vector, T)> = None;
        for kind in [UpdateKind::Lru, UpdateKind::Lra] {
            let (x, extra) = candidate(kind);
            let cost = match self.problem.nonquadratic_cost(&x, self.ledger) {
                Ok(c) => c,
                Err(Error::Divergence { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, kind, x, extra));
            }
        }
        let (_, kind, x, extra) = best.expect("two candidates evaluated");
        Ok((kind, x, extra))
    }
}

fn drive<M: Dynamics>(ctx: &Context<'_, M>, solver: &mut dyn InnerSolver) -> Result<SolverReport> {
    let problem = ctx.problem;
    let ledger = ctx.ledger;
    let mut x = problem.background().clone();
    let mut v = Vector::zeros(problem.dim());
    let mut records: Vec<OuterRecord> = Vec::new();
    let mut termination = Termination::Completed;
    let mut last: Option<(EigenPairs, Option<UpdateKind>)> = None;
    for outer in 0..ctx.cfg.outer_loops {
        let before = ledger.snapshot();
        let step = problem
            .outer_state(x.clone(), v.clone(), outer, ledger)
            .and_then(|state| Ok((state.cost, solver.solve(&state)?)));
        let (cost, step) = match step {
            Ok(s) => s,
            Err(Error::Divergence { step }) => {
                termination = Termination::Diverged { outer, step };
                break;
            }
            Err(e) => return Err(e),
        };
        let after = ledger.snapshot();
        let control_increment = &step.v - &v;
        records.push(OuterRecord {
            outer,
            cost,
            increment_norm: control_increment.norm(),
            control_increment,
            state_increment: &step.x - &x,
            eigenvalues: step.eigs.values.clone(),
            kind: step.kind,
            dofs: dofs(&step.eigs),
            deflations: step.deflations,
            work: after.since(&before),
            cumulative: after,
        });
        last = step.control_space.then_some((step.eigs, step.kind));
        x = step.x;
        v = step.v;
    }
    let final_cost = if termination == Termination::Completed {
        match problem.nonquadratic_cost(&x, ledger) {
            Ok(c) => c,
            Err(Error::Divergence { step }) => {
                termination = Termination::Diverged {
                    outer: records.len(),
                    step,
                };
                f64::INFINITY
            }
            Err(e) => return Err(e),
        }
    } else {
        f64::INFINITY
    };
    let posterior = match last {
        Some((eigs, kind)) => {
            let kind = kind.unwrap_or_else(|| adaptive_kind(&eigs));
            Some(PosteriorEstimate::new(
                kind,
                eigs,
                problem.prior_sqrt().matrix.clone(),
                problem.prior_cov().clone(),
            )?)
        }
        None => None,
    };
    Ok(SolverReport {
        method: ctx.cfg.method,
        records,
        analysis: x,
        final_cost,
        posterior,
        totals: ledger.snapshot(),
        termination,
    })
}
