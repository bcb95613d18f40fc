use super::krylov::lanczos;
use super::{Context, InnerSolver, Step};
use crate::dynamics::Dynamics;
use crate::hessian::OuterState;
use crate::posterior::{increment, UpdateKind};
use crate::precond::{precondition_hessian, SpectralPreconditioner};
use crate::Result;

/// Lanczos inner loop: `m` sequential Hessian applications, Ritz pairs of
/// the tridiagonal projection, increment `Σ (1+θ_i)⁻¹ u_i u_iᵀ b`.
pub(super) struct VarCg<'a, M> {
    ctx: Context<'a, M>,
    pc: SpectralPreconditioner,
}

impl<'a, M: Dynamics> VarCg<'a, M> {
    pub(super) fn new(ctx: Context<'a, M>) -> Self {
        VarCg {
            pc: SpectralPreconditioner::identity(ctx.problem.dim()),
            ctx,
        }
    }
}

impl<M: Dynamics> InnerSolver for VarCg<'_, M> {
    fn solve(&mut self, state: &OuterState) -> Result<Step> {
        let ctx = self.ctx;
        let b = ctx.problem.gradient(state, ctx.ledger);
        let rhs = self.pc.apply_transpose(&b);
        let hessian = ctx.problem.make_hessian(state, ctx.ledger);
        let op = precondition_hessian(&hessian, &self.pc);
        let krylov = lanczos(&op, &rhs, ctx.cfg.m, ctx.ledger);
        let ritz = krylov.ritz();
        let du = increment(UpdateKind::Lra, &ritz, &rhs);
        let (x, v) = ctx.advance(state, &self.pc, &du);
        let control_space = self.pc.is_identity();
        if ctx.cfg.precond {
            self.pc = self.pc.extend(&ritz)?;
        }
        Ok(Step {
            x,
            v,
            eigs: ritz,
            kind: None,
            deflations: krylov.deflations,
            control_space,
        })
    }
}
