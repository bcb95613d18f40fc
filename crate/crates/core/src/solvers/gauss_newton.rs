use super::{Context, InnerSolver, Step};
use crate::dynamics::Dynamics;
use crate::hessian::{OuterState, DENSE_LIMIT};
use crate::operator::assemble_dense;
use crate::precond::SpectralPreconditioner;
use crate::rsvd::exact_eig_dense;
use crate::{Error, Matrix, Result};

/// Exact reference: dense `A` from `n` applications, direct solve of
/// `(A + I) δv = b`.
pub(super) struct GaussNewton<'a, M> {
    ctx: Context<'a, M>,
}

impl<'a, M: Dynamics> GaussNewton<'a, M> {
    pub(super) fn new(ctx: Context<'a, M>) -> Self {
        GaussNewton { ctx }
    }
}

impl<M: Dynamics> InnerSolver for GaussNewton<'_, M> {
    fn solve(&mut self, state: &OuterState) -> Result<Step> {
        let ctx = self.ctx;
        let n = ctx.problem.dim();
        let b = ctx.problem.gradient(state, ctx.ledger);
        let hessian = ctx.problem.make_hessian(state, ctx.ledger);
        let a = assemble_dense(&hessian, ctx.exec, ctx.ledger, DENSE_LIMIT)?;
        let a = (&a + a.transpose()) * 0.5;
        let dv = (&a + Matrix::identity(n, n))
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("I + A"))?
            .solve(&b);
        let (x, v) = ctx.advance(state, &SpectralPreconditioner::identity(n), &dv);
        Ok(Step {
            x,
            v,
            eigs: exact_eig_dense(&a),
            kind: None,
            deflations: 0,
            control_space: true,
        })
    }
}
