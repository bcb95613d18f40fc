use super::{Context, InnerSolver, Step};
use crate::dynamics::Dynamics;
use crate::hessian::OuterState;
use crate::posterior::increment;
use crate::precond::{precondition_hessian, RotationTransform, SpectralPreconditioner};
use crate::rsvd::{randomized_eig, SampleTransform, SketchConfig};
use crate::{Result, Vector};

/// Randomized inner solve: all `m` Hessian samples in one parallel batch,
/// then an adaptive LRA/LRU increment.
pub(super) struct Riot<'a, M> {
    ctx: Context<'a, M>,
    pc: SpectralPreconditioner,
}

impl<'a, M: Dynamics> Riot<'a, M> {
    pub(super) fn new(ctx: Context<'a, M>) -> Self {
        Riot {
            pc: SpectralPreconditioner::identity(ctx.problem.dim()),
            ctx,
        }
    }
}

impl<M: Dynamics> InnerSolver for Riot<'_, M> {
    fn solve(&mut self, state: &OuterState) -> Result<Step> {
        let ctx = self.ctx;
        let cfg = ctx.cfg;
        let b = ctx.problem.gradient(state, ctx.ledger);
        let rhs = self.pc.apply_transpose(&b);
        let hessian = ctx.problem.make_hessian(state, ctx.ledger);
        let op = precondition_hessian(&hessian, &self.pc);
        let rotation = (cfg.rotation && !self.pc.is_identity()).then(|| RotationTransform::new(&self.pc));
        let rotate = |w: &Vector| rotation.as_ref().map_or_else(|| w.clone(), |r| r.apply(w));
        let transform: Option<SampleTransform<'_>> = rotation.as_ref().map(|_| &rotate as SampleTransform<'_>);
        let sketch = SketchConfig {
            rank: cfg.rank(),
            oversample: cfg.oversample,
            seed: cfg.seed,
            stream: state.outer as u64,
        };
        let eigs = randomized_eig(&op, &sketch, transform, ctx.exec, ctx.ledger)?;
        let (kind, x, v) = ctx.choose(&eigs, |kind| ctx.advance(state, &self.pc, &increment(kind, &eigs, &rhs)))?;
        let control_space = self.pc.is_identity();
        if cfg.precond {
            self.pc = self.pc.extend(&eigs)?;
        }
        Ok(Step {
            x,
            v,
            deflations: cfg.rank() - eigs.len(),
            eigs,
            kind: Some(kind),
            control_space,
        })
    }
}
