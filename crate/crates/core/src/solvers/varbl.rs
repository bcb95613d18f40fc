use alloc::vec::Vec;

use super::krylov::block_lanczos;
use super::{Context, InnerSolver, Step};
use crate::dynamics::Dynamics;
use crate::hessian::OuterState;
use crate::linalg::sqrt;
use crate::posterior::{increment, UpdateKind};
use crate::precond::{precondition_hessian, RotationTransform, SpectralPreconditioner};
use crate::{rng, Result, Vector};

/// Block Lanczos started from `l` gradients: the unperturbed one and `l - 1`
/// gradients of randomly perturbed problems, evaluated in parallel.
pub(super) struct VarBl<'a, M> {
    ctx: Context<'a, M>,
    pc: SpectralPreconditioner,
}

impl<'a, M: Dynamics> VarBl<'a, M> {
    pub(super) fn new(ctx: Context<'a, M>) -> Self {
        VarBl {
            pc: SpectralPreconditioner::identity(ctx.problem.dim()),
            ctx,
        }
    }

    /// Gradients `b_j = Lᵀ H_jᵀ R⁻¹ d_j - v - ε_b` for `j = 1..l`, with
    /// `d_j = y - H(x + L ε_b) - R^{1/2} ε_o` linearized around the perturbed
    /// trajectory.
    fn perturbed_gradients(&self, state: &OuterState) -> Result<Vec<Vector>> {
        let ctx = self.ctx;
        let p = ctx.problem;
        let members = ctx.cfg.l - 1;
        let stream = if ctx.cfg.freeze_perturbations { 0 } else { state.outer as u64 };
        let mut r = rng::stream(ctx.cfg.seed, rng::PERTURBATION_STREAM + stream);
        let draws: Vec<(Vector, Vector)> = (0..members)
            .map(|_| {
                let eb = rng::normal_vector(&mut r, p.dim());
                let eo = rng::normal_vector(&mut r, p.obs_count());
                (eb, eo)
            })
            .collect();
        let sd = p.obs_variances().map(sqrt);
        ctx.exec.try_map(members, &|j| {
            let (eb, eo) = &draws[j];
            let xj = &state.x + p.prior_sqrt().apply(eb);
            let mut perturbed = p.outer_state(xj, state.v.clone(), state.outer, ctx.ledger)?;
            perturbed.innovation -= eo.component_mul(&sd);
            Ok(p.gradient(&perturbed, ctx.ledger) - eb)
        })
    }
}

impl<M: Dynamics> InnerSolver for VarBl<'_, M> {
    fn solve(&mut self, state: &OuterState) -> Result<Step> {
        let ctx = self.ctx;
        let b = ctx.problem.gradient(state, ctx.ledger);
        let rhs = self.pc.apply_transpose(&b);
        let others = self.perturbed_gradients(state)?;
        let mut start = Vec::with_capacity(ctx.cfg.l);
        start.push(rhs.clone());
        if ctx.cfg.rotation && !self.pc.is_identity() {
            let rot = RotationTransform::new(&self.pc);
            start.extend(others.iter().map(|g| rot.apply(g)));
        } else {
            start.extend(others.iter().map(|g| self.pc.apply_transpose(g)));
        }
        let hessian = ctx.problem.make_hessian(state, ctx.ledger);
        let op = precondition_hessian(&hessian, &self.pc);
        let krylov = block_lanczos(&op, &start, ctx.cfg.m, ctx.exec, ctx.ledger);
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
