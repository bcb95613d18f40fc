use super::{Context, InnerSolver, Step};
use crate::dynamics::Dynamics;
use crate::hessian::OuterState;
use crate::posterior::increment;
use crate::rsvd::{randomized_eig, EigenPairs, SketchConfig};
use crate::{Result, Vector};

/// Observation-space variant of RIOT.
///
/// Linearized around `x_{k-1}`, the analysis is `x_k = x_b + B Hᵀ w` with
/// `(H B Hᵀ + R) w = d - b'` and `b' = H(x_b - x_{k-1})`. In scaled form
/// `w = S (Â + I)⁻¹ S (d - b')`, `S = diag(1/σ_obs)`, and `(Â + I)⁻¹` is
/// approximated from a randomized eigendecomposition of `Â`.
pub(super) struct RiotPsas<'a, M> {
    ctx: Context<'a, M>,
}

impl<'a, M: Dynamics> RiotPsas<'a, M> {
    pub(super) fn new(ctx: Context<'a, M>) -> Self {
        RiotPsas { ctx }
    }
}

impl<M: Dynamics> InnerSolver for RiotPsas<'_, M> {
    fn solve(&mut self, state: &OuterState) -> Result<Step> {
        let ctx = self.ctx;
        let p = ctx.problem;
        let cfg = ctx.cfg;
        if p.obs_count() == 0 {
            return Ok(Step {
                x: p.background().clone(),
                v: Vector::zeros(p.dim()),
                eigs: EigenPairs::empty(0),
                kind: None,
                deflations: 0,
                control_space: false,
            });
        }
        let displacement = p.background() - &state.x;
        let b_prime = p.linearized_observe(&state.traj, &displacement, ctx.ledger);
        let dual = p.make_dual_hessian(state, ctx.ledger);
        let rhs = dual.scale(&(&state.innovation - b_prime));
        let sketch = SketchConfig {
            rank: cfg.rank(),
            oversample: cfg.oversample,
            seed: cfg.seed,
            stream: state.outer as u64,
        };
        let eigs = randomized_eig(&dual, &sketch, None, ctx.exec, ctx.ledger)?;
        let (kind, x, v) = ctx.choose(&eigs, |kind| {
            let w = dual.scale(&increment(kind, &eigs, &rhs));
            let g = p.linearized_observe_adjoint(&state.traj, &w, ctx.ledger);
            let v = p.prior_sqrt().apply_transpose(&g);
            let x = p.background() + p.prior_sqrt().apply(&v);
            (x, v)
        })?;
        Ok(Step {
            x,
            v,
            deflations: cfg.rank() - eigs.len(),
            eigs,
            kind: Some(kind),
            control_space: false,
        })
    }
}
