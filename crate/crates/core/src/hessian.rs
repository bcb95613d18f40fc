//! The incremental 4D-Var problem and its matrix-free operators.
//!
//! Innovations are `d = y - H(x)` throughout, so the right-hand side of every
//! inner problem is the *negative* gradient and increments are added without
//! a sign flip.

use nalgebra::{Cholesky, Dyn};

use crate::dynamics::{Dynamics, Trajectory};
use crate::obs::{ObsNetwork, SqrtFactor};
use crate::operator::LinearOperator;
use crate::{Error, Matrix, Result, Vector, WorkLedger};

/// Largest dimension for which dense assembly is allowed.
pub const DENSE_LIMIT: usize = 2000;

/// Model, observations and error statistics of one assimilation window.
#[derive(Debug, Clone)]
pub struct Problem<M> {
    model: M,
    network: ObsNetwork,
    background: Vector,
    observations: Vector,
    prior_cov: Matrix,
    prior_sqrt: SqrtFactor,
    obs_variances: Vector,
    prior_chol: Cholesky<f64, Dyn>,
}

impl<M: Dynamics> Problem<M> {
    pub fn new(
        model: M,
        network: ObsNetwork,
        background: Vector,
        observations: Vector,
        prior_cov: Matrix,
        prior_sqrt: SqrtFactor,
        obs_variances: Vector,
    ) -> Result<Self> {
        let n = model.dim();
        Error::check_dim("background", n, background.len())?;
        Error::check_dim("prior covariance", n, prior_cov.nrows())?;
        Error::check_dim("prior covariance", n, prior_cov.ncols())?;
        Error::check_dim("prior square root", n, prior_sqrt.dim())?;
        Error::check_dim("network sites", n, network.dim())?;
        Error::check_dim("network window", model.steps(), network.steps())?;
        Error::check_dim("observations", network.len(), observations.len())?;
        Error::check_dim("observation variances", network.len(), obs_variances.len())?;
        if obs_variances.iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::NotPositiveDefinite("observation variances"));
        }
        let prior_chol = Cholesky::new(prior_cov.clone())
            .ok_or(Error::NotPositiveDefinite("prior covariance"))?;
        Ok(Problem {
            model,
            network,
            background,
            observations,
            prior_cov,
            prior_sqrt,
            obs_variances,
            prior_chol,
        })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn network(&self) -> &ObsNetwork {
        &self.network
    }

    pub fn background(&self) -> &Vector {
        &self.background
    }

    pub fn observations(&self) -> &Vector {
        &self.observations
    }

    pub fn prior_cov(&self) -> &Matrix {
        &self.prior_cov
    }

    pub fn prior_sqrt(&self) -> &SqrtFactor {
        &self.prior_sqrt
    }

    pub fn obs_variances(&self) -> &Vector {
        &self.obs_variances
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn obs_count(&self) -> usize {
        self.network.len()
    }

    /// `J(x) = ½‖H(x) - y‖²_{R⁻¹} + ½‖x - x_b‖²_{B⁻¹}`; one nonlinear run.
    pub fn nonquadratic_cost(&self, x: &Vector, ledger: &WorkLedger) -> Result<f64> {
        Ok(self.outer_state(x.clone(), Vector::zeros(self.dim()), 0, ledger)?.cost)
    }

    /// Cost of `x` given its trajectory; no model run.
    pub fn cost_of(&self, x: &Vector, traj: &Trajectory) -> Result<(f64, Vector)> {
        let innovation = &self.observations - self.network.observe(traj)?;
        let obs_term: f64 = innovation
            .iter()
            .zip(self.obs_variances.iter())
            .map(|(d, v)| d * d / v)
            .sum();
        let dx = x - &self.background;
        let prior_term = dx.dot(&self.prior_chol.solve(&dx));
        Ok((0.5 * (obs_term + prior_term), innovation))
    }

    /// Runs the model at `x` and stores what the inner loop needs.
    pub fn outer_state(
        &self,
        x: Vector,
        v: Vector,
        outer: usize,
        ledger: &WorkLedger,
    ) -> Result<OuterState> {
        Error::check_dim("control increment", self.dim(), v.len())?;
        ledger.record_nonlinear();
        let traj = self.model.integrate(x.as_slice())?;
        let (cost, innovation) = self.cost_of(&x, &traj)?;
        Ok(OuterState {
            x,
            v,
            traj,
            innovation,
            cost,
            outer,
        })
    }

    /// Linearized observation map `H δx` around `traj`; one TL run.
    pub fn linearized_observe(&self, traj: &Trajectory, dx: &Vector, ledger: &WorkLedger) -> Vector {
        let Some(last) = self.network.last_step() else {
            return Vector::zeros(0);
        };
        ledger.record_tl();
        let seq = self
            .model
            .tangent_linear_to(traj, dx, last)
            .expect("trajectory validated by outer_state");
        self.network.sample(&seq)
    }

    /// `Hᵀ w` around `traj`; one AD run.
    pub fn linearized_observe_adjoint(
        &self,
        traj: &Trajectory,
        w: &Vector,
        ledger: &WorkLedger,
    ) -> Vector {
        if self.network.is_empty() {
            return Vector::zeros(self.dim());
        }
        ledger.record_ad();
        self.model
            .adjoint(traj, &self.network.scatter(w))
            .expect("trajectory validated by outer_state")
    }

    /// `b = L_Bᵀ Hᵀ R⁻¹ d - v`, the negative control-space gradient of the
    /// inner quadratic cost at zero increment.
    pub fn gradient(&self, state: &OuterState, ledger: &WorkLedger) -> Vector {
        let weighted = state.innovation.component_div(&self.obs_variances);
        let g = self.linearized_observe_adjoint(&state.traj, &weighted, ledger);
        self.prior_sqrt.apply_transpose(&g) - &state.v
    }

    pub fn make_hessian<'a>(&'a self, state: &'a OuterState, ledger: &'a WorkLedger) -> HessianOp<'a, M> {
        HessianOp {
            problem: self,
            traj: &state.traj,
            ledger,
        }
    }

    pub fn make_dual_hessian<'a>(
        &'a self,
        state: &'a OuterState,
        ledger: &'a WorkLedger,
    ) -> DualHessianOp<'a, M> {
        DualHessianOp {
            problem: self,
            traj: &state.traj,
            inv_sd: self.obs_variances.map(|v| 1.0 / crate::linalg::sqrt(v)),
            ledger,
        }
    }
}

/// Trajectory, innovation and cost at the start of an outer loop.
#[derive(Debug, Clone)]
pub struct OuterState {
    pub x: Vector,
    /// Accumulated control-space increment; `x = x_b + L_B v`.
    pub v: Vector,
    pub traj: Trajectory,
    /// `y - H(x)`.
    pub innovation: Vector,
    pub cost: f64,
    pub outer: usize,
}

/// `A = L_Bᵀ Hᵀ R⁻¹ H L_B`, one TL and one AD run per application.
pub struct HessianOp<'a, M> {
    problem: &'a Problem<M>,
    traj: &'a Trajectory,
    ledger: &'a WorkLedger,
}

impl<M: Dynamics> LinearOperator for HessianOp<'_, M> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        let p = self.problem;
        if p.network.is_empty() {
            return Vector::zeros(p.dim());
        }
        let z = p.prior_sqrt.apply(v);
        let hz = p.linearized_observe(self.traj, &z, self.ledger);
        let w = hz.component_div(&p.obs_variances);
        let g = p.linearized_observe_adjoint(self.traj, &w, self.ledger);
        p.prior_sqrt.apply_transpose(&g)
    }
}

/// Observation-space operator `L_{R⁻¹}ᵀ H B Hᵀ L_{R⁻¹}` with
/// `L_{R⁻¹} = diag(1/σ_obs)`.
pub struct DualHessianOp<'a, M> {
    problem: &'a Problem<M>,
    traj: &'a Trajectory,
    inv_sd: Vector,
    ledger: &'a WorkLedger,
}

impl<M: Dynamics> DualHessianOp<'_, M> {
    /// `L_{R⁻¹} w`; the factor is diagonal, hence its own transpose.
    pub fn scale(&self, w: &Vector) -> Vector {
        w.component_mul(&self.inv_sd)
    }
}

impl<M: Dynamics> LinearOperator for DualHessianOp<'_, M> {
    fn dim(&self) -> usize {
        self.problem.obs_count()
    }

    fn apply(&self, w: &Vector) -> Vector {
        let p = self.problem;
        if p.network.is_empty() {
            return Vector::zeros(0);
        }
        let g = p.linearized_observe_adjoint(self.traj, &self.scale(w), self.ledger);
        let u = &p.prior_cov * g;
        let hu = p.linearized_observe(self.traj, &u, self.ledger);
        self.scale(&hu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l96::L96Config;
    use crate::obs::{sqrt_of_matrix, ObsPoint, SqrtMethod};
    use crate::operator::{assemble_dense, Sequential};
    use crate::rng;
    use alloc::vec::Vec;

    fn small_problem(net: ObsNetwork) -> Problem<L96Config> {
        let cfg = L96Config::new(8, 8.0, 0.01, 3).unwrap();
        let mut r = rng::stream(21, 0);
        let xb = rng::normal_vector(&mut r, 8) * 2.0 + Vector::from_element(8, 8.0);
        let g = rng::normal_matrix(&mut r, 8, 8);
        let b = &g * g.transpose() * 0.1 + Matrix::identity(8, 8) * 0.2;
        let l = sqrt_of_matrix(&b, SqrtMethod::Symmetric).unwrap();
        let y = rng::normal_vector(&mut r, net.len()) + Vector::from_element(net.len(), 8.0);
        let var = Vector::from_fn(net.len(), |i, _| 0.3 + 0.1 * i as f64);
        Problem::new(cfg, net, xb, y, b, l, var).unwrap()
    }

    fn net4() -> ObsNetwork {
        let pts = [(1, 0), (2, 3), (3, 5), (3, 6)]
            .iter()
            .map(|&(step, site)| ObsPoint { step, site })
            .collect();
        ObsNetwork::new(pts, 8, 3).unwrap()
    }

    #[test]
    fn hessian_is_symmetric_psd() {
        let p = small_problem(net4());
        let ledger = WorkLedger::new();
        let st = p.outer_state(p.background().clone(), Vector::zeros(8), 1, &ledger).unwrap();
        let a = assemble_dense(&p.make_hessian(&st, &ledger), &Sequential, &ledger, 100).unwrap();
        assert!((&a - a.transpose()).norm() <= 1e-10 * a.norm());
        let (vals, _) = crate::linalg::sym_eig_desc(&a);
        assert!(vals.iter().all(|v| *v >= -1e-10));
        assert_eq!(p.make_hessian(&st, &ledger).apply(&Vector::zeros(8)), Vector::zeros(8));
    }

    #[test]
    fn empty_network_gives_zero_operators() {
        let p = small_problem(ObsNetwork::empty(8, 3));
        let ledger = WorkLedger::new();
        let st = p.outer_state(p.background().clone(), Vector::zeros(8), 1, &ledger).unwrap();
        let v = Vector::from_element(8, 1.0);
        assert_eq!(p.make_hessian(&st, &ledger).apply(&v), Vector::zeros(8));
        assert_eq!(p.make_dual_hessian(&st, &ledger).dim(), 0);
        assert_eq!(p.gradient(&st, &ledger), Vector::zeros(8));
        assert_eq!(st.cost, 0.0);
    }

    #[test]
    fn primal_and_dual_share_nonzero_spectrum() {
        let p = small_problem(net4());
        let ledger = WorkLedger::new();
        let st = p.outer_state(p.background().clone(), Vector::zeros(8), 1, &ledger).unwrap();
        let a = assemble_dense(&p.make_hessian(&st, &ledger), &Sequential, &ledger, 100).unwrap();
        let ad = assemble_dense(&p.make_dual_hessian(&st, &ledger), &Sequential, &ledger, 100).unwrap();
        let (va, _) = crate::linalg::sym_eig_desc(&a);
        let (vd, _) = crate::linalg::sym_eig_desc(&ad);
        for (x, y) in va.iter().zip(&vd) {
            assert!((x - y).abs() <= 1e-8 * va[0], "{x} vs {y}");
        }
        assert!(va[vd.len()..].iter().all(|v| v.abs() <= 1e-10 * va[0]));
    }

    #[test]
    fn ledger_counts_runs() {
        let p = small_problem(net4());
        let ledger = WorkLedger::new();
        let st = p.outer_state(p.background().clone(), Vector::zeros(8), 1, &ledger).unwrap();
        let _ = p.gradient(&st, &ledger);
        let h = p.make_hessian(&st, &ledger);
        let _: Vec<Vector> = (0..3).map(|_| h.apply(&Vector::from_element(8, 1.0))).collect();
        let s = ledger.snapshot();
        assert_eq!((s.nonlinear_runs, s.tl_runs, s.ad_runs), (1, 3, 4));
    }
}
