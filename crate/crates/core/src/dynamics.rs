//! Discrete-time forward models with exact tangent-linear and adjoint steps.
//!
//! A model only has to provide one nonlinear step and the action of its
//! Jacobian (and the Jacobian's transpose) at a given state; window
//! integration, trajectory storage, and the forward/reverse sweeps are shared.

use alloc::vec::Vec;

use crate::{Error, Matrix, Result, Vector};

/// Divergence guard applied after every nonlinear step.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// One model state and its time index within the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub values: Vector,
    pub step: usize,
}

/// Every state of a window, from step 0 to the model's step count.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<ModelState>,
}

impl Trajectory {
    pub fn states(&self) -> &[ModelState] {
        &self.states
    }

    pub fn state(&self, step: usize) -> &Vector {
        &self.states[step].values
    }

    pub fn initial(&self) -> &Vector {
        &self.states[0].values
    }

    pub fn last(&self) -> &Vector {
        &self.states[self.states.len() - 1].values
    }

    /// Number of stored states (`steps + 1`).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.states[0].values.len()
    }
}

pub trait Dynamics: Sync {
    /// State dimension.
    fn dim(&self) -> usize;

    /// Number of time steps in the assimilation window.
    fn steps(&self) -> usize;

    /// Advances `x` by one step into `out`.
    fn step(&self, x: &[f64], out: &mut [f64]);

    /// Jacobian of [`Dynamics::step`] at `x` applied to `dx`.
    fn tl_step(&self, x: &[f64], dx: &[f64], out: &mut [f64]);

    /// Transpose of the Jacobian of [`Dynamics::step`] at `x` applied to `adj`.
    fn ad_step(&self, x: &[f64], adj: &[f64], out: &mut [f64]);

    /// Runs the nonlinear model over the window, storing every state.
    fn integrate(&self, x0: &[f64]) -> Result<Trajectory> {
        Error::check_dim("initial state", self.dim(), x0.len())?;
        let mut states = Vec::with_capacity(self.steps() + 1);
        let mut x = Vector::from_column_slice(x0);
        check_finite(&x, 0)?;
        for s in 0..self.steps() {
            let mut next = Vector::zeros(x.len());
            self.step(x.as_slice(), next.as_mut_slice());
            check_finite(&next, s + 1)?;
            states.push(ModelState { values: x, step: s });
            x = next;
        }
        states.push(ModelState {
            values: x,
            step: self.steps(),
        });
        Ok(Trajectory { states })
    }

    /// Propagates `dx0` along `traj`, returning the perturbation at every
    /// step `0..=traj.steps()`.
    fn tangent_linear(&self, traj: &Trajectory, dx0: &Vector) -> Result<Vec<Vector>> {
        self.tangent_linear_to(traj, dx0, traj.steps())
    }

    /// Like [`Dynamics::tangent_linear`] but stops after `last` steps.
    fn tangent_linear_to(
        &self,
        traj: &Trajectory,
        dx0: &Vector,
        last: usize,
    ) -> Result<Vec<Vector>> {
        self.check_trajectory(traj)?;
        Error::check_dim("tangent-linear input", self.dim(), dx0.len())?;
        if last > traj.steps() {
            return Err(Error::Dimension {
                what: "tangent-linear horizon",
                expected: traj.steps(),
                found: last,
            });
        }
        let mut out = Vec::with_capacity(last + 1);
        out.push(dx0.clone());
        for s in 0..last {
            let mut next = Vector::zeros(dx0.len());
            self.tl_step(
                traj.state(s).as_slice(),
                out[s].as_slice(),
                next.as_mut_slice(),
            );
            out.push(next);
        }
        Ok(out)
    }

    /// Exact transpose of [`Dynamics::tangent_linear`]: given adjoint forcing
    /// for steps `0..forcing.len()`, returns the sensitivity at step 0.
    /// Steps beyond `forcing.len()` are treated as unforced.
    fn adjoint(&self, traj: &Trajectory, forcing: &[Vector]) -> Result<Vector> {
        self.check_trajectory(traj)?;
        if forcing.len() > traj.len() {
            return Err(Error::Dimension {
                what: "adjoint forcing length",
                expected: traj.len(),
                found: forcing.len(),
            });
        }
        for f in forcing {
            Error::check_dim("adjoint forcing", self.dim(), f.len())?;
        }
        let Some((top, rest)) = forcing.split_last() else {
            return Ok(Vector::zeros(self.dim()));
        };
        let mut adj = top.clone();
        let mut prev = Vector::zeros(self.dim());
        for s in (0..rest.len()).rev() {
            self.ad_step(
                traj.state(s).as_slice(),
                adj.as_slice(),
                prev.as_mut_slice(),
            );
            prev += &rest[s];
            core::mem::swap(&mut adj, &mut prev);
        }
        Ok(adj)
    }

    /// Adjoint of the map from `dx0` to the final-time perturbation.
    fn adjoint_final(&self, traj: &Trajectory, dy: &Vector) -> Result<Vector> {
        let mut forcing = alloc::vec![Vector::zeros(self.dim()); traj.len()];
        forcing[traj.len() - 1] = dy.clone();
        self.adjoint(traj, &forcing)
    }

    fn check_trajectory(&self, traj: &Trajectory) -> Result<()> {
        Error::check_dim("trajectory length", self.steps() + 1, traj.len())?;
        Error::check_dim("trajectory state", self.dim(), traj.dim())
    }
}

fn check_finite(x: &Vector, step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_LIMIT) {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

/// `x_{s+1} = M x_s`. Makes the incremental problem exactly quadratic, which
/// the dense-oracle tests rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    pub propagator: Matrix,
    pub steps: usize,
}

impl LinearDynamics {
    pub fn new(propagator: Matrix, steps: usize) -> Result<Self> {
        Error::check_dim("propagator", propagator.nrows(), propagator.ncols())?;
        Ok(LinearDynamics { propagator, steps })
    }
}

impl Dynamics for LinearDynamics {
    fn dim(&self) -> usize {
        self.propagator.nrows()
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn step(&self, x: &[f64], out: &mut [f64]) {
        self.tl_step(x, x, out);
    }

    fn tl_step(&self, _x: &[f64], dx: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| self.propagator[(i, j)] * dx[j]).sum();
        }
    }

    fn ad_step(&self, _x: &[f64], adj: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (j, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|i| self.propagator[(i, j)] * adj[i]).sum();
        }
    }
}
