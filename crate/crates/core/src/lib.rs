//! Matrix-free incremental 4D-Var on the Lorenz-96 system.
//!
//! The crate is `no_std` (with `alloc`) and contains the numerical core:
//! the Lorenz-96 model with its discrete tangent-linear and adjoint, the
//! observation and covariance machinery of a twin experiment, the
//! prior-preconditioned Hessian operators, randomized and exact symmetric
//! eigensolvers, the spectral preconditioner with sample rotation, low-rank
//! posterior estimates, and the outer-loop drivers (VarCG, VarBL, RIOT,
//! RIOT-PSAS and an exact Gauss-Newton reference).
//!
//! Threading, IO and file formats live in the `riot-harness` crate; parallel
//! operator application is abstracted behind [`operator::BatchExecutor`].

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod hessian;
pub mod l96;
pub mod ledger;
pub mod linalg;
pub mod obs;
pub mod operator;
pub mod posterior;
pub mod precond;
pub mod rng;
pub mod rsvd;
pub mod solvers;
pub mod twin;

pub use dynamics::{Dynamics, LinearDynamics, ModelState, Trajectory};
pub use error::{Error, Result};
pub use hessian::{DualHessianOp, HessianOp, OuterState, Problem};
pub use l96::L96Config;
pub use ledger::{WorkCounts, WorkLedger};
pub use obs::{CovarianceModel, Correlation, ObsNetwork, ObsPoint, SqrtFactor, SqrtMethod, TwinNoise};
pub use operator::{BatchExecutor, DenseOperator, LinearOperator, Sequential};
pub use posterior::{PosteriorEstimate, UpdateKind};
pub use precond::SpectralPreconditioner;
pub use rsvd::{EigenPairs, SketchConfig};
pub use solvers::{Method, OuterRecord, SolverConfig, SolverReport};
pub use twin::{build_twin, TwinConfig};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense column vector used for states, control vectors and observations.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used for covariances and small projected problems.
pub type Matrix = nalgebra::DMatrix<f64>;
