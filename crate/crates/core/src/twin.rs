//! Twin-experiment assembly: truth → pseudo-observations → covariances →
//! perturbed prior and observations.

use crate::dynamics::Dynamics;
use crate::obs::{build_obs_cov, build_prior_cov, make_twin, sqrt_factor, ObsNetwork, SqrtMethod, TwinNoise};
use crate::{Problem, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinConfig {
    /// `F`, which enters both error-variance formulas.
    pub forcing: f64,
    /// Prior correlation length in grid cells; `0` gives a diagonal prior.
    pub length_scale: f64,
    pub sqrt: SqrtMethod,
    pub noise: TwinNoise,
    pub seed: u64,
}

impl TwinConfig {
    pub fn new(forcing: f64, seed: u64) -> Self {
        TwinConfig {
            forcing,
            length_scale: crate::obs::PRIOR_LENGTH_SCALE,
            sqrt: SqrtMethod::Symmetric,
            noise: TwinNoise::Gaussian,
            seed,
        }
    }
}

pub fn build_twin<M: Dynamics>(
    model: M,
    truth: &Vector,
    network: ObsNetwork,
    cfg: &TwinConfig,
) -> Result<Problem<M>> {
    let traj = model.integrate(truth.as_slice())?;
    let y_pseudo = network.observe(&traj)?;
    let prior = build_prior_cov(truth, cfg.forcing, cfg.length_scale)?;
    let prior_sqrt = sqrt_factor(&prior, cfg.sqrt)?;
    let obs = build_obs_cov(&y_pseudo, cfg.forcing)?;
    let (x_b, y) = make_twin(truth, &y_pseudo, &prior_sqrt, &obs, cfg.seed, cfg.noise)?;
    Problem::new(model, network, x_b, y, prior.dense(), prior_sqrt, obs.variances)
}
