//! Twin problems built from an [`ExperimentSpec`].

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use riot_core::l96::L96Config;
use riot_core::obs::ObsNetwork;
use riot_core::{build_twin, Problem, TwinConfig, Vector};

use crate::config::ExperimentSpec;
use crate::error::HarnessError;

type TruthKey = (usize, u64, u64, usize);

fn truth_cache() -> &'static Mutex<HashMap<TruthKey, Arc<Vector>>> {
    static CACHE: OnceLock<Mutex<HashMap<TruthKey, Arc<Vector>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Spun-up truth state, computed once per process for each model.
pub fn spinup_truth(spec: &ExperimentSpec) -> Result<Arc<Vector>, HarnessError> {
    let m = &spec.model;
    let key = (m.n, m.forcing.to_bits(), m.dt.to_bits(), m.spinup_steps);
    if let Some(t) = truth_cache().lock().unwrap().get(&key) {
        return Ok(t.clone());
    }
    let truth = Arc::new(spec.model_config()?.spinup(m.spinup_steps)?);
    truth_cache().lock().unwrap().insert(key, truth.clone());
    Ok(truth)
}

/// Truth and model shared by every seed of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub model: L96Config,
    pub truth: Arc<Vector>,
}

impl Experiment {
    pub fn new(spec: ExperimentSpec) -> Result<Self, HarnessError> {
        spec.validate()?;
        let model = spec.model_config()?;
        let truth = spinup_truth(&spec)?;
        Ok(Experiment { spec, model, truth })
    }

    /// Observation network, prior and observation perturbations all follow
    /// from `seed`.
    pub fn build_problem(&self, seed: u64) -> Result<Problem<L96Config>, HarnessError> {
        let s = &self.spec;
        let network = ObsNetwork::random(
            self.model.n,
            self.model.steps,
            s.observations.count,
            s.observations.include_initial,
            seed,
        )?;
        let mut twin = TwinConfig::new(s.model.forcing, seed);
        twin.length_scale = s.covariance.length_scale;
        twin.sqrt = s.covariance.sqrt.into();
        Ok(build_twin(self.model, &self.truth, network, &twin)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(obs: usize) -> ExperimentSpec {
        let mut s = ExperimentSpec::l96(20, "6h", obs, vec![1]);
        s.model.spinup_steps = 300;
        s
    }

    #[test]
    fn same_seed_same_problem() {
        let e = Experiment::new(spec(10)).unwrap();
        let a = e.build_problem(4).unwrap();
        let b = e.build_problem(4).unwrap();
        assert_eq!(a.background(), b.background());
        assert_eq!(a.observations(), b.observations());
        assert_eq!(a.network(), b.network());
        let c = e.build_problem(5).unwrap();
        assert_ne!(a.background(), c.background());
    }

    #[test]
    fn windows_share_the_truth() {
        let e6 = Experiment::new(spec(10)).unwrap();
        let mut s = spec(10);
        s.window.label = "96h".into();
        let e96 = Experiment::new(s).unwrap();
        assert_eq!(e6.truth, e96.truth);
        assert_eq!(e96.model.steps, 80);
    }

    #[test]
    fn no_observations_gives_prior_only_problem() {
        let e = Experiment::new(spec(0)).unwrap();
        let p = e.build_problem(2).unwrap();
        assert_eq!(p.obs_count(), 0);
    }
}
