//! Experiment configuration read from TOML.
//!
//! ```toml
//! seeds = [0, 1, 2]
//! output_dir = "out"
//!
//! [model]
//! n = 300
//! forcing = 8.0
//! dt = 0.01
//! spinup_steps = 144000
//!
//! [window]
//! label = "6h"        # 6h, 48h, 72h and 96h imply steps 5, 40, 60, 80
//!
//! [observations]
//! count = 100
//!
//! [covariance]
//! length_scale = 1.5
//! sqrt = "symmetric"
//!
//! [[solver]]
//! method = "riot"
//! m = 35
//! oversample = 5
//! precond = true
//! rotation = true
//! ```

use std::path::{Path, PathBuf};

use riot_core::l96::{L96Config, SPINUP_STEPS};
use riot_core::obs::{SqrtMethod, PRIOR_LENGTH_SCALE};
use riot_core::solvers::AdaptiveStrategy;
use riot_core::{Method, SolverConfig, UpdateKind};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// The four assimilation windows of the twin experiment, as `(label, steps)`
/// at `dt = 0.01`.
pub const WINDOWS: [(&str, usize); 4] = [("6h", 5), ("48h", 40), ("72h", 60), ("96h", 80)];

pub fn window_steps(label: &str) -> Option<usize> {
    WINDOWS.iter().find(|(l, _)| *l == label).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n: usize,
    #[serde(default = "default_forcing")]
    pub forcing: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_spinup")]
    pub spinup_steps: usize,
}

fn default_forcing() -> f64 {
    8.0
}

fn default_dt() -> f64 {
    0.01
}

fn default_spinup() -> usize {
    SPINUP_STEPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub label: String,
    /// Overrides the steps implied by `label`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl WindowSpec {
    pub fn named(label: &str) -> Self {
        WindowSpec {
            label: label.to_string(),
            steps: None,
        }
    }

    pub fn steps(&self) -> Option<usize> {
        self.steps.or_else(|| window_steps(&self.label))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub count: usize,
    #[serde(default)]
    pub include_initial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SqrtChoice {
    #[default]
    Symmetric,
    Cholesky,
}

impl From<SqrtChoice> for SqrtMethod {
    fn from(s: SqrtChoice) -> Self {
        match s {
            SqrtChoice::Symmetric => SqrtMethod::Symmetric,
            SqrtChoice::Cholesky => SqrtMethod::Cholesky,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    #[serde(default = "default_length_scale")]
    pub length_scale: f64,
    #[serde(default)]
    pub sqrt: SqrtChoice,
}

fn default_length_scale() -> f64 {
    PRIOR_LENGTH_SCALE
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        CovarianceSpec {
            length_scale: PRIOR_LENGTH_SCALE,
            sqrt: SqrtChoice::Symmetric,
        }
    }
}

/// One column of the solver grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub method: String,
    pub m: usize,
    #[serde(default = "one")]
    pub l: usize,
    #[serde(default)]
    pub oversample: usize,
    #[serde(default)]
    pub precond: bool,
    #[serde(default)]
    pub rotation: bool,
    /// `spectral`, `deterministic`, `lra`, `lru` or `transition:<rank>`.
    #[serde(default = "default_adaptive")]
    pub adaptive: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer_loops: Option<usize>,
    #[serde(default)]
    pub freeze_perturbations: bool,
}

fn one() -> usize {
    1
}

fn default_adaptive() -> String {
    "spectral".to_string()
}

impl SolverSpec {
    pub fn new(method: Method, m: usize) -> Self {
        SolverSpec {
            method: method.name().to_string(),
            m,
            l: 1,
            oversample: 0,
            precond: false,
            rotation: false,
            adaptive: default_adaptive(),
            outer_loops: None,
            freeze_perturbations: false,
        }
    }

    pub fn with_precond(mut self, precond: bool, rotation: bool) -> Self {
        self.precond = precond;
        self.rotation = rotation;
        self
    }

    pub fn with_oversample(mut self, p: usize) -> Self {
        self.oversample = p;
        self
    }

    pub fn with_block(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn with_outer_loops(mut self, k: usize) -> Self {
        self.outer_loops = Some(k);
        self
    }

    pub fn method(&self) -> Result<Method, HarnessError> {
        Method::from_name(&self.method)
            .ok_or_else(|| HarnessError::Config(format!("unknown solver method `{}`", self.method)))
    }

    pub fn adaptive(&self) -> Result<AdaptiveStrategy, HarnessError> {
        parse_adaptive(&self.adaptive)
    }

    /// Core configuration for a given seed; the loop budget falls back to
    /// `default_outer`.
    pub fn to_config(&self, seed: u64, default_outer: usize) -> Result<SolverConfig, HarnessError> {
        let mut cfg = SolverConfig::new(self.method()?, self.m)
            .with_block(self.l)
            .with_oversample(self.oversample)
            .with_precond(self.precond, self.rotation)
            .with_outer_loops(self.outer_loops.unwrap_or(default_outer))
            .with_seed(seed)
            .with_adaptive(self.adaptive()?);
        cfg.freeze_perturbations = self.freeze_perturbations;
        Ok(cfg)
    }
}

pub fn parse_adaptive(s: &str) -> Result<AdaptiveStrategy, HarnessError> {
    match s {
        "spectral" => Ok(AdaptiveStrategy::Spectral),
        "deterministic" => Ok(AdaptiveStrategy::Deterministic),
        "lra" => Ok(AdaptiveStrategy::Forced(UpdateKind::Lra)),
        "lru" => Ok(AdaptiveStrategy::Forced(UpdateKind::Lru)),
        _ => s
            .strip_prefix("transition:")
            .and_then(|r| r.parse().ok())
            .map(AdaptiveStrategy::TransitionRank)
            .ok_or_else(|| HarnessError::Config(format!("unknown adaptive strategy `{s}`"))),
    }
}

/// Parameters of `riot sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub ranks: Vec<usize>,
    #[serde(default = "default_sweep_oversample")]
    pub oversample: Vec<usize>,
    /// Sketch seeds for the RIOT median; the problem itself uses the first
    /// experiment seed.
    #[serde(default = "default_sweep_seeds")]
    pub sketch_seeds: Vec<u64>,
}

fn default_sweep_oversample() -> Vec<usize> {
    vec![0, 10]
}

fn default_sweep_seeds() -> Vec<u64> {
    (0..20).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: ModelSpec,
    pub window: WindowSpec,
    pub observations: ObservationSpec,
    #[serde(default)]
    pub covariance: CovarianceSpec,
    pub seeds: Vec<u64>,
    #[serde(default = "default_outer_loops")]
    pub outer_loops: usize,
    /// Relative distance to the reference cost counted as converged.
    #[serde(default = "default_tolerance")]
    pub convergence_tolerance: f64,
    /// Worker count assumed by the depth ledger; `0` means one worker per
    /// task of a batch. Independent of the threads actually used.
    #[serde(default)]
    pub ledger_workers: usize,
    #[serde(default, rename = "solver")]
    pub solvers: Vec<SolverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_outer_loops() -> usize {
    15
}

fn default_tolerance() -> f64 {
    0.03
}

impl ExperimentSpec {
    /// The L-96 twin at `n` sites with `obs` observations over `window`.
    pub fn l96(n: usize, window: &str, obs: usize, seeds: Vec<u64>) -> Self {
        ExperimentSpec {
            model: ModelSpec {
                n,
                forcing: default_forcing(),
                dt: default_dt(),
                spinup_steps: default_spinup(),
            },
            window: WindowSpec::named(window),
            observations: ObservationSpec {
                count: obs,
                include_initial: false,
            },
            covariance: CovarianceSpec::default(),
            seeds,
            outer_loops: default_outer_loops(),
            convergence_tolerance: default_tolerance(),
            ledger_workers: 0,
            solvers: Vec::new(),
            sweep: None,
            output_dir: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn steps(&self) -> Result<usize, HarnessError> {
        self.window.steps().ok_or_else(|| {
            HarnessError::Config(format!(
                "window `{}` has no known length; set window.steps",
                self.window.label
            ))
        })
    }

    pub fn model_config(&self) -> Result<L96Config, HarnessError> {
        Ok(L96Config::new(
            self.model.n,
            self.model.forcing,
            self.model.dt,
            self.steps()?,
        )?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model_config()?;
        if self.covariance.length_scale.is_nan() || self.covariance.length_scale < 0.0 {
            return Err(HarnessError::Config("covariance.length_scale must be nonnegative".into()));
        }
        let sketch_seeds = self.sweep.iter().flat_map(|s| &s.sketch_seeds);
        if let Some(s) = self.seeds.iter().chain(sketch_seeds).find(|&&s| i64::try_from(s).is_err()) {
            return Err(HarnessError::Config(format!("seed {s} exceeds the TOML integer range")));
        }
        if self.outer_loops == 0 {
            return Err(HarnessError::Config("outer_loops must be at least 1".into()));
        }
        if self.convergence_tolerance.is_nan() || self.convergence_tolerance < 0.0 {
            return Err(HarnessError::Config("convergence_tolerance must be nonnegative".into()));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            let cfg = s
                .to_config(0, self.outer_loops)
                .map_err(|e| HarnessError::Config(format!("solver[{i}]: {e}")))?;
            cfg.validate(self.model.n, self.observations.count)
                .map_err(|e| HarnessError::Config(format!("solver[{i}]: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seeds = [3, 4]

[model]
n = 40
spinup_steps = 100

[window]
label = "48h"

[observations]
count = 20

[[solver]]
method = "riot"
m = 12
oversample = 2
precond = true
rotation = true

[[solver]]
method = "varcg"
m = 10
adaptive = "transition:4"
"#;

    #[test]
    fn parses_with_defaults() {
        let s = ExperimentSpec::parse(SAMPLE).unwrap();
        assert_eq!(s.steps().unwrap(), 40);
        assert_eq!(s.model.forcing, 8.0);
        assert_eq!(s.covariance.length_scale, 1.5);
        assert_eq!(s.outer_loops, 15);
        assert_eq!(s.solvers.len(), 2);
        assert_eq!(s.solvers[1].adaptive().unwrap(), AdaptiveStrategy::TransitionRank(4));
    }

    #[test]
    fn round_trips_through_toml() {
        let s = ExperimentSpec::parse(SAMPLE).unwrap();
        assert_eq!(ExperimentSpec::parse(&s.to_toml().unwrap()).unwrap(), s);
    }

    #[test]
    fn unknown_field_names_the_line() {
        let bad = SAMPLE.replace("count = 20", "count = 20\ncuont = 3");
        let msg = ExperimentSpec::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("cuont"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn rejects_bad_solver() {
        let bad = SAMPLE.replace("method = \"riot\"", "method = \"sgd\"");
        assert!(matches!(ExperimentSpec::parse(&bad), Err(HarnessError::Config(_))));
        let bad = SAMPLE.replace("m = 12", "m = 50");
        assert!(ExperimentSpec::parse(&bad).is_err());
        let bad = SAMPLE.replace("label = \"48h\"", "label = \"3d\"");
        assert!(ExperimentSpec::parse(&bad).is_err());
    }

    #[test]
    fn window_table() {
        assert_eq!(window_steps("6h"), Some(5));
        assert_eq!(window_steps("96h"), Some(80));
        assert_eq!(window_steps("1h"), None);
        let w = WindowSpec {
            label: "custom".into(),
            steps: Some(7),
        };
        assert_eq!(w.steps(), Some(7));
    }
}
