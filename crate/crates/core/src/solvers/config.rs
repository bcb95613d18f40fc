use alloc::format;

use crate::hessian::DENSE_LIMIT;
use crate::posterior::UpdateKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    VarCg,
    VarBl,
    Riot,
    RiotPsas,
    GaussNewton,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::VarCg,
        Method::VarBl,
        Method::Riot,
        Method::RiotPsas,
        Method::GaussNewton,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::VarCg => "varcg",
            Method::VarBl => "varbl",
            Method::Riot => "riot",
            Method::RiotPsas => "riot-psas",
            Method::GaussNewton => "gauss-newton",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// How RIOT and RIOT-PSAS choose between the LRA and LRU increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdaptiveStrategy {
    /// LRA iff the smallest retained eigenvalue exceeds one.
    #[default]
    Spectral,
    /// Evaluate both candidate states and keep the lower cost
    /// (two extra nonlinear runs per outer loop).
    Deterministic,
    Forced(UpdateKind),
    /// LRA below this many retained pairs, LRU from it on.
    TransitionRank(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Inner iterations (VarCG, VarBL) or total sketch samples (RIOT, RIOT-PSAS).
    pub m: usize,
    /// Block size of VarBL.
    pub l: usize,
    pub outer_loops: usize,
    pub precond: bool,
    pub rotation: bool,
    /// RIOT oversampling; `m - oversample` pairs are retained.
    pub oversample: usize,
    pub seed: u64,
    pub adaptive: AdaptiveStrategy,
    /// Reuse the first outer loop's VarBL gradient perturbations.
    pub freeze_perturbations: bool,
}

impl SolverConfig {
    pub fn new(method: Method, m: usize) -> Self {
        SolverConfig {
            method,
            m,
            l: 1,
            outer_loops: 15,
            precond: false,
            rotation: false,
            oversample: 0,
            seed: 0,
            adaptive: AdaptiveStrategy::Spectral,
            freeze_perturbations: false,
        }
    }

    pub fn with_outer_loops(mut self, k: usize) -> Self {
        self.outer_loops = k;
        self
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

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_adaptive(mut self, adaptive: AdaptiveStrategy) -> Self {
        self.adaptive = adaptive;
        self
    }

    /// Retained pairs of a randomized sketch.
    pub fn rank(&self) -> usize {
        self.m.saturating_sub(self.oversample)
    }

    /// Checks the configuration against a problem with state dimension `n`
    /// and `r` observations.
    pub fn validate(&self, n: usize, r: usize) -> Result<()> {
        let fail = |msg: &str| Err(Error::config(format!("{}: {msg}", self.method.name())));
        if self.outer_loops == 0 {
            return fail("at least one outer loop is required");
        }
        if self.rotation && !self.precond {
            return fail("rotation requires preconditioning");
        }
        match self.method {
            Method::GaussNewton => {
                if n > DENSE_LIMIT {
                    return Err(Error::TooLarge {
                        dim: n,
                        limit: DENSE_LIMIT,
                    });
                }
                return Ok(());
            }
            _ if self.m == 0 => return fail("m must be at least 1"),
            Method::VarCg if self.rotation => {
                return fail("rotation needs a sample block and is not defined for VarCG")
            }
            Method::VarBl if self.l == 0 => return fail("block size l must be at least 1"),
            Method::VarBl if self.l > n => return fail("block size l exceeds the state dimension"),
            Method::Riot | Method::RiotPsas => {
                let dim = if self.method == Method::Riot { n } else { r };
                if self.oversample >= self.m {
                    return fail("oversampling must leave at least one retained pair");
                }
                if self.m > dim && !(self.method == Method::RiotPsas && r == 0) {
                    return Err(Error::config(format!(
                        "{}: m = {} samples exceed the operator dimension {dim}",
                        self.method.name(),
                        self.m
                    )));
                }
                if self.method == Method::RiotPsas && self.precond {
                    return fail("preconditioning is only available in control space");
                }
            }
            _ => {}
        }
        Ok(())
    }
}
