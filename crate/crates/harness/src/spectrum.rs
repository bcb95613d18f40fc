//! First-outer-loop Hessian spectra and degrees of freedom for signal.

use riot_core::hessian::DENSE_LIMIT;
use riot_core::rsvd::{dofs, exact_eig, randomized_eig};
use riot_core::solvers::krylov::lanczos;
use riot_core::{Dynamics, EigenPairs, Method, Problem, SketchConfig, Vector, WorkLedger};

use crate::error::HarnessError;
use crate::exec::Pool;
use crate::output::{fmt_f64, Table};

pub const SPECTRUM_HEADER: [&str; 3] = ["index", "estimate", "exact"];

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub method: Method,
    pub m: usize,
    /// Decreasing estimates, zero-padded to the requested rank.
    pub estimates: Vec<f64>,
    pub dofs: f64,
    /// Full exact spectrum when requested and `n ≤ DENSE_LIMIT`.
    pub exact: Option<Vec<f64>>,
    pub exact_dofs: Option<f64>,
}

impl SpectrumReport {
    pub fn table(&self) -> Table {
        let rows = self.estimates.len().max(self.exact.as_ref().map_or(0, Vec::len));
        let cell = |v: Option<&f64>| v.copied().map(fmt_f64).unwrap_or_default();
        Table::new(
            &SPECTRUM_HEADER,
            (0..rows)
                .map(|i| {
                    vec![
                        i.to_string(),
                        cell(self.estimates.get(i)),
                        cell(self.exact.as_ref().and_then(|e| e.get(i))),
                    ]
                })
                .collect(),
        )
    }
}

/// Eigenvalue estimates of the prior-preconditioned Hessian at the
/// background. `m` is the Lanczos step count (VarCG) or the sketch size
/// (RIOT and RIOT-PSAS, retaining `m - oversample` pairs); Gauss-Newton
/// returns the exact spectrum.
pub fn spectrum_report<M: Dynamics>(
    problem: &Problem<M>,
    method: Method,
    m: usize,
    oversample: usize,
    seed: u64,
    with_exact: bool,
    pool: &Pool,
) -> Result<SpectrumReport, HarnessError> {
    let n = problem.dim();
    let ledger = WorkLedger::new();
    let state = problem.outer_state(problem.background().clone(), Vector::zeros(n), 0, &ledger)?;
    let op = problem.make_hessian(&state, &ledger);
    let exact = || exact_eig(&op, pool, &ledger);
    let sketch = |dim: usize| -> Result<SketchConfig, HarnessError> {
        if oversample >= m {
            return Err(HarnessError::Config(format!("oversample {oversample} must be below m = {m}")));
        }
        let cfg = SketchConfig {
            rank: m - oversample,
            oversample,
            seed,
            stream: 0,
        };
        cfg.validate(dim)?;
        Ok(cfg)
    };
    let (eigs, width): (EigenPairs, usize) = match method {
        Method::VarCg => (lanczos(&op, &problem.gradient(&state, &ledger), m, &ledger).ritz(), m),
        Method::Riot => (randomized_eig(&op, &sketch(n)?, None, pool, &ledger)?, m - oversample),
        Method::RiotPsas => {
            let r = problem.obs_count();
            if r == 0 {
                (EigenPairs::empty(0), m - oversample.min(m))
            } else {
                let dual = problem.make_dual_hessian(&state, &ledger);
                (randomized_eig(&dual, &sketch(r)?, None, pool, &ledger)?, m - oversample)
            }
        }
        Method::GaussNewton => (exact()?, n),
        Method::VarBl => {
            return Err(HarnessError::Config(
                "spectrum reports support varcg, riot, riot-psas and gauss-newton".into(),
            ))
        }
    };
    let mut estimates = eigs.values.clone();
    if estimates.len() < width {
        estimates.resize(width, 0.0);
    }
    let exact_eigs = if with_exact && n <= DENSE_LIMIT {
        Some(if method == Method::GaussNewton { eigs.clone() } else { exact()? })
    } else {
        None
    };
    Ok(SpectrumReport {
        method,
        m,
        dofs: dofs(&eigs),
        estimates,
        exact_dofs: exact_eigs.as_ref().map(dofs),
        exact: exact_eigs.map(|e| e.values),
    })
}
