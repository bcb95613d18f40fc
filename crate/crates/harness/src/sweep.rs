//! Error-vs-rank sweeps against exact dense oracles on the first outer loop.

use riot_core::hessian::DENSE_LIMIT;
use riot_core::operator::assemble_dense;
use riot_core::posterior::{adaptive_kind, covariance_error, dense_posterior, increment, lra_covariance, lru_covariance};
use riot_core::rsvd::{exact_eig_dense, randomized_eig};
use riot_core::solvers::krylov::lanczos;
use riot_core::{
    Dynamics, EigenPairs, Error, Matrix, PosteriorEstimate, Problem, Sequential, SketchConfig, UpdateKind, Vector,
    WorkLedger,
};

use crate::error::HarnessError;
use crate::exec::Pool;
use crate::output::{fmt_f64, Table};

pub const SWEEP_HEADER: [&str; 9] = [
    "rank",
    "method",
    "oversample",
    "samples",
    "kind",
    "retained",
    "smallest_eig",
    "increment_error",
    "covariance_error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rank: usize,
    /// `varcg`, `riot`, `tsvd-lra`, `tsvd-lru` or `tsvd-adaptive`.
    pub method: &'static str,
    /// Oversampling actually used (RIOT only).
    pub oversample: Option<usize>,
    /// Sketch seeds behind a median (RIOT), otherwise one.
    pub samples: usize,
    /// `mixed` when RIOT seeds disagree.
    pub kind: &'static str,
    pub retained: usize,
    pub smallest_eig: Option<f64>,
    /// `‖L(δṽ - δv)‖²`, the squared state-space increment error.
    pub increment_error: f64,
    /// Relative Frobenius error of the posterior covariance.
    pub covariance_error: f64,
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.rank.to_string(),
            self.method.to_string(),
            self.oversample.map(|p| p.to_string()).unwrap_or_default(),
            self.samples.to_string(),
            self.kind.to_string(),
            self.retained.to_string(),
            self.smallest_eig.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.increment_error),
            fmt_f64(self.covariance_error),
        ]
    }
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    Table::new(&SWEEP_HEADER, rows.iter().map(SweepRow::record).collect())
}

/// Dense first-outer-loop quantities of a problem.
pub struct Oracle {
    pub hessian: Matrix,
    pub rhs: Vector,
    pub eigs: EigenPairs,
    /// `(I + A)⁻¹ b`.
    pub increment: Vector,
    pub posterior: Matrix,
    prior_sqrt: Matrix,
    prior_cov: Matrix,
}

impl Oracle {
    pub fn new<M: Dynamics>(problem: &Problem<M>, pool: &Pool) -> Result<Self, HarnessError> {
        let n = problem.dim();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { dim: n, limit: DENSE_LIMIT }.into());
        }
        let ledger = WorkLedger::new();
        let state = problem.outer_state(problem.background().clone(), Vector::zeros(n), 0, &ledger)?;
        let rhs = problem.gradient(&state, &ledger);
        let op = problem.make_hessian(&state, &ledger);
        let a = assemble_dense(&op, pool, &ledger, DENSE_LIMIT)?;
        let a = (&a + a.transpose()) * 0.5;
        let shifted = &a + Matrix::identity(n, n);
        let inc = shifted
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("I + A"))?
            .solve(&rhs);
        let prior_sqrt = problem.prior_sqrt().matrix.clone();
        Ok(Oracle {
            posterior: dense_posterior(&prior_sqrt, &a)?,
            eigs: exact_eig_dense(&a),
            hessian: a,
            rhs,
            increment: inc,
            prior_cov: problem.prior_cov().clone(),
            prior_sqrt,
        })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn estimate(&self, kind: UpdateKind, eigs: EigenPairs) -> PosteriorEstimate {
        match kind {
            UpdateKind::Lra => lra_covariance(eigs, &self.prior_sqrt),
            UpdateKind::Lru => lru_covariance(eigs, &self.prior_sqrt, &self.prior_cov),
        }
        .expect("dimensions fixed by the oracle")
    }

    pub fn increment_error(&self, dv: &Vector) -> f64 {
        (&self.prior_sqrt * (dv - &self.increment)).norm_squared()
    }

    pub fn covariance_error(&self, est: &PosteriorEstimate) -> f64 {
        covariance_error(&est.covariance(), &self.posterior).expect("dimensions fixed by the oracle")
    }

    /// Errors of the increment and covariance built from `eigs` with `kind`.
    /// The increment uses the same `kind` unless `increment_kind` says
    /// otherwise.
    fn score(&self, kind: UpdateKind, increment_kind: UpdateKind, eigs: EigenPairs) -> (f64, f64) {
        let inc = increment(increment_kind, &eigs, &self.rhs);
        (self.increment_error(&inc), self.covariance_error(&self.estimate(kind, eigs)))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// For every rank: VarCG with `rank` iterations (LRA increment through the
/// Ritz pairs, adaptive covariance), RIOT with `rank` retained pairs for
/// each oversampling in `oversample` (median over `sketch_seeds`, adaptive
/// increment and covariance), and exact truncated eigendecompositions with
/// the LRA, LRU and adaptive forms.
///
/// Oversampling is capped at `n - rank`.
pub fn rank_sweep<M: Dynamics>(
    problem: &Problem<M>,
    ranks: &[usize],
    oversample: &[usize],
    sketch_seeds: &[u64],
    pool: &Pool,
) -> Result<(Oracle, Vec<SweepRow>), HarnessError> {
    let oracle = Oracle::new(problem, pool)?;
    let n = oracle.dim();
    if let Some(&k) = ranks.iter().find(|&&k| k == 0 || k > n) {
        return Err(HarnessError::Config(format!("sweep rank {k} outside 1..={n}")));
    }
    if sketch_seeds.is_empty() && !oversample.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one sketch seed".into()));
    }
    let ledger = WorkLedger::new();
    let state = problem.outer_state(problem.background().clone(), Vector::zeros(n), 0, &ledger)?;
    let op = problem.make_hessian(&state, &ledger);

    let mut rows = Vec::new();
    for &k in ranks {
        let tsvd = oracle.eigs.truncated(k);
        let smallest = tsvd.smallest();
        for (method, kind) in [
            ("tsvd-lra", UpdateKind::Lra),
            ("tsvd-lru", UpdateKind::Lru),
            ("tsvd-adaptive", adaptive_kind(&tsvd)),
        ] {
            let (inc, cov) = oracle.score(kind, kind, tsvd.clone());
            rows.push(SweepRow {
                rank: k,
                method,
                oversample: None,
                samples: 1,
                kind: kind.as_str(),
                retained: tsvd.len(),
                smallest_eig: smallest,
                increment_error: inc,
                covariance_error: cov,
            });
        }

        let ritz = lanczos(&op, &oracle.rhs, k, &ledger).ritz();
        let kind = adaptive_kind(&ritz);
        let (inc, cov) = oracle.score(kind, UpdateKind::Lra, ritz.clone());
        rows.push(SweepRow {
            rank: k,
            method: "varcg",
            oversample: None,
            samples: 1,
            kind: kind.as_str(),
            retained: ritz.len(),
            smallest_eig: ritz.smallest(),
            increment_error: inc,
            covariance_error: cov,
        });

        for &p in oversample {
            let p = p.min(n - k);
            let runs = pool.map_ordered(sketch_seeds.len(), &|i| {
                let cfg = SketchConfig {
                    rank: k,
                    oversample: p,
                    seed: sketch_seeds[i],
                    stream: 0,
                };
                let eigs = randomized_eig(&op, &cfg, None, &Sequential, &ledger)?;
                let kind = adaptive_kind(&eigs);
                let (inc, cov) = oracle.score(kind, kind, eigs.clone());
                Ok::<_, Error>((kind, eigs.len(), eigs.smallest(), inc, cov))
            });
            let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
            let kinds: Vec<UpdateKind> = runs.iter().map(|r| r.0).collect();
            let kind = if kinds.iter().all(|k| *k == kinds[0]) {
                kinds[0].as_str()
            } else {
                "mixed"
            };
            let smallest: Vec<f64> = runs.iter().filter_map(|r| r.2).collect();
            rows.push(SweepRow {
                rank: k,
                method: "riot",
                oversample: Some(p),
                samples: runs.len(),
                kind,
                retained: runs.iter().map(|r| r.1).min().unwrap_or(0),
                smallest_eig: (!smallest.is_empty()).then(|| median(smallest)),
                increment_error: median(runs.iter().map(|r| r.3).collect()),
                covariance_error: median(runs.iter().map(|r| r.4).collect()),
            });
        }
    }
    Ok((oracle, rows))
}
