//! Tangent-linear and adjoint diagnostics, shared by `riot check` and the
//! acceptance suite.

use riot_core::{rng, Dynamics, Problem, Vector, WorkLedger};

use crate::error::HarnessError;

/// Largest `|⟨Hd, w⟩ - ⟨d, Hᵀw⟩| / (‖Hd‖ ‖w‖)` over `pairs` random
/// Gaussian pairs, with `H` linearized at the background.
pub fn adjoint_defect<M: Dynamics>(problem: &Problem<M>, pairs: usize, seed: u64) -> Result<f64, HarnessError> {
    let n = problem.dim();
    let ledger = WorkLedger::new();
    let state = problem.outer_state(problem.background().clone(), Vector::zeros(n), 0, &ledger)?;
    let mut g = rng::stream(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let d = rng::normal_vector(&mut g, n);
        let w = rng::normal_vector(&mut g, problem.obs_count());
        let hd = problem.linearized_observe(&state.traj, &d, &ledger);
        let htw = problem.linearized_observe_adjoint(&state.traj, &w, &ledger);
        let denom = hd.norm() * w.norm();
        if denom == 0.0 {
            continue;
        }
        worst = worst.max((hd.dot(&w) - d.dot(&htw)).abs() / denom);
    }
    Ok(worst)
}

/// Taylor remainders `‖h(x + εd) - h(x) - ε H d‖` of the model
/// observations at the background along a random unit direction.
pub fn taylor_remainders<M: Dynamics>(
    problem: &Problem<M>,
    eps: &[f64],
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let n = problem.dim();
    let model = problem.model();
    let net = problem.network();
    let ledger = WorkLedger::new();
    let x = problem.background();
    let traj = model.integrate(x.as_slice())?;
    let h0 = net.observe(&traj)?;
    let mut g = rng::stream(seed, 0);
    let d = rng::normal_vector(&mut g, n).normalize();
    let hd = problem.linearized_observe(&traj, &d, &ledger);
    eps.iter()
        .map(|&e| {
            let xe = x + &d * e;
            let he = net.observe(&model.integrate(xe.as_slice())?)?;
            Ok((he - &h0 - &hd * e).norm())
        })
        .collect()
}

/// Least-squares slope of `log r` against `log ε`.
pub fn convergence_order(eps: &[f64], remainders: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(remainders)
        .map(|(e, r)| (e.log10(), r.log10()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Orders between consecutive `ε`.
pub fn pairwise_orders(eps: &[f64], remainders: &[f64]) -> Vec<f64> {
    eps.windows(2)
        .zip(remainders.windows(2))
        .map(|(e, r)| (r[0] / r[1]).log10() / (e[0] / e[1]).log10())
        .collect()
}
