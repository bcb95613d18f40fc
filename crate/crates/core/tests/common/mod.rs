#![allow(dead_code)]

use std::sync::Mutex;

use riot_core::dynamics::{Dynamics, LinearDynamics};
use riot_core::l96::L96Config;
use riot_core::obs::{sqrt_of_matrix, ObsNetwork, SqrtMethod};
use riot_core::operator::BatchExecutor;
use riot_core::{build_twin, rng, Matrix, Problem, Result, TwinConfig, Vector};

pub const F: f64 = 8.0;

/// Small L96 twin; `ℓ = 1` because the `ℓ = 1.5` cyclic Gaussian is
/// indefinite for `n ≤ 12`.
pub fn small_l96(n: usize, r: usize, steps: usize, seed: u64) -> Problem<L96Config> {
    let model = L96Config::new(n, F, 0.01, steps).unwrap();
    let truth = model.spinup(2000).unwrap();
    let net = ObsNetwork::random(n, steps, r, false, seed).unwrap();
    let mut cfg = TwinConfig::new(F, seed);
    cfg.length_scale = 1.0;
    build_twin(model, &truth, net, &cfg).unwrap()
}

/// `x_{s+1} = (I + 0.2 G/√n) x_s`; the incremental problem is exactly quadratic.
pub fn linear_model(n: usize, steps: usize, seed: u64) -> LinearDynamics {
    let mut r = rng::stream(seed, 99);
    let g = rng::normal_matrix(&mut r, n, n) * (0.2 / (n as f64).sqrt());
    LinearDynamics::new(Matrix::identity(n, n) + g, steps).unwrap()
}

pub fn linear_problem(n: usize, r: usize, steps: usize, seed: u64) -> Problem<LinearDynamics> {
    let model = linear_model(n, steps, seed);
    let mut g = rng::stream(seed, 98);
    let truth = rng::normal_vector(&mut g, n) * 3.0 + Vector::from_element(n, F);
    let net = ObsNetwork::random(n, steps, r, true, seed).unwrap();
    let mut cfg = TwinConfig::new(F, seed);
    cfg.length_scale = 1.0;
    build_twin(model, &truth, net, &cfg).unwrap()
}

/// Generic problem with a random SPD prior and unit steps; `B = L Lᵀ` with a
/// Cholesky factor so the non-symmetric factor path is exercised.
pub fn cholesky_problem(n: usize, r: usize, steps: usize, seed: u64) -> Problem<LinearDynamics> {
    let model = linear_model(n, steps, seed);
    let mut g = rng::stream(seed, 97);
    let h = rng::normal_matrix(&mut g, n, n);
    let b = &h * h.transpose() / n as f64 + Matrix::identity(n, n) * 0.5;
    let l = sqrt_of_matrix(&b, SqrtMethod::Cholesky).unwrap();
    let net = ObsNetwork::random(n, steps, r, true, seed).unwrap();
    let xb = rng::normal_vector(&mut g, n);
    let y = rng::normal_vector(&mut g, r);
    let var = Vector::from_fn(r, |i, _| 0.5 + 0.1 * i as f64);
    Problem::new(model, net, xb, y, b, l, var).unwrap()
}

/// Dense `H`: row `i` is the TL response at observation `i` to unit inputs,
/// built by explicit propagator powers for linear models.
pub fn dense_obs_operator_linear(p: &Problem<LinearDynamics>) -> Matrix {
    let n = p.dim();
    let steps = p.model().steps();
    let mut powers = vec![Matrix::identity(n, n)];
    for s in 0..steps {
        powers.push(&p.model().propagator * &powers[s]);
    }
    let pts = p.network().points();
    Matrix::from_fn(pts.len(), n, |i, j| powers[pts[i].step][(pts[i].site, j)])
}

/// Dense `H` around `x` for any model by TL on unit vectors.
pub fn dense_obs_operator<M: Dynamics>(p: &Problem<M>, x: &Vector) -> Matrix {
    let n = p.dim();
    let traj = p.model().integrate(x.as_slice()).unwrap();
    let mut h = Matrix::zeros(p.obs_count(), n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        let seq = p.model().tangent_linear(&traj, &e).unwrap();
        h.set_column(j, &p.network().sample(&seq));
    }
    h
}

/// `Lᵀ Hᵀ R⁻¹ H L` from a dense `H`.
pub fn dense_hessian<M: Dynamics>(p: &Problem<M>, h: &Matrix) -> Matrix {
    let l = &p.prior_sqrt().matrix;
    let rinv = Matrix::from_diagonal(&p.obs_variances().map(|v| 1.0 / v));
    let a = l.transpose() * h.transpose() * rinv * h * l;
    (&a + a.transpose()) * 0.5
}

/// Scoped-thread executor; tasks are claimed from a shared counter so the
/// assignment of tasks to threads varies from run to run.
pub struct Threads(pub usize);

impl BatchExecutor for Threads {
    fn workers(&self) -> usize {
        self.0
    }

    fn try_map(
        &self,
        tasks: usize,
        task: &(dyn Fn(usize) -> Result<Vector> + Sync),
    ) -> Result<Vec<Vector>> {
        let next = Mutex::new(0usize);
        let slots: Vec<Mutex<Option<Result<Vector>>>> = (0..tasks).map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..self.0.max(1) {
                s.spawn(|| loop {
                    let i = {
                        let mut g = next.lock().unwrap();
                        let i = *g;
                        *g += 1;
                        i
                    };
                    if i >= tasks {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(task(i));
                });
            }
        });
        slots.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect()
    }
}
