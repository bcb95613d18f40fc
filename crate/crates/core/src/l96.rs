//! Lorenz-96 forward model, integrated with classical fourth-order
//! Runge-Kutta. The tangent-linear and adjoint steps differentiate the
//! discrete RK4 scheme, so the adjoint identity holds to round-off.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::Dynamics;
use crate::{Error, Result, Vector};

/// Amplitude of the spin-up perturbation added at site `n / 2`.
pub const SPINUP_PERTURBATION: f64 = 0.008;
/// Spin-up length used to produce the truth state.
pub const SPINUP_STEPS: usize = 144_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L96Config {
    pub n: usize,
    pub forcing: f64,
    pub dt: f64,
    pub steps: usize,
}

impl L96Config {
    pub fn new(n: usize, forcing: f64, dt: f64, steps: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::config("Lorenz-96 needs at least 4 sites"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("time step must be positive"));
        }
        if !forcing.is_finite() {
            return Err(Error::config("forcing must be finite"));
        }
        Ok(L96Config {
            n,
            forcing,
            dt,
            steps,
        })
    }

    /// Same model with a different window length.
    pub fn with_steps(self, steps: usize) -> Self {
        L96Config { steps, ..self }
    }

    /// Spin-up from the all-ones state perturbed at site `n / 2`.
    pub fn spinup(&self, spinup_steps: usize) -> Result<Vector> {
        let mut x = vec![1.0; self.n];
        x[self.n / 2] += SPINUP_PERTURBATION;
        let mut next = vec![0.0; self.n];
        for s in 0..spinup_steps {
            self.step(&x, &mut next);
            if next
                .iter()
                .any(|v| !v.is_finite() || v.abs() > crate::dynamics::DIVERGENCE_LIMIT)
            {
                return Err(Error::Divergence { step: s + 1 });
            }
            core::mem::swap(&mut x, &mut next);
        }
        Ok(Vector::from_vec(x))
    }
}

/// `d_i = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F` with cyclic indices.
pub fn tendency(x: &[f64], forcing: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    tendency_into(x, forcing, &mut out);
    out
}

/// Checked form of [`tendency`] against a configuration.
pub fn l96_tendency(x: &[f64], cfg: &L96Config) -> Result<Vector> {
    Error::check_dim("Lorenz-96 state", cfg.n, x.len())?;
    Ok(Vector::from_vec(tendency(x, cfg.forcing)))
}

fn tendency_into(x: &[f64], forcing: f64, out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let ip1 = x[(i + 1) % n];
        let im1 = x[(i + n - 1) % n];
        let im2 = x[(i + n - 2) % n];
        out[i] = (ip1 - im2) * im1 - x[i] + forcing;
    }
}

/// Jacobian of the tendency at `x` applied to `dx`.
fn tendency_tl(x: &[f64], dx: &[f64], out: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let (ip1, im1, im2) = ((i + 1) % n, (i + n - 1) % n, (i + n - 2) % n);
        out[i] = (dx[ip1] - dx[im2]) * x[im1] + (x[ip1] - x[im2]) * dx[im1] - dx[i];
    }
}

/// Transpose of [`tendency_tl`].
fn tendency_ad(x: &[f64], adj: &[f64], out: &mut [f64]) {
    let n = x.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..n {
        let (ip1, im1, im2) = ((i + 1) % n, (i + n - 1) % n, (i + n - 2) % n);
        let a = adj[i];
        out[ip1] += x[im1] * a;
        out[im2] -= x[im1] * a;
        out[im1] += (x[ip1] - x[im2]) * a;
        out[i] -= a;
    }
}

/// RK4 stage inputs `x, x + h/2 k1, x + h/2 k2, x + h k3` and stage slopes.
struct Stages {
    inputs: [Vec<f64>; 4],
    slopes: [Vec<f64>; 4],
}

impl Stages {
    fn compute(x: &[f64], forcing: f64, h: f64) -> Self {
        let n = x.len();
        let mut inputs = [x.to_vec(), vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut slopes = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let coeff = [0.5 * h, 0.5 * h, h];
        for s in 0..4 {
            tendency_into(&inputs[s], forcing, &mut slopes[s]);
            if s < 3 {
                for i in 0..n {
                    inputs[s + 1][i] = x[i] + coeff[s] * slopes[s][i];
                }
            }
        }
        Stages { inputs, slopes }
    }
}

impl Dynamics for L96Config {
    fn dim(&self) -> usize {
        self.n
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn step(&self, x: &[f64], out: &mut [f64]) {
        let h = self.dt;
        let st = Stages::compute(x, self.forcing, h);
        let k = &st.slopes;
        for i in 0..x.len() {
            out[i] = x[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }

    fn tl_step(&self, x: &[f64], dx: &[f64], out: &mut [f64]) {
        let n = x.len();
        let h = self.dt;
        let st = Stages::compute(x, self.forcing, h);
        let coeff = [0.5 * h, 0.5 * h, h];
        let mut dk = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut din = dx.to_vec();
        for s in 0..4 {
            tendency_tl(&st.inputs[s], &din, &mut dk[s]);
            if s < 3 {
                for i in 0..n {
                    din[i] = dx[i] + coeff[s] * dk[s][i];
                }
            }
        }
        for i in 0..n {
            out[i] = dx[i] + h / 6.0 * (dk[0][i] + 2.0 * dk[1][i] + 2.0 * dk[2][i] + dk[3][i]);
        }
    }

    fn ad_step(&self, x: &[f64], adj: &[f64], out: &mut [f64]) {
        let n = x.len();
        let h = self.dt;
        let st = Stages::compute(x, self.forcing, h);
        let weights = [h / 6.0, h / 3.0, h / 3.0, h / 6.0];
        let coeff = [0.5 * h, 0.5 * h, h];
        // Adjoints of the stage slopes, seeded by the final combination.
        let mut adk: [Vec<f64>; 4] = core::array::from_fn(|s| adj.iter().map(|a| weights[s] * a).collect());
        out.copy_from_slice(adj);
        let mut t = vec![0.0; n];
        for s in (0..4).rev() {
            tendency_ad(&st.inputs[s], &adk[s], &mut t);
            for i in 0..n {
                out[i] += t[i];
            }
            if s > 0 {
                for i in 0..n {
                    adk[s - 1][i] += coeff[s - 1] * t[i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn tendency_hand_example() {
        let d = tendency(&[1.0, 2.0, 3.0, 4.0], 0.0);
        assert_eq!(d, vec![-5.0, -3.0, 3.0, -7.0]);
    }

    #[test]
    fn equilibrium_and_zero_state() {
        let f = 8.0;
        assert!(tendency(&[f; 10], f).iter().all(|&v| v == 0.0));
        assert!(tendency(&[0.0; 10], f).iter().all(|&v| v == f));
    }

    #[test]
    fn tendency_rejects_wrong_length() {
        let cfg = L96Config::new(6, 8.0, 0.01, 1).unwrap();
        assert!(matches!(
            l96_tendency(&[0.0; 5], &cfg),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(L96Config::new(3, 8.0, 0.01, 1).is_err());
        assert!(L96Config::new(4, 8.0, 0.0, 1).is_err());
        assert!(L96Config::new(4, 8.0, 0.01, 0).is_ok());
    }

    #[test]
    fn zero_step_spinup_is_perturbed_ones() {
        let cfg = L96Config::new(10, 8.0, 0.01, 0).unwrap();
        let x = cfg.spinup(0).unwrap();
        for (i, v) in x.iter().enumerate() {
            let expected = if i == 5 { 1.008 } else { 1.0 };
            assert_eq!(*v, expected);
        }
    }

    #[test]
    fn stage_tl_matches_single_step_fd() {
        let cfg = L96Config::new(8, 8.0, 0.05, 1).unwrap();
        let mut r = rng::stream(5, 0);
        let x = rng::normal_vector(&mut r, 8) * 3.0;
        let d = rng::normal_vector(&mut r, 8);
        let mut tl = vec![0.0; 8];
        cfg.tl_step(x.as_slice(), d.as_slice(), &mut tl);
        let eps = 1e-6;
        let (mut p, mut m) = (vec![0.0; 8], vec![0.0; 8]);
        cfg.step((&x + &d * eps).as_slice(), &mut p);
        cfg.step((&x - &d * eps).as_slice(), &mut m);
        for i in 0..8 {
            let fd = (p[i] - m[i]) / (2.0 * eps);
            assert!((fd - tl[i]).abs() < 1e-7, "{fd} vs {}", tl[i]);
        }
    }
}
