//! Space-time observation networks, prior/observation error covariances and
//! their square roots, and the perturbed twin (prior, observations).

use alloc::vec::Vec;

use nalgebra::Cholesky;
use rand::seq::index;

use crate::dynamics::Trajectory;
use crate::linalg::{sqrt, sym_eig_desc};
use crate::{rng, Error, Matrix, Result, Vector};

/// Gaussian correlation length used for the prior, in grid cells.
pub const PRIOR_LENGTH_SCALE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsPoint {
    pub step: usize,
    pub site: usize,
}

/// Observation locations, sorted by `(step, site)` and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObsNetwork {
    points: Vec<ObsPoint>,
    n: usize,
    steps: usize,
}

impl ObsNetwork {
    pub fn new(mut points: Vec<ObsPoint>, n: usize, steps: usize) -> Result<Self> {
        for p in &points {
            if p.step > steps || p.site >= n {
                return Err(Error::ObservationOutOfRange {
                    step: p.step,
                    site: p.site,
                });
            }
        }
        points.sort_unstable();
        let before = points.len();
        points.dedup();
        if points.len() != before {
            return Err(Error::config("observation network has duplicate points"));
        }
        Ok(ObsNetwork { points, n, steps })
    }

    /// `count` distinct points drawn uniformly over the window. Step 0 is
    /// excluded unless `include_initial` is set.
    pub fn random(
        n: usize,
        steps: usize,
        count: usize,
        include_initial: bool,
        seed: u64,
    ) -> Result<Self> {
        let first = if include_initial { 0 } else { 1 };
        let slots = (steps + 1 - first.min(steps + 1)) * n;
        if count > slots {
            return Err(Error::config(alloc::format!(
                "cannot place {count} observations in {slots} space-time slots"
            )));
        }
        let mut rng = rng::stream(seed, rng::NETWORK_STREAM);
        let points = index::sample(&mut rng, slots, count)
            .into_iter()
            .map(|k| ObsPoint {
                step: first + k / n,
                site: k % n,
            })
            .collect();
        Self::new(points, n, steps)
    }

    pub fn empty(n: usize, steps: usize) -> Self {
        ObsNetwork {
            points: Vec::new(),
            n,
            steps,
        }
    }

    pub fn points(&self) -> &[ObsPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Latest observed step; the linearized runs stop there.
    pub fn last_step(&self) -> Option<usize> {
        self.points.last().map(|p| p.step)
    }

    /// Samples the trajectory at every point, in network order.
    pub fn observe(&self, traj: &Trajectory) -> Result<Vector> {
        Error::check_dim("trajectory state", self.n, traj.dim())?;
        if traj.steps() < self.last_step().unwrap_or(0) {
            let p = self.points[self.points.len() - 1];
            return Err(Error::ObservationOutOfRange {
                step: p.step,
                site: p.site,
            });
        }
        Ok(Vector::from_iterator(
            self.len(),
            self.points.iter().map(|p| traj.state(p.step)[p.site]),
        ))
    }

    /// Samples a tangent-linear sequence (linearized [`ObsNetwork::observe`]).
    pub fn sample(&self, seq: &[Vector]) -> Vector {
        Vector::from_iterator(
            self.len(),
            self.points.iter().map(|p| seq[p.step][p.site]),
        )
    }

    /// Adjoint of [`ObsNetwork::sample`]: scatters `w` into per-step forcing
    /// vectors covering steps `0..=last_step`.
    pub fn scatter(&self, w: &Vector) -> Vec<Vector> {
        let len = self.last_step().map_or(0, |s| s + 1);
        let mut out = alloc::vec![Vector::zeros(self.n); len];
        for (p, v) in self.points.iter().zip(w.iter()) {
            out[p.step][p.site] += *v;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    /// `exp(-d²/(2ℓ²))` with `d` the cyclic grid distance.
    Gaussian { length_scale: f64 },
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub variances: Vector,
    pub correlation: Correlation,
}

impl CovarianceModel {
    pub fn new(variances: Vector, correlation: Correlation) -> Result<Self> {
        if variances.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::NotPositiveDefinite("variances must be positive"));
        }
        if let Correlation::Gaussian { length_scale } = correlation {
            if !(length_scale > 0.0 && length_scale.is_finite()) {
                return Err(Error::config("correlation length must be positive"));
            }
        }
        let model = CovarianceModel {
            variances,
            correlation,
        };
        if !model.is_diagonal() && Cholesky::new(model.dense()).is_none() {
            return Err(Error::NotPositiveDefinite("assembled covariance"));
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.correlation, Correlation::Diagonal)
    }

    pub fn correlation_at(&self, i: usize, j: usize) -> f64 {
        match self.correlation {
            Correlation::Diagonal => (i == j) as u8 as f64,
            Correlation::Gaussian { length_scale } => {
                let n = self.dim();
                let raw = i.abs_diff(j);
                let d = raw.min(n - raw) as f64;
                libm::exp(-d * d / (2.0 * length_scale * length_scale))
            }
        }
    }

    /// `D^{1/2} C D^{1/2}`.
    pub fn dense(&self) -> Matrix {
        let n = self.dim();
        let sd: Vec<f64> = self.variances.iter().map(|v| sqrt(*v)).collect();
        Matrix::from_fn(n, n, |i, j| sd[i] * sd[j] * self.correlation_at(i, j))
    }
}

/// Prior error covariance of the twin experiment:
/// `σ_b² = (0.04F)² + (0.1|x - F|)²` with Gaussian correlations.
pub fn build_prior_cov(x_truth: &Vector, forcing: f64, length_scale: f64) -> Result<CovarianceModel> {
    let variances = x_truth.map(|x| {
        let a = 0.04 * forcing;
        let b = 0.1 * (x - forcing).abs();
        a * a + b * b
    });
    let correlation = if length_scale > 0.0 {
        Correlation::Gaussian { length_scale }
    } else {
        Correlation::Diagonal
    };
    CovarianceModel::new(variances, correlation)
}

/// Diagonal observation error covariance with variances
/// `(0.04F)² + (0.05|y - F|)²`.
pub fn build_obs_cov(y_pseudo: &Vector, forcing: f64) -> Result<CovarianceModel> {
    let variances = y_pseudo.map(|y| {
        let a = 0.04 * forcing;
        let b = 0.05 * (y - forcing).abs();
        a * a + b * b
    });
    CovarianceModel::new(variances, Correlation::Diagonal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SqrtMethod {
    /// `V Λ^{1/2} Vᵀ`, so the factor is its own transpose.
    #[default]
    Symmetric,
    /// Lower-triangular Cholesky factor.
    Cholesky,
}

/// Dense `L` with `C = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtFactor {
    pub matrix: Matrix,
    pub method: SqrtMethod,
}

impl SqrtFactor {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }

    pub fn apply_transpose(&self, v: &Vector) -> Vector {
        match self.method {
            SqrtMethod::Symmetric => &self.matrix * v,
            SqrtMethod::Cholesky => self.matrix.tr_mul(v),
        }
    }

    /// `L Lᵀ`.
    pub fn covariance(&self) -> Matrix {
        &self.matrix * self.matrix.transpose()
    }
}

pub fn sqrt_factor(cov: &CovarianceModel, method: SqrtMethod) -> Result<SqrtFactor> {
    if cov.is_diagonal() {
        return Ok(SqrtFactor {
            matrix: Matrix::from_diagonal(&cov.variances.map(sqrt)),
            method,
        });
    }
    sqrt_of_matrix(&cov.dense(), method)
}

pub fn sqrt_of_matrix(c: &Matrix, method: SqrtMethod) -> Result<SqrtFactor> {
    let matrix = match method {
        SqrtMethod::Cholesky => Cholesky::new(c.clone())
            .ok_or(Error::NotPositiveDefinite("Cholesky factorization failed"))?
            .l(),
        SqrtMethod::Symmetric => {
            let (vals, vecs) = sym_eig_desc(c);
            if vals.last().is_some_and(|v| *v <= 0.0) {
                return Err(Error::NotPositiveDefinite("nonpositive eigenvalue"));
            }
            let root = Vector::from_iterator(vals.len(), vals.iter().map(|v| sqrt(*v)));
            let scaled = &vecs * Matrix::from_diagonal(&root);
            let l = scaled * vecs.transpose();
            (&l + l.transpose()) * 0.5
        }
    };
    Ok(SqrtFactor { matrix, method })
}

/// Noise switch for [`make_twin`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwinNoise {
    #[default]
    Gaussian,
    /// Prior equals the truth and observations equal the pseudo-observations.
    None,
}

/// Perturbs the truth and the pseudo-observations by their error statistics:
/// `x_b = x_0 + B^{1/2} ε_b`, `y = y_pseudo + R^{1/2} ε_o`.
pub fn make_twin(
    truth: &Vector,
    y_pseudo: &Vector,
    prior_sqrt: &SqrtFactor,
    obs_cov: &CovarianceModel,
    seed: u64,
    noise: TwinNoise,
) -> Result<(Vector, Vector)> {
    Error::check_dim("prior square root", truth.len(), prior_sqrt.dim())?;
    Error::check_dim("observation covariance", y_pseudo.len(), obs_cov.dim())?;
    if noise == TwinNoise::None {
        return Ok((truth.clone(), y_pseudo.clone()));
    }
    let mut prior_rng = rng::stream(seed, rng::PRIOR_NOISE_STREAM);
    let eps_b = rng::normal_vector(&mut prior_rng, truth.len());
    let x_b = truth + prior_sqrt.apply(&eps_b);

    let obs_sqrt = sqrt_factor(obs_cov, SqrtMethod::Symmetric)?;
    let mut obs_rng = rng::stream(seed, rng::OBS_NOISE_STREAM);
    let eps_o = rng::normal_vector(&mut obs_rng, y_pseudo.len());
    let y = y_pseudo + obs_sqrt.apply(&eps_o);
    Ok((x_b, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Dynamics;
    use crate::l96::L96Config;

    #[test]
    fn homogeneous_prior() {
        let f = 8.0;
        let cov = build_prior_cov(&Vector::from_element(20, f), f, PRIOR_LENGTH_SCALE).unwrap();
        assert!(cov.variances.iter().all(|v| (*v - 0.1024).abs() < 1e-15));
        let b = cov.dense();
        let sums: Vec<f64> = b.row_iter().map(|r| r.sum()).collect();
        assert!(sums.iter().all(|s| (s - sums[0]).abs() < 1e-12));
    }

    #[test]
    fn short_cyclic_gaussian_is_indefinite() {
        let f = 8.0;
        let x = Vector::from_element(12, f);
        assert!(matches!(
            build_prior_cov(&x, f, PRIOR_LENGTH_SCALE),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(build_prior_cov(&x, f, 1.0).is_ok());
        assert!(build_prior_cov(&Vector::from_element(14, f), f, PRIOR_LENGTH_SCALE).is_ok());
    }

    #[test]
    fn diagonal_limit() {
        let x = Vector::from_vec(alloc::vec![1.0, 8.0, 20.0, -3.0]);
        let cov = build_prior_cov(&x, 8.0, 0.0).unwrap();
        let b = cov.dense();
        assert_eq!(b, Matrix::from_diagonal(&cov.variances));
        assert!((cov.variances[2] - (0.1024 + 1.44)).abs() < 1e-12);
    }

    #[test]
    fn obs_cov_values() {
        let r = build_obs_cov(&Vector::from_vec(alloc::vec![8.0, 28.0]), 8.0).unwrap();
        assert!(r.is_diagonal());
        assert!((r.variances[0] - 0.1024).abs() < 1e-15);
        assert!((r.variances[1] - 1.1024).abs() < 1e-12);
    }

    #[test]
    fn sqrt_of_diagonal_and_identity() {
        let id = CovarianceModel::new(Vector::from_element(4, 1.0), Correlation::Diagonal).unwrap();
        for m in [SqrtMethod::Symmetric, SqrtMethod::Cholesky] {
            assert_eq!(sqrt_factor(&id, m).unwrap().matrix, Matrix::identity(4, 4));
        }
        let d = CovarianceModel::new(Vector::from_vec(alloc::vec![4.0, 9.0]), Correlation::Diagonal)
            .unwrap();
        let l = sqrt_factor(&d, SqrtMethod::Symmetric).unwrap();
        assert_eq!(l.matrix, Matrix::from_diagonal(&Vector::from_vec(alloc::vec![2.0, 3.0])));
    }

    #[test]
    fn random_spd_sqrt_reconstructs() {
        let mut r = rng::stream(9, 0);
        let g = rng::normal_matrix(&mut r, 10, 10);
        let c = &g * g.transpose() + Matrix::identity(10, 10) * 0.1;
        for m in [SqrtMethod::Symmetric, SqrtMethod::Cholesky] {
            let l = sqrt_of_matrix(&c, m).unwrap();
            assert!((l.covariance() - &c).norm() / c.norm() <= 1e-10);
        }
    }

    #[test]
    fn non_spd_rejected() {
        let c = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(sqrt_of_matrix(&c, SqrtMethod::Symmetric).is_err());
        assert!(sqrt_of_matrix(&c, SqrtMethod::Cholesky).is_err());
        assert!(CovarianceModel::new(Vector::from_vec(alloc::vec![1.0, 0.0]), Correlation::Diagonal).is_err());
    }

    #[test]
    fn network_invariants() {
        let net = ObsNetwork::random(20, 5, 40, false, 7).unwrap();
        assert_eq!(net.len(), 40);
        assert!(net.points().windows(2).all(|w| w[0] < w[1]));
        assert!(net.points().iter().all(|p| (1..=5).contains(&p.step) && p.site < 20));
        assert_eq!(net, ObsNetwork::random(20, 5, 40, false, 7).unwrap());

        let all = ObsNetwork::random(4, 0, 4, true, 1).unwrap();
        assert_eq!(all.len(), 4);
        assert!(ObsNetwork::random(4, 0, 1, false, 1).is_err());
        assert!(ObsNetwork::new(alloc::vec![ObsPoint { step: 1, site: 0 }; 2], 4, 2).is_err());
        assert!(ObsNetwork::new(alloc::vec![ObsPoint { step: 3, site: 0 }], 4, 2).is_err());
    }

    #[test]
    fn observe_initial_sites_returns_state() {
        let cfg = L96Config::new(6, 8.0, 0.01, 3).unwrap();
        let x0 = Vector::from_fn(6, |i, _| i as f64);
        let traj = cfg.integrate(x0.as_slice()).unwrap();
        let pts = (0..6).map(|site| ObsPoint { step: 0, site }).collect();
        let net = ObsNetwork::new(pts, 6, 3).unwrap();
        assert_eq!(net.observe(&traj).unwrap(), x0);
        assert_eq!(ObsNetwork::empty(6, 3).observe(&traj).unwrap().len(), 0);
    }

    #[test]
    fn twin_is_seeded_and_noise_free_variant_is_exact() {
        let truth = Vector::from_vec(alloc::vec![1.0, 5.0, 9.0, 12.0]);
        let b = build_prior_cov(&truth, 8.0, 0.8).unwrap();
        let l = sqrt_factor(&b, SqrtMethod::Symmetric).unwrap();
        let yp = Vector::from_vec(alloc::vec![3.0, 7.0]);
        let r = build_obs_cov(&yp, 8.0).unwrap();
        let a = make_twin(&truth, &yp, &l, &r, 42, TwinNoise::Gaussian).unwrap();
        assert_eq!(a, make_twin(&truth, &yp, &l, &r, 42, TwinNoise::Gaussian).unwrap());
        assert_ne!(a, make_twin(&truth, &yp, &l, &r, 43, TwinNoise::Gaussian).unwrap());
        assert_eq!(
            make_twin(&truth, &yp, &l, &r, 42, TwinNoise::None).unwrap(),
            (truth.clone(), yp.clone())
        );
    }
}
