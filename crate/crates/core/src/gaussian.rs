//! Linear-Gaussian primitives.
//!
//! Everything here is a pure value-in/value-out function. Likelihoods are
//! computed in the log domain internally; public values are returned in the
//! linear domain. Covariances are symmetrized after every operation to control
//! floating-point drift, and innovation covariances are factored with a
//! pivot-checked Cholesky rather than a pseudo-inverse so that singular models
//! surface as errors instead of silently degrading.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Relative pivot tolerance below which an innovation matrix is treated as singular.
const PIVOT_TOL: f64 = 1e-12;

/// A multivariate Gaussian density with mean vector and covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Gaussian {
    /// Validating constructor: checks dimensions, symmetry (1e-9 relative) and
    /// that eigenvalues are no smaller than `-1e-9 * trace`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "Gaussian covariance",
                expected: n,
                actual: cov.nrows().max(cov.ncols()),
            });
        }
        let scale = 1.0 + cov.amax();
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::InvalidCovariance);
        }
        let sym = symmetrize(&cov);
        let trace = sym.trace();
        let min_eig = sym
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-9 * trace.abs().max(1.0) {
            return Err(Error::InvalidCovariance);
        }
        Ok(Self { mean, cov: sym })
    }

    /// Construct without the eigenvalue check, for covariances that are PSD by
    /// construction (Kalman updates, prediction joints, moment matching).
    /// Symmetrizes the stored matrix.
    pub(crate) fn new_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        debug_assert_eq!(cov.nrows(), cov.ncols());
        let cov = symmetrize(&cov);
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Density value N(x; mean, cov).
    pub fn eval(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.log_eval(x)?.exp())
    }

    /// Log-density value.
    pub fn log_eval(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "gaussian_eval point",
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let chol = cholesky_checked(&self.cov).ok_or(Error::SingularCovariance)?;
        let diff = x - &self.mean;
        Ok(log_density_from_cholesky(&chol, &diff))
    }

    /// Draw a sample. Falls back to a slightly jittered factorization when the
    /// covariance is only positive semidefinite.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.dim();
        let chol = Cholesky::new(self.cov.clone()).unwrap_or_else(|| {
            let jitter = 1e-12 * (1.0 + self.cov.trace().abs() / n as f64);
            Cholesky::new(&self.cov + DMatrix::identity(n, n) * jitter)
                .expect("covariance not factorable even with jitter")
        });
        let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + chol.l() * noise
    }
}

/// A linear observation model `z = H x + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObservation {
    matrix: DMatrix<f64>,
    noise_cov: DMatrix<f64>,
}

impl LinearObservation {
    /// `noise_cov` must be strictly positive definite.
    pub fn new(matrix: DMatrix<f64>, noise_cov: DMatrix<f64>) -> Result<Self> {
        if noise_cov.nrows() != matrix.nrows() || !noise_cov.is_square() {
            return Err(Error::DimensionMismatch {
                context: "observation noise covariance",
                expected: matrix.nrows(),
                actual: noise_cov.nrows(),
            });
        }
        if cholesky_checked(&noise_cov).is_none() {
            return Err(Error::InvalidCovariance);
        }
        Ok(Self { matrix, noise_cov })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    pub fn obs_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Predicted measurement mean and innovation covariance for a prior.
    pub fn predicted_measurement(&self, prior: &Gaussian) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if prior.dim() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "observation state",
                expected: self.state_dim(),
                actual: prior.dim(),
            });
        }
        let z_pred = &self.matrix * prior.mean();
        let s = symmetrize(&(&self.matrix * prior.cov() * self.matrix.transpose() + &self.noise_cov));
        Ok((z_pred, s))
    }
}

/// Standard multivariate normal pdf `N(x; g.mean, g.cov)`.
pub fn gaussian_eval(x: &DVector<f64>, g: &Gaussian) -> Result<f64> {
    g.eval(x)
}

/// Kalman update returning the posterior and the marginal likelihood
/// `N(z; H m, H P Hᵀ + R)` in the linear domain.
pub fn kalman_update(
    prior: &Gaussian,
    obs: &LinearObservation,
    z: &DVector<f64>,
) -> Result<(Gaussian, f64)> {
    let (posterior, log_lik) = kalman_update_log(prior, obs, z)?;
    Ok((posterior, log_lik.exp()))
}

/// Kalman update returning the log marginal likelihood.
pub fn kalman_update_log(
    prior: &Gaussian,
    obs: &LinearObservation,
    z: &DVector<f64>,
) -> Result<(Gaussian, f64)> {
    if z.len() != obs.obs_dim() {
        return Err(Error::DimensionMismatch {
            context: "kalman_update measurement",
            expected: obs.obs_dim(),
            actual: z.len(),
        });
    }
    let (z_pred, s) = obs.predicted_measurement(prior)?;
    let chol = cholesky_checked(&s).ok_or(Error::SingularInnovation)?;
    let innovation = z - &z_pred;
    let log_lik = log_density_from_cholesky(&chol, &innovation);

    // K = P Hᵀ S⁻¹, computed as (S⁻¹ H P)ᵀ through the factorization.
    let hp = obs.matrix() * prior.cov();
    let gain = chol.solve(&hp).transpose();
    let mean = prior.mean() + &gain * innovation;
    let cov = prior.cov() - &gain * hp;
    Ok((Gaussian::new_unchecked(mean, cov), log_lik))
}

/// Joint prediction onto the stacked state `(x_k, x_{k+1})`:
/// mean `[m; F m]`, covariance `[[P, P Fᵀ], [F P, F P Fᵀ + Q]]`.
pub fn predict_two_step(prior: &Gaussian, f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Gaussian> {
    let n = prior.dim();
    if f.nrows() != n || f.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "predict_two_step model",
            expected: n,
            actual: f.nrows(),
        });
    }
    let mut mean = DVector::zeros(2 * n);
    mean.rows_mut(0, n).copy_from(prior.mean());
    mean.rows_mut(n, n).copy_from(&(f * prior.mean()));

    let p = prior.cov();
    let pf_t = p * f.transpose();
    let fp = f * p;
    let fpf_q = f * p * f.transpose() + q;
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    cov.view_mut((0, 0), (n, n)).copy_from(p);
    cov.view_mut((0, n), (n, n)).copy_from(&pf_t);
    cov.view_mut((n, 0), (n, n)).copy_from(&fp);
    cov.view_mut((n, n), (n, n)).copy_from(&fpf_q);
    Ok(Gaussian::new_unchecked(mean, cov))
}

/// Marginal of a stacked Gaussian over an index range: sub-vector of the mean
/// and principal sub-matrix of the covariance.
pub fn marginal_block(g: &Gaussian, block: std::ops::Range<usize>) -> Result<Gaussian> {
    if block.start > block.end || block.end > g.dim() {
        return Err(Error::BlockOutOfRange {
            start: block.start,
            end: block.end,
            dim: g.dim(),
        });
    }
    let len = block.end - block.start;
    let mean = g.mean().rows(block.start, len).into_owned();
    let cov = g.cov().view((block.start, block.start), (len, len)).into_owned();
    Ok(Gaussian::new_unchecked(mean, cov))
}

/// Moment-matched single Gaussian of a weighted mixture. Weights need not be
/// normalized but must have a positive sum.
pub fn moment_match(components: &[(f64, &Gaussian)]) -> Gaussian {
    debug_assert!(!components.is_empty());
    let total: f64 = components.iter().map(|(w, _)| *w).sum();
    debug_assert!(total > 0.0);
    let n = components[0].1.dim();
    let mut mean = DVector::zeros(n);
    for (w, g) in components {
        mean += g.mean() * (*w / total);
    }
    let mut cov = DMatrix::zeros(n, n);
    for (w, g) in components {
        let d = g.mean() - &mean;
        cov += (g.cov() + d.clone() * d.transpose()) * (*w / total);
    }
    Gaussian::new_unchecked(mean, cov)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factorization that rejects matrices whose pivot ratio indicates
/// numerical singularity.
pub(crate) fn cholesky_checked(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let mut min_d = f64::INFINITY;
    let mut max_d = 0.0_f64;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        min_d = min_d.min(d);
        max_d = max_d.max(d);
    }
    if !min_d.is_finite() || min_d <= 0.0 || min_d * min_d < PIVOT_TOL * max_d * max_d {
        return None;
    }
    Some(chol)
}

fn log_density_from_cholesky(chol: &Cholesky<f64, Dyn>, diff: &DVector<f64>) -> f64 {
    let n = diff.len() as f64;
    let l = chol.l_dirty();
    let mut log_det = 0.0;
    for i in 0..l.nrows() {
        log_det += l[(i, i)].ln();
    }
    let solved = chol.solve(diff);
    let maha = diff.dot(&solved);
    -0.5 * (n * LN_2PI + maha) - log_det
}
