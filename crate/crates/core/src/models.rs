//! Dynamic, birth, measurement-likelihood and clutter models in Gaussian form.
//!
//! The measurement model couples a trajectory kind `tau` (died in window, born
//! at end, alive at both ends) with a measurement kind `mu` (detection at the
//! start, at the end, or at both ends). Only five pairings have non-zero
//! likelihood; an alive trajectory produces a full measurement with conditional
//! probability `full_given_detect` and a partial one at either end with equal
//! probability `gamma = (1 - full_given_detect) / 2`, so the conditional
//! likelihood integrates to one.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, LinearObservation};
use crate::trajectory::{MeasurementKind, TrajectoryMeasurement, TwoStepTrajectoryKind};

/// Axis-aligned rectangular region, used as surveillance area and clutter support.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    low: DVector<f64>,
    high: DVector<f64>,
}

impl Region {
    pub fn new(low: DVector<f64>, high: DVector<f64>) -> Result<Self> {
        if low.len() != high.len() {
            return Err(Error::DimensionMismatch {
                context: "region bounds",
                expected: low.len(),
                actual: high.len(),
            });
        }
        if low.iter().zip(high.iter()).any(|(l, h)| l >= h) {
            return Err(Error::InvalidConfig("region has non-positive extent".into()));
        }
        Ok(Self { low, high })
    }

    /// Planar region `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self::new(
            DVector::from_vec(vec![x0, y0]),
            DVector::from_vec(vec![x1, y1]),
        )
        .expect("valid rectangle")
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn volume(&self) -> f64 {
        self.low
            .iter()
            .zip(self.high.iter())
            .map(|(l, h)| h - l)
            .product()
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dim()
            && z.iter()
                .zip(self.low.iter().zip(self.high.iter()))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            rng.random_range(self.low[i]..self.high[i])
        })
    }

    pub fn low(&self) -> &DVector<f64> {
        &self.low
    }

    pub fn high(&self) -> &DVector<f64> {
        &self.high
    }
}

/// Linear-Gaussian motion model over one window, with survival probabilities
/// per fine step and per window.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    f: DMatrix<f64>,
    q: DMatrix<f64>,
    survive_per_fine_step: f64,
    survive_per_window: f64,
}

impl MotionModel {
    pub fn new(
        f: DMatrix<f64>,
        q: DMatrix<f64>,
        survive_per_fine_step: f64,
        fine_steps_per_window: u32,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&survive_per_fine_step) {
            return Err(Error::InvalidConfig("survival probability outside [0,1]".into()));
        }
        if f.nrows() != f.ncols() || q.nrows() != q.ncols() || f.nrows() != q.nrows() {
            return Err(Error::DimensionMismatch {
                context: "motion model matrices",
                expected: f.nrows(),
                actual: q.nrows(),
            });
        }
        Ok(Self {
            f,
            q,
            survive_per_fine_step,
            survive_per_window: survive_per_fine_step.powi(fine_steps_per_window as i32),
        })
    }

    /// Nearly constant velocity model over a window of `fine_steps` sampling
    /// intervals of length `fine_interval`.
    pub fn nearly_constant_velocity(
        fine_interval: f64,
        fine_steps: u32,
        accel_noise: f64,
        survive_per_fine_step: f64,
    ) -> Result<Self> {
        let dt = fine_interval * fine_steps as f64;
        let (f, q) = ncv_matrices(dt, accel_noise);
        Self::new(f, q, survive_per_fine_step, fine_steps)
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn process_noise(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn survive_per_fine_step(&self) -> f64 {
        self.survive_per_fine_step
    }

    pub fn survive_per_window(&self) -> f64 {
        self.survive_per_window
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }
}

/// Planar nearly-constant-velocity matrices for state `[px, vx, py, vy]`.
pub fn ncv_matrices(dt: f64, accel_noise: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let f1 = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
    let q1 = DMatrix::from_row_slice(
        2,
        2,
        &[
            dt.powi(3) / 3.0,
            dt.powi(2) / 2.0,
            dt.powi(2) / 2.0,
            dt,
        ],
    );
    let eye = DMatrix::identity(2, 2);
    (eye.kronecker(&f1), eye.kronecker(&q1) * accel_noise)
}

/// Planar position-only observation matrix for state `[px, vx, py, vy]`.
pub fn position_observation_matrix() -> DMatrix<f64> {
    DMatrix::identity(2, 2).kronecker(&DMatrix::from_row_slice(1, 2, &[1.0, 0.0]))
}

/// How detections split across measurement kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KindProfile {
    /// Trajectory measurements: a detected alive target yields a full
    /// measurement with probability `full_given_detect`, otherwise one of the
    /// two partial kinds with probability `gamma` each.
    Trajectory { full_given_detect: f64 },
    /// Point measurements at the window end only; targets that die inside the
    /// window are unobservable.
    EndpointOnly,
}

/// Linear-Gaussian trajectory measurement model.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    h: DMatrix<f64>,
    r: DMatrix<f64>,
    detect_prob: f64,
    profile: KindProfile,
}

impl MeasurementModel {
    pub fn new(
        h: DMatrix<f64>,
        r: DMatrix<f64>,
        detect_prob: f64,
        profile: KindProfile,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&detect_prob) {
            return Err(Error::InvalidConfig("detection probability outside [0,1]".into()));
        }
        if let KindProfile::Trajectory { full_given_detect } = profile {
            if !(0.0..=1.0).contains(&full_given_detect) {
                return Err(Error::InvalidConfig(
                    "full-measurement probability outside [0,1]".into(),
                ));
            }
        }
        // Validates R positive definite.
        LinearObservation::new(h.clone(), r.clone())?;
        Ok(Self {
            h,
            r,
            detect_prob,
            profile,
        })
    }

    pub fn point_matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn point_noise(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn detect_prob(&self) -> f64 {
        self.detect_prob
    }

    pub fn profile(&self) -> KindProfile {
        self.profile
    }

    /// Conditional probability of a full measurement given detection of an
    /// alive trajectory.
    pub fn full_given_detect(&self) -> f64 {
        match self.profile {
            KindProfile::Trajectory { full_given_detect } => full_given_detect,
            KindProfile::EndpointOnly => 0.0,
        }
    }

    /// Probability of a detection at one specific end of an alive trajectory,
    /// `gamma = (1 - full_given_detect) / 2`, so `full_given_detect + 2 gamma = 1`.
    pub fn gamma(&self) -> f64 {
        match self.profile {
            KindProfile::Trajectory { full_given_detect } => 0.5 * (1.0 - full_given_detect),
            KindProfile::EndpointOnly => 0.0,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn state_dim(&self) -> usize {
        self.h.ncols()
    }

    /// Coefficient multiplying the Gaussian density in the conditional
    /// likelihood of measurement kind `mu` given trajectory kind `tau`;
    /// `None` if the pairing has zero likelihood.
    pub fn coefficient(&self, mu: u8, tau: u8) -> Option<f64> {
        match self.profile {
            KindProfile::Trajectory { full_given_detect } => match (mu, tau) {
                (1, 3) | (2, 3) => Some(self.gamma()),
                (3, 3) => Some(full_given_detect),
                (1, 1) | (2, 2) => Some(1.0),
                _ => None,
            },
            KindProfile::EndpointOnly => match (mu, tau) {
                (2, 3) | (2, 2) => Some(1.0),
                _ => None,
            },
        }
    }

    /// Whether a trajectory of the given kind can be detected at all; per-kind
    /// integral of the conditional likelihood over the measurement space.
    pub fn detectability(&self, tau: u8) -> f64 {
        match self.profile {
            KindProfile::Trajectory { .. } => 1.0,
            KindProfile::EndpointOnly => {
                if tau == 1 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Observation model for measurement kind `mu` observing trajectory kind
    /// `tau`: the block matrix selecting the observed states and the stacked
    /// noise covariance.
    pub fn observation_matrix(&self, mu: u8, tau: u8) -> Result<LinearObservation> {
        let h = match (mu, tau) {
            (1, 3) => DMatrix::from_row_slice(1, 2, &[1.0, 0.0]).kronecker(&self.h),
            (2, 3) => DMatrix::from_row_slice(1, 2, &[0.0, 1.0]).kronecker(&self.h),
            (3, 3) => DMatrix::identity(2, 2).kronecker(&self.h),
            (1, 1) | (2, 2) => self.h.clone(),
            _ => return Err(Error::IncompatiblePairing { mu, tau }),
        };
        let iota = if mu == 3 { 2 } else { 1 };
        let r = DMatrix::identity(iota, iota).kronecker(&self.r);
        LinearObservation::new(h, r)
    }

    /// Conditional likelihood `l(Z | X)` of a trajectory measurement given a
    /// trajectory of kind `x_kind` with stacked state `x`. Incompatible
    /// pairings have zero density.
    pub fn measurement_density(
        &self,
        z: &TrajectoryMeasurement,
        x_kind: TwoStepTrajectoryKind,
        x: &DVector<f64>,
    ) -> f64 {
        let mu = crate::trajectory::measurement_dim(z.kind()).0;
        let tau = x_kind.tau();
        let Some(coeff) = self.coefficient(mu, tau) else {
            return 0.0;
        };
        if coeff == 0.0 {
            return 0.0;
        }
        let obs = self
            .observation_matrix(mu, tau)
            .expect("coefficient implies valid pairing");
        assert_eq!(
            x.len(),
            obs.state_dim(),
            "state dimension does not match trajectory kind"
        );
        let density = Gaussian::new_unchecked(obs.matrix() * x, obs.noise_cov().clone());
        coeff * density.eval(&z.stacked()).expect("noise covariance is PD")
    }

    /// Generative draw: detection with probability `detect_prob`, then a
    /// measurement kind compatible with the trajectory kind, with Gaussian
    /// noise added per observed endpoint.
    pub fn sample_target_measurement<R: Rng + ?Sized>(
        &self,
        x_kind: TwoStepTrajectoryKind,
        x_true: &DVector<f64>,
        rng: &mut R,
    ) -> Option<TrajectoryMeasurement> {
        if rng.random::<f64>() >= self.detect_prob {
            return None;
        }
        let n = self.state_dim();
        match x_kind {
            TwoStepTrajectoryKind::DiedInWindow => match self.profile {
                KindProfile::Trajectory { .. } => {
                    Some(TrajectoryMeasurement::first_only(self.noisy_point(x_true, rng)))
                }
                KindProfile::EndpointOnly => None,
            },
            TwoStepTrajectoryKind::BornAtEnd => {
                Some(TrajectoryMeasurement::last_only(self.noisy_point(x_true, rng)))
            }
            TwoStepTrajectoryKind::Alive => {
                assert_eq!(x_true.len(), 2 * n);
                let x1 = x_true.rows(0, n).into_owned();
                let x2 = x_true.rows(n, n).into_owned();
                match self.profile {
                    KindProfile::EndpointOnly => {
                        Some(TrajectoryMeasurement::last_only(self.noisy_point(&x2, rng)))
                    }
                    KindProfile::Trajectory { full_given_detect } => {
                        let u = rng.random::<f64>();
                        if u < full_given_detect {
                            Some(
                                TrajectoryMeasurement::full(
                                    self.noisy_point(&x1, rng),
                                    self.noisy_point(&x2, rng),
                                )
                                .expect("matching endpoint dimensions"),
                            )
                        } else if u < full_given_detect + self.gamma() {
                            Some(TrajectoryMeasurement::first_only(self.noisy_point(&x1, rng)))
                        } else {
                            Some(TrajectoryMeasurement::last_only(self.noisy_point(&x2, rng)))
                        }
                    }
                }
            }
        }
    }

    fn noisy_point<R: Rng + ?Sized>(&self, x: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        Gaussian::new_unchecked(&self.h * x, self.r.clone()).sample(rng)
    }
}

/// Gaussian-mixture birth intensity for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthModel {
    components: Vec<(f64, Gaussian)>,
}

impl BirthModel {
    pub fn new(components: Vec<(f64, Gaussian)>) -> Result<Self> {
        if components.iter().any(|(w, _)| *w <= 0.0) {
            return Err(Error::InvalidConfig("birth weights must be positive".into()));
        }
        Ok(Self { components })
    }

    pub fn empty() -> Self {
        Self { components: vec![] }
    }

    pub fn single(weight: f64, gaussian: Gaussian) -> Result<Self> {
        Self::new(vec![(weight, gaussian)])
    }

    pub fn components(&self) -> &[(f64, Gaussian)] {
        &self.components
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(w, _)| w).sum()
    }
}

/// Poisson clutter on the trajectory-measurement space, uniform over the
/// region for each kind. The trajectory form uses one rate for full
/// measurements and a shared rate for the two partial kinds; the endpoint-only
/// form puts all clutter on window-end detections.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterModel {
    rate_full: f64,
    rate_first: f64,
    rate_last: f64,
    region: Region,
}

impl ClutterModel {
    /// Trajectory clutter with rates for full and (per-kind) partial measurements.
    pub fn trajectory(rate_full: f64, rate_partial: f64, region: Region) -> Result<Self> {
        if rate_full < 0.0 || rate_partial < 0.0 {
            return Err(Error::InvalidConfig("clutter rates must be nonnegative".into()));
        }
        Ok(Self {
            rate_full,
            rate_first: rate_partial,
            rate_last: rate_partial,
            region,
        })
    }

    /// Trajectory clutter with equal full/partial rates summing to `total`,
    /// i.e. `rate_full = rate_partial = total / 3`.
    pub fn from_total_rate(total: f64, region: Region) -> Result<Self> {
        Self::trajectory(total / 3.0, total / 3.0, region)
    }

    /// Point clutter at the window end only, for the endpoint-only filters.
    pub fn endpoint_only(rate: f64, region: Region) -> Result<Self> {
        if rate < 0.0 {
            return Err(Error::InvalidConfig("clutter rates must be nonnegative".into()));
        }
        Ok(Self {
            rate_full: 0.0,
            rate_first: 0.0,
            rate_last: rate,
            region,
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn rate_full(&self) -> f64 {
        self.rate_full
    }

    pub fn rate_partial(&self) -> f64 {
        debug_assert_eq!(self.rate_first, self.rate_last);
        self.rate_first
    }

    /// Total clutter rate over all kinds.
    pub fn total_rate(&self) -> f64 {
        self.rate_full + self.rate_first + self.rate_last
    }

    /// Rate of the clutter process marginalised to window-end detections,
    /// used by the point-measurement baselines.
    pub fn marginal_end_rate(&self) -> f64 {
        self.rate_full + self.rate_last
    }

    /// Clutter intensity at a trajectory measurement.
    pub fn intensity(&self, z: &TrajectoryMeasurement) -> f64 {
        let vol = self.region.volume();
        match z.kind() {
            MeasurementKind::FirstOnly => {
                if self.region.contains(z.z_first().unwrap()) {
                    self.rate_first / vol
                } else {
                    0.0
                }
            }
            MeasurementKind::LastOnly => {
                if self.region.contains(z.z_last().unwrap()) {
                    self.rate_last / vol
                } else {
                    0.0
                }
            }
            MeasurementKind::Full => {
                if self.region.contains(z.z_first().unwrap())
                    && self.region.contains(z.z_last().unwrap())
                {
                    self.rate_full / (vol * vol)
                } else {
                    0.0
                }
            }
        }
    }

    /// Draw one window's clutter: Poisson counts per kind, uniform locations.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<TrajectoryMeasurement> {
        let mut out = Vec::new();
        for _ in 0..poisson_count(self.rate_full, rng) {
            let z1 = self.region.sample(rng);
            let z2 = self.region.sample(rng);
            out.push(TrajectoryMeasurement::full(z1, z2).expect("matching dimensions"));
        }
        for _ in 0..poisson_count(self.rate_first, rng) {
            out.push(TrajectoryMeasurement::first_only(self.region.sample(rng)));
        }
        for _ in 0..poisson_count(self.rate_last, rng) {
            out.push(TrajectoryMeasurement::last_only(self.region.sample(rng)));
        }
        out
    }
}

fn poisson_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as u64
}
