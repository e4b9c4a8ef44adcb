//! Point-measurement PMBM/PMB baselines.
//!
//! The baselines consume only the window-end portion of the trajectory
//! measurements and run the same hypothesis engine with an endpoint-only
//! measurement profile: the detection probability is adjusted to
//! `p_d * (1 - gamma)` (a detected target yields a window-end point unless its
//! single detection landed on the window start), and the clutter process is
//! marginalised to its window-end rate. With that restriction the recursion
//! reduces exactly to the standard point-target PMBM over the window interval.

use crate::error::Result;
use crate::filter::{step, FilterConfig, FilterVariant, StepOutput};
use crate::models::{ClutterModel, KindProfile, MeasurementModel};
use crate::pmbm::PmbmState;
use crate::trajectory::{MeasurementKind, TrajectoryMeasurement};

/// Configuration of a point-measurement baseline filter, derived from a
/// trajectory-measurement configuration.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    inner: FilterConfig,
    adjusted_detect: f64,
}

impl BaselineConfig {
    /// Restrict a trajectory-measurement configuration to window-end points.
    pub fn from_trajectory_config(cfg: &FilterConfig, variant: FilterVariant) -> Result<Self> {
        let adjusted_detect = cfg.measurement.detect_prob() * (1.0 - cfg.measurement.gamma());
        let measurement = MeasurementModel::new(
            cfg.measurement.point_matrix().clone(),
            cfg.measurement.point_noise().clone(),
            adjusted_detect,
            KindProfile::EndpointOnly,
        )?;
        let clutter = ClutterModel::endpoint_only(
            cfg.clutter.marginal_end_rate(),
            cfg.clutter.region().clone(),
        )?;
        let inner = FilterConfig::new(
            cfg.motion.clone(),
            measurement,
            cfg.birth.clone(),
            clutter,
            cfg.thresholds,
            variant,
        )?;
        Ok(Self {
            inner,
            adjusted_detect,
        })
    }

    /// The equivalent window-end detection probability `p_d (1 - gamma)`.
    pub fn adjusted_detect(&self) -> f64 {
        self.adjusted_detect
    }

    /// Window-end clutter rate.
    pub fn clutter_rate(&self) -> f64 {
        self.inner.clutter.marginal_end_rate()
    }

    pub fn filter_config(&self) -> &FilterConfig {
        &self.inner
    }
}

/// Keep only window-end detections: full measurements contribute their end
/// point, window-start-only detections are discarded.
pub fn strip_measurements(measurements: &[TrajectoryMeasurement]) -> Vec<TrajectoryMeasurement> {
    measurements
        .iter()
        .filter_map(|z| match z.kind() {
            MeasurementKind::FirstOnly => None,
            MeasurementKind::LastOnly => Some(z.clone()),
            MeasurementKind::Full => {
                Some(TrajectoryMeasurement::last_only(z.z_last().unwrap().clone()))
            }
        })
        .collect()
}

/// One baseline window step on the raw trajectory-measurement set.
pub fn baseline_step(
    posterior: &PmbmState,
    measurements: &[TrajectoryMeasurement],
    cfg: &BaselineConfig,
) -> Result<StepOutput> {
    step(posterior, &strip_measurements(measurements), &cfg.inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{predict, update_bernoulli_detection, update_bernoulli_missed, Thresholds};
    use crate::gaussian::{Gaussian, LinearObservation};
    use crate::models::{position_observation_matrix, BirthModel, MotionModel, Region};
    use crate::pmbm::{BernoulliDensity, GlobalHypothesis, LocalHypothesis};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn trajectory_config(full_given_detect: f64, detect_prob: f64) -> FilterConfig {
        FilterConfig::new(
            MotionModel::nearly_constant_velocity(0.2, 5, 0.01, 0.99).unwrap(),
            MeasurementModel::new(
                position_observation_matrix(),
                DMatrix::identity(2, 2) * 0.1,
                detect_prob,
                KindProfile::Trajectory { full_given_detect },
            )
            .unwrap(),
            BirthModel::empty(),
            ClutterModel::from_total_rate(10.0, Region::rect(0.0, 100.0, 0.0, 100.0)).unwrap(),
            Thresholds::default(),
            FilterVariant::Pmbm,
        )
        .unwrap()
    }

    #[test]
    fn strip_keeps_window_end_points() {
        let full = TrajectoryMeasurement::full(
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0, 4.0]),
        )
        .unwrap();
        let first = TrajectoryMeasurement::first_only(DVector::from_vec(vec![5.0, 6.0]));
        let last = TrajectoryMeasurement::last_only(DVector::from_vec(vec![7.0, 8.0]));

        let stripped = strip_measurements(std::slice::from_ref(&full));
        assert_eq!(stripped.len(), 1);
        assert_eq!(stripped[0].kind(), MeasurementKind::LastOnly);
        assert_eq!(stripped[0].z_last().unwrap().as_slice(), &[3.0, 4.0]);

        assert!(strip_measurements(std::slice::from_ref(&first)).is_empty());
        assert_eq!(strip_measurements(&[full, last, first]).len(), 2);
    }

    #[test]
    fn adjusted_detection_probability() {
        let cfg = trajectory_config(0.9, 0.9);
        let baseline = BaselineConfig::from_trajectory_config(&cfg, FilterVariant::Pmbm).unwrap();
        // gamma = 0.05, so the window-end detection probability is 0.9 * 0.95.
        assert_relative_eq!(baseline.adjusted_detect(), 0.855, epsilon = 1e-12);
        assert_relative_eq!(baseline.clutter_rate(), 20.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn bernoulli_updates_match_standard_pmbm_arithmetic() {
        // Hand-computed standard point-target PMBM quantities for a predicted
        // Bernoulli with survival p_s: predicted existence r_pred = r * p_s,
        // missed weight 1 - r_pred * p_d, missed existence
        // r_pred (1 - p_d) / (1 - r_pred p_d), detection weight r_pred p_d N.
        let cfg = trajectory_config(0.9, 0.9);
        let baseline = BaselineConfig::from_trajectory_config(&cfg, FilterVariant::Pmbm).unwrap();
        let bcfg = baseline.filter_config();
        let p_d = baseline.adjusted_detect();
        let p_s = bcfg.motion.survive_per_window();

        let r = 0.8;
        let g = Gaussian::new(
            DVector::from_vec(vec![10.0, 1.0, 20.0, -1.0]),
            DMatrix::identity(4, 4) * 0.5,
        )
        .unwrap();
        let posterior = PmbmState {
            poisson: vec![],
            targets: vec![vec![LocalHypothesis {
                log_weight: 0.0,
                exist_prob: r,
                density: Some(BernoulliDensity::Target(g.clone())),
            }]],
            globals: vec![GlobalHypothesis {
                weight: 1.0,
                assignment: vec![0],
            }],
        };
        let predicted = predict(&posterior, bcfg).unwrap();
        let pred_hyp = &predicted.targets[0][0];

        let r_pred = r * p_s;
        let miss = update_bernoulli_missed(pred_hyp, &bcfg.measurement);
        assert_relative_eq!(miss.log_weight.exp(), 1.0 - r_pred * p_d, epsilon = 1e-12);
        // Marginalised missed existence equals the standard recursion's value.
        let r_miss_marginal = miss.exist_prob * miss.density.as_ref().unwrap().survival();
        assert_relative_eq!(
            r_miss_marginal,
            r_pred * (1.0 - p_d) / (1.0 - r_pred * p_d),
            epsilon = 1e-12
        );

        // Detection: weight r_pred * p_d * N(z; H F m, S) with S over the
        // window-interval prediction.
        let f = bcfg.motion.transition();
        let q = bcfg.motion.process_noise();
        let pred_g = Gaussian::new(f * g.mean(), f * g.cov() * f.transpose() + q).unwrap();
        let obs = LinearObservation::new(
            bcfg.measurement.point_matrix().clone(),
            bcfg.measurement.point_noise().clone(),
        )
        .unwrap();
        let (z_pred, s) = obs.predicted_measurement(&pred_g).unwrap();
        let z =
            TrajectoryMeasurement::last_only(z_pred.clone() + DVector::from_vec(vec![0.3, -0.2]));
        let det = update_bernoulli_detection(pred_hyp, &z, &bcfg.measurement).unwrap();
        let lik = Gaussian::new_unchecked(z_pred, s)
            .eval(z.z_last().unwrap())
            .unwrap();
        assert_relative_eq!(
            det.log_weight.exp(),
            r_pred * p_d * lik,
            epsilon = 1e-12 * (r_pred * p_d * lik)
        );
        assert_eq!(det.exist_prob, 1.0);
        // Detection posterior survives marginalisation with certainty.
        assert_relative_eq!(det.density.unwrap().survival(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn certain_detection_matches_plain_kalman_recursion() {
        // p_d = 1 with only full measurements (gamma = 0) and no clutter: the
        // baseline posterior equals an independent Kalman filter over the
        // window interval.
        let mut cfg = trajectory_config(1.0, 1.0);
        cfg.clutter =
            ClutterModel::trajectory(0.0, 0.0, Region::rect(0.0, 100.0, 0.0, 100.0)).unwrap();
        let baseline = BaselineConfig::from_trajectory_config(&cfg, FilterVariant::Pmbm).unwrap();
        assert_eq!(baseline.adjusted_detect(), 1.0);
        let bcfg = baseline.filter_config();

        let mut mean = DVector::from_vec(vec![10.0, 1.0, 20.0, -1.0]);
        let mut cov = DMatrix::identity(4, 4) * 0.5;
        let mut state = PmbmState {
            poisson: vec![],
            targets: vec![vec![LocalHypothesis {
                log_weight: 0.0,
                exist_prob: 1.0,
                density: Some(BernoulliDensity::Target(
                    Gaussian::new(mean.clone(), cov.clone()).unwrap(),
                )),
            }]],
            globals: vec![GlobalHypothesis {
                weight: 1.0,
                assignment: vec![0],
            }],
        };

        let f = bcfg.motion.transition().clone();
        let q = bcfg.motion.process_noise().clone();
        let h = bcfg.measurement.point_matrix().clone();
        let r_mat = bcfg.measurement.point_noise().clone();

        for k in 0..10 {
            // Synthetic measurement along a deterministic path.
            let z_vec = DVector::from_vec(vec![11.0 + k as f64, 19.0 - 0.5 * k as f64]);
            let z = TrajectoryMeasurement::full(DVector::from_vec(vec![0.0, 0.0]), z_vec.clone())
                .unwrap();

            let out = baseline_step(&state, &[z], &baseline).unwrap();
            state = out.posterior;

            // Independent reference recursion.
            mean = &f * mean;
            cov = &f * cov * f.transpose() + &q;
            let s = &h * &cov * h.transpose() + &r_mat;
            let k_gain = &cov * h.transpose() * s.try_inverse().unwrap();
            mean = &mean + &k_gain * (&z_vec - &h * &mean);
            cov = &cov - &k_gain * &h * &cov;

            assert_eq!(state.n_targets(), 1);
            let hyp = &state.targets[0][state.max_weight_global().assignment[0]];
            let BernoulliDensity::Target(g) = hyp.density.as_ref().unwrap() else {
                panic!("expected target form");
            };
            assert!((g.mean() - &mean).amax() < 1e-9, "window {k}");
            assert!((g.cov() - &cov).amax() < 1e-9, "window {k}");
        }
    }
}
