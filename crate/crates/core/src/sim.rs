//! Ground-truth generation and per-window measurement synthesis.
//!
//! Fine steps are 1-based; window `w` of length `n_w` spans the boundary steps
//! `1 + (w-1) n_w` and `1 + w n_w`. Targets intersecting a window are
//! classified by their presence at the two boundary steps: present at both
//! (alive), present at the start only (died in window), present at the end
//! only (born at end). Targets born and dead strictly inside one window touch
//! neither boundary and generate nothing; interior states are likewise
//! unobservable under the two-step abstraction.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::gaussian::Gaussian;
use crate::models::{
    ncv_matrices, position_observation_matrix, ClutterModel, MeasurementModel, Region,
};
use crate::trajectory::{TrajectoryMeasurement, TwoStepTrajectoryKind};

/// Scenario parameters for ground-truth generation.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub area: Region,
    pub fine_interval: f64,
    /// Number of fine steps; steps are 1-based, `1..=horizon`.
    pub horizon: u32,
    pub accel_noise: f64,
    /// Per-fine-step survival probability of the truth death process.
    pub survive_per_step: f64,
    /// Birth PPP rate at the first fine step.
    pub birth_rate_first: f64,
    /// Birth PPP rate at every later fine step.
    pub birth_rate: f64,
    /// Appearance density of new targets.
    pub appearance: Gaussian,
    /// Use the frozen deterministic target set instead of sampling births.
    pub fixed_targets: bool,
}

/// Benchmark scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Four fixed targets on `[0,100]^2` converging mid-simulation, one dying
    /// at fine step 125.
    One,
    /// Targets appearing and disappearing on `[0,600]x[0,400]`.
    Two,
}

impl ScenarioKind {
    pub fn truth_config(self) -> ScenarioConfig {
        match self {
            ScenarioKind::One => ScenarioConfig {
                area: Region::rect(0.0, 100.0, 0.0, 100.0),
                fine_interval: 0.2,
                horizon: 250,
                accel_noise: 0.01,
                survive_per_step: 0.99,
                birth_rate_first: 3.0,
                birth_rate: 0.005,
                appearance: Gaussian::new(
                    DVector::from_vec(vec![50.0, 0.0, 50.0, 0.0]),
                    DMatrix::from_diagonal(&DVector::from_vec(vec![2500.0, 1.0, 2500.0, 1.0])),
                )
                .expect("valid appearance density"),
                fixed_targets: true,
            },
            ScenarioKind::Two => {
                let mean_lifespan_s = 1000.0;
                let fine_interval = 0.2;
                ScenarioConfig {
                    area: Region::rect(0.0, 600.0, 0.0, 400.0),
                    fine_interval,
                    horizon: 250,
                    accel_noise: 0.01,
                    survive_per_step: 1.0 - fine_interval / mean_lifespan_s,
                    birth_rate_first: 0.16,
                    birth_rate: 0.16,
                    appearance: Gaussian::new(
                        DVector::from_vec(vec![300.0, 0.0, 200.0, 0.0]),
                        DMatrix::from_diagonal(&DVector::from_vec(vec![900.0, 1.0, 900.0, 1.0])),
                    )
                    .expect("valid appearance density"),
                    fixed_targets: false,
                }
            }
        }
    }

    /// Gaussian the filters use for birth components and the initial
    /// undetected-target intensity. Scenario 2 filters use a much wider prior
    /// than the truth appearance density.
    pub fn filter_birth_gaussian(self) -> Gaussian {
        match self {
            ScenarioKind::One => Gaussian::new(
                DVector::from_vec(vec![50.0, 0.0, 50.0, 0.0]),
                DMatrix::from_diagonal(&DVector::from_vec(vec![2500.0, 1.0, 2500.0, 1.0])),
            )
            .expect("valid birth density"),
            ScenarioKind::Two => Gaussian::new(
                DVector::from_vec(vec![300.0, 0.0, 200.0, 0.0]),
                DMatrix::from_diagonal(&DVector::from_vec(vec![90000.0, 1.0, 40000.0, 1.0])),
            )
            .expect("valid birth density"),
        }
    }

    /// Weight of the filters' initial undetected-target intensity (the birth
    /// rate of the first fine step).
    pub fn initial_intensity_weight(self) -> f64 {
        match self {
            ScenarioKind::One => 3.0,
            ScenarioKind::Two => 0.16,
        }
    }

    /// Steady-state per-fine-step birth rate used to size the filters'
    /// per-window birth weight.
    pub fn per_step_birth_rate(self) -> f64 {
        match self {
            ScenarioKind::One => 0.005,
            ScenarioKind::Two => 0.16,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::One => "scenario1",
            ScenarioKind::Two => "scenario2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "scenario1" => Ok(ScenarioKind::One),
            "scenario2" => Ok(ScenarioKind::Two),
            other => Err(Error::InvalidConfig(format!("unknown scenario `{other}`"))),
        }
    }
}

/// One target's life: states at every fine step from birth to death inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTarget {
    pub birth_step: u32,
    pub death_step: u32,
    pub states: Vec<DVector<f64>>,
}

impl TruthTarget {
    pub fn alive_at(&self, step: u32) -> bool {
        step >= self.birth_step && step <= self.death_step
    }

    pub fn state_at(&self, step: u32) -> Option<&DVector<f64>> {
        self.alive_at(step)
            .then(|| &self.states[(step - self.birth_step) as usize])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub targets: Vec<TruthTarget>,
    pub horizon: u32,
}

impl GroundTruth {
    /// States of all targets alive at a fine step.
    pub fn alive_states(&self, step: u32) -> Vec<&DVector<f64>> {
        self.targets.iter().filter_map(|t| t.state_at(step)).collect()
    }

    /// Position vectors of all targets alive at a fine step.
    pub fn alive_positions(&self, step: u32) -> Vec<DVector<f64>> {
        let h = position_observation_matrix();
        self.alive_states(step).into_iter().map(|x| &h * x).collect()
    }
}

/// Number of complete windows of length `n_w` within the horizon; trailing
/// fine steps that do not fill a window are unused.
pub fn n_windows(horizon: u32, n_w: u32) -> u32 {
    (horizon - 1) / n_w
}

/// Boundary fine steps `(start, end)` of a 1-based window index.
pub fn window_bounds(window: u32, n_w: u32) -> (u32, u32) {
    // The fine interval is irrelevant for step bookkeeping.
    let clock = crate::trajectory::WindowClock::new(window, n_w, 1.0);
    (clock.start_step(), clock.end_step())
}

/// Sample a scenario's ground truth: births per the scenario's PPP, motion
/// from the nearly-constant-velocity model at the fine interval, deaths per
/// geometric survival. The fixed-target option returns the frozen target set.
pub fn generate_ground_truth<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> GroundTruth {
    if cfg.fixed_targets {
        return scenario1_fixture();
    }
    let (f, q) = ncv_matrices(cfg.fine_interval, cfg.accel_noise);
    let mut targets = Vec::new();
    for step in 1..=cfg.horizon {
        let rate = if step == 1 {
            cfg.birth_rate_first
        } else {
            cfg.birth_rate
        };
        for _ in 0..poisson_count(rate, rng) {
            let x0 = cfg.appearance.sample(rng);
            targets.push(simulate_target(step, x0, cfg, &f, &q, rng));
        }
    }
    GroundTruth {
        targets,
        horizon: cfg.horizon,
    }
}

fn simulate_target<R: Rng + ?Sized>(
    birth_step: u32,
    x0: DVector<f64>,
    cfg: &ScenarioConfig,
    f: &DMatrix<f64>,
    q: &DMatrix<f64>,
    rng: &mut R,
) -> TruthTarget {
    let mut states = vec![x0];
    let mut step = birth_step;
    while step < cfg.horizon && rng.random::<f64>() < cfg.survive_per_step {
        let noise = Gaussian::new_unchecked(DVector::zeros(q.nrows()), q.clone()).sample(rng);
        let next = f * states.last().unwrap() + noise;
        states.push(next);
        step += 1;
    }
    TruthTarget {
        birth_step,
        death_step: step,
        states,
    }
}

fn poisson_count<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).expect("positive rate").sample(rng) as u64
}

/// Generate one window's measurement set: per intersecting target, classify
/// its presence at the window boundaries and draw at most one trajectory
/// measurement; union with clutter; shuffle.
pub fn generate_measurements<R: Rng + ?Sized>(
    truth: &GroundTruth,
    window: u32,
    n_w: u32,
    meas: &MeasurementModel,
    clutter: &ClutterModel,
    rng: &mut R,
) -> Vec<TrajectoryMeasurement> {
    let (start, end) = window_bounds(window, n_w);
    debug_assert!(end <= truth.horizon, "window beyond horizon");
    let mut out = Vec::new();
    for target in &truth.targets {
        let at_start = target.state_at(start);
        let at_end = target.state_at(end);
        let drawn = match (at_start, at_end) {
            (Some(x1), Some(x2)) => {
                let mut stacked = DVector::zeros(x1.len() * 2);
                stacked.rows_mut(0, x1.len()).copy_from(x1);
                stacked.rows_mut(x1.len(), x2.len()).copy_from(x2);
                meas.sample_target_measurement(TwoStepTrajectoryKind::Alive, &stacked, rng)
            }
            (Some(x1), None) => {
                meas.sample_target_measurement(TwoStepTrajectoryKind::DiedInWindow, x1, rng)
            }
            (None, Some(x2)) => {
                meas.sample_target_measurement(TwoStepTrajectoryKind::BornAtEnd, x2, rng)
            }
            (None, None) => None,
        };
        out.extend(drawn);
    }
    out.extend(clutter.sample(rng));
    out.shuffle(rng);
    out
}

const SCENARIO1_FIXTURE: &str = include_str!("../fixtures/scenario1_truth.csv");

/// Seed of the one-off draw frozen in `fixtures/scenario1_truth.csv`.
pub const SCENARIO1_FIXTURE_SEED: u64 = 2024;

/// The frozen four-target truth: all targets born at fine step 1, paths
/// aimed to converge near the centre around step 125, one target dying there,
/// 250 fine steps in total.
pub fn scenario1_fixture() -> GroundTruth {
    parse_truth_csv(SCENARIO1_FIXTURE).expect("embedded fixture is well-formed")
}

/// Regenerate the frozen Scenario-1 target set from its documented seed.
/// Initial positions are rejection-sampled from the appearance density into
/// the interior of the area with a minimum pairwise separation; velocities aim
/// each target at a jittered central meeting point at step 125; paths then
/// follow the nearly-constant-velocity model.
pub fn generate_scenario1_canonical() -> GroundTruth {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(SCENARIO1_FIXTURE_SEED);
    let cfg = ScenarioKind::One.truth_config();
    let (f, q) = ncv_matrices(cfg.fine_interval, cfg.accel_noise);
    let horizon = cfg.horizon;
    let meet_step = 125u32;

    let mut positions: Vec<DVector<f64>> = Vec::new();
    while positions.len() < 4 {
        let x = cfg.appearance.sample(&mut rng);
        let p = DVector::from_vec(vec![x[0], x[2]]);
        let inside = p[0] >= 15.0 && p[0] <= 85.0 && p[1] >= 15.0 && p[1] <= 85.0;
        let separated = positions
            .iter()
            .all(|other| (&p - other).norm() >= 25.0);
        if inside && separated {
            positions.push(p);
        }
    }

    let mut targets = Vec::new();
    for (idx, p0) in positions.iter().enumerate() {
        let meet = DVector::from_vec(vec![
            50.0 + 3.0 * rng.sample::<f64, _>(rand_distr::StandardNormal),
            50.0 + 3.0 * rng.sample::<f64, _>(rand_distr::StandardNormal),
        ]);
        let travel_time = (meet_step - 1) as f64 * cfg.fine_interval;
        let v = (&meet - p0) / travel_time;
        let x0 = DVector::from_vec(vec![
            p0[0],
            v[0] + 0.05 * rng.sample::<f64, _>(rand_distr::StandardNormal),
            p0[1],
            v[1] + 0.05 * rng.sample::<f64, _>(rand_distr::StandardNormal),
        ]);
        let death_step = if idx == 0 { meet_step } else { horizon };
        let mut states = vec![x0];
        for _ in 1..(death_step - 1 + 1) {
            let noise = Gaussian::new_unchecked(DVector::zeros(4), q.clone()).sample(&mut rng);
            let next = &f * states.last().unwrap() + noise;
            states.push(next);
        }
        targets.push(TruthTarget {
            birth_step: 1,
            death_step,
            states,
        });
    }
    GroundTruth { targets, horizon }
}

/// Serialize a ground truth as CSV (`target,step,px,vx,py,vy`).
pub fn truth_to_csv(truth: &GroundTruth) -> String {
    use std::fmt::Write;
    let mut out = String::from("target,step,px,vx,py,vy\n");
    for (idx, t) in truth.targets.iter().enumerate() {
        for (offset, x) in t.states.iter().enumerate() {
            let step = t.birth_step + offset as u32;
            let _ = writeln!(out, "{idx},{step},{},{},{},{}", x[0], x[1], x[2], x[3]);
        }
    }
    out
}

/// Parse the CSV form produced by [`truth_to_csv`].
pub fn parse_truth_csv(text: &str) -> Result<GroundTruth> {
    let mut targets: Vec<TruthTarget> = Vec::new();
    let mut horizon = 0u32;
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::InvalidConfig(format!(
                "truth CSV line {} has {} fields, expected 6",
                line_no + 1,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad number `{s}` in truth CSV")))
        };
        let target: usize = fields[0]
            .parse()
            .map_err(|_| Error::InvalidConfig("bad target index in truth CSV".into()))?;
        let step: u32 = fields[1]
            .parse()
            .map_err(|_| Error::InvalidConfig("bad step in truth CSV".into()))?;
        let state = DVector::from_vec(vec![
            parse_f(fields[2])?,
            parse_f(fields[3])?,
            parse_f(fields[4])?,
            parse_f(fields[5])?,
        ]);
        if target == targets.len() {
            targets.push(TruthTarget {
                birth_step: step,
                death_step: step,
                states: vec![state],
            });
        } else if target == targets.len() - 1 {
            let t = targets.last_mut().unwrap();
            if step != t.death_step + 1 {
                return Err(Error::InvalidConfig("non-contiguous steps in truth CSV".into()));
            }
            t.death_step = step;
            t.states.push(state);
        } else {
            return Err(Error::InvalidConfig("out-of-order target rows in truth CSV".into()));
        }
        horizon = horizon.max(step);
    }
    Ok(GroundTruth { targets, horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::KindProfile;
    use crate::trajectory::MeasurementKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn planar_meas(detect_prob: f64, full_given_detect: f64) -> MeasurementModel {
        MeasurementModel::new(
            position_observation_matrix(),
            DMatrix::identity(2, 2) * 0.1,
            detect_prob,
            KindProfile::Trajectory { full_given_detect },
        )
        .unwrap()
    }

    #[test]
    fn fixture_has_expected_structure() {
        let truth = scenario1_fixture();
        assert_eq!(truth.targets.len(), 4);
        assert_eq!(truth.horizon, 250);
        assert!(truth.targets.iter().all(|t| t.birth_step == 1));
        assert_eq!(truth.targets[0].death_step, 125);
        assert_eq!(truth.targets[0].states.len(), 125);
        for t in &truth.targets[1..] {
            assert_eq!(t.death_step, 250);
            assert_eq!(t.states.len(), 250);
        }
        // Paths converge near the centre at the death step.
        for t in &truth.targets {
            let x = t.state_at(125).unwrap();
            let d = ((x[0] - 50.0).powi(2) + (x[2] - 50.0).powi(2)).sqrt();
            assert!(d < 25.0, "target too far from centre at step 125: {d}");
        }
    }

    #[test]
    fn fixture_matches_canonical_generator() {
        let generated = generate_scenario1_canonical();
        let frozen = scenario1_fixture();
        assert_eq!(generated, frozen);
    }

    #[test]
    #[ignore = "regenerates the frozen fixture file"]
    fn regenerate_scenario1_fixture() {
        let truth = generate_scenario1_canonical();
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/scenario1_truth.csv");
        std::fs::write(path, truth_to_csv(&truth)).unwrap();
    }

    #[test]
    fn truth_csv_round_trips() {
        let truth = scenario1_fixture();
        let csv = truth_to_csv(&truth);
        let parsed = parse_truth_csv(&csv).unwrap();
        assert_eq!(parsed, truth);
    }

    #[test]
    fn zero_birth_rate_gives_empty_truth() {
        let mut cfg = ScenarioKind::Two.truth_config();
        cfg.birth_rate = 0.0;
        cfg.birth_rate_first = 0.0;
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let truth = generate_ground_truth(&cfg, &mut rng);
        assert!(truth.targets.is_empty());
    }

    #[test]
    fn scenario2_birth_rate_statistics() {
        let cfg = ScenarioKind::Two.truth_config();
        let seeds = 100u64;
        let mut total = 0usize;
        for seed in 0..seeds {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            total += generate_ground_truth(&cfg, &mut rng).targets.len();
        }
        let mean = total as f64 / seeds as f64;
        let expected = 0.16 * cfg.horizon as f64;
        // 3-sigma Poisson band on the mean of `seeds` draws.
        let band = 3.0 * (expected / seeds as f64).sqrt();
        assert!(
            (mean - expected).abs() < band,
            "mean births {mean}, expected {expected} +- {band}"
        );
    }

    #[test]
    fn window_bookkeeping() {
        assert_eq!(n_windows(250, 5), 49);
        assert_eq!(n_windows(250, 7), 35);
        assert_eq!(n_windows(250, 10), 24);
        assert_eq!(window_bounds(1, 7), (1, 8));
        assert_eq!(window_bounds(35, 7), (239, 246));
    }

    #[test]
    fn window_classification_of_targets() {
        // One target alive over steps 1..=12, one born at step 8.
        let mk_states = |n: usize, x: f64| vec![DVector::from_vec(vec![x, 0.0, x, 0.0]); n];
        let truth = GroundTruth {
            targets: vec![
                TruthTarget {
                    birth_step: 1,
                    death_step: 12,
                    states: mk_states(12, 10.0),
                },
                TruthTarget {
                    birth_step: 8,
                    death_step: 21,
                    states: mk_states(14, 30.0),
                },
            ],
            horizon: 21,
        };
        let meas = planar_meas(1.0, 1.0);
        let clutter =
            ClutterModel::trajectory(0.0, 0.0, Region::rect(0.0, 100.0, 0.0, 100.0)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);

        // Window 1 (steps 1..6): target 0 alive at both ends, target 1 absent.
        let w1 = generate_measurements(&truth, 1, 5, &meas, &clutter, &mut rng);
        assert_eq!(w1.len(), 1);
        assert_eq!(w1[0].kind(), MeasurementKind::Full);

        // Window 2 (steps 6..11): target 0 alive, target 1 born mid-window,
        // so it can only produce a window-end detection.
        let w2 = generate_measurements(&truth, 2, 5, &meas, &clutter, &mut rng);
        assert_eq!(w2.len(), 2);
        let kinds: Vec<_> = w2.iter().map(|z| z.kind()).collect();
        assert!(kinds.contains(&MeasurementKind::Full));
        assert!(kinds.contains(&MeasurementKind::LastOnly));
        // The window-end detection sits near target 1.
        let last = w2.iter().find(|z| z.kind() == MeasurementKind::LastOnly).unwrap();
        assert!((last.z_last().unwrap()[0] - 30.0).abs() < 3.0);

        // Window 3 (steps 11..16): target 0 dies inside the window.
        let w3 = generate_measurements(&truth, 3, 5, &meas, &clutter, &mut rng);
        assert_eq!(w3.len(), 2);
        let kinds: Vec<_> = w3.iter().map(|z| z.kind()).collect();
        assert!(kinds.contains(&MeasurementKind::FirstOnly));
        assert!(kinds.contains(&MeasurementKind::Full));
    }

    #[test]
    fn measurement_generation_is_deterministic() {
        let truth = scenario1_fixture();
        let meas = planar_meas(0.9, 0.7);
        let clutter =
            ClutterModel::from_total_rate(10.0, Region::rect(0.0, 100.0, 0.0, 100.0)).unwrap();
        let mut rng_a = ChaCha12Rng::seed_from_u64(42);
        let mut rng_b = ChaCha12Rng::seed_from_u64(42);
        for w in 1..=5 {
            let a = generate_measurements(&truth, w, 7, &meas, &clutter, &mut rng_a);
            let b = generate_measurements(&truth, w, 7, &meas, &clutter, &mut rng_b);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn alive_positions_track_deaths() {
        let truth = scenario1_fixture();
        assert_eq!(truth.alive_positions(121).len(), 4);
        assert_eq!(truth.alive_positions(126).len(), 3);
    }
}
