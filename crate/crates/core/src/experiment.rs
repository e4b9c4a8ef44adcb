//! Monte-Carlo experiment execution.
//!
//! An experiment sweeps window lengths, full-measurement probabilities and
//! clutter rates over one scenario, running every configured filter on the
//! same per-(run, window) measurement sets so comparisons are paired. Runs are
//! independent work items executed in parallel; every run owns
//! counter-derived RNG streams so results do not depend on scheduling.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::baseline::{baseline_step, BaselineConfig};
use crate::error::{Error, Result};
use crate::filter::{step, FilterConfig, FilterVariant, Thresholds};
use crate::gospa::{gospa, rms, GospaResult};
use crate::models::{
    position_observation_matrix, BirthModel, ClutterModel, KindProfile, MeasurementModel,
    MotionModel,
};
use crate::pmbm::PmbmState;
use crate::sim::{
    generate_ground_truth, generate_measurements, n_windows, window_bounds, GroundTruth,
    ScenarioKind,
};
use crate::trajectory::TrajectoryMeasurement;

/// The four benchmarked filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    TmPmbm,
    TmPmb,
    Pmbm,
    Pmb,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::TmPmbm,
        FilterKind::TmPmb,
        FilterKind::Pmbm,
        FilterKind::Pmb,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::TmPmbm => "tm-pmbm",
            FilterKind::TmPmb => "tm-pmb",
            FilterKind::Pmbm => "pmbm",
            FilterKind::Pmb => "pmb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tm-pmbm" => Ok(FilterKind::TmPmbm),
            "tm-pmb" => Ok(FilterKind::TmPmb),
            "pmbm" => Ok(FilterKind::Pmbm),
            "pmb" => Ok(FilterKind::Pmb),
            other => Err(Error::InvalidConfig(format!("unknown filter `{other}`"))),
        }
    }

    pub fn uses_trajectory_measurements(self) -> bool {
        matches!(self, FilterKind::TmPmbm | FilterKind::TmPmb)
    }

    pub fn variant(self) -> FilterVariant {
        match self {
            FilterKind::TmPmbm | FilterKind::Pmbm => FilterVariant::Pmbm,
            FilterKind::TmPmb | FilterKind::Pmb => FilterVariant::Pmb,
        }
    }
}

/// Full experiment description: scenario, model parameters, sweep lists, and
/// execution settings.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub scenario: ScenarioKind,
    /// Shorten the scenario horizon (fine steps) for quick runs.
    pub horizon_override: Option<u32>,
    pub filters: Vec<FilterKind>,
    pub window_lengths: Vec<u32>,
    pub full_detect_probs: Vec<f64>,
    pub clutter_rates: Vec<f64>,
    pub runs: u32,
    pub seed: u64,
    pub detect_prob: f64,
    pub survive_per_step: f64,
    pub fine_interval: f64,
    pub accel_noise: f64,
    pub meas_noise_var: f64,
    pub gospa_cutoff: f64,
    pub gospa_order: f64,
    pub thresholds: Thresholds,
}

impl ExperimentSpec {
    /// Benchmark defaults for a scenario (100 runs over the full sweep).
    pub fn defaults(scenario: ScenarioKind) -> Self {
        let clutter_rates = match scenario {
            ScenarioKind::One => vec![0.1, 1.0, 10.0],
            ScenarioKind::Two => vec![0.24, 2.4],
        };
        Self {
            scenario,
            horizon_override: None,
            filters: FilterKind::ALL.to_vec(),
            window_lengths: vec![2, 5, 7, 10],
            full_detect_probs: vec![0.7, 0.9],
            clutter_rates,
            runs: 100,
            seed: 1,
            detect_prob: 0.9,
            survive_per_step: 0.99,
            fine_interval: 0.2,
            accel_noise: 0.01,
            meas_noise_var: 0.1,
            gospa_cutoff: 10.0,
            gospa_order: 2.0,
            thresholds: Thresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty() {
            return Err(Error::InvalidConfig("filters list is empty".into()));
        }
        if self.window_lengths.is_empty()
            || self.full_detect_probs.is_empty()
            || self.clutter_rates.is_empty()
        {
            return Err(Error::InvalidConfig("sweep lists must be nonempty".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.window_lengths.contains(&0) {
            return Err(Error::InvalidConfig("window lengths must be positive".into()));
        }
        let horizon = self.horizon();
        for &n_w in &self.window_lengths {
            if n_windows(horizon, n_w) == 0 {
                return Err(Error::InvalidConfig(format!(
                    "horizon {horizon} too short for window length {n_w}"
                )));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> u32 {
        self.horizon_override
            .unwrap_or(self.scenario.truth_config().horizon)
    }

    /// Sweep cells in deterministic order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &n_w in &self.window_lengths {
            for &full_detect_prob in &self.full_detect_probs {
                for &clutter_rate in &self.clutter_rates {
                    out.push(SweepCell {
                        n_w,
                        full_detect_prob,
                        clutter_rate,
                    });
                }
            }
        }
        out
    }

    /// Trajectory-measurement filter configuration for one sweep cell.
    pub fn trajectory_config(
        &self,
        cell: &SweepCell,
        variant: FilterVariant,
    ) -> Result<FilterConfig> {
        let motion = MotionModel::nearly_constant_velocity(
            self.fine_interval,
            cell.n_w,
            self.accel_noise,
            self.survive_per_step,
        )?;
        let measurement = MeasurementModel::new(
            position_observation_matrix(),
            DMatrix::identity(2, 2) * self.meas_noise_var,
            self.detect_prob,
            KindProfile::Trajectory {
                full_given_detect: cell.full_detect_prob,
            },
        )?;
        let birth = BirthModel::single(
            self.scenario.per_step_birth_rate() * cell.n_w as f64,
            self.scenario.filter_birth_gaussian(),
        )?;
        let clutter =
            ClutterModel::from_total_rate(cell.clutter_rate, self.scenario.truth_config().area)?;
        FilterConfig::new(motion, measurement, birth, clutter, self.thresholds, variant)
    }

    /// Initial posterior: undetected-target intensity covering the first fine
    /// step's births, empty Bernoulli mixture.
    pub fn initial_state(&self) -> PmbmState {
        PmbmState::with_initial_intensity(vec![(
            self.scenario.initial_intensity_weight(),
            self.scenario.filter_birth_gaussian(),
        )])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub n_w: u32,
    pub full_detect_prob: f64,
    pub clutter_rate: f64,
}

/// One (filter, cell, run, window) observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub filter: FilterKind,
    pub n_w: u32,
    pub full_detect_prob: f64,
    pub clutter_rate: f64,
    pub run: u32,
    pub window: u32,
    pub gospa: GospaResult,
    pub n_local_hypotheses: usize,
    pub n_global_hypotheses: usize,
    pub step_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub filter: FilterKind,
    pub n_w: u32,
    pub full_detect_prob: f64,
    pub clutter_rate: f64,
    pub rms: GospaResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisRow {
    pub filter: FilterKind,
    pub n_w: u32,
    pub full_detect_prob: f64,
    pub clutter_rate: f64,
    pub mean_local_hypotheses: f64,
    pub mean_global_hypotheses: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub filter: FilterKind,
    pub n_w: u32,
    pub full_detect_prob: f64,
    pub clutter_rate: f64,
    pub mean_step_ms: f64,
    pub mean_run_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResults {
    fn cell_rows(&self, filter: FilterKind, cell: &SweepCell) -> Vec<&ResultRow> {
        self.rows
            .iter()
            .filter(|r| {
                r.filter == filter
                    && r.n_w == cell.n_w
                    && r.full_detect_prob == cell.full_detect_prob
                    && r.clutter_rate == cell.clutter_rate
            })
            .collect()
    }

    /// RMS GOSPA per (filter, sweep cell).
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out = Vec::new();
        for &filter in &self.spec.filters {
            for cell in self.spec.cells() {
                let series: Vec<GospaResult> = self
                    .cell_rows(filter, &cell)
                    .iter()
                    .map(|r| r.gospa)
                    .collect();
                if let Ok(value) = rms(&series) {
                    out.push(SummaryRow {
                        filter,
                        n_w: cell.n_w,
                        full_detect_prob: cell.full_detect_prob,
                        clutter_rate: cell.clutter_rate,
                        rms: value,
                    });
                }
            }
        }
        out
    }

    /// Mean hypothesis counts per (filter, sweep cell).
    pub fn hypothesis_summary(&self) -> Vec<HypothesisRow> {
        let mut out = Vec::new();
        for &filter in &self.spec.filters {
            for cell in self.spec.cells() {
                let rows = self.cell_rows(filter, &cell);
                if rows.is_empty() {
                    continue;
                }
                let n = rows.len() as f64;
                out.push(HypothesisRow {
                    filter,
                    n_w: cell.n_w,
                    full_detect_prob: cell.full_detect_prob,
                    clutter_rate: cell.clutter_rate,
                    mean_local_hypotheses: rows
                        .iter()
                        .map(|r| r.n_local_hypotheses as f64)
                        .sum::<f64>()
                        / n,
                    mean_global_hypotheses: rows
                        .iter()
                        .map(|r| r.n_global_hypotheses as f64)
                        .sum::<f64>()
                        / n,
                });
            }
        }
        out
    }

    /// Wall-time per (filter, sweep cell).
    pub fn timing_summary(&self) -> Vec<TimingRow> {
        let mut out = Vec::new();
        for &filter in &self.spec.filters {
            for cell in self.spec.cells() {
                let rows = self.cell_rows(filter, &cell);
                if rows.is_empty() {
                    continue;
                }
                let total_ms: f64 = rows.iter().map(|r| r.step_ms).sum();
                out.push(TimingRow {
                    filter,
                    n_w: cell.n_w,
                    full_detect_prob: cell.full_detect_prob,
                    clutter_rate: cell.clutter_rate,
                    mean_step_ms: total_ms / rows.len() as f64,
                    mean_run_seconds: total_ms / 1e3 / self.spec.runs as f64,
                });
            }
        }
        out
    }
}

/// Execute the experiment. Deterministic for a given spec (timing fields
/// aside): truth and measurement streams are derived from the master seed by
/// counter, and parallel results are merged in job order.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|ci| (0..spec.runs).map(move |run| (ci, run)))
        .collect();

    let results: Vec<Result<Vec<ResultRow>>> = jobs
        .par_iter()
        .map(|&(ci, run)| run_job(spec, &cells[ci], ci, run))
        .collect();

    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(ExperimentResults {
        spec: spec.clone(),
        rows,
    })
}

fn run_job(
    spec: &ExperimentSpec,
    cell: &SweepCell,
    cell_index: usize,
    run: u32,
) -> Result<Vec<ResultRow>> {
    let mut truth_cfg = spec.scenario.truth_config();
    truth_cfg.horizon = spec.horizon();
    let mut truth_rng = ChaCha12Rng::seed_from_u64(spec.seed);
    truth_rng.set_stream(run as u64);
    let truth = generate_ground_truth(&truth_cfg, &mut truth_rng);

    // Measurement stream is per (cell, run) and shared by all filters.
    let mut meas_rng = ChaCha12Rng::seed_from_u64(spec.seed);
    meas_rng.set_stream(((cell_index as u64 + 1) << 32) ^ run as u64);
    let true_meas = MeasurementModel::new(
        position_observation_matrix(),
        DMatrix::identity(2, 2) * spec.meas_noise_var,
        spec.detect_prob,
        KindProfile::Trajectory {
            full_given_detect: cell.full_detect_prob,
        },
    )?;
    let true_clutter = ClutterModel::from_total_rate(cell.clutter_rate, truth_cfg.area.clone())?;

    let windows = n_windows(truth_cfg.horizon, cell.n_w);
    let mut window_measurements: Vec<Vec<TrajectoryMeasurement>> =
        Vec::with_capacity(windows as usize);
    for w in 1..=windows {
        window_measurements.push(generate_measurements(
            &truth,
            w,
            cell.n_w,
            &true_meas,
            &true_clutter,
            &mut meas_rng,
        ));
    }

    let mut rows = Vec::new();
    for &filter in &spec.filters {
        rows.extend(run_filter(
            spec,
            cell,
            run,
            filter,
            &truth,
            &window_measurements,
        )?);
    }
    Ok(rows)
}

fn run_filter(
    spec: &ExperimentSpec,
    cell: &SweepCell,
    run: u32,
    filter: FilterKind,
    truth: &GroundTruth,
    window_measurements: &[Vec<TrajectoryMeasurement>],
) -> Result<Vec<ResultRow>> {
    let traj_cfg = spec.trajectory_config(cell, filter.variant())?;
    let baseline_cfg = if filter.uses_trajectory_measurements() {
        None
    } else {
        Some(BaselineConfig::from_trajectory_config(
            &traj_cfg,
            filter.variant(),
        )?)
    };

    let mut state = spec.initial_state();
    let mut rows = Vec::with_capacity(window_measurements.len());
    for (wi, zs) in window_measurements.iter().enumerate() {
        let window = wi as u32 + 1;
        let out = match &baseline_cfg {
            None => step(&state, zs, &traj_cfg)?,
            Some(b) => baseline_step(&state, zs, b)?,
        };
        state = out.posterior;

        let (_, end_step) = window_bounds(window, cell.n_w);
        let truth_positions = truth.alive_positions(end_step);
        let est_positions = estimate_positions(&out.estimates);
        let gospa_value = gospa(
            &truth_positions,
            &est_positions,
            spec.gospa_cutoff,
            spec.gospa_order,
        );
        rows.push(ResultRow {
            filter,
            n_w: cell.n_w,
            full_detect_prob: cell.full_detect_prob,
            clutter_rate: cell.clutter_rate,
            run,
            window,
            gospa: gospa_value,
            n_local_hypotheses: out.diagnostics.n_local_hypotheses,
            n_global_hypotheses: out.diagnostics.n_global_hypotheses,
            step_ms: out.diagnostics.elapsed_ms,
        });
    }
    Ok(rows)
}

fn estimate_positions(estimates: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let h = position_observation_matrix();
    estimates.iter().map(|x| &h * x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::defaults(ScenarioKind::One);
        spec.horizon_override = Some(36);
        spec.window_lengths = vec![7];
        spec.full_detect_probs = vec![0.7];
        spec.clutter_rates = vec![2.0];
        spec.runs = 2;
        spec.seed = 7;
        spec
    }

    fn strip_timing(rows: &[ResultRow]) -> Vec<ResultRow> {
        rows.iter()
            .map(|r| ResultRow {
                step_ms: 0.0,
                ..r.clone()
            })
            .collect()
    }

    #[test]
    fn smoke_run_produces_expected_row_count() {
        let spec = small_spec();
        let results = run_monte_carlo(&spec).unwrap();
        // 4 filters x 2 runs x 5 windows.
        assert_eq!(results.rows.len(), 4 * 2 * 5);
        assert!(results
            .rows
            .iter()
            .all(|r| r.gospa.total.is_finite() && r.n_global_hypotheses >= 1));
        assert_eq!(results.summary().len(), 4);
        assert_eq!(results.hypothesis_summary().len(), 4);
        assert_eq!(results.timing_summary().len(), 4);
    }

    #[test]
    fn same_seed_is_bitwise_deterministic() {
        let spec = small_spec();
        let a = run_monte_carlo(&spec).unwrap();
        let b = run_monte_carlo(&spec).unwrap();
        assert_eq!(strip_timing(&a.rows), strip_timing(&b.rows));
    }

    #[test]
    fn filters_share_measurements_per_run() {
        // Running a subset of filters must not change another filter's rows:
        // that only holds if all filters consume identical measurements.
        let mut solo = small_spec();
        solo.filters = vec![FilterKind::TmPmbm];
        let solo_rows = strip_timing(&run_monte_carlo(&solo).unwrap().rows);

        let all = small_spec();
        let all_rows = run_monte_carlo(&all).unwrap();
        let tm_rows: Vec<ResultRow> = strip_timing(&all_rows.rows)
            .into_iter()
            .filter(|r| r.filter == FilterKind::TmPmbm)
            .collect();
        assert_eq!(solo_rows, tm_rows);
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let mut spec = small_spec();
        spec.runs = 0;
        assert!(spec.validate().is_err());

        let mut spec = small_spec();
        spec.window_lengths = vec![];
        assert!(spec.validate().is_err());

        let mut spec = small_spec();
        spec.horizon_override = Some(5);
        spec.window_lengths = vec![10];
        assert!(spec.validate().is_err());
    }
}
