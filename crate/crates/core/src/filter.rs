//! The trajectory-measurement PMBM/PMB filter recursion.
//!
//! One filter step covers one window: predict the target-form posterior onto
//! two-step trajectories, update with the window's trajectory measurements,
//! optionally reduce to a single global hypothesis (PMB variant), marginalise
//! back to target states at the window end, prune, and estimate.
//!
//! Prediction keeps the existence probability of every Bernoulli and splits
//! its density into a died-at-start branch (probability `1 - p_S`) and an
//! alive branch over the stacked two-step state (probability `p_S`). The
//! update handles the three measurement kinds per branch, forms global
//! hypotheses with per-hypothesis cost matrices solved by Murty's algorithm,
//! and creates one new potential target per measurement from the Poisson
//! intensity.

use std::time::Instant;

use nalgebra::DVector;

use crate::assoc::{gate, murty_kbest, CostMatrix};
use crate::error::{Error, Result};
use crate::gaussian::{kalman_update_log, predict_two_step, Gaussian};
use crate::models::{BirthModel, ClutterModel, MeasurementModel, MotionModel};
use crate::pmbm::{
    compact_dead_columns, estimate, kld_merge_to_pmb, normalize_and_prune, BernoulliDensity,
    GlobalHypothesis, LocalHypothesis, PmbmState, PoissonComponent, PoissonDensity, WindowDensity,
};
use crate::trajectory::{MeasurementKind, TrajectoryMeasurement};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVariant {
    /// Full multi-hypothesis PMBM recursion.
    Pmbm,
    /// PMB: reduce to a single global hypothesis after every update.
    Pmb,
}

/// Pruning, gating and estimation thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Poisson components below this weight are removed.
    pub poisson_prune: f64,
    /// Global hypotheses below this normalized weight are removed.
    pub global_prune: f64,
    /// Bernoullis below this existence probability become nonexistent.
    pub bernoulli_prune: f64,
    /// Squared-Mahalanobis ellipsoidal gate.
    pub gate: f64,
    /// Cap on the number of global hypotheses.
    pub max_globals: usize,
    /// Existence probability above which a Bernoulli is reported.
    pub estimate_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            poisson_prune: 1e-5,
            global_prune: 1e-4,
            bernoulli_prune: 1e-5,
            gate: 9.0,
            max_globals: 200,
            estimate_threshold: 0.1,
        }
    }
}

/// Everything one filter needs for a window step.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub motion: MotionModel,
    pub measurement: MeasurementModel,
    pub birth: BirthModel,
    pub clutter: ClutterModel,
    pub thresholds: Thresholds,
    pub variant: FilterVariant,
}

impl FilterConfig {
    pub fn new(
        motion: MotionModel,
        measurement: MeasurementModel,
        birth: BirthModel,
        clutter: ClutterModel,
        thresholds: Thresholds,
        variant: FilterVariant,
    ) -> Result<Self> {
        if measurement.state_dim() != motion.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "measurement matrix columns vs motion state",
                expected: motion.state_dim(),
                actual: measurement.state_dim(),
            });
        }
        if let Some((_, g)) = birth.components().first() {
            if g.dim() != motion.state_dim() {
                return Err(Error::DimensionMismatch {
                    context: "birth component dimension",
                    expected: motion.state_dim(),
                    actual: g.dim(),
                });
            }
        }
        if clutter.region().dim() != measurement.obs_dim() {
            return Err(Error::DimensionMismatch {
                context: "clutter region vs measurement dimension",
                expected: measurement.obs_dim(),
                actual: clutter.region().dim(),
            });
        }
        Ok(Self {
            motion,
            measurement,
            birth,
            clutter,
            thresholds,
            variant,
        })
    }
}

/// Per-step diagnostics. Hypothesis counts are taken after the update and its
/// pruning, before any PMB reduction, so PMBM and PMB variants report the
/// association load of the same stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub n_local_hypotheses: usize,
    pub n_global_hypotheses: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub posterior: PmbmState,
    pub estimates: Vec<DVector<f64>>,
    pub diagnostics: StepDiagnostics,
}

/// Predict a target-form posterior onto two-step trajectories.
pub fn predict(posterior: &PmbmState, cfg: &FilterConfig) -> Result<PmbmState> {
    let f = cfg.motion.transition();
    let q = cfg.motion.process_noise();
    let p_s = cfg.motion.survive_per_window();

    let mut poisson = Vec::with_capacity(cfg.birth.components().len() + posterior.poisson.len());
    for (weight, g) in cfg.birth.components() {
        poisson.push(PoissonComponent {
            weight: *weight,
            density: PoissonDensity::BornAtEnd(g.clone()),
        });
    }
    for comp in &posterior.poisson {
        let PoissonDensity::Target(g) = &comp.density else {
            return Err(Error::InvalidConfig(
                "prediction requires a target-form posterior".into(),
            ));
        };
        poisson.push(PoissonComponent {
            weight: comp.weight * p_s,
            density: PoissonDensity::Alive(predict_two_step(g, f, q)?),
        });
    }

    let mut targets = Vec::with_capacity(posterior.targets.len());
    for hyps in &posterior.targets {
        let mut predicted = Vec::with_capacity(hyps.len());
        for h in hyps {
            predicted.push(match &h.density {
                None => LocalHypothesis {
                    log_weight: 0.0,
                    exist_prob: h.exist_prob,
                    density: None,
                },
                Some(BernoulliDensity::Target(g)) => {
                    let beta_die = 1.0 - p_s;
                    LocalHypothesis {
                        log_weight: 0.0,
                        exist_prob: h.exist_prob,
                        density: Some(BernoulliDensity::Window(WindowDensity {
                            beta_die,
                            died: (beta_die > 0.0).then(|| g.clone()),
                            alive: predict_two_step(g, f, q)?,
                        })),
                    }
                }
                Some(_) => {
                    return Err(Error::InvalidConfig(
                        "prediction requires a target-form posterior".into(),
                    ))
                }
            });
        }
        targets.push(predicted);
    }

    Ok(PmbmState {
        poisson,
        targets,
        globals: posterior.globals.clone(),
    })
}

/// Thin the Poisson intensity by the non-detection probability; means and
/// covariances are unchanged.
pub fn update_poisson(poisson: &[PoissonComponent], meas: &MeasurementModel) -> Vec<PoissonComponent> {
    let thin = 1.0 - meas.detect_prob();
    poisson
        .iter()
        .map(|c| PoissonComponent {
            weight: c.weight * thin,
            density: c.density.clone(),
        })
        .collect()
}

/// Missed-detection hypothesis for a predicted Bernoulli.
pub fn update_bernoulli_missed(h: &LocalHypothesis, meas: &MeasurementModel) -> LocalHypothesis {
    let p_d = meas.detect_prob();
    let r = h.exist_prob;
    match &h.density {
        None => LocalHypothesis::nonexistent(0.0),
        Some(BernoulliDensity::Window(wd)) => {
            let d_die = meas.detectability(1);
            let d_live = meas.detectability(3);
            let effective = wd.beta_die * d_die + wd.beta_live() * d_live;
            let w = 1.0 - r * p_d * effective;
            let r_new = if w > 0.0 {
                r * (1.0 - p_d * effective) / w
            } else {
                0.0
            };
            let density = if d_die == d_live {
                // Constant detectability: survival mixture unchanged.
                BernoulliDensity::Window(wd.clone())
            } else {
                // Branch-dependent detectability reweights the mixture.
                let die_w = wd.beta_die * (1.0 - p_d * d_die);
                let live_w = wd.beta_live() * (1.0 - p_d * d_live);
                let total = die_w + live_w;
                let beta_die = if total > 0.0 { die_w / total } else { wd.beta_die };
                BernoulliDensity::Window(WindowDensity {
                    beta_die,
                    died: if beta_die > 0.0 { wd.died.clone() } else { None },
                    alive: wd.alive.clone(),
                })
            };
            LocalHypothesis {
                log_weight: w.max(0.0).ln(),
                exist_prob: r_new,
                density: Some(density),
            }
        }
        Some(other) => {
            // Born-at-end or target-form density: detectability is constant.
            let w = 1.0 - r * p_d;
            let r_new = if w > 0.0 { r * (1.0 - p_d) / w } else { 0.0 };
            LocalHypothesis {
                log_weight: w.max(0.0).ln(),
                exist_prob: r_new,
                density: Some(other.clone()),
            }
        }
    }
}

/// Detection hypothesis for a predicted Bernoulli and one gated measurement.
pub fn update_bernoulli_detection(
    h: &LocalHypothesis,
    z: &TrajectoryMeasurement,
    meas: &MeasurementModel,
) -> Result<LocalHypothesis> {
    let Some(BernoulliDensity::Window(wd)) = &h.density else {
        return Err(Error::InvalidConfig(
            "detection update requires a two-step trajectory density".into(),
        ));
    };
    let r = h.exist_prob;
    let p_d = meas.detect_prob();

    match z.kind() {
        MeasurementKind::FirstOnly => {
            // Both survival branches observe the window-start state, with
            // identical innovation statistics for predicted densities.
            let gamma = meas.coefficient(1, 3).unwrap_or(0.0);
            let obs_alive = meas.observation_matrix(1, 3)?;
            let z1 = z.z_first().unwrap();
            let (alive_post, log_n) = kalman_update_log(&wd.alive, &obs_alive, z1)?;
            let died_post = match &wd.died {
                Some(g) => {
                    let obs_died = meas.observation_matrix(1, 1)?;
                    Some(kalman_update_log(g, &obs_died, z1)?.0)
                }
                None => None,
            };
            let mix = wd.beta_die * meas.coefficient(1, 1).unwrap_or(0.0)
                + wd.beta_live() * gamma;
            let log_weight = r.ln() + p_d.ln() + mix.ln() + log_n;
            let beta_die = if mix > 0.0 { wd.beta_die / mix } else { 0.0 };
            Ok(LocalHypothesis {
                log_weight,
                exist_prob: 1.0,
                density: Some(BernoulliDensity::Window(WindowDensity {
                    beta_die,
                    died: if beta_die > 0.0 { died_post } else { None },
                    alive: alive_post,
                })),
            })
        }
        MeasurementKind::LastOnly => {
            let coeff = meas.coefficient(2, 3).unwrap_or(0.0);
            let obs = meas.observation_matrix(2, 3)?;
            let (alive_post, log_n) = kalman_update_log(&wd.alive, &obs, z.z_last().unwrap())?;
            let log_weight = r.ln() + p_d.ln() + wd.beta_live().ln() + coeff.ln() + log_n;
            Ok(LocalHypothesis {
                log_weight,
                exist_prob: 1.0,
                density: Some(BernoulliDensity::Window(WindowDensity {
                    beta_die: 0.0,
                    died: None,
                    alive: alive_post,
                })),
            })
        }
        MeasurementKind::Full => {
            let coeff = meas.coefficient(3, 3).unwrap_or(0.0);
            let obs = meas.observation_matrix(3, 3)?;
            let (alive_post, log_n) = kalman_update_log(&wd.alive, &obs, &z.stacked())?;
            let log_weight = r.ln() + p_d.ln() + wd.beta_live().ln() + coeff.ln() + log_n;
            Ok(LocalHypothesis {
                log_weight,
                exist_prob: 1.0,
                density: Some(BernoulliDensity::Window(WindowDensity {
                    beta_die: 0.0,
                    died: None,
                    alive: alive_post,
                })),
            })
        }
    }
}

/// Gate one measurement against a predicted Bernoulli hypothesis. Trajectory
/// measurements pass if at least one of their locations falls within its
/// respective gate.
fn gate_hypothesis(
    h: &LocalHypothesis,
    z: &TrajectoryMeasurement,
    meas: &MeasurementModel,
    threshold: f64,
) -> Result<bool> {
    let Some(BernoulliDensity::Window(wd)) = &h.density else {
        return Ok(false);
    };
    if h.exist_prob <= 0.0 {
        return Ok(false);
    }
    match z.kind() {
        MeasurementKind::FirstOnly => {
            let mix = wd.beta_die * meas.coefficient(1, 1).unwrap_or(0.0)
                + wd.beta_live() * meas.coefficient(1, 3).unwrap_or(0.0);
            if mix <= 0.0 {
                return Ok(false);
            }
            let obs = meas.observation_matrix(1, 3)?;
            let (z_pred, s) = obs.predicted_measurement(&wd.alive)?;
            gate(&z_pred, &s, z.z_first().unwrap(), threshold)
        }
        MeasurementKind::LastOnly => {
            if wd.beta_live() * meas.coefficient(2, 3).unwrap_or(0.0) <= 0.0 {
                return Ok(false);
            }
            let obs = meas.observation_matrix(2, 3)?;
            let (z_pred, s) = obs.predicted_measurement(&wd.alive)?;
            gate(&z_pred, &s, z.z_last().unwrap(), threshold)
        }
        MeasurementKind::Full => {
            if wd.beta_live() * meas.coefficient(3, 3).unwrap_or(0.0) <= 0.0 {
                return Ok(false);
            }
            let front = meas.observation_matrix(1, 3)?;
            let (zf, sf) = front.predicted_measurement(&wd.alive)?;
            if gate(&zf, &sf, z.z_first().unwrap(), threshold)? {
                return Ok(true);
            }
            let back = meas.observation_matrix(2, 3)?;
            let (zb, sb) = back.predicted_measurement(&wd.alive)?;
            gate(&zb, &sb, z.z_last().unwrap(), threshold)
        }
    }
}

/// New potential target initiated by one measurement: the nonexistent
/// hypothesis (weight one) and the detection hypothesis whose weight combines
/// the clutter intensity with the gated Poisson components' contributions.
/// The detection density keeps only the highest-contribution component,
/// Kalman-updated; the weight and existence probability use the full sums.
pub fn create_new_bernoulli(
    poisson: &[PoissonComponent],
    z: &TrajectoryMeasurement,
    cfg: &FilterConfig,
) -> Result<(LocalHypothesis, LocalHypothesis)> {
    let meas = &cfg.measurement;
    let threshold = cfg.thresholds.gate;
    // (log contribution, born-at-end?, posterior Gaussian)
    let mut best: Option<(f64, bool, Gaussian)> = None;
    let mut log_contributions: Vec<f64> = Vec::new();

    for comp in poisson {
        match (&comp.density, z.kind()) {
            (PoissonDensity::BornAtEnd(g), MeasurementKind::LastOnly) => {
                let coeff = meas.coefficient(2, 2).unwrap_or(0.0);
                if coeff <= 0.0 {
                    continue;
                }
                let obs = meas.observation_matrix(2, 2)?;
                let (z_pred, s) = obs.predicted_measurement(g)?;
                if !gate(&z_pred, &s, z.z_last().unwrap(), threshold)? {
                    continue;
                }
                let (post, log_n) = kalman_update_log(g, &obs, z.z_last().unwrap())?;
                let log_v = comp.weight.ln() + meas.detect_prob().ln() + coeff.ln() + log_n;
                if best.as_ref().is_none_or(|(b, _, _)| log_v > *b) {
                    best = Some((log_v, true, post));
                }
                log_contributions.push(log_v);
            }
            (PoissonDensity::Alive(g), kind) => {
                let mu: u8 = match kind {
                    MeasurementKind::FirstOnly => 1,
                    MeasurementKind::LastOnly => 2,
                    MeasurementKind::Full => 3,
                };
                let Some(coeff) = meas.coefficient(mu, 3) else {
                    continue;
                };
                if coeff <= 0.0 {
                    continue;
                }
                let gated = match kind {
                    MeasurementKind::Full => {
                        let front = meas.observation_matrix(1, 3)?;
                        let (zf, sf) = front.predicted_measurement(g)?;
                        if gate(&zf, &sf, z.z_first().unwrap(), threshold)? {
                            true
                        } else {
                            let back = meas.observation_matrix(2, 3)?;
                            let (zb, sb) = back.predicted_measurement(g)?;
                            gate(&zb, &sb, z.z_last().unwrap(), threshold)?
                        }
                    }
                    _ => {
                        let obs = meas.observation_matrix(mu, 3)?;
                        let (z_pred, s) = obs.predicted_measurement(g)?;
                        let point = match kind {
                            MeasurementKind::FirstOnly => z.z_first(),
                            _ => z.z_last(),
                        };
                        gate(&z_pred, &s, point.unwrap(), threshold)?
                    }
                };
                if !gated {
                    continue;
                }
                let obs = meas.observation_matrix(mu, 3)?;
                let (post, log_n) = kalman_update_log(g, &obs, &z.stacked())?;
                let log_v = comp.weight.ln() + meas.detect_prob().ln() + coeff.ln() + log_n;
                if best.as_ref().is_none_or(|(b, _, _)| log_v > *b) {
                    best = Some((log_v, false, post));
                }
                log_contributions.push(log_v);
            }
            _ => continue,
        }
    }

    let Some((_, born, posterior)) = best else {
        return Err(Error::NoGatedComponent);
    };
    let log_sum_v = log_sum_exp(&log_contributions);
    let log_w2 = log_add_exp(cfg.clutter.intensity(z).ln(), log_sum_v);
    let exist_prob = (log_sum_v - log_w2).exp().min(1.0);
    let density = if born {
        BernoulliDensity::BornAtEnd(posterior)
    } else {
        BernoulliDensity::Window(WindowDensity {
            beta_die: 0.0,
            died: None,
            alive: posterior,
        })
    };
    Ok((
        LocalHypothesis::nonexistent(0.0),
        LocalHypothesis {
            log_weight: log_w2,
            exist_prob,
            density: Some(density),
        },
    ))
}

struct UpdatedTarget {
    hyps: Vec<LocalHypothesis>,
    /// Missed-hypothesis index per predicted hypothesis.
    miss_idx: Vec<usize>,
    /// Detection-hypothesis index per (predicted hypothesis, measurement).
    det_idx: Vec<Vec<Option<usize>>>,
}

/// Update a predicted trajectory-form PMBM with one window's measurement set.
/// Produces `n + m` potential targets, forms global hypotheses via ranked
/// assignment over each predicted global, and applies normalization/pruning.
pub fn update(
    predicted: &PmbmState,
    measurements: &[TrajectoryMeasurement],
    cfg: &FilterConfig,
) -> Result<PmbmState> {
    let meas = &cfg.measurement;
    let th = &cfg.thresholds;
    let n = predicted.n_targets();

    let poisson = update_poisson(&predicted.poisson, meas);

    // New-target candidate pair per measurement; measurements the model cannot
    // explain at all (outside clutter support, nothing gated) are dropped.
    let mut pairs: Vec<(LocalHypothesis, LocalHypothesis)> =
        Vec::with_capacity(measurements.len());
    for z in measurements {
        match create_new_bernoulli(&predicted.poisson, z, cfg) {
            Ok(pair) => pairs.push(pair),
            Err(Error::NoGatedComponent) => {
                let log_lambda = cfg.clutter.intensity(z).ln();
                pairs.push((
                    LocalHypothesis::nonexistent(0.0),
                    LocalHypothesis {
                        log_weight: log_lambda,
                        exist_prob: 0.0,
                        density: None,
                    },
                ));
            }
            Err(e) => return Err(e),
        }
    }

    // Per-target tables of missed and gated detection hypotheses.
    let mut tables: Vec<UpdatedTarget> = Vec::with_capacity(n);
    for i in 0..n {
        let pred_hyps = &predicted.targets[i];
        let mut table = UpdatedTarget {
            hyps: Vec::with_capacity(pred_hyps.len()),
            miss_idx: Vec::with_capacity(pred_hyps.len()),
            det_idx: vec![vec![None; measurements.len()]; pred_hyps.len()],
        };
        for (a, h) in pred_hyps.iter().enumerate() {
            table.miss_idx.push(table.hyps.len());
            table.hyps.push(update_bernoulli_missed(h, meas));
            for (j, z) in measurements.iter().enumerate() {
                if gate_hypothesis(h, z, meas, th.gate)? {
                    let det = update_bernoulli_detection(h, z, meas)?;
                    if det.log_weight.is_finite() {
                        table.det_idx[a][j] = Some(table.hyps.len());
                        table.hyps.push(det);
                    }
                }
            }
        }
        tables.push(table);
    }

    // A measurement nothing can explain would make every global infeasible.
    let explainable: Vec<bool> = (0..measurements.len())
        .map(|j| {
            pairs[j].1.log_weight.is_finite()
                || tables
                    .iter()
                    .any(|t| t.det_idx.iter().any(|row| row[j].is_some()))
        })
        .collect();
    let kept: Vec<usize> = (0..measurements.len())
        .filter(|&j| explainable[j])
        .collect();
    let m = kept.len();

    // Global hypothesis formation: one ranked-assignment problem per
    // predicted global hypothesis, with the hypothesis budget allocated
    // proportionally to its weight. Zero missed-detection weights (certain
    // detection) are floored in the log domain so the relative-cost trick
    // stays finite; the floor cancels exactly whenever the detection is made.
    const LOG_WEIGHT_FLOOR: f64 = -1e3;
    let mut raw_globals: Vec<(f64, Vec<usize>)> = Vec::new();
    for g in &predicted.globals {
        let mut base = g.weight.ln();
        for (i, table) in tables.iter().enumerate() {
            base += table.hyps[table.miss_idx[g.assignment[i]]]
                .log_weight
                .max(LOG_WEIGHT_FLOOR);
        }

        let mut cost = CostMatrix::from_element(m, n + m, f64::INFINITY);
        for (row, &j) in kept.iter().enumerate() {
            for (i, table) in tables.iter().enumerate() {
                let a = g.assignment[i];
                if let Some(det) = table.det_idx[a][j] {
                    let miss_lw = table.hyps[table.miss_idx[a]]
                        .log_weight
                        .max(LOG_WEIGHT_FLOOR);
                    let det_lw = table.hyps[det].log_weight;
                    cost[(row, i)] = miss_lw - det_lw;
                }
            }
            if pairs[j].1.log_weight.is_finite() {
                cost[(row, n + row)] = -pairs[j].1.log_weight;
            }
        }

        let budget = (g.weight * th.max_globals as f64).ceil().max(1.0) as usize;
        let solutions = if m == 0 {
            vec![(vec![], 0.0)]
        } else {
            match murty_kbest(&cost, budget) {
                Ok(s) => s,
                // This predicted global assigns zero likelihood to the data.
                Err(Error::InfeasibleAssignment) => continue,
                Err(e) => return Err(e),
            }
        };
        for (assignment, total_cost) in solutions {
            let mut chosen = vec![0usize; n + m];
            for (i, table) in tables.iter().enumerate() {
                chosen[i] = table.miss_idx[g.assignment[i]];
            }
            // New-target columns default to the nonexistent hypothesis.
            for (row, &col) in assignment.iter().enumerate() {
                if col < n {
                    let a = g.assignment[col];
                    chosen[col] = tables[col].det_idx[a][kept[row]]
                        .expect("finite cost implies a detection hypothesis");
                } else {
                    debug_assert_eq!(col, n + row);
                    chosen[n + row] = 1;
                }
            }
            raw_globals.push((base - total_cost, chosen));
        }
    }
    if raw_globals.is_empty() {
        return Err(Error::EmptyPosterior);
    }

    let log_weights: Vec<f64> = raw_globals.iter().map(|(lw, _)| *lw).collect();
    let log_norm = log_sum_exp(&log_weights);
    let globals: Vec<GlobalHypothesis> = raw_globals
        .into_iter()
        .map(|(lw, assignment)| GlobalHypothesis {
            weight: (lw - log_norm).exp(),
            assignment,
        })
        .collect();

    let mut targets: Vec<Vec<LocalHypothesis>> = tables.into_iter().map(|t| t.hyps).collect();
    for &j in &kept {
        let (miss, det) = pairs[j].clone();
        targets.push(vec![miss, det]);
    }

    let state = PmbmState {
        poisson,
        targets,
        globals,
    };
    normalize_and_prune(
        state,
        th.poisson_prune,
        th.global_prune,
        th.bernoulli_prune,
        th.max_globals,
    )
}

/// Marginalise a trajectory-form PMBM to target states at the window end.
/// Existence probabilities scale by the survival branch probability; densities
/// keep the window-end block.
pub fn marginalise(state: &PmbmState) -> PmbmState {
    let poisson = state
        .poisson
        .iter()
        .map(|c| PoissonComponent {
            weight: c.weight,
            density: PoissonDensity::Target(c.density.end_state()),
        })
        .collect();
    let targets = state
        .targets
        .iter()
        .map(|hyps| {
            hyps.iter()
                .map(|h| match &h.density {
                    None => LocalHypothesis {
                        log_weight: h.log_weight,
                        exist_prob: 0.0,
                        density: None,
                    },
                    Some(d) => {
                        let r_m = h.exist_prob * d.survival();
                        LocalHypothesis {
                            log_weight: h.log_weight,
                            exist_prob: r_m,
                            density: if r_m > 0.0 {
                                Some(BernoulliDensity::Target(d.end_state()))
                            } else {
                                None
                            },
                        }
                    }
                })
                .collect()
        })
        .collect();
    PmbmState {
        poisson,
        targets,
        globals: state.globals.clone(),
    }
}

/// One full window step: predict, update, optional PMB reduction,
/// marginalise, prune, estimate.
pub fn step(
    posterior: &PmbmState,
    measurements: &[TrajectoryMeasurement],
    cfg: &FilterConfig,
) -> Result<StepOutput> {
    let start = Instant::now();
    let predicted = predict(posterior, cfg)?;
    let updated = update(&predicted, measurements, cfg)?;
    let (n_local, n_global) = updated.hypothesis_counts();
    let reduced = match cfg.variant {
        FilterVariant::Pmbm => updated,
        FilterVariant::Pmb => kld_merge_to_pmb(&updated),
    };
    let th = &cfg.thresholds;
    let pruned = normalize_and_prune(
        marginalise(&reduced),
        th.poisson_prune,
        th.global_prune,
        th.bernoulli_prune,
        th.max_globals,
    )?;
    let posterior = compact_dead_columns(pruned);
    let estimates = estimate(&posterior, th.estimate_threshold);
    Ok(StepOutput {
        posterior,
        estimates,
        diagnostics: StepDiagnostics {
            n_local_hypotheses: n_local,
            n_global_hypotheses: n_global,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if !hi.is_finite() {
        return hi;
    }
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
