//! Built-in oracle suites for the command-line `validate` operation.
//!
//! Each suite checks a core algorithm against an independent reference:
//! ranked assignment against exhaustive enumeration, the GOSPA assignment
//! against brute-force partial matching, the trajectory-measurement filter
//! against a stacked-measurement Kalman recursion, and the PMBM recursion's
//! normalization invariants on randomized scenarios.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::assoc::{murty_kbest, CostMatrix};
use crate::error::Result;
use crate::experiment::{ExperimentSpec, SweepCell};
use crate::filter::{marginalise, predict, step, update, FilterVariant};
use crate::gaussian::Gaussian;
use crate::gospa::gospa;
use crate::models::position_observation_matrix;
use crate::pmbm::{kld_merge_to_pmb, BernoulliDensity, PmbmState};
use crate::sim::{generate_ground_truth, generate_measurements, n_windows, ScenarioKind};
use crate::trajectory::TrajectoryMeasurement;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub runtime_ms: f64,
}

/// Run all validation suites. `inject_fault` corrupts one expected value so
/// the failure path can be exercised end to end.
pub fn run_suites(inject_fault: bool) -> Vec<SuiteResult> {
    type Suite = fn(bool) -> (bool, String);
    let suites: Vec<(&'static str, Suite)> = vec![
        ("murty-bruteforce", murty_suite),
        ("gospa-bruteforce", gospa_suite),
        ("kalman-equivalence", kalman_suite),
        ("normalization-properties", normalization_suite),
    ];
    suites
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let (passed, detail) = run(inject_fault);
            SuiteResult {
                name,
                passed,
                detail,
                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            }
        })
        .collect()
}

fn murty_suite(inject_fault: bool) -> (bool, String) {
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let mut checked = 0usize;
    for trial in 0..50 {
        let n = 2 + trial % 3;
        let cost = CostMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..10.0));
        let brute = enumerate_assignments(&cost);
        let k = brute.len();
        let ranked = match murty_kbest(&cost, k) {
            Ok(r) => r,
            Err(e) => return (false, format!("murty failed: {e}")),
        };
        if ranked.len() != brute.len() {
            return (false, format!("solution count {} vs {}", ranked.len(), k));
        }
        let tol = if inject_fault { -1.0 } else { 1e-12 };
        for (got, want) in ranked.iter().zip(brute.iter()) {
            if (got.1 - want.1).abs() > tol {
                return (
                    false,
                    format!("rank mismatch: got cost {}, want {}", got.1, want.1),
                );
            }
        }
        checked += k;
    }
    (true, format!("{checked} ranked assignments matched"))
}

fn enumerate_assignments(cost: &CostMatrix) -> Vec<(Vec<usize>, f64)> {
    fn recurse(
        cost: &CostMatrix,
        row: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        if row == cost.nrows() {
            let total: f64 = current.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            if total.is_finite() {
                out.push((current.clone(), total));
            }
            return;
        }
        for j in 0..cost.ncols() {
            if !used[j] && cost[(row, j)].is_finite() {
                used[j] = true;
                current.push(j);
                recurse(cost, row + 1, used, current, out);
                current.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    recurse(
        cost,
        0,
        &mut vec![false; cost.ncols()],
        &mut Vec::new(),
        &mut out,
    );
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    out
}

fn gospa_suite(inject_fault: bool) -> (bool, String) {
    let mut rng = ChaCha12Rng::seed_from_u64(102);
    let point =
        |rng: &mut ChaCha12Rng| DVector::from_vec(vec![rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)]);
    for trial in 0..50 {
        let truth: Vec<DVector<f64>> = (0..rng.random_range(0..6usize))
            .map(|_| point(&mut rng))
            .collect();
        let est: Vec<DVector<f64>> = (0..rng.random_range(0..6usize))
            .map(|_| point(&mut rng))
            .collect();
        let got = gospa(&truth, &est, 10.0, 2.0).total;
        let want = brute_force_gospa(&truth, &est, 10.0, 2.0);
        let tol = if inject_fault { -1.0 } else { 1e-12 };
        if (got - want).abs() > tol {
            return (
                false,
                format!("trial {trial}: gospa {got} vs brute force {want}"),
            );
        }
    }
    (true, "50 set pairs matched brute force".into())
}

fn brute_force_gospa(truth: &[DVector<f64>], est: &[DVector<f64>], c: f64, p: f64) -> f64 {
    fn recurse(
        truth: &[DVector<f64>],
        est: &[DVector<f64>],
        c: f64,
        p: f64,
        i: usize,
        used: &mut Vec<bool>,
    ) -> f64 {
        if i == truth.len() {
            let n_false = used.iter().filter(|u| !**u).count();
            return 0.5 * c.powf(p) * n_false as f64;
        }
        let mut best = 0.5 * c.powf(p) + recurse(truth, est, c, p, i + 1, used);
        for j in 0..est.len() {
            if used[j] {
                continue;
            }
            let d = (&truth[i] - &est[j]).norm();
            if d < c {
                used[j] = true;
                best = best.min(d.powf(p) + recurse(truth, est, c, p, i + 1, used));
                used[j] = false;
            }
        }
        best
    }
    recurse(truth, est, c, p, 0, &mut vec![false; est.len()]).powf(1.0 / p)
}

fn kalman_suite(inject_fault: bool) -> (bool, String) {
    // Single target, certain detection, full measurements only, no clutter,
    // no birth: the filter posterior must equal a stacked-measurement Kalman
    // recursion followed by block marginalisation.
    let mut spec = ExperimentSpec::defaults(ScenarioKind::One);
    spec.detect_prob = 1.0;
    let cell = SweepCell {
        n_w: 5,
        full_detect_prob: 1.0,
        clutter_rate: 0.0,
    };
    let mut cfg = match spec.trajectory_config(&cell, FilterVariant::Pmbm) {
        Ok(c) => c,
        Err(e) => return (false, format!("config: {e}")),
    };
    cfg.birth = crate::models::BirthModel::empty();

    let prior = Gaussian::new(
        DVector::from_vec(vec![40.0, 1.0, 40.0, 0.5]),
        DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 4.0, 1.0])),
    )
    .expect("valid prior");
    let mut state = PmbmState::with_initial_intensity(vec![(1.0, prior.clone())]);

    let f = cfg.motion.transition().clone();
    let q = cfg.motion.process_noise().clone();
    let h = position_observation_matrix();
    let h33 = DMatrix::identity(2, 2).kronecker(&h);
    let r2 = DMatrix::identity(2, 2).kronecker(cfg.measurement.point_noise());

    let mut oracle_mean = prior.mean().clone();
    let mut oracle_cov = prior.cov().clone();
    let mut rng = ChaCha12Rng::seed_from_u64(103);
    let mut truth = prior.mean().clone();

    let tol = if inject_fault { 0.0 } else { 1e-9 };
    for window in 0..20 {
        // Simulate the target over the window and draw a full measurement.
        let next = &f * &truth;
        let z1 = &h * &truth + noise2(&mut rng, cfg.measurement.point_noise());
        let z2 = &h * &next + noise2(&mut rng, cfg.measurement.point_noise());
        let z = TrajectoryMeasurement::full(z1.clone(), z2.clone()).unwrap();
        truth = next;

        let out = match step(&state, &[z], &cfg) {
            Ok(o) => o,
            Err(e) => return (false, format!("window {window}: {e}")),
        };
        state = out.posterior;

        // Independent stacked Kalman recursion with block marginalisation.
        let mut mean_j = DVector::zeros(8);
        mean_j.rows_mut(0, 4).copy_from(&oracle_mean);
        mean_j.rows_mut(4, 4).copy_from(&(&f * &oracle_mean));
        let mut cov_j = DMatrix::zeros(8, 8);
        cov_j.view_mut((0, 0), (4, 4)).copy_from(&oracle_cov);
        cov_j
            .view_mut((0, 4), (4, 4))
            .copy_from(&(&oracle_cov * f.transpose()));
        cov_j.view_mut((4, 0), (4, 4)).copy_from(&(&f * &oracle_cov));
        cov_j
            .view_mut((4, 4), (4, 4))
            .copy_from(&(&f * &oracle_cov * f.transpose() + &q));
        let mut z_stack = DVector::zeros(4);
        z_stack.rows_mut(0, 2).copy_from(&z1);
        z_stack.rows_mut(2, 2).copy_from(&z2);
        let s = &h33 * &cov_j * h33.transpose() + &r2;
        let gain = &cov_j * h33.transpose() * s.try_inverse().expect("invertible innovation");
        let mean_u = &mean_j + &gain * (&z_stack - &h33 * &mean_j);
        let cov_u = &cov_j - &gain * &h33 * &cov_j;
        oracle_mean = mean_u.rows(4, 4).into_owned();
        oracle_cov = cov_u.view((4, 4), (4, 4)).into_owned();

        if state.n_targets() != 1 {
            return (false, format!("window {window}: {} targets", state.n_targets()));
        }
        let hyp = &state.targets[0][state.max_weight_global().assignment[0]];
        let Some(BernoulliDensity::Target(g)) = &hyp.density else {
            return (false, format!("window {window}: no target density"));
        };
        let mean_err = (g.mean() - &oracle_mean).amax();
        let cov_err = (g.cov() - &oracle_cov).amax();
        if mean_err > tol || cov_err > tol {
            return (
                false,
                format!("window {window}: mean err {mean_err:.2e}, cov err {cov_err:.2e}"),
            );
        }
    }
    (true, "20 windows within 1e-9 of the stacked Kalman oracle".into())
}

fn noise2(rng: &mut ChaCha12Rng, r: &DMatrix<f64>) -> DVector<f64> {
    Gaussian::new_unchecked(DVector::zeros(2), r.clone()).sample(rng)
}

fn normalization_suite(inject_fault: bool) -> (bool, String) {
    let mut spec = ExperimentSpec::defaults(ScenarioKind::One);
    spec.horizon_override = Some(41);
    let cell = SweepCell {
        n_w: 5,
        full_detect_prob: 0.7,
        clutter_rate: 3.0,
    };
    let cfg = match spec.trajectory_config(&cell, FilterVariant::Pmbm) {
        Ok(c) => c,
        Err(e) => return (false, format!("config: {e}")),
    };
    let mut truth_cfg = spec.scenario.truth_config();
    truth_cfg.fixed_targets = false;
    truth_cfg.horizon = 41;
    truth_cfg.birth_rate_first = 2.0;
    truth_cfg.birth_rate = 0.02;

    let tol: f64 = if inject_fault { -1.0 } else { 1e-12 };
    for seed in 0..3u64 {
        let mut rng = ChaCha12Rng::seed_from_u64(200 + seed);
        let truth = generate_ground_truth(&truth_cfg, &mut rng);
        let mut state = spec.initial_state();
        for w in 1..=n_windows(truth_cfg.horizon, cell.n_w) {
            let zs = generate_measurements(
                &truth,
                w,
                cell.n_w,
                &cfg.measurement,
                &cfg.clutter,
                &mut rng,
            );
            let predicted = match predict(&state, &cfg) {
                Ok(p) => p,
                Err(e) => return (false, format!("predict: {e}")),
            };
            let updated = match update(&predicted, &zs, &cfg) {
                Ok(u) => u,
                Err(e) => return (false, format!("update: {e}")),
            };

            let weight_sum: f64 = updated.globals.iter().map(|g| g.weight).sum();
            if (weight_sum - 1.0).abs() > tol.max(1e-12) {
                return (false, format!("global weights sum to {weight_sum}"));
            }
            if updated
                .targets
                .iter()
                .flatten()
                .any(|h| !(0.0..=1.0).contains(&h.exist_prob))
            {
                return (false, "existence probability out of range".into());
            }

            // Marginalisation scales existence by the survival branch.
            let marginalised = marginalise(&updated);
            for (hyps_t, hyps_m) in updated.targets.iter().zip(marginalised.targets.iter()) {
                for (ht, hm) in hyps_t.iter().zip(hyps_m.iter()) {
                    let survival = ht.density.as_ref().map_or(0.0, |d| d.survival());
                    if (hm.exist_prob - ht.exist_prob * survival).abs() > tol.max(0.0) {
                        return (false, "marginal existence mismatch".into());
                    }
                }
            }

            // PMB reduction and marginalisation commute.
            let route_a = marginalise(&kld_merge_to_pmb(&updated));
            let route_b = kld_merge_to_pmb(&marginalised);
            if let Some(msg) = pmb_states_differ(&route_a, &route_b, tol.max(1e-12)) {
                return (false, format!("order swap: {msg}"));
            }

            state = match step(&state, &zs, &cfg) {
                Ok(o) => o.posterior,
                Err(e) => return (false, format!("step: {e}")),
            };
        }
    }
    (true, "3 randomized scenarios held all invariants".into())
}

fn pmb_states_differ(a: &PmbmState, b: &PmbmState, tol: f64) -> Option<String> {
    if a.n_targets() != b.n_targets() {
        return Some("target count".into());
    }
    for (i, (ha, hb)) in a.targets.iter().zip(b.targets.iter()).enumerate() {
        let (ha, hb) = (&ha[0], &hb[0]);
        if (ha.exist_prob - hb.exist_prob).abs() > tol {
            return Some(format!(
                "target {i}: r {} vs {}",
                ha.exist_prob, hb.exist_prob
            ));
        }
        match (&ha.density, &hb.density) {
            (Some(da), Some(db)) => {
                let (ga, gb) = (da.end_state(), db.end_state());
                if (ga.mean() - gb.mean()).amax() > tol {
                    return Some(format!("target {i}: mean differs"));
                }
                if (ga.cov() - gb.cov()).amax() > tol {
                    return Some(format!("target {i}: covariance differs"));
                }
            }
            (None, None) => {}
            _ => return Some(format!("target {i}: density presence differs")),
        }
    }
    None
}

/// True when every suite passed.
pub fn all_passed(results: &[SuiteResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// Plain-text pass/fail table.
pub fn format_table(results: &[SuiteResult]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for r in results {
        let _ = writeln!(
            out,
            "{:<28} {:<4} {:>8.1} ms  {}",
            r.name,
            if r.passed { "ok" } else { "FAIL" },
            r.runtime_ms,
            r.detail
        );
    }
    out
}

/// Convenience used by tests and the CLI.
pub fn run_all() -> Result<Vec<SuiteResult>> {
    Ok(run_suites(false))
}
