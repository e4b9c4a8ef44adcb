//! PMBM state representation and density-level operations.
//!
//! A PMBM posterior is a Poisson intensity over undetected targets plus a
//! multi-Bernoulli mixture over potential detected targets. Each potential
//! target owns a list of local (single-target) hypotheses; a global hypothesis
//! picks one local hypothesis per target and carries a normalized weight.
//!
//! States come in two flavours that share this representation: the *target
//! form* (each density is a Gaussian over one target state at a window
//! boundary) and the *trajectory form* (each density lives on two-step
//! trajectories: a survival-weighted mixture over the died-at-start and
//! alive-at-both-ends branches, or a single-state trajectory born at the
//! window end).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gaussian::{marginal_block, moment_match, Gaussian};

/// Density of one Poisson intensity component.
#[derive(Debug, Clone, PartialEq)]
pub enum PoissonDensity {
    /// Target state at a window boundary (marginalised form).
    Target(Gaussian),
    /// Length-one trajectory starting at the window end.
    BornAtEnd(Gaussian),
    /// Two-step trajectory alive at both boundaries (stacked state).
    Alive(Gaussian),
}

impl PoissonDensity {
    pub fn gaussian(&self) -> &Gaussian {
        match self {
            PoissonDensity::Target(g) | PoissonDensity::BornAtEnd(g) | PoissonDensity::Alive(g) => g,
        }
    }

    /// Marginal over the window-end target state.
    pub fn end_state(&self) -> Gaussian {
        match self {
            PoissonDensity::Target(g) | PoissonDensity::BornAtEnd(g) => g.clone(),
            PoissonDensity::Alive(g) => {
                let half = g.dim() / 2;
                marginal_block(g, half..g.dim()).expect("stacked state has even dimension")
            }
        }
    }
}

/// One weighted component of the Poisson (undetected-target) intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonComponent {
    pub weight: f64,
    pub density: PoissonDensity,
}

/// Two-branch trajectory density of a Bernoulli component: the trajectory
/// terminates at the window start with probability `beta_die` (branch Gaussian
/// over the start state) or survives to the window end with probability
/// `1 - beta_die` (branch Gaussian over the stacked two-step state).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDensity {
    pub beta_die: f64,
    /// Present iff `beta_die > 0`.
    pub died: Option<Gaussian>,
    pub alive: Gaussian,
}

impl WindowDensity {
    pub fn beta_live(&self) -> f64 {
        1.0 - self.beta_die
    }
}

/// Single-target density of a Bernoulli component, in either state flavour.
#[derive(Debug, Clone, PartialEq)]
pub enum BernoulliDensity {
    /// Target state at a window boundary (marginalised form).
    Target(Gaussian),
    /// Two-step trajectory mixture.
    Window(WindowDensity),
    /// Length-one trajectory born at the window end.
    BornAtEnd(Gaussian),
}

impl BernoulliDensity {
    /// Probability that the trajectory still exists at the window end.
    pub fn survival(&self) -> f64 {
        match self {
            BernoulliDensity::Target(_) | BernoulliDensity::BornAtEnd(_) => 1.0,
            BernoulliDensity::Window(w) => w.beta_live(),
        }
    }

    /// Marginal Gaussian over the window-end target state.
    pub fn end_state(&self) -> Gaussian {
        match self {
            BernoulliDensity::Target(g) | BernoulliDensity::BornAtEnd(g) => g.clone(),
            BernoulliDensity::Window(w) => {
                let half = w.alive.dim() / 2;
                marginal_block(&w.alive, half..w.alive.dim())
                    .expect("stacked state has even dimension")
            }
        }
    }
}

/// One local (single-target) hypothesis: an unnormalized likelihood factor in
/// the log domain, an existence probability, and the conditional density.
/// Nonexistent hypotheses carry `exist_prob == 0` and no density.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalHypothesis {
    pub log_weight: f64,
    pub exist_prob: f64,
    pub density: Option<BernoulliDensity>,
}

impl LocalHypothesis {
    /// The hypothesis that the potential target does not exist.
    pub fn nonexistent(log_weight: f64) -> Self {
        Self {
            log_weight,
            exist_prob: 0.0,
            density: None,
        }
    }
}

/// One global data-association hypothesis: a normalized weight and one local
/// hypothesis index per potential target.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalHypothesis {
    pub weight: f64,
    pub assignment: Vec<usize>,
}

/// PMBM density: Poisson intensity plus per-target local-hypothesis trees and
/// weighted global hypotheses. The empty state keeps a single weight-one
/// global hypothesis over zero targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PmbmState {
    pub poisson: Vec<PoissonComponent>,
    pub targets: Vec<Vec<LocalHypothesis>>,
    pub globals: Vec<GlobalHypothesis>,
}

impl PmbmState {
    pub fn empty() -> Self {
        Self {
            poisson: vec![],
            targets: vec![],
            globals: vec![GlobalHypothesis {
                weight: 1.0,
                assignment: vec![],
            }],
        }
    }

    /// Empty MBM over an initial undetected-target intensity in target form.
    pub fn with_initial_intensity(components: Vec<(f64, Gaussian)>) -> Self {
        let mut state = Self::empty();
        state.poisson = components
            .into_iter()
            .map(|(weight, g)| PoissonComponent {
                weight,
                density: PoissonDensity::Target(g),
            })
            .collect();
        state
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    /// Highest-weight global hypothesis; first one wins ties for determinism.
    pub fn max_weight_global(&self) -> &GlobalHypothesis {
        self.globals
            .iter()
            .reduce(|best, g| if g.weight > best.weight { g } else { best })
            .expect("state always carries at least one global hypothesis")
    }

    /// `(total number of single-target hypotheses, number of global hypotheses)`.
    pub fn hypothesis_counts(&self) -> (usize, usize) {
        (
            self.targets.iter().map(Vec::len).sum(),
            self.globals.len(),
        )
    }

    /// Structured text dump of the hypothesis tree for diagnostics.
    pub fn hypothesis_report(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "pmbm: {} poisson components, {} potential targets, {} global hypotheses",
            self.poisson.len(),
            self.targets.len(),
            self.globals.len()
        );
        for (i, hyps) in self.targets.iter().enumerate() {
            let max_r = hyps.iter().map(|h| h.exist_prob).fold(0.0f64, f64::max);
            let _ = writeln!(out, "  target {i}: {} hypotheses, max r {max_r:.4}", hyps.len());
        }
        let weights: Vec<String> = self
            .globals
            .iter()
            .map(|g| format!("{:.6}", g.weight))
            .collect();
        let _ = writeln!(out, "  global weights: [{}]", weights.join(", "));
        out
    }

    /// Consistency checks used by tests: normalized global weights, valid
    /// hypothesis references, probabilities in range.
    pub fn check_invariants(&self) -> Result<()> {
        let total: f64 = self.globals.iter().map(|g| g.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "global weights sum to {total}, expected 1"
            )));
        }
        for g in &self.globals {
            if g.assignment.len() != self.targets.len() {
                return Err(Error::InvalidConfig(
                    "global assignment length mismatch".into(),
                ));
            }
            for (i, &a) in g.assignment.iter().enumerate() {
                if a >= self.targets[i].len() {
                    return Err(Error::InvalidConfig(format!(
                        "global references hypothesis {a} of target {i} which has {}",
                        self.targets[i].len()
                    )));
                }
            }
        }
        for hyps in &self.targets {
            for h in hyps {
                if !(0.0..=1.0 + 1e-12).contains(&h.exist_prob) {
                    return Err(Error::InvalidConfig(format!(
                        "existence probability {} outside [0,1]",
                        h.exist_prob
                    )));
                }
                if let Some(BernoulliDensity::Window(w)) = &h.density {
                    if !(0.0..=1.0 + 1e-12).contains(&w.beta_die) {
                        return Err(Error::InvalidConfig("beta outside [0,1]".into()));
                    }
                    if w.beta_die > 0.0 && w.died.is_none() {
                        return Err(Error::InvalidConfig(
                            "positive die probability without died branch".into(),
                        ));
                    }
                }
                if h.density.is_none() && h.exist_prob != 0.0 {
                    return Err(Error::InvalidConfig(
                        "hypothesis without density must have r = 0".into(),
                    ));
                }
                if let Some(d) = &h.density {
                    match d {
                        BernoulliDensity::Target(g) | BernoulliDensity::BornAtEnd(g) => {
                            check_cov(g)?
                        }
                        BernoulliDensity::Window(w) => {
                            if let Some(g) = &w.died {
                                check_cov(g)?;
                            }
                            check_cov(&w.alive)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_cov(g: &Gaussian) -> Result<()> {
    let asym = (g.cov() - g.cov().transpose()).amax();
    if asym > 1e-12 * (1.0 + g.cov().amax()) {
        return Err(Error::InvalidConfig("covariance not symmetric".into()));
    }
    let min_eig = g
        .cov()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 * g.cov().trace().abs().max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "covariance not PSD (min eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

/// Renormalize global weights, prune low-weight Poisson components and global
/// hypotheses, cap the number of globals, replace low-existence Bernoullis by
/// the nonexistent hypothesis, and drop local hypotheses no surviving global
/// references. Target columns are kept (even if fully dead) so hypothesis
/// indices stay meaningful within a filter step; see [`compact_dead_columns`].
pub fn normalize_and_prune(
    mut state: PmbmState,
    poisson_min: f64,
    global_min: f64,
    bernoulli_min: f64,
    max_globals: usize,
) -> Result<PmbmState> {
    // Normalize.
    let total: f64 = state.globals.iter().map(|g| g.weight).sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::EmptyPosterior);
    }
    for g in &mut state.globals {
        g.weight /= total;
    }

    // Poisson pruning.
    state.poisson.retain(|c| c.weight >= poisson_min);

    // Bernoulli pruning: replace by the nonexistent hypothesis, keeping the
    // hypothesis weight so global weights are unaffected.
    for hyps in &mut state.targets {
        for h in hyps.iter_mut() {
            if h.exist_prob > 0.0 && h.exist_prob < bernoulli_min {
                h.exist_prob = 0.0;
                h.density = None;
            }
        }
    }

    // Global pruning and cap.
    state.globals.retain(|g| g.weight >= global_min);
    if state.globals.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    if state.globals.len() > max_globals {
        let mut order: Vec<usize> = (0..state.globals.len()).collect();
        order.sort_by(|&a, &b| {
            state.globals[b]
                .weight
                .total_cmp(&state.globals[a].weight)
                .then(a.cmp(&b))
        });
        order.truncate(max_globals);
        order.sort_unstable();
        state.globals = order.into_iter().map(|i| state.globals[i].clone()).collect();
    }
    let total: f64 = state.globals.iter().map(|g| g.weight).sum();
    for g in &mut state.globals {
        g.weight /= total;
    }

    // Drop unreferenced local hypotheses and remap indices.
    for i in 0..state.targets.len() {
        let mut used = vec![false; state.targets[i].len()];
        for g in &state.globals {
            used[g.assignment[i]] = true;
        }
        let mut remap = vec![usize::MAX; state.targets[i].len()];
        let mut kept = Vec::with_capacity(used.iter().filter(|u| **u).count());
        for (old, hyp) in state.targets[i].iter().enumerate() {
            if used[old] {
                remap[old] = kept.len();
                kept.push(hyp.clone());
            }
        }
        state.targets[i] = kept;
        for g in &mut state.globals {
            g.assignment[i] = remap[g.assignment[i]];
        }
    }
    Ok(state)
}

/// Remove target columns whose every surviving hypothesis is nonexistent.
/// Such columns contribute nothing to any global hypothesis or estimate.
pub fn compact_dead_columns(mut state: PmbmState) -> PmbmState {
    let alive: Vec<bool> = state
        .targets
        .iter()
        .map(|hyps| hyps.iter().any(|h| h.exist_prob > 0.0))
        .collect();
    if alive.iter().all(|a| *a) {
        return state;
    }
    let mut targets = Vec::new();
    for (i, hyps) in state.targets.drain(..).enumerate() {
        if alive[i] {
            targets.push(hyps);
        }
    }
    for g in &mut state.globals {
        g.assignment = g
            .assignment
            .iter()
            .zip(alive.iter())
            .filter(|(_, keep)| **keep)
            .map(|(a, _)| *a)
            .collect();
    }
    state.targets = targets;
    state
}

/// Report the window-end mean of every Bernoulli with existence probability
/// above the threshold, in the highest-weight global hypothesis.
pub fn estimate(state: &PmbmState, r_threshold: f64) -> Vec<DVector<f64>> {
    let best = state.max_weight_global();
    let mut out = Vec::new();
    for (i, &a) in best.assignment.iter().enumerate() {
        let hyp = &state.targets[i][a];
        if hyp.exist_prob > r_threshold {
            if let Some(density) = &hyp.density {
                out.push(density.end_state().mean().clone());
            }
        }
    }
    out
}

/// Reduce a PMBM to a PMB with a single global hypothesis by merging each
/// target's local hypotheses under their global-marginal weights. The merged
/// existence probability is the marginal-weighted mean of the hypothesis
/// existence probabilities; the merged density is the existence-weighted
/// mixture, moment-matched per survival branch so the representation stays
/// closed under the recursion.
pub fn kld_merge_to_pmb(state: &PmbmState) -> PmbmState {
    let n = state.n_targets();
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        // Marginal weight of each local hypothesis across global hypotheses.
        let mut marginal = vec![0.0; state.targets[i].len()];
        for g in &state.globals {
            marginal[g.assignment[i]] += g.weight;
        }
        let r_merged: f64 = marginal
            .iter()
            .zip(state.targets[i].iter())
            .map(|(w, h)| w * h.exist_prob)
            .sum();

        let contributors: Vec<(f64, &LocalHypothesis)> = marginal
            .iter()
            .zip(state.targets[i].iter())
            .filter(|(w, h)| **w * h.exist_prob > 0.0 && h.density.is_some())
            .map(|(w, h)| (*w * h.exist_prob, h))
            .collect();

        let density = if contributors.is_empty() {
            None
        } else {
            Some(merge_densities(&contributors))
        };
        targets.push(vec![LocalHypothesis {
            log_weight: 0.0,
            exist_prob: r_merged,
            density: if r_merged > 0.0 { density } else { None },
        }]);
    }
    PmbmState {
        poisson: state.poisson.clone(),
        targets,
        globals: vec![GlobalHypothesis {
            weight: 1.0,
            assignment: vec![0; n],
        }],
    }
}

fn merge_densities(contributors: &[(f64, &LocalHypothesis)]) -> BernoulliDensity {
    let all_window = contributors
        .iter()
        .all(|(_, h)| matches!(h.density, Some(BernoulliDensity::Window(_))));
    let all_target = contributors
        .iter()
        .all(|(_, h)| matches!(h.density, Some(BernoulliDensity::Target(_))));
    let all_born = contributors
        .iter()
        .all(|(_, h)| matches!(h.density, Some(BernoulliDensity::BornAtEnd(_))));

    if all_target || all_born {
        let parts: Vec<(f64, &Gaussian)> = contributors
            .iter()
            .map(|(w, h)| match h.density.as_ref().unwrap() {
                BernoulliDensity::Target(g) | BernoulliDensity::BornAtEnd(g) => (*w, g),
                BernoulliDensity::Window(_) => unreachable!(),
            })
            .collect();
        let merged = moment_match(&parts);
        if all_target {
            BernoulliDensity::Target(merged)
        } else {
            BernoulliDensity::BornAtEnd(merged)
        }
    } else if all_window {
        let windows: Vec<(f64, &WindowDensity)> = contributors
            .iter()
            .map(|(w, h)| match h.density.as_ref().unwrap() {
                BernoulliDensity::Window(wd) => (*w, wd),
                _ => unreachable!(),
            })
            .collect();
        let total: f64 = windows.iter().map(|(w, _)| w).sum();
        let beta_die: f64 = windows.iter().map(|(w, wd)| w * wd.beta_die).sum::<f64>() / total;

        let died_parts: Vec<(f64, &Gaussian)> = windows
            .iter()
            .filter(|(w, wd)| *w * wd.beta_die > 0.0)
            .map(|(w, wd)| (*w * wd.beta_die, wd.died.as_ref().unwrap()))
            .collect();
        let died = if beta_die > 0.0 && !died_parts.is_empty() {
            Some(moment_match(&died_parts))
        } else {
            None
        };

        let alive_parts: Vec<(f64, &Gaussian)> = windows
            .iter()
            .filter(|(w, wd)| *w * wd.beta_live() > 0.0)
            .map(|(w, wd)| (*w * wd.beta_live(), &wd.alive))
            .collect();
        let alive = if alive_parts.is_empty() {
            windows[0].1.alive.clone()
        } else {
            moment_match(&alive_parts)
        };
        BernoulliDensity::Window(WindowDensity {
            beta_die: if died.is_some() { beta_die } else { 0.0 },
            died,
            alive,
        })
    } else {
        // Mixed structural kinds cannot arise within one window; fall back to
        // the heaviest contributor.
        let best = contributors
            .iter()
            .reduce(|a, b| if b.0 > a.0 { b } else { a })
            .unwrap();
        best.1.density.clone().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn target_hyp(log_weight: f64, r: f64, mean: f64) -> LocalHypothesis {
        LocalHypothesis {
            log_weight,
            exist_prob: r,
            density: Some(BernoulliDensity::Target(
                Gaussian::new(
                    DVector::from_vec(vec![mean]),
                    DMatrix::from_vec(1, 1, vec![1.0]),
                )
                .unwrap(),
            )),
        }
    }

    fn two_global_state(w1: f64, w2: f64) -> PmbmState {
        PmbmState {
            poisson: vec![],
            targets: vec![vec![target_hyp(0.0, 0.9, 1.0), target_hyp(0.0, 0.8, 2.0)]],
            globals: vec![
                GlobalHypothesis {
                    weight: w1,
                    assignment: vec![0],
                },
                GlobalHypothesis {
                    weight: w2,
                    assignment: vec![1],
                },
            ],
        }
    }

    #[test]
    fn normalize_symmetric_weights() {
        let state = two_global_state(2.0, 2.0);
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200).unwrap();
        assert_eq!(out.globals.len(), 2);
        assert_relative_eq!(out.globals[0].weight, 0.5, epsilon = 1e-15);
        assert_relative_eq!(out.globals[1].weight, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tiny_global_pruned_after_normalization() {
        let state = two_global_state(1.0, 1e-6);
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200).unwrap();
        assert_eq!(out.globals.len(), 1);
        assert_relative_eq!(out.globals[0].weight, 1.0, epsilon = 1e-15);
        // The unreferenced second hypothesis is dropped.
        assert_eq!(out.targets[0].len(), 1);
    }

    #[test]
    fn cap_keeps_largest_global() {
        let state = two_global_state(0.6, 0.4);
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 1).unwrap();
        assert_eq!(out.globals.len(), 1);
        assert_relative_eq!(out.globals[0].weight, 1.0, epsilon = 1e-15);
        // It kept the 0.6 branch (hypothesis 0, mean 1.0).
        let est = estimate(&out, 0.1);
        assert_relative_eq!(est[0][0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn low_existence_bernoulli_becomes_nonexistent() {
        let mut state = two_global_state(1.0, 1.0);
        state.targets[0][1].exist_prob = 1e-7;
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200).unwrap();
        assert_eq!(out.targets[0][1].exist_prob, 0.0);
        assert!(out.targets[0][1].density.is_none());
    }

    #[test]
    fn poisson_prune_threshold() {
        let mut state = two_global_state(1.0, 1.0);
        let g = Gaussian::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        state.poisson = vec![
            PoissonComponent {
                weight: 1e-6,
                density: PoissonDensity::Target(g.clone()),
            },
            PoissonComponent {
                weight: 0.5,
                density: PoissonDensity::Target(g),
            },
        ];
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200).unwrap();
        assert_eq!(out.poisson.len(), 1);
        assert_eq!(out.poisson[0].weight, 0.5);
    }

    #[test]
    fn zero_total_weight_is_empty_posterior() {
        let state = two_global_state(0.0, 0.0);
        assert!(matches!(
            normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200),
            Err(Error::EmptyPosterior)
        ));
    }

    #[test]
    fn estimate_thresholds_on_existence() {
        let mut state = two_global_state(1.0, 0.0);
        state.targets[0][0].exist_prob = 0.05;
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200).unwrap();
        assert!(estimate(&out, 0.1).is_empty());

        let mut state = two_global_state(1.0, 0.0);
        state.targets[0][0].exist_prob = 0.95;
        let out = normalize_and_prune(state, 1e-5, 1e-4, 1e-5, 200).unwrap();
        let est = estimate(&out, 0.1);
        assert_eq!(est.len(), 1);
        assert_relative_eq!(est[0][0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn estimate_reads_max_weight_global() {
        // Global 0 (weight 0.7) points at hypothesis 0 (mean 1), global 1 at
        // hypothesis 1 (mean 2).
        let state = two_global_state(0.7, 0.3);
        let est = estimate(&state, 0.1);
        assert_eq!(est.len(), 1);
        assert_relative_eq!(est[0][0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn estimate_invariant_under_weight_scaling() {
        let state = two_global_state(0.7, 0.3);
        let scaled = two_global_state(7.0, 3.0);
        assert_eq!(estimate(&state, 0.1), estimate(&scaled, 0.1));
    }

    #[test]
    fn kld_merge_drops_zero_existence_branch() {
        // Hypotheses (w=0.6, r=1) and (w=0.4, r=0): merged r = 0.6, density of
        // the first hypothesis.
        let mut state = two_global_state(0.6, 0.4);
        state.targets[0][0].exist_prob = 1.0;
        state.targets[0][1].exist_prob = 0.0;
        let merged = kld_merge_to_pmb(&state);
        assert_eq!(merged.globals.len(), 1);
        assert_eq!(merged.targets[0].len(), 1);
        let h = &merged.targets[0][0];
        assert_relative_eq!(h.exist_prob, 0.6, epsilon = 1e-15);
        match h.density.as_ref().unwrap() {
            BernoulliDensity::Target(g) => assert_relative_eq!(g.mean()[0], 1.0, epsilon = 1e-15),
            other => panic!("unexpected density {other:?}"),
        }
    }

    #[test]
    fn kld_merge_single_hypothesis_is_identity() {
        let state = PmbmState {
            poisson: vec![],
            targets: vec![vec![target_hyp(0.0, 0.7, 3.0)]],
            globals: vec![GlobalHypothesis {
                weight: 1.0,
                assignment: vec![0],
            }],
        };
        let merged = kld_merge_to_pmb(&state);
        assert_eq!(merged.targets[0][0].exist_prob, 0.7);
        assert_eq!(
            merged.targets[0][0].density,
            state.targets[0][0].density
        );
    }

    #[test]
    fn kld_merge_symmetric_hypotheses() {
        let mut state = two_global_state(0.5, 0.5);
        state.targets[0][0] = target_hyp(0.0, 0.5, 2.0);
        state.targets[0][1] = target_hyp(0.0, 0.5, 2.0);
        let merged = kld_merge_to_pmb(&state);
        let h = &merged.targets[0][0];
        assert_relative_eq!(h.exist_prob, 0.5, epsilon = 1e-15);
        match h.density.as_ref().unwrap() {
            BernoulliDensity::Target(g) => {
                assert_relative_eq!(g.mean()[0], 2.0, epsilon = 1e-15);
                assert_relative_eq!(g.cov()[(0, 0)], 1.0, epsilon = 1e-15);
            }
            other => panic!("unexpected density {other:?}"),
        }
    }

    #[test]
    fn kld_merge_preserves_expected_cardinality() {
        let state = two_global_state(0.7, 0.3);
        let expected: f64 = state
            .globals
            .iter()
            .map(|g| g.weight * state.targets[0][g.assignment[0]].exist_prob)
            .sum();
        let merged = kld_merge_to_pmb(&state);
        let got: f64 = merged.targets.iter().map(|t| t[0].exist_prob).sum();
        assert_relative_eq!(got, expected, epsilon = 1e-12);
    }

    #[test]
    fn hypothesis_counts_examples() {
        assert_eq!(PmbmState::empty().hypothesis_counts(), (0, 1));

        let mut state = two_global_state(0.5, 0.5);
        state.targets = vec![
            vec![target_hyp(0.0, 0.5, 0.0); 3],
            vec![target_hyp(0.0, 0.5, 0.0); 3],
        ];
        state.globals = (0..4)
            .map(|i| GlobalHypothesis {
                weight: 0.25,
                assignment: vec![i % 3, (i + 1) % 3],
            })
            .collect();
        assert_eq!(state.hypothesis_counts(), (6, 4));
    }

    #[test]
    fn compact_removes_fully_dead_columns() {
        let mut state = PmbmState {
            poisson: vec![],
            targets: vec![
                vec![LocalHypothesis::nonexistent(0.0)],
                vec![target_hyp(0.0, 0.9, 5.0)],
            ],
            globals: vec![GlobalHypothesis {
                weight: 1.0,
                assignment: vec![0, 0],
            }],
        };
        state = compact_dead_columns(state);
        assert_eq!(state.n_targets(), 1);
        assert_eq!(state.globals[0].assignment, vec![0]);
        assert_eq!(estimate(&state, 0.1).len(), 1);
    }

    #[test]
    fn report_mentions_targets_and_globals() {
        let state = two_global_state(0.5, 0.5);
        let report = state.hypothesis_report();
        assert!(report.contains("1 potential targets"));
        assert!(report.contains("target 0: 2 hypotheses"));
    }
}
