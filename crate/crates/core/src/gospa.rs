//! GOSPA metric (alpha = 2) with localisation/missed/false decomposition.
//!
//! The metric is computed by solving an optimal assignment over the two sets
//! with per-pair costs `min(d, c)^p`. A full matching under the clamp attains
//! the optimal partial-matching total because cutting a pair costs exactly
//! `c^p/2` per element; assigned pairs at distance `>= c` are then counted as
//! one missed and one false target rather than as localisation error.

use nalgebra::DVector;

use crate::assoc::{solve_assignment, CostMatrix};
use crate::error::{Error, Result};

/// Decomposed GOSPA value. Each field is the p-th root of the corresponding
/// cost term, so `total^p = localisation^p + missed^p + false_targets^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GospaResult {
    pub total: f64,
    pub localisation: f64,
    pub missed: f64,
    pub false_targets: f64,
}

impl GospaResult {
    pub fn zero() -> Self {
        Self {
            total: 0.0,
            localisation: 0.0,
            missed: 0.0,
            false_targets: 0.0,
        }
    }
}

/// GOSPA distance between a ground-truth set and an estimate set with cutoff
/// `c` and order `p` (alpha fixed to 2). Inputs are position vectors.
pub fn gospa(truth: &[DVector<f64>], estimates: &[DVector<f64>], c: f64, p: f64) -> GospaResult {
    assert!(c > 0.0 && p >= 1.0, "GOSPA requires c > 0 and p >= 1");
    let n = truth.len();
    let m = estimates.len();
    if n == 0 && m == 0 {
        return GospaResult::zero();
    }
    let cp = c.powf(p);

    // Rows must not outnumber columns for the assignment solver; swapping the
    // sets swaps the missed/false roles.
    let swapped = n > m;
    let (rows, cols): (&[DVector<f64>], &[DVector<f64>]) = if swapped {
        (estimates, truth)
    } else {
        (truth, estimates)
    };

    let mut n_close = 0usize;
    let mut loc_cost = 0.0;
    if !rows.is_empty() {
        let cost = CostMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            let d = (&rows[i] - &cols[j]).norm();
            d.min(c).powf(p)
        });
        let (assignment, _) = solve_assignment(&cost).expect("clamped matrix is always feasible");
        for (i, &j) in assignment.iter().enumerate() {
            let d = (&rows[i] - &cols[j]).norm();
            if d < c {
                n_close += 1;
                loc_cost += d.powf(p);
            }
        }
    }

    let (n_missed, n_false) = (n - n_close, m - n_close);
    let missed_cost = 0.5 * cp * n_missed as f64;
    let false_cost = 0.5 * cp * n_false as f64;
    let inv_p = 1.0 / p;
    GospaResult {
        total: (loc_cost + missed_cost + false_cost).powf(inv_p),
        localisation: loc_cost.powf(inv_p),
        missed: missed_cost.powf(inv_p),
        false_targets: false_cost.powf(inv_p),
    }
}

/// Component-wise root-mean-square across windows and runs.
pub fn rms(series: &[GospaResult]) -> Result<GospaResult> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = series.len() as f64;
    let mean_sq = |f: fn(&GospaResult) -> f64| -> f64 {
        (series.iter().map(|r| f(r).powi(2)).sum::<f64>() / n).sqrt()
    };
    Ok(GospaResult {
        total: mean_sq(|r| r.total),
        localisation: mean_sq(|r| r.localisation),
        missed: mean_sq(|r| r.missed),
        false_targets: mean_sq(|r| r.false_targets),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Exhaustive optimum over all partial matchings; pairs at distance >= c
    /// are never assigned, unassigned elements cost c^p/2 each.
    pub(crate) fn brute_force_total(
        truth: &[DVector<f64>],
        est: &[DVector<f64>],
        c: f64,
        p: f64,
    ) -> f64 {
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
            // Leave truth[i] unassigned.
            let mut best = 0.5 * c.powf(p) + recurse(truth, est, c, p, i + 1, used);
            for j in 0..est.len() {
                if used[j] {
                    continue;
                }
                let d = (&truth[i] - &est[j]).norm();
                if d < c {
                    used[j] = true;
                    let cand = d.powf(p) + recurse(truth, est, c, p, i + 1, used);
                    used[j] = false;
                    best = best.min(cand);
                }
            }
            best
        }
        let mut used = vec![false; est.len()];
        recurse(truth, est, c, p, 0, &mut used).powf(1.0 / p)
    }

    fn pt(x: f64, y: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y])
    }

    #[test]
    fn empty_sets_have_zero_distance() {
        assert_eq!(gospa(&[], &[], 10.0, 2.0), GospaResult::zero());
    }

    #[test]
    fn one_missed_target() {
        let r = gospa(&[pt(3.0, 4.0)], &[], 10.0, 2.0);
        assert_relative_eq!(r.total, 50.0f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.missed, 50.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(r.localisation, 0.0);
        assert_eq!(r.false_targets, 0.0);
    }

    #[test]
    fn single_pair_below_cutoff_is_pure_localisation() {
        let truth = vec![DVector::from_vec(vec![0.0])];
        let est = vec![DVector::from_vec(vec![1.0])];
        let r = gospa(&truth, &est, 10.0, 2.0);
        assert_relative_eq!(r.total, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.localisation, 1.0, epsilon = 1e-12);
        assert_eq!(r.missed, 0.0);
        assert_eq!(r.false_targets, 0.0);
    }

    #[test]
    fn distant_pair_counts_as_missed_and_false() {
        let r = gospa(&[pt(0.0, 0.0)], &[pt(100.0, 0.0)], 10.0, 2.0);
        assert_relative_eq!(r.total, 10.0, epsilon = 1e-12);
        assert_relative_eq!(r.missed, 50.0f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(r.false_targets, 50.0f64.sqrt(), epsilon = 1e-12);
        assert_eq!(r.localisation, 0.0);
    }

    #[test]
    fn decomposition_identity_holds() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        for _ in 0..100 {
            let truth: Vec<_> = (0..rng.random_range(0..5usize))
                .map(|_| pt(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)))
                .collect();
            let est: Vec<_> = (0..rng.random_range(0..5usize))
                .map(|_| pt(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0)))
                .collect();
            let r = gospa(&truth, &est, 10.0, 2.0);
            assert_relative_eq!(
                r.total.powi(2),
                r.localisation.powi(2) + r.missed.powi(2) + r.false_targets.powi(2),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn matches_brute_force_on_small_sets() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..100 {
            let truth: Vec<_> = (0..rng.random_range(0..6usize))
                .map(|_| pt(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)))
                .collect();
            let est: Vec<_> = (0..rng.random_range(0..6usize))
                .map(|_| pt(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)))
                .collect();
            let got = gospa(&truth, &est, 10.0, 2.0).total;
            let want = brute_force_total(&truth, &est, 10.0, 2.0);
            assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn symmetric_with_swapped_decomposition() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for _ in 0..50 {
            let a: Vec<_> = (0..rng.random_range(0..5usize))
                .map(|_| pt(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)))
                .collect();
            let b: Vec<_> = (0..rng.random_range(0..5usize))
                .map(|_| pt(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0)))
                .collect();
            let ab = gospa(&a, &b, 10.0, 2.0);
            let ba = gospa(&b, &a, 10.0, 2.0);
            assert_relative_eq!(ab.total, ba.total, epsilon = 1e-12);
            assert_relative_eq!(ab.localisation, ba.localisation, epsilon = 1e-12);
            assert_relative_eq!(ab.missed, ba.false_targets, epsilon = 1e-12);
            assert_relative_eq!(ab.false_targets, ba.missed, epsilon = 1e-12);
        }
    }

    #[test]
    fn triangle_inequality_spot_check() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let mut sets = Vec::new();
            for _ in 0..3 {
                let set: Vec<_> = (0..rng.random_range(0..4usize))
                    .map(|_| pt(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)))
                    .collect();
                sets.push(set);
            }
            let d_xy = gospa(&sets[0], &sets[1], 10.0, 2.0).total;
            let d_yz = gospa(&sets[1], &sets[2], 10.0, 2.0).total;
            let d_xz = gospa(&sets[0], &sets[2], 10.0, 2.0).total;
            assert!(d_xz <= d_xy + d_yz + 1e-9);
        }
    }

    #[test]
    fn rms_examples() {
        let v = GospaResult {
            total: 3.0,
            localisation: 1.0,
            missed: 2.0,
            false_targets: 2.0,
        };
        let constant = rms(&[v, v, v]).unwrap();
        assert_relative_eq!(constant.total, 3.0, epsilon = 1e-12);
        assert_relative_eq!(constant.missed, 2.0, epsilon = 1e-12);

        let zero = GospaResult::zero();
        let ten = GospaResult {
            total: 10.0,
            localisation: 10.0,
            missed: 0.0,
            false_targets: 0.0,
        };
        let mixed = rms(&[zero, ten]).unwrap();
        assert_relative_eq!(mixed.total, 50.0f64.sqrt(), epsilon = 1e-12);

        let single = rms(&[v]).unwrap();
        assert_relative_eq!(single.total, v.total, epsilon = 1e-15);

        assert!(matches!(rms(&[]), Err(Error::EmptySeries)));
    }
}
