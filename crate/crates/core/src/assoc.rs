//! Ellipsoidal gating and ranked linear assignment.
//!
//! Cost matrices follow the global-hypothesis convention: one row per
//! measurement, one column per existing single-target detection hypothesis
//! plus one dedicated new-target/clutter column per measurement. Entries are
//! negative log hypothesis weights; `f64::INFINITY` marks inadmissible
//! pairings (gated out, or another measurement's new-target column).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::cholesky_checked;

/// Cost matrix for global-hypothesis formation; see the module docs for the
/// row/column convention.
pub type CostMatrix = DMatrix<f64>;

/// Squared-Mahalanobis ellipsoidal gate: true iff
/// `(z - z_pred)' S^{-1} (z - z_pred) <= threshold`.
pub fn gate(
    z_pred: &DVector<f64>,
    s: &DMatrix<f64>,
    z: &DVector<f64>,
    threshold: f64,
) -> Result<bool> {
    let chol = cholesky_checked(s).ok_or(Error::SingularInnovation)?;
    let diff = z - z_pred;
    let d2 = diff.dot(&chol.solve(&diff));
    Ok(d2 <= threshold)
}

/// Minimum-cost assignment of every row to a distinct column (rows <= columns)
/// by shortest augmenting paths. Returns the row-to-column map and total cost,
/// or `None` when no complete assignment over the finite entries exists.
pub fn solve_assignment(cost: &CostMatrix) -> Option<(Vec<usize>, f64)> {
    let (n_rows, n_cols) = cost.shape();
    if n_rows == 0 {
        return Some((vec![], 0.0));
    }
    if n_rows > n_cols {
        return None;
    }
    const NONE: usize = usize::MAX;
    let virt = n_cols; // virtual entry column
    let mut u = vec![0.0f64; n_rows];
    let mut v = vec![0.0f64; n_cols + 1];
    let mut col_to_row = vec![NONE; n_cols + 1];

    for row in 0..n_rows {
        col_to_row[virt] = row;
        let mut j0 = virt;
        let mut min_reduced = vec![f64::INFINITY; n_cols];
        let mut prev = vec![virt; n_cols];
        let mut used = vec![false; n_cols + 1];

        loop {
            used[j0] = true;
            let i0 = col_to_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = NONE;
            for j in 0..n_cols {
                if used[j] {
                    continue;
                }
                let c = cost[(i0, j)];
                if c.is_finite() {
                    let reduced = c - u[i0] - v[j];
                    if reduced < min_reduced[j] {
                        min_reduced[j] = reduced;
                        prev[j] = j0;
                    }
                }
                if min_reduced[j] < delta {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            if j1 == NONE {
                return None; // no augmenting path over finite entries
            }
            for j in 0..=n_cols {
                if used[j] {
                    if col_to_row[j] != NONE {
                        u[col_to_row[j]] += delta;
                    }
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
            if col_to_row[j0] == NONE {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != virt {
            let j1 = prev[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
        }
    }

    let mut row_to_col = vec![NONE; n_rows];
    for j in 0..n_cols {
        if col_to_row[j] != NONE {
            row_to_col[col_to_row[j]] = j;
        }
    }
    debug_assert!(row_to_col.iter().all(|&c| c != NONE));
    let total = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[(i, j)])
        .sum();
    Some((row_to_col, total))
}

struct QueueEntry {
    cost: f64,
    solution: Vec<usize>,
    matrix: CostMatrix,
    /// Rows 0..fixed_rows are forced to their solution columns in children.
    fixed_rows: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost && self.solution == other.solution
    }
}
impl Eq for QueueEntry {}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry {
    // Reversed so the max-heap pops the cheapest entry; ties broken by
    // lexicographic assignment order for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.solution.cmp(&self.solution))
    }
}

/// The `k` lowest-cost assignments in nondecreasing cost order (fewer if fewer
/// feasible assignments exist), via Murty's partitioning of the solution space.
pub fn murty_kbest(cost: &CostMatrix, k: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    let (solution, best) = solve_assignment(cost).ok_or(Error::InfeasibleAssignment)?;
    let mut heap = BinaryHeap::new();
    heap.push(QueueEntry {
        cost: best,
        solution,
        matrix: cost.clone(),
        fixed_rows: 0,
    });
    let mut out = Vec::with_capacity(k.min(16));
    while out.len() < k {
        let Some(entry) = heap.pop() else {
            break;
        };
        out.push((entry.solution.clone(), entry.cost));
        // Partition: child t bans (t, c_t) and forces rows < t to their columns.
        let n_rows = entry.solution.len();
        let mut base = entry.matrix.clone();
        for t in entry.fixed_rows..n_rows {
            let banned_col = entry.solution[t];
            let mut child = base.clone();
            child[(t, banned_col)] = f64::INFINITY;
            if let Some((solution, cost)) = solve_assignment(&child) {
                heap.push(QueueEntry {
                    cost,
                    solution,
                    matrix: child,
                    fixed_rows: t,
                });
            }
            // Force row t to its column for the remaining children.
            for j in 0..base.ncols() {
                if j != banned_col {
                    base[(t, j)] = f64::INFINITY;
                }
            }
        }
    }
    Ok(out)
}
