//! Exact square assignment by the shortest augmenting path form of the
//! Hungarian method, O(n³).

use num_traits::{Bounded, Signed};

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `assignment[row] = col` and the total cost, summed from the chosen
/// entries. Costs must be small enough that `n` of them plus the potentials
/// stay far below `T::max_value() / 4`.
pub fn hungarian<T>(cost: &[Vec<T>]) -> (Vec<usize>, T)
where
    T: Signed + Bounded + Copy + PartialOrd,
{
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), T::zero());
    }
    debug_assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");

    let four = T::one() + T::one() + T::one() + T::one();
    let inf = T::max_value() / four;
    // 1-based potentials with a virtual column 0 holding the row being inserted.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = assignment.iter().enumerate().fold(T::zero(), |acc, (i, &j)| acc + cost[i][j]);
    (assignment, total)
}
