//! Exact minimum-cost assignment via shortest augmenting paths with dual
//! potentials (the dense Jonker-Volgenant variant). Works directly on f64
//! costs; O(n^3) worst case, fast in practice for the sample sizes the
//! empirical transport checks use.

/// Solve the square assignment problem for a row-major `n x n` cost matrix.
/// Returns the assigned column for every row; the assignment minimizes the
/// total cost.
pub fn solve_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n*n");
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut col4row = vec![usize::MAX; n];
    let mut row4col = vec![usize::MAX; n];

    let mut shortest = vec![0.0f64; n];
    let mut path = vec![usize::MAX; n];
    let mut scanned_rows = vec![false; n];
    let mut scanned_cols = vec![false; n];

    for cur_row in 0..n {
        shortest.iter_mut().for_each(|s| *s = f64::INFINITY);
        path.iter_mut().for_each(|p| *p = usize::MAX);
        scanned_rows.iter_mut().for_each(|s| *s = false);
        scanned_cols.iter_mut().for_each(|s| *s = false);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let mut sink = usize::MAX;
        while sink == usize::MAX {
            scanned_rows[i] = true;
            let mut lowest = f64::INFINITY;
            let mut j_low = usize::MAX;
            let row = &cost[i * n..(i + 1) * n];
            for j in 0..n {
                if scanned_cols[j] {
                    continue;
                }
                let reduced = min_val + row[j] - u[i] - v[j];
                if reduced < shortest[j] {
                    shortest[j] = reduced;
                    path[j] = i;
                }
                if shortest[j] < lowest
                    || (shortest[j] == lowest && row4col[j] == usize::MAX)
                {
                    lowest = shortest[j];
                    j_low = j;
                }
            }
            min_val = lowest;
            debug_assert!(
                min_val.is_finite(),
                "assignment infeasible: non-finite reduced cost"
            );
            let j = j_low;
            scanned_cols[j] = true;
            if row4col[j] == usize::MAX {
                sink = j;
            } else {
                i = row4col[j];
            }
        }

        u[cur_row] += min_val;
        for r in 0..n {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for j in 0..n {
            if scanned_cols[j] {
                v[j] -= min_val - shortest[j];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    col4row
}

/// Total cost of an assignment.
pub fn assignment_cost(cost: &[f64], n: usize, assignment: &[usize]) -> f64 {
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;

    /// Brute-force oracle: enumerate every permutation.
    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn permute(rest: &mut Vec<usize>, chosen: &mut Vec<usize>, cost: &[f64], n: usize, best: &mut f64) {
            if rest.is_empty() {
                let total: f64 = chosen
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| cost[i * n + j])
                    .sum();
                if total < *best {
                    *best = total;
                }
                return;
            }
            for k in 0..rest.len() {
                let j = rest.remove(k);
                chosen.push(j);
                permute(rest, chosen, cost, n, best);
                chosen.pop();
                rest.insert(k, j);
            }
        }
        let mut best = f64::INFINITY;
        permute(&mut (0..n).collect(), &mut Vec::new(), cost, n, &mut best);
        best
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = RngState::from_seed(123);
        for n in 1..=7 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.uniform() * 10.0).collect();
                let assignment = solve_assignment(&cost, n);
                let got = assignment_cost(&cost, n, &assignment);
                let want = brute_force(&cost, n);
                assert!(
                    (got - want).abs() < 1e-9,
                    "n={n}: solver {got} vs brute force {want}"
                );
                // Must be a permutation.
                let mut seen = vec![false; n];
                for &j in &assignment {
                    assert!(!seen[j]);
                    seen[j] = true;
                }
            }
        }
    }

    #[test]
    fn identity_optimal_for_diagonal_dominance() {
        let n = 4;
        let mut cost = vec![1.0; n * n];
        for i in 0..n {
            cost[i * n + i] = 0.0;
        }
        let assignment = solve_assignment(&cost, n);
        assert_eq!(assignment, vec![0, 1, 2, 3]);
    }

    #[test]
    fn handles_negative_costs() {
        let cost = vec![-5.0, 2.0, 3.0, -1.0];
        let assignment = solve_assignment(&cost, 2);
        assert_eq!(assignment_cost(&cost, 2, &assignment), -6.0);
    }
}
