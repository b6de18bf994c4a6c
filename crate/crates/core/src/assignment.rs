//! Minimum-cost assignment on square cost matrices: an O(n³) shortest
//! augmenting path solver for general sizes, and a brute-force permutation
//! search kept as the independent reference route for small instances.

/// Solve the square assignment problem, returning the assigned column per
/// row and the total cost. Costs must be finite.
pub fn solve(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    debug_assert!(cost.iter().all(|row| row.len() == n), "matrix must be square");

    // Potentials u, v and column ownership p, 1-indexed with a virtual
    // row/column 0; way[j] remembers the previous column on the shortest
    // augmenting path.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
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
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        // Walk the augmenting path back, flipping column ownership.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    let mut total = 0.0;
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
        total += cost[p[j] - 1][j - 1];
    }
    (assign, total)
}

/// Brute-force reference: try every permutation with branch-and-bound
/// pruning. Intended for n ≤ 9.
pub fn solve_exhaustive(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    assert!(n <= 9, "exhaustive assignment limited to n <= 9, got {n}");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut best = (Vec::new(), f64::INFINITY);
    let mut current = vec![0usize; n];
    let mut used = vec![false; n];

    fn recurse(
        cost: &[Vec<f64>],
        row: usize,
        acc: f64,
        current: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut (Vec<usize>, f64),
    ) {
        let n = cost.len();
        if acc >= best.1 {
            return;
        }
        if row == n {
            *best = (current.clone(), acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                current[row] = j;
                recurse(cost, row + 1, acc + cost[row][j], current, used, best);
                used[j] = false;
            }
        }
    }

    recurse(cost, 0, 0.0, &mut current, &mut used, &mut best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_a_known_three_by_three() {
        let cost = vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ];
        let (assign, total) = solve(&cost);
        assert_relative_eq!(total, 5.0); // 1 + 2 + 2
        assert_eq!(assign, vec![1, 0, 2]);
        let (_, total_ref) = solve_exhaustive(&cost);
        assert_relative_eq!(total, total_ref);
    }

    #[test]
    fn handles_trivial_sizes() {
        assert_eq!(solve(&[]), (vec![], 0.0));
        let (assign, total) = solve(&[vec![7.5]]);
        assert_eq!(assign, vec![0]);
        assert_relative_eq!(total, 7.5);
    }

    #[test]
    fn agrees_with_exhaustive_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=7);
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(0.0..100.0)).collect())
                .collect();
            let (assign_fast, total_fast) = solve(&cost);
            let (_, total_ref) = solve_exhaustive(&cost);
            assert_relative_eq!(total_fast, total_ref, epsilon = 1e-9);
            // The reported assignment must actually price out to the total.
            let recomputed: f64 = assign_fast
                .iter()
                .enumerate()
                .map(|(i, &j)| cost[i][j])
                .sum();
            assert_relative_eq!(recomputed, total_fast, epsilon = 1e-9);
            // And be a permutation.
            let mut seen = vec![false; n];
            for &j in &assign_fast {
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }
}
