//! Minimum-cost bipartite assignment with deterministic tie-breaking.

use serde::Serialize;

/// Reduced costs at or below this are treated as zero when picking among
/// equally good assignments.
const TIGHT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    /// (row, col) pairs in row order; one per row or column, whichever is fewer.
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

impl Assignment {
    /// Pairs whose cost is below 1, the infeasibility marker.
    pub fn feasible<'a>(
        &'a self,
        cost: &'a [Vec<f64>],
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.pairs
            .iter()
            .copied()
            .filter(move |&(i, j)| cost[i][j] < 1.0)
    }

    pub fn col_of(&self, row: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == row).map(|p| p.1)
    }

    pub fn row_of(&self, col: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.1 == col).map(|p| p.0)
    }
}

fn square(cost: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
    let n = cost.len().max(cols);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| cost.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0))
                .collect()
        })
        .collect()
}

/// Optimal assignment of a square matrix and the dual potentials proving it.
fn solve(a: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = a.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
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
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_col = vec![0usize; n];
    for j in 1..=n {
        row_col[p[j] - 1] = j - 1;
    }
    (row_col, u[1..].to_vec(), v[1..].to_vec())
}

fn tight_mask(a: &[Vec<f64>], u: &[f64], v: &[f64]) -> Vec<Vec<bool>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &c)| c - u[i] - v[j] <= TIGHT)
                .collect()
        })
        .collect()
}

/// Rewrite `row_col` (a perfect matching inside `tight`) into the
/// lexicographically smallest perfect matching of `tight`.
fn lexicographic(tight: &[Vec<bool>], row_col: &mut [usize]) {
    let n = row_col.len();
    let mut owner = vec![0usize; n];
    for (r, &c) in row_col.iter().enumerate() {
        owner[c] = r;
    }
    let mut fixed = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        r: usize,
        target: usize,
        moving: usize,
        tight: &[Vec<bool>],
        row_col: &[usize],
        owner: &[usize],
        fixed: &[bool],
        visited: &mut [bool],
        path: &mut Vec<(usize, usize)>,
    ) -> bool {
        for c in 0..row_col.len() {
            if !tight[r][c] || c == row_col[r] || visited[c] {
                continue;
            }
            visited[c] = true;
            if c == target {
                path.push((r, c));
                return true;
            }
            let next = owner[c];
            if fixed[next] || next == moving {
                continue;
            }
            path.push((r, c));
            if dfs(
                next, target, moving, tight, row_col, owner, fixed, visited, path,
            ) {
                return true;
            }
            path.pop();
        }
        false
    }

    for i in 0..n {
        let current = row_col[i];
        for j in 0..current {
            if !tight[i][j] || fixed[owner[j]] {
                continue;
            }
            let k = owner[j];
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if dfs(
                k,
                current,
                i,
                tight,
                row_col,
                &owner,
                &fixed,
                &mut visited,
                &mut path,
            ) {
                for (r, c) in path {
                    row_col[r] = c;
                    owner[c] = r;
                }
                row_col[i] = j;
                owner[j] = i;
                break;
            }
        }
        fixed[i] = true;
    }
}

fn finish(cost: &[Vec<f64>], rows: usize, cols: usize, row_col: &[usize]) -> Assignment {
    let pairs: Vec<(usize, usize)> = (0..rows)
        .filter(|&i| row_col[i] < cols)
        .map(|i| (i, row_col[i]))
        .collect();
    let total = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
    Assignment { pairs, total }
}

/// Minimum-cost assignment of rows to columns. Rectangular matrices leave the
/// surplus side unassigned. Among optimal assignments the one whose column
/// sequence (row 0 first) is lexicographically smallest is returned.
pub fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let a = square(cost, cols);
    let (mut row_col, u, v) = solve(&a);
    lexicographic(&tight_mask(&a, &u, &v), &mut row_col);
    finish(cost, rows, cols, &row_col)
}

/// Like [`hungarian`], but among assignments optimal for `primary`, picks one
/// that minimizes `secondary`, then breaks remaining ties lexicographically.
pub fn hungarian_refined(primary: &[Vec<f64>], secondary: &[Vec<f64>]) -> Assignment {
    let rows = primary.len();
    let cols = primary.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total: 0.0,
        };
    }
    let a = square(primary, cols);
    let (_, u, v) = solve(&a);
    let tight = tight_mask(&a, &u, &v);
    let s = square(secondary, cols);
    let n = a.len();
    let bound = s.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let forbidden = (n as f64 + 1.0) * (bound + 1.0);
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if tight[i][j] { s[i][j] } else { forbidden })
                .collect()
        })
        .collect();
    let (mut row_col, u2, v2) = solve(&b);
    lexicographic(&tight_mask(&b, &u2, &v2), &mut row_col);
    finish(primary, rows, cols, &row_col)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_preference() {
        let c = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let a = hungarian(&c);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(a.total, 0.0);
    }

    #[test]
    fn all_equal_is_lexicographic_diagonal() {
        let c = vec![vec![0.5; 4]; 4];
        assert_eq!(hungarian(&c).pairs, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        let wide = vec![vec![0.25; 5]; 2];
        assert_eq!(hungarian(&wide).pairs, vec![(0, 0), (1, 1)]);
        let tall = vec![vec![0.25; 2]; 5];
        assert_eq!(hungarian(&tall).pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn tie_resolved_toward_earlier_rows() {
        // Both anti-diagonal and diagonal cost 1; diagonal is lexicographically first.
        let c = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert_eq!(hungarian(&c).pairs, vec![(0, 0), (1, 1)]);
        let c = vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.5]];
        assert_eq!(hungarian(&c).pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn empty_matrices() {
        assert!(hungarian(&[]).pairs.is_empty());
        assert!(hungarian(&[vec![], vec![]]).pairs.is_empty());
    }

    #[test]
    fn refined_prefers_secondary_among_optima() {
        let primary = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        let secondary = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(
            hungarian_refined(&primary, &secondary).pairs,
            vec![(0, 1), (1, 0)]
        );
        // the secondary objective never overrides the primary one
        let primary = vec![vec![0.0, 0.5], vec![0.5, 0.0]];
        assert_eq!(
            hungarian_refined(&primary, &secondary).pairs,
            vec![(0, 0), (1, 1)]
        );
    }
}
