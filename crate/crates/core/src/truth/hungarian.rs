//! Maximum-weight one-to-one assignment on a rectangular overlap matrix.
//!
//! Shortest augmenting path formulation with row/column potentials, O(n²m)
//! for an n×m matrix with n ≤ m. Weights are converted to costs as
//! `max − w`, which keeps all reduced costs nonnegative integers.

/// Assignment pairs `(row, col)` sorted by row, and the summed overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total: u64,
}

/// Maximizes the summed overlap over one-to-one partial assignments of size
/// `min(rows, cols)`. Rows must have equal length.
pub fn hungarian_match(overlap: &[Vec<u64>]) -> Assignment {
    let rows = overlap.len();
    let cols = overlap.first().map_or(0, Vec::len);
    assert!(overlap.iter().all(|r| r.len() == cols), "ragged overlap matrix");
    if rows == 0 || cols == 0 {
        return Assignment {
            pairs: Vec::new(),
            total: 0,
        };
    }

    let transpose = rows > cols;
    let (n, m) = if transpose { (cols, rows) } else { (rows, cols) };
    let weight = |i: usize, j: usize| if transpose { overlap[j][i] } else { overlap[i][j] };
    let max = overlap.iter().flatten().copied().max().unwrap_or(0) as i128;
    let cost = |i: usize, j: usize| max - weight(i, j) as i128;

    // 1-based arrays; column 0 is the virtual source.
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i128::MAX; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = i128::MAX;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::with_capacity(n);
    let mut total = 0u64;
    for j in 1..=m {
        let i = col_owner[j];
        if i != 0 {
            total += weight(i - 1, j - 1);
            pairs.push(if transpose { (j - 1, i - 1) } else { (i - 1, j - 1) });
        }
    }
    pairs.sort_unstable();
    Assignment { pairs, total }
}
