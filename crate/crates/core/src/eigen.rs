//! Eigen-decomposition of symmetric 3x3 matrices.
//!
//! Scatter matrices built during normal estimation and plane fitting are
//! symmetric positive semi-definite, so a cyclic Jacobi sweep converges in a
//! handful of rotations and keeps small eigenvalues accurate to machine
//! precision relative to the largest one. That relative accuracy is what the
//! degenerate-tie test in [`SymEigen3::min_is_isolated`] depends on.

/// Symmetric 3x3 matrix stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3 {
        xx: 0.0,
        xy: 0.0,
        xz: 0.0,
        yy: 0.0,
        yz: 0.0,
        zz: 0.0,
    };

    /// Adds `w * v vᵀ`.
    #[inline]
    pub fn add_outer(&mut self, v: [f64; 3], w: f64) {
        self.xx += w * v[0] * v[0];
        self.xy += w * v[0] * v[1];
        self.xz += w * v[0] * v[2];
        self.yy += w * v[1] * v[1];
        self.yz += w * v[1] * v[2];
        self.zz += w * v[2] * v[2];
    }

    pub fn to_array(self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn eigen(&self) -> SymEigen3 {
        jacobi(self.to_array())
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    pub values: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

/// Relative gap below which the two smallest eigenvalues count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

impl SymEigen3 {
    pub fn min_vector(&self) -> [f64; 3] {
        self.vectors[0]
    }

    /// False when the two smallest eigenvalues tie within [`TIE_TOLERANCE`]
    /// of the largest, or when the matrix is zero. A tied minimum has no
    /// unique eigenvector.
    pub fn min_is_isolated(&self) -> bool {
        let scale = self.values[2].abs();
        if !(scale > 0.0) || !scale.is_finite() {
            return false;
        }
        self.values[1] - self.values[0] > TIE_TOLERANCE * scale
    }
}

fn jacobi(mut a: [[f64; 3]; 3]) -> SymEigen3 {
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off == 0.0 || off <= f64::EPSILON * f64::EPSILON * diag * 1e-4 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[p][q];
            if apq == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            a[p][p] -= t * apq;
            a[q][q] += t * apq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            let r = 3 - p - q;
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];

            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &col) in order.iter().enumerate() {
        values[slot] = a[col][col];
        let vec = [v[0][col], v[1][col], v[2][col]];
        let n = (vec[0] * vec[0] + vec[1] * vec[1] + vec[2] * vec[2]).sqrt();
        vectors[slot] = [vec[0] / n, vec[1] / n, vec[2] / n];
    }
    SymEigen3 { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &SymEigen3) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += e.values[k] * e.vectors[k][i] * e.vectors[k][j];
                }
            }
        }
        m
    }

    #[test]
    fn diagonal_sorted() {
        let m = SymMat3 {
            xx: 3.0,
            yy: 1.0,
            zz: 2.0,
            ..SymMat3::ZERO
        };
        let e = m.eigen();
        assert_eq!(e.values, [1.0, 2.0, 3.0]);
        assert_eq!(e.min_vector()[1].abs(), 1.0);
    }

    #[test]
    fn rank_one_is_tied() {
        let mut m = SymMat3::ZERO;
        m.add_outer([1.0, 2.0, 3.0], 1.0);
        let e = m.eigen();
        assert!(!e.min_is_isolated());
        assert!((e.values[2] - 14.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        assert!(!SymMat3::ZERO.eigen().min_is_isolated());
    }

    #[test]
    fn matches_nalgebra_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let m = SymMat3 {
                xx: rng.random_range(-2.0..2.0),
                xy: rng.random_range(-2.0..2.0),
                xz: rng.random_range(-2.0..2.0),
                yy: rng.random_range(-2.0..2.0),
                yz: rng.random_range(-2.0..2.0),
                zz: rng.random_range(-2.0..2.0),
            };
            let e = m.eigen();
            let a = m.to_array();
            let na = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
            let mut expected: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            expected.sort_by(f64::total_cmp);
            for k in 0..3 {
                assert!((e.values[k] - expected[k]).abs() < 1e-12, "{e:?} vs {expected:?}");
            }
            let r = reconstruct(&e);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((r[i][j] - a[i][j]).abs() < 1e-12);
                }
            }
        }
    }
}
