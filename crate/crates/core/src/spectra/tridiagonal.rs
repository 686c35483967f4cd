//! Eigen-decomposition of small real symmetric tridiagonal matrices by the
//! implicit QL method with Wilkinson-style shifts.

use crate::error::{Error, Result};

/// Eigenvalues in ascending order plus selected rows of the eigenvector
/// matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    /// `rows[r][i]` is component `row_index[r]` of eigenvector `i`.
    pub rows: Vec<Vec<f64>>,
}

impl TridiagonalEigen {
    /// Eigenvector `i` as a column, only meaningful when all rows were kept.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[i]).collect()
    }
}

/// Which rows of the eigenvector matrix to accumulate. Rotations act on each
/// row independently, so tracking only the last row costs `O(n)` per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rows {
    All,
    Last,
}

const MAX_SWEEPS: usize = 60;

/// `diag` has length `n`, `off` length `n - 1` (`off[i]` couples `i`, `i+1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], rows: Rows) -> Result<TridiagonalEigen> {
    let n = diag.len();
    assert!(n >= 1 && off.len() + 1 == n, "tridiagonal shape");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);

    let tracked: Vec<usize> = match rows {
        Rows::All => (0..n).collect(),
        Rows::Last => vec![n - 1],
    };
    let mut z: Vec<Vec<f64>> = tracked
        .iter()
        .map(|&r| {
            let mut row = vec![0.0; n];
            row[r] = 1.0;
            row
        })
        .collect();

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::NoConvergence {
                    iterations: sweeps,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok(TridiagonalEigen {
        values: order.iter().map(|&i| d[i]).collect(),
        rows: z
            .into_iter()
            .map(|row| order.iter().map(|&i| row[i]).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dense(diag: &[f64], off: &[f64]) -> DMatrix<f64> {
        let n = diag.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else if i + 1 == j {
                off[i]
            } else if j + 1 == i {
                off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn one_by_one() {
        let r = tridiagonal_eigen(&[3.0], &[], Rows::All).unwrap();
        assert_eq!(r.values, vec![3.0]);
        assert_eq!(r.vector(0), vec![1.0]);
    }

    #[test]
    fn two_by_two() {
        // [[0, 1], [1, 0]] has eigenvalues -1, 1
        let r = tridiagonal_eigen(&[0.0, 0.0], &[1.0], Rows::All).unwrap();
        assert!((r.values[0] + 1.0).abs() < 1e-15);
        assert!((r.values[1] - 1.0).abs() < 1e-15);
        let v = r.vector(0);
        assert!((v[0] + v[1]).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_dense_oracle(
            diag in prop::collection::vec(-5.0f64..5.0, 1..40),
            seed in prop::collection::vec(-2.0f64..2.0, 40),
        ) {
            let n = diag.len();
            let off = &seed[..n - 1];
            let r = tridiagonal_eigen(&diag, off, Rows::All).unwrap();
            let m = dense(&diag, off);
            let mut oracle: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            oracle.sort_by(f64::total_cmp);
            for (a, b) in r.values.iter().zip(&oracle) {
                prop_assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
            for i in 0..n {
                let v = nalgebra::DVector::from_vec(r.vector(i));
                let res = (&m * &v - &v * r.values[i]).norm();
                prop_assert!(res < 1e-11);
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            let last = tridiagonal_eigen(&diag, off, Rows::Last).unwrap();
            for i in 0..n {
                prop_assert!((last.rows[0][i] - r.rows[n - 1][i]).abs() < 1e-12);
            }
        }
    }
}
