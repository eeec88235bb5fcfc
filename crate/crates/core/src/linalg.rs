//! Small dense linear algebra for the homography estimators.

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Right singular vectors and singular values of `a` by one-sided Jacobi
/// rotations. Returns `(sigma, v)` with `v` column-major per singular value:
/// `v[j]` is the right singular vector paired with `sigma[j]`.
pub fn jacobi_svd<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Vec<Vec<T>>) {
    let (m, n) = (a.rows, a.cols);
    // Columns of the working matrix.
    let mut u: Vec<Vec<T>> = (0..n).map(|j| (0..m).map(|i| a.at(i, j)).collect()).collect();
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: T = u[p].iter().map(|x| *x * *x).sum();
                let beta: T = u[q].iter().map(|x| *x * *x).sum();
                let gamma: T = u[p].iter().zip(&u[q]).map(|(x, y)| *x * *y).sum();
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for col in [&mut u, &mut v] {
                    let (lo, hi) = col.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (xp, yq) = (*x, *y);
                        *x = c * xp - s * yq;
                        *y = s * xp + c * yq;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = u.iter().map(|c| c.iter().map(|x| *x * *x).sum::<T>().sqrt()).collect();
    (sigma, v)
}

/// Unit vector minimizing `|A x|`: the right singular vector of the
/// smallest singular value. Rows are zero-padded when `A` is wide.
pub fn null_vector<T: Scalar>(a: &Matrix<T>) -> Vec<T> {
    let padded;
    let a = if a.rows < a.cols {
        let mut p = Matrix::zeros(a.cols, a.cols);
        p.data[..a.data.len()].copy_from_slice(&a.data);
        padded = p;
        &padded
    } else {
        a
    };
    let (sigma, v) = jacobi_svd(a);
    let j = (0..sigma.len())
        .min_by(|&x, &y| sigma[x].partial_cmp(&sigma[y]).unwrap())
        .unwrap();
    v[j].clone()
}

/// Solves `A x = b` for square `A` by Gaussian elimination with partial
/// pivoting. `None` when a pivot underflows `tiny` times the largest entry.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let scale = a.data.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return None;
    }
    let tiny = scale * T::epsilon() * T::from_int(n as i64);
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m.at(r, col).abs().partial_cmp(&m.at(s, col).abs()).unwrap())
            .unwrap();
        if m.at(piv, col).abs() <= tiny {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.data.swap(piv * n + c, col * n + c);
            }
            x.swap(piv, col);
        }
        let d = m.at(col, col);
        for r in (col + 1)..n {
            let f = m.at(r, col) / d;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = m.at(col, c);
                *m.at_mut(r, c) -= f * v;
            }
            let xc = x[col];
            x[r] -= f * xc;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for c in (col + 1)..n {
            s -= m.at(col, c) * x[c];
        }
        x[col] = s / m.at(col, col);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_reconstructs_singular_values() {
        // Rank-2 3x3 matrix: third column = first + second.
        let a = Matrix { rows: 3, cols: 3, data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 9.0, 7.0, 8.0, 15.0f64] };
        let x = null_vector(&a);
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        for r in 0..3 {
            let s: f64 = (0..3).map(|c| a.at(r, c) * x[c]).sum();
            assert!(s.abs() < 1e-12);
        }
        // Squared singular values sum to the squared Frobenius norm.
        let (sigma, _) = jacobi_svd(&a);
        let fro: f64 = a.data.iter().map(|v| v * v).sum();
        let ss: f64 = sigma.iter().map(|s| s * s).sum();
        assert!((fro - ss).abs() < 1e-9 * fro);
    }

    #[test]
    fn wide_matrix_null_vector() {
        let a = Matrix { rows: 1, cols: 2, data: vec![3.0, 4.0f64] };
        let x = null_vector(&a);
        assert!((3.0 * x[0] + 4.0 * x[1]).abs() < 1e-12);
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix { rows: 3, cols: 3, data: vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0f64] };
        let x = solve(&a, &[5.0, 3.0, 6.0]).unwrap();
        for (got, want) in x.iter().zip([1.4, 1.6, 1.8]) {
            assert!((got - want).abs() < 1e-12, "{x:?}");
        }
        let singular = Matrix { rows: 2, cols: 2, data: vec![1.0, 2.0, 2.0, 4.0f64] };
        assert!(solve(&singular, &[1.0, 2.0]).is_none());
    }
}
