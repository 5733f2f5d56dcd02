//! Dense Gaussian elimination with partial pivoting, generic over the
//! scalar (exact on rationals).

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub fn solve_linear<T: Scalar>(mut a: Matrix<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = a.rows();
    assert!(a.is_square() && b.len() == n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[(x, col)].abs().partial_cmp(&a[(y, col)].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .expect("non-empty range");
        if a[(pivot, col)] == T::zero() {
            return Err(Error::Degenerate(format!("singular system at column {col}")));
        }
        if pivot != col {
            for j in 0..n {
                let t = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = t;
            }
            b.swap(col, pivot);
        }
        let p = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                a[(r, j)] = a[(r, j)] - f * a[(col, j)];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s = (r + 1..n).fold(b[r], |acc, j| acc - a[(r, j)] * x[j]);
        x[r] = s / a[(r, r)];
    }
    Ok(x)
}

/// Stationary vector of the generator with off-diagonal rates `q` (the
/// diagonal is ignored): solves pi Q = 0 with the last balance equation
/// replaced by sum pi = 1.
pub fn generator_stationary_vector<T: Scalar>(q: &Matrix<T>) -> Result<Vec<T>> {
    let n = q.rows();
    let mut a = Matrix::filled(n, n, T::zero());
    for i in 0..n {
        let out = (0..n).filter(|&j| j != i).fold(T::zero(), |s, j| s + q[(i, j)]);
        for j in 0..n {
            // Row j of Q^T collects the flow into j.
            a[(j, i)] = if i == j { -out } else { q[(i, j)] };
        }
    }
    for i in 0..n {
        a[(n - 1, i)] = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    solve_linear(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn exact_rational_solve() {
        let r = |a: i128, b: i128| Rational::new(a, b);
        let a = Matrix::from_rows(vec![vec![r(0, 1), r(2, 1)], vec![r(3, 1), r(1, 1)]]).unwrap();
        let x = solve_linear(a, vec![r(4, 1), r(5, 1)]).unwrap();
        assert_eq!(x, vec![r(1, 1), r(2, 1)]);
    }

    #[test]
    fn two_state_generator() {
        let q = Matrix::from_rows(vec![vec![0.0_f64, 2.0], vec![1.0, 0.0]]).unwrap();
        let pi = generator_stationary_vector(&q).unwrap();
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-15 && (pi[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve_linear(a, vec![1.0, 1.0]).is_err());
    }
}
