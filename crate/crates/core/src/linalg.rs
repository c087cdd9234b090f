//! Small dense vector/matrix helpers used by the models and certificates.

use crate::real::{pow_nonneg, Real};

/// Euclidean norm.
#[inline]
pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Dot product; panics on length mismatch (callers validate shapes).
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// `a - b` elementwise.
#[inline]
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Matrix-vector product for a row-major dense matrix.
pub fn matvec<T: Real>(rows: &[Vec<T>], v: &[T]) -> Vec<T> {
    rows.iter().map(|r| dot(r, v)).collect()
}

/// Quadratic form `x^T M x`.
pub fn quad_form<T: Real>(rows: &[Vec<T>], x: &[T]) -> T {
    dot(x, &matvec(rows, x))
}

/// Symmetric part `(M + M^T) / 2`.
pub fn symmetric_part<T: Real>(rows: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = rows.len();
    let half = T::one() / (T::one() + T::one());
    (0..n)
        .map(|i| (0..n).map(|j| (rows[i][j] + rows[j][i]) * half).collect())
        .collect()
}

/// `v / |v|^xi`, evaluated as `|v|^{1-xi} * (v / |v|)` with the zero guard of
/// [`crate::real::direction_guard`]. Continuous continuation by zero at the
/// origin for `xi < 1`.
pub fn power_direction<T: Real>(v: &[T], xi: T) -> Vec<T> {
    let n = norm(v);
    if n <= crate::real::direction_guard::<T>() {
        return vec![T::zero(); v.len()];
    }
    let factor = pow_nonneg(n, -xi);
    v.iter().map(|&x| x * factor).collect()
}

/// Dense 2x2 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Mat2<T> {
    pub m11: T,
    pub m12: T,
    pub m21: T,
    pub m22: T,
}

impl<T: Real> Mat2<T> {
    pub fn symmetric(m11: T, m12: T, m22: T) -> Self {
        Self {
            m11,
            m12,
            m21: m12,
            m22,
        }
    }

    pub fn trace(&self) -> T {
        self.m11 + self.m22
    }

    pub fn det(&self) -> T {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_direction_matches_hand_values() {
        // |v| = 2, xi = 0.5: v / sqrt(2).
        let v = [2.0_f64, 0.0];
        let out = power_direction(&v, 0.5);
        assert!((out[0] - 2.0 / 2.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
        // Zero vector maps to zero for any exponent.
        assert_eq!(power_direction(&[0.0_f64; 3], -0.7), vec![0.0; 3]);
    }

    #[test]
    fn mat2_det_trace() {
        let m = Mat2::symmetric(2.0_f64, -1.0, 3.0);
        assert_eq!(m.trace(), 5.0);
        assert_eq!(m.det(), 5.0);
        assert_eq!(m.max_abs(), 3.0);
    }
}
