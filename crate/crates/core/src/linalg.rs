//! Dense symmetric positive definite solves for the per-cell mass matrices.

use crate::scalar::Real;

/// Factor `L Lᵀ = D A D` of the symmetrically equilibrated matrix, `D = diag(A)^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
    scale: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors a row-major `n × n` matrix. Returns `None` on a non-positive pivot.
    pub fn factor(a: &[T], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut scale = Vec::with_capacity(n);
        for i in 0..n {
            let d = a[i * n + i];
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            scale.push(T::one() / d.sqrt());
        }
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j] * scale[i] * scale[j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l, scale })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place for `m` interleaved right-hand sides stored as
    /// `b[row · m + column]`.
    pub fn solve_interleaved(&self, b: &mut [T], m: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * m);
        for c in 0..m {
            for i in 0..n {
                b[i * m + c] *= self.scale[i];
            }
            for i in 0..n {
                let mut s = b[i * m + c];
                for k in 0..i {
                    s -= self.l[i * n + k] * b[k * m + c];
                }
                b[i * m + c] = s / self.l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = b[i * m + c];
                for k in i + 1..n {
                    s -= self.l[k * n + i] * b[k * m + c];
                }
                b[i * m + c] = s / self.l[i * n + i];
            }
            for i in 0..n {
                b[i * m + c] *= self.scale[i];
            }
        }
    }

    pub fn solve(&self, b: &mut [T]) {
        self.solve_interleaved(b, 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_small_system() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let chol = Cholesky::factor(&a, 3).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i * 3 + j] * x[j]).sum()).collect();
        chol.solve(&mut b);
        for i in 0..3 {
            assert_relative_eq!(b[i], x[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        assert!(Cholesky::factor(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn interleaved_columns_are_independent() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let chol = Cholesky::factor(&a, 2).unwrap();
        let mut b = [3.0, 2.0, 4.0, 1.0];
        chol.solve_interleaved(&mut b, 2);
        // column 0: [3, 4] -> x = [1, 1]; column 1: [2, 1] -> x = [1, 0]
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(b[2], 1.0, epsilon = 1e-15);
        assert_relative_eq!(b[1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(b[3], 0.0, epsilon = 1e-15);
    }
}
