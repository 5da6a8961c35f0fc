//! Small dense solves for the autocorrelation systems (order `p` is tiny).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Square<T> {
    pub(crate) dim: usize,
    pub(crate) data: Vec<T>,
}

impl<T: Scalar> Square<T> {
    pub(crate) fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    #[cfg(test)]
    pub(crate) fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub(crate) fn transpose_mul_self(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let v = (0..d).map(|r| self.get(r, i) * self.get(r, j)).sum();
                out.set(i, j, v);
            }
        }
        out
    }

    pub(crate) fn transpose_mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|r| self.get(r, i) * v[r]).sum())
            .collect()
    }

    fn one_norm(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

/// LU factorisation with partial pivoting.
pub(crate) struct Lu<T> {
    lu: Square<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub(crate) fn factor(a: &Square<T>) -> Result<Self> {
        let d = a.dim;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        for col in 0..d {
            let (piv_row, piv_abs) = (col..d)
                .map(|r| (r, lu.get(r, col).abs()))
                .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs < T::lit(PIVOT_TOLERANCE) {
                return Err(Error::SingularMatrix(piv_abs.as_f64()));
            }
            if piv_row != col {
                for j in 0..d {
                    let tmp = lu.get(col, j);
                    lu.set(col, j, lu.get(piv_row, j));
                    lu.set(piv_row, j, tmp);
                }
                perm.swap(col, piv_row);
            }
            let pivot = lu.get(col, col);
            for r in col + 1..d {
                let f = lu.get(r, col) / pivot;
                lu.set(r, col, f);
                for j in col + 1..d {
                    lu.set(r, j, lu.get(r, j) - f * lu.get(col, j));
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let d = self.lu.dim;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..d {
            for j in 0..i {
                x[i] = x[i] - self.lu.get(i, j) * x[j];
            }
        }
        for i in (0..d).rev() {
            for j in i + 1..d {
                x[i] = x[i] - self.lu.get(i, j) * x[j];
            }
            x[i] = x[i] / self.lu.get(i, i);
        }
        x
    }

    /// 1-norm condition number `||A||_1 ||A^{-1}||_1` of the factored matrix.
    pub(crate) fn condition(&self, a: &Square<T>) -> T {
        let d = a.dim;
        let mut inv = Square::zeros(d);
        let mut e = vec![T::zero(); d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        a.one_norm() * inv.one_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_reports_condition() {
        let a = Square {
            dim: 2,
            data: vec![0.0, 2.0, 1.0, 1.0],
        };
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve(&[4.0, 3.0]);
        assert!((x[0] - 1.0f64).abs() < 1e-15 && (x[1] - 2.0f64).abs() < 1e-15);
        // inverse [[-0.5, 1], [0.5, 0]] has 1-norm 1; A has 1-norm 3
        assert!((lu.condition(&a) - 3.0f64).abs() < 1e-12);
        let id = Square::<f64>::identity(3);
        assert_eq!(Lu::factor(&id).unwrap().condition(&id), 1.0);
    }

    #[test]
    fn zero_pivot_is_singular() {
        let a = Square {
            dim: 2,
            data: vec![1.0, 2.0, 2.0, 4.0],
        };
        assert!(matches!(Lu::factor(&a), Err(Error::SingularMatrix(_))));
    }
}
