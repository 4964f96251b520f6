use super::{tol, Matrix};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`, over a dense row-major
/// buffer of any size (the Lyapunov solver uses it on `n^2 x n^2` systems).
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Factors the `n x n` row-major buffer `a`. Pivots below
    /// [`tol::SINGULAR_PIVOT`] times the infinity norm of `a` are rejected.
    pub fn factor_raw(n: usize, mut a: Vec<f64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let norm = a
            .chunks(n)
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let floor = tol::SINGULAR_PIVOT * norm;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;

        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, a[i * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot <= floor || pivot == 0.0 {
                return Err(Error::Singular { pivot, column: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let akk = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / akk;
                a[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu: a,
            perm,
            sign,
        })
    }

    pub fn factor(m: &Matrix) -> Result<Self> {
        Self::factor_raw(m.dim(), m.as_slice().to_vec())
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        // A^T = U^T L^T P, so solve U^T z = b, L^T y = z, x = P^T y.
        let mut z = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * z[j]).sum();
            z[i] = (z[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * z[j]).sum();
            z[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }

    /// `ln |det A|`, which stays finite where the determinant itself would underflow.
    pub fn log_abs_det(&self) -> f64 {
        (0..self.n)
            .map(|i| self.lu[i * self.n + i].abs().ln())
            .sum()
    }

    pub fn det(&self) -> f64 {
        self.sign
            * (0..self.n)
                .map(|i| self.lu[i * self.n + i])
                .product::<f64>()
    }
}

/// Inverse by Gaussian elimination with partial pivoting.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    let n = m.dim();
    let lu = Lu::factor(m)?;
    let mut inv = Matrix::zeros(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(invert(&Matrix::identity(2)).unwrap(), Matrix::identity(2));
        assert_eq!(
            invert(&Matrix::diag(&[2.0, 4.0])).unwrap(),
            Matrix::diag(&[0.5, 0.25])
        );
    }

    #[test]
    fn rank_one_is_singular() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(invert(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn round_trip_needs_pivoting() {
        let m = Matrix::from_rows(&[[1e-20, 1.0, 0.0], [1.0, 1.0, 2.0], [0.0, 3.0, 1.0]]).unwrap();
        let inv = invert(&m).unwrap();
        let prod = &m * &inv;
        assert!((&prod - &Matrix::identity(3)).max_abs() < tol::INVERSE_ROUND_TRIP);
    }

    #[test]
    fn transpose_solve_and_determinant() {
        let m = Matrix::from_rows(&[[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [4.0, 0.0, 1.0]]).unwrap();
        let lu = Lu::factor(&m).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = lu.solve_transpose(&b);
        let back = m.transpose().mul_vec(&x);
        for (u, v) in back.iter().zip(b) {
            assert!((u - v).abs() < 1e-14);
        }
        // cofactor expansion: 2*(3-0) - 1*(1-4) + 0 = 9
        assert!((lu.det() - 9.0).abs() < 1e-13);
        assert!((lu.log_abs_det() - 9.0_f64.ln()).abs() < 1e-14);
    }
}
