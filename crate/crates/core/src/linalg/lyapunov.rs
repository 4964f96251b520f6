use super::{cholesky_upper, Lu, Matrix};
use crate::error::{Error, Result};

/// Solves `A^T H + H A = -2 I` for symmetric positive definite `H`.
///
/// The equation is vectorized into an `n^2 x n^2` linear system and solved
/// with partial pivoting plus one step of iterative refinement. A singular
/// system (`A` and `-A` share an eigenvalue) and an indefinite solution (`A`
/// not Hurwitz) are reported as distinct errors.
pub fn lyapunov_solve(a: &Matrix) -> Result<Matrix> {
    let n = a.dim();
    let size = n * n;
    let mut system = vec![0.0; size * size];
    for i in 0..n {
        for j in 0..n {
            let row = (i * n + j) * size;
            for k in 0..n {
                // (A^T H)_ij = sum_k A_ki H_kj
                system[row + k * n + j] += a[(k, i)];
                // (H A)_ij = sum_k H_ik A_kj
                system[row + i * n + k] += a[(k, j)];
            }
        }
    }
    let rhs: Vec<f64> = (0..size)
        .map(|r| if r / n == r % n { -2.0 } else { 0.0 })
        .collect();

    let lu = Lu::factor_raw(size, system.clone()).map_err(|_| Error::LyapunovNotUnique)?;
    let mut h = lu.solve(&rhs);
    let residual: Vec<f64> = (0..size)
        .map(|r| {
            rhs[r]
                - system[r * size..(r + 1) * size]
                    .iter()
                    .zip(&h)
                    .map(|(c, v)| c * v)
                    .sum::<f64>()
        })
        .collect();
    let correction = lu.solve(&residual);
    h.iter_mut().zip(correction).for_each(|(v, c)| *v += c);

    let h = Matrix::new(n, h)
        .map_err(|_| Error::LyapunovNotUnique)?
        .sym_part();
    cholesky_upper(&h).map_err(|_| Error::NotHurwitz)?;
    Ok(h)
}

/// `||A^T H + H A + 2I||_F`
pub fn lyapunov_residual(a: &Matrix, h: &Matrix) -> f64 {
    let r = &(&a.transpose() * h) + &(h * a);
    (&r + &Matrix::identity(a.dim()).scale(2.0)).frobenius_norm()
}
