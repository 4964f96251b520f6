use super::{tol, Matrix};
use crate::error::{Error, Result};

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
///
/// Inputs within [`tol::SYMMETRY`] (relative to the largest entry) of symmetric
/// are symmetrized first; anything further off is rejected.
pub fn symmetric_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    let n = s.dim();
    let asymmetry = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .fold(0.0_f64, |acc, (i, j)| {
            acc.max((s[(i, j)] - s[(j, i)]).abs())
        });
    if asymmetry > tol::SYMMETRY * s.max_abs() {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let mut a = s.sym_part();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let threshold = tol::JACOBI_OFF_DIAGONAL * scale;

    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    if off_diagonal_norm(&a) <= threshold {
        let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eig.sort_by(f64::total_cmp);
        return Ok(eig);
    }
    Err(Error::NoConvergence {
        sweeps: tol::JACOBI_MAX_SWEEPS,
    })
}

/// Largest eigenvalue of a symmetric matrix.
pub fn symmetric_eigen_max(s: &Matrix) -> Result<f64> {
    let eig = symmetric_eigenvalues(s)?;
    Ok(*eig.last().expect("dimension is at least 1"))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Annihilates `a[p][q]` with one Jacobi rotation, keeping `a` symmetric.
fn rotate(a: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for r in 0..a.dim() {
        if r == p || r == q {
            continue;
        }
        let g = a[(r, p)];
        let h = a[(r, q)];
        let rp = g - s * (h + g * tau);
        let rq = h + s * (g - h * tau);
        a[(r, p)] = rp;
        a[(p, r)] = rp;
        a[(r, q)] = rq;
        a[(q, r)] = rq;
    }
}
