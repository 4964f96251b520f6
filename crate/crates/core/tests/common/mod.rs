//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls into the solvers under test except to build inputs.

#![allow(dead_code)]

use lognorm_core::expr::{BinOp, Expr, Func};
use lognorm_core::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    Matrix::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let m = random_matrix(rng, n, scale);
    Matrix::from_fn(n, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] })
}

pub fn random_skew(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let m = random_matrix(rng, n, scale);
    Matrix::from_fn(n, |i, j| {
        if i < j {
            m[(i, j)]
        } else if i > j {
            -m[(j, i)]
        } else {
            0.0
        }
    })
}

/// Symmetric positive definite `G^T G + shift I`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Matrix {
    let g = random_matrix(rng, n, 1.0);
    &(&g.transpose() * &g) + &Matrix::identity(n).scale(shift)
}

/// Hurwitz by construction: `Q^-1 (W - P) Q` with `W` skew and `P` positive
/// definite has the eigenvalues of `W - P`, whose real parts are negative.
pub fn random_hurwitz(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let w = random_skew(rng, n, 2.0);
    let p = random_spd(rng, n, 0.2);
    let q = &random_matrix(rng, n, 0.3) + &Matrix::identity(n);
    let q_inv = gauss_jordan_inverse(&q).expect("diagonally dominated perturbation of I");
    &(&q_inv * &(&w - &p)) * &q
}

/// Gauss–Jordan with full pivoting, written independently of the crate's LU.
pub fn gauss_jordan_inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.dim();
    let mut a: Vec<Vec<f64>> = m.rows();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    a[r][j] -= f * a[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    Some(Matrix::from_rows(&inv).unwrap())
}

/// Number of eigenvalues of symmetric `s` below `sigma`, by Sylvester's law
/// of inertia on the `LDL^T` pivots of `s - sigma I`.
#[allow(clippy::needless_range_loop)]
pub fn count_below(s: &Matrix, sigma: f64) -> usize {
    let n = s.dim();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| s[(i, j)] - if i == j { sigma } else { 0.0 })
                .collect()
        })
        .collect();
    let mut negatives = 0;
    for k in 0..n {
        let mut d = a[k][k];
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + sigma.abs());
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = a[i][k] / d;
            for j in k + 1..n {
                a[i][j] -= f * a[k][j];
            }
        }
    }
    negatives
}

/// All eigenvalues of symmetric `s`, ascending, by bisection on the inertia count.
pub fn bisection_eigenvalues(s: &Matrix) -> Vec<f64> {
    let n = s.dim();
    let radius = (0..n)
        .map(|i| (0..n).map(|j| s[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (lo0, hi0) = (-radius - 1.0, radius + 1.0);
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(s, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `lambda_max` by power iteration on `s + c I` (shifted to be positive semidefinite).
pub fn power_iteration_max(s: &Matrix, iters: usize) -> f64 {
    let n = s.dim();
    let c = s.max_abs() * n as f64;
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let mut w = s.mul_vec(&v);
        for i in 0..n {
            w[i] += c * v[i];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rayleigh: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        lambda = rayleigh - c;
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda
}

/// `mu_2` via the inertia-bisection eigenvalues of `(M + M^T) / 2`.
pub fn mu2_oracle(m: &Matrix) -> f64 {
    let s = Matrix::from_fn(m.dim(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    *bisection_eigenvalues(&s).last().unwrap()
}

/// Composite trapezoid rule on `steps` equal panels.
pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    let inner: f64 = (1..steps).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Classical fixed-step RK4; returns the state at every multiple of
/// `record_every` steps (including the start).
pub fn rk4<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    h: f64,
    steps: usize,
    record_every: usize,
) -> Vec<(f64, Vec<f64>)>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut out = vec![(t0, y.clone())];
    let mut tmp = vec![0.0; n];
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = f(t, &y);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        let k2 = f(t + 0.5 * h, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        let k3 = f(t + 0.5 * h, &tmp);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        let k4 = f(t + h, &tmp);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (s + 1) % record_every == 0 {
            out.push((t0 + (s + 1) as f64 * h, y.clone()));
        }
    }
    out
}

/// Closed loop of the two-state example with the hand-picked gain, written
/// out by hand: `A + Delta + K` with `K = -A_sym + diag(-1, -1) + diag(gamma)`.
pub fn example2_closed_loop(t: f64) -> [[f64; 2]; 2] {
    let root = (t.powi(6) + 1.0).sqrt();
    let g1 = -t * root;
    let g2 = -t.sqrt() * root;
    let skew = 0.5 * (t.sin() - t.sqrt());
    [
        [-1.0 + g1 + 1.0 / (1.0 + t * t), skew + t],
        [-skew - t, -1.0 + g2],
    ]
}

/// Full right-hand side with the disturbance `(t^(11/4) cos x1, 1)`.
pub fn example2_rhs(t: f64, x: &[f64]) -> Vec<f64> {
    let m = example2_closed_loop(t);
    vec![
        m[0][0] * x[0] + m[0][1] * x[1] + t.powf(2.75) * x[0].cos(),
        m[1][0] * x[0] + m[1][1] * x[1] + 1.0,
    ]
}

/// `Gamma(t)` for the example in closed form.
pub fn example2_gamma(t: f64) -> f64 {
    let root = (t.powi(6) + 1.0).sqrt();
    if t <= 1.0 {
        -1.0 - t * root
    } else {
        -1.0 - t.sqrt() * root
    }
}

/// Random expression tree over `t` (and `x1..x{n}` when `n > 0`).
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, n: usize) -> Expr {
    let leaf = depth == 0 || rng.random_range(0..4) == 0;
    if leaf {
        return match rng.random_range(0..4) {
            0 => Expr::t(),
            1 if n > 0 => Expr::x(rng.random_range(1..=n)),
            2 => Expr::num(rng.random_range(0..100) as f64 / 8.0),
            _ => Expr::num(rng.random_range(1..10) as f64),
        };
    }
    match rng.random_range(0..8) {
        0 => Expr::neg(random_expr(rng, depth - 1, n)),
        1 => {
            let funcs = [
                Func::Sin,
                Func::Cos,
                Func::Tan,
                Func::Exp,
                Func::Log,
                Func::Sqrt,
                Func::Abs,
                Func::Pow,
                Func::Min,
                Func::Max,
            ];
            let f = funcs[rng.random_range(0..funcs.len())];
            let args = (0..f.arity())
                .map(|_| random_expr(rng, depth - 1, n))
                .collect();
            Expr::call(f, args)
        }
        k => {
            let op = [
                BinOp::Add,
                BinOp::Sub,
                BinOp::Mul,
                BinOp::Div,
                BinOp::Pow,
                BinOp::Add,
            ][k as usize - 2];
            Expr::binary(
                op,
                random_expr(rng, depth - 1, n),
                random_expr(rng, depth - 1, n),
            )
        }
    }
}
