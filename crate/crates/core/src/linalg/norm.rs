use std::fmt;
use std::str::FromStr;

use super::{invert, symmetric_eigen_max, tol, Matrix};
use crate::error::{Error, Result};

/// Vector norm on `R^n`; matrices use the induced operator norm.
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    One,
    Two,
    Inf,
    /// `||x||_H = (x^T H x)^(1/2)` for symmetric positive definite `H`.
    Weighted(WeightedNorm),
}

/// Weight matrix `H` together with its factor `H = L^T L` (`L` upper triangular).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNorm {
    h: Matrix,
    l: Matrix,
    l_inv: Matrix,
}

impl WeightedNorm {
    pub fn new(h: Matrix) -> Result<Self> {
        let l = cholesky_upper(&h)?;
        let l_inv = invert(&l)?;
        Ok(Self { h, l, l_inv })
    }

    pub fn weight(&self) -> &Matrix {
        &self.h
    }

    /// `L M L^-1`; the weighted norm of `M` is the Euclidean norm of this matrix.
    fn similar(&self, m: &Matrix) -> Result<Matrix> {
        if m.dim() != self.h.dim() {
            return Err(Error::Dimension(format!(
                "weight is {0}x{0}, matrix is {1}x{1}",
                self.h.dim(),
                m.dim()
            )));
        }
        Ok(&(&self.l * m) * &self.l_inv)
    }
}

impl NormKind {
    pub fn weighted(h: Matrix) -> Result<Self> {
        WeightedNorm::new(h).map(NormKind::Weighted)
    }

    pub fn name(&self) -> &'static str {
        match self {
            NormKind::One => "one",
            NormKind::Two => "two",
            NormKind::Inf => "inf",
            NormKind::Weighted(_) => "weighted",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(NormKind::One),
            "two" | "2" => Ok(NormKind::Two),
            "inf" | "infinity" => Ok(NormKind::Inf),
            other => Err(Error::InvalidArgument(format!(
                "unknown norm '{other}' (expected one, two or inf)"
            ))),
        }
    }
}

/// Upper-triangular `L` with `H = L^T L`. Fails unless `H` is symmetric positive definite.
pub fn cholesky_upper(h: &Matrix) -> Result<Matrix> {
    let n = h.dim();
    for i in 0..n {
        for j in 0..i {
            if (h[(i, j)] - h[(j, i)]).abs() > tol::SYMMETRY * h.max_abs() {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    // Lower factor G with H = G G^T; L = G^T.
    let mut g = Matrix::zeros(n);
    for j in 0..n {
        let d = h[(j, j)] - (0..j).map(|k| g[(j, k)] * g[(j, k)]).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let gjj = d.sqrt();
        g[(j, j)] = gjj;
        for i in j + 1..n {
            let s = h[(i, j)] - (0..j).map(|k| g[(i, k)] * g[(j, k)]).sum::<f64>();
            g[(i, j)] = s / gjj;
        }
    }
    Ok(g.transpose())
}

pub fn vector_norm(x: &[f64], k: &NormKind) -> Result<f64> {
    Ok(match k {
        NormKind::One => x.iter().map(|v| v.abs()).sum(),
        NormKind::Two => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Inf => x.iter().fold(0.0, |acc, v| acc.max(v.abs())),
        NormKind::Weighted(w) => {
            if x.len() != w.h.dim() {
                return Err(Error::Dimension(format!(
                    "vector has length {}, weight is {}x{}",
                    x.len(),
                    w.h.dim(),
                    w.h.dim()
                )));
            }
            w.l.mul_vec(x).iter().map(|v| v * v).sum::<f64>().sqrt()
        }
    })
}

/// Operator norm induced by `k`.
pub fn induced_norm(m: &Matrix, k: &NormKind) -> Result<f64> {
    let n = m.dim();
    match k {
        NormKind::One => Ok((0..n)
            .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)),
        NormKind::Inf => Ok((0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)),
        NormKind::Two => spectral_norm(m),
        NormKind::Weighted(w) => spectral_norm(&w.similar(m)?),
    }
}

fn spectral_norm(m: &Matrix) -> Result<f64> {
    let gram = &m.transpose() * m;
    Ok(symmetric_eigen_max(&gram)?.max(0.0).sqrt())
}

/// Logarithmic norm `mu[M]` for the vector norm `k`.
pub fn lognorm(m: &Matrix, k: &NormKind) -> Result<f64> {
    let n = m.dim();
    match k {
        NormKind::One => Ok((0..n)
            .map(|j| {
                m[(j, j)]
                    + (0..n)
                        .filter(|&i| i != j)
                        .map(|i| m[(i, j)].abs())
                        .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)),
        NormKind::Inf => Ok((0..n)
            .map(|i| {
                m[(i, i)]
                    + (0..n)
                        .filter(|&j| j != i)
                        .map(|j| m[(i, j)].abs())
                        .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)),
        NormKind::Two => euclidean_lognorm(m),
        NormKind::Weighted(w) => euclidean_lognorm(&w.similar(m)?),
    }
}

fn euclidean_lognorm(m: &Matrix) -> Result<f64> {
    let s = m + &m.transpose();
    Ok(0.5 * symmetric_eigen_max(&s)?)
}

/// `(||I + hM|| - 1) / h`, the difference quotient whose limit defines `mu[M]`.
///
/// `||I + hM|| - 1` is formed without cancellation against the leading 1:
/// entrywise `|1 + x| - 1` for the column and row sums, and
/// `sqrt(1 + h s) - 1 = h s / (1 + sqrt(1 + h s))` with
/// `s = lambda_max(M + M^T + h M^T M)` for the spectral norm.
pub fn lognorm_limit_oracle(m: &Matrix, k: &NormKind, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step h must be positive, got {h}"
        )));
    }
    let n = m.dim();
    let abs_minus_one = |x: f64| if 1.0 + x >= 0.0 { x } else { -2.0 - x };
    let line = |j: usize, entry: &dyn Fn(usize) -> f64| {
        abs_minus_one(h * entry(j))
            + (0..n)
                .filter(|&i| i != j)
                .map(|i| h * entry(i).abs())
                .sum::<f64>()
    };
    let excess = match k {
        NormKind::One => (0..n)
            .map(|j| line(j, &|i| m[(i, j)]))
            .fold(f64::NEG_INFINITY, f64::max),
        NormKind::Inf => (0..n)
            .map(|i| line(i, &|j| m[(i, j)]))
            .fold(f64::NEG_INFINITY, f64::max),
        NormKind::Two => spectral_excess(m, h)?,
        NormKind::Weighted(w) => spectral_excess(&w.similar(m)?, h)?,
    };
    Ok(excess / h)
}

fn spectral_excess(m: &Matrix, h: f64) -> Result<f64> {
    // (I + hM)^T (I + hM) = I + h S
    let s = &(m + &m.transpose()) + &(&m.transpose() * m).scale(h);
    let hs = h * symmetric_eigen_max(&s)?;
    Ok(hs / (1.0 + (1.0 + hs).max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn vector_norms() {
        let x = [3.0, -4.0];
        assert_eq!(vector_norm(&x, &NormKind::One).unwrap(), 7.0);
        assert_eq!(vector_norm(&x, &NormKind::Two).unwrap(), 5.0);
        assert_eq!(vector_norm(&x, &NormKind::Inf).unwrap(), 4.0);
        let w = NormKind::weighted(Matrix::diag(&[4.0, 1.0])).unwrap();
        // sqrt(4*9 + 16)
        assert!((vector_norm(&x, &w).unwrap() - 52.0_f64.sqrt()).abs() < 1e-14);
        assert!(vector_norm(&[1.0, 2.0, 3.0], &w).is_err());
    }

    #[test]
    fn induced_norms() {
        for k in [NormKind::One, NormKind::Two, NormKind::Inf] {
            assert!((induced_norm(&Matrix::identity(2), &k).unwrap() - 1.0).abs() < 1e-15);
        }
        let nil = m(&[[0.0, 2.0], [0.0, 0.0]]);
        assert_eq!(induced_norm(&nil, &NormKind::One).unwrap(), 2.0);
        assert_eq!(induced_norm(&nil, &NormKind::Inf).unwrap(), 2.0);
        assert!((induced_norm(&nil, &NormKind::Two).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn table_values() {
        let a1 = m(&[[-11.0, 10.0], [2.0, -3.0]]);
        let a2 = m(&[[-11.0, 2.0], [10.0, -3.0]]);
        let a3 = m(&[[-1.0, 3.0], [-3.0, -2.0]]);
        assert_eq!(lognorm(&a1, &NormKind::One).unwrap(), 7.0);
        assert_eq!(lognorm(&a1, &NormKind::Inf).unwrap(), -1.0);
        assert_eq!(lognorm(&a2, &NormKind::One).unwrap(), -1.0);
        assert_eq!(lognorm(&a2, &NormKind::Inf).unwrap(), 7.0);
        assert_eq!(lognorm(&a3, &NormKind::One).unwrap(), 2.0);
        assert_eq!(lognorm(&a3, &NormKind::Inf).unwrap(), 2.0);
        assert!((lognorm(&a1, &NormKind::Two).unwrap() - 0.211).abs() < 1e-3);
        assert!((lognorm(&a2, &NormKind::Two).unwrap() - 0.211).abs() < 1e-3);
        assert!((lognorm(&a3, &NormKind::Two).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_has_unit_lognorm() {
        let w = NormKind::weighted(m(&[[2.0, 0.5], [0.5, 1.0]])).unwrap();
        for k in [NormKind::One, NormKind::Two, NormKind::Inf, w] {
            assert!((lognorm(&Matrix::identity(2), &k).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn limit_oracle_examples() {
        let zero = Matrix::zeros(2);
        assert_eq!(
            lognorm_limit_oracle(&zero, &NormKind::Two, 1e-6).unwrap(),
            0.0
        );
        let a3 = m(&[[-1.0, 3.0], [-3.0, -2.0]]);
        assert!((lognorm_limit_oracle(&a3, &NormKind::Two, 1e-7).unwrap() + 1.0).abs() < 1e-5);
        let a1 = m(&[[-11.0, 10.0], [2.0, -3.0]]);
        assert!((lognorm_limit_oracle(&a1, &NormKind::One, 1e-7).unwrap() - 7.0).abs() < 1e-5);
        assert!(lognorm_limit_oracle(&a1, &NormKind::One, 0.0).is_err());
    }

    #[test]
    fn weighted_requires_spd() {
        assert!(matches!(
            NormKind::weighted(m(&[[1.0, 2.0], [2.0, 1.0]])),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            NormKind::weighted(m(&[[1.0, 0.5], [0.0, 1.0]])),
            Err(Error::NotPositiveDefinite)
        ));
        let l = cholesky_upper(&m(&[[4.0, 2.0], [2.0, 3.0]])).unwrap();
        let back = &l.transpose() * &l;
        assert!((back[(0, 1)] - 2.0).abs() < 1e-15 && (back[(1, 1)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn parse_norm_names() {
        assert_eq!("inf".parse::<NormKind>().unwrap(), NormKind::Inf);
        assert!("frobenius".parse::<NormKind>().is_err());
    }
}
