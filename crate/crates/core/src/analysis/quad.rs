use serde::Serialize;

use crate::error::Result;
use crate::linalg::{lognorm, Matrix, NormKind};

/// Recursion limit for adaptive Simpson.
pub const MAX_DEPTH: u32 = 40;
/// Every interval is split at least this many times before a panel may be accepted.
const MIN_DEPTH: u32 = 3;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub est_error: f64,
    pub evaluations: usize,
    pub subdivisions: usize,
    /// Some panel hit [`MAX_DEPTH`] before meeting its tolerance; the value is partial.
    pub depth_exceeded: bool,
}

impl QuadResult {
    fn zero() -> Self {
        Self {
            value: 0.0,
            est_error: 0.0,
            evaluations: 0,
            subdivisions: 0,
            depth_exceeded: false,
        }
    }
}

struct Simpson<F> {
    f: F,
    evaluations: usize,
    subdivisions: usize,
    depth_exceeded: bool,
}

impl<F: FnMut(f64) -> Result<f64>> Simpson<F> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        self.evaluations += 1;
        (self.f)(t)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<(f64, f64)> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        let est = delta.abs() / 15.0;
        // Below roundoff the panel cannot be refined further.
        let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        let unsplittable = lm <= a || rm >= b || m <= lm || m >= rm;
        if depth >= MIN_DEPTH && (est <= tol || est <= floor) || unsplittable {
            return Ok((left + right + delta / 15.0, est));
        }
        if depth >= MAX_DEPTH {
            self.depth_exceeded = true;
            return Ok((left + right + delta / 15.0, est));
        }
        self.subdivisions += 1;
        let (lv, le) = self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
        let (rv, re) = self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
        Ok((lv + rv, le + re))
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with Richardson correction.
///
/// The returned `est_error` is the sum of the per-panel estimates
/// `|S2 - S1| / 15`; panels split deterministically at their midpoints.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a <= b) || !(tol > 0.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "quadrature needs a <= b and tol > 0 (a = {a}, b = {b}, tol = {tol})"
        )));
    }
    if a == b {
        return Ok(QuadResult::zero());
    }
    let mut s = Simpson {
        f,
        evaluations: 0,
        subdivisions: 0,
        depth_exceeded: false,
    };
    let fa = s.eval(a)?;
    let fb = s.eval(b)?;
    let m = 0.5 * (a + b);
    let fm = s.eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let (value, est_error) = s.recurse(a, b, fa, fm, fb, whole, tol, 0)?;
    Ok(QuadResult {
        value,
        est_error,
        evaluations: s.evaluations,
        subdivisions: s.subdivisions,
        depth_exceeded: s.depth_exceeded,
    })
}

/// `int_a^b mu[F(s)] ds` for the vector norm `k`.
pub fn integrate_mu<F>(mut f: F, k: &NormKind, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<Matrix>,
{
    adaptive_simpson(|s| lognorm(&f(s)?, k), a, b, tol)
}

/// Running integral of `f` at each grid point (`out[0] = 0`), one adaptive
/// panel per grid interval with the tolerance split evenly.
pub fn cumulative<F>(mut f: F, grid: &[f64], tol: f64) -> Result<(Vec<f64>, bool)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut exceeded = false;
    out.push(0.0);
    let per = tol / (grid.len().max(2) - 1) as f64;
    for w in grid.windows(2) {
        let q = adaptive_simpson(&mut f, w[0], w[1], per)?;
        exceeded |= q.depth_exceeded;
        acc += q.value;
        out.push(acc);
    }
    Ok((out, exceeded))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact() {
        let q = adaptive_simpson(|t| Ok(t * t * t - 2.0 * t + 1.0), -1.0, 2.0, 1e-10).unwrap();
        // [t^4/4 - t^2 + t] from -1 to 2 = 2 - (-1.75) = 3.75
        assert!((q.value - 3.75).abs() < 1e-13);
        assert!(!q.depth_exceeded);
    }

    #[test]
    fn constant_and_zero_matrices() {
        let q = integrate_mu(|_| Ok(Matrix::zeros(2)), &NormKind::Inf, 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(q.value, 0.0);
        let q = integrate_mu(
            |_| Ok(Matrix::diag(&[-1.0, -1.0])),
            &NormKind::Two,
            0.0,
            5.0,
            1e-8,
        )
        .unwrap();
        assert!((q.value + 5.0).abs() < 1e-13);
    }

    #[test]
    fn kink_is_resolved() {
        let q = adaptive_simpson(|t: f64| Ok((t - 1.0 / 3.0).abs()), 0.0, 1.0, 1e-9).unwrap();
        let exact = 0.5 * (1.0 / 9.0 + 4.0 / 9.0);
        assert!((q.value - exact).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(adaptive_simpson(Ok, 1.0, 0.0, 1e-8).is_err());
        assert!(adaptive_simpson(Ok, 0.0, 1.0, 0.0).is_err());
        assert_eq!(adaptive_simpson(Ok, 2.0, 2.0, 1e-8).unwrap().value, 0.0);
    }

    #[test]
    fn depth_limit_is_flagged() {
        // discontinuous integrand with an absurd tolerance
        let q = adaptive_simpson(
            |t: f64| {
                Ok(if t < std::f64::consts::FRAC_1_SQRT_2 {
                    0.0
                } else {
                    1.0
                })
            },
            0.0,
            1.0,
            1e-300,
        )
        .unwrap();
        assert!(q.depth_exceeded || q.est_error > 1e-300);
        assert!((q.value - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-9);
    }

    #[test]
    fn cumulative_matches_whole() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let (c, _) = cumulative(|t: f64| Ok(t.cos()), &grid, 1e-10).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[10] - 3.0_f64.sin()).abs() < 1e-10);
    }
}
