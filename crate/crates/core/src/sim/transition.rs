use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dopri::{integrate, IntegratorOptions};
use crate::analysis::{adaptive_simpson, cumulative};
use crate::error::{Error, Result};
use crate::linalg::{induced_norm, lognorm, vector_norm, Lu, Matrix, NormKind};

/// Samples of the fundamental matrix of `Phi' = F(t) Phi`, `Phi(t0) = I`.
///
/// Each interval between stored times is integrated from the identity, so
/// `segments[k] = Phi(t_{k+1}) Phi(t_k)^-1` carries the integrator's
/// accuracy relative to its own size even when `Phi` itself has decayed by
/// many orders of magnitude. `phi` and `log_det` are the running products.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTrace {
    pub times: Vec<f64>,
    pub phi: Vec<Matrix>,
    pub segments: Vec<Matrix>,
    /// `ln|det Phi(t_k)|`, summed over the segments.
    pub log_det: Vec<f64>,
    pub tol: f64,
}

/// Integrates the `n^2`-dimensional matrix equation with the same
/// integrator contract as the state simulation, restarting from `I` at
/// every stored time.
pub fn fundamental_matrix<F>(
    mut f: F,
    n: usize,
    t0: f64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<TransitionTrace>
where
    F: FnMut(f64) -> Result<Matrix>,
{
    if grid.first() != Some(&t0) {
        return Err(Error::InvalidArgument(
            "output grid must start at t0".into(),
        ));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "output grid needs at least two strictly increasing times".into(),
        ));
    }
    let identity = Matrix::identity(n);
    let mut phi = vec![identity.clone()];
    let mut segments = Vec::with_capacity(grid.len() - 1);
    let mut log_det = vec![0.0];
    for w in grid.windows(2) {
        let rhs = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
            if y.iter().any(|v| !v.is_finite()) {
                out.fill(f64::NAN);
                return Ok(());
            }
            let m = f(t)?;
            if m.dim() != n {
                return Err(Error::Dimension(format!(
                    "expected {n}x{n}, got {0}x{0}",
                    m.dim()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = (0..n).map(|k| m[(i, k)] * y[k * n + j]).sum();
                }
            }
            Ok(())
        };
        let run = integrate(rhs, w[0], identity.as_slice(), w[1], &w[1..], opts)?;
        let seg = Matrix::new(n, run.states.into_iter().next().expect("one output time"))?;
        let ld = match Lu::factor(&seg) {
            Ok(lu) => lu.log_abs_det(),
            Err(_) => {
                let liouville = adaptive_simpson(|s| Ok(f(s)?.trace()), t0, w[1], 1e-9)?.value;
                return Err(Error::SingularTransition {
                    t: w[1],
                    log_det: f64::NEG_INFINITY,
                    liouville,
                });
            }
        };
        log_det.push(log_det.last().expect("non-empty") + ld);
        phi.push(&seg * phi.last().expect("non-empty"));
        segments.push(seg);
    }
    Ok(TransitionTrace {
        times: grid.to_vec(),
        phi,
        segments,
        log_det,
        tol: opts.tol,
    })
}

/// `Phi(t) Phi(tau)^-1` for stored indices `i_tau <= i_t`, as the product
/// of the segment maps in between (no inverse is formed).
pub fn transition_between(tt: &TransitionTrace, i_tau: usize, i_t: usize) -> Result<Matrix> {
    if i_tau > i_t || i_t >= tt.times.len() {
        return Err(Error::InvalidArgument(format!(
            "need i_tau <= i_t < {}, got {i_tau} and {i_t}",
            tt.times.len()
        )));
    }
    let n = tt.phi[0].dim();
    Ok(tt.segments[i_tau..i_t]
        .iter()
        .fold(Matrix::identity(n), |acc, s| s * &acc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichPair {
    pub tau: f64,
    pub t: f64,
    pub norm: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub norm: String,
    pub slack: f64,
    pub pairs: Vec<SandwichPair>,
    /// `max ln(||Phi(t) Phi(tau)^-1|| / upper)`; at most `ln(slack)` when the bound holds.
    pub worst_upper_margin: f64,
    /// `max ln(lower / ||Phi(t) Phi(tau)^-1||)`.
    pub worst_lower_margin: f64,
    /// Same margins for `||x(t)||` against `||x(t0)||` times the exponential bounds.
    pub p4_worst_upper_margin: f64,
    pub p4_worst_lower_margin: f64,
    /// `max |ln|det Phi(t)| - int trace F|` over the stored times.
    pub liouville_max_error: f64,
    /// `max ||X Phi(tau) - Phi(t)|| / ||Phi(t)||` (max-entry norms) over the pairs.
    pub composition_residual: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichOptions {
    pub pairs_from_t0: usize,
    pub random_pairs: usize,
    pub seed: u64,
    /// Quadrature tolerance for the `mu` integrals.
    pub quad_tol: f64,
    /// Multiplicative slack is `1 + base_slack + budget_factor * integrator tol`.
    pub base_slack: f64,
    pub budget_factor: f64,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        Self {
            pairs_from_t0: 5,
            random_pairs: 15,
            seed: 0x5a4d_5749,
            quad_tol: 1e-9,
            base_slack: 1e-6,
            budget_factor: 1e3,
        }
    }
}

/// Checks
///
/// ```text
/// exp(-int_tau^t mu[-F]) <= ||Phi(t) Phi(tau)^-1|| <= exp(int_tau^t mu[F])
/// ```
///
/// on sampled pairs `tau < t` of the stored times, the matching bounds on
/// `||x(t)|| = ||Phi(t) x0||` for a random `x0`, and the Liouville identity.
pub fn verify_sandwich<F>(
    tt: &TransitionTrace,
    mut f: F,
    k: &NormKind,
    opts: &SandwichOptions,
) -> Result<SandwichReport>
where
    F: FnMut(f64) -> Result<Matrix>,
{
    let m = tt.times.len();
    if m < 2 {
        return Err(Error::InvalidArgument(
            "need at least two stored times".into(),
        ));
    }
    let n = tt.phi[0].dim();
    let (up, _) = cumulative(|s| lognorm(&f(s)?, k), &tt.times, opts.quad_tol)?;
    let (down, _) = cumulative(|s| lognorm(&-f(s)?, k), &tt.times, opts.quad_tol)?;
    let (tr, _) = cumulative(|s| Ok(f(s)?.trace()), &tt.times, opts.quad_tol)?;
    let slack = 1.0 + opts.base_slack + opts.budget_factor * tt.tol;

    let liouville_max_error = tt
        .log_det
        .iter()
        .zip(&tr)
        .map(|(l, t)| (l - t).abs())
        .fold(0.0_f64, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut idx: Vec<(usize, usize)> = Vec::new();
    for q in 1..=opts.pairs_from_t0 {
        idx.push((0, (q * (m - 1)).div_ceil(opts.pairs_from_t0)));
    }
    for _ in 0..opts.random_pairs {
        let a = rng.random_range(0..m - 1);
        let b = rng.random_range(a + 1..m);
        idx.push((a, b));
    }

    let mut pairs = Vec::with_capacity(idx.len());
    let mut worst_upper = f64::NEG_INFINITY;
    let mut worst_lower = f64::NEG_INFINITY;
    let mut composition_residual = 0.0_f64;
    for (a, b) in idx {
        let x = transition_between(tt, a, b)?;
        // the composition must reproduce the stored running product
        let scale = tt.phi[b].max_abs().max(f64::MIN_POSITIVE);
        composition_residual =
            composition_residual.max((&(&x * &tt.phi[a]) - &tt.phi[b]).max_abs() / scale);
        let norm = induced_norm(&x, k)?;
        let upper = (up[b] - up[a]).exp();
        let lower = (-(down[b] - down[a])).exp();
        worst_upper = worst_upper.max((norm / upper).ln());
        worst_lower = worst_lower.max((lower / norm).ln());
        pairs.push(SandwichPair {
            tau: tt.times[a],
            t: tt.times[b],
            norm,
            lower,
            upper,
        });
    }

    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x0_norm = vector_norm(&x0, k)?;
    let mut p4_upper = f64::NEG_INFINITY;
    let mut p4_lower = f64::NEG_INFINITY;
    for i in 1..m {
        let xn = vector_norm(&tt.phi[i].mul_vec(&x0), k)?;
        p4_upper = p4_upper.max((xn / (x0_norm * up[i].exp())).ln());
        p4_lower = p4_lower.max((x0_norm * (-down[i]).exp() / xn).ln());
    }

    let ln_slack = slack.ln();
    let holds = worst_upper <= ln_slack
        && worst_lower <= ln_slack
        && p4_upper <= ln_slack
        && p4_lower <= ln_slack;
    Ok(SandwichReport {
        norm: k.name().to_string(),
        slack,
        pairs,
        worst_upper_margin: worst_upper,
        worst_lower_margin: worst_lower,
        p4_worst_upper_margin: p4_upper,
        p4_worst_lower_margin: p4_lower,
        liouville_max_error,
        composition_residual,
        holds,
    })
}
