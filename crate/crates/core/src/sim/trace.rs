use std::io::{self, Write};

use serde::Serialize;

use super::dopri::{integrate, IntegratorOptions};
use crate::analysis::{cumulative, uniform};
use crate::error::{Error, Result};
use crate::linalg::{lognorm, vector_norm};
use crate::system::{closed_loop_matrix, ControllerSpec, SystemSpec};

/// Sampled closed-loop trajectory with its logarithmic-norm envelope.
///
/// `bound_upper` and `bound_lower` are `||x0|| exp(int mu[A_cl])` and
/// `||x0|| exp(-int mu[-A_cl])` for `A_cl = A + Delta + BK`; they bound
/// `||x(t)||` only when `omega` is absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub norm: String,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub norm_x: Vec<f64>,
    pub mu_cl: Vec<f64>,
    pub bound_upper: Vec<f64>,
    pub bound_lower: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub rejected_steps: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Column names of [`Trace::write_csv`].
    pub fn csv_header(n: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=n).map(|i| format!("x_{i}")));
        h.extend(["norm_x", "mu_cl", "bound_upper", "bound_lower"].map(String::from));
        h
    }

    /// One row per output time, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, Vec::len);
        writeln!(w, "{}", Self::csv_header(n).join(","))?;
        for i in 0..self.len() {
            let mut row = Vec::with_capacity(n + 5);
            row.push(self.times[i]);
            row.extend_from_slice(&self.states[i]);
            row.extend([
                self.norm_x[i],
                self.mu_cl[i],
                self.bound_upper[i],
                self.bound_lower[i],
            ]);
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Output grid of `intervals + 1` evenly spaced times on `[t0, t_end]`.
pub fn output_grid(t0: f64, t_end: f64, intervals: usize) -> Vec<f64> {
    uniform(t0, t_end, intervals.max(1))
}

/// Integrates `x' = [A + Delta + BK] x + omega(x, t)` from `spec.x0` and
/// samples it on `grid`.
pub fn simulate(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    t_end: f64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trace> {
    let n = spec.n;
    let k = &spec.norm;
    if grid.first() != Some(&spec.t0) || grid.last() != Some(&t_end) {
        return Err(Error::InvalidArgument(
            "output grid must start at t0 and end at T".into(),
        ));
    }
    let rhs = |t: f64, x: &[f64], out: &mut [f64]| -> Result<()> {
        // Let the integrator classify blow-up instead of failing inside an expression.
        if x.iter().any(|v| !v.is_finite()) {
            out.fill(f64::NAN);
            return Ok(());
        }
        let m = closed_loop_matrix(spec, ctrl, t, true)?;
        let mx = m.mul_vec(x);
        out.copy_from_slice(&mx);
        if let Some(w) = &spec.omega {
            for (o, v) in out.iter_mut().zip(w.eval_entries(t, Some(x))?) {
                *o += v;
            }
        }
        Ok(())
    };
    let run = integrate(rhs, spec.t0, &spec.x0, t_end, grid, opts).map_err(|e| match e {
        Error::Stiffness {
            t, h_min, steps, ..
        } => Error::Stiffness {
            t,
            h_min,
            steps,
            mu_cl: closed_loop_matrix(spec, ctrl, t, true)
                .and_then(|m| lognorm(&m, k))
                .unwrap_or(f64::NAN),
        },
        other => other,
    })?;

    let mu_cl = grid
        .iter()
        .map(|&t| lognorm(&closed_loop_matrix(spec, ctrl, t, true)?, k))
        .collect::<Result<Vec<_>>>()?;
    let tol = 1e-10 * (grid.len() as f64);
    let (up, _) = cumulative(
        |s| lognorm(&closed_loop_matrix(spec, ctrl, s, true)?, k),
        grid,
        tol,
    )?;
    let (down, _) = cumulative(
        |s| lognorm(&-closed_loop_matrix(spec, ctrl, s, true)?, k),
        grid,
        tol,
    )?;
    let x0_norm = vector_norm(&spec.x0, k)?;
    let norm_x = run
        .states
        .iter()
        .map(|x| vector_norm(x, k))
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(run.states.iter().all(|x| x.len() == n));
    Ok(Trace {
        norm: k.name().to_string(),
        times: run.times,
        states: run.states,
        norm_x,
        mu_cl,
        bound_upper: up.iter().map(|j| x0_norm * j.exp()).collect(),
        bound_lower: down.iter().map(|l| x0_norm * (-l).exp()).collect(),
        step_sizes: run.step_sizes,
        rejected_steps: run.rejected_steps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub final_time: f64,
    pub final_norm: f64,
    /// Least-squares slope of `ln ||x(t)||` over the final half; absent when
    /// fewer than two samples there have a positive norm.
    pub decay_rate: Option<f64>,
    /// `||x(t)||` is non-increasing over the final quarter of the trace.
    pub tail_non_increasing: bool,
    pub max_norm: f64,
}

/// True when `norm_x` does not increase on the samples with `a <= t <= b`
/// (relative slack `1e-12` for roundoff).
pub fn non_increasing_on(trace: &Trace, a: f64, b: f64) -> bool {
    let vals: Vec<f64> = trace
        .times
        .iter()
        .zip(&trace.norm_x)
        .filter(|(t, _)| **t >= a && **t <= b)
        .map(|(_, v)| *v)
        .collect();
    vals.windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + f64::MIN_POSITIVE)
}

pub fn convergence_report(trace: &Trace) -> Result<ConvergenceReport> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let t0 = trace.times[0];
    let t_end = *trace.times.last().expect("non-empty");
    let half = t0 + 0.5 * (t_end - t0);
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, v) in trace.times.iter().zip(&trace.norm_x) {
        if *t >= half && *v > 0.0 {
            let y = v.ln();
            sx += t;
            sy += y;
            sxx += t * t;
            sxy += t * y;
            m += 1.0;
        }
    }
    let denom = m * sxx - sx * sx;
    let decay_rate = (m >= 2.0 && denom > 0.0).then(|| (m * sxy - sx * sy) / denom);
    Ok(ConvergenceReport {
        final_time: t_end,
        final_norm: *trace.norm_x.last().expect("non-empty"),
        decay_rate,
        tail_non_increasing: non_increasing_on(trace, t0 + 0.75 * (t_end - t0), t_end),
        max_norm: trace.norm_x.iter().copied().fold(0.0, f64::max),
    })
}
