//! Dormand–Prince 5(4) with PI step control and 4th-order dense output.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th- and 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Consecutive steps at `h_min` before the stiffness guard fires.
pub const STIFF_STEPS: usize = 50;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const BETA: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Local error per step is kept below `tol * (1 + ||y||)`.
    pub tol: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// First trial step; chosen from `h_max` and the interval when absent.
    pub h_init: Option<f64>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            h_min: 1e-9,
            h_max: 0.1,
            h_init: None,
        }
    }
}

impl IntegratorOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.h_min > 0.0
            && self.h_max >= self.h_min
            && self.tol.is_finite()
            && self.h_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "need tol > 0 and 0 < h_min <= h_max (tol = {}, h_min = {}, h_max = {})",
                self.tol, self.h_min, self.h_max
            )))
        }
    }
}

/// States at the requested output times plus step statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step_sizes: Vec<f64>,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

struct Rhs<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>> Rhs<F> {
    fn call(&mut self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.evaluations += 1;
        (self.f)(t, y, out)
    }
}

fn combine(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_grid(t0: f64, t_end: f64, grid: &[f64]) -> Result<()> {
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "end time {t_end} must exceed start time {t0}"
        )));
    }
    let sorted = grid.windows(2).all(|w| w[0] <= w[1]);
    let inside = grid.iter().all(|&t| t >= t0 && t <= t_end);
    if !sorted || !inside {
        return Err(Error::InvalidArgument(
            "output grid must be sorted and lie in [t0, T]".into(),
        ));
    }
    Ok(())
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, returning `y` at each
/// point of `grid` (sorted, within `[t0, t_end]`) by dense output.
///
/// A failed error test at `h_min` is accepted anyway; after
/// [`STIFF_STEPS`] such steps in a row, or on a non-finite state while
/// pinned there, the run aborts with [`Error::Stiffness`] (its `mu_cl`
/// field is NaN here, callers fill it in).
pub fn integrate<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Integration>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    opts.validate()?;
    check_grid(t0, t_end, grid)?;
    let dim = y0.len();
    let mut rhs = Rhs { f, evaluations: 0 };

    let mut out = Integration {
        times: grid.to_vec(),
        states: Vec::with_capacity(grid.len()),
        step_sizes: Vec::new(),
        rejected_steps: 0,
        rhs_evaluations: 0,
    };
    let mut next = 0;
    while next < grid.len() && grid[next] == t0 {
        out.states.push(y0.to_vec());
        next += 1;
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let (mut k2, mut k3, mut k4) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let (mut k5, mut k6, mut k7) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    rhs.call(t, &y, &mut k1)?;

    let span = t_end - t0;
    let mut h = opts
        .h_init
        .unwrap_or_else(|| (1e-3 * span).min(1e-2))
        .clamp(opts.h_min, opts.h_max);
    let mut err_prev: f64 = 1e-4;
    let mut rejected_last = false;
    let mut pinned = 0usize;

    while t < t_end {
        let last = t + h >= t_end || t_end - (t + h) < opts.h_min;
        let h_step = if last { t_end - t } else { h };
        let at_min = h_step <= opts.h_min * (1.0 + 1e-12) && !last;

        combine(&mut stage, &y, h_step, &[(A21, &k1)]);
        rhs.call(t + C2 * h_step, &stage, &mut k2)?;
        combine(&mut stage, &y, h_step, &[(A31, &k1), (A32, &k2)]);
        rhs.call(t + C3 * h_step, &stage, &mut k3)?;
        combine(
            &mut stage,
            &y,
            h_step,
            &[(A41, &k1), (A42, &k2), (A43, &k3)],
        );
        rhs.call(t + C4 * h_step, &stage, &mut k4)?;
        combine(
            &mut stage,
            &y,
            h_step,
            &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        );
        rhs.call(t + C5 * h_step, &stage, &mut k5)?;
        combine(
            &mut stage,
            &y,
            h_step,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        rhs.call(t + h_step, &stage, &mut k6)?;
        combine(
            &mut y_new,
            &y,
            h_step,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let finite = y_new.iter().all(|v| v.is_finite());
        if finite {
            rhs.call(t + h_step, &y_new, &mut k7)?;
        }

        let err = if finite {
            let mut e = vec![0.0; dim];
            for i in 0..dim {
                e[i] = h_step
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let scale = opts.tol * (1.0 + l2(&y).max(l2(&y_new)));
            l2(&e) / scale
        } else {
            f64::INFINITY
        };

        let accept = err <= 1.0 || at_min;
        if !accept {
            out.rejected_steps += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).max(FAC_MIN)
            } else {
                FAC_MIN
            };
            h = (h_step * fac.min(1.0)).max(opts.h_min);
            rejected_last = true;
            pinned = 0;
            continue;
        }
        if at_min && err > 1.0 {
            pinned += 1;
        } else {
            pinned = 0;
        }
        if !finite {
            return Err(if at_min {
                Error::Stiffness {
                    t,
                    h_min: opts.h_min,
                    steps: pinned,
                    mu_cl: f64::NAN,
                }
            } else {
                Error::NonFiniteState { t: t + h_step }
            });
        }
        if pinned >= STIFF_STEPS {
            return Err(Error::Stiffness {
                t: t + h_step,
                h_min: opts.h_min,
                steps: pinned,
                mu_cl: f64::NAN,
            });
        }

        let t_new = if last { t_end } else { t + h_step };
        while next < grid.len() && grid[next] <= t_new {
            let theta = (grid[next] - t) / h_step;
            out.states.push(dense(
                theta,
                h_step,
                &y,
                &y_new,
                [&k1, &k3, &k4, &k5, &k6, &k7],
            ));
            next += 1;
        }
        out.step_sizes.push(h_step);

        t = t_new;
        std::mem::swap(&mut y, &mut y_new);
        std::mem::swap(&mut k1, &mut k7);

        let err_c = err.max(1e-10);
        let mut fac = SAFETY * err_c.powf(-0.2 + 0.75 * BETA) * err_prev.powf(BETA);
        fac = fac.clamp(FAC_MIN, FAC_MAX);
        if rejected_last {
            fac = fac.min(1.0);
        }
        err_prev = err_c;
        rejected_last = false;
        h = (h_step * fac).clamp(opts.h_min, opts.h_max);
    }
    while next < grid.len() {
        out.states.push(y.clone());
        next += 1;
    }
    out.rhs_evaluations = rhs.evaluations;
    Ok(out)
}

fn dense(theta: f64, h: f64, y0: &[f64], y1: &[f64], k: [&Vec<f64>; 6]) -> Vec<f64> {
    let [k1, k3, k4, k5, k6, k7] = k;
    let theta = theta.clamp(0.0, 1.0);
    let one_minus = 1.0 - theta;
    (0..y0.len())
        .map(|i| {
            let r2 = y1[i] - y0[i];
            let r3 = h * k1[i] - r2;
            let r4 = r2 - h * k7[i] - r3;
            let r5 =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            y0[i] + theta * (r2 + one_minus * (r3 + theta * (r4 + one_minus * r5)))
        })
        .collect()
}

/// The 5th-order Dormand–Prince formula with `steps` equal steps and no
/// error control, for order studies.
pub fn integrate_fixed<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if steps == 0 || !(t_end > t0) {
        return Err(Error::InvalidArgument(
            "need steps > 0 and t_end > t0".into(),
        ));
    }
    let dim = y0.len();
    let h = (t_end - t0) / steps as f64;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 6];
    let mut stage = vec![0.0; dim];
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        f(t, &y, &mut k[0])?;
        let rows: [(f64, &[f64]); 5] = [
            (C2, &[A21]),
            (C3, &[A31, A32]),
            (C4, &[A41, A42, A43]),
            (C5, &[A51, A52, A53, A54]),
            (1.0, &[A61, A62, A63, A64, A65]),
        ];
        for (r, (c, a)) in rows.iter().enumerate() {
            for i in 0..dim {
                stage[i] = y[i]
                    + h * a
                        .iter()
                        .enumerate()
                        .map(|(j, aj)| aj * k[j][i])
                        .sum::<f64>();
            }
            f(t + c * h, &stage, &mut k[r + 1])?;
        }
        for i in 0..dim {
            y[i] +=
                h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = -y[0];
        out[1] = -2.0 * y[1];
        Ok(())
    }

    #[test]
    fn exponential_decay_on_grid() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let r = integrate(
            decay,
            0.0,
            &[1.0, 1.0],
            1.0,
            &grid,
            &IntegratorOptions::default(),
        )
        .unwrap();
        for (t, y) in r.times.iter().zip(&r.states) {
            assert!((y[0] - (-t).exp()).abs() < 1e-8, "t = {t}");
            assert!((y[1] - (-2.0 * t).exp()).abs() < 1e-8, "t = {t}");
        }
        assert_eq!(r.states.len(), 21);
    }

    #[test]
    fn rotation_keeps_norm() {
        let grid = [std::f64::consts::FRAC_PI_2];
        let r = integrate(
            |_, y, o| {
                o[0] = y[1];
                o[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            std::f64::consts::FRAC_PI_2,
            &grid,
            &IntegratorOptions::default(),
        )
        .unwrap();
        let y = &r.states[0];
        assert!(y[0].abs() < 1e-8 && (y[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let f = |t: f64, y: &[f64], o: &mut [f64]| {
            o[0] = t.sin() * y[1];
            o[1] = -y[0] - 0.1 * y[1];
            Ok(())
        };
        let a = integrate(
            f,
            0.0,
            &[1.0, 0.5],
            3.0,
            &grid,
            &IntegratorOptions::default(),
        )
        .unwrap();
        let b = integrate(
            f,
            0.0,
            &[1.0, 0.5],
            3.0,
            &grid,
            &IntegratorOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stiffness_guard_fires() {
        let opts = IntegratorOptions {
            h_min: 1e-2,
            h_max: 1e-2,
            ..Default::default()
        };
        let err = integrate(
            |_, y, o| {
                o[0] = -1e4 * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            10.0,
            &[10.0],
            &opts,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Stiffness { steps, .. } if steps <= STIFF_STEPS),
            "{err}"
        );
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let exact = (-1.0f64).exp();
        let e1 = (integrate_fixed(decay, 0.0, &[1.0, 1.0], 1.0, 10).unwrap()[0] - exact).abs();
        let e2 = (integrate_fixed(decay, 0.0, &[1.0, 1.0], 1.0, 20).unwrap()[0] - exact).abs();
        assert!(
            (e1 / e2).log2() > 4.5,
            "observed order {}",
            (e1 / e2).log2()
        );
    }

    #[test]
    fn rejects_bad_grid() {
        let opts = IntegratorOptions::default();
        assert!(integrate(decay, 0.0, &[1.0, 1.0], 1.0, &[0.5, 0.2], &opts).is_err());
        assert!(integrate(decay, 0.0, &[1.0, 1.0], 1.0, &[2.0], &opts).is_err());
        assert!(integrate(decay, 1.0, &[1.0, 1.0], 1.0, &[1.0], &opts).is_err());
    }
}
