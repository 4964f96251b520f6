//! Robust adaptive state-feedback gain for the Euclidean norm.
//!
//! ```text
//! K(t) = B^-1 ( -A_sym(t) + diag(lambda) + diag(gamma(t)) )
//!               \_______ adaptive ______/   \__ robust __/
//! ```
//!
//! With this gain `A + BK = A_skew + diag(lambda + gamma)`, whose Euclidean
//! logarithmic norm is `Gamma(t) = max_i (lambda_i + gamma_i(t))`. The
//! adaptive part depends only on `A`, the robust part only on the
//! disturbance envelope, and neither reads the uncertainty `Delta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{adaptive_simpson, ConditionId, EvidenceEntry, Heuristics, Verdict};
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, ExprKind, MatrixFunction, VarSet};
use crate::linalg::{invert, lognorm, NormKind};
use crate::system::{closed_loop_matrix, ControllerSpec, SystemSpec};

/// How the robust part `gamma_i(t)` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaRule {
    Explicit(Vec<Expr>),
    /// `gamma_i(t) = -margin (1 + (t - t0)) (1 + ||omega~(t)||)` for every `i`.
    Auto {
        margin: f64,
    },
}

impl Default for GammaRule {
    fn default() -> Self {
        GammaRule::Auto { margin: 1.0 }
    }
}

/// Number of sample times for the `Gamma = mu_2[A + BK]` self-check.
const IDENTITY_SAMPLES: usize = 32;
const IDENTITY_SEED: u64 = 0x6a6d_6d61;
/// Relative tolerance of that self-check.
pub const IDENTITY_TOL: f64 = 1e-9;

/// `a + b`, written as a subtraction when `b` is a negation or a negative literal.
fn plus(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    if let (Some(x), Some(y)) = (a.as_num(), b.as_num()) {
        return Expr::num(x + y);
    }
    match b.kind {
        ExprKind::Neg(inner) => Expr::sub(a, *inner),
        ExprKind::Num(v) if v < 0.0 => Expr::sub(a, Expr::num(-v)),
        // a + (-u)*v  ->  a - u*v
        ExprKind::Binary(BinOp::Mul, l, r) if matches!(l.kind, ExprKind::Neg(_)) => {
            let ExprKind::Neg(u) = l.kind else {
                unreachable!()
            };
            Expr::sub(a, Expr::mul(*u, *r))
        }
        kind => Expr::add(a, Expr { kind, span: b.span }),
    }
}

fn negate(e: Expr) -> Expr {
    match e.kind {
        ExprKind::Num(v) => Expr::num(-v),
        ExprKind::Neg(inner) => *inner,
        _ => Expr::neg(e),
    }
}

/// Splits a time-dependent matrix function into `(A_sym, A_skew)` with
/// `A_sym = (A + A^T)/2` and `A_skew = (A - A^T)/2`, entrywise as expressions.
pub fn decompose_sym_skew(f: &MatrixFunction) -> Result<(MatrixFunction, MatrixFunction)> {
    if !f.is_square() {
        return Err(Error::Dimension(
            "decomposition needs a square matrix function".into(),
        ));
    }
    let n = f.rows();
    let half = |op: BinOp, i: usize, j: usize| {
        let (a, b) = (f.entry(i, j).clone(), f.entry(j, i).clone());
        if a == b {
            return if op == BinOp::Add { a } else { Expr::num(0.0) };
        }
        Expr::div(Expr::binary(op, a, b), Expr::num(2.0))
    };
    let sym = MatrixFunction::from_fn(n, f.vars(), |i, j| {
        if i == j {
            f.entry(i, i).clone()
        } else {
            half(BinOp::Add, i, j)
        }
    })?;
    let skew = MatrixFunction::from_fn(n, f.vars(), |i, j| {
        if i == j {
            Expr::num(0.0)
        } else {
            half(BinOp::Sub, i, j)
        }
    })?;
    Ok((sym, skew))
}

/// The automatic robust part. With `s = t - t0` the ratio
/// `||omega~|| / |gamma_i|` is at most `1 / (margin (1 + s))`, and
/// `gamma_i <= -margin` makes `int Gamma` diverge.
pub fn auto_gamma(omega_bound: Option<&Expr>, margin: f64, n: usize, t0: f64) -> Result<Vec<Expr>> {
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(Error::Controller(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let elapsed = if t0 == 0.0 {
        Expr::t()
    } else {
        Expr::sub(Expr::t(), Expr::num(t0))
    };
    let mut growth = Expr::add(Expr::num(1.0), elapsed);
    if let Some(w) = omega_bound {
        let envelope = Expr::call(crate::expr::Func::Abs, vec![w.clone()]);
        growth = Expr::mul(growth, Expr::add(Expr::num(1.0), envelope));
    }
    Ok(vec![Expr::scaled(-margin, growth); n])
}

/// Builds the gain `K(t) = B^-1 (-A_sym + diag(lambda) + diag(gamma))`.
pub fn synthesize(spec: &SystemSpec, lambda: &[f64], rule: &GammaRule) -> Result<ControllerSpec> {
    let n = spec.n;
    let b_inv = invert(&spec.b).map_err(|_| Error::Controller("B not invertible".into()))?;
    if lambda.len() != n {
        return Err(Error::Controller(format!(
            "expected {n} lambda values, got {}",
            lambda.len()
        )));
    }
    if let Some(l) = lambda.iter().find(|l| !(**l < 0.0) || !l.is_finite()) {
        return Err(Error::Controller(format!(
            "every lambda must be a negative real number, got {l}"
        )));
    }
    let gamma = match rule {
        GammaRule::Explicit(g) => {
            if g.len() != n {
                return Err(Error::Controller(format!(
                    "expected {n} gamma expressions, got {}",
                    g.len()
                )));
            }
            if g.iter().any(|e| !e.vars().is_subset_of(&VarSet::time())) {
                return Err(Error::Controller("gamma may depend on t only".into()));
            }
            g.clone()
        }
        GammaRule::Auto { margin } => auto_gamma(spec.omega_bound.as_ref(), *margin, n, spec.t0)?,
    };

    let (a_sym, _) = decompose_sym_skew(&spec.a)?;
    let adaptive = MatrixFunction::from_fn(n, VarSet::time(), |i, j| {
        let m = negate(a_sym.entry(i, j).clone());
        if i == j {
            plus(m, Expr::num(lambda[i]))
        } else {
            m
        }
    })?;
    let robust = MatrixFunction::from_fn(n, VarSet::time(), |i, j| {
        if i == j {
            gamma[i].clone()
        } else {
            Expr::num(0.0)
        }
    })?;
    let combined = |k: usize, j: usize| {
        let a = adaptive.entry(k, j).clone();
        if k == j {
            plus(a, robust.entry(k, j).clone())
        } else {
            a
        }
    };
    let k = MatrixFunction::from_fn(n, VarSet::time(), |i, j| {
        (0..n)
            .filter(|&m| b_inv[(i, m)] != 0.0)
            .map(|m| Expr::scaled(b_inv[(i, m)], combined(m, j)))
            .fold(Expr::num(0.0), plus)
    })?;

    Ok(ControllerSpec {
        lambda: lambda.to_vec(),
        gamma,
        b_inv,
        adaptive: Some(adaptive),
        robust: Some(robust),
        k,
    })
}

fn sample_times(t0: f64, t_end: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(IDENTITY_SEED);
    let mut ts: Vec<f64> = (0..IDENTITY_SAMPLES)
        .map(|_| rng.random_range(t0..=t_end))
        .collect();
    ts[0] = t0;
    ts
}

fn require_synthesized(ctrl: &ControllerSpec) -> Result<()> {
    if ctrl.is_open_loop() {
        Err(Error::Controller(
            "the open-loop gain has no lambda/gamma parts".into(),
        ))
    } else {
        Ok(())
    }
}

/// c1: the adaptive part's diagonal shift and the robust part are diagonal
/// (structural check on the stored parts).
pub fn verify_c1(spec: &SystemSpec, ctrl: &ControllerSpec, t_end: f64) -> Result<EvidenceEntry> {
    require_synthesized(ctrl)?;
    let robust = ctrl.robust.as_ref().expect("synthesized");
    let off_diagonal = (0..spec.n)
        .flat_map(|i| (0..spec.n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .all(|(i, j)| robust.entry(i, j).is_zero());
    let verdict = if off_diagonal && ctrl.lambda.len() == spec.n {
        Verdict::Supported
    } else {
        Verdict::Refuted
    };
    Ok(EvidenceEntry::new(ConditionId::C1, verdict, [spec.t0, t_end]).with("n", spec.n as f64))
}

/// c2: every `lambda_i < 0` and `||omega~|| / |gamma_i|` decreasing on the
/// geometric tail grid (a finite-horizon reading of `||omega~|| = o(gamma_i)`).
pub fn verify_c2(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    t_end: f64,
    h: &Heuristics,
) -> Result<EvidenceEntry> {
    require_synthesized(ctrl)?;
    let horizon = [spec.t0, t_end];
    if !(t_end > spec.t0) {
        return Err(Error::InvalidArgument("horizon must exceed t0".into()));
    }
    let max_lambda = ctrl
        .lambda
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_lambda < 0.0) {
        return Ok(
            EvidenceEntry::new(ConditionId::C2, Verdict::Refuted, horizon)
                .with("max_lambda", max_lambda),
        );
    }
    let lo = spec.t0 + 0.25 * (t_end - spec.t0);
    let grid = h.geometric_grid(lo, t_end);
    let mut worst_first = 0.0_f64;
    let mut worst_last = 0.0_f64;
    let mut decreasing = true;
    for g in &ctrl.gamma {
        let mut prev = f64::INFINITY;
        for (idx, &t) in grid.iter().enumerate() {
            let gv = g.eval(t, None)?;
            let r = if gv == 0.0 {
                if spec.omega_envelope(t)? == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                spec.omega_envelope(t)? / gv.abs()
            };
            if r > prev * (1.0 + 1e-12) {
                decreasing = false;
            }
            prev = r;
            if idx == 0 {
                worst_first = worst_first.max(r);
            }
            if idx == grid.len() - 1 {
                worst_last = worst_last.max(r);
            }
        }
    }
    let verdict = if decreasing && worst_last.is_finite() {
        Verdict::Supported
    } else if worst_last > worst_first {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    };
    Ok(EvidenceEntry::new(ConditionId::C2, verdict, horizon)
        .with("max_lambda", max_lambda)
        .with("ratio_first", worst_first)
        .with("ratio_T", worst_last))
}

/// c3: `int Gamma -> -inf` by the doubling heuristic, plus a self-check that
/// `Gamma(t)` equals the Euclidean logarithmic norm of `A + BK` at sampled times.
pub fn verify_c3(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    t_end: f64,
    h: &Heuristics,
) -> Result<EvidenceEntry> {
    require_synthesized(ctrl)?;
    if !(t_end > spec.t0) {
        return Err(Error::InvalidArgument("horizon must exceed t0".into()));
    }
    let horizon = [spec.t0, t_end];
    let gamma_max = |t: f64| -> Result<f64> { Ok(ctrl.gamma_max(t)?.expect("synthesized")) };
    let mid = spec.t0 + 0.5 * (t_end - spec.t0);
    let first = adaptive_simpson(gamma_max, spec.t0, mid, 0.5 * h.tol)?;
    let second = adaptive_simpson(gamma_max, mid, t_end, 0.5 * h.tol)?;
    let (j_half, j_end) = (first.value, first.value + second.value);

    let mut worst = 0.0_f64;
    for t in sample_times(spec.t0, t_end) {
        let g = gamma_max(t)?;
        let mu = lognorm(&closed_loop_matrix(spec, ctrl, t, false)?, &NormKind::Two)?;
        worst = worst.max((mu - g).abs() / g.abs().max(1.0));
    }
    let mut entry = EvidenceEntry::new(
        ConditionId::C3,
        h.divergence_verdict(j_half, j_end),
        horizon,
    )
    .with("int_Gamma_T", j_end)
    .with("int_Gamma_half", j_half)
    .with("Gamma_t0", gamma_max(spec.t0)?)
    .with("identity_max_rel_error", worst);
    if worst > IDENTITY_TOL {
        entry.verdict = Verdict::Inconclusive;
        entry =
            entry.note("Gamma(t) differs from mu_2[A + BK]; gain does not match the construction");
    }
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::linalg::Matrix;

    fn tf(rows: &[&[&str]]) -> MatrixFunction {
        let g: Vec<Vec<String>> = rows
            .iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect();
        MatrixFunction::parse_square(&g, VarSet::time()).unwrap()
    }

    fn example_spec(b: Matrix) -> SystemSpec {
        SystemSpec::new(
            tf(&[&["t", "sin(t)"], &["t^(1/2)", "1"]]),
            b,
            0.0,
            vec![-5.0, 2.0],
        )
        .unwrap()
    }

    fn example_gamma() -> GammaRule {
        GammaRule::Explicit(vec![
            parse("-t*(t^6+1)^(1/2)", &VarSet::time()).unwrap(),
            parse("-t^(1/2)*(t^6+1)^(1/2)", &VarSet::time()).unwrap(),
        ])
    }

    #[test]
    fn decomposition_of_example_plant() {
        let a = tf(&[&["t", "sin(t)"], &["t^(1/2)", "1"]]);
        let (sym, skew) = decompose_sym_skew(&a).unwrap();
        for &t in &[0.0, 0.7, 3.0, 11.0] {
            let s = sym.eval(t, None).unwrap();
            let off = (t.sqrt() + t.sin()) / 2.0;
            assert!((s[(0, 1)] - off).abs() < 1e-15 && (s[(1, 0)] - off).abs() < 1e-15);
            assert_eq!((s[(0, 0)], s[(1, 1)]), (t, 1.0));
            let w = skew.eval(t, None).unwrap();
            let back = &s + &w;
            assert!((&back - &a.eval(t, None).unwrap()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_edge_cases() {
        let sym_in = tf(&[&["t", "2*t"], &["2*t", "1"]]);
        let (_, skew) = decompose_sym_skew(&sym_in).unwrap();
        assert!(skew.entries().iter().all(Expr::is_zero));
        let skew_in = tf(&[&["0", "1"], &["-1", "0"]]);
        let (sym, _) = decompose_sym_skew(&skew_in).unwrap();
        assert_eq!(sym.eval(4.0, None).unwrap(), Matrix::zeros(2));
    }

    #[test]
    fn auto_gamma_examples() {
        let g = auto_gamma(None, 1.0, 2, 0.0).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].eval(3.0, None).unwrap(), -4.0);
        let g = auto_gamma(None, 1.0, 1, 2.0).unwrap();
        assert_eq!(g[0].eval(3.0, None).unwrap(), -2.0);
        let one = Expr::num(1.0);
        let g = auto_gamma(Some(&one), 1.0, 1, 0.0).unwrap();
        assert_eq!(g[0].eval(3.0, None).unwrap(), -8.0);
        let cubic = parse("t^3 + 2", &VarSet::time()).unwrap();
        let g = auto_gamma(Some(&cubic), 1.0, 1, 0.0).unwrap();
        let r = cubic.eval(9.0, None).unwrap() / g[0].eval(9.0, None).unwrap().abs();
        assert!(r <= 0.1);
        assert!(auto_gamma(None, 0.0, 1, 0.0).is_err());
    }

    #[test]
    fn example_gain_matches_display() {
        let spec = example_spec(Matrix::identity(2));
        let ctrl = synthesize(&spec, &[-1.0, -1.0], &example_gamma()).unwrap();
        for &t in &[0.0, 0.5, 1.0, 2.0, 4.5] {
            let k = ctrl.gain_at(t).unwrap();
            let off = -(t.sqrt() + t.sin()) / 2.0;
            let root = (t.powi(6) + 1.0).sqrt();
            assert!((k[(0, 0)] - (-t - 1.0 - t * root)).abs() < 1e-12);
            assert!((k[(1, 1)] - (-1.0 - 1.0 - t.sqrt() * root)).abs() < 1e-12);
            assert!((k[(0, 1)] - off).abs() < 1e-15 && (k[(1, 0)] - off).abs() < 1e-15);
        }
        let cl = closed_loop_matrix(&spec, &ctrl, 0.0, false).unwrap();
        assert_eq!(cl, Matrix::diag(&[-1.0, -1.0]));
    }

    #[test]
    fn gain_strings_reparse() {
        let spec = example_spec(Matrix::identity(2));
        let ctrl = synthesize(&spec, &[-1.0, -1.0], &example_gamma()).unwrap();
        let strings = ctrl.gain().to_strings();
        let back = MatrixFunction::parse_square(&strings, VarSet::time()).unwrap();
        for &t in &[0.3, 1.7, 6.0] {
            assert_eq!(back.eval(t, None).unwrap(), ctrl.gain_at(t).unwrap());
        }
    }

    #[test]
    fn zero_plant_and_scaled_b() {
        let zero = SystemSpec::new(
            MatrixFunction::zero(2),
            Matrix::identity(2),
            0.0,
            vec![1.0, 1.0],
        )
        .unwrap();
        let rule = GammaRule::Explicit(vec![Expr::num(-1.0), Expr::num(-1.0)]);
        let ctrl = synthesize(&zero, &[-1.0, -3.0], &rule).unwrap();
        assert_eq!(ctrl.gain_at(2.0).unwrap(), Matrix::diag(&[-2.0, -4.0]));

        let unit = synthesize(
            &example_spec(Matrix::identity(2)),
            &[-1.0, -1.0],
            &example_gamma(),
        )
        .unwrap();
        let double = synthesize(
            &example_spec(Matrix::diag(&[2.0, 2.0])),
            &[-1.0, -1.0],
            &example_gamma(),
        )
        .unwrap();
        for &t in &[0.0, 1.3, 2.9] {
            assert_eq!(
                double.gain_at(t).unwrap(),
                unit.gain_at(t).unwrap().scale(0.5)
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = example_spec(Matrix::identity(2));
        assert!(synthesize(&spec, &[-1.0, 0.0], &GammaRule::default()).is_err());
        assert!(synthesize(&spec, &[-1.0], &GammaRule::default()).is_err());
        let singular = example_spec(Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap());
        let err = synthesize(&singular, &[-1.0, -1.0], &GammaRule::default()).unwrap_err();
        assert_eq!(err, Error::Controller("B not invertible".into()));
    }

    #[test]
    fn c3_examples() {
        let h = Heuristics::default();
        let spec = example_spec(Matrix::identity(2));
        let ctrl = synthesize(&spec, &[-1.0, -1.0], &example_gamma()).unwrap();
        let e = verify_c3(&spec, &ctrl, 5.0, &h).unwrap();
        assert_eq!(e.verdict, Verdict::Supported);
        assert!(e.quantity("identity_max_rel_error").unwrap() <= IDENTITY_TOL);
        for &t in &[0.0f64, 0.25, 0.8, 1.0] {
            let expected = -1.0 - t * (t.powi(6) + 1.0).sqrt();
            assert!((ctrl.gamma_max(t).unwrap().unwrap() - expected).abs() < 1e-12);
        }

        let zero = SystemSpec::new(
            MatrixFunction::zero(2),
            Matrix::identity(2),
            0.0,
            vec![1.0, 1.0],
        )
        .unwrap();
        let flat = GammaRule::Explicit(vec![Expr::num(0.0), Expr::num(0.0)]);
        let ctrl = synthesize(&zero, &[-1.0, -2.0], &flat).unwrap();
        let e = verify_c3(&zero, &ctrl, 4.0, &h).unwrap();
        assert_eq!(e.verdict, Verdict::Supported);
        assert!((e.quantity("int_Gamma_T").unwrap() + 4.0).abs() < 1e-12);

        let one =
            SystemSpec::new(MatrixFunction::zero(1), Matrix::identity(1), 0.0, vec![1.0]).unwrap();
        let ctrl = synthesize(&one, &[-1.0], &GammaRule::Explicit(vec![Expr::num(2.0)])).unwrap();
        assert_eq!(
            verify_c3(&one, &ctrl, 4.0, &h).unwrap().verdict,
            Verdict::Refuted
        );
    }
}
