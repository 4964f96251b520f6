mod common;

use common::*;
use lognorm_core::config::presets;
use lognorm_core::expr::{MatrixFunction, VarSet};
use lognorm_core::linalg::{induced_norm, lognorm, Matrix, NormKind};
use lognorm_core::sim::{
    convergence_report, fundamental_matrix, integrate, integrate_fixed, non_increasing_on,
    output_grid, simulate, verify_sandwich, IntegratorOptions, SandwichOptions,
};
use lognorm_core::system::{closed_loop_matrix, ControllerSpec, SystemSpec};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const KINDS: [NormKind; 3] = [NormKind::One, NormKind::Two, NormKind::Inf];

/// Entries `a sin(b t) + c cos(d t) + e` with coefficients in [-1, 1].
fn sinusoidal(r: &mut ChaCha8Rng, n: usize) -> MatrixFunction {
    let mut coef = || (r.random_range(-16..=16) as f64) / 16.0;
    let grid: Vec<Vec<String>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    format!(
                        "{}*sin({}*t) + {}*cos({}*t) + {}",
                        coef(),
                        2.0 * coef(),
                        coef(),
                        2.0 * coef(),
                        coef()
                    )
                })
                .collect()
        })
        .collect();
    MatrixFunction::parse_square(&grid, VarSet::time()).unwrap()
}

#[test]
fn sandwich_and_liouville_on_random_ltv() {
    let mut r = rng(314);
    let grid = output_grid(0.0, 5.0, 10);
    let opts = IntegratorOptions::default();
    for case in 0..200 {
        let f = sinusoidal(&mut r, 3);
        let k = &KINDS[case % 3];
        let eval = |t: f64| f.eval(t, None);
        let tt = fundamental_matrix(eval, 3, 0.0, &grid, &opts).unwrap();
        let sw = SandwichOptions {
            seed: case as u64,
            ..Default::default()
        };
        let rep = verify_sandwich(&tt, eval, k, &sw).unwrap();
        assert_eq!(rep.pairs.len(), 20);
        assert!(
            rep.holds,
            "case {case} ({k}): upper {} lower {}",
            rep.worst_upper_margin, rep.worst_lower_margin
        );
        assert!(
            rep.liouville_max_error <= 1e-6,
            "case {case}: {}",
            rep.liouville_max_error
        );
    }
}

#[test]
fn p4_bounds_along_homogeneous_simulations() {
    let mut r = rng(2718);
    for case in 0..30 {
        let n = 2 + case % 3;
        let x0: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let spec = SystemSpec::new(sinusoidal(&mut r, n), Matrix::identity(n), 0.0, x0)
            .unwrap()
            .with_norm(KINDS[case % 3].clone());
        let ctrl = ControllerSpec::open_loop(&spec).unwrap();
        let trace = simulate(
            &spec,
            &ctrl,
            5.0,
            &output_grid(0.0, 5.0, 50),
            &IntegratorOptions::default(),
        )
        .unwrap();
        let slack = 1.0 + 1e-6 + 1e3 * 1e-8;
        for i in 0..trace.len() {
            assert!(
                trace.norm_x[i] <= trace.bound_upper[i] * slack,
                "case {case} i {i}"
            );
            assert!(
                trace.norm_x[i] * slack >= trace.bound_lower[i],
                "case {case} i {i}"
            );
        }
    }
}

#[test]
fn example2_transition_norm_at_two() {
    let doc = presets::example2();
    let spec = doc.to_spec().unwrap();
    let ctrl = doc.build_controller(&spec).unwrap();
    let f = |t: f64| closed_loop_matrix(&spec, &ctrl, t, true);
    let tt = fundamental_matrix(
        f,
        2,
        0.0,
        &output_grid(0.0, 2.0, 20),
        &IntegratorOptions::default(),
    )
    .unwrap();
    let norm = induced_norm(tt.phi.last().unwrap(), &NormKind::Two).unwrap();
    // independent side: hand-written closed loop, bisection mu_2, trapezoid
    let integral = trapezoid(
        |t| mu2_oracle(&Matrix::from_rows(&example2_closed_loop(t)).unwrap()),
        0.0,
        2.0,
        200_000,
    );
    assert!(
        norm <= integral.exp() * (1.0 + 1e-6),
        "{norm} vs {}",
        integral.exp()
    );
    let rep = verify_sandwich(&tt, f, &NormKind::Two, &SandwichOptions::default()).unwrap();
    assert!(rep.holds);
}

#[test]
fn example2_matches_rk4_oracle() {
    let doc = presets::example2();
    let spec = doc.to_spec().unwrap();
    let ctrl = doc.build_controller(&spec).unwrap();
    let grid = output_grid(0.0, 10.0, 1000);
    let trace = simulate(&spec, &ctrl, 10.0, &grid, &IntegratorOptions::default()).unwrap();
    // h = 1e-4 keeps h |lambda| below 0.4 at t = 10
    let oracle = rk4(example2_rhs, 0.0, &[-5.0, 2.0], 1e-4, 100_000, 100);
    assert_eq!(oracle.len(), trace.len());
    let mut worst = 0.0f64;
    for ((t, y), x) in oracle.iter().zip(&trace.states) {
        assert!((t - trace.times[(t * 100.0).round() as usize]).abs() < 1e-9);
        for (a, b) in y.iter().zip(x) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-5, "sup-norm gap {worst}");
    // the gap shrinks with the tolerance
    let tight = IntegratorOptions {
        tol: 1e-10,
        ..Default::default()
    };
    let fine = simulate(&spec, &ctrl, 10.0, &grid, &tight).unwrap();
    let gap = oracle
        .iter()
        .zip(&fine.states)
        .flat_map(|((_, y), x)| y.iter().zip(x).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    // the h = 1e-4 oracle carries about 1e-7 of its own error
    assert!(gap <= 0.2 * worst, "tight gap {gap} vs {worst}");
    assert!(non_increasing_on(&trace, 5.0, 10.0));
    let rep = convergence_report(&trace).unwrap();
    assert!(rep.tail_non_increasing);
    assert!((rep.final_norm - 0.05614).abs() < 1e-4);
}

#[test]
fn reproducible_bit_for_bit() {
    let doc = presets::example2();
    let spec = doc.to_spec().unwrap();
    let ctrl = doc.build_controller(&spec).unwrap();
    let grid = output_grid(0.0, 3.0, 300);
    let a = simulate(&spec, &ctrl, 3.0, &grid, &IntegratorOptions::default()).unwrap();
    let b = simulate(&spec, &ctrl, 3.0, &grid, &IntegratorOptions::default()).unwrap();
    assert_eq!(a, b);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn adaptive_error_tracks_tolerance() {
    // y' = cos(t) y, y(0) = 1 -> y = exp(sin t)
    let f = |t: f64, y: &[f64], out: &mut [f64]| {
        out[0] = t.cos() * y[0];
        Ok(())
    };
    let exact = 10f64.sin().exp();
    let mut prev = f64::INFINITY;
    for tol in [1e-4, 1e-6, 1e-8, 1e-10] {
        let opts = IntegratorOptions {
            tol,
            h_max: 10.0,
            ..Default::default()
        };
        let run = integrate(f, 0.0, &[1.0], 10.0, &[10.0], &opts).unwrap();
        let err = (run.states[0][0] - exact).abs();
        assert!(err < prev, "tol {tol}: {err} vs {prev}");
        assert!(err <= 100.0 * tol * (1.0 + exact), "tol {tol}: {err}");
        prev = err;
    }
}

#[test]
fn fixed_step_order_on_diagonal_exponential() {
    let f = |_: f64, y: &[f64], out: &mut [f64]| {
        out[0] = -y[0];
        out[1] = -2.0 * y[1];
        Ok(())
    };
    let err = |steps| {
        let y = integrate_fixed(f, 0.0, &[1.0, 1.0], 4.0, steps).unwrap();
        ((y[0] - (-4f64).exp()).powi(2) + (y[1] - (-8f64).exp()).powi(2)).sqrt()
    };
    let (e1, e2) = (err(40), err(80));
    let order = (e1 / e2).log2();
    assert!(order >= 4.0, "observed order {order}");
}

#[test]
fn stable_diag_matches_closed_form() {
    let doc = presets::by_name("stable-diag").unwrap();
    let spec = doc.to_spec().unwrap();
    let ctrl = doc.build_controller(&spec).unwrap();
    let grid = output_grid(spec.t0, 5.0, 100);
    let trace = simulate(&spec, &ctrl, 5.0, &grid, &IntegratorOptions::default()).unwrap();
    for (t, x) in trace.times.iter().zip(&trace.states) {
        for (xi, x0) in x.iter().zip(&spec.x0) {
            assert!((xi - x0 * (-t).exp()).abs() <= 1e-8);
        }
    }
    let rep = convergence_report(&trace).unwrap();
    assert!((rep.decay_rate.unwrap() + 1.0).abs() < 0.05);
    let mu = lognorm(
        &closed_loop_matrix(&spec, &ctrl, 1.0, true).unwrap(),
        &NormKind::Two,
    )
    .unwrap();
    assert!((mu + 1.0).abs() < 1e-12);
}
