use super::evidence::{ConditionId, EvidenceEntry, EvidenceReport, Heuristics, Verdict};
use super::quad::{adaptive_simpson, cumulative};
use crate::error::{Error, Result};
use crate::linalg::{lognorm, NormKind};
use crate::system::{closed_loop_matrix, ControllerSpec, SystemSpec};

/// `mu[A(t) + B K(t)]`, the nominal closed loop without uncertainty.
pub fn mu_nominal(spec: &SystemSpec, ctrl: &ControllerSpec, k: &NormKind, t: f64) -> Result<f64> {
    lognorm(&closed_loop_matrix(spec, ctrl, t, false)?, k)
}

/// `|mu[Delta(t)]|`, zero when no uncertainty is declared.
pub fn mu_delta_abs(spec: &SystemSpec, k: &NormKind, t: f64) -> Result<f64> {
    match &spec.delta {
        Some(d) => Ok(lognorm(&d.eval(t, None)?, k)?.abs()),
        None => Ok(0.0),
    }
}

fn check_horizon(spec: &SystemSpec, t_end: f64) -> Result<f64> {
    if !(t_end > spec.t0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon T = {t_end} must exceed t0 = {}",
            spec.t0
        )));
    }
    Ok(spec.t0 + 0.5 * (t_end - spec.t0))
}

/// Integrability of `|mu[Delta]|` by the Cauchy-tail heuristic. Never refuted:
/// divergence cannot be certified from a finite horizon.
pub fn check_a1(
    spec: &SystemSpec,
    k: &NormKind,
    t_end: f64,
    h: &Heuristics,
) -> Result<EvidenceEntry> {
    let mid = check_horizon(spec, t_end)?;
    let horizon = [spec.t0, t_end];
    if spec.delta.is_none() {
        return Ok(
            EvidenceEntry::new(ConditionId::A1, Verdict::Supported, horizon)
                .with("I_T", 0.0)
                .with("I_half", 0.0)
                .note("no uncertainty declared"),
        );
    }
    let first = adaptive_simpson(|s| mu_delta_abs(spec, k, s), spec.t0, mid, 0.5 * h.tol)?;
    let second = adaptive_simpson(|s| mu_delta_abs(spec, k, s), mid, t_end, 0.5 * h.tol)?;
    let i_half = first.value;
    let i_end = first.value + second.value;
    let mut entry = EvidenceEntry::new(ConditionId::A1, Verdict::Inconclusive, horizon)
        .with("I_T", i_end)
        .with("I_half", i_half)
        .with("tail", second.value)
        .with("quad_est_error", first.est_error + second.est_error);
    if first.depth_exceeded || second.depth_exceeded {
        entry = entry.note("quadrature depth limit reached");
    } else if h.tail_converges(i_half, i_end) {
        entry.verdict = Verdict::Supported;
    } else {
        entry = entry.note("second-half increment exceeds the Cauchy-tail threshold");
    }
    Ok(entry)
}

/// A1 on `[t0, max(T, t0 + a1_min_horizon)]`, falling back to `[t0, T]`
/// when the uncertainty cannot be evaluated that far out.
pub fn check_a1_extended(
    spec: &SystemSpec,
    k: &NormKind,
    t_end: f64,
    h: &Heuristics,
) -> Result<EvidenceEntry> {
    let extended = t_end.max(spec.t0 + h.a1_min_horizon);
    if extended > t_end {
        match check_a1(spec, k, extended, h) {
            Ok(e) => return Ok(e),
            Err(Error::Eval(_)) => {}
            Err(e) => return Err(e),
        }
    }
    check_a1(spec, k, t_end, h)
}

/// A2 (negative nominal `mu` on the last part of the horizon) and A4
/// (divergence of its integral to `-inf`).
pub fn check_a2_a4(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    k: &NormKind,
    t_end: f64,
    h: &Heuristics,
) -> Result<(EvidenceEntry, EvidenceEntry)> {
    let mid = check_horizon(spec, t_end)?;
    let horizon = [spec.t0, t_end];

    let start = t_end - h.tail_window * (t_end - spec.t0);
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for t in h.uniform_grid(start, t_end) {
        let mu = mu_nominal(spec, ctrl, k, t)?;
        sup = sup.max(mu);
        inf = inf.min(mu);
    }
    let a2_verdict = if sup < 0.0 {
        Verdict::Supported
    } else if inf >= 0.0 {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    };
    let a2 = EvidenceEntry::new(ConditionId::A2, a2_verdict, horizon)
        .with("window_start", start)
        .with("sup_mu_tail", sup)
        .with("inf_mu_tail", inf);

    let first = adaptive_simpson(|s| mu_nominal(spec, ctrl, k, s), spec.t0, mid, 0.5 * h.tol)?;
    let second = adaptive_simpson(|s| mu_nominal(spec, ctrl, k, s), mid, t_end, 0.5 * h.tol)?;
    let j_half = first.value;
    let j_end = first.value + second.value;
    let a4 = EvidenceEntry::new(
        ConditionId::A4,
        h.divergence_verdict(j_half, j_end),
        horizon,
    )
    .with("J_T", j_end)
    .with("J_half", j_half);
    Ok((a2, a4))
}

/// A3: `||omega~(t)|| / |mu[A + BK]|` decreasing on a geometric grid over
/// `[t0 + (T - t0)/4, T]` and below the ratio ceiling at `T`.
pub fn check_a3(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    k: &NormKind,
    t_end: f64,
    h: &Heuristics,
) -> Result<EvidenceEntry> {
    check_horizon(spec, t_end)?;
    let horizon = [spec.t0, t_end];
    if spec.omega_bound.is_none() {
        if spec.omega.is_some() {
            return Err(Error::Config(
                "omega_bound is required to check the disturbance condition".into(),
            ));
        }
        return Ok(
            EvidenceEntry::new(ConditionId::A3, Verdict::Supported, horizon)
                .with("r_T", 0.0)
                .note("no disturbance declared"),
        );
    }
    let lo = spec.t0 + 0.25 * (t_end - spec.t0);
    let grid = h.geometric_grid(lo, t_end);
    let mut ratios = Vec::with_capacity(grid.len());
    for &t in &grid {
        let mu = mu_nominal(spec, ctrl, k, t)?;
        if mu == 0.0 {
            return Ok(
                EvidenceEntry::new(ConditionId::A3, Verdict::Inconclusive, horizon)
                    .with("t_zero_mu", t)
                    .note(format!("mu[A+BK] vanishes at t = {t}; ratio undefined")),
            );
        }
        ratios.push(spec.omega_envelope(t)? / mu.abs());
    }
    let first = ratios[0];
    let last = *ratios.last().expect("grid is non-empty");
    let decreasing = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let verdict = if decreasing && last < h.ratio_max {
        Verdict::Supported
    } else if last > first {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    };
    Ok(EvidenceEntry::new(ConditionId::A3, verdict, horizon)
        .with("r_first", first)
        .with("r_T", last)
        .with("grid_start", lo)
        .with("decreasing", if decreasing { 1.0 } else { 0.0 }))
}

/// Finite-horizon evidence for the five stability conditions on the
/// closed loop `x' = [A + Delta + B K] x`.
///
/// Every bullet gets an entry; the strongest supported stability verdict
/// (UAS, AS, US, S in that order, else UNSTABLE) is recorded in
/// `strongest`. When A1 is not supported all five are downgraded to
/// inconclusive.
pub fn classify_stability(
    spec: &SystemSpec,
    ctrl: &ControllerSpec,
    k: &NormKind,
    t_end: f64,
    h: &Heuristics,
) -> Result<EvidenceReport> {
    check_horizon(spec, t_end)?;
    let horizon = [spec.t0, t_end];
    let mut report = EvidenceReport::new(k.name(), horizon);

    let a1 = check_a1_extended(spec, k, t_end, h)?;
    let a1_ok = a1.is_supported();
    let i_delta = a1.quantity("I_T").unwrap_or(0.0);
    report.insert(a1);

    let grid = h.uniform_grid(spec.t0, t_end);
    let mid = grid.len() / 2;
    let mus = grid
        .iter()
        .map(|&t| mu_nominal(spec, ctrl, k, t))
        .collect::<Result<Vec<_>>>()?;
    let (j, _) = cumulative(|s| mu_nominal(spec, ctrl, k, s), &grid, h.tol)?;
    let (l, _) = cumulative(
        |s| lognorm(&-closed_loop_matrix(spec, ctrl, s, true)?, k),
        &grid,
        h.tol,
    )?;
    let sup_mu = mus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sup_j = j.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sup_j_first = j[..=mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sup_j_second = j[mid..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (j_half, j_end) = (j[mid], j[grid.len() - 1]);
    let (l_half, l_end) = (l[mid], l[grid.len() - 1]);

    let s_verdict = if sup_j_second - sup_j_first <= h.tail_abs.max(h.tail_rel * sup_j.abs()) {
        Verdict::Supported
    } else if h.divergence_verdict(-j_half, -j_end) == Verdict::Supported {
        Verdict::Refuted
    } else {
        Verdict::Inconclusive
    };
    let m_uniform = i_delta.exp();
    let entries = [
        EvidenceEntry::new(ConditionId::S, s_verdict, horizon)
            .with("sup_J", sup_j)
            .with("J_T", j_end)
            .with("J_half", j_half)
            .with("M_estimate", (i_delta + sup_j).exp()),
        EvidenceEntry::new(
            ConditionId::US,
            if sup_mu <= h.sign_slack {
                Verdict::Supported
            } else {
                Verdict::Refuted
            },
            horizon,
        )
        .with("sup_mu", sup_mu)
        .with("M_estimate", m_uniform)
        .note("pointwise condition checked on the sampling grid only"),
        EvidenceEntry::new(
            ConditionId::AS,
            h.divergence_verdict(j_half, j_end),
            horizon,
        )
        .with("J_T", j_end)
        .with("J_half", j_half),
        EvidenceEntry::new(
            ConditionId::UAS,
            if -sup_mu > 0.0 {
                Verdict::Supported
            } else {
                Verdict::Refuted
            },
            horizon,
        )
        .with("alpha", -sup_mu)
        .with("M_estimate", m_uniform),
        EvidenceEntry::new(
            ConditionId::Unstable,
            h.divergence_verdict(l_half, l_end),
            horizon,
        )
        .with("L_T", l_end)
        .with("L_half", l_half),
    ];
    for mut e in entries {
        if !a1_ok {
            e.verdict = Verdict::Inconclusive;
            e.note = Some("hypothesis A1 (integrable |mu[Delta]|) not supported".into());
        }
        report.insert(e);
    }
    report.strongest = [
        ConditionId::UAS,
        ConditionId::AS,
        ConditionId::US,
        ConditionId::S,
        ConditionId::Unstable,
    ]
    .into_iter()
    .find(|&id| report.verdict(id) == Some(Verdict::Supported));
    Ok(report)
}

/// True when the strongest verdict is asymptotic stability or better.
pub fn is_asymptotically_stable(report: &EvidenceReport) -> bool {
    matches!(report.strongest, Some(ConditionId::UAS | ConditionId::AS))
}
