//! Command-line front end for `lognorm-core`.
//!
//! [`run`] parses the arguments, executes one subcommand and returns the
//! exit code: 0 success or supported, 1 refuted or weak evidence, 2 input
//! error, 3 numerical abort.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lognorm_core::analysis::{
    check_a1_extended, check_a2_a4, check_a3, classify_stability, is_asymptotically_stable,
    ConditionId, EvidenceEntry, Heuristics, Verdict,
};
use lognorm_core::config::{presets, ControllerConfig, DEFAULT_MARGIN};
use lognorm_core::expr::{parse, VarSet};
use lognorm_core::linalg::{induced_norm, lognorm, Matrix, NormKind};
use lognorm_core::sim::{
    convergence_report, fundamental_matrix, output_grid, simulate, verify_sandwich,
    IntegratorOptions, SandwichOptions, Trace,
};
use lognorm_core::synthesis::{synthesize, verify_c1, verify_c2, verify_c3, GammaRule};
use lognorm_core::system::{closed_loop_matrix, ControllerSpec, SystemSpec};
use lognorm_core::{ConfigDocument, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lognorm-control",
    version,
    about = "Logarithmic-norm stability analysis and control of LTV systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Logarithmic norms and induced norms of a constant matrix
    Lognorm(LognormArgs),
    /// Finite-horizon stability evidence for the configured closed loop
    Classify(ClassifyArgs),
    /// Build the robust adaptive gain and check c1-c3
    Synthesize(SynthesizeArgs),
    /// Integrate the closed loop and write the trace as CSV
    Simulate(SimulateArgs),
    /// Transition-matrix sandwich plus assumption checks
    Verify(VerifyArgs),
    /// Run the two-state reproduction scenario end to end
    ReproExample(ReproArgs),
}

#[derive(Debug, Args)]
struct LognormArgs {
    /// Matrix literal as a JSON array of rows, e.g. '[[-11,10],[2,-3]]'
    matrix: Option<String>,
    /// Evaluate A(t) of a config file or preset instead of a literal
    #[arg(long, conflicts_with = "matrix")]
    config: Option<String>,
    /// Time at which A(t) is evaluated (defaults to t0)
    #[arg(long, requires = "config")]
    at: Option<f64>,
    /// Print only this norm (one, two, inf)
    #[arg(long)]
    norm: Option<String>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Config file path or preset name
    config: String,
    /// Horizon (defaults to the config's)
    #[arg(long = "T", visible_alias = "horizon")]
    t_end: Option<f64>,
    #[arg(long)]
    norm: Option<String>,
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    config: String,
    /// Target diagonal, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    /// "auto" or one expression per state (repeat the flag)
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<Vec<String>>,
    /// Margin of the automatic robust part
    #[arg(long)]
    margin: Option<f64>,
    /// Horizon for the c2/c3 checks
    #[arg(long = "T")]
    t_end: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    config: String,
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    h_min: Option<f64>,
    #[arg(long)]
    h_max: Option<f64>,
    /// Output grid intervals
    #[arg(long, default_value_t = 1000)]
    intervals: usize,
    /// CSV destination; without it the CSV goes to stdout and the report to stderr
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    config: String,
    /// Controller JSON ({"lambda", "gamma", "margin"}) replacing the config's
    #[arg(long)]
    controller: Option<PathBuf>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Horizon of the transition-matrix check (defaults to min(T, t0 + 2))
    #[arg(long = "sandwich-T")]
    sandwich_t: Option<f64>,
    /// Stored times of the transition matrix
    #[arg(long, default_value_t = 20)]
    intervals: usize,
    #[arg(long)]
    norm: Option<String>,
}

#[derive(Debug, Args)]
struct ReproArgs {
    #[arg(long = "T", default_value_t = 10.0)]
    t_end: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    intervals: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Why a command stopped.
#[derive(Debug)]
enum Failure {
    Core(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) if e.is_numerical() => format!("numerical failure: {e}"),
            Failure::Core(e) => format!("error: {e}"),
            Failure::Input(m) => format!("error: {m}"),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Runs one invocation; `args` includes the program name.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Lognorm(a) => cmd_lognorm(a, out),
        Command::Classify(a) => cmd_classify(a, out),
        Command::Synthesize(a) => cmd_synthesize(a, out),
        Command::Simulate(a) => cmd_simulate(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
        Command::ReproExample(a) => cmd_repro(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message());
            f.code()
        }
    }
}

fn io_failure(what: &str, e: std::io::Error) -> Failure {
    Failure::Input(format!("{what}: {e}"))
}

fn emit(out: &mut dyn Write, v: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("json values serialize");
    writeln!(out, "{text}").map_err(|e| io_failure("stdout", e))
}

/// A config file, or a preset when no such file exists.
fn load(source: &str) -> Result<ConfigDocument, Failure> {
    let path = Path::new(source);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| io_failure(source, e))?;
        return ConfigDocument::from_json(&text)
            .map_err(|e| Failure::Input(format!("{source}: {e}")));
    }
    presets::by_name(source).ok_or_else(|| {
        Failure::Input(format!(
            "'{source}' is neither a readable file nor a preset ({})",
            presets::NAMES.join(", ")
        ))
    })
}

fn norm_arg(name: Option<&str>, spec: &SystemSpec) -> Result<NormKind, Failure> {
    match name {
        None => Ok(spec.norm.clone()),
        Some(s) => Ok(s.parse()?),
    }
}

fn horizon(doc: &ConfigDocument, t_end: Option<f64>) -> Result<f64, Failure> {
    let t = t_end.unwrap_or_else(|| doc.horizon());
    if !(t > doc.t0) || !t.is_finite() {
        return Err(Failure::Input(format!(
            "T must exceed t0 = {}, got {t}",
            doc.t0
        )));
    }
    Ok(t)
}

/// Four decimals with trailing zeros removed: `7`, `0.2111`, `-1`.
pub fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn norm_label(k: &NormKind) -> &'static str {
    match k {
        NormKind::One => "1",
        NormKind::Two => "2",
        NormKind::Inf => "inf",
        NormKind::Weighted(_) => "H",
    }
}

fn cmd_lognorm(a: LognormArgs, out: &mut dyn Write) -> Outcome {
    let m = match (&a.matrix, &a.config) {
        (Some(text), None) => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(text)
                .map_err(|e| Failure::Input(format!("matrix literal: {e}")))?;
            Matrix::from_rows(&rows)?
        }
        (None, Some(src)) => {
            let doc = load(src)?;
            let spec = doc.to_spec()?;
            spec.a.eval(a.at.unwrap_or(spec.t0), None)?
        }
        _ => return Err(Failure::Input("give a matrix literal or --config".into())),
    };
    let kinds = match &a.norm {
        Some(s) => vec![s.parse::<NormKind>()?],
        None => vec![NormKind::One, NormKind::Two, NormKind::Inf],
    };
    let mut mus = Vec::new();
    let mut norms = Vec::new();
    for k in &kinds {
        mus.push(format!("mu_{}={}", norm_label(k), fmt4(lognorm(&m, k)?)));
        norms.push(format!(
            "norm_{}={}",
            norm_label(k),
            fmt4(induced_norm(&m, k)?)
        ));
    }
    writeln!(out, "{}\n{}", mus.join(" "), norms.join(" ")).map_err(|e| io_failure("stdout", e))?;
    Ok(EXIT_OK)
}

fn cmd_classify(a: ClassifyArgs, out: &mut dyn Write) -> Outcome {
    let doc = load(&a.config)?;
    let spec = doc.to_spec()?;
    let ctrl = doc.build_controller(&spec)?;
    let k = norm_arg(a.norm.as_deref(), &spec)?;
    let t_end = horizon(&doc, a.t_end)?;
    let report = classify_stability(&spec, &ctrl, &k, t_end, &Heuristics::default())?;
    emit(
        out,
        &serde_json::to_value(&report).expect("report serializes"),
    )?;
    Ok(if is_asymptotically_stable(&report) {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn gamma_rule(a: &SynthesizeArgs, doc: &ConfigDocument) -> Result<GammaRule, Failure> {
    match &a.gamma {
        Some(g) if g.len() == 1 && g[0] == "auto" => Ok(GammaRule::Auto {
            margin: a.margin.unwrap_or(DEFAULT_MARGIN),
        }),
        Some(g) => {
            if a.margin.is_some() {
                return Err(Failure::Input(
                    "--margin applies to --gamma auto only".into(),
                ));
            }
            let exprs = g
                .iter()
                .map(|s| {
                    parse(s, &VarSet::time())
                        .map_err(|e| Failure::Input(format!("--gamma '{s}': {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GammaRule::Explicit(exprs))
        }
        None => match (a.margin, &doc.controller) {
            (Some(margin), _) => Ok(GammaRule::Auto { margin }),
            (None, Some(c)) => Ok(c.rule(doc.n)?),
            (None, None) => Ok(GammaRule::default()),
        },
    }
}

fn entry_map(entries: &[EvidenceEntry]) -> Value {
    let map: serde_json::Map<String, Value> = entries
        .iter()
        .map(|e| {
            (
                e.id.to_string(),
                serde_json::to_value(e).expect("entry serializes"),
            )
        })
        .collect();
    Value::Object(map)
}

fn controller_json(ctrl: &ControllerSpec) -> Value {
    let strings = |f: Option<&lognorm_core::MatrixFunction>| f.map(|m| m.to_strings());
    let gamma: Vec<String> = ctrl.gamma().iter().map(|g| g.to_string()).collect();
    json!({
        "lambda": ctrl.lambda(),
        "gamma": gamma,
        "K": ctrl.gain().to_strings(),
        "adaptive": strings(ctrl.adaptive_part()),
        "robust": strings(ctrl.robust_part()),
        "B_inv": ctrl.b_inv().rows(),
    })
}

fn cmd_synthesize(a: SynthesizeArgs, out: &mut dyn Write) -> Outcome {
    let doc = load(&a.config)?;
    let spec = doc.to_spec()?;
    let t_end = horizon(&doc, a.t_end)?;
    let lambda = match (
        &a.lambda,
        doc.controller.as_ref().and_then(|c| c.lambda.clone()),
    ) {
        (Some(l), _) => l.clone(),
        (None, Some(l)) => l,
        (None, None) => vec![-1.0; spec.n],
    };
    let rule = gamma_rule(&a, &doc)?;
    let ctrl = synthesize(&spec, &lambda, &rule)?;
    let h = Heuristics::default();
    let evidence = [
        verify_c1(&spec, &ctrl, t_end)?,
        verify_c2(&spec, &ctrl, t_end, &h)?,
        verify_c3(&spec, &ctrl, t_end, &h)?,
    ];
    let ok = evidence.iter().all(EvidenceEntry::is_supported);
    // the same controller as a config fragment, for `verify --controller`
    let fragment = ControllerConfig {
        lambda: Some(lambda.clone()),
        gamma: Some(lognorm_core::config::GammaConfig::Exprs(
            ctrl.gamma().iter().map(|g| g.to_string()).collect(),
        )),
        margin: None,
    };
    emit(
        out,
        &json!({
            "controller": controller_json(&ctrl),
            "controller_config": fragment,
            "evidence": entry_map(&evidence),
        }),
    )?;
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}

fn integrator_options(
    doc: &ConfigDocument,
    tol: Option<f64>,
    h_min: Option<f64>,
    h_max: Option<f64>,
) -> IntegratorOptions {
    let d = IntegratorOptions::default();
    IntegratorOptions {
        tol: tol.unwrap_or_else(|| doc.tol()),
        h_min: h_min.unwrap_or(d.h_min),
        h_max: h_max.unwrap_or(d.h_max),
        h_init: None,
    }
}

fn write_trace(trace: &Trace, path: &Path) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(|e| io_failure(&path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    trace
        .write_csv(&mut w)
        .map_err(|e| io_failure(&path.display().to_string(), e))?;
    w.flush()
        .map_err(|e| io_failure(&path.display().to_string(), e))
}

fn trace_summary(trace: &Trace) -> Result<Value, Failure> {
    Ok(json!({
        "norm": trace.norm,
        "rows": trace.len(),
        "columns": trace.states[0].len() + 5,
        "final_state": trace.final_state(),
        "accepted_steps": trace.step_sizes.len(),
        "rejected_steps": trace.rejected_steps,
        "min_step": trace.step_sizes.iter().copied().fold(f64::INFINITY, f64::min),
        "convergence": convergence_report(trace)?,
    }))
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let doc = load(&a.config)?;
    let spec = doc.to_spec()?;
    let ctrl = doc.build_controller(&spec)?;
    let t_end = horizon(&doc, a.t_end)?;
    let opts = integrator_options(&doc, a.tol, a.h_min, a.h_max);
    let trace = simulate(
        &spec,
        &ctrl,
        t_end,
        &output_grid(spec.t0, t_end, a.intervals),
        &opts,
    )?;
    let mut summary = trace_summary(&trace)?;
    match &a.out {
        Some(path) => {
            write_trace(&trace, path)?;
            summary["out"] = json!(path.display().to_string());
            emit(out, &summary)?;
        }
        None => {
            trace
                .write_csv(&mut *out)
                .map_err(|e| io_failure("stdout", e))?;
            emit(err, &summary)?;
        }
    }
    Ok(EXIT_OK)
}

/// A bare controller object, or the output of `synthesize`.
fn load_controller(path: &Path) -> Result<ControllerConfig, Failure> {
    let what = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| io_failure(&what, e))?;
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{what}: {e}")))?;
    if let Some(inner) = v.get_mut("controller_config") {
        v = inner.take();
    }
    serde_json::from_value(v).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Outcome {
    let mut doc = load(&a.config)?;
    if let Some(p) = &a.controller {
        doc.controller = Some(load_controller(p)?);
    }
    let spec = doc.to_spec()?;
    let ctrl = doc.build_controller(&spec)?;
    let k = norm_arg(a.norm.as_deref(), &spec)?;
    let t_end = horizon(&doc, a.t_end)?;
    let sandwich_t = a.sandwich_t.unwrap_or(t_end.min(spec.t0 + 2.0));
    if !(sandwich_t > spec.t0) || sandwich_t > t_end {
        return Err(Failure::Input(format!(
            "--sandwich-T must lie in (t0, T], got {sandwich_t}"
        )));
    }
    let opts = integrator_options(&doc, None, None, None);
    let f = |t: f64| closed_loop_matrix(&spec, &ctrl, t, true);
    let tt = fundamental_matrix(
        f,
        spec.n,
        spec.t0,
        &output_grid(spec.t0, sandwich_t, a.intervals),
        &opts,
    )?;
    let sandwich = verify_sandwich(&tt, f, &k, &SandwichOptions::default())?;

    let h = Heuristics::default();
    let a1 = check_a1_extended(&spec, &k, t_end, &h)?;
    let (a2, a4) = check_a2_a4(&spec, &ctrl, &k, t_end, &h)?;
    let a3 = check_a3(&spec, &ctrl, &k, t_end, &h)?;
    let mut entries = vec![a1, a2, a3, a4];
    let c3 = if ctrl.is_open_loop() {
        None
    } else {
        Some(verify_c3(&spec, &ctrl, t_end, &h)?)
    };
    entries.extend(c3.clone());
    let ok = sandwich.holds && entries.iter().all(EvidenceEntry::is_supported);
    emit(
        out,
        &json!({
            "norm": k.name(),
            "horizon": [spec.t0, t_end],
            "sandwich_horizon": [spec.t0, sandwich_t],
            "sandwich": sandwich,
            "assumptions": entry_map(&entries[..4]),
            "c3": c3,
            "all_supported": ok,
        }),
    )?;
    Ok(if ok { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_repro(a: ReproArgs, out: &mut dyn Write) -> Outcome {
    let doc = presets::example2();
    let spec = doc.to_spec()?;
    let ctrl = doc.build_controller(&spec)?;
    if !(a.t_end > spec.t0) || !a.t_end.is_finite() {
        return Err(Failure::Input(format!(
            "T must be positive, got {}",
            a.t_end
        )));
    }
    let h = Heuristics::default();
    let report = classify_stability(&spec, &ctrl, &NormKind::Two, a.t_end, &h)?;
    let c3 = verify_c3(&spec, &ctrl, a.t_end, &h)?;
    let opts = integrator_options(&doc, a.tol, None, None);
    let trace = simulate(
        &spec,
        &ctrl,
        a.t_end,
        &output_grid(spec.t0, a.t_end, a.intervals),
        &opts,
    )?;
    let mut summary = trace_summary(&trace)?;
    if let Some(path) = &a.out {
        write_trace(&trace, path)?;
        summary["out"] = json!(path.display().to_string());
    }
    let stable = is_asymptotically_stable(&report);
    emit(
        out,
        &json!({
            "scenario": "example2",
            "x0": spec.x0,
            "T": a.t_end,
            "controller": controller_json(&ctrl),
            "strongest": report.strongest,
            "alpha": report.get(ConditionId::UAS).and_then(|e| e.quantity("alpha")),
            "c3": c3,
            "trace": summary,
        }),
    )?;
    Ok(if stable && c3.verdict == Verdict::Supported {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}
