//! JSON system description.
//!
//! ```json
//! {
//!   "n": 2, "t0": 0, "x0": [-5, 2], "norm": "two",
//!   "A": [["t", "sin(t)"], ["t^(1/2)", "1"]],
//!   "Delta": [["1/(1+t^2)", "t"], ["-t", "0"]],
//!   "B": [[1, 0], [0, 1]],
//!   "omega": ["t^(11/4)*cos(x1)", "1"],
//!   "omega_bound": "(t^(11/2)+1)^(1/2)",
//!   "controller": {"lambda": [-1, -1], "gamma": "auto", "margin": 1},
//!   "horizon": 10, "tol": 1e-8
//! }
//! ```
//!
//! Unknown keys are rejected. Without a `controller` key the gain is zero.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{parse, MatrixFunction, VarSet};
use crate::linalg::{Matrix, NormKind};
use crate::synthesis::{synthesize, GammaRule};
use crate::system::{ControllerSpec, SystemSpec};

pub const DEFAULT_HORIZON: f64 = 10.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub n: usize,
    #[serde(default)]
    pub t0: f64,
    pub x0: Vec<f64>,
    #[serde(default = "default_norm")]
    pub norm: String,
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
    #[serde(rename = "Delta", default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<Vec<String>>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_bound: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

fn default_norm() -> String {
    "two".into()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

/// `"auto"` or one expression string per state.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaConfig {
    Auto,
    Exprs(Vec<String>),
}

impl Serialize for GammaConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GammaConfig::Auto => s.serialize_str("auto"),
            GammaConfig::Exprs(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for GammaConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(Vec<String>),
        }
        match Raw::deserialize(d).map_err(|_| {
            serde::de::Error::custom("gamma must be \"auto\" or an array of expression strings")
        })? {
            Raw::Word(w) if w == "auto" => Ok(GammaConfig::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "gamma must be \"auto\" or an array of expression strings, got \"{w}\""
            ))),
            Raw::List(v) => Ok(GammaConfig::Exprs(v)),
        }
    }
}

fn parse_norm(name: &str) -> Result<NormKind> {
    match name {
        "one" | "two" | "inf" => name.parse(),
        other => Err(Error::Config(format!(
            "norm must be \"one\", \"two\" or \"inf\", got \"{other}\""
        ))),
    }
}

fn with_context(key: &str, e: Error) -> Error {
    match e {
        Error::Source(mut s) => {
            s.message = format!("{key}: {}", s.message);
            Error::Source(s)
        }
        Error::Config(m) => Error::Config(format!("{key}: {m}")),
        Error::Dimension(m) => Error::Config(format!("{key}: {m}")),
        other => other,
    }
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    /// Validates every key against `n` and parses all expressions.
    pub fn to_spec(&self) -> Result<SystemSpec> {
        let n = self.n;
        if n == 0 || n > crate::linalg::MAX_DIM {
            return Err(Error::Config(format!(
                "n must be in 1..={}, got {n}",
                crate::linalg::MAX_DIM
            )));
        }
        let square = |key: &str, rows: usize, cols: Option<usize>| -> Result<()> {
            if rows != n || cols.is_some_and(|c| c != n) {
                return Err(Error::Config(format!("{key} must be {n}x{n}")));
            }
            Ok(())
        };
        let ragged = |g: &[Vec<String>]| g.iter().find(|r| r.len() != n).map(Vec::len);
        square("A", self.a.len(), ragged(&self.a))?;
        let a = MatrixFunction::parse_square(&self.a, VarSet::time())
            .map_err(|e| with_context("A", e))?;

        let b_ragged = self.b.iter().find(|r| r.len() != n).map(Vec::len);
        square("B", self.b.len(), b_ragged)?;
        let b = Matrix::from_rows(&self.b).map_err(|e| with_context("B", e))?;

        if let Some(t) = self.horizon {
            if !(t > self.t0) || !t.is_finite() {
                return Err(Error::Config(format!("horizon must exceed t0, got {t}")));
            }
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(Error::Config(format!("tol must be positive, got {tol}")));
            }
        }

        let mut spec =
            SystemSpec::new(a, b, self.t0, self.x0.clone())?.with_norm(parse_norm(&self.norm)?);
        if let Some(d) = &self.delta {
            square("Delta", d.len(), ragged(d))?;
            let d = MatrixFunction::parse_square(d, VarSet::time())
                .map_err(|e| with_context("Delta", e))?;
            spec = spec.with_delta(d)?;
        }
        let bound = match &self.omega_bound {
            Some(s) => {
                Some(parse(s, &VarSet::time()).map_err(|e| with_context("omega_bound", e.into()))?)
            }
            None => None,
        };
        match &self.omega {
            Some(w) => {
                if w.len() != n {
                    return Err(Error::Config(format!("omega must have {n} entries")));
                }
                let w = MatrixFunction::parse_column(w, VarSet::state(n))
                    .map_err(|e| with_context("omega", e))?;
                spec = spec.with_omega(w, bound)?;
            }
            None => {
                if let Some(b) = bound {
                    spec = spec.with_omega_bound(b)?;
                }
            }
        }
        Ok(spec)
    }

    /// The configured controller, or the zero gain when none is declared.
    pub fn build_controller(&self, spec: &SystemSpec) -> Result<ControllerSpec> {
        match &self.controller {
            None => ControllerSpec::open_loop(spec),
            Some(c) => {
                let lambda = c.lambda.clone().unwrap_or_else(|| vec![-1.0; spec.n]);
                synthesize(spec, &lambda, &c.rule(spec.n)?)
            }
        }
    }

    /// Rebuilds a document from a spec; `controller`, `horizon` and `tol` are left unset.
    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        let grid = |f: &MatrixFunction| f.to_strings();
        let norm = match &spec.norm {
            NormKind::Weighted(_) => {
                return Err(Error::Config(
                    "weighted norms have no config representation".into(),
                ))
            }
            k => k.name().to_string(),
        };
        Ok(Self {
            n: spec.n,
            t0: spec.t0,
            x0: spec.x0.clone(),
            norm,
            a: grid(&spec.a),
            delta: spec.delta.as_ref().map(grid),
            b: spec.b.rows(),
            omega: spec.omega.as_ref().map(|w| {
                w.to_strings()
                    .into_iter()
                    .map(|mut r| r.remove(0))
                    .collect()
            }),
            omega_bound: spec.omega_bound.as_ref().map(|e| e.to_string()),
            controller: None,
            horizon: None,
            tol: None,
        })
    }
}

impl ControllerConfig {
    pub fn rule(&self, n: usize) -> Result<GammaRule> {
        match &self.gamma {
            None | Some(GammaConfig::Auto) => Ok(GammaRule::Auto {
                margin: self.margin.unwrap_or(DEFAULT_MARGIN),
            }),
            Some(GammaConfig::Exprs(v)) => {
                if v.len() != n {
                    return Err(Error::Config(format!(
                        "controller.gamma must have {n} entries"
                    )));
                }
                if self.margin.is_some() {
                    return Err(Error::Config(
                        "controller.margin applies to gamma = \"auto\" only".into(),
                    ));
                }
                let exprs = v
                    .iter()
                    .map(|s| {
                        parse(s, &VarSet::time())
                            .map_err(|e| with_context("controller.gamma", e.into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(GammaRule::Explicit(exprs))
            }
        }
    }
}

/// Built-in configurations.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 5] = [
        "example2",
        "example2-open",
        "stable-diag",
        "unstable-diag",
        "rotation",
    ];

    fn strings<const N: usize>(rows: [[&str; N]; N]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn base(a: Vec<Vec<String>>, x0: Vec<f64>, horizon: f64) -> ConfigDocument {
        let n = a.len();
        ConfigDocument {
            n,
            t0: 0.0,
            x0,
            norm: "two".into(),
            a,
            delta: None,
            b: Matrix::identity(n).rows(),
            omega: None,
            omega_bound: None,
            controller: None,
            horizon: Some(horizon),
            tol: Some(DEFAULT_TOL),
        }
    }

    /// The time-varying plant with unbounded uncertainty and disturbance,
    /// `lambda = (-1, -1)` and the hand-picked `gamma_i`.
    pub fn example2() -> ConfigDocument {
        let mut doc = example2_open();
        doc.controller = Some(ControllerConfig {
            lambda: Some(vec![-1.0, -1.0]),
            gamma: Some(GammaConfig::Exprs(vec![
                "-t*(t^6+1)^(1/2)".into(),
                "-t^(1/2)*(t^6+1)^(1/2)".into(),
            ])),
            margin: None,
        });
        doc
    }

    /// [`example2`] without a controller.
    pub fn example2_open() -> ConfigDocument {
        let mut doc = base(
            strings([["t", "sin(t)"], ["t^(1/2)", "1"]]),
            vec![-5.0, 2.0],
            10.0,
        );
        doc.delta = Some(strings([["1/(1+t^2)", "t"], ["-t", "0"]]));
        doc.omega = Some(vec!["t^(11/4)*cos(x1)".into(), "1".into()]);
        doc.omega_bound = Some("(t^(11/2)+1)^(1/2)".into());
        doc
    }

    pub fn stable_diag() -> ConfigDocument {
        base(strings([["-1", "0"], ["0", "-1"]]), vec![1.0, 1.0], 5.0)
    }

    pub fn unstable_diag() -> ConfigDocument {
        base(strings([["1", "0"], ["0", "1"]]), vec![1.0, 1.0], 5.0)
    }

    pub fn rotation() -> ConfigDocument {
        base(strings([["0", "1"], ["-1", "0"]]), vec![1.0, 0.0], 10.0)
    }

    pub fn by_name(name: &str) -> Option<ConfigDocument> {
        match name {
            "example2" | "repro" => Some(example2()),
            "example2-open" => Some(example2_open()),
            "stable-diag" => Some(stable_diag()),
            "unstable-diag" => Some(unstable_diag()),
            "rotation" => Some(rotation()),
            _ => None,
        }
    }
}
