//! JSON configuration for the command line driver.
//!
//! Every key is optional except `operator`, `coefficient` and `time.T`;
//! unknown keys are rejected and every error names the key at fault.
//!
//! ```json
//! {
//!   "operator": "divergence",
//!   "coefficient": { "x0": 0.5, "K": 0.5 },
//!   "wentzell": { "beta0": 1, "beta1": 1, "gamma0": 0, "gamma1": 0 },
//!   "time": { "T": 1.0, "dt": 0.01, "scheme": "crank_nicolson" },
//!   "mesh": { "n": 32, "grading": 1 },
//!   "initial": "bump",
//!   "forcing": { "kind": "separable", "time": { "kind": "constant" }, "space": "one" },
//!   "verify": { "suite": "all" },
//!   "spectrum": { "count": 10 },
//!   "resolvent": { "lambda": 1.0, "f": "cosine" }
//! }
//! ```

use serde::Deserialize;

use crate::coefficient::DegeneracyClass;
use crate::error::{Error, Result};
use crate::evolution::{CoefficientSpec, ForcingSpec, FunctionSpec, Preset, ProblemConfig, Scheme};
use crate::forms::{OperatorForm, WentzellParams};
use crate::oracle::suite::Suite;

pub const DEFAULT_N: usize = 32;
pub const DEFAULT_STEPS: f64 = 100.0;
pub const DEFAULT_SPECTRUM_COUNT: usize = 10;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    operator: OperatorForm,
    coefficient: CoefficientSpec,
    #[serde(default)]
    wentzell: Option<RawWentzell>,
    time: RawTime,
    #[serde(default)]
    mesh: RawMesh,
    #[serde(default)]
    initial: Option<FunctionSpec>,
    #[serde(default)]
    project: bool,
    #[serde(default)]
    forcing: ForcingSpec,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    verify: RawVerify,
    #[serde(default)]
    spectrum: RawSpectrum,
    #[serde(default)]
    resolvent: RawResolvent,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWentzell {
    beta0: f64,
    beta1: f64,
    gamma0: f64,
    gamma1: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(rename = "T")]
    t_final: f64,
    dt: Option<f64>,
    #[serde(default)]
    scheme: Scheme,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    n: Option<usize>,
    grading: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    suite: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResolvent {
    lambda: Option<f64>,
    f: Option<FunctionSpec>,
}

/// A validated configuration with all defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub problem: ProblemConfig,
    pub class: DegeneracyClass,
    pub suite: Suite,
    pub spectrum_count: usize,
    pub lambda: f64,
    pub resolvent_f: FunctionSpec,
}

pub fn parse_config(text: &str) -> Result<CliConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        Error::config(key, e.into_inner().to_string())
    })?;
    raw.validate()
}

fn prefixed(prefix: &str, e: Error) -> Error {
    match e {
        Error::Config { key, message } => Error::config(format!("{prefix}.{key}"), message),
        other => Error::config(prefix, other.to_string()),
    }
}

impl RawConfig {
    fn validate(self) -> Result<CliConfig> {
        let c = &self.coefficient;
        if !(c.x0 > 0.0 && c.x0 < 1.0) {
            return Err(Error::config("coefficient.x0", "x0 must lie strictly inside (0, 1)"));
        }
        if !(c.k >= 0.0) || !c.k.is_finite() {
            return Err(Error::config("coefficient.K", "K must be a finite number ≥ 0"));
        }
        if !(c.scale > 0.0) || !c.scale.is_finite() {
            return Err(Error::config("coefficient.scale", "scale must be > 0"));
        }
        let coeff = c.build().map_err(|e| prefixed("coefficient", e))?;
        let class = coeff.classify();
        if class == DegeneracyClass::Strong && c.k >= 2.0 {
            return Err(Error::config(
                "coefficient.K",
                format!("Strong requires K ∈ [1,2), got K = {}", c.k),
            ));
        }

        let params = match self.wentzell {
            None => WentzellParams::default(),
            Some(w) => WentzellParams::new(w.beta0, w.beta1, w.gamma0, w.gamma1)
                .map_err(|e| prefixed("wentzell", e))?,
        };

        let t = self.time.t_final;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::config("time.T", "T must be > 0"));
        }
        let dt = self.time.dt.unwrap_or(t / DEFAULT_STEPS);
        if !(dt > 0.0 && dt <= t) {
            return Err(Error::config("time.dt", "dt must satisfy 0 < dt ≤ T"));
        }

        let n = self.mesh.n.unwrap_or(DEFAULT_N);
        if n < 2 {
            return Err(Error::config("mesh.n", "n must be ≥ 2"));
        }
        let default_grading = if class == DegeneracyClass::Strong { 2.0 } else { 1.0 };
        let grading = self.mesh.grading.unwrap_or(default_grading);
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::config("mesh.grading", "grading must be ≥ 1"));
        }

        let suite = match self.verify.suite.as_deref() {
            None => Suite::All,
            Some(s) => s.parse().map_err(|e| prefixed("verify", e))?,
        };
        let spectrum_count = self.spectrum.count.unwrap_or(DEFAULT_SPECTRUM_COUNT);
        if spectrum_count == 0 {
            return Err(Error::config("spectrum.count", "count must be ≥ 1"));
        }
        let lambda = self.resolvent.lambda.unwrap_or(1.0);
        if !(lambda > params.lambda_floor()) || !lambda.is_finite() {
            return Err(Error::config(
                "resolvent.lambda",
                format!("lambda must exceed max(0, gamma0, gamma1) = {}", params.lambda_floor()),
            ));
        }

        let problem = ProblemConfig {
            form: self.operator,
            coefficient: self.coefficient,
            params,
            n,
            grading,
            t_final: t,
            dt,
            scheme: self.time.scheme,
            u0: self.initial.unwrap_or(FunctionSpec::Preset(Preset::One)),
            forcing: self.forcing,
            project: self.project,
            seed: self.seed,
        };
        problem.validate()?;
        Ok(CliConfig {
            problem,
            class,
            suite,
            spectrum_count,
            lambda,
            resolvent_f: self.resolvent.f.unwrap_or(FunctionSpec::Preset(Preset::One)),
        })
    }
}
