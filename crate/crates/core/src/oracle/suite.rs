//! Verification batteries and the JSON report they produce.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::coefficient::{DegeneracyClass, DegenerateCoefficient};
use crate::discretization::build_mesh;
use crate::error::{Error, Result};
use crate::forms::{assemble, AssembledSystem, OperatorForm, WentzellParams};
use crate::oracle::green::{green_battery, run_battery};
use crate::oracle::lemmas::{best_linear_fit, hardy_bound, norm_equivalence_report, pointwise_sqrt_bound};
use crate::oracle::series::Piecewise;
use crate::oracle::spectral::dense_decompose;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub inputs: Value,
    pub values: Value,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, inputs: Value, values: Value, tolerance: f64, passed: bool) -> Self {
        Check {
            name: name.into(),
            inputs,
            values,
            tolerance,
            passed,
        }
    }

    fn failed(name: impl Into<String>, inputs: Value, err: &Error) -> Self {
        Check::new(name, inputs, json!({ "error": err.to_string() }), 0.0, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(suite: Suite, seed: u64, checks: Vec<Check>) -> Self {
        VerificationReport {
            suite: suite.as_str().to_string(),
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Green,
    Spectral,
    Hardy,
    Fit,
    Pointwise,
    Norms,
    All,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Green,
        Suite::Spectral,
        Suite::Hardy,
        Suite::Fit,
        Suite::Pointwise,
        Suite::Norms,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Green => "green",
            Suite::Spectral => "spectral",
            Suite::Hardy => "hardy",
            Suite::Fit => "fit",
            Suite::Pointwise => "pointwise",
            Suite::Norms => "norms",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .iter()
            .chain([Suite::All].iter())
            .find(|x| x.as_str() == s)
            .copied()
            .ok_or_else(|| Error::config("suite", format!("unknown suite `{s}`")))
    }
}

/// Runs a suite; `seed` feeds the random probes.
pub fn verify(suite: Suite, seed: u64) -> VerificationReport {
    let checks = match suite {
        Suite::Green => green_checks(),
        Suite::Spectral => spectral_checks(),
        Suite::Hardy => hardy_checks(),
        Suite::Fit => fit_checks(),
        Suite::Pointwise => pointwise_checks(),
        Suite::Norms => norm_checks(seed),
        Suite::All => Suite::ALL
            .iter()
            .flat_map(|s| verify(*s, seed).checks)
            .collect(),
    };
    VerificationReport::new(suite, seed, checks)
}

pub const GREEN_TOL: f64 = 1e-11;

pub fn green_checks() -> Vec<Check> {
    let cases = match green_battery() {
        Ok(c) => c,
        Err(e) => return vec![Check::failed("green_battery", Value::Null, &e)],
    };
    run_battery(&cases)
        .into_iter()
        .zip(&cases)
        .map(|((name, r), c)| {
            let inputs = json!({
                "form": c.form.as_str(),
                "x0": c.coeff.x0(),
                "K": c.coeff.exponent(),
            });
            match r {
                Ok(r) => Check::new(
                    format!("green/{name}"),
                    inputs,
                    serde_json::to_value(r).unwrap_or(Value::Null),
                    GREEN_TOL,
                    r.passes(GREEN_TOL),
                ),
                Err(e) => Check::failed(format!("green/{name}"), inputs, &e),
            }
        })
        .collect()
}

/// Coefficient exponents of the standard test matrix; `0` is the flat case.
pub const MATRIX_EXPONENTS: [f64; 4] = [0.5, 1.0, 1.5, 0.0];

/// Assembles the standard test matrix at `n` elements: both forms, four
/// coefficients, `γ ∈ {0, -1}`, in a fixed order. Meshes are uniform: graded
/// meshes push `λ_max` so high that the relative kernel threshold swallows
/// the first genuine eigenvalue.
pub fn test_matrix(n: usize) -> Result<Vec<(String, AssembledSystem)>> {
    let mut specs = Vec::new();
    for form in [OperatorForm::Divergence, OperatorForm::NonDivergence] {
        for k in MATRIX_EXPONENTS {
            for gamma in [0.0, -1.0] {
                specs.push((form, k, gamma));
            }
        }
    }
    specs
        .into_par_iter()
        .map(|(form, k, gamma)| {
            let coeff = if k == 0.0 {
                DegenerateCoefficient::constant(1.0, 0.5)?
            } else {
                DegenerateCoefficient::power_profile(0.5, k)?
            };
            let mesh = build_mesh(n, 0.5, 1.0)?;
            let params = WentzellParams::new(1.0, 1.0, gamma, gamma)?;
            let name = format!("{}/K={k}/gamma={gamma}", form.as_str());
            Ok((name, assemble(form, &mesh, &coeff, &params)?))
        })
        .collect()
}

/// Expected kernel dimension with `γ = 0`: affine functions, minus the one
/// pinned at `x0` by the strong constraint.
pub fn expected_kernel(sys: &AssembledSystem) -> usize {
    match (sys.form, sys.class) {
        (OperatorForm::NonDivergence, DegeneracyClass::Strong) => 1,
        _ => 2,
    }
}

pub fn spectral_checks() -> Vec<Check> {
    let systems = match test_matrix(16) {
        Ok(s) => s,
        Err(e) => return vec![Check::failed("spectral/assemble", Value::Null, &e)],
    };
    let mut checks = Vec::new();
    for (name, sys) in &systems {
        let inputs = json!({ "case": name, "n": 16 });
        let sym = sys.mass.asymmetry().max(sys.energy.asymmetry());
        checks.push(Check::new(
            format!("symmetry/{name}"),
            inputs.clone(),
            json!({ "max_asymmetry": sym }),
            0.0,
            sym == 0.0,
        ));
        match dense_decompose(sys) {
            Ok(d) => {
                let (lo, hi) = (d.min_eigenvalue(), d.max_eigenvalue());
                checks.push(Check::new(
                    format!("psd/{name}"),
                    inputs.clone(),
                    json!({ "min_eigenvalue": lo, "max_eigenvalue": hi }),
                    1e-10,
                    lo >= -1e-10 * hi,
                ));
                if sys.params.gamma0 == 0.0 && sys.params.gamma1 == 0.0 {
                    let dim = d.kernel_dimension(1e-9);
                    let want = expected_kernel(sys);
                    checks.push(Check::new(
                        format!("kernel/{name}"),
                        inputs,
                        json!({ "kernel_dimension": dim, "expected": want }),
                        1e-9,
                        dim == want,
                    ));
                }
            }
            Err(e) => checks.push(Check::failed(format!("psd/{name}"), inputs, &e)),
        }
    }
    checks
}

pub const HARDY_EXPONENTS: [f64; 4] = [1.0, 1.25, 1.5, 1.75];

pub fn hardy_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    for k in HARDY_EXPONENTS {
        for y0 in [0.25, 0.5] {
            let inputs = json!({ "x0": 0.0, "K": k, "y0": y0 });
            let r = DegenerateCoefficient::power_profile(0.0, k).and_then(|a| hardy_bound(&a, y0));
            checks.push(match r {
                Ok(h) => {
                    let exact = y0.powf(2.0 - k) / (2.0 - k);
                    let rel = (h.left - exact).abs() / exact;
                    Check::new(
                        format!("hardy/K={k}/y0={y0}"),
                        inputs,
                        json!({ "left": h.left, "right": h.right, "expected_left": exact, "relative_error": rel }),
                        1e-12,
                        rel <= 1e-12 && h.right.is_finite() && h.right >= 0.0,
                    )
                }
                Err(e) => Check::failed(format!("hardy/K={k}/y0={y0}"), inputs, &e),
            });
        }
    }
    checks
}

/// Test polynomials for the best-linear-fit lemma.
pub fn fit_cases() -> Vec<(&'static str, Vec<f64>)> {
    vec![
        ("x^2", vec![0.0, 0.0, 1.0]),
        ("x^3", vec![0.0, 0.0, 0.0, 1.0]),
        ("exp_taylor4", vec![1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]),
    ]
}

pub fn fit_checks() -> Vec<Check> {
    fit_cases()
        .into_iter()
        .map(|(name, u)| {
            let inputs = json!({ "u": u });
            match best_linear_fit(&u) {
                Ok(f) => {
                    let orth = f.orthogonality.0.abs().max(f.orthogonality.1.abs());
                    let mut ok = f.zeros.len() >= 2 && orth <= 1e-12;
                    if name == "x^2" {
                        ok &= (f.slope - 1.0).abs() <= 1e-15 && (f.intercept + 1.0 / 6.0).abs() <= 1e-15;
                    }
                    Check::new(
                        format!("fit/{name}"),
                        inputs,
                        serde_json::to_value(&f).unwrap_or(Value::Null),
                        1e-12,
                        ok,
                    )
                }
                Err(e) => Check::failed(format!("fit/{name}"), inputs, &e),
            }
        })
        .collect()
}

/// Documented functions for the pointwise bound: `(label, x0, K, u, order)`.
pub fn pointwise_cases() -> Vec<(&'static str, f64, f64, Vec<f64>, usize)> {
    vec![
        ("one/k=0", 0.5, 1.0, vec![1.0], 0),
        ("x/k=1", 0.5, 1.0, vec![0.0, 1.0], 1),
        ("x^2/k=2", 0.5, 1.0, vec![0.0, 0.0, 1.0], 2),
        ("cubic/k=0/K=1.5", 0.3, 1.5, vec![1.0, -2.0, 0.5, 1.0], 0),
        ("cubic/k=1/K=1.5", 0.3, 1.5, vec![1.0, -2.0, 0.5, 1.0], 1),
        ("quartic/k=2/K=1.25", 0.6, 1.25, vec![0.0, 1.0, 0.0, -1.0, 0.5], 2),
    ]
}

pub fn pointwise_checks() -> Vec<Check> {
    pointwise_cases()
        .into_iter()
        .map(|(name, x0, k, u, order)| {
            let inputs = json!({ "x0": x0, "K": k, "u": u, "order": order });
            let r = DegenerateCoefficient::power_profile(x0, k).and_then(|a| {
                let pw = Piecewise::polynomial(x0, &u)?;
                pointwise_sqrt_bound(&pw, &a, order)
            });
            match r {
                Ok(p) => Check::new(
                    format!("pointwise/{name}"),
                    inputs,
                    serde_json::to_value(p).unwrap_or(Value::Null),
                    1e-8,
                    p.max_ratio <= 1.0 + 1e-8,
                ),
                Err(e) => Check::failed(format!("pointwise/{name}"), inputs, &e),
            }
        })
        .collect()
}

pub fn norm_checks(seed: u64) -> Vec<Check> {
    let cases = [("flat", 0.0), ("weak", 0.5), ("strong", 1.5)];
    cases
        .iter()
        .map(|&(label, k)| {
            let inputs = json!({ "coefficient": label, "K": k, "n": 8, "samples": 500 });
            let r = (if k == 0.0 {
                DegenerateCoefficient::constant(1.0, 0.5)
            } else {
                DegenerateCoefficient::power_profile(0.5, k)
            })
            .and_then(|a| norm_equivalence_report(8, if k >= 1.0 { 2.0 } else { 1.0 }, &a, 500, seed));
            match r {
                Ok(rep) => {
                    let finite = rep.levels.iter().all(|l| l.discrete_sup.is_finite());
                    let sampled_below = rep.levels[0].sampled_max <= rep.levels[0].discrete_sup * (1.0 + 1e-9);
                    Check::new(
                        format!("norm_equivalence/{label}"),
                        inputs,
                        serde_json::to_value(&rep).unwrap_or(Value::Null),
                        0.0,
                        finite && sampled_below,
                    )
                }
                Err(e) => Check::failed(format!("norm_equivalence/{label}"), inputs, &e),
            }
        })
        .collect()
}
