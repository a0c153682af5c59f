//! Degenerate weights `a` on `[0, 1]`.
//!
//! The power law `a(x) = scale * |x - x0|^K` is handled in closed form.
//! Tabulated (piecewise-linear) profiles are classified numerically.

use serde::{Deserialize, Serialize};

use crate::discretization::quadrature::gauss_legendre;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `|x - x0|^exponent`
    PowerLaw { exponent: f64 },
    /// Constant `scale`, no degeneracy.
    Constant,
    /// Piecewise-linear through `(knots[i], values[i])`.
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DegeneracyClass {
    /// `a(x0) = 0` and `1/a` integrable.
    Weak,
    /// `a(x0) = 0` and `1/a` not integrable.
    Strong,
    Nondegenerate,
}

impl DegeneracyClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DegeneracyClass::Weak => "weak",
            DegeneracyClass::Strong => "strong",
            DegeneracyClass::Nondegenerate => "nondegenerate",
        }
    }
}

/// Exponent applied to the weight in [`DegenerateCoefficient::singular_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    /// weight `a`
    Direct,
    /// weight `1/a`
    Reciprocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateCoefficient {
    profile: Profile,
    x0: f64,
    scale: f64,
}

impl DegenerateCoefficient {
    /// `a(x) = |x - x0|^k`.
    pub fn power_profile(x0: f64, k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x0) {
            return Err(Error::invalid(format!("x0 = {x0} outside [0, 1]")));
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::invalid(format!("exponent must be >= 0, got {k}")));
        }
        Ok(DegenerateCoefficient {
            profile: Profile::PowerLaw { exponent: k },
            x0,
            scale: 1.0,
        })
    }

    /// `a(x) = value`. `x0` is kept as the mesh anchor only.
    pub fn constant(value: f64, x0: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::invalid(format!("constant coefficient must be > 0, got {value}")));
        }
        if !(0.0..=1.0).contains(&x0) {
            return Err(Error::invalid(format!("x0 = {x0} outside [0, 1]")));
        }
        Ok(DegenerateCoefficient {
            profile: Profile::Constant,
            x0,
            scale: value,
        })
    }

    /// Piecewise-linear profile. Knots must span `[0, 1]`; at most one value
    /// may be zero and that knot becomes `x0`. Without a zero, `x0` is the
    /// knot of the smallest value.
    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::invalid("tabulated profile needs matching knots/values, >= 2"));
        }
        if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
            return Err(Error::invalid("tabulated knots must start at 0 and end at 1"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("tabulated knots must be strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("tabulated values must be finite and >= 0"));
        }
        let zeros: Vec<usize> = (0..values.len()).filter(|&i| values[i] == 0.0).collect();
        if zeros.len() > 1 {
            return Err(Error::Unsupported("coefficients vanishing at several points".into()));
        }
        let x0 = match zeros.first() {
            Some(&i) => knots[i],
            None => {
                let i = (0..values.len())
                    .min_by(|&i, &j| values[i].total_cmp(&values[j]))
                    .unwrap_or(0);
                knots[i]
            }
        };
        Ok(DegenerateCoefficient {
            profile: Profile::Tabulated { knots, values },
            x0,
            scale: 1.0,
        })
    }

    /// Multiplies `a` by `scale > 0`.
    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid(format!("scale must be > 0, got {scale}")));
        }
        match self.profile {
            Profile::Constant => self.scale *= scale,
            _ => self.scale = scale,
        }
        Ok(self)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Power-law exponent, `Some(0)` for constants, `None` for tables.
    pub fn exponent(&self) -> Option<f64> {
        match self.profile {
            Profile::PowerLaw { exponent } => Some(exponent),
            Profile::Constant => Some(0.0),
            Profile::Tabulated { .. } => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::PowerLaw { exponent } => {
                if *exponent == 0.0 {
                    self.scale
                } else {
                    self.scale * (x - self.x0).abs().powf(*exponent)
                }
            }
            Profile::Constant => self.scale,
            Profile::Tabulated { knots, values } => {
                let i = match knots.binary_search_by(|k| k.total_cmp(&x)) {
                    Ok(i) => return self.scale * values[i],
                    Err(i) => i.clamp(1, knots.len() - 1),
                };
                let t = (x - knots[i - 1]) / (knots[i] - knots[i - 1]);
                self.scale * (values[i - 1] + t * (values[i] - values[i - 1]))
            }
        }
    }

    pub fn classify(&self) -> DegeneracyClass {
        match &self.profile {
            Profile::Constant => DegeneracyClass::Nondegenerate,
            Profile::PowerLaw { exponent } => {
                if *exponent == 0.0 {
                    DegeneracyClass::Nondegenerate
                } else if *exponent < 1.0 {
                    DegeneracyClass::Weak
                } else {
                    DegeneracyClass::Strong
                }
            }
            Profile::Tabulated { .. } => {
                if self.eval(self.x0) > 0.0 {
                    DegeneracyClass::Nondegenerate
                } else {
                    classify_numerically(|x| self.eval(x), self.x0).class
                }
            }
        }
    }

    /// Checks that `k` lies in `[1, 2)` and that `|x - x0|^k / a(x)` is
    /// non-increasing left of `x0` and non-decreasing right of it.
    pub fn check_hypothesis(&self, k: f64) -> Result<()> {
        if !(1.0..2.0).contains(&k) {
            return Err(Error::HypothesisFailed(format!("K = {k} is not in [1, 2)")));
        }
        let check_left = self.x0 > 0.0;
        let check_right = self.x0 < 1.0;
        match &self.profile {
            Profile::PowerLaw { exponent } => {
                // ratio is |x - x0|^(k - exponent) / scale
                if k < *exponent {
                    let side = match (check_left, check_right) {
                        (true, true) => "both sides",
                        (true, false) => "left side",
                        _ => "right side",
                    };
                    return Err(Error::HypothesisFailed(format!(
                        "ratio |x-x0|^{k}/a is not monotone on the {side} (exponent {exponent} > K)"
                    )));
                }
                Ok(())
            }
            Profile::Constant => Ok(()),
            Profile::Tabulated { .. } => {
                const SAMPLES: usize = 2000;
                let ratio = |x: f64| (x - self.x0).abs().powf(k) / self.eval(x);
                if check_left {
                    // moving toward x0 the ratio must not increase
                    let xs: Vec<f64> = (0..SAMPLES)
                        .map(|i| self.x0 * i as f64 / SAMPLES as f64)
                        .collect();
                    for w in xs.windows(2) {
                        let (p, q) = (ratio(w[0]), ratio(w[1]));
                        if q > p * (1.0 + 1e-12) {
                            return Err(Error::HypothesisFailed(format!(
                                "ratio increases on the left side between {} and {}",
                                w[0], w[1]
                            )));
                        }
                    }
                }
                if check_right {
                    let xs: Vec<f64> = (1..=SAMPLES)
                        .map(|i| self.x0 + (1.0 - self.x0) * i as f64 / SAMPLES as f64)
                        .collect();
                    for w in xs.windows(2) {
                        let (p, q) = (ratio(w[0]), ratio(w[1]));
                        if q < p * (1.0 - 1e-12) {
                            return Err(Error::HypothesisFailed(format!(
                                "ratio decreases on the right side between {} and {}",
                                w[0], w[1]
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    pub fn satisfies_hypothesis(&self, k: f64) -> bool {
        self.check_hypothesis(k).is_ok()
    }

    /// `∫_l^r x^m a(x)^{±1} dx`.
    ///
    /// Power laws use closed-form antiderivatives of `|x - x0|^q` times the
    /// binomial expansion of `x^m` about `x0`. When that expansion cancels
    /// badly (intervals far from `x0` on the left), the integrand is smooth and
    /// a composite Gauss rule graded toward `x0` is used instead.
    pub fn singular_moment(&self, l: f64, r: f64, m: u32, power: Power) -> Result<f64> {
        if !(l <= r) || l < 0.0 || r > 1.0 {
            return Err(Error::invalid(format!("bad interval [{l}, {r}]")));
        }
        if l == r {
            return Ok(0.0);
        }
        match &self.profile {
            Profile::Constant => {
                let c = match power {
                    Power::Direct => self.scale,
                    Power::Reciprocal => 1.0 / self.scale,
                };
                let m1 = m as f64 + 1.0;
                Ok(c * (r.powf(m1) - l.powf(m1)) / m1)
            }
            Profile::Tabulated { knots, .. } => {
                if power == Power::Reciprocal {
                    return Err(Error::Unsupported(
                        "reciprocal moments of tabulated profiles".into(),
                    ));
                }
                let mut cuts = vec![l];
                cuts.extend(knots.iter().copied().filter(|&k| k > l && k < r));
                cuts.push(r);
                let pts = (m as usize + 3).div_ceil(2);
                let (s, w) = gauss_legendre(pts);
                let mut total = 0.0;
                for c in cuts.windows(2) {
                    let half = 0.5 * (c[1] - c[0]);
                    let mid = 0.5 * (c[1] + c[0]);
                    for (s, w) in s.iter().zip(&w) {
                        let x = mid + half * s;
                        total += half * w * x.powi(m as i32) * self.eval(x);
                    }
                }
                Ok(total)
            }
            Profile::PowerLaw { exponent } => {
                let (q, c) = match power {
                    Power::Direct => (*exponent, self.scale),
                    Power::Reciprocal => (-*exponent, 1.0 / self.scale),
                };
                let x0 = self.x0;
                let mut total = 0.0;
                if l < x0 {
                    let hi = r.min(x0);
                    total += side_moment(x0, x0 - hi, x0 - l, m, q, -1.0)?;
                }
                if r > x0 {
                    let lo = l.max(x0);
                    total += side_moment(x0, lo - x0, r - x0, m, q, 1.0)?;
                }
                Ok(c * total)
            }
        }
    }
}

/// `∫ (x0 + sigma d)^m d^q dd` over `d in [d_lo, d_hi]`.
fn side_moment(x0: f64, d_lo: f64, d_hi: f64, m: u32, q: f64, sigma: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        if j > 0 {
            binom *= (m - j + 1) as f64 / j as f64;
        }
        let coef = binom * x0.powi((m - j) as i32) * sigma.powi(j as i32);
        if coef == 0.0 {
            continue;
        }
        let term = coef * power_integral(d_lo, d_hi, j as f64 + q)?;
        sum += term;
        abs_sum += term.abs();
    }
    if d_lo > 0.0 && abs_sum > 1e3 * sum.abs() {
        return Ok(graded_gauss(x0, d_lo, d_hi, |d| {
            (x0 + sigma * d).powi(m as i32) * d.powf(q)
        }));
    }
    Ok(sum)
}

/// `∫_lo^hi t^e dt` for `0 <= lo <= hi`.
fn power_integral(lo: f64, hi: f64, e: f64) -> Result<f64> {
    if lo == 0.0 && e <= -1.0 {
        return Err(Error::Divergent(format!(
            "∫ t^{e} dt diverges at the degeneracy point"
        )));
    }
    if e == -1.0 {
        return Ok((hi / lo).ln());
    }
    let e1 = e + 1.0;
    if lo > 0.0 && e1.abs() < 1.0 {
        // near the logarithmic case hi^e1 - lo^e1 cancels; expm1 keeps the digits
        return Ok(lo.powf(e1) * (e1 * (hi / lo).ln()).exp_m1() / e1);
    }
    Ok((hi.powf(e1) - lo.powf(e1)) / e1)
}

/// Composite 24-point Gauss over `[lo, hi]` with panels doubling away from 0.
fn graded_gauss(_x0: f64, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (s, w) = gauss_legendre(24);
    let mut a = lo;
    let mut total = 0.0;
    while a < hi {
        let b = (2.0 * a).min(hi).max(a + (hi - lo) * 1e-3).min(hi);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        total += s
            .iter()
            .zip(&w)
            .map(|(s, w)| half * w * f(mid + half * s))
            .sum::<f64>();
        a = b;
    }
    total
}

/// Result of the numerical integrability test for `1/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityProbe {
    pub class: DegeneracyClass,
    /// Last partial integral over `[0,1]` minus the excluded neighbourhood.
    pub partial: f64,
    /// Mean ratio of successive shell contributions over the last levels.
    pub shell_ratio: f64,
    pub levels: usize,
}

/// Partial integrals threshold beyond which `1/a` is declared non-integrable.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;
/// Relative Cauchy tolerance for declaring convergence.
pub const CAUCHY_TOLERANCE: f64 = 1e-6;
const MAX_LEVELS: usize = 48;
const RATIO_WINDOW: usize = 8;

/// Integrates `1/a` over `[0,1]` minus dyadically shrinking neighbourhoods of
/// `x0`. Declares divergence when partial integrals exceed
/// [`DIVERGENCE_THRESHOLD`]; convergence when the last shell contributes less
/// than [`CAUCHY_TOLERANCE`] of the total or the shell contributions decay
/// geometrically. Shells that do not decay (ratio >= 1 - 1e-6) mean divergence.
pub fn classify_numerically(a: impl Fn(f64) -> f64, x0: f64) -> IntegrabilityProbe {
    let (s, w) = gauss_legendre(16);
    let shell = |lo: f64, hi: f64| -> f64 {
        // both sides at distances in [lo, hi), clipped to [0, 1]
        let mut total = 0.0;
        for (a_, b_) in [(x0 + lo, x0 + hi), (x0 - hi, x0 - lo)] {
            let a_ = a_.max(0.0);
            let b_ = b_.min(1.0);
            if b_ <= a_ {
                continue;
            }
            let half = 0.5 * (b_ - a_);
            let mid = 0.5 * (b_ + a_);
            total += s
                .iter()
                .zip(&w)
                .map(|(s, w)| half * w / a(mid + half * s))
                .sum::<f64>();
        }
        total
    };
    let reach = x0.max(1.0 - x0);
    let mut partial = 0.0;
    let mut increments = Vec::with_capacity(MAX_LEVELS);
    let mut eps = reach;
    for level in 1..=MAX_LEVELS {
        let next = eps * 0.5;
        let d = shell(next, eps);
        eps = next;
        partial += d;
        increments.push(d);
        if !partial.is_finite() || partial > DIVERGENCE_THRESHOLD {
            return IntegrabilityProbe {
                class: DegeneracyClass::Strong,
                partial,
                shell_ratio: f64::INFINITY,
                levels: level,
            };
        }
        if level > RATIO_WINDOW && d <= CAUCHY_TOLERANCE * partial {
            return IntegrabilityProbe {
                class: DegeneracyClass::Weak,
                partial,
                shell_ratio: mean_ratio(&increments),
                levels: level,
            };
        }
    }
    let ratio = mean_ratio(&increments);
    IntegrabilityProbe {
        class: if ratio < 1.0 - CAUCHY_TOLERANCE {
            DegeneracyClass::Weak
        } else {
            DegeneracyClass::Strong
        },
        partial,
        shell_ratio: ratio,
        levels: MAX_LEVELS,
    }
}

fn mean_ratio(increments: &[f64]) -> f64 {
    let n = increments.len();
    let k = RATIO_WINDOW.min(n - 1);
    if k == 0 {
        return f64::NAN;
    }
    let first = increments[n - 1 - k];
    let last = increments[n - 1];
    (last / first).powf(1.0 / k as f64)
}
