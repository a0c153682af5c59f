//! Both sides of the integration-by-parts identities for `(a u'')''` and
//! `u''''`, evaluated exactly for piecewise polynomials.

use serde::Serialize;

use crate::coefficient::{DegeneracyClass, DegenerateCoefficient, Profile};
use crate::error::{Error, Result};
use crate::forms::OperatorForm;
use crate::oracle::series::{taylor_at, Piecewise, Series};

const CONTINUITY_TOL: f64 = 1e-12;

/// Which identity was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenCase {
    /// `∫(au'')''v = [(au'')'v] - [au''v'] + ∫au''v''`
    Divergence,
    /// `∫u''''v = [u'''v] - [u''v'] + ∫u''v''`
    NonDivergence,
    /// As above plus the jump `[u''v']` across an interior `x0`.
    StrongInterior,
    /// `∫u''''v = u'''(1)v(1) - [u''v'] + ∫u''v''`
    StrongAtZero,
    /// `∫u''''v = -u'''(0)v(0) - [u''v'] + ∫u''v''`
    StrongAtOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenReport {
    pub case: GreenCase,
    pub lhs: f64,
    pub boundary: f64,
    pub jump: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl GreenReport {
    /// Largest magnitude among the terms.
    pub fn scale(&self) -> f64 {
        [self.lhs, self.boundary, self.jump, self.rhs]
            .iter()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// `|lhs - (boundary + rhs)|`, i.e. with the jump dropped.
    pub fn residual_without_jump(&self) -> f64 {
        (self.lhs - (self.boundary + self.rhs)).abs()
    }

    pub fn passes(&self, rel_tol: f64) -> bool {
        self.residual <= rel_tol * self.scale().max(f64::MIN_POSITIVE)
    }
}

/// Weight `scale·|x - x0|^K` as `(scale, K)`; constants have `K = 0`.
fn weight_of(coeff: &DegenerateCoefficient) -> Result<(f64, f64)> {
    match coeff.profile() {
        Profile::PowerLaw { exponent } => Ok((coeff.scale(), *exponent)),
        Profile::Constant => Ok((coeff.scale(), 0.0)),
        Profile::Tabulated { .. } => Err(Error::Unsupported(
            "exact Green identities need a power-law or constant coefficient".into(),
        )),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONTINUITY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(format!("test pair outside the admissible class: {what}")))
    }
}

/// Continuity of derivatives `0..=k` at every interior breakpoint.
fn check_smooth(f: &Piecewise, k: usize, name: &str) -> Result<()> {
    for d in 0..=k {
        require(f.max_interior_jump(d) <= CONTINUITY_TOL, &format!("{name} jumps away from x0"))?;
        let x0 = f.x0();
        if x0 > 0.0 && x0 < 1.0 {
            require(
                close(f.eval(x0, d, false), f.eval(x0, d, true)),
                &format!("{name}^({d}) is discontinuous at x0"),
            )?;
        }
    }
    Ok(())
}

struct Sides<'a> {
    u: &'a Piecewise,
    v: &'a Piecewise,
}

impl Sides<'_> {
    /// `∫_0^1 f(piece)` for per-piece series built by `f`.
    fn integral(&self, f: impl Fn(usize) -> Series) -> Result<f64> {
        let mut total = 0.0;
        for p in 0..self.u.piece_count() {
            let (lo, hi) = self.u.distance_range(p);
            total += f(p).integrate(lo, hi)?;
        }
        Ok(total)
    }

    /// Series value at an end of `[0, 1]` (`right = true` for `x = 1`).
    fn at_end(&self, right: bool, f: impl Fn(usize) -> Series) -> Result<f64> {
        let x = if right { 1.0 } else { 0.0 };
        let p = if right { self.u.piece_count() - 1 } else { 0 };
        f(p).value_at((x - self.u.x0()).abs())
    }

    /// One-sided limit at `x0` (`right` selects the piece starting at `x0`).
    fn at_x0(&self, right: bool, f: impl Fn(usize) -> Series) -> Result<f64> {
        let p = self.u.locate(self.u.x0(), right);
        f(p).value_at(0.0)
    }
}

/// Evaluates the relevant identity for `(u, v)` and the coefficient.
pub fn green_residual(
    form: OperatorForm,
    class: DegeneracyClass,
    u: &Piecewise,
    v: &Piecewise,
    coeff: &DegenerateCoefficient,
) -> Result<GreenReport> {
    if u.breaks() != v.breaks() || u.x0() != v.x0() {
        return Err(Error::invalid("u and v must share breakpoints and x0"));
    }
    if (u.x0() - coeff.x0()).abs() > 0.0 {
        return Err(Error::invalid("test functions and coefficient disagree on x0"));
    }
    let s = Sides { u, v };
    let x0 = u.x0();
    let interior = x0 > 0.0 && x0 < 1.0;
    match form {
        OperatorForm::Divergence => divergence(&s, coeff, interior),
        OperatorForm::NonDivergence => match (class, interior) {
            (DegeneracyClass::Strong, true) => strong_interior(&s),
            (DegeneracyClass::Strong, false) => strong_endpoint(&s, x0 == 0.0),
            _ => nondivergence(&s),
        },
    }
}

fn divergence(s: &Sides, coeff: &DegenerateCoefficient, interior: bool) -> Result<GreenReport> {
    let (scale, k) = weight_of(coeff)?;
    check_smooth(s.u, 1, "u")?;
    check_smooth(s.v, 1, "v")?;
    let (u, v) = (s.u, s.v);
    let g = |p: usize| u.derivative_series(p, 2).weighted(scale, k);
    let sig = |p: usize| u.side(p);
    let g1 = |p: usize| g(p).derivative(sig(p));
    let g2 = |p: usize| g1(p).derivative(sig(p));
    if interior {
        // (a u'') and its derivative must be continuous through x0
        for f in [&g as &dyn Fn(usize) -> Series, &g1] {
            let l = s.at_x0(false, f);
            let r = s.at_x0(true, f);
            match (l, r) {
                (Ok(l), Ok(r)) => require(close(l, r), "(a u'') or (a u'')' jumps at x0")?,
                _ => require(false, "(a u'')' is unbounded at x0")?,
            }
        }
    }
    let lhs = s.integral(|p| g2(p).mul(&v.derivative_series(p, 0)))?;
    let rhs = s.integral(|p| g(p).mul(&v.derivative_series(p, 2)))?;
    let b = |right: bool| -> Result<f64> {
        let t1 = s.at_end(right, |p| g1(p).mul(&v.derivative_series(p, 0)))?;
        let t2 = s.at_end(right, |p| g(p).mul(&v.derivative_series(p, 1)))?;
        Ok(t1 - t2)
    };
    let boundary = b(true)? - b(false)?;
    Ok(report(GreenCase::Divergence, lhs, boundary, 0.0, rhs))
}

fn unweighted_terms(s: &Sides) -> Result<(f64, f64, [f64; 2], [f64; 2])> {
    let (u, v) = (s.u, s.v);
    let lhs = s.integral(|p| u.derivative_series(p, 4).mul(&v.derivative_series(p, 0)))?;
    let rhs = s.integral(|p| u.derivative_series(p, 2).mul(&v.derivative_series(p, 2)))?;
    let third = |right: bool| s.at_end(right, |p| u.derivative_series(p, 3).mul(&v.derivative_series(p, 0)));
    let second = |right: bool| s.at_end(right, |p| u.derivative_series(p, 2).mul(&v.derivative_series(p, 1)));
    Ok((lhs, rhs, [third(false)?, third(true)?], [second(false)?, second(true)?]))
}

fn nondivergence(s: &Sides) -> Result<GreenReport> {
    check_smooth(s.u, 3, "u")?;
    check_smooth(s.v, 1, "v")?;
    let (lhs, rhs, third, second) = unweighted_terms(s)?;
    let boundary = (third[1] - third[0]) - (second[1] - second[0]);
    Ok(report(GreenCase::NonDivergence, lhs, boundary, 0.0, rhs))
}

fn strong_interior(s: &Sides) -> Result<GreenReport> {
    check_smooth(s.u, 1, "u")?;
    check_smooth(s.v, 1, "v")?;
    let x0 = s.u.x0();
    require(s.u.eval(x0, 0, true).abs() <= CONTINUITY_TOL, "u(x0) ≠ 0")?;
    require(s.v.eval(x0, 0, true).abs() <= CONTINUITY_TOL, "v(x0) ≠ 0")?;
    let (lhs, rhs, third, second) = unweighted_terms(s)?;
    let boundary = (third[1] - third[0]) - (second[1] - second[0]);
    let jump_at = |right: bool| s.u.eval(x0, 2, right) * s.v.eval(x0, 1, right);
    let jump = jump_at(true) - jump_at(false);
    Ok(report(GreenCase::StrongInterior, lhs, boundary, jump, rhs))
}

fn strong_endpoint(s: &Sides, at_zero: bool) -> Result<GreenReport> {
    check_smooth(s.u, 3, "u")?;
    check_smooth(s.v, 1, "v")?;
    let x0 = s.u.x0();
    require(s.u.eval(x0, 0, true).abs() <= CONTINUITY_TOL, "u(x0) ≠ 0")?;
    require(s.v.eval(x0, 0, true).abs() <= CONTINUITY_TOL, "v(x0) ≠ 0")?;
    let (lhs, rhs, third, second) = unweighted_terms(s)?;
    let (case, third_term) = if at_zero {
        (GreenCase::StrongAtZero, third[1])
    } else {
        (GreenCase::StrongAtOne, -third[0])
    };
    let boundary = third_term - (second[1] - second[0]);
    Ok(report(case, lhs, boundary, 0.0, rhs))
}

fn report(case: GreenCase, lhs: f64, boundary: f64, jump: f64, rhs: f64) -> GreenReport {
    GreenReport {
        case,
        lhs,
        boundary,
        jump,
        rhs,
        residual: (lhs - (boundary + jump + rhs)).abs(),
    }
}

/// Monomial coefficients of `Σ t_j (x - x0)^j`.
pub fn about(x0: f64, taylor: &[f64]) -> Vec<f64> {
    taylor_at(taylor, -x0)
}

/// A named test pair for the battery.
#[derive(Debug, Clone)]
pub struct GreenCaseSpec {
    pub name: &'static str,
    pub form: OperatorForm,
    pub coeff: DegenerateCoefficient,
    pub u: Piecewise,
    pub v: Piecewise,
}

/// The standard battery: weak, strong and one-sided cases.
pub fn green_battery() -> Result<Vec<GreenCaseSpec>> {
    let pw = |x0: f64, c: &[f64]| Piecewise::polynomial(x0, c);
    let two = |x0: f64, l: &[f64], r: &[f64]| Piecewise::two_sided(x0, l, r);
    let flat = DegenerateCoefficient::constant(1.0, 0.5)?;
    let weak = DegenerateCoefficient::power_profile(0.5, 0.5)?;
    let weak_off = DegenerateCoefficient::power_profile(0.3, 0.7)?.with_scale(2.0)?;
    let strong = DegenerateCoefficient::power_profile(0.5, 1.0)?;
    let strong15 = DegenerateCoefficient::power_profile(0.4, 1.5)?;
    let at_zero = DegenerateCoefficient::power_profile(0.0, 1.0)?;
    let at_one = DegenerateCoefficient::power_profile(1.0, 1.5)?;
    // x²(1-x)²
    let quartic = [0.0, 0.0, 1.0, -2.0, 1.0];
    // (x - x0)³: u'' vanishes at x0, so (a u'')' stays bounded
    let cubic_half = about(0.5, &[0.0, 0.0, 0.0, 1.0]);
    let cubic_03 = about(0.3, &[0.0, 0.0, 0.0, 1.0]);
    let cases = vec![
        GreenCaseSpec {
            name: "divergence_flat_quartic_one",
            form: OperatorForm::Divergence,
            coeff: flat.clone(),
            u: pw(0.5, &quartic)?,
            v: pw(0.5, &[1.0])?,
        },
        GreenCaseSpec {
            name: "divergence_flat_zero_v",
            form: OperatorForm::Divergence,
            coeff: flat.clone(),
            u: pw(0.5, &[0.3, -1.0, 2.0, 0.5, -0.25])?,
            v: pw(0.5, &[0.0])?,
        },
        GreenCaseSpec {
            name: "divergence_flat_general",
            form: OperatorForm::Divergence,
            coeff: flat,
            u: pw(0.5, &[1.0, 2.0, -3.0, 0.5, 0.7, -0.2])?,
            v: pw(0.5, &[0.5, -1.0, 0.25, 2.0])?,
        },
        GreenCaseSpec {
            name: "divergence_weak_cubic",
            form: OperatorForm::Divergence,
            coeff: weak.clone(),
            u: pw(0.5, &cubic_half)?,
            v: pw(0.5, &[1.0, -2.0, 3.0])?,
        },
        GreenCaseSpec {
            name: "divergence_weak_quintic",
            form: OperatorForm::Divergence,
            coeff: weak,
            u: pw(0.5, &about(0.5, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]))?,
            v: pw(0.5, &[0.2, 1.0, -1.0, 0.5])?,
        },
        GreenCaseSpec {
            name: "divergence_weak_off_centre",
            form: OperatorForm::Divergence,
            coeff: weak_off,
            u: pw(0.3, &cubic_03)?,
            v: pw(0.3, &[-1.0, 0.5, 2.0, -0.75])?,
        },
        GreenCaseSpec {
            name: "divergence_strong_cubic",
            form: OperatorForm::Divergence,
            coeff: strong.clone(),
            u: pw(0.5, &about(0.5, &[0.0, 1.0, 0.0, 1.0]))?,
            v: pw(0.5, &[0.0, 1.0, -1.0, 1.0])?,
        },
        GreenCaseSpec {
            name: "divergence_strong_k1_5",
            form: OperatorForm::Divergence,
            coeff: strong15.clone(),
            u: pw(0.4, &[-0.064, 0.48, -1.2, 1.0])?,
            v: pw(0.4, &[2.0, -1.0, 0.5, 0.1])?,
        },
        GreenCaseSpec {
            name: "nondivergence_weak_sextic",
            form: OperatorForm::NonDivergence,
            coeff: DegenerateCoefficient::power_profile(0.5, 0.5)?,
            u: pw(0.5, &[0.0, 1.0, -2.0, 0.5, 1.0, -0.5, 0.25])?,
            v: pw(0.5, &[1.0, 1.0, 1.0])?,
        },
        GreenCaseSpec {
            name: "strong_interior_jump",
            form: OperatorForm::NonDivergence,
            coeff: strong,
            // u = (x-½) + (x-½)² on the left and (x-½) + 3(x-½)² on the right
            u: two(0.5, &[-0.25, 0.0, 1.0], &[0.25, -2.0, 3.0])?,
            // v = (x-½) + (x-½)³
            v: pw(0.5, &[-0.625, 1.75, -1.5, 1.0])?,
        },
        GreenCaseSpec {
            name: "strong_interior_quartic_jump",
            form: OperatorForm::NonDivergence,
            coeff: strong15,
            u: two(
                0.4,
                &about(0.4, &[0.0, -1.0, 1.0]),
                &about(0.4, &[0.0, -1.0, 2.0, 0.0, 1.0]),
            )?,
            v: pw(0.4, &about(0.4, &[0.0, 1.0, 0.0, 0.5]))?,
        },
        GreenCaseSpec {
            name: "strong_at_zero",
            form: OperatorForm::NonDivergence,
            coeff: at_zero,
            u: pw(0.0, &[0.0, 1.0, 2.0, -1.0, 0.5, 0.3])?,
            v: pw(0.0, &[0.0, -1.0, 0.5, 2.0])?,
        },
        GreenCaseSpec {
            name: "strong_at_one",
            form: OperatorForm::NonDivergence,
            coeff: at_one,
            // both vanish at x = 1
            u: pw(1.0, &[-1.0, 0.0, 2.0, -1.5, 0.5])?,
            v: pw(1.0, &[1.0, -2.0, 1.0])?,
        },
    ];
    Ok(cases)
}

/// Runs the battery in order.
pub fn run_battery(cases: &[GreenCaseSpec]) -> Vec<(String, Result<GreenReport>)> {
    cases
        .iter()
        .map(|c| {
            let class = c.coeff.classify();
            (c.name.to_string(), green_residual(c.form, class, &c.u, &c.v, &c.coeff))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_quartic_example() {
        let flat = DegenerateCoefficient::constant(1.0, 0.5).unwrap();
        let u = Piecewise::polynomial(0.5, &[0.0, 0.0, 1.0, -2.0, 1.0]).unwrap();
        let v = Piecewise::polynomial(0.5, &[1.0]).unwrap();
        let r = green_residual(OperatorForm::Divergence, DegeneracyClass::Nondegenerate, &u, &v, &flat)
            .unwrap();
        assert!((r.lhs - 24.0).abs() < 1e-12);
        assert!((r.boundary - 24.0).abs() < 1e-12);
        assert!(r.rhs.abs() < 1e-12 && r.residual < 1e-12);
    }

    #[test]
    fn battery_passes() {
        let cases = green_battery().unwrap();
        assert!(cases.len() >= 12);
        for (name, r) in run_battery(&cases) {
            let r = r.unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(r.passes(1e-11), "{name}: {r:?}");
        }
    }

    #[test]
    fn jump_is_required() {
        let cases = green_battery().unwrap();
        let c = cases.iter().find(|c| c.name == "strong_interior_jump").unwrap();
        let r = green_residual(c.form, DegeneracyClass::Strong, &c.u, &c.v, &c.coeff).unwrap();
        assert!(r.jump.abs() > 0.1);
        assert!(r.residual <= 1e-12 * r.scale());
        assert!(r.residual_without_jump() >= r.jump.abs() * (1.0 - 1e-12));
    }

    #[test]
    fn rejects_non_c1_test_function() {
        let weak = DegenerateCoefficient::power_profile(0.5, 0.5).unwrap();
        let u = Piecewise::polynomial(0.5, &[-0.125, 0.75, -1.5, 1.0]).unwrap();
        let kink = Piecewise::two_sided(0.5, &[0.0, 1.0], &[1.0, -1.0]).unwrap();
        let err = green_residual(OperatorForm::Divergence, DegeneracyClass::Weak, &u, &kink, &weak);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        // u'' ≠ 0 at x0 makes (a u'')' unbounded for K < 1
        let bad = Piecewise::polynomial(0.5, &[0.0, 0.0, 1.0]).unwrap();
        let v = Piecewise::polynomial(0.5, &[1.0]).unwrap();
        assert!(green_residual(OperatorForm::Divergence, DegeneracyClass::Weak, &bad, &v, &weak).is_err());
    }
}
