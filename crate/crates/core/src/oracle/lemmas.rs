//! Brute-force checks of the inequalities behind the strongly degenerate
//! theory: the Hardy-type split integral, the best linear fit, pointwise
//! `√|x - x0|` bounds, and empirical norm-equivalence constants.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::coefficient::{DegeneracyClass, DegenerateCoefficient, Profile};
use crate::discretization::{
    build_mesh, shape, weighted_rule, DofMap, QuadratureRule, SingularConvention, WeightKind,
};
use crate::error::{Error, Result};
use crate::oracle::series::{Piecewise, Series};
use crate::oracle::spectral::decompose_dense;

/// The two pieces of `∫∫ 1/a` split at `y0`, for a power law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyPieces {
    /// `∫ over [x0, y0] of |t - x0| / a(t)`
    pub left: f64,
    /// `∫ over [y0, end] of |end - t| / a(t)`
    pub right: f64,
    /// `|y0 - x0|^{2-K} / ((2-K)·scale)`
    pub left_bound: f64,
}

/// Closed form of both pieces. The analysis works with the degeneracy at the
/// origin; a general `x0` is mapped there by translating (and reflecting when
/// `y0 < x0`), so the side of `x0` containing `y0` plays the role of `[0, 1]`.
pub fn hardy_bound(coeff: &DegenerateCoefficient, y0: f64) -> Result<HardyPieces> {
    let k = match coeff.profile() {
        Profile::PowerLaw { exponent } => *exponent,
        _ => return Err(Error::invalid("Hardy pieces are defined for the power law")),
    };
    if k >= 2.0 {
        return Err(Error::Divergent(format!("∫ t/a diverges for K = {k} ≥ 2")));
    }
    if k < 1.0 {
        return Err(Error::invalid(format!("K = {k} is not strongly degenerate")));
    }
    if !(y0 > 0.0 && y0 < 1.0) || y0 == coeff.x0() {
        return Err(Error::invalid(format!("y0 = {y0} must be interior and away from x0")));
    }
    let x0 = coeff.x0();
    let s = coeff.scale();
    let d0 = (y0 - x0).abs();
    let len = if y0 > x0 { 1.0 - x0 } else { x0 };
    let p = 2.0 - k;
    // ∫_0^{d0} t · t^{-K}/scale, via the exact series integrator
    let left = Series::new([(1.0 - k, 1.0 / s)]).integrate(0.0, d0)?;
    let right = if k == 1.0 {
        len * (len / d0).ln() - (len - d0)
    } else {
        let q = 1.0 - k;
        len * (len.powf(q) - d0.powf(q)) / q - (len.powf(p) - d0.powf(p)) / p
    } / s;
    Ok(HardyPieces {
        left,
        right,
        left_bound: d0.powf(p) / (p * s),
    })
}

/// Least-squares line `m x + q` and the sign changes of `u - p1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub zeros: Vec<f64>,
    /// `(∫(u - p1), ∫x(u - p1))`, both zero by the normal equations.
    pub orthogonality: (f64, f64),
    pub max_residual: f64,
}

/// Grid spacing of the sign scan.
pub const ROOT_GRID: f64 = 1e-6;

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// `∫_0^1 x^j u` for `u = Σ c_k x^k`.
fn moment(c: &[f64], j: usize) -> f64 {
    c.iter().enumerate().map(|(k, v)| v / (k + j + 1) as f64).sum()
}

pub fn best_linear_fit(u: &[f64]) -> Result<LinearFit> {
    if u.is_empty() || u.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("polynomial needs finite coefficients"));
    }
    let (i0, i1) = (moment(u, 0), moment(u, 1));
    // Gram matrix of {1, x} has inverse [[4, -6], [-6, 12]]
    let slope = 12.0 * i1 - 6.0 * i0;
    let intercept = 4.0 * i0 - 6.0 * i1;
    let mut r = u.to_vec();
    r.resize(r.len().max(2), 0.0);
    r[0] -= intercept;
    r[1] -= slope;
    let orthogonality = (moment(&r, 0), moment(&r, 1));
    let max_residual = r.iter().map(|c| c.abs()).sum::<f64>();
    // residual of an affine u is round-off; no sign changes are reported then
    let affine = r.iter().all(|c| c.abs() <= 1e-13 * (1.0 + u.iter().map(|c| c.abs()).sum::<f64>()));
    let zeros = if affine { Vec::new() } else { sign_changes(|x| poly(&r, x)) };
    Ok(LinearFit {
        slope,
        intercept,
        zeros,
        orthogonality,
        max_residual,
    })
}

/// Sign changes on a uniform grid of spacing [`ROOT_GRID`], refined by bisection.
pub fn sign_changes(f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = (1.0 / ROOT_GRID).round() as usize;
    let mut out = Vec::new();
    let mut prev_x = 0.0;
    let mut prev = f(0.0);
    for i in 1..=n {
        let x = i as f64 / n as f64;
        let v = f(x);
        if v == 0.0 && prev != 0.0 {
            out.push(x);
        } else if prev != 0.0 && v.signum() != prev.signum() {
            let (mut a, mut b, mut fa) = (prev_x, x, prev);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        if v != 0.0 {
            prev = v;
            prev_x = x;
        }
    }
    out
}

/// Largest `|g(x)| / (‖g'‖ √|x - x0|)` over a sample grid, `g = a u^{(k)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointwiseReport {
    pub order: usize,
    pub max_ratio: f64,
    pub derivative_norm: f64,
    pub samples: usize,
}

pub const POINTWISE_SAMPLES: usize = 4001;

pub fn pointwise_sqrt_bound(
    u: &Piecewise,
    coeff: &DegenerateCoefficient,
    order: usize,
) -> Result<PointwiseReport> {
    if order > 2 {
        return Err(Error::invalid("derivative order must be 0, 1 or 2"));
    }
    if coeff.classify() != DegeneracyClass::Strong {
        return Err(Error::invalid("pointwise bounds concern strongly degenerate coefficients"));
    }
    let (scale, k) = match coeff.profile() {
        Profile::PowerLaw { exponent } => (coeff.scale(), *exponent),
        _ => return Err(Error::Unsupported("pointwise bound needs a power law".into())),
    };
    if u.x0() != coeff.x0() {
        return Err(Error::invalid("u and the coefficient disagree on x0"));
    }
    let g = |p: usize| -> Series { u.derivative_series(p, order).weighted(scale, k) };
    let mut norm_sq = 0.0;
    for p in 0..u.piece_count() {
        let (lo, _) = u.distance_range(p);
        if lo == 0.0 && g(p).limit_at_zero().is_none_or(|v| v != 0.0) {
            return Err(Error::invalid("a u^(k) must vanish at x0"));
        }
        let gp = g(p).derivative(u.side(p));
        if !gp.square_integrable() {
            return Err(Error::invalid("(a u^(k))' is not square integrable"));
        }
        let (lo, hi) = u.distance_range(p);
        norm_sq += gp.mul(&gp).integrate(lo, hi)?;
    }
    let norm = norm_sq.max(0.0).sqrt();
    let x0 = u.x0();
    let mut max_ratio = 0.0f64;
    for i in 0..POINTWISE_SAMPLES {
        let x = i as f64 / (POINTWISE_SAMPLES - 1) as f64;
        let d = (x - x0).abs();
        if d == 0.0 {
            continue;
        }
        let p = u.locate(x, x >= x0);
        let lhs = g(p).eval(d).abs();
        let rhs = norm * d.sqrt();
        if lhs == 0.0 && rhs == 0.0 {
            continue;
        }
        max_ratio = max_ratio.max(lhs / rhs);
    }
    Ok(PointwiseReport {
        order,
        max_ratio,
        derivative_norm: norm,
        samples: POINTWISE_SAMPLES,
    })
}

/// Empirical constant in `‖u'‖² ≤ C (‖u‖² + ‖√a u''‖²)` on one mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivalenceLevel {
    pub n: usize,
    /// Largest ratio over the random samples.
    pub sampled_max: f64,
    /// Exact supremum over the discrete space (largest pencil eigenvalue).
    pub discrete_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub samples: usize,
    pub seed: u64,
    pub levels: Vec<EquivalenceLevel>,
    /// `discrete_sup` ratio between consecutive refinements.
    pub growth: Vec<f64>,
}

impl EquivalenceReport {
    pub fn sampled_max(&self) -> f64 {
        self.levels.first().map_or(0.0, |l| l.sampled_max)
    }
}

fn gram(map: &DofMap, rule: &QuadratureRule, d: usize) -> DMatrix<f64> {
    let n = map.total_dofs();
    let mesh = map.mesh();
    let mut g = DMatrix::zeros(n, n);
    for (e, er) in rule.elements.iter().enumerate() {
        let (l, r) = mesh.element(e);
        let dofs = DofMap::element_dofs(e);
        for (&x, &w) in er.points.iter().zip(&er.weights) {
            let phi = shape(l, r, x, d);
            for i in 0..4 {
                for j in 0..4 {
                    g[(dofs[i], dofs[j])] += w * phi[i] * phi[j];
                }
            }
        }
    }
    g
}

fn level(
    n: usize,
    grading: f64,
    coeff: &DegenerateCoefficient,
    samples: usize,
    seed: u64,
) -> Result<EquivalenceLevel> {
    let mesh = build_mesh(n, coeff.x0(), grading)?;
    let map = DofMap::hermite(&mesh);
    let plain = SingularConvention::Plain;
    let unit = weighted_rule(&mesh, &map, coeff, WeightKind::Unit, plain)?;
    let weighted = weighted_rule(&mesh, &map, coeff, WeightKind::CoeffA, plain)?;
    let num = gram(&map, &unit, 1);
    let den = gram(&map, &unit, 0) + gram(&map, &weighted, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_max = 0.0f64;
    for _ in 0..samples {
        let x = nalgebra::DVector::from_fn(map.total_dofs(), |_, _| StandardNormal.sample(&mut rng));
        let top = (x.transpose() * &num * &x)[(0, 0)];
        let bottom = (x.transpose() * &den * &x)[(0, 0)];
        if bottom > 0.0 {
            sampled_max = sampled_max.max(top / bottom);
        }
    }
    let discrete_sup = decompose_dense(den, num)?.max_eigenvalue();
    Ok(EquivalenceLevel {
        n,
        sampled_max,
        discrete_sup,
    })
}

/// Samples `sample_count` standard-normal dof vectors on an `n`-element mesh
/// and records the exact discrete supremum on `n`, `2n`, `4n`.
pub fn norm_equivalence_report(
    n: usize,
    grading: f64,
    coeff: &DegenerateCoefficient,
    sample_count: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if sample_count < 100 {
        return Err(Error::invalid("norm-equivalence probe needs ≥ 100 samples"));
    }
    let levels = [n, 2 * n, 4 * n]
        .iter()
        .enumerate()
        .map(|(i, &m)| level(m, grading, coeff, if i == 0 { sample_count } else { 0 }, seed))
        .collect::<Result<Vec<_>>>()?;
    let growth = levels
        .windows(2)
        .map(|w| w[1].discrete_sup / w[0].discrete_sup)
        .collect();
    Ok(EquivalenceReport {
        samples: sample_count,
        seed,
        levels,
        growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardy_examples() {
        let a = DegenerateCoefficient::power_profile(0.0, 1.0).unwrap();
        let h = hardy_bound(&a, 0.5).unwrap();
        assert!((h.left - 0.5).abs() < 1e-15);
        assert!((h.right - (-1.0 - 0.5f64.ln() + 0.5)).abs() < 1e-15);
        assert!((h.right - 0.19315).abs() < 1e-5);
        let a = DegenerateCoefficient::power_profile(0.0, 1.5).unwrap();
        assert!((hardy_bound(&a, 0.25).unwrap().left - 1.0).abs() < 1e-15);
        let a = DegenerateCoefficient::power_profile(0.5, 1.0).unwrap();
        let l = hardy_bound(&a, 0.25).unwrap();
        let r = hardy_bound(&a, 0.75).unwrap();
        assert!((l.left - r.left).abs() < 1e-15 && (l.right - r.right).abs() < 1e-15);
        let a = DegenerateCoefficient::power_profile(0.0, 2.5).unwrap();
        assert!(matches!(hardy_bound(&a, 0.5), Err(Error::Divergent(_))));
    }

    #[test]
    fn hardy_right_piece_by_quadrature() {
        let a = DegenerateCoefficient::power_profile(0.0, 1.25).unwrap();
        let h = hardy_bound(&a, 0.3).unwrap();
        let (x, w) = crate::discretization::quadrature::gauss_legendre(40);
        let q: f64 = x
            .iter()
            .zip(&w)
            .map(|(t, w)| {
                let s = 0.3 + 0.35 * (t + 1.0);
                0.35 * w * (1.0 - s) / s.powf(1.25)
            })
            .sum();
        assert!((h.right - q).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_examples() {
        let f = best_linear_fit(&[0.0, 0.0, 1.0]).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-15 && (f.intercept + 1.0 / 6.0).abs() < 1e-15);
        let r = (1.0f64 / 3.0).sqrt() / 2.0;
        assert_eq!(f.zeros.len(), 2);
        assert!((f.zeros[0] - (0.5 - r)).abs() < 1e-12 && (f.zeros[1] - (0.5 + r)).abs() < 1e-12);
        let f = best_linear_fit(&[2.0, -3.0]).unwrap();
        assert!(f.zeros.is_empty() && f.max_residual < 1e-14);
        let f = best_linear_fit(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(f.zeros.len() >= 2);
        assert!(f.orthogonality.0.abs() < 1e-12 && f.orthogonality.1.abs() < 1e-12);
    }

    #[test]
    fn pointwise_examples() {
        let a = DegenerateCoefficient::power_profile(0.5, 1.0).unwrap();
        let one = Piecewise::polynomial(0.5, &[1.0]).unwrap();
        let r = pointwise_sqrt_bound(&one, &a, 0).unwrap();
        assert!((r.derivative_norm - 1.0).abs() < 1e-14);
        assert!((r.max_ratio - 0.5f64.sqrt()).abs() < 1e-12);
        let x = Piecewise::polynomial(0.5, &[0.0, 1.0]).unwrap();
        let r1 = pointwise_sqrt_bound(&x, &a, 1).unwrap();
        assert!((r1.max_ratio - r.max_ratio).abs() < 1e-14);
        let zero = Piecewise::polynomial(0.5, &[0.0]).unwrap();
        assert_eq!(pointwise_sqrt_bound(&zero, &a, 0).unwrap().max_ratio, 0.0);
    }

    #[test]
    fn equivalence_flat_baseline() {
        let flat = DegenerateCoefficient::constant(1.0, 0.5).unwrap();
        let r = norm_equivalence_report(32, 1.0, &flat, 200, 1).unwrap();
        assert!(r.sampled_max().is_finite());
        assert!(r.levels[0].sampled_max <= r.levels[0].discrete_sup * (1.0 + 1e-9));
        assert!(r.levels[0].discrete_sup <= 20.0, "{r:?}");
    }
}
