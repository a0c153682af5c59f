//! Gauss rules and per-element weighted quadrature.
//!
//! Elements that do not touch the degeneracy point get a plain Gauss-Legendre
//! rule applied to the full integrand (weight included). The two elements
//! adjacent to `x0` get Gauss-Jacobi rules for the weight `|x - x0|^alpha`,
//! which integrate `polynomial * weight` exactly up to degree 7.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::coefficient::{DegenerateCoefficient, Profile};
use crate::discretization::{DofMap, Mesh};
use crate::error::{Error, Result};

/// Points of the Unit rule. Four points integrate degree 7 exactly.
pub const UNIT_POINTS: usize = 4;
/// Points used on elements away from `x0` for weighted kinds.
pub const FAR_POINTS: usize = 16;
/// Points of the moment-fitted rules on elements touching `x0`.
pub const NEAR_POINTS: usize = 4;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss rule on `[0, 1]` for the weight `t^alpha` (`alpha > -1`), built by
/// Golub-Welsch from the Jacobi recurrence with parameters `(0, alpha)`.
pub fn gauss_jacobi_unit(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if alpha <= -1.0 {
        return Err(Error::Divergent(format!(
            "weight t^{alpha} is not integrable at t = 0"
        )));
    }
    if alpha == 0.0 {
        let (x, w) = gauss_legendre(n);
        return Ok((
            x.iter().map(|s| 0.5 * (s + 1.0)).collect(),
            w.iter().map(|w| 0.5 * w).collect(),
        ));
    }
    // Jacobi weight (1-s)^a (1+s)^b on [-1,1] with a = 0, b = alpha.
    let (a, b) = (0.0_f64, alpha);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let diag = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let j = kf + 1.0;
            let s = 2.0 * j + a + b;
            let beta =
                4.0 * j * (j + a) * (j + b) * (j + a + b) / (s * s * (s + 1.0) * (s - 1.0));
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    // Total mass of (1+s)^alpha on [-1,1].
    let mu0 = 2f64.powf(a + b + 1.0) / (b + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    // t = (s+1)/2, (1+s)^alpha ds = 2^(alpha+1) t^alpha dt
    let scale = 2f64.powf(-(alpha + 1.0));
    Ok((
        pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect(),
        pairs.iter().map(|p| scale * p.1).collect(),
    ))
}

/// Which weight multiplies the integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    Unit,
    CoeffA,
    CoeffReciprocalA,
}

/// How a reciprocal-weight rule treats the elements touching `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularConvention {
    /// The integrand is an arbitrary polynomial; the weight must be integrable.
    #[default]
    Plain,
    /// Every integrand carries a factor `(x - x0)^2` on the elements touching `x0`.
    /// The rule integrates `(x - x0)^2 q(x) / a(x)` exactly for `deg q <= 7`.
    Constrained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly against the weight, `None` when the
    /// rule only approximates (Gauss applied to a non-polynomial weight).
    pub exactness: Option<usize>,
}

impl ElementRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: WeightKind,
    pub convention: SingularConvention,
    pub elements: Vec<ElementRule>,
}

impl QuadratureRule {
    /// Integral of `f * weight` over the whole interval.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.elements.iter().map(|e| e.integrate(&f)).sum()
    }

    /// Smallest exactness over all elements, `None` if any element is inexact.
    pub fn exactness(&self) -> Option<usize> {
        self.elements
            .iter()
            .map(|e| e.exactness)
            .try_fold(usize::MAX, |acc, e| e.map(|e| acc.min(e)))
    }
}

fn legendre_on(l: f64, r: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (s, w) = gauss_legendre(n);
    let half = 0.5 * (r - l);
    let mid = 0.5 * (r + l);
    (
        s.iter().map(|s| mid + half * s).collect(),
        w.iter().map(|w| half * w).collect(),
    )
}

/// Builds the per-element rule for `kind` on `mesh`.
pub fn weighted_rule(
    mesh: &Mesh,
    _map: &DofMap,
    coeff: &DegenerateCoefficient,
    kind: WeightKind,
    convention: SingularConvention,
) -> Result<QuadratureRule> {
    let x0 = mesh.x0();
    let elements = mesh
        .elements()
        .map(|(l, r)| element_rule(l, r, x0, coeff, kind, convention))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadratureRule {
        kind,
        convention,
        elements,
    })
}

fn element_rule(
    l: f64,
    r: f64,
    x0: f64,
    coeff: &DegenerateCoefficient,
    kind: WeightKind,
    convention: SingularConvention,
) -> Result<ElementRule> {
    if kind == WeightKind::Unit {
        let (points, weights) = legendre_on(l, r, UNIT_POINTS);
        return Ok(ElementRule {
            points,
            weights,
            exactness: Some(2 * UNIT_POINTS - 1),
        });
    }

    match coeff.profile() {
        Profile::Constant => {
            let (points, w) = legendre_on(l, r, UNIT_POINTS);
            let c = match kind {
                WeightKind::CoeffA => coeff.scale(),
                _ => 1.0 / coeff.scale(),
            };
            Ok(ElementRule {
                points,
                weights: w.iter().map(|w| w * c).collect(),
                exactness: Some(2 * UNIT_POINTS - 1),
            })
        }
        Profile::Tabulated { knots, .. } => {
            if kind == WeightKind::CoeffReciprocalA {
                return Err(Error::Unsupported(
                    "reciprocal weights of tabulated profiles".into(),
                ));
            }
            // `a` is linear between knots: split and use Gauss on every piece.
            let mut cuts = vec![l];
            cuts.extend(knots.iter().copied().filter(|&k| k > l && k < r));
            cuts.push(r);
            let mut points = Vec::new();
            let mut weights = Vec::new();
            for w in cuts.windows(2) {
                let (p, q) = legendre_on(w[0], w[1], UNIT_POINTS);
                for (x, wt) in p.into_iter().zip(q) {
                    weights.push(wt * coeff.eval(x));
                    points.push(x);
                }
            }
            Ok(ElementRule {
                points,
                weights,
                exactness: Some(2 * UNIT_POINTS - 2),
            })
        }
        Profile::PowerLaw { exponent } => {
            let exponent = *exponent;
            let touches = l == x0 || r == x0;
            let degenerate = exponent > 0.0;
            if !touches || !degenerate {
                let (points, w) = legendre_on(l, r, FAR_POINTS);
                let weights = points
                    .iter()
                    .zip(&w)
                    .map(|(&x, &w)| match kind {
                        WeightKind::CoeffA => w * coeff.eval(x),
                        _ => w / coeff.eval(x),
                    })
                    .collect();
                return Ok(ElementRule {
                    points,
                    weights,
                    exactness: (!degenerate).then_some(2 * FAR_POINTS - 1),
                });
            }
            let h = r - l;
            let (alpha, scale_factor) = match (kind, convention) {
                (WeightKind::CoeffA, _) => (exponent, coeff.scale()),
                (WeightKind::CoeffReciprocalA, SingularConvention::Plain) => {
                    if exponent >= 1.0 {
                        return Err(Error::Divergent(format!(
                            "1/a is not integrable on [{l}, {r}] for exponent {exponent}; \
                             use the constrained convention"
                        )));
                    }
                    (-exponent, 1.0 / coeff.scale())
                }
                (WeightKind::CoeffReciprocalA, SingularConvention::Constrained) => {
                    if exponent >= 3.0 {
                        return Err(Error::Divergent(format!(
                            "(x-x0)^2/a is not integrable for exponent {exponent}"
                        )));
                    }
                    (2.0 - exponent, 1.0 / coeff.scale())
                }
                (WeightKind::Unit, _) => unreachable!(),
            };
            let (t, w) = gauss_jacobi_unit(NEAR_POINTS, alpha)?;
            let jac = h.powf(alpha + 1.0) * scale_factor;
            let mut points = Vec::with_capacity(NEAR_POINTS);
            let mut weights = Vec::with_capacity(NEAR_POINTS);
            for (&ti, &wi) in t.iter().zip(&w) {
                let d = ti * h;
                let x = if l == x0 { x0 + d } else { x0 - d };
                let mut wt = wi * jac;
                if kind == WeightKind::CoeffReciprocalA
                    && convention == SingularConvention::Constrained
                {
                    wt /= d * d;
                }
                points.push(x);
                weights.push(wt);
            }
            if l != x0 {
                points.reverse();
                weights.reverse();
            }
            Ok(ElementRule {
                points,
                weights,
                exactness: Some(2 * NEAR_POINTS - 1),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_degree_2n_minus_1() {
        for n in 1..=16 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn jacobi_matches_moments() {
        for &alpha in &[-0.5, -0.9, 0.3, 0.5, 1.0, 1.5] {
            let (t, w) = gauss_jacobi_unit(4, alpha).unwrap();
            for k in 0..8 {
                let q: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(k)).sum();
                let exact = 1.0 / (k as f64 + alpha + 1.0);
                assert!(
                    ((q - exact) / exact).abs() < 1e-13,
                    "alpha={alpha} k={k}: {q} vs {exact}"
                );
            }
            assert!(t.iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }

    #[test]
    fn jacobi_rejects_nonintegrable_weight() {
        assert!(matches!(gauss_jacobi_unit(4, -1.0), Err(Error::Divergent(_))));
    }
}
