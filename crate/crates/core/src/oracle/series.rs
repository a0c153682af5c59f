//! Exact calculus for `Σ c·d^e` in the distance `d = |x - x0|`, which covers
//! polynomials multiplied by power weights `|x - x0|^K` on one side of `x0`.

use crate::discretization::{shape, DofMap};
use crate::error::{Error, Result};

const EXPONENT_EPS: f64 = 1e-12;

/// Terms `(exponent, coefficient)` in increasing exponent order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    terms: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(terms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut raw: Vec<(f64, f64)> = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (e, c) in raw {
            match terms.last_mut() {
                Some(last) if (last.0 - e).abs() <= EXPONENT_EPS => last.1 += c,
                _ => terms.push((e, c)),
            }
        }
        terms.retain(|t| t.1 != 0.0);
        Series { terms }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ t_j (σ d)^j` from Taylor coefficients `t_j` at `x0`; `σ = ±1` is the side.
    pub fn from_taylor(taylor: &[f64], sigma: f64) -> Self {
        Series::new(
            taylor
                .iter()
                .enumerate()
                .map(|(j, &t)| (j as f64, t * sigma.powi(j as i32))),
        )
    }

    /// Multiplication by `scale·d^k`.
    pub fn weighted(&self, scale: f64, k: f64) -> Self {
        Series::new(self.terms.iter().map(|&(e, c)| (e + k, c * scale)))
    }

    /// `d/dx = σ d/dd`.
    pub fn derivative(&self, sigma: f64) -> Self {
        Series::new(
            self.terms
                .iter()
                .filter(|t| t.0 != 0.0)
                .map(|&(e, c)| (e - 1.0, sigma * e * c)),
        )
    }

    pub fn mul(&self, other: &Series) -> Self {
        Series::new(
            self.terms
                .iter()
                .flat_map(|&(e1, c1)| other.terms.iter().map(move |&(e2, c2)| (e1 + e2, c1 * c2))),
        )
    }

    /// Value at `d > 0`.
    pub fn eval(&self, d: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| c * d.powf(e)).sum()
    }

    /// Limit as `d → 0+`; `None` when it is infinite.
    pub fn limit_at_zero(&self) -> Option<f64> {
        let mut v = 0.0;
        for &(e, c) in &self.terms {
            if e < -EXPONENT_EPS {
                return None;
            }
            if e.abs() <= EXPONENT_EPS {
                v += c;
            }
        }
        Some(v)
    }

    /// Value at `d ≥ 0`, using the limit at zero.
    pub fn value_at(&self, d: f64) -> Result<f64> {
        if d > 0.0 {
            Ok(self.eval(d))
        } else {
            self.limit_at_zero()
                .ok_or_else(|| Error::Divergent("unbounded one-sided limit at x0".into()))
        }
    }

    /// `∫_lo^hi Σ c d^e dd` with `0 ≤ lo ≤ hi`.
    pub fn integrate(&self, lo: f64, hi: f64) -> Result<f64> {
        let mut total = 0.0;
        for &(e, c) in &self.terms {
            let p = e + 1.0;
            if p.abs() <= EXPONENT_EPS {
                if lo == 0.0 {
                    return Err(Error::Divergent("logarithmic singularity at x0".into()));
                }
                total += c * (hi / lo).ln();
            } else if p < 0.0 && lo == 0.0 {
                return Err(Error::Divergent(format!("d^{e} is not integrable at x0")));
            } else {
                total += c * (hi.powf(p) - lo.powf(p)) / p;
            }
        }
        Ok(total)
    }

    /// Whether the series is square integrable near `d = 0`.
    pub fn square_integrable(&self) -> bool {
        self.terms.iter().all(|&(e, _)| 2.0 * e > -1.0 + EXPONENT_EPS)
    }
}

/// Taylor coefficients at `x0` of `Σ c_k x^k`.
pub fn taylor_at(coeffs: &[f64], x0: f64) -> Vec<f64> {
    let mut t = coeffs.to_vec();
    // repeated synthetic division by (x - x0)
    let n = t.len();
    for j in 0..n {
        for k in (j..n - 1).rev() {
            t[k] += x0 * t[k + 1];
        }
    }
    t
}

/// Zeroes round-off residue left by re-centring, so that a coefficient meant to
/// vanish at `x0` does not masquerade as a singular term once weighted.
fn clean(mut t: Vec<f64>) -> Vec<f64> {
    let big = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut t {
        if v.abs() <= 1e-14 * big {
            *v = 0.0;
        }
    }
    t
}

/// Derivative of order `k` of a Taylor expansion (same centre).
pub fn taylor_derivative(t: &[f64], k: usize) -> Vec<f64> {
    (k..t.len())
        .map(|j| t[j] * ((j - k + 1)..=j).map(|m| m as f64).product::<f64>())
        .collect()
}

/// A piecewise polynomial on `[0, 1]` whose breakpoints include `x0`; each
/// piece is stored by its Taylor coefficients at `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    x0: f64,
    breaks: Vec<f64>,
    pieces: Vec<Vec<f64>>,
}

impl Piecewise {
    /// Pieces given by monomial coefficients in `x` on `[breaks[i], breaks[i+1]]`.
    pub fn new(x0: f64, breaks: Vec<f64>, monomials: &[Vec<f64>]) -> Result<Self> {
        if breaks.len() != monomials.len() + 1 || breaks.len() < 2 {
            return Err(Error::invalid("need one polynomial per break interval"));
        }
        if breaks[0] != 0.0 || breaks[breaks.len() - 1] != 1.0 {
            return Err(Error::invalid("breaks must span [0, 1]"));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("breaks must increase"));
        }
        if !breaks.contains(&x0) && x0 > 0.0 && x0 < 1.0 {
            return Err(Error::invalid("x0 must be a breakpoint"));
        }
        Ok(Piecewise {
            x0,
            pieces: monomials.iter().map(|c| clean(taylor_at(c, x0))).collect(),
            breaks,
        })
    }

    /// One polynomial on `[0, 1]`.
    pub fn polynomial(x0: f64, coeffs: &[f64]) -> Result<Self> {
        if x0 > 0.0 && x0 < 1.0 {
            Self::new(x0, vec![0.0, x0, 1.0], &[coeffs.to_vec(), coeffs.to_vec()])
        } else {
            Self::new(x0, vec![0.0, 1.0], &[coeffs.to_vec()])
        }
    }

    /// Different polynomials left and right of an interior `x0`.
    pub fn two_sided(x0: f64, left: &[f64], right: &[f64]) -> Result<Self> {
        Self::new(x0, vec![0.0, x0, 1.0], &[left.to_vec(), right.to_vec()])
    }

    /// Exact piecewise-cubic form of a Hermite dof vector.
    pub fn from_hermite(map: &DofMap, dofs: &[f64]) -> Result<Self> {
        if dofs.len() != map.total_dofs() {
            return Err(Error::invalid("dof vector does not match the map"));
        }
        let mesh = map.mesh();
        let mut pieces = Vec::with_capacity(mesh.element_count());
        for (e, (l, r)) in mesh.elements().enumerate() {
            let local = DofMap::element_dofs(e).map(|i| dofs[i]);
            // Taylor data at the left end, then re-centred at x0
            let at_l: Vec<f64> = (0..4)
                .map(|d| {
                    let phi = shape(l, r, l, d);
                    let v: f64 = local.iter().zip(phi).map(|(c, p)| c * p).sum();
                    v / [1.0, 1.0, 2.0, 6.0][d]
                })
                .collect();
            let mono = taylor_at(&at_l, -l);
            pieces.push(mono);
        }
        Self::new(mesh.x0(), mesh.nodes().to_vec(), &pieces)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    /// `+1` right of `x0`, `-1` left.
    pub fn side(&self, piece: usize) -> f64 {
        if self.breaks[piece] >= self.x0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Distance range `[lo, hi]` of a piece.
    pub fn distance_range(&self, piece: usize) -> (f64, f64) {
        let a = (self.breaks[piece] - self.x0).abs();
        let b = (self.breaks[piece + 1] - self.x0).abs();
        (a.min(b), a.max(b))
    }

    /// `k`-th derivative on a piece as a series in `d`.
    pub fn derivative_series(&self, piece: usize, k: usize) -> Series {
        Series::from_taylor(&taylor_derivative(&self.pieces[piece], k), self.side(piece))
    }

    /// Piece index containing `x`, with the side of `x0` chosen explicitly
    /// at breakpoints (`right = true` picks the piece starting at `x`).
    pub fn locate(&self, x: f64, right: bool) -> usize {
        let n = self.pieces.len();
        let idx = self.breaks.partition_point(|&b| b <= x).saturating_sub(1);
        if right {
            idx.min(n - 1)
        } else if idx > 0 && self.breaks[idx] == x {
            idx - 1
        } else {
            idx.min(n - 1)
        }
    }

    /// Value of `u^{(k)}` at `x` from one side.
    pub fn eval(&self, x: f64, k: usize, right: bool) -> f64 {
        let p = self.locate(x, right);
        let t = taylor_derivative(&self.pieces[p], k);
        t.iter().rev().fold(0.0, |acc, c| acc * (x - self.x0) + c)
    }

    /// Largest jump of `u^{(k)}` across interior breakpoints other than `x0`.
    pub fn max_interior_jump(&self, k: usize) -> f64 {
        self.breaks[1..self.breaks.len() - 1]
            .iter()
            .filter(|&&b| b != self.x0)
            .map(|&b| (self.eval(b, k, true) - self.eval(b, k, false)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_mesh;

    #[test]
    fn taylor_shift() {
        // x² around 0.5: 0.25 + (x-0.5) + (x-0.5)²
        let t = taylor_at(&[0.0, 0.0, 1.0], 0.5);
        assert_eq!(t, vec![0.25, 1.0, 1.0]);
        assert_eq!(taylor_derivative(&[1.0, 2.0, 3.0, 4.0], 2), vec![6.0, 24.0]);
    }

    #[test]
    fn integrals_and_limits() {
        let s = Series::new([(0.5, 2.0), (-0.5, 1.0)]);
        let v = s.integrate(0.0, 1.0).unwrap();
        assert!((v - (4.0 / 3.0 + 2.0)).abs() < 1e-15);
        assert!(s.limit_at_zero().is_none());
        assert!(Series::new([(-1.0, 1.0)]).integrate(0.0, 1.0).is_err());
        assert!((Series::new([(-1.0, 1.0)]).integrate(0.5, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let w = Series::new([(0.0, 1.0)]).weighted(1.0, 1.5).derivative(-1.0);
        assert_eq!(w.terms(), &[(0.5, -1.5)]);
    }

    #[test]
    fn hermite_roundtrip() {
        let mesh = build_mesh(6, 0.4, 2.0).unwrap();
        let map = DofMap::hermite(&mesh);
        let dofs = map.interpolate(|x| (x * x * x - x, 3.0 * x * x - 1.0));
        let pw = Piecewise::from_hermite(&map, &dofs).unwrap();
        for x in [0.0, 0.13, 0.4, 0.77, 1.0] {
            assert!((pw.eval(x, 0, true) - (x * x * x - x)).abs() < 1e-12);
            assert!((pw.eval(x, 2, false) - 6.0 * x).abs() < 1e-9);
        }
        assert!(pw.max_interior_jump(1) < 1e-12);
    }
}
