//! Discrete inner products and energy forms.
//!
//! For the divergence operator `(a u'')''` the inner product is that of
//! `L^2(dx) ⊕ (a(j)/β_j) δ_j` and the energy is
//! `∫ a u'' v'' - Σ_j (γ_j/β_j) a(j) u(j) v(j)`.
//! For the non-divergence operator `a u''''` the inner product is that of
//! `L^2(dx/a) ⊕ (1/β_j) δ_j` and the energy is
//! `∫ u'' v'' - Σ_j (γ_j/β_j) u(j) v(j)`.
//! The Wentzell conditions and `u''(0) = u''(1) = 0` are natural, so no
//! boundary dof is touched. In the strongly degenerate non-divergence case the
//! value dof at `x0` is removed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::coefficient::{DegeneracyClass, DegenerateCoefficient, Profile};
use crate::discretization::quadrature::gauss_legendre;
use crate::discretization::{
    shape, weighted_rule, DofMap, Mesh, QuadratureRule, SingularConvention, WeightKind,
};
use crate::error::{Error, Result};

/// Band half-width of the Hermite matrices (two dofs per node, nearest neighbours).
pub const HERMITE_BANDWIDTH: usize = 3;

const FINE_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WentzellParams {
    pub beta0: f64,
    pub beta1: f64,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl WentzellParams {
    pub fn new(beta0: f64, beta1: f64, gamma0: f64, gamma1: f64) -> Result<Self> {
        let p = WentzellParams {
            beta0,
            beta1,
            gamma0,
            gamma1,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("beta0", self.beta0), ("beta1", self.beta1)] {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::config(name, format!("{name} must be > 0, got {b}")));
            }
        }
        for (name, g) in [("gamma0", self.gamma0), ("gamma1", self.gamma1)] {
            if !(g <= 0.0) || !g.is_finite() {
                return Err(Error::config(name, format!("{name} must be ≤ 0, got {g}")));
            }
        }
        Ok(())
    }

    /// Coercivity constant `min{λ, 1, λ - γ0, λ - γ1}`.
    pub fn coercivity_constant(&self, lambda: f64) -> f64 {
        lambda.min(1.0).min(lambda - self.gamma0).min(lambda - self.gamma1)
    }

    /// `λ` must exceed this for the shifted form to be coercive.
    pub fn lambda_floor(&self) -> f64 {
        0f64.max(self.gamma0).max(self.gamma1)
    }
}

impl Default for WentzellParams {
    fn default() -> Self {
        WentzellParams {
            beta0: 1.0,
            beta1: 1.0,
            gamma0: 0.0,
            gamma1: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorForm {
    /// `(a u'')''`
    Divergence,
    /// `a u''''`
    #[serde(rename = "nondivergence")]
    NonDivergence,
}

impl OperatorForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorForm::Divergence => "divergence",
            OperatorForm::NonDivergence => "nondivergence",
        }
    }
}

/// Matrices over the free dofs of `map`.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub form: OperatorForm,
    pub class: DegeneracyClass,
    /// Inner product of the boundary-augmented space.
    pub mass: BandMatrix,
    /// Full energy form (second-derivative part plus boundary γ-terms).
    pub energy: BandMatrix,
    /// Second-derivative part alone: `∫ a u''v''` or `∫ u''v''`.
    pub seminorm: BandMatrix,
    pub params: WentzellParams,
    pub coeff: DegenerateCoefficient,
    pub map: DofMap,
}

impl AssembledSystem {
    /// Number of unconstrained dofs.
    pub fn size(&self) -> usize {
        self.mass.dim()
    }

    pub fn mesh(&self) -> &Mesh {
        self.map.mesh()
    }

    pub fn constrained_dofs(&self) -> Vec<usize> {
        self.map.constrained().iter().copied().collect()
    }

    /// `‖u‖²` in the boundary-augmented space, `u` over free dofs.
    pub fn mass_norm_sq(&self, u: &[f64]) -> f64 {
        self.mass.bilinear(u, u)
    }

    pub fn energy_value(&self, u: &[f64]) -> f64 {
        self.energy.bilinear(u, u)
    }

    /// Free-dof interpolant of `f` (given with its derivative).
    pub fn interpolate(&self, f: impl Fn(f64) -> (f64, f64)) -> Vec<f64> {
        self.map.restrict(&self.map.interpolate(f))
    }

    /// Global dof vector from free dofs.
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        self.map.expand(u)
    }

    /// Boundary atoms `(mass, energy)` at `x = 0` and `x = 1`.
    pub fn boundary_weights(&self) -> ([f64; 2], [f64; 2]) {
        let p = &self.params;
        let (a0, a1) = match self.form {
            OperatorForm::Divergence => (self.coeff.eval(0.0), self.coeff.eval(1.0)),
            OperatorForm::NonDivergence => (1.0, 1.0),
        };
        (
            [a0 / p.beta0, a1 / p.beta1],
            [-p.gamma0 / p.beta0 * a0, -p.gamma1 / p.beta1 * a1],
        )
    }

    fn rules(&self) -> Result<(QuadratureRule, QuadratureRule)> {
        let mesh = self.mesh();
        let plain = SingularConvention::Plain;
        let unit = weighted_rule(mesh, &self.map, &self.coeff, WeightKind::Unit, plain)?;
        match self.form {
            OperatorForm::Divergence => {
                let a = weighted_rule(mesh, &self.map, &self.coeff, WeightKind::CoeffA, plain)?;
                Ok((unit, a))
            }
            OperatorForm::NonDivergence => {
                let convention = if self.class == DegeneracyClass::Strong {
                    SingularConvention::Constrained
                } else {
                    plain
                };
                let recip = weighted_rule(
                    mesh,
                    &self.map,
                    &self.coeff,
                    WeightKind::CoeffReciprocalA,
                    convention,
                )?;
                Ok((recip, unit))
            }
        }
    }

    fn load(
        &self,
        rule: &QuadratureRule,
        d: usize,
        f: impl Fn(f64) -> f64,
        atoms: [f64; 2],
        ends: [f64; 2],
    ) -> Vec<f64> {
        let mesh = self.mesh();
        let mut global = vec![0.0; self.map.total_dofs()];
        for (e, er) in rule.elements.iter().enumerate() {
            let (l, r) = mesh.element(e);
            let dofs = DofMap::element_dofs(e);
            for (&x, &w) in er.points.iter().zip(&er.weights) {
                let phi = shape(l, r, x, d);
                let fx = f(x);
                for k in 0..4 {
                    global[dofs[k]] += w * fx * phi[k];
                }
            }
        }
        global[0] += atoms[0] * ends[0];
        global[DofMap::value_dof(mesh.node_count() - 1)] += atoms[1] * ends[1];
        self.map.restrict(&global)
    }

    /// `⟨f, φ_i⟩` in the boundary-augmented inner product, over free dofs.
    pub fn mass_load(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let (mass_rule, _) = self.rules()?;
        let (atoms, _) = self.boundary_weights();
        let ends = [f(0.0), f(1.0)];
        Ok(self.load(&mass_rule, 0, f, atoms, ends))
    }

    /// Energy form `E(f, φ_i)` over free dofs; `f` returns `(f(x), f''(x))`.
    pub fn energy_load(&self, f: impl Fn(f64) -> (f64, f64)) -> Result<Vec<f64>> {
        let (_, stiff_rule) = self.rules()?;
        let (_, atoms) = self.boundary_weights();
        let ends = [f(0.0).0, f(1.0).0];
        Ok(self.load(&stiff_rule, 2, |x| f(x).1, atoms, ends))
    }
}

fn check_mesh(mesh: &Mesh, coeff: &DegenerateCoefficient, class: DegeneracyClass) -> Result<()> {
    let x0 = mesh.x0();
    if x0 <= 0.0 || x0 >= 1.0 {
        return Err(Error::invalid("degeneracy point must be interior"));
    }
    if class != DegeneracyClass::Nondegenerate && coeff.x0() != x0 {
        return Err(Error::invalid(format!(
            "mesh node x0 = {x0} does not match the coefficient's degeneracy point {}",
            coeff.x0()
        )));
    }
    Ok(())
}

/// Strong coefficients must satisfy the monotonicity hypothesis with their own
/// exponent (linear behaviour for tables).
fn check_strong(coeff: &DegenerateCoefficient) -> Result<()> {
    let k = coeff.exponent().unwrap_or(1.0);
    if !(1.0..2.0).contains(&k) {
        return Err(Error::HypothesisFailed(format!(
            "strongly degenerate problems require K in [1, 2), got {k}"
        )));
    }
    coeff.check_hypothesis(k)
}

pub fn assemble_divergence(
    mesh: &Mesh,
    map: &DofMap,
    coeff: &DegenerateCoefficient,
    params: &WentzellParams,
) -> Result<AssembledSystem> {
    params.validate()?;
    let class = coeff.classify();
    check_mesh(mesh, coeff, class)?;
    if class == DegeneracyClass::Strong {
        check_strong(coeff)?;
    }
    let unit = weighted_rule(mesh, map, coeff, WeightKind::Unit, SingularConvention::Plain)?;
    let weighted = weighted_rule(mesh, map, coeff, WeightKind::CoeffA, SingularConvention::Plain)?;
    let map = map.clone();
    let (a0, a1) = (coeff.eval(0.0), coeff.eval(1.0));
    let boundary_mass = [a0 / params.beta0, a1 / params.beta1];
    let boundary_energy = [-params.gamma0 / params.beta0 * a0, -params.gamma1 / params.beta1 * a1];
    build(
        OperatorForm::Divergence,
        class,
        map,
        coeff,
        params,
        (&unit, 0),
        (&weighted, 2),
        boundary_mass,
        boundary_energy,
    )
}

pub fn assemble_nondivergence(
    mesh: &Mesh,
    map: &DofMap,
    coeff: &DegenerateCoefficient,
    params: &WentzellParams,
) -> Result<AssembledSystem> {
    params.validate()?;
    if matches!(coeff.profile(), Profile::Tabulated { .. }) {
        return Err(Error::Unsupported(
            "non-divergence assembly needs exact 1/a moments (power law or constant)".into(),
        ));
    }
    let class = coeff.classify();
    check_mesh(mesh, coeff, class)?;
    let mut map = map.clone();
    let convention = if class == DegeneracyClass::Strong {
        check_strong(coeff)?;
        map.constrain(DofMap::value_dof(mesh.x0_index()));
        SingularConvention::Constrained
    } else {
        SingularConvention::Plain
    };
    let recip = weighted_rule(mesh, &map, coeff, WeightKind::CoeffReciprocalA, convention)?;
    let unit = weighted_rule(mesh, &map, coeff, WeightKind::Unit, SingularConvention::Plain)?;
    let boundary_mass = [1.0 / params.beta0, 1.0 / params.beta1];
    let boundary_energy = [-params.gamma0 / params.beta0, -params.gamma1 / params.beta1];
    build(
        OperatorForm::NonDivergence,
        class,
        map,
        coeff,
        params,
        (&recip, 0),
        (&unit, 2),
        boundary_mass,
        boundary_energy,
    )
}

/// Assembles either form for a coefficient.
pub fn assemble(
    form: OperatorForm,
    mesh: &Mesh,
    coeff: &DegenerateCoefficient,
    params: &WentzellParams,
) -> Result<AssembledSystem> {
    let map = DofMap::hermite(mesh);
    match form {
        OperatorForm::Divergence => assemble_divergence(mesh, &map, coeff, params),
        OperatorForm::NonDivergence => assemble_nondivergence(mesh, &map, coeff, params),
    }
}

type ElementMatrix = [[f64; 4]; 4];

fn element_matrix(rule: &QuadratureRule, mesh: &Mesh, e: usize, d: usize) -> ElementMatrix {
    let (l, r) = mesh.element(e);
    let er = &rule.elements[e];
    let mut m = [[0.0; 4]; 4];
    for (&x, &w) in er.points.iter().zip(&er.weights) {
        let phi = shape(l, r, x, d);
        for i in 0..4 {
            for j in i..4 {
                m[i][j] += w * phi[i] * phi[j];
            }
        }
    }
    // mirror so the scatter sees bitwise-equal (i, j) and (j, i)
    for i in 0..4 {
        for j in 0..i {
            m[i][j] = m[j][i];
        }
    }
    m
}

#[allow(clippy::too_many_arguments)]
fn build(
    form: OperatorForm,
    class: DegeneracyClass,
    map: DofMap,
    coeff: &DegenerateCoefficient,
    params: &WentzellParams,
    (mass_rule, mass_d): (&QuadratureRule, usize),
    (stiff_rule, stiff_d): (&QuadratureRule, usize),
    boundary_mass: [f64; 2],
    boundary_energy: [f64; 2],
) -> Result<AssembledSystem> {
    let mesh = map.mesh().clone();
    let slots = map.free_index();
    let n = map.free_dofs().len();

    // element-local work is independent; scatter happens in element order
    let locals: Vec<(ElementMatrix, ElementMatrix)> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| {
            (
                element_matrix(mass_rule, &mesh, e, mass_d),
                element_matrix(stiff_rule, &mesh, e, stiff_d),
            )
        })
        .collect();

    let mut mass = BandMatrix::zeros(n, HERMITE_BANDWIDTH);
    let mut seminorm = BandMatrix::zeros(n, HERMITE_BANDWIDTH);
    for (e, (me, ke)) in locals.iter().enumerate() {
        let dofs = DofMap::element_dofs(e);
        for i in 0..4 {
            let Some(gi) = slots[dofs[i]] else { continue };
            for j in 0..4 {
                let Some(gj) = slots[dofs[j]] else { continue };
                mass.add(gi, gj, me[i][j]);
                seminorm.add(gi, gj, ke[i][j]);
            }
        }
    }

    let mut energy = seminorm.clone();
    let ends = [0, mesh.node_count() - 1];
    for (k, node) in ends.iter().enumerate() {
        if let Some(g) = slots[DofMap::value_dof(*node)] {
            mass.add(g, g, boundary_mass[k]);
            if boundary_energy[k] != 0.0 {
                energy.add(g, g, boundary_energy[k]);
            }
        }
    }

    if mass.to_dense().iter().any(|v| !v.is_finite()) || energy.max_abs().is_nan() {
        return Err(Error::Divergent("non-finite matrix entry after assembly".into()));
    }

    Ok(AssembledSystem {
        form,
        class,
        mass,
        energy,
        seminorm,
        params: *params,
        coeff: coeff.clone(),
        map,
    })
}

/// Named norms of a discrete function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    /// `L^2(dx) ⊕ (a(j)/β_j) δ_j`
    XMu,
    /// `L^2(dx/a) ⊕ (1/β_j) δ_j`
    YMu,
    L2,
    /// `‖u'‖_{L²}`
    FirstDerivative,
    /// `‖√a u''‖_{L²}`
    WeightedSecond,
    /// `‖u''‖_{L²}`
    Second,
    /// `‖u‖² + ‖u'‖² + ‖√a u''‖²`
    H2A,
    /// `‖u‖² + ‖√a u''‖²`
    TwoA,
    /// `∫u²/a + ‖u'‖² + ‖u''‖²`
    H2ReciprocalA,
}

/// Evaluates norms of global dof vectors on a fixed mesh and coefficient.
#[derive(Debug, Clone)]
pub struct NormEvaluator {
    map: DofMap,
    coeff: DegenerateCoefficient,
    params: WentzellParams,
    unit: QuadratureRule,
    weighted: QuadratureRule,
    reciprocal: Option<QuadratureRule>,
}

impl NormEvaluator {
    pub fn new(map: &DofMap, coeff: &DegenerateCoefficient, params: &WentzellParams) -> Result<Self> {
        let mesh = map.mesh();
        let unit = weighted_rule(mesh, map, coeff, WeightKind::Unit, SingularConvention::Plain)?;
        let weighted = weighted_rule(mesh, map, coeff, WeightKind::CoeffA, SingularConvention::Plain)?;
        let convention = if coeff.classify() == DegeneracyClass::Strong {
            SingularConvention::Constrained
        } else {
            SingularConvention::Plain
        };
        let reciprocal =
            weighted_rule(mesh, map, coeff, WeightKind::CoeffReciprocalA, convention).ok();
        Ok(NormEvaluator {
            map: map.clone(),
            coeff: coeff.clone(),
            params: *params,
            unit,
            weighted,
            reciprocal,
        })
    }

    pub fn for_system(system: &AssembledSystem) -> Result<Self> {
        Self::new(&system.map, &system.coeff, &system.params)
    }

    fn squared_integral(&self, rule: &QuadratureRule, dofs: &[f64], d: usize) -> f64 {
        let mesh = self.map.mesh();
        let mut total = 0.0;
        for (e, er) in rule.elements.iter().enumerate() {
            let (l, r) = mesh.element(e);
            let local = DofMap::element_dofs(e).map(|i| dofs[i]);
            for (&x, &w) in er.points.iter().zip(&er.weights) {
                let phi = shape(l, r, x, d);
                let v: f64 = local.iter().zip(phi).map(|(c, p)| c * p).sum();
                total += w * v * v;
            }
        }
        total
    }

    fn reciprocal_sq(&self, dofs: &[f64]) -> Result<f64> {
        let rule = self.reciprocal.as_ref().ok_or_else(|| {
            Error::Unsupported("reciprocal weight not available for this coefficient".into())
        })?;
        if rule.convention == SingularConvention::Constrained {
            let v = dofs[DofMap::value_dof(self.map.mesh().x0_index())];
            if v != 0.0 {
                return Err(Error::Divergent(format!(
                    "∫u²/a diverges: u(x0) = {v} but the coefficient is strongly degenerate"
                )));
            }
        }
        Ok(self.squared_integral(rule, dofs, 0))
    }

    /// Squared norm of a global dof vector.
    pub fn norm_sq(&self, dofs: &[f64], kind: NormKind) -> Result<f64> {
        if dofs.len() != self.map.total_dofs() {
            return Err(Error::invalid(format!(
                "expected {} global dofs, got {}",
                self.map.total_dofs(),
                dofs.len()
            )));
        }
        let last = DofMap::value_dof(self.map.mesh().node_count() - 1);
        let (u0, u1) = (dofs[0], dofs[last]);
        let p = &self.params;
        Ok(match kind {
            NormKind::L2 => self.squared_integral(&self.unit, dofs, 0),
            NormKind::FirstDerivative => self.squared_integral(&self.unit, dofs, 1),
            NormKind::Second => self.squared_integral(&self.unit, dofs, 2),
            NormKind::WeightedSecond => self.squared_integral(&self.weighted, dofs, 2),
            NormKind::XMu => {
                self.squared_integral(&self.unit, dofs, 0)
                    + self.coeff.eval(0.0) / p.beta0 * u0 * u0
                    + self.coeff.eval(1.0) / p.beta1 * u1 * u1
            }
            NormKind::YMu => self.reciprocal_sq(dofs)? + u0 * u0 / p.beta0 + u1 * u1 / p.beta1,
            NormKind::H2A => {
                self.squared_integral(&self.unit, dofs, 0)
                    + self.squared_integral(&self.unit, dofs, 1)
                    + self.squared_integral(&self.weighted, dofs, 2)
            }
            NormKind::TwoA => {
                self.squared_integral(&self.unit, dofs, 0)
                    + self.squared_integral(&self.weighted, dofs, 2)
            }
            NormKind::H2ReciprocalA => {
                self.reciprocal_sq(dofs)?
                    + self.squared_integral(&self.unit, dofs, 1)
                    + self.squared_integral(&self.unit, dofs, 2)
            }
        })
    }

    pub fn norm(&self, dofs: &[f64], kind: NormKind) -> Result<f64> {
        self.norm_sq(dofs, kind).map(f64::sqrt)
    }

    /// `‖u_h - f‖_{L²}` for a global dof vector and a reference function.
    pub fn l2_error(&self, dofs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let mesh = self.map.mesh();
        // finer than the unit rule: the reference need not be polynomial
        let (lp, lw) = gauss_legendre(FINE_POINTS);
        let mut total = 0.0;
        for (e, (l, r)) in mesh.elements().enumerate() {
            let local = DofMap::element_dofs(e).map(|i| dofs[i]);
            for (t, w) in lp.iter().zip(&lw) {
                let x = 0.5 * (l + r) + 0.5 * (r - l) * t;
                let phi = shape(l, r, x, 0);
                let v: f64 = local.iter().zip(phi).map(|(c, p)| c * p).sum::<f64>() - f(x);
                total += 0.5 * (r - l) * w * v * v;
            }
        }
        total.sqrt()
    }
}

/// One-shot norm of a global dof vector.
pub fn norm(
    dofs: &[f64],
    map: &DofMap,
    coeff: &DegenerateCoefficient,
    params: &WentzellParams,
    kind: NormKind,
) -> Result<f64> {
    NormEvaluator::new(map, coeff, params)?.norm(dofs, kind)
}
