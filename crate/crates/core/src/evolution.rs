//! Resolvent solves and time integration of `M u' + K u = M h`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::banded::{BandCholesky, BandMatrix};
use crate::coefficient::DegenerateCoefficient;
use crate::discretization::build_mesh;
use crate::error::{Error, Result};
use crate::forms::{assemble, AssembledSystem, OperatorForm, WentzellParams};

/// Relative slack allowed on the per-step contraction check.
pub const CONTRACTION_TOL: f64 = 1e-12;
/// Relative slack allowed on the Gronwall bound.
pub const ENERGY_BOUND_TOL: f64 = 1e-8;
/// Relative residual accepted from a resolvent solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    #[serde(alias = "ImplicitEuler")]
    ImplicitEuler,
    #[serde(alias = "CrankNicolson")]
    CrankNicolson,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit_euler",
            Scheme::CrankNicolson => "crank_nicolson",
        }
    }
}

/// Solves `(λM + K) u = M f` over the free dofs.
pub fn resolvent_solve(system: &AssembledSystem, lambda: f64, f: &[f64]) -> Result<Vec<f64>> {
    check_len(system, f)?;
    if !(lambda > system.params.lambda_floor()) || !lambda.is_finite() {
        return Err(Error::NotCoercive { lambda });
    }
    let op = system.mass.combine(lambda, &system.energy, 1.0);
    let chol = BandCholesky::factor(&op).map_err(|_| Error::NotCoercive { lambda })?;
    Ok(refined_solve(&op, &chol, &system.mass.matvec(f)))
}

/// Cholesky solve plus one refinement sweep; graded meshes make the matrices
/// ill-conditioned enough that round-off otherwise accumulates over many steps.
fn refined_solve(a: &BandMatrix, chol: &BandCholesky, b: &[f64]) -> Vec<f64> {
    let mut u = chol.solve(b);
    let r: Vec<f64> = b.iter().zip(a.matvec(&u)).map(|(b, au)| b - au).collect();
    for (ui, di) in u.iter_mut().zip(chol.solve(&r)) {
        *ui += di;
    }
    u
}

/// `‖(λM + K)u - M f‖ / ‖M f‖` (Euclidean; zero right-hand side gives `‖(λM+K)u‖`).
pub fn resolvent_residual(system: &AssembledSystem, lambda: f64, f: &[f64], u: &[f64]) -> f64 {
    let op = system.mass.combine(lambda, &system.energy, 1.0);
    let rhs = system.mass.matvec(f);
    let res = op.matvec(u);
    let num = l2(&res.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    let den = l2(&rhs);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_len(system: &AssembledSystem, v: &[f64]) -> Result<()> {
    if v.len() != system.size() {
        return Err(Error::invalid(format!(
            "expected {} free dofs, got {}",
            system.size(),
            v.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionState {
    pub t: f64,
    /// Free-dof coefficients.
    pub dofs: Vec<f64>,
    pub norm_mu_sq: f64,
    pub energy: f64,
}

impl EvolutionState {
    pub fn new(system: &AssembledSystem, t: f64, dofs: Vec<f64>) -> Result<Self> {
        check_len(system, &dofs)?;
        Ok(EvolutionState {
            t,
            norm_mu_sq: system.mass_norm_sq(&dofs),
            energy: system.energy_value(&dofs),
            dofs,
        })
    }
}

/// Factored step operator for a fixed scheme and step size.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    system: &'a AssembledSystem,
    scheme: Scheme,
    dt: f64,
    lhs: BandMatrix,
    factor: BandCholesky,
}

impl<'a> Stepper<'a> {
    pub fn new(system: &'a AssembledSystem, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        let theta = match scheme {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        };
        let lhs = system.mass.combine(1.0, &system.energy, theta * dt);
        Ok(Stepper {
            system,
            scheme,
            dt,
            factor: BandCholesky::factor(&lhs)?,
            lhs,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Advances by `dt`; `h_now` and `h_next` are forcing dof vectors at the
    /// step endpoints (`None` for zero forcing).
    pub fn step(
        &self,
        state: &EvolutionState,
        h_now: Option<&[f64]>,
        h_next: Option<&[f64]>,
    ) -> Result<EvolutionState> {
        let sys = self.system;
        check_len(sys, &state.dofs)?;
        let dt = self.dt;
        // increment form: (M + θ dt K) δ = dt (M h̄ - K u), exact for steady states
        let mut hbar = vec![0.0; state.dofs.len()];
        let sources: &[(Option<&[f64]>, f64)] = match self.scheme {
            Scheme::ImplicitEuler => &[(h_next, 1.0)],
            Scheme::CrankNicolson => &[(h_now, 0.5), (h_next, 0.5)],
        };
        for &(h, w) in sources {
            if let Some(h) = h {
                check_len(sys, h)?;
                hbar.iter_mut().zip(h).for_each(|(r, hv)| *r += w * hv);
            }
        }
        let ku = sys.energy.matvec(&state.dofs);
        let rhs: Vec<f64> = sys
            .mass
            .matvec(&hbar)
            .iter()
            .zip(&ku)
            .map(|(mh, k)| dt * (mh - k))
            .collect();
        let delta = refined_solve(&self.lhs, &self.factor, &rhs);
        let next: Vec<f64> = state.dofs.iter().zip(&delta).map(|(u, d)| u + d).collect();
        EvolutionState::new(sys, state.t + dt, next)
    }
}

/// One step with a fresh factorization.
pub fn step(
    state: &EvolutionState,
    system: &AssembledSystem,
    dt: f64,
    h: (Option<&[f64]>, Option<&[f64]>),
    scheme: Scheme,
) -> Result<EvolutionState> {
    Stepper::new(system, scheme, dt)?.step(state, h.0, h.1)
}

/// Scalar time factor `g(t)` of a separable forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TimeProfile {
    Constant,
    /// `e^{rate t}`
    Exponential { rate: f64 },
    /// `sin(frequency t)`
    Sine { frequency: f64 },
    /// `t`
    Linear,
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant => 1.0,
            TimeProfile::Exponential { rate } => (rate * t).exp(),
            TimeProfile::Sine { frequency } => (frequency * t).sin(),
            TimeProfile::Linear => t,
        }
    }
}

/// Named spatial profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `1`
    One,
    /// `x`
    Linear,
    /// `x³(1-x)³`, with `u''(0) = u''(1) = 0`
    Bump,
    /// `cos(πx)`
    Cosine,
    /// Standard normal dof vector from the run seed.
    Random,
}

/// A spatial function: a preset name or ascending polynomial coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Preset(Preset),
    Polynomial(Vec<f64>),
}

const BUMP: [f64; 7] = [0.0, 0.0, 0.0, 1.0, -3.0, 3.0, -1.0];

fn poly_eval(c: &[f64], x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for &ck in c.iter().rev() {
        out[2] = out[2] * x + 2.0 * out[1];
        out[1] = out[1] * x + out[0];
        out[0] = out[0] * x + ck;
    }
    out
}

impl FunctionSpec {
    /// Value, first and second derivative; `None` for the random preset.
    pub fn eval(&self, x: f64) -> Option<[f64; 3]> {
        use std::f64::consts::PI;
        Some(match self {
            FunctionSpec::Preset(Preset::One) => [1.0, 0.0, 0.0],
            FunctionSpec::Preset(Preset::Linear) => [x, 1.0, 0.0],
            FunctionSpec::Preset(Preset::Bump) => poly_eval(&BUMP, x),
            FunctionSpec::Preset(Preset::Cosine) => {
                let (s, c) = (PI * x).sin_cos();
                [c, -PI * s, -PI * PI * c]
            }
            FunctionSpec::Preset(Preset::Random) => return None,
            FunctionSpec::Polynomial(c) => poly_eval(c, x),
        })
    }

    /// Free-dof representation: Hermite interpolant, M-orthogonal projection
    /// when `project` is set, or seeded normal samples for the random preset.
    pub fn discretize(&self, system: &AssembledSystem, project: bool, seed: u64) -> Result<Vec<f64>> {
        if let FunctionSpec::Preset(Preset::Random) = self {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            return Ok((0..system.size()).map(|_| StandardNormal.sample(&mut rng)).collect());
        }
        let f = |x: f64| self.eval(x).unwrap_or_default();
        if project {
            let b = system.mass_load(|x| f(x)[0])?;
            Ok(BandCholesky::factor(&system.mass)?.solve(&b))
        } else {
            Ok(system.interpolate(|x| {
                let v = f(x);
                (v[0], v[1])
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ForcingSpec {
    #[default]
    None,
    /// `h(t, x) = g(t) p(x)`
    Separable { time: TimeProfile, space: FunctionSpec },
    /// Forcing that makes `e^{-t} u0(x)` the exact weak solution.
    Manufactured,
}

/// Forcing in discrete form: `h(t) = g(t) · profile`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub time: TimeProfile,
    pub profile: Vec<f64>,
}

impl Forcing {
    pub fn at(&self, t: f64) -> Vec<f64> {
        let g = self.time.eval(t);
        self.profile.iter().map(|p| g * p).collect()
    }
}

/// Dof vector `H` with `⟨H, φ⟩ = E(w, φ) - ⟨w, φ⟩`, so that `e^{-t} w` solves the
/// weak problem with forcing `e^{-t} H`.
pub fn manufactured_forcing(system: &AssembledSystem, w: impl Fn(f64) -> [f64; 3]) -> Result<Forcing> {
    let e = system.energy_load(|x| {
        let v = w(x);
        (v[0], v[2])
    })?;
    let m = system.mass_load(|x| w(x)[0])?;
    let b: Vec<f64> = e.iter().zip(&m).map(|(a, b)| a - b).collect();
    let profile = BandCholesky::factor(&system.mass)?.solve(&b);
    Ok(Forcing {
        time: TimeProfile::Exponential { rate: -1.0 },
        profile,
    })
}

/// Power law coefficient `scale * |x - x0|^K`; `K = 0` is the flat case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub x0: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl CoefficientSpec {
    pub fn build(&self) -> Result<DegenerateCoefficient> {
        if self.k == 0.0 {
            DegenerateCoefficient::constant(self.scale, self.x0)
        } else {
            DegenerateCoefficient::power_profile(self.x0, self.k)?.with_scale(self.scale)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub form: OperatorForm,
    pub coefficient: CoefficientSpec,
    pub params: WentzellParams,
    pub n: usize,
    pub grading: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub u0: FunctionSpec,
    pub forcing: ForcingSpec,
    /// M-orthogonal projection of `u0` instead of interpolation.
    pub project: bool,
    pub seed: u64,
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::config("T", "T must be > 0"));
        }
        if !(self.dt > 0.0) || self.dt > self.t_final {
            return Err(Error::config("dt", "dt must satisfy 0 < dt ≤ T"));
        }
        if self.n < 2 {
            return Err(Error::config("n", "n must be ≥ 2"));
        }
        if matches!(self.forcing, ForcingSpec::Manufactured)
            && matches!(self.u0, FunctionSpec::Preset(Preset::Random))
        {
            return Err(Error::config("forcing", "manufactured forcing needs an analytic u0"));
        }
        self.params.validate()
    }

    pub fn steps(&self) -> usize {
        let s = self.t_final / self.dt;
        let r = s.round();
        if (s - r).abs() < 1e-9 * s.max(1.0) {
            r as usize
        } else {
            s.ceil() as usize
        }
    }

    pub fn assemble(&self) -> Result<AssembledSystem> {
        let coeff = self.coefficient.build()?;
        let mesh = build_mesh(self.n, self.coefficient.x0, self.grading)?;
        assemble(self.form, &mesh, &coeff, &self.params)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub states: Vec<EvolutionState>,
    /// `slack[n]` belongs to the step ending at `states[n + 1]`.
    pub slack: Vec<f64>,
    pub sup_norm_sq: f64,
    /// `Σ 2 dt E(u^{n+1})`, with the midpoint state in place of `u^{n+1}` for
    /// Crank-Nicolson.
    pub energy_integral: f64,
    /// `Σ dt ‖h^{n+1}‖²_M`
    pub forcing_integral: f64,
    /// `max_n (‖u^n‖² + Σ_{k≤n} 2 dt E) / (e^{t_n} (‖u^0‖² + Σ_{k≤n} dt ‖h^k‖²))`
    pub bound_ratio: f64,
    pub contraction_ok: bool,
    pub slack_ok: bool,
    pub scheme: Scheme,
    pub dt: f64,
}

impl Trajectory {
    pub fn initial(&self) -> &EvolutionState {
        &self.states[0]
    }

    pub fn last(&self) -> &EvolutionState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        self.last().t
    }

    /// Gronwall bound with constant `e^t`, checked along the whole path:
    /// `‖u^n‖² + Σ_{k≤n} 2 dt E ≤ e^{t_n} (‖u^0‖² + Σ_{k≤n} dt ‖h^k‖²)`.
    pub fn energy_bound_ok(&self) -> bool {
        self.bound_ratio <= 1.0 + ENERGY_BOUND_TOL
    }

    /// The cruder `sup_n ‖u^n‖² + Σ_all 2 dt E ≤ e^T (…)`. Adding the supremum
    /// to the full dissipation can double-count (up to `2‖u^0‖²` unforced), so
    /// this fails for strongly damped runs with small `T`.
    pub fn energy_bound_sup_ok(&self) -> bool {
        let lhs = self.sup_norm_sq + self.energy_integral;
        let rhs = self.final_time().exp() * (self.initial().norm_mu_sq + self.forcing_integral);
        lhs <= rhs * (1.0 + ENERGY_BOUND_TOL)
    }

    /// CSV with columns `step,t,norm_mu_sq,energy_form,slack`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,t,norm_mu_sq,energy_form,slack\n");
        for (i, st) in self.states.iter().enumerate() {
            let slack = if i == 0 { 0.0 } else { self.slack[i - 1] };
            let _ = writeln!(
                s,
                "{i},{:.16e},{:.16e},{:.16e},{:.16e}",
                st.t, st.norm_mu_sq, st.energy, slack
            );
        }
        s
    }
}

/// Integrates `n_steps` steps from `u0`.
pub fn integrate(
    system: &AssembledSystem,
    u0: Vec<f64>,
    forcing: Option<&Forcing>,
    scheme: Scheme,
    dt: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    let stepper = Stepper::new(system, scheme, dt)?;
    let mut state = EvolutionState::new(system, 0.0, u0)?;
    let mut traj = Trajectory {
        sup_norm_sq: state.norm_mu_sq,
        states: Vec::with_capacity(n_steps + 1),
        slack: Vec::with_capacity(n_steps),
        energy_integral: 0.0,
        forcing_integral: 0.0,
        bound_ratio: 1.0,
        contraction_ok: true,
        slack_ok: true,
        scheme,
        dt,
    };
    let mut h_now = forcing.map(|f| f.at(0.0));
    traj.states.push(state.clone());
    for k in 0..n_steps {
        let t_next = (k + 1) as f64 * dt;
        let h_next = forcing.map(|f| f.at(t_next));
        let next = stepper.step(&state, h_now.as_deref(), h_next.as_deref())?;

        let h_sq = h_next.as_ref().map_or(0.0, |h| system.mass_norm_sq(h));
        let slack = next.norm_mu_sq - state.norm_mu_sq + 2.0 * dt * next.energy
            - dt * next.norm_mu_sq
            - dt * h_sq;
        let scale = next.norm_mu_sq.max(state.norm_mu_sq).max(h_sq).max(f64::MIN_POSITIVE);
        if scheme == Scheme::ImplicitEuler && slack > 1e-12 * scale {
            traj.slack_ok = false;
        }

        // ‖u⁺‖ ≤ ‖u‖ + dt ‖h_eff‖, which is plain contraction when h = 0
        let h_eff = match (scheme, &h_now, &h_next) {
            (_, _, None) => 0.0,
            (Scheme::ImplicitEuler, _, Some(h)) => system.mass_norm_sq(h).sqrt(),
            (Scheme::CrankNicolson, Some(a), Some(b)) => {
                let avg: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
                system.mass_norm_sq(&avg).sqrt()
            }
            (Scheme::CrankNicolson, None, Some(_)) => unreachable!("forcing sampled at both ends"),
        };
        let bound = state.norm_mu_sq.max(0.0).sqrt() * (1.0 + CONTRACTION_TOL) + dt * h_eff;
        if next.norm_mu_sq.max(0.0).sqrt() > bound + 1e-300 {
            traj.contraction_ok = false;
        }

        traj.slack.push(slack);
        // the dissipated energy is E(u⁺) for implicit Euler and E at the midpoint for
        // Crank-Nicolson; E(u⁺) would overcount stiff modes that CN flips in sign
        let dissipated = match scheme {
            Scheme::ImplicitEuler => next.energy,
            Scheme::CrankNicolson => {
                let mid: Vec<f64> = state.dofs.iter().zip(&next.dofs).map(|(a, b)| 0.5 * (a + b)).collect();
                system.energy_value(&mid)
            }
        };
        traj.energy_integral += 2.0 * dt * dissipated;
        traj.forcing_integral += dt * h_sq;
        traj.sup_norm_sq = traj.sup_norm_sq.max(next.norm_mu_sq);
        let lhs = next.norm_mu_sq + traj.energy_integral;
        let rhs = t_next.exp() * (traj.states[0].norm_mu_sq + traj.forcing_integral);
        if lhs > 0.0 {
            traj.bound_ratio = traj.bound_ratio.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
        }
        traj.states.push(next.clone());
        state = next;
        h_now = h_next;
    }
    Ok(traj)
}

/// Assembles, discretizes the data, and integrates to `T`.
pub fn run(config: &ProblemConfig) -> Result<Trajectory> {
    config.validate()?;
    let system = config.assemble()?;
    run_on(config, &system)
}

/// Like [`run`] on an already assembled system.
pub fn run_on(config: &ProblemConfig, system: &AssembledSystem) -> Result<Trajectory> {
    let u0 = config.u0.discretize(system, config.project, config.seed)?;
    let forcing = match &config.forcing {
        ForcingSpec::None => None,
        ForcingSpec::Separable { time, space } => Some(Forcing {
            time: *time,
            profile: space.discretize(system, config.project, config.seed.wrapping_add(1))?,
        }),
        ForcingSpec::Manufactured => {
            let u0 = config.u0.clone();
            Some(manufactured_forcing(system, |x| u0.eval(x).unwrap_or_default())?)
        }
    };
    let steps = config.steps();
    let dt = config.t_final / steps as f64;
    integrate(system, u0, forcing.as_ref(), config.scheme, dt, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(form: OperatorForm, k: f64, gamma: f64) -> ProblemConfig {
        ProblemConfig {
            form,
            coefficient: CoefficientSpec { x0: 0.5, k, scale: 1.0 },
            params: WentzellParams::new(1.0, 1.0, gamma, gamma).unwrap(),
            n: 8,
            grading: if k >= 1.0 { 2.0 } else { 1.0 },
            t_final: 1.0,
            dt: 0.01,
            scheme: Scheme::ImplicitEuler,
            u0: FunctionSpec::Preset(Preset::One),
            forcing: ForcingSpec::None,
            project: false,
            seed: 7,
        }
    }

    #[test]
    fn polynomial_eval() {
        let v = poly_eval(&BUMP, 0.3);
        let w = 0.3f64.powi(3) * 0.7f64.powi(3);
        assert!((v[0] - w).abs() < 1e-15);
        assert!(poly_eval(&BUMP, 0.0)[2].abs() < 1e-15 && poly_eval(&BUMP, 1.0)[2].abs() < 1e-14);
        assert_eq!(poly_eval(&[1.0, 2.0, 3.0], 2.0), [17.0, 14.0, 6.0]);
    }

    #[test]
    fn resolvent_examples() {
        let sys = config(OperatorForm::Divergence, 0.5, 0.0).assemble().unwrap();
        let one = sys.interpolate(|_| (1.0, 0.0));
        let u = resolvent_solve(&sys, 2.0, &one).unwrap();
        assert!(u.iter().zip(&one).all(|(a, b)| (a - 0.5 * b).abs() < 1e-12));
        let x = sys.interpolate(|x| (x, 1.0));
        let u = resolvent_solve(&sys, 1.0, &x).unwrap();
        assert!(u.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
        let z = vec![0.0; sys.size()];
        assert!(resolvent_solve(&sys, 1.0, &z).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(resolvent_solve(&sys, 0.0, &z), Err(Error::NotCoercive { .. })));
    }

    #[test]
    fn steady_state_both_schemes() {
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let mut cfg = config(OperatorForm::Divergence, 0.5, 0.0);
            cfg.scheme = scheme;
            let tr = run(&cfg).unwrap();
            let n0 = tr.initial().norm_mu_sq;
            assert!((tr.last().norm_mu_sq - n0).abs() < 1e-12 * n0, "{scheme:?} {} {n0}", tr.last().norm_mu_sq);
            assert!((tr.sup_norm_sq - n0).abs() < 1e-12 * n0);
            assert!(tr.contraction_ok && tr.energy_bound_ok());
        }
    }

    #[test]
    fn wentzell_damping_decreases_norm() {
        let tr = run(&config(OperatorForm::Divergence, 0.5, -1.0)).unwrap();
        for w in tr.states.windows(2) {
            assert!(w[1].norm_mu_sq < w[0].norm_mu_sq);
        }
        assert!(tr.slack_ok);
    }

    #[test]
    fn forced_run_respects_bound() {
        let mut cfg = config(OperatorForm::NonDivergence, 1.5, -0.5);
        cfg.u0 = FunctionSpec::Preset(Preset::Random);
        cfg.forcing = ForcingSpec::Separable {
            time: TimeProfile::Sine { frequency: 3.0 },
            space: FunctionSpec::Polynomial(vec![0.0, 1.0, -1.0]),
        };
        let tr = run(&cfg).unwrap();
        assert!(tr.contraction_ok && tr.slack_ok && tr.energy_bound_ok());
        let csv = tr.to_csv();
        assert!(csv.starts_with("step,t,norm_mu_sq,energy_form,slack\n"));
        assert_eq!(csv.lines().count(), 102);
    }

    #[test]
    fn step_count_rounding() {
        let mut cfg = config(OperatorForm::Divergence, 0.5, 0.0);
        cfg.t_final = 0.3;
        cfg.dt = 0.1;
        assert_eq!(cfg.steps(), 3);
        cfg.dt = 0.07;
        assert_eq!(cfg.steps(), 5);
    }

    #[test]
    fn spec_serde_shapes() {
        let f: FunctionSpec = serde_json::from_str("\"bump\"").unwrap();
        assert_eq!(f, FunctionSpec::Preset(Preset::Bump));
        let f: FunctionSpec = serde_json::from_str("[1, 0, 2]").unwrap();
        assert_eq!(f, FunctionSpec::Polynomial(vec![1.0, 0.0, 2.0]));
        assert!(serde_json::from_str::<FunctionSpec>("\"nope\"").is_err());
        let h: ForcingSpec =
            serde_json::from_str(r#"{"kind":"separable","time":{"kind":"exponential","rate":-1},"space":"one"}"#)
                .unwrap();
        assert!(matches!(h, ForcingSpec::Separable { .. }));
    }
}
