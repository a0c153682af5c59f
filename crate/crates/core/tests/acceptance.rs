//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines come out in order; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use wentzell_core::evolution::{
    integrate, manufactured_forcing, resolvent_residual, resolvent_solve, CoefficientSpec, ForcingSpec,
    FunctionSpec, Preset, ProblemConfig, Scheme, TimeProfile,
};
use wentzell_core::forms::{AssembledSystem, NormEvaluator, OperatorForm, WentzellParams};
use wentzell_core::oracle::spectral::min_symmetric_eigenvalue;
use wentzell_core::oracle::suite::{
    expected_kernel, fit_checks, green_checks, hardy_checks, pointwise_checks, test_matrix,
};
use wentzell_core::oracle::{dense_decompose, exact_propagator, Check};
use wentzell_core::{evolution, Result};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn matrix() -> Result<Vec<(String, AssembledSystem)>> {
    test_matrix(16)
}

fn c1_symmetry() -> Result<Outcome> {
    let systems = matrix()?;
    let worst = systems
        .iter()
        .map(|(_, s)| s.mass.asymmetry().max(s.energy.asymmetry()))
        .fold(0.0f64, f64::max);
    outcome(worst == 0.0, format!("{} cases, max asymmetry {worst:e}", systems.len()))
}

fn c2_nonnegativity() -> Result<Outcome> {
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut kernels_ok = true;
    let mut kernels = Vec::new();
    for (name, s) in matrix()? {
        let d = dense_decompose(&s)?;
        worst_ratio = worst_ratio.max(-d.min_eigenvalue() / d.max_eigenvalue());
        if s.params.gamma0 == 0.0 && s.params.gamma1 == 0.0 {
            let dim = d.kernel_dimension(1e-9);
            kernels_ok &= dim == expected_kernel(&s);
            kernels.push(format!("{name}:{dim}"));
        }
    }
    outcome(
        worst_ratio <= 1e-10 && kernels_ok,
        format!("max -λmin/λmax {worst_ratio:.2e}; kernels {}", kernels.join(" ")),
    )
}

fn c3_contraction() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut runs = 0;
    let mut worst = 0.0f64;
    let mut ok = true;
    for (_, s) in matrix()? {
        for _ in 0..100 {
            let tr = integrate(&s, randn(&mut rng, s.size()), None, Scheme::ImplicitEuler, 0.01, 200)?;
            ok &= tr.contraction_ok;
            for w in tr.states.windows(2) {
                worst = worst.max(w[1].norm_mu_sq.sqrt() / w[0].norm_mu_sq.sqrt());
            }
            runs += 1;
        }
    }
    outcome(ok && worst <= 1.0 + 1e-12, format!("{runs} runs x 200 steps, max ‖u⁺‖/‖u‖ = {worst:.15}"))
}

fn c4_resolvent() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_res, mut worst_coerc) = (0.0f64, f64::INFINITY);
    let mut solves = 0;
    for (_, s) in matrix()?.into_iter().filter(|(_, s)| s.params.gamma0 == -1.0) {
        for lambda in [0.5, 1.0, 10.0] {
            for _ in 0..20 {
                let f = randn(&mut rng, s.size());
                let u = resolvent_solve(&s, lambda, &f)?;
                worst_res = worst_res.max(resolvent_residual(&s, lambda, &f, &u));
                solves += 1;
            }
            let delta = s.params.coercivity_constant(lambda);
            let a = s.mass.combine(lambda, &s.energy, 1.0).to_dense();
            let shifted = &a - s.mass.to_dense() * delta;
            let scale = a.symmetric_eigenvalues().amax();
            worst_coerc = worst_coerc.min(min_symmetric_eigenvalue(shifted) / scale);
        }
    }
    outcome(
        worst_res <= 1e-10 && worst_coerc >= -1e-8,
        format!("{solves} solves, max residual {worst_res:.2e}, min eig((λM+K)-δM)/scale {worst_coerc:.2e}"),
    )
}

fn all_pass(checks: &[Check]) -> (bool, usize) {
    (checks.iter().all(|c| c.passed), checks.iter().filter(|c| c.passed).count())
}

fn c5_green() -> Result<Outcome> {
    let checks = green_checks();
    let (ok, n) = all_pass(&checks);
    let has = |s: &str| checks.iter().any(|c| c.name.contains(s) && c.passed);
    let variants = has("strong_interior") && has("strong_at_zero") && has("strong_at_one");
    outcome(
        ok && checks.len() >= 12 && variants,
        format!("{n}/{} cases within 1e-11 (jump and one-sided variants included: {variants})", checks.len()),
    )
}

/// Ten forced configurations over both forms, all coefficient classes and both schemes.
fn forced_configs() -> Vec<ProblemConfig> {
    let forms = [OperatorForm::Divergence, OperatorForm::NonDivergence];
    let ks = [0.5, 1.0, 1.5, 0.0, 1.25];
    let times = [
        TimeProfile::Constant,
        TimeProfile::Sine { frequency: 3.0 },
        TimeProfile::Exponential { rate: 0.5 },
        TimeProfile::Linear,
        TimeProfile::Exponential { rate: -1.0 },
    ];
    let spaces = [Preset::One, Preset::Cosine, Preset::Bump, Preset::Random, Preset::Linear];
    (0..10)
        .map(|i| ProblemConfig {
            form: forms[i % 2],
            coefficient: CoefficientSpec { x0: 0.5, k: ks[i % 5], scale: 1.0 },
            params: WentzellParams::new(1.0, 1.0, -(i as f64 % 3.0) * 0.5, -((i + 1) as f64 % 2.0))
                .expect("admissible"),
            n: 16,
            grading: if ks[i % 5] >= 1.0 { 2.0 } else { 1.0 },
            t_final: 1.0,
            dt: 0.01,
            scheme: if i < 5 { Scheme::ImplicitEuler } else { Scheme::CrankNicolson },
            u0: FunctionSpec::Preset(Preset::Random),
            forcing: ForcingSpec::Separable {
                time: times[i % 5],
                space: FunctionSpec::Preset(spaces[(i + 2) % 5]),
            },
            project: false,
            seed: i as u64,
        })
        .collect()
}

fn c6_energy() -> Result<Outcome> {
    let (mut pathwise, mut crude) = (true, true);
    let mut worst = 0.0f64;
    for cfg in forced_configs() {
        let tr = evolution::run(&cfg)?;
        assert!(tr.forcing_integral > 0.0);
        pathwise &= tr.energy_bound_ok();
        crude &= tr.energy_bound_sup_ok();
        let lhs = tr.sup_norm_sq + tr.energy_integral;
        let rhs = tr.final_time().exp() * (tr.initial().norm_mu_sq + tr.forcing_integral);
        worst = worst.max(lhs / rhs);
    }
    outcome(
        pathwise && crude,
        format!("10 forced runs, max (sup + Σ2dtE)/(e^T(‖u0‖² + Σdt‖h‖²)) = {worst:.4}; pathwise bound {pathwise}"),
    )
}

/// Least-squares slope of log2(error) against halving index.
fn order(errors: &[f64]) -> f64 {
    let n = errors.len() as f64;
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        num += (i as f64 - xm) * (y - ym);
        den += (i as f64 - xm).powi(2);
    }
    -num / den
}

fn c7_time_order() -> Result<Outcome> {
    let cfg = ProblemConfig {
        form: OperatorForm::Divergence,
        coefficient: CoefficientSpec { x0: 0.5, k: 0.5, scale: 1.0 },
        params: WentzellParams::default(),
        n: 16,
        grading: 1.0,
        t_final: 0.1,
        dt: 0.01,
        scheme: Scheme::CrankNicolson,
        u0: FunctionSpec::Preset(Preset::One),
        forcing: ForcingSpec::None,
        project: false,
        seed: 0,
    };
    let sys = cfg.assemble()?;
    let d = dense_decompose(&sys)?;
    // smooth data: kernel plus the two lowest decaying modes. T is chosen so
    // that λ dt ≤ 1 on the coarsest step; stiffer modes would sit in the
    // regime where Crank-Nicolson only damps like -1 and no order is visible.
    let mut u0 = vec![0.0; sys.size()];
    for k in 0..4 {
        for (u, v) in u0.iter_mut().zip(d.eigenvector(k)) {
            *u += v / (k as f64 + 1.0);
        }
    }
    let t = 1.0 / d.eigenvalues[3];
    let exact = exact_propagator(&d, &u0, t);
    let mut errs = [Vec::new(), Vec::new()];
    for (i, scheme) in [Scheme::CrankNicolson, Scheme::ImplicitEuler].into_iter().enumerate() {
        for steps in [10, 20, 40, 80, 160] {
            let tr = integrate(&sys, u0.clone(), None, scheme, t / steps as f64, steps)?;
            let diff: Vec<f64> = tr.last().dofs.iter().zip(&exact).map(|(a, b)| a - b).collect();
            errs[i].push(sys.mass_norm_sq(&diff).sqrt());
        }
    }
    let (cn, ie) = (order(&errs[0]), order(&errs[1]));
    outcome(
        cn >= 1.8 && ie >= 0.9,
        format!("CN order {cn:.3}, IE order {ie:.3} (dt = T/10 .. T/160, T = {t:.3e}, n = 16)"),
    )
}

fn c8_hardy() -> Result<Outcome> {
    let checks = hardy_checks();
    let (ok, n) = all_pass(&checks);
    outcome(ok, format!("{n}/{} (K, y0) pairs match y0^(2-K)/(2-K) to 1e-12", checks.len()))
}

fn c9_fit() -> Result<Outcome> {
    let checks = fit_checks();
    let (ok, n) = all_pass(&checks);
    outcome(ok, format!("{n}/{} polynomials: ≥ 2 sign changes, orthogonal to 1e-12, x² → x - 1/6", checks.len()))
}

fn c10_manufactured() -> Result<Outcome> {
    let bump = FunctionSpec::Preset(Preset::Bump);
    let w = |x: f64| bump.eval(x).expect("analytic");
    let t_final = 0.5;
    let mut errors = Vec::new();
    for n in [8, 16, 32, 64] {
        let cfg = ProblemConfig {
            form: OperatorForm::Divergence,
            coefficient: CoefficientSpec { x0: 0.5, k: 0.5, scale: 1.0 },
            params: WentzellParams::default(),
            n,
            grading: 1.0,
            t_final,
            dt: 1e-3,
            scheme: Scheme::CrankNicolson,
            u0: bump.clone(),
            forcing: ForcingSpec::Manufactured,
            project: false,
            seed: 0,
        };
        let sys = cfg.assemble()?;
        let forcing = manufactured_forcing(&sys, w)?;
        let u0 = sys.interpolate(|x| (w(x)[0], w(x)[1]));
        let steps = cfg.steps();
        let tr = integrate(&sys, u0, Some(&forcing), cfg.scheme, t_final / steps as f64, steps)?;
        let eval = NormEvaluator::for_system(&sys)?;
        let decay = (-t_final).exp();
        errors.push(eval.l2_error(&sys.expand(&tr.last().dofs), |x| decay * w(x)[0]));
    }
    let monotone = errors.windows(2).all(|e| e[1] < e[0]);
    let p = order(&errors);
    outcome(
        monotone && p >= 1.0,
        format!(
            "L² errors {} ; spatial order {p:.2}",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn c11_pointwise() -> Result<Outcome> {
    let checks = pointwise_checks();
    let (ok, n) = all_pass(&checks);
    let worst = checks
        .iter()
        .filter_map(|c| c.values.get("max_ratio").and_then(|v| v.as_f64()))
        .fold(0.0f64, f64::max);
    outcome(ok, format!("{n}/{} functions, max ratio {worst:.6}", checks.len()))
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let criteria: [Criterion; 11] = [
        ("symmetry of M and K", s(1), c1_symmetry),
        ("non-negativity and kernels", s(5), c2_nonnegativity),
        ("contraction semigroup", s(30), c3_contraction),
        ("resolvent and coercivity", s(10), c4_resolvent),
        ("Green identities", s(1), c5_green),
        ("energy estimate", s(20), c6_energy),
        ("time stepping vs exact propagator", s(20), c7_time_order),
        ("Hardy-type left piece", s(1), c8_hardy),
        ("best linear fit", s(1), c9_fit),
        ("manufactured solution convergence", s(60), c10_manufactured),
        ("pointwise bounds", s(1), c11_pointwise),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let over = elapsed > *budget;
        let timing = format!("{:.2}s of {}s{}", elapsed.as_secs_f64(), budget.as_secs(), if over { " (over budget)" } else { "" });
        let ok = passed && !over;
        println!("{} criterion {:>2} {name}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" }, i + 1);
        failed += usize::from(!ok);
    }
    println!("acceptance: {}/11 criteria pass", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
