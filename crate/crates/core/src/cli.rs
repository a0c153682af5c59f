//! Command line front end: `run`, `verify`, `spectrum` and `resolvent`.
//!
//! Each subcommand reads one JSON config (see [`crate::config`]), writes its
//! artifacts into `--out`, and exits 0 only when every check it performed
//! passed. Failures leave an `error.json` diagnostic behind.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_config, CliConfig};
use crate::discretization::DofMap;
use crate::error::{Error, Result};
use crate::evolution::{resolvent_residual, resolvent_solve, run_on, Scheme, RESIDUAL_TOL};
use crate::oracle::spectral::{dense_decompose, CLIP_TOL};
use crate::oracle::suite::{expected_kernel, verify, Check, Suite, VerificationReport};

/// Exit status when a check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for bad input, I/O trouble or numerical breakdown.
pub const EXIT_ERROR: i32 = 2;

/// Relative threshold for eigenvalues counted as kernel in `spectrum`.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "wentzell", version, about = "Degenerate fourth-order Wentzell problems on [0, 1]")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON problem description.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "./out")]
    pub out: PathBuf,
    /// Worker threads for assembly and oracle batteries.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-step the configured problem.
    Run(Common),
    /// Run oracle checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Overrides `verify.suite`: green, spectral, hardy, fit, pointwise, norms or all.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Lowest pencil eigenvalues of the assembled system.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Overrides `spectrum.count`.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Solve `(λM + K) u = M f`.
    Resolvent(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Run(c) | Command::Resolvent(c) => c,
            Command::Verify { common, .. } | Command::Spectrum { common, .. } => common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Run(_) => "run",
            Command::Verify { .. } => "verify",
            Command::Spectrum { .. } => "spectrum",
            Command::Resolvent(_) => "resolvent",
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub operator: &'static str,
    pub class: &'static str,
    pub scheme: &'static str,
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub steps: usize,
    pub initial_norm_mu_sq: f64,
    pub final_norm_mu_sq: f64,
    pub sup_norm_mu_sq: f64,
    pub energy_integral: f64,
    pub forcing_integral: f64,
    /// Worst ratio of the pathwise Gronwall bound; `energy_bound_ok` means ≤ 1 + 1e-8.
    pub bound_ratio: f64,
    pub contraction_ok: bool,
    pub energy_bound_ok: bool,
    /// Only meaningful for implicit Euler; always true otherwise.
    pub slack_ok: bool,
    pub passed: bool,
}

/// Parses `args` (including the program name), dispatches, and returns the
/// exit status. Diagnostics go to `error.json` in the output directory and
/// to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    let common = cli.command.common().clone();
    match execute(&cli.command) {
        Ok(o) if o.passed => 0,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(e) => {
            let diag = diagnostic(cli.command.name(), &e);
            eprintln!("{diag}");
            let _ = fs::create_dir_all(&common.out)
                .and_then(|_| fs::write(common.out.join("error.json"), format!("{diag}\n")));
            EXIT_ERROR
        }
    }
}

pub fn diagnostic(command: &str, e: &Error) -> String {
    let kind = match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::Divergent(_) => "divergent",
        Error::HypothesisFailed(_) => "hypothesis_failed",
        Error::NotCoercive { .. } => "not_coercive",
        Error::Factorization { .. } => "factorization",
        Error::Unsupported(_) => "unsupported",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
    };
    let key = match e {
        Error::Config { key, .. } => Some(key.as_str()),
        _ => None,
    };
    let v = json!({ "command": command, "error": kind, "key": key, "message": e.to_string() });
    serde_json::to_string_pretty(&v).expect("plain json")
}

/// Loads the config, sets up the thread pool, and runs the subcommand.
pub fn execute(command: &Command) -> Result<Outcome> {
    let common = command.common();
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Error::Io(format!("{}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.problem.seed = seed;
    }
    if common.threads == 0 {
        return Err(Error::config("--threads", "need at least one thread"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| Error::config("--threads", e.to_string()))?;
    fs::create_dir_all(&common.out).map_err(|e| io_err(&common.out, e))?;
    pool.install(|| match command {
        Command::Run(_) => cmd_run(&cfg, &common.out),
        Command::Verify { suite, .. } => {
            if let Some(s) = suite {
                cfg.suite = s.parse().map_err(|_| Error::config("--suite", format!("unknown suite `{s}`")))?;
            }
            cmd_verify(&cfg, &common.out)
        }
        Command::Spectrum { count, .. } => {
            if let Some(c) = count {
                if *c == 0 {
                    return Err(Error::config("--count", "count must be ≥ 1"));
                }
                cfg.spectrum_count = *c;
            }
            cmd_spectrum(&cfg, &common.out)
        }
        Command::Resolvent(_) => cmd_resolvent(&cfg, &common.out),
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain json");
    s.push('\n');
    s
}

pub fn cmd_run(cfg: &CliConfig, out: &Path) -> Result<Outcome> {
    let p = &cfg.problem;
    let system = p.assemble()?;
    let traj = run_on(p, &system)?;
    let slack_ok = p.scheme != Scheme::ImplicitEuler || traj.slack_ok;
    let energy_bound_ok = traj.energy_bound_ok();
    let passed = traj.contraction_ok && energy_bound_ok && slack_ok;
    let summary = RunSummary {
        operator: p.form.as_str(),
        class: system.class.as_str(),
        scheme: p.scheme.as_str(),
        n: p.n,
        dt: p.dt,
        t_final: traj.final_time(),
        steps: traj.states.len() - 1,
        initial_norm_mu_sq: traj.initial().norm_mu_sq,
        final_norm_mu_sq: traj.last().norm_mu_sq,
        sup_norm_mu_sq: traj.sup_norm_sq,
        energy_integral: traj.energy_integral,
        forcing_integral: traj.forcing_integral,
        bound_ratio: traj.bound_ratio,
        contraction_ok: traj.contraction_ok,
        energy_bound_ok,
        slack_ok,
        passed,
    };
    let artifacts = vec![
        write(out, "trajectory.csv", &traj.to_csv())?,
        write(out, "summary.json", &to_json(&summary))?,
    ];
    Ok(Outcome { passed, artifacts })
}

pub fn cmd_verify(cfg: &CliConfig, out: &Path) -> Result<Outcome> {
    let report = verify(cfg.suite, cfg.problem.seed);
    let path = write(out, "verification.json", &report.to_json())?;
    Ok(Outcome {
        passed: report.passed,
        artifacts: vec![path],
    })
}

pub fn cmd_spectrum(cfg: &CliConfig, out: &Path) -> Result<Outcome> {
    let p = &cfg.problem;
    let system = p.assemble()?;
    let d = dense_decompose(&system)?;
    let (lo, hi) = (d.min_eigenvalue(), d.max_eigenvalue());
    let inputs = json!({
        "operator": p.form.as_str(),
        "class": system.class.as_str(),
        "n": p.n,
        "grading": p.grading,
        "gamma0": p.params.gamma0,
        "gamma1": p.params.gamma1,
    });
    let mut checks = vec![Check {
        name: "spectrum/nonnegative".into(),
        inputs: inputs.clone(),
        values: json!({ "min_eigenvalue": lo, "max_eigenvalue": hi }),
        tolerance: CLIP_TOL,
        passed: lo >= -CLIP_TOL * hi,
    }];
    if p.params.gamma0 == 0.0 && p.params.gamma1 == 0.0 {
        let k = expected_kernel(&system);
        let low = &d.raw_eigenvalues[..k.min(d.dim())];
        checks.push(Check {
            name: "spectrum/kernel".into(),
            inputs,
            values: json!({ "expected_kernel": k, "lowest": low }),
            tolerance: KERNEL_TOL,
            passed: low.iter().all(|l| l.abs() <= KERNEL_TOL * hi),
        });
    }
    let count = cfg.spectrum_count.min(d.dim());
    let mut csv = String::from("index,eigenvalue,raw_eigenvalue\n");
    for i in 0..count {
        csv.push_str(&format!("{i},{:.16e},{:.16e}\n", d.eigenvalues[i], d.raw_eigenvalues[i]));
    }
    let report = VerificationReport::new(Suite::Spectral, p.seed, checks);
    let artifacts = vec![
        write(out, "spectrum.csv", &csv)?,
        write(out, "spectrum.json", &report.to_json())?,
    ];
    Ok(Outcome {
        passed: report.passed,
        artifacts,
    })
}

#[derive(Debug, Serialize)]
struct ResolventSummary {
    operator: &'static str,
    class: &'static str,
    n: usize,
    size: usize,
    lambda: f64,
    coercivity_constant: f64,
    residual: f64,
    tolerance: f64,
    passed: bool,
}

pub fn cmd_resolvent(cfg: &CliConfig, out: &Path) -> Result<Outcome> {
    let p = &cfg.problem;
    let system = p.assemble()?;
    let f = cfg.resolvent_f.discretize(&system, p.project, p.seed)?;
    let u = resolvent_solve(&system, cfg.lambda, &f)?;
    let residual = resolvent_residual(&system, cfg.lambda, &f, &u);
    let passed = residual <= RESIDUAL_TOL;

    let nodes = system.mesh().nodes();
    let global = system.expand(&u);
    let mut csv = String::from("node,x,kind,value\n");
    for (node, &x) in nodes.iter().enumerate() {
        for (kind, dof) in [("value", DofMap::value_dof(node)), ("slope", DofMap::slope_dof(node))] {
            csv.push_str(&format!("{node},{x:.16e},{kind},{:.16e}\n", global[dof]));
        }
    }
    let summary = ResolventSummary {
        operator: p.form.as_str(),
        class: system.class.as_str(),
        n: p.n,
        size: system.size(),
        lambda: cfg.lambda,
        coercivity_constant: p.params.coercivity_constant(cfg.lambda),
        residual,
        tolerance: RESIDUAL_TOL,
        passed,
    };
    let artifacts = vec![
        write(out, "resolvent.csv", &csv)?,
        write(out, "resolvent.json", &to_json(&summary))?,
    ];
    Ok(Outcome { passed, artifacts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(config: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, config).unwrap();
        let out = dir.path().join("out");
        (dir, cfg, out)
    }

    fn call(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
        let mut args = vec![
            "wentzell".to_string(),
            sub.to_string(),
            "--config".into(),
            cfg.display().to_string(),
            "--out".into(),
            out.display().to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        main_with_args(args)
    }

    const STEADY: &str = r#"{"operator":"divergence","coefficient":{"x0":0.5,"K":0.5},
        "time":{"T":1.0},"mesh":{"n":8},"initial":"one"}"#;

    #[test]
    fn run_steady_state() {
        let (_d, cfg, out) = setup(STEADY);
        assert_eq!(call("run", &cfg, &out, &[]), 0);
        let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["contraction_ok"], true);
        let (a, b) = (s["initial_norm_mu_sq"].as_f64().unwrap(), s["final_norm_mu_sq"].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-12);
        let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
        assert_eq!(csv.lines().count(), 102);
    }

    #[test]
    fn spectrum_kernel() {
        let (_d, cfg, out) = setup(STEADY);
        assert_eq!(call("spectrum", &cfg, &out, &["--count", "4"]), 0);
        let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn resolvent_constant() {
        let (_d, cfg, out) = setup(&STEADY.replace("\"initial\":\"one\"", "\"resolvent\":{\"lambda\":2,\"f\":\"one\"}"));
        assert_eq!(call("resolvent", &cfg, &out, &[]), 0);
        let csv = fs::read_to_string(out.join("resolvent.csv")).unwrap();
        for line in csv.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let v: f64 = cols[3].parse().unwrap();
            let want = if cols[2] == "value" { 0.5 } else { 0.0 };
            assert!((v - want).abs() < 1e-12, "{line}");
        }
    }

    #[test]
    fn bad_config_writes_diagnostic() {
        let (_d, cfg, out) = setup(&STEADY.replace("\"K\":0.5", "\"K\":0.5,\"bogus\":1"));
        assert_eq!(call("run", &cfg, &out, &[]), EXIT_ERROR);
        let e: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
        assert_eq!(e["error"], "config");
        assert_eq!(e["key"], "coefficient.bogus");
    }

    #[test]
    fn outputs_are_reproducible() {
        let (_d, cfg, out) = setup(r#"{"operator":"nondivergence","coefficient":{"x0":0.5,"K":1.5},
            "time":{"T":0.2,"dt":0.02},"mesh":{"n":8},"initial":"random",
            "forcing":{"kind":"separable","time":{"kind":"sine","frequency":2},"space":"cosine"}}"#);
        let out2 = out.with_file_name("out2");
        assert_eq!(call("run", &cfg, &out, &["--seed", "3", "--threads", "2"]), 0);
        assert_eq!(call("run", &cfg, &out2, &["--seed", "3"]), 0);
        for f in ["trajectory.csv", "summary.json"] {
            assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(out2.join(f)).unwrap(), "{f}");
        }
    }
}
