//! The `fracdiff` command line.
//!
//! Every command reads a [`RunConfig`] and writes into the output directory:
//!
//! * `simulate`: `solution.csv` (`t,x,u`), `report.json`, and `operator.csv`
//!   with `--export-operator`.
//! * `verify`: `entropy_report.json`. Exit code 1 when any check fails.
//! * `kernels`: `kernels.csv` with header
//!   `t,k,l,k_conv_l,k_lambda[λ]…,s_lambda[λ]…` on `t_1, …, t_n`.
//! * `sweep`: one subdirectory per combination of the `[sweep]` lists, each
//!   holding the `simulate` and `verify` outputs, plus `sweep.json`.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage, config or IO error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DataSource, KernelFamily, RunConfig};
use crate::entropy_verify::{verify_solution, EntropyReport, EntropySuite, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::fraclap::{assemble, SpaceGrid1D};
use crate::io;
use crate::kernels::{convolve_at, KernelPairHandle, KernelSpec, TimeGrid};
use crate::timestepper::{approx_driver, solve, ApproxReport, DiscreteSolution, ProblemData};
use crate::volterra::solve_s_lambda;

#[derive(Debug, Parser)]
#[command(name = "fracdiff", version, about = "Fully non-local subdiffusion solver and verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Multiplies every verification tolerance; overrides `verify.tolerance_scale`.
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,
    /// Worker threads for the parallel parts.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve and write the solution table and run report.
    Simulate {
        /// Also write the dense operator matrix to operator.csv.
        #[arg(long)]
        export_operator: bool,
    },
    /// Run the verification suites selected in the config.
    Verify {
        /// Verify this solution table instead of solving afresh.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Dump kernel diagnostics.
    Kernels,
    /// Simulate and verify every combination of the `[sweep]` lists.
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Pass => 0,
            Self::Fail => 1,
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("fracdiff: {e}");
            2
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Usage("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(scale) = cli.tolerance_scale {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Usage(format!("--tolerance-scale must be > 0, got {scale}")));
        }
        cfg.verify.tolerance_scale = scale;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Simulate { export_operator } => cmd_simulate(&cfg, *export_operator).map(|_| Outcome::Pass),
        Command::Verify { solution } => cmd_verify(&cfg, solution.as_deref()),
        Command::Kernels => cmd_kernels(&cfg).map(|_| Outcome::Pass),
        Command::Sweep => cmd_sweep(&cfg),
    })
}

pub fn build_pair(cfg: &RunConfig) -> Result<KernelPairHandle> {
    let k = &cfg.kernel;
    match k.family {
        KernelFamily::RiemannLiouville => KernelPairHandle::riemann_liouville(k.alpha),
        KernelFamily::ExpWeighted => KernelPairHandle::exp_weighted(k.alpha, k.mu_w),
        KernelFamily::Tabulated => {
            let (Some(kt), Some(lt)) = (&k.table, &k.partner_table) else {
                return Err(Error::Config {
                    key: "kernel.table".into(),
                    msg: "tabulated kernels need table and partner_table".into(),
                });
            };
            // tables are bounded, so l lies in every L^p; 2 is recorded
            KernelPairHandle::from_parts(io::read_tabulated_kernel(kt)?, io::read_tabulated_kernel(lt)?, 2.0)
        }
    }
}

fn sample(source: &DataSource, scale: f64, grid: &SpaceGrid1D) -> Result<Vec<f64>> {
    let raw = match source {
        DataSource::Builtin(p) => p.sample(grid),
        DataSource::Table(path) => io::read_profile(path, grid)?,
    };
    Ok(raw.into_iter().map(|v| scale * v).collect())
}

pub fn build_problem(cfg: &RunConfig) -> Result<ProblemData> {
    let grid = SpaceGrid1D::new(cfg.a, cfg.b, cfg.nodes)?;
    let time = TimeGrid::new(cfg.horizon, cfg.steps)?;
    let f = sample(&cfg.f, cfg.f_scale, &grid)?;
    let u0 = sample(&cfg.u0, cfg.u0_scale, &grid)?;
    let mut problem = ProblemData::stationary(build_pair(cfg)?, cfg.s, grid, time, f, u0);
    problem.signed = cfg.signed;
    problem.validate().map_err(|e| Error::Config {
        key: "data".into(),
        msg: e.to_string(),
    })?;
    Ok(problem)
}

pub fn build_suite(cfg: &RunConfig, problem: &ProblemData) -> EntropySuite {
    let v = &cfg.verify;
    let standard = EntropySuite::standard(problem);
    EntropySuite {
        levels: v.levels.clone(),
        ramp_width: v.ramp_width,
        phis: standard.phis,
        // no exponents means no entropy tuples; φ and K stay for the other checks
        zeta_powers: if v.entropy { v.zeta_powers.clone() } else { Vec::new() },
        cuts: v.cuts.clone(),
        weak_form: v.weak_form,
        energy: v.energy,
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub kernel: KernelSpec,
    pub partner: KernelSpec,
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub nodes: usize,
    pub horizon: f64,
    pub steps: usize,
    /// Largest relative residual of the per-step linear equations.
    pub max_step_residual: f64,
    pub min_value: f64,
    pub l1_norm_final: f64,
    pub approximation: Option<ApproxReport>,
}

pub fn cmd_simulate(cfg: &RunConfig, export_operator: bool) -> Result<DiscreteSolution> {
    let problem = build_problem(cfg)?;
    let sol = solve(&problem)?;
    let out = &cfg.out_dir;
    io::write_solution(&sol, io::create(&out.join("solution.csv"))?)?;
    let approximation = if cfg.levels.is_empty() {
        None
    } else {
        Some(approx_driver(&problem, &cfg.levels)?.1)
    };
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kernel: problem.pair.k.clone(),
        partner: problem.pair.l.clone(),
        s: problem.s,
        a: problem.grid.a,
        b: problem.grid.b,
        nodes: problem.grid.n,
        horizon: problem.time.horizon,
        steps: problem.time.steps,
        max_step_residual: sol.max_step_residual(),
        min_value: sol.min_value(),
        l1_norm_final: problem.grid.l1_norm(&sol.u[problem.time.steps]),
        approximation,
    };
    io::write_json(&out.join("report.json"), &report)?;
    if export_operator {
        let op = assemble(problem.grid, problem.s)?;
        op.write_csv(io::create(&out.join("operator.csv"))?)?;
    }
    Ok(sol)
}

fn verify_with(cfg: &RunConfig, problem: &ProblemData, sol: &DiscreteSolution) -> Result<EntropyReport> {
    let suite = build_suite(cfg, problem);
    if suite.is_empty() {
        return Err(Error::Usage("the config selects no verification checks".into()));
    }
    let op = assemble(problem.grid, problem.s)?;
    let report = verify_solution(sol, problem, &op, &suite, cfg.verify.tolerance_scale)?;
    io::write_json(&cfg.out_dir.join("entropy_report.json"), &report)?;
    Ok(report)
}

fn outcome_of(report: &EntropyReport, label: &str) -> Outcome {
    for c in report.failures() {
        eprintln!(
            "{label}FAIL {}: residual {:e} exceeds tolerance {:e}",
            c.name, c.residual, c.tolerance
        );
    }
    if report.pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

pub fn cmd_verify(cfg: &RunConfig, solution: Option<&Path>) -> Result<Outcome> {
    let problem = build_problem(cfg)?;
    let sol = match solution {
        Some(path) => DiscreteSolution {
            time: problem.time,
            grid: problem.grid,
            s: problem.s,
            pair: problem.pair.clone(),
            u: io::read_solution(path, &problem.time, &problem.grid)?,
            step_residuals: Vec::new(),
        },
        None => solve(&problem)?,
    };
    let report = verify_with(cfg, &problem, &sol)?;
    Ok(outcome_of(&report, ""))
}

pub fn cmd_kernels(cfg: &RunConfig) -> Result<()> {
    let pair = build_pair(cfg)?;
    let time = TimeGrid::new(cfg.horizon, cfg.steps)?;
    let families = cfg
        .lambdas
        .par_iter()
        .map(|&lambda| solve_s_lambda(&pair, lambda, time))
        .collect::<Result<Vec<_>>>()?;
    let cells = (time.steps / 2).max(1);
    let rows: Vec<Vec<f64>> = (1..=time.steps)
        .into_par_iter()
        .map(|i| {
            let t = time.time(i);
            let mut row = vec![t, pair.k.value(t), pair.l.value(t), convolve_at(&pair.k, &pair.l, t, cells)];
            row.extend(families.iter().map(|f| f.klambda_values[i]));
            row.extend(families.iter().map(|f| f.s_values[i]));
            row
        })
        .collect();
    let mut header: Vec<String> = ["t", "k", "l", "k_conv_l"].iter().map(|s| s.to_string()).collect();
    header.extend(cfg.lambdas.iter().map(|l| format!("k_lambda[{l}]")));
    header.extend(cfg.lambdas.iter().map(|l| format!("s_lambda[{l}]")));
    io::write_columns(io::create(&cfg.out_dir.join("kernels.csv"))?, &header, &rows)
}

#[derive(Debug, Serialize)]
struct SweepEntry {
    name: String,
    outcome: Option<Outcome>,
    error: Option<String>,
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let sw = &cfg.sweep;
    if sw.alpha.is_empty() && sw.s.is_empty() && sw.steps.is_empty() {
        return Err(Error::Config {
            key: "sweep".into(),
            msg: "list at least one of alpha, s, steps".into(),
        });
    }
    if !sw.alpha.is_empty() && cfg.kernel.family == KernelFamily::Tabulated {
        return Err(Error::Config {
            key: "sweep.alpha".into(),
            msg: "tabulated kernels have no alpha to sweep".into(),
        });
    }
    let or = |v: &[f64], d: f64| if v.is_empty() { vec![d] } else { v.to_vec() };
    let steps = if sw.steps.is_empty() { vec![cfg.steps] } else { sw.steps.clone() };
    let mut runs = Vec::new();
    for &alpha in &or(&sw.alpha, cfg.kernel.alpha) {
        for &s in &or(&sw.s, cfg.s) {
            for &n in &steps {
                let name = format!("alpha={alpha}_s={s}_steps={n}");
                let mut c = cfg.clone();
                c.kernel.alpha = alpha;
                c.s = s;
                c.steps = n;
                c.out_dir = cfg.out_dir.join(&name);
                c.sweep = Default::default();
                runs.push((name, c));
            }
        }
    }
    let entries: Vec<SweepEntry> = runs
        .par_iter()
        .map(|(name, c)| {
            let result = build_problem(c).and_then(|problem| {
                let sol = cmd_simulate(c, false)?;
                let report = verify_with(c, &problem, &sol)?;
                Ok(outcome_of(&report, &format!("[{name}] ")))
            });
            match result {
                Ok(o) => SweepEntry {
                    name: name.clone(),
                    outcome: Some(o),
                    error: None,
                },
                Err(e) => SweepEntry {
                    name: name.clone(),
                    outcome: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    io::write_json(&cfg.out_dir.join("sweep.json"), &entries)?;
    if let Some(e) = entries.iter().find_map(|e| e.error.as_ref()) {
        return Err(Error::Usage(format!("sweep run failed: {e}")));
    }
    Ok(if entries.iter().all(|e| e.outcome == Some(Outcome::Pass)) {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}
