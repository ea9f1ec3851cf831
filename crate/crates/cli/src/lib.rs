//! Configuration, sweep execution and file output for the `nems` binary.

pub mod config;
pub mod output;
pub mod runner;

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use serde_json::json;

pub use config::{parse_config, ConfigError, RunConfig};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const ALL_FAILED: i32 = 3;
    pub const GUARD: i32 = 4;
}

/// What to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The configured task.
    Task,
    /// Bath correlations, Lamb-shift bounds and secular ratios.
    Diagnostics,
}

/// Execution settings that do not affect the numbers produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Treat guard violations as failures.
    pub strict: bool,
    /// Recorded in `meta.json`; the solvers are deterministic.
    pub seed: u64,
}

/// Counts and guard violations of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub points: usize,
    pub failed: usize,
    pub n_fock: usize,
    pub violations: Vec<String>,
    pub strict: bool,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.points > 0 && self.failed == self.points {
            exit::ALL_FAILED
        } else if self.strict && !self.violations.is_empty() {
            exit::GUARD
        } else {
            exit::SUCCESS
        }
    }
}

/// Runs `cfg` and writes its outputs into `out_dir`.
pub fn run(cfg: &RunConfig, mode: Mode, out_dir: &Path, opts: RunOptions) -> anyhow::Result<RunSummary> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads).build()?;
    let threads = pool.current_num_threads();
    pool.install(|| run_in_pool(cfg, mode, out_dir, opts, threads))
}

fn run_in_pool(cfg: &RunConfig, mode: Mode, out_dir: &Path, opts: RunOptions, threads: usize) -> anyhow::Result<RunSummary> {
    let start = Instant::now();
    let mode = if cfg.task == config::Task::Diagnostics { Mode::Diagnostics } else { mode };
    let mut violations = Vec::new();
    let mut meta = json!({
        "schema": config::SCHEMA_VERSION,
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "seed": opts.seed,
        "strict": opts.strict,
        "config": cfg,
    });

    let convergence = if cfg.solver.auto_converge && mode == Mode::Task {
        let base = cfg.resolve(8)?;
        let c = runner::converge_truncation(cfg, &base);
        if !c.converged {
            violations.push(format!("truncation not converged up to n_fock = {}", c.n_fock));
        }
        meta["convergence"] = json!({
            "converged": c.converged,
            "history": c.history.iter().map(|(n, d)| json!({"n_fock": n, "max_change": finite_or_null(*d)})).collect::<Vec<_>>(),
        });
        Some(c)
    } else {
        None
    };
    let n_fock = convergence.as_ref().map_or(cfg.solver.n_fock, |c| c.n_fock);
    meta["n_fock"] = json!(n_fock);
    let base = cfg.resolve(n_fock)?;
    let warnings: Vec<String> = base
        .leads
        .iter()
        .zip(["left", "right"])
        .flat_map(|(l, name)| l.regime_warnings().into_iter().map(move |w| format!("{name} lead: {w}")))
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    meta["warnings"] = json!(warnings);

    let (points, failed) = match mode {
        Mode::Diagnostics => {
            let d = runner::diagnostics(cfg, &base);
            output::write_diagnostics(&out_dir.join("diagnostics"), &d)?;
            meta["decay_times"] = json!(d
                .correlations
                .iter()
                .map(|c| json!({"lead": c.lead, "channel": c.channel, "decay_time": c.decay_time}))
                .collect::<Vec<_>>());
            violations.extend(d.violations);
            (0, 0)
        }
        Mode::Task => {
            if let config::Task::Transient { .. } = cfg.task {
                let traj = runner::transient(cfg, &base)?;
                output::write_trajectory(&out_dir.join("trajectory.csv"), &traj)?;
            }
            let records = runner::sweep(cfg, &base);
            let conductance = runner::bias_conductance(cfg, &records);
            if let Some(axis) = runner::axes(cfg).iter().find(|a| a.param == config::Param::DeltaMu) {
                let grid = axis.values.points();
                let steps: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
                meta["conductance"] = json!({
                    "column": "dIR_ddelta_mu",
                    "scheme": "central differences, one-sided at the ends",
                    "min_step": steps.iter().copied().fold(f64::INFINITY, f64::min),
                    "max_step": steps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
            }
            output::write_results(&out_dir.join("results.csv"), cfg, &records, conductance.as_deref())?;
            let failed = records.iter().filter(|r| r.result.is_err()).count();
            for r in &records {
                if let Ok(v) = &r.result {
                    if cfg.solver.kind == config::Kind::Gkls && !(v.secular_ratio < cfg.solver.secular_threshold) {
                        violations.push(format!("secular ratio {:.3e} at {:?}", v.secular_ratio, r.coords));
                    }
                    if v.top_population > cfg.solver.top_population_tol {
                        violations.push(format!("top level population {:.3e} at {:?}", v.top_population, r.coords));
                    }
                }
            }
            meta["point_seconds"] = json!(records.iter().map(|r| r.seconds).collect::<Vec<_>>());
            (records.len(), failed)
        }
    };
    meta["points"] = json!(points);
    meta["failed"] = json!(failed);
    meta["violations"] = json!(violations);
    meta["total_seconds"] = json!(start.elapsed().as_secs_f64());
    output::write_json(&out_dir.join("meta.json"), &meta)?;
    Ok(RunSummary { points, failed, n_fock, violations, strict: opts.strict })
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}
