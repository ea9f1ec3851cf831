//! Task execution: steady-state points, sweeps, transients and diagnostics.

use std::time::Instant;

use nems_core::leads::{decay_time, lamb_shift_bound_report, secular_validity};
use nems_core::master_eq::spectral_gap;
use nems_core::observables::{conductance, mean_phonons_lab, to_polaron_frame};
use nems_core::{
    bath_correlation, build_liouvillian, evolve, steady_state, BlockState, Channel, Frame, Model, SolverKind,
    SteadyStateOptions, Tolerances,
};
use rayon::prelude::*;

use crate::config::{apply_param, Axis, FrameName, Initial, Param, Resolved, RunConfig, Task};

/// Observables of one steady-state point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    pub current_left: f64,
    pub current_right: f64,
    pub dot_population: f64,
    pub phonons: f64,
    /// Population of the highest retained oscillator level.
    pub top_population: f64,
    pub min_eigenvalue: f64,
    pub residual: f64,
    /// Largest secular ratio over the leads.
    pub secular_ratio: f64,
}

/// One row of a sweep, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    /// Swept parameter values, in axis order.
    pub coords: Vec<f64>,
    pub params: Resolved,
    pub result: Result<PointValues, String>,
    pub seconds: f64,
}

fn options(cfg: &RunConfig) -> SteadyStateOptions {
    SteadyStateOptions {
        residual_tol: cfg.solver.residual_tol,
        uniqueness_tol: cfg.solver.uniqueness_tol,
        check_uniqueness: cfg.solver.check_uniqueness,
    }
}

fn budget(cfg: &RunConfig) -> usize {
    cfg.solver.memory_budget_mb.saturating_mul(1 << 20)
}

fn kind(cfg: &RunConfig) -> SolverKind {
    cfg.solver.kind.into()
}

fn top_population(state: &BlockState) -> f64 {
    let n = state.dim() - 1;
    state.blocks[0][(n, n)].re + state.blocks[1][(n, n)].re
}

/// Solves one steady-state point.
pub fn evaluate(cfg: &RunConfig, p: &Resolved) -> Result<PointValues, String> {
    let kind = kind(cfg);
    let model = Model::new(p.system, p.leads.to_vec()).map_err(|e| e.to_string())?;
    let l = build_liouvillian(&model, kind, budget(cfg)).map_err(|e| e.to_string())?;
    let ss = steady_state(&l, options(cfg)).map_err(|e| e.to_string())?;
    let currents = model.currents(kind, &ss.state).map_err(|e| e.to_string())?;
    let secular = secular_validity(p.system.mu_tilde, p.system.omega, &p.leads, cfg.solver.secular_threshold)
        .map(|r| r.ratios.iter().copied().fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY);
    Ok(PointValues {
        current_left: currents[0],
        current_right: currents[1],
        dot_population: ss.state.dot_population(),
        phonons: mean_phonons_lab(&ss.state, p.system.lambda).map_err(|e| e.to_string())?,
        top_population: top_population(&ss.state),
        min_eigenvalue: ss.state.min_eigenvalue(),
        residual: ss.residual,
        secular_ratio: secular,
    })
}

/// Grid of swept points: the cartesian product of the task axes.
pub fn grid(cfg: &RunConfig) -> Vec<Vec<f64>> {
    match &cfg.task {
        Task::Point | Task::Transient { .. } | Task::Diagnostics => vec![Vec::new()],
        Task::Scan { axis } => axis.values.points().into_iter().map(|v| vec![v]).collect(),
        Task::Map { x, y } => {
            let ys = y.values.points();
            x.values.points().into_iter().flat_map(|a| ys.iter().map(move |&b| vec![a, b])).collect()
        }
    }
}

/// Axes of the task, in grid order.
pub fn axes(cfg: &RunConfig) -> Vec<Axis> {
    match &cfg.task {
        Task::Point | Task::Transient { .. } | Task::Diagnostics => Vec::new(),
        Task::Scan { axis } => vec![axis.clone()],
        Task::Map { x, y } => vec![x.clone(), y.clone()],
    }
}

fn point_params(cfg: &RunConfig, base: &Resolved, coords: &[f64]) -> Resolved {
    let mut p = *base;
    for (a, &v) in axes(cfg).iter().zip(coords) {
        apply_param(&mut p, a.param, v, cfg.bias_split);
    }
    p
}

/// Solves every grid point on the current rayon pool, in grid order.
pub fn sweep(cfg: &RunConfig, base: &Resolved) -> Vec<PointRecord> {
    grid(cfg)
        .into_par_iter()
        .map(|coords| {
            let params = point_params(cfg, base, &coords);
            let start = Instant::now();
            let result = evaluate(cfg, &params);
            PointRecord { coords, params, result, seconds: start.elapsed().as_secs_f64() }
        })
        .collect()
}

/// Outcome of the truncation search.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub n_fock: usize,
    pub converged: bool,
    /// `(n_fock, largest change against the previous n_fock)`.
    pub history: Vec<(usize, f64)>,
}

fn probe_coords(cfg: &RunConfig) -> Vec<Vec<f64>> {
    let pick = |a: &Axis| {
        let v = a.values.points();
        let mut out = vec![v[0], v[v.len() / 2], v[v.len() - 1]];
        out.dedup();
        out
    };
    match &cfg.task {
        Task::Point | Task::Transient { .. } | Task::Diagnostics => vec![Vec::new()],
        Task::Scan { axis } => pick(axis).into_iter().map(|v| vec![v]).collect(),
        Task::Map { x, y } => {
            let ys = pick(y);
            pick(x).into_iter().flat_map(|a| ys.iter().map(move |&b| vec![a, b])).collect()
        }
    }
}

fn observables(v: &PointValues) -> [f64; 3] {
    [v.current_left, v.current_right, v.dot_population]
}

/// Raises `n_fock` through 8, 12, 16, ... up to `n_max` until the currents
/// and the dot population at the probe points change by less than
/// `converge_tol`.
pub fn converge_truncation(cfg: &RunConfig, base: &Resolved) -> Convergence {
    let probes: Vec<Resolved> = probe_coords(cfg).iter().map(|c| point_params(cfg, base, c)).collect();
    let solve = |n: usize| -> Vec<Option<[f64; 3]>> {
        probes
            .par_iter()
            .map(|p| {
                let mut p = *p;
                p.system.n_fock = n;
                evaluate(cfg, &p).ok().map(|v| observables(&v))
            })
            .collect()
    };
    let mut n = 8;
    let mut prev = solve(n);
    let mut history = vec![(n, f64::NAN)];
    while n + 4 <= cfg.solver.n_max {
        n += 4;
        let next = solve(n);
        let change = prev
            .iter()
            .zip(&next)
            .filter_map(|(a, b)| Some((a.as_ref()?, b.as_ref()?)))
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(f64::NAN, f64::max);
        history.push((n, change));
        if change < cfg.solver.converge_tol {
            return Convergence { n_fock: n, converged: true, history };
        }
        prev = next;
    }
    Convergence { n_fock: n, converged: false, history }
}

/// `dI_R / d delta_mu` along the bias axis, or `None` when no axis is a bias.
///
/// Lines containing failed points, or with a non-increasing bias grid, give
/// NaN.
pub fn bias_conductance(cfg: &RunConfig, records: &[PointRecord]) -> Option<Vec<f64>> {
    let axes = axes(cfg);
    let k = axes.iter().position(|a| a.param == Param::DeltaMu)?;
    let lens: Vec<usize> = axes.iter().map(|a| a.values.points().len()).collect();
    let bias = axes[k].values.points();
    let stride = if k + 1 < lens.len() { lens[k + 1..].iter().product() } else { 1 };
    let mut out = vec![f64::NAN; records.len()];
    let lines = records.len() / lens[k];
    for line in 0..lines {
        let (outer, inner) = (line / stride, line % stride);
        let idx: Vec<usize> = (0..lens[k]).map(|j| outer * stride * lens[k] + j * stride + inner).collect();
        let vals: Option<Vec<f64>> =
            idx.iter().map(|&i| records[i].result.as_ref().ok().map(|v| v.current_right)).collect();
        if let Some(g) = vals.and_then(|v| conductance(&v, &bias).ok()) {
            for (i, g) in idx.iter().zip(g) {
                out[*i] = g;
            }
        }
    }
    Some(out)
}

/// One sample of a transient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub dot_population: f64,
    pub phonons: f64,
    pub current_left: f64,
    pub current_right: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

/// Evolves the configured initial state over the configured times.
pub fn transient(cfg: &RunConfig, p: &Resolved) -> anyhow::Result<Vec<TrajectoryPoint>> {
    let Task::Transient { initial, times } = &cfg.task else {
        anyhow::bail!("task is not a transient");
    };
    let kind = kind(cfg);
    let model = Model::new(p.system, p.leads.to_vec())?;
    let l = build_liouvillian(&model, kind, budget(cfg))?;
    let Initial::Fock { dot, level, frame } = *initial;
    let d = model.dim();
    let rho0 = match frame {
        FrameName::Polaron => BlockState::fock(d, dot, level, Frame::Polaron)?,
        FrameName::Lab => to_polaron_frame(&BlockState::fock(d, dot, level, Frame::Lab)?, &model.displacement)?,
    };
    let t = times.points();
    let states = evolve(&l, &rho0, &t, Tolerances { atol: cfg.solver.atol, rtol: cfg.solver.rtol })?;
    t.iter()
        .zip(&states)
        .map(|(&t, s)| {
            let c = model.currents(kind, s)?;
            Ok(TrajectoryPoint {
                t,
                dot_population: s.dot_population(),
                phonons: mean_phonons_lab(s, p.system.lambda)?,
                current_left: c[0],
                current_right: c[1],
                trace: s.trace().re,
                min_eigenvalue: s.min_eigenvalue(),
            })
        })
        .collect()
}

/// Slowest relaxation rate of the configured generator.
pub fn relaxation_rate(cfg: &RunConfig, p: &Resolved) -> anyhow::Result<f64> {
    let model = Model::new(p.system, p.leads.to_vec())?;
    let l = build_liouvillian(&model, kind(cfg), budget(cfg))?;
    Ok(spectral_gap(&l, 1))
}

/// Bath correlation samples of one lead and channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTrace {
    pub lead: &'static str,
    pub channel: &'static str,
    pub times: Vec<f64>,
    pub values: Vec<num_complex::Complex64>,
    pub decay_time: Option<f64>,
}

/// Lamb-shift estimate at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct LambShiftRow {
    pub lead: &'static str,
    pub channel: &'static str,
    pub energy: f64,
    pub result: Result<(f64, f64, f64, f64, bool), String>,
}

/// Secular ratios per lead.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularRow {
    pub lead: &'static str,
    pub ratio: f64,
    pub strict_ratio: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Everything the diagnostics task computes.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub correlations: Vec<CorrelationTrace>,
    pub lamb_shift: Vec<LambShiftRow>,
    pub secular: Vec<SecularRow>,
    /// Human-readable guard violations.
    pub violations: Vec<String>,
}

const LEAD_NAMES: [&str; 2] = ["left", "right"];

fn channel_name(c: Channel) -> &'static str {
    match c {
        Channel::Out => "out",
        Channel::In => "in",
    }
}

/// Bath correlations, Lamb-shift bounds and secular ratios at the base point.
pub fn diagnostics(cfg: &RunConfig, p: &Resolved) -> Diagnostics {
    let times = cfg.diagnostics.times.points();
    let omega = p.system.omega;
    let energies = cfg
        .diagnostics
        .energies
        .as_ref()
        .map(|v| v.points())
        .unwrap_or_else(|| (0..50).map(|k| -10.0 * omega + 20.0 * omega * k as f64 / 49.0).collect());
    let mut out = Diagnostics { correlations: Vec::new(), lamb_shift: Vec::new(), secular: Vec::new(), violations: Vec::new() };
    for (lead, name) in p.leads.iter().zip(LEAD_NAMES) {
        if lead.wide_band {
            continue;
        }
        for ch in [Channel::Out, Channel::In] {
            match bath_correlation(lead, ch, &times) {
                Ok(values) => {
                    let decay = decay_time(&times, &values, cfg.diagnostics.decay_threshold);
                    if decay.is_none() {
                        out.violations.push(format!("{name}/{}: correlation does not decay within the time grid", channel_name(ch)));
                    }
                    out.correlations.push(CorrelationTrace { lead: name, channel: channel_name(ch), times: times.clone(), values, decay_time: decay });
                }
                Err(e) => out.violations.push(format!("{name}/{}: correlation: {e}", channel_name(ch))),
            }
        }
        match lamb_shift_bound_report(lead, &energies) {
            Ok(rows) => out.lamb_shift.extend(rows.into_iter().map(|r| LambShiftRow {
                lead: name,
                channel: channel_name(r.channel),
                energy: r.energy,
                result: Ok((r.im, r.re, r.ratio, r.bound, r.near_pole)),
            })),
            Err(e) => {
                out.violations.push(format!("{name}: Lamb shift: {e}"));
                out.lamb_shift.push(LambShiftRow { lead: name, channel: "", energy: f64::NAN, result: Err(e.to_string()) });
            }
        }
    }
    match secular_validity(p.system.mu_tilde, omega, &p.leads, cfg.solver.secular_threshold) {
        Ok(r) => {
            for (k, name) in LEAD_NAMES.iter().enumerate() {
                let pass = r.ratios[k] < r.threshold;
                if !pass {
                    out.violations.push(format!("{name}: secular ratio {:.3e} >= {}", r.ratios[k], r.threshold));
                }
                out.secular.push(SecularRow { lead: name, ratio: r.ratios[k], strict_ratio: r.strict_ratios[k], threshold: r.threshold, pass });
            }
        }
        Err(e) => out.violations.push(format!("secular check: {e}")),
    }
    out
}
