//! JSON run configuration.
//!
//! Energies are plain numbers in angular GHz (10^9 rad/s). Any energy may
//! instead be written `{"over_2pi": x}` for a value quoted as `X/2pi` in GHz,
//! and temperatures may be written `{"mK": t}`.

use std::fmt;

use nems_core::observables::BiasSplit;
use nems_core::units::{from_cycles, temperature_from_millikelvin};
use nems_core::{LeadParams, SolverKind, SystemParams};
use serde::{Deserialize, Serialize};

/// Supported configuration schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// A configuration problem, located by its JSON path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

/// Energy or temperature with an optional unit wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Angular(f64),
    Cycles {
        over_2pi: f64,
    },
    MilliKelvin {
        #[serde(rename = "mK")]
        mk: f64,
    },
}

impl Quantity {
    fn energy(&self, path: &str) -> Result<f64, ConfigError> {
        match *self {
            Quantity::Angular(x) => Ok(x),
            Quantity::Cycles { over_2pi } => Ok(from_cycles(over_2pi)),
            Quantity::MilliKelvin { .. } => Err(err(path, "millikelvin is only accepted for temperatures")),
        }
    }

    fn temperature(&self) -> f64 {
        match *self {
            Quantity::Angular(x) => x,
            Quantity::Cycles { over_2pi } => from_cycles(over_2pi),
            Quantity::MilliKelvin { mk } => temperature_from_millikelvin(mk),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Redfield,
    Gkls,
}

impl From<Kind> for SolverKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Redfield => SolverKind::Redfield,
            Kind::Gkls => SolverKind::Gkls,
        }
    }
}

fn default_n_fock() -> usize {
    10
}
fn default_n_max() -> usize {
    24
}
fn default_converge_tol() -> f64 {
    1e-6
}
fn default_residual_tol() -> f64 {
    1e-10
}
fn default_uniqueness_tol() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}
fn default_budget() -> usize {
    1024
}
fn default_atol() -> f64 {
    1e-10
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_secular() -> f64 {
    0.1
}
fn default_top_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(default)]
    pub kind: Kind,
    #[serde(default = "default_n_fock")]
    pub n_fock: usize,
    /// Step `n_fock` through 8, 12, 16, ... until observables settle.
    #[serde(default)]
    pub auto_converge: bool,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_converge_tol")]
    pub converge_tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_uniqueness_tol")]
    pub uniqueness_tol: f64,
    #[serde(default = "default_true")]
    pub check_uniqueness: bool,
    #[serde(default = "default_budget")]
    pub memory_budget_mb: usize,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_secular")]
    pub secular_threshold: f64,
    /// Guard on the population of the highest retained oscillator level.
    #[serde(default = "default_top_tol")]
    pub top_population_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Polaron-frame level; exclusive with `mu`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_tilde: Option<Quantity>,
    /// Bare dot level; requires `g` instead of `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Quantity>,
    pub omega: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadConfig {
    pub gamma_rate: Quantity,
    pub temperature: Quantity,
    #[serde(default = "zero_quantity")]
    pub chem_potential: Quantity,
    #[serde(default = "zero_quantity")]
    pub lorentz_center: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lorentz_width: Option<Quantity>,
    #[serde(default)]
    pub wide_band: bool,
}

fn zero_quantity() -> Quantity {
    Quantity::Angular(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadsConfig {
    pub left: LeadConfig,
    pub right: LeadConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Symmetric,
    Left,
    Right,
}

impl From<Split> for BiasSplit {
    fn from(s: Split) -> Self {
        match s {
            Split::Symmetric => BiasSplit::Symmetric,
            Split::Left => BiasSplit::Left,
            Split::Right => BiasSplit::Right,
        }
    }
}

/// Parameters that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "mu_tilde")]
    MuTilde,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "delta_mu")]
    DeltaMu,
    #[serde(rename = "T_L")]
    TempLeft,
    #[serde(rename = "T_R")]
    TempRight,
    #[serde(rename = "gamma_L")]
    CenterLeft,
    #[serde(rename = "gamma_R")]
    CenterRight,
    #[serde(rename = "delta_L")]
    WidthLeft,
    #[serde(rename = "delta_R")]
    WidthRight,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::MuTilde => "mu_tilde",
            Param::Lambda => "lambda",
            Param::DeltaMu => "delta_mu",
            Param::TempLeft => "T_L",
            Param::TempRight => "T_R",
            Param::CenterLeft => "gamma_L",
            Param::CenterRight => "gamma_R",
            Param::WidthLeft => "delta_L",
            Param::WidthRight => "delta_R",
        }
    }
}

/// Uniform grid `from..=to` with `steps` points, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    Range { from: f64, to: f64, steps: usize },
    List(Vec<f64>),
}

impl Values {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Values::List(v) => v.clone(),
            Values::Range { from, to, steps } => match *steps {
                0 => Vec::new(),
                1 => vec![*from],
                n => (0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub values: Values,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameName {
    Polaron,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Initial {
    /// `|level, dot>` in the given frame.
    Fock {
        #[serde(default)]
        dot: usize,
        #[serde(default)]
        level: usize,
        #[serde(default = "polaron_frame")]
        frame: FrameName,
    },
}

fn polaron_frame() -> FrameName {
    FrameName::Polaron
}

/// Unknown fields inside a task are rejected even without strict mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Task {
    Point,
    Scan { axis: Axis },
    Map { x: Axis, y: Axis },
    Transient { initial: Initial, times: Values },
    /// Same as the `diagnostics` subcommand.
    Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_times")]
    pub times: Values,
    /// Energies for the Lamb-shift report; defaults to `[-10 omega, 10 omega]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Values>,
    #[serde(default = "default_decay_threshold")]
    pub decay_threshold: f64,
}

fn default_times() -> Values {
    Values::Range { from: 0.0, to: 20.0, steps: 2001 }
}
fn default_decay_threshold() -> f64 {
    1e-3
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { times: default_times(), energies: None, decay_threshold: default_decay_threshold() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub solver: SolverConfig,
    pub system: SystemConfig,
    pub leads: LeadsConfig,
    #[serde(default)]
    pub bias_split: Split,
    /// Sets `mu_L` and `mu_R` through `bias_split`, overriding the leads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_mu: Option<f64>,
    pub task: Task,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

/// Parses a configuration. In strict mode unknown fields are errors;
/// otherwise they are returned as warnings.
pub fn parse_config(text: &str, strict: bool) -> Result<(RunConfig, Vec<String>), ConfigError> {
    let mut ignored = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut track = |p: serde_ignored::Path<'_>| ignored.push(p.to_string());
    let tracked = serde_ignored::Deserializer::new(de, &mut track);
    let cfg: RunConfig = serde_path_to_error::deserialize(tracked).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        err(path, e.inner().to_string())
    })?;
    if strict {
        if let Some(p) = ignored.first() {
            return Err(err(p.clone(), "unknown field"));
        }
    }
    if cfg.schema != SCHEMA_VERSION {
        return Err(err("schema", format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema)));
    }
    cfg.validate()?;
    let warnings = ignored.into_iter().map(|p| format!("{p}: unknown field ignored")).collect();
    Ok((cfg, warnings))
}

/// Physical parameters of one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub system: SystemParams,
    pub leads: [LeadParams; 2],
}

impl RunConfig {
    fn lead(&self, c: &LeadConfig, path: &str) -> Result<LeadParams, ConfigError> {
        let lead = LeadParams {
            gamma_rate: c.gamma_rate.energy(&format!("{path}.gamma_rate"))?,
            temperature: c.temperature.temperature(),
            chem_potential: c.chem_potential.energy(&format!("{path}.chem_potential"))?,
            center: c.lorentz_center.energy(&format!("{path}.lorentz_center"))?,
            width: match (&c.lorentz_width, c.wide_band) {
                (Some(w), _) => w.energy(&format!("{path}.lorentz_width"))?,
                (None, true) => 1.0,
                (None, false) => return Err(err(format!("{path}.lorentz_width"), "required unless wide_band is set")),
            },
            wide_band: c.wide_band,
        };
        lead.validate().map_err(|e| match e {
            nems_core::Error::InvalidParam { field, reason } => err(format!("{path}.{field}"), reason),
            other => err(path, other.to_string()),
        })?;
        Ok(lead)
    }

    /// Base parameters before any sweep is applied, at `n_fock`.
    pub fn resolve(&self, n_fock: usize) -> Result<Resolved, ConfigError> {
        let s = &self.system;
        let omega = s.omega.energy("system.omega")?;
        let system = match (&s.mu_tilde, &s.mu, s.lambda, &s.g) {
            (Some(mt), None, Some(lambda), None) => SystemParams::new(mt.energy("system.mu_tilde")?, omega, lambda, n_fock),
            (None, Some(mu), None, Some(g)) => {
                SystemParams::from_bare(mu.energy("system.mu")?, omega, g.energy("system.g")?, n_fock)
            }
            _ => return Err(err("system", "give either `mu_tilde` and `lambda`, or `mu` and `g`")),
        }
        .map_err(|e| match e {
            nems_core::Error::InvalidParam { field, reason } => err(format!("system.{field}"), reason),
            other => err("system", other.to_string()),
        })?;
        let mut leads = [self.lead(&self.leads.left, "leads.left")?, self.lead(&self.leads.right, "leads.right")?];
        if let Some(dm) = self.delta_mu {
            BiasSplit::from(self.bias_split).apply(&mut leads, dm);
        }
        Ok(Resolved { system, leads })
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let sc = &self.solver;
        if sc.n_fock < 1 {
            return Err(err("solver.n_fock", "must be >= 1"));
        }
        if sc.auto_converge && sc.n_max < 8 {
            return Err(err("solver.n_max", "must be >= 8 with auto_converge"));
        }
        for (name, v) in [
            ("solver.converge_tol", sc.converge_tol),
            ("solver.residual_tol", sc.residual_tol),
            ("solver.atol", sc.atol),
            ("solver.rtol", sc.rtol),
            ("solver.secular_threshold", sc.secular_threshold),
            ("solver.top_population_tol", sc.top_population_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(err(name, "must be finite and > 0"));
            }
        }
        if !(sc.uniqueness_tol.is_finite() && sc.uniqueness_tol >= 0.0) {
            return Err(err("solver.uniqueness_tol", "must be finite and >= 0"));
        }
        if sc.memory_budget_mb == 0 {
            return Err(err("solver.memory_budget_mb", "must be > 0"));
        }
        self.resolve(sc.n_fock)?;
        let check_axis = |a: &Axis, path: &str| -> Result<(), ConfigError> {
            let pts = a.values.points();
            if pts.is_empty() {
                return Err(err(format!("{path}.values"), "no points"));
            }
            if pts.iter().any(|v| !v.is_finite()) {
                return Err(err(format!("{path}.values"), "must be finite"));
            }
            Ok(())
        };
        match &self.task {
            Task::Point | Task::Diagnostics => {}
            Task::Scan { axis } => check_axis(axis, "task.axis")?,
            Task::Map { x, y } => {
                check_axis(x, "task.x")?;
                check_axis(y, "task.y")?;
                if x.param == y.param {
                    return Err(err("task.y.param", "must differ from task.x.param"));
                }
                for (a, p) in [(x, "task.x"), (y, "task.y")] {
                    if a.param == Param::DeltaMu && a.values.points().len() < 2 {
                        return Err(err(format!("{p}.values"), "a bias axis needs at least 2 points for the conductance"));
                    }
                }
            }
            Task::Transient { initial, times } => {
                let t = times.points();
                if t.is_empty() || t.windows(2).any(|w| !(w[1] >= w[0])) || t.iter().any(|v| !v.is_finite()) {
                    return Err(err("task.times", "must be a finite non-decreasing grid"));
                }
                let Initial::Fock { dot, level, .. } = initial;
                if *dot > 1 {
                    return Err(err("task.initial.dot", "must be 0 or 1"));
                }
                if *level > sc.n_fock {
                    return Err(err("task.initial.level", format!("exceeds n_fock = {}", sc.n_fock)));
                }
            }
        }
        let d = &self.diagnostics;
        if !(d.decay_threshold > 0.0 && d.decay_threshold < 1.0) {
            return Err(err("diagnostics.decay_threshold", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Applies a swept parameter to a resolved point.
pub fn apply_param(r: &mut Resolved, p: Param, v: f64, split: Split) {
    match p {
        Param::MuTilde => r.system.mu_tilde = v,
        Param::Lambda => r.system.lambda = v,
        Param::DeltaMu => BiasSplit::from(split).apply(&mut r.leads, v),
        Param::TempLeft => r.leads[0].temperature = v,
        Param::TempRight => r.leads[1].temperature = v,
        Param::CenterLeft => r.leads[0].center = v,
        Param::CenterRight => r.leads[1].center = v,
        Param::WidthLeft => r.leads[0].width = v,
        Param::WidthRight => r.leads[1].width = v,
    }
}
