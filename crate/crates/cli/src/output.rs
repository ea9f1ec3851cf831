//! CSV and JSON writers.
//!
//! Floats are written with 17 significant digits so values round-trip
//! exactly. Files are written by a single thread after all points finish,
//! in grid order.

use std::fs;
use std::path::Path;

use anyhow::Context;

use crate::config::{Param, RunConfig};
use crate::runner::{axes, Diagnostics, PointRecord, TrajectoryPoint};

/// Formats `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn writer(path: &Path) -> anyhow::Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

const VALUE_COLUMNS: [&str; 9] = [
    "I_L",
    "I_R",
    "conservation_residual",
    "dot_population",
    "n_phonon",
    "top_population",
    "min_eigenvalue",
    "residual",
    "secular_ratio",
];

/// Writes `results.csv`: context parameters, swept parameters, observables,
/// the bias conductance when a bias axis is present, and a status column.
pub fn write_results(
    path: &Path,
    cfg: &RunConfig,
    records: &[PointRecord],
    conductance: Option<&[f64]>,
) -> anyhow::Result<()> {
    let extra: Vec<Param> =
        axes(cfg).iter().map(|a| a.param).filter(|p| !matches!(p, Param::MuTilde | Param::Lambda)).collect();
    let mut header: Vec<String> = ["mu_tilde", "lambda", "mu_L", "mu_R", "n_fock"].iter().map(|s| s.to_string()).collect();
    header.extend(extra.iter().map(|p| p.name().to_string()));
    header.extend(VALUE_COLUMNS.iter().map(|s| s.to_string()));
    if conductance.is_some() {
        header.push("dIR_ddelta_mu".into());
    }
    header.push("status".into());
    let mut w = writer(path)?;
    w.write_record(&header)?;
    let axes = axes(cfg);
    for (i, r) in records.iter().enumerate() {
        let p = &r.params;
        let mut row = vec![
            fmt_f64(p.system.mu_tilde),
            fmt_f64(p.system.lambda),
            fmt_f64(p.leads[0].chem_potential),
            fmt_f64(p.leads[1].chem_potential),
            p.system.n_fock.to_string(),
        ];
        for param in &extra {
            let k = axes.iter().position(|a| a.param == *param).expect("axis");
            row.push(fmt_f64(r.coords[k]));
        }
        match &r.result {
            Ok(v) => {
                row.extend(
                    [
                        v.current_left,
                        v.current_right,
                        (v.current_left + v.current_right).abs(),
                        v.dot_population,
                        v.phonons,
                        v.top_population,
                        v.min_eigenvalue,
                        v.residual,
                        v.secular_ratio,
                    ]
                    .map(fmt_f64),
                );
            }
            Err(_) => row.extend(VALUE_COLUMNS.iter().map(|_| fmt_f64(f64::NAN))),
        }
        if let Some(g) = conductance {
            row.push(fmt_f64(g[i]));
        }
        row.push(match &r.result {
            Ok(_) => "ok".into(),
            Err(e) => format!("error: {e}"),
        });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `trajectory.csv`.
pub fn write_trajectory(path: &Path, traj: &[TrajectoryPoint]) -> anyhow::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "dot_population", "n_phonon", "I_L", "I_R", "trace", "min_eigenvalue"])?;
    for p in traj {
        w.write_record(
            [p.t, p.dot_population, p.phonons, p.current_left, p.current_right, p.trace, p.min_eigenvalue].map(fmt_f64),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `correlation.csv`, `lamb_shift.csv` and `secular.csv` into `dir`.
pub fn write_diagnostics(dir: &Path, d: &Diagnostics) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = writer(&dir.join("correlation.csv"))?;
    w.write_record(["lead", "channel", "t", "re", "im", "abs"])?;
    for c in &d.correlations {
        for (t, v) in c.times.iter().zip(&c.values) {
            w.write_record([c.lead.to_string(), c.channel.to_string(), fmt_f64(*t), fmt_f64(v.re), fmt_f64(v.im), fmt_f64(v.norm())])?;
        }
    }
    w.flush()?;

    let mut w = writer(&dir.join("lamb_shift.csv"))?;
    w.write_record(["lead", "channel", "energy", "im", "re", "ratio", "bound", "near_pole", "status"])?;
    for r in &d.lamb_shift {
        let mut row = vec![r.lead.to_string(), r.channel.to_string(), fmt_f64(r.energy)];
        match &r.result {
            Ok((im, re, ratio, bound, near)) => {
                row.extend([*im, *re, *ratio, *bound].map(fmt_f64));
                row.push(near.to_string());
                row.push("ok".into());
            }
            Err(e) => {
                row.extend([f64::NAN; 4].map(fmt_f64));
                row.push("false".into());
                row.push(format!("error: {e}"));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = writer(&dir.join("secular.csv"))?;
    w.write_record(["lead", "ratio", "strict_ratio", "threshold", "pass"])?;
    for s in &d.secular {
        w.write_record([s.lead.to_string(), fmt_f64(s.ratio), fmt_f64(s.strict_ratio), fmt_f64(s.threshold), s.pass.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes pretty-printed JSON.
pub fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
