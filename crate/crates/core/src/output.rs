//! CSV trajectory tables and the JSON run summary.
//!
//! Column schema of `<scenario>.<formulation>.csv`:
//!
//! | columns | content |
//! |---|---|
//! | `t` | time |
//! | `axis_x axis_y axis_z angle` | attitude as unit axis and angle in `[0, π]` |
//! | `orthogonality_residual` | `max |RᵀR − Id|` |
//! | formulation state | e.g. `omega_x … eta_z` for `stage_s` |
//! | `energy` | reduced Lagrangian of the formulation |
//! | `rotor_momentum_*` | `K(Ω + Ω_r)` |
//! | `body_momentum_*` | `(I+K)Ω + KΩ_r` |
//! | `spatial_momentum_*` | `R·body_momentum` |
//! | `<current>_*` | formulation-specific Noether current |
//! | `<current>_drift_*` | analytic drift, zero for conserved currents |
//! | `<current>_drift_residual_*` | analytic drift minus finite-difference drift |
//!
//! Numbers are written with 17 significant digits. The drift residual needs two
//! neighbours on each side and is empty on the first and last two samples.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::algebra::Vec3;
use crate::harness::{drift_residuals, DriftReport, EquivalenceReport, FormulationRun};

const AXES: [&str; 3] = ["x", "y", "z"];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_vec(out: &mut Vec<String>, v: Vec3) {
    out.extend(v.to_array().map(num));
}

fn push_names(out: &mut Vec<String>, stem: &str) {
    out.extend(AXES.map(|a| format!("{stem}_{a}")));
}

pub fn csv_header(run: &FormulationRun) -> Vec<String> {
    let mut h: Vec<String> = [
        "t",
        "axis_x",
        "axis_y",
        "axis_z",
        "angle",
        "orthogonality_residual",
    ]
    .map(String::from)
    .to_vec();
    h.extend(run.state_columns.iter().map(|c| c.to_string()));
    h.push("energy".into());
    push_names(&mut h, "rotor_momentum");
    push_names(&mut h, "body_momentum");
    push_names(&mut h, "spatial_momentum");
    if let Some(first) = run.rows.first() {
        for c in &first.diagnostics.currents {
            push_names(&mut h, c.label);
            push_names(&mut h, &format!("{}_drift", c.label));
            push_names(&mut h, &format!("{}_drift_residual", c.label));
        }
    }
    h
}

/// Writes every `stride`-th sample of `run`.
pub fn write_csv(run: &FormulationRun, stride: usize, mut w: impl Write) -> io::Result<()> {
    let stride = stride.max(1);
    writeln!(w, "{}", csv_header(run).join(","))?;
    let n_currents = run.rows.first().map_or(0, |r| r.diagnostics.currents.len());
    let residuals: Vec<_> = (0..n_currents).map(|i| drift_residuals(run, i)).collect();
    for (k, row) in run.rows.iter().enumerate().step_by(stride) {
        let (axis, angle) = row.attitude.to_axis_angle();
        let mut f = vec![num(row.t)];
        push_vec(&mut f, axis);
        f.push(num(angle));
        f.push(num(row.attitude.orthogonality_residual()));
        f.extend(row.state.iter().copied().map(num));
        let d = &row.diagnostics;
        f.push(num(d.energy));
        push_vec(&mut f, d.rotor_momentum);
        push_vec(&mut f, d.body_momentum);
        push_vec(&mut f, d.spatial_momentum);
        for (c, res) in d.currents.iter().zip(&residuals) {
            push_vec(&mut f, c.value);
            push_vec(&mut f, c.drift.unwrap_or(Vec3::ZERO));
            match res[k] {
                Some(r) => push_vec(&mut f, r),
                None => f.extend(["", "", ""].map(String::from)),
            }
        }
        writeln!(w, "{}", f.join(","))?;
    }
    Ok(())
}

pub fn csv_path(dir: &Path, scenario: &str, run: &FormulationRun) -> PathBuf {
    dir.join(format!("{scenario}.{}.csv", run.kind))
}

pub fn report_path(dir: &Path, scenario: &str) -> PathBuf {
    dir.join(format!("{scenario}.report.json"))
}

#[derive(Debug, Serialize)]
pub struct RunSummary<'a> {
    pub stride: usize,
    pub samples: usize,
    pub files: Vec<String>,
    pub equivalence: &'a EquivalenceReport,
    pub drift: &'a DriftReport,
}

/// Writes one CSV per run plus the summary; returns the paths written.
pub fn write_outputs(
    dir: &Path,
    stride: usize,
    runs: &[FormulationRun],
    equivalence: &EquivalenceReport,
    drift: &DriftReport,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for run in runs {
        let path = csv_path(dir, &equivalence.scenario, run);
        let mut w = io::BufWriter::new(fs::File::create(&path)?);
        write_csv(run, stride, &mut w)?;
        w.flush()?;
        written.push(path);
    }
    let summary = RunSummary {
        stride,
        samples: runs
            .first()
            .map_or(0, |r| r.rows.len().div_ceil(stride.max(1))),
        files: written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        equivalence,
        drift,
    };
    let path = report_path(dir, &equivalence.scenario);
    let mut text = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}
