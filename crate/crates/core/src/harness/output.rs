use num_complex::Complex64;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::OutputKind;
use super::experiment::{shelf_at, RunOutput};
use super::report::ComparisonReport;
use super::HarnessError;
use crate::asymptotics::{black_first_order, ParameterTrajectory};
use crate::field::{FieldState, Grid};
use crate::layer::shelf_edges;
use crate::perturbation::Kernel;
use crate::simulator::{locate_core, unwrap_phase};
use crate::soliton::grey_profile;

/// Contours keep at most this many columns in t.
pub const CONTOUR_COLUMNS: usize = 512;

/// Seventeen significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    Ok(path.to_path_buf())
}

fn row(values: impl IntoIterator<Item = String>) -> String {
    let mut line = values.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

pub fn prediction_csv(traj: &ParameterTrajectory) -> Result<String, HarnessError> {
    let mut out = String::from(
        "z,slow_z,u_inf,a,b,t0,sigma0,delta_phi0,shift,q1_plus,q1_minus,phi1t_plus,phi1t_minus,delta_phi1,delta_phi1_rate,sigma0_rate,t0_rate,a_rate,b_rate,u_inf_rate,delta_phi0_rate,s_left,s_right\n",
    );
    for k in 0..traj.len() {
        let (c, s) = (&traj.core[k], &traj.shelf[k]);
        let (s_l, s_r) = shelf_edges(traj, traj.z[k]).map_err(|e| HarnessError::Run { context: "prediction edges".into(), source: e })?;
        out += &row([
            num(traj.z[k]),
            num(traj.slow_z[k]),
            num(c.u_inf),
            num(c.a),
            num(c.b),
            num(c.t0),
            num(c.sigma0),
            num(c.delta_phi0),
            num(traj.shift[k]),
            num(s.q1_plus),
            num(s.q1_minus),
            num(s.phi1t_plus),
            num(s.phi1t_minus),
            num(s.delta_phi1),
            num(s.delta_phi1_rate),
            num(s.sigma0_rate),
            opt(s.t0_rate),
            num(s.a_rate),
            num(s.b_rate),
            num(s.u_inf_rate),
            num(s.delta_phi0_rate),
            num(s_l),
            num(s_r),
        ]);
    }
    Ok(out)
}

pub fn write_prediction(traj: &ParameterTrajectory, run_id: &str, dir: &Path) -> Result<PathBuf, HarnessError> {
    write_file(&dir.join(format!("{run_id}_prediction.csv")), &prediction_csv(traj)?)
}

pub fn snapshot_file_name(run_id: &str, z: f64) -> String {
    format!("{run_id}_z{z:.6}.csv")
}

/// One snapshot record: `z,<value>`, a header, then `t,re_u,im_u` rows.
pub fn snapshot_csv(field: &FieldState) -> String {
    let mut out = String::with_capacity(72 * field.samples.len() + 64);
    let _ = writeln!(out, "z,{}", num(field.z));
    out.push_str("t,re_u,im_u\n");
    for (t, u) in field.coordinates().into_iter().zip(&field.samples) {
        out += &row([num(t), num(u.re), num(u.im)]);
    }
    out
}

pub fn write_snapshot(field: &FieldState, run_id: &str, dir: &Path) -> Result<PathBuf, HarnessError> {
    write_file(&dir.join(snapshot_file_name(run_id, field.z)), &snapshot_csv(field))
}

fn malformed(what: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::Validation { field: what.to_string(), reason: reason.into() }
}

/// Parses a snapshot record back into a lab-frame field on a uniform grid.
pub fn parse_snapshot(text: &str) -> Result<FieldState, HarnessError> {
    let mut lines = text.lines();
    let z = lines
        .next()
        .and_then(|l| l.strip_prefix("z,"))
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| malformed("snapshot", "first line must be `z,<value>`"))?;
    if lines.next().map(str::trim) != Some("t,re_u,im_u") {
        return Err(malformed("snapshot", "second line must be the `t,re_u,im_u` header"));
    }
    let mut ts = Vec::new();
    let mut samples = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<f64> = line.split(',').map(|c| c.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| malformed("snapshot", format!("row {}: {e}", k + 3)))?;
        if cols.len() != 3 {
            return Err(malformed("snapshot", format!("row {} has {} columns", k + 3, cols.len())));
        }
        ts.push(cols[0]);
        samples.push(Complex64::new(cols[1], cols[2]));
    }
    if ts.len() < 2 {
        return Err(malformed("snapshot", "needs at least two rows"));
    }
    let half_width = 0.5 * (ts[ts.len() - 1] - ts[0]);
    let grid = Grid::new(half_width, ts.len() - 1).map_err(|e| malformed("snapshot", e.to_string()))?;
    let h = grid.spacing();
    if let Some(j) = (0..ts.len()).find(|&j| (ts[j] - grid.t(j)).abs() > 1e-9 * h.max(half_width)) {
        return Err(malformed("snapshot", format!("row {} breaks the uniform symmetric grid", j + 3)));
    }
    FieldState::new(z, grid, samples).map_err(|e| malformed("snapshot", e.to_string()))
}

pub fn read_snapshot(path: &Path) -> Result<FieldState, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    parse_snapshot(&text)
}

pub fn write_report(report: &ComparisonReport, dir: &Path) -> Result<PathBuf, HarnessError> {
    let json = serde_json::to_string_pretty(report).map_err(|e| malformed("report", e.to_string()))?;
    write_file(&dir.join("report.json"), &(json + "\n"))
}

/// Final |u| and unwrapped phase against the leading-order prediction, with
/// the first-order inner correction added for black cores under dispersive damping.
pub fn profile_csv(out: &RunOutput) -> Result<String, HarnessError> {
    let last = out.final_snapshot();
    let (core, shift) = out.predicted_at(last.z)?;
    let run_err = |e: crate::Error| HarnessError::Run { context: format!("{} (profile)", out.config.name), source: e };
    let inner = match out.sim.perturbation.kernel() {
        Kernel::DispersiveDamping { gamma } if core.is_black() => Some(black_first_order(*gamma, core.u_inf, core.t0).map_err(run_err)?),
        _ => None,
    };
    let phase = unwrap_phase(&last.samples);
    let mut text = String::from("t,abs_u,phase,predicted_abs\n");
    for (j, u) in last.samples.iter().enumerate() {
        let t = last.grid.t(j);
        let u0 = grey_profile(&core, t - shift - core.t0).map_err(run_err)?;
        let predicted = match &inner {
            Some(first) => (u0 * (-Complex64::i() * core.sigma0).exp() + out.config.epsilon * first.q1(t)).norm(),
            None => u0.norm(),
        };
        text += &row([num(t), num(u.norm()), num(phase[j]), num(predicted)]);
    }
    Ok(text)
}

/// |u| over (t, z): a header of t values, then one row per snapshot.
pub fn contour_csv(out: &RunOutput) -> String {
    let grid = out.final_snapshot().grid;
    let step = grid.len().div_ceil(CONTOUR_COLUMNS).max(1);
    let cols: Vec<usize> = (0..grid.len()).step_by(step).collect();
    let mut text = row(std::iter::once("z".to_string()).chain(cols.iter().map(|&j| num(grid.t(j)))));
    for s in &out.snapshots {
        text += &row(std::iter::once(num(s.z)).chain(cols.iter().map(|&j| num(s.samples[j].norm()))));
    }
    text
}

/// Predicted lab edge lines to overlay on the contour.
pub fn contour_edges_csv(out: &RunOutput) -> Result<String, HarnessError> {
    let mut text = String::from("z,left,right\n");
    for s in &out.snapshots {
        let (l, r) = out.predicted_edges_lab(s.z)?;
        text += &row([num(s.z), num(l), num(r)]);
    }
    Ok(text)
}

pub fn trajectory_csv(out: &RunOutput) -> Result<String, HarnessError> {
    let mut text = String::from("z,predicted_a,measured_a,predicted_centre,measured_centre,predicted_sigma0,sigma0_rate\n");
    for s in &out.snapshots {
        let (core, shift) = out.predicted_at(s.z)?;
        let fix = locate_core(s).map_err(|e| HarnessError::Run { context: format!("{} (trajectory)", out.config.name), source: e })?;
        text += &row([num(s.z), num(core.a), num(fix.a), num(core.t0 + shift), num(fix.position), num(core.sigma0), num(shelf_at(&out.trajectory, s.z).sigma0_rate)]);
    }
    Ok(text)
}

pub fn layer_csv(out: &RunOutput) -> Result<String, HarnessError> {
    let mut text = String::from("x,t,simulated_abs,predicted_abs\n");
    for s in out.layer_samples()? {
        text += &row(s.map(num));
    }
    Ok(text)
}

/// Writes the requested outputs, returning the created paths in order.
pub fn emit(out: &RunOutput, kinds: &[OutputKind], dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let id = &out.config.name;
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let mut paths = Vec::new();
    for kind in kinds {
        match kind {
            OutputKind::Profile => paths.push(write_file(&dir.join(format!("{id}_profile.csv")), &profile_csv(out)?)?),
            OutputKind::Contour => {
                paths.push(write_file(&dir.join(format!("{id}_contour.csv")), &contour_csv(out))?);
                paths.push(write_file(&dir.join(format!("{id}_contour_edges.csv")), &contour_edges_csv(out)?)?);
            }
            OutputKind::Trajectory => paths.push(write_file(&dir.join(format!("{id}_trajectory.csv")), &trajectory_csv(out)?)?),
            OutputKind::Layer => paths.push(write_file(&dir.join(format!("{id}_layer.csv")), &layer_csv(out)?)?),
            OutputKind::Snapshots => {
                for s in &out.snapshots {
                    paths.push(write_snapshot(s, id, dir)?);
                }
            }
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let grid = Grid::new(4.0, 256).unwrap();
        let field = FieldState::from_fn(1.25, grid, |t| Complex64::new(t.tanh(), 0.1 * t.sin()));
        let text = snapshot_csv(&field);
        assert!(text.starts_with("z,1.2500000000000000e0\nt,re_u,im_u\n"));
        let back = parse_snapshot(&text).unwrap();
        assert_eq!(back.z, field.z);
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.samples, field.samples);
    }

    #[test]
    fn malformed_snapshots_rejected() {
        assert!(parse_snapshot("t,re_u,im_u\n").is_err());
        assert!(parse_snapshot("z,1\nt,re_u,im_u\n0,1,0\n").is_err());
        assert!(parse_snapshot("z,1\nt,re_u,im_u\n-1,1,0\n0.3,1,0\n1,1,0\n").is_err());
    }

    #[test]
    fn file_name_pattern() {
        assert_eq!(snapshot_file_name("black_dispersive", 30.0), "black_dispersive_z30.000000.csv");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
