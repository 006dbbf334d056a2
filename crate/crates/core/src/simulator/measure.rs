//! Observables extracted from simulated fields: core position and depth,
//! plateau heights and phase slopes beside the core, shelf-edge positions,
//! and the drift rate of the soliton phase.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::field::FieldState;

/// Plateaus need at least this many samples.
pub const MIN_PLATEAU_POINTS: usize = 20;
/// Plateau windows start this many core widths 1/B from the core.
pub const CORE_MARGIN_WIDTHS: f64 = 10.0;
/// Plateau windows end at this fraction of the predicted edge distance.
pub const EDGE_FRACTION: f64 = 0.7;
/// A plateau whose standard deviation exceeds this fraction of its mean is flagged.
pub const FLATNESS_LIMIT: f64 = 0.25;

/// Continuous phase along the samples, continuing each point on the branch
/// nearest the previous one.
pub fn unwrap_phase(samples: &[Complex64]) -> Vec<f64> {
    unwrap_angles(samples.iter().map(|u| u.arg()))
}

pub(crate) fn unwrap_angles(angles: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for a in angles {
        match out.last() {
            None => out.push(a),
            Some(&prev) => {
                let mut d = a - prev;
                // Shift by whole turns into (−π, π]; exact ties keep the previous branch.
                d -= 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
                if d == -PI {
                    d = PI;
                }
                out.push(prev + d);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreFix {
    /// Lab coordinate of the intensity minimum.
    pub position: f64,
    /// Interpolated minimum of |u|².
    pub min_intensity: f64,
    /// `(min |u|²)^{1/2}`, the depth parameter A of the core.
    pub a: f64,
}

/// Locates the intensity minimum with a parabola through the lowest sample
/// and its neighbours.
pub fn locate_core(field: &FieldState) -> Result<CoreFix> {
    let n = field.samples.len();
    let intensity: Vec<f64> = field.samples.iter().map(|u| u.norm_sqr()).collect();
    let j = (1..n - 1).min_by(|&a, &b| intensity[a].total_cmp(&intensity[b])).ok_or(Error::TooFew { what: "samples", needed: 3, got: n })?;
    let (fm, f0, fp) = (intensity[j - 1], intensity[j], intensity[j + 1]);
    let curvature = fm - 2.0 * f0 + fp;
    let (offset, value) = if curvature > 0.0 {
        let s = 0.5 * (fm - fp) / curvature;
        (s, f0 - 0.25 * (fm - fp) * s)
    } else {
        (0.0, f0)
    };
    let h = field.grid.spacing();
    let min_intensity = value.max(0.0);
    Ok(CoreFix { position: field.grid.t(j) + offset * h, min_intensity, a: min_intensity.sqrt() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauFit {
    /// Mean of `(|u| − u∞)/ε`.
    pub q1: f64,
    /// Least-squares slope of the unwrapped phase, divided by ε.
    pub phi1t: f64,
    /// Window in coordinates relative to the core.
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub flat: bool,
    /// Edge position relative to the core where `|u| − u∞` first passes half the plateau value going outward.
    pub edge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShelfMeasurement {
    pub z: f64,
    pub core: CoreFix,
    pub right: PlateauFit,
    pub left: PlateauFit,
}

impl ShelfMeasurement {
    pub fn q1_plus(&self) -> f64 {
        self.right.q1
    }
    pub fn q1_minus(&self) -> f64 {
        self.left.q1
    }
    pub fn phi1t_plus(&self) -> f64 {
        self.right.phi1t
    }
    pub fn phi1t_minus(&self) -> f64 {
        self.left.phi1t
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn plateau(field: &FieldState, core: &CoreFix, u_inf: f64, epsilon: f64, b: f64, edge: f64, side: &'static str) -> Result<PlateauFit> {
    let sign = if edge > 0.0 { 1.0 } else { -1.0 };
    let start = sign * CORE_MARGIN_WIDTHS / b;
    let end = EDGE_FRACTION * edge;
    let (lo, hi) = if sign > 0.0 { (start, end) } else { (end, start) };
    let idx: Vec<usize> = (0..field.samples.len())
        .filter(|&j| {
            let x = field.grid.t(j) - core.position;
            x >= lo && x <= hi
        })
        .collect();
    if idx.len() < MIN_PLATEAU_POINTS || hi <= lo {
        return Err(Error::PlateauTooNarrow { side, start, end, points: idx.len() });
    }
    let excess: Vec<f64> = idx.iter().map(|&j| field.samples[j].norm() - u_inf).collect();
    let mean = excess.iter().sum::<f64>() / excess.len() as f64;
    let var = excess.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / excess.len() as f64;
    let flat = var.sqrt() <= FLATNESS_LIMIT * mean.abs();
    let xs: Vec<f64> = idx.iter().map(|&j| field.grid.t(j)).collect();
    let phase = unwrap_phase(&idx.iter().map(|&j| field.samples[j]).collect::<Vec<_>>());
    let slope = least_squares_slope(&xs, &phase);
    let edge_at = half_crossing(field, core, u_inf, mean, idx[if sign > 0.0 { 0 } else { idx.len() - 1 }], sign).ok_or(Error::EdgeNotFound(side))?;
    Ok(PlateauFit { q1: mean / epsilon, phi1t: slope / epsilon, start, end, points: idx.len(), flat, edge: edge_at })
}

/// Walks outward from `from` until `|u| − u∞` crosses `level/2`, and
/// interpolates the crossing linearly.
fn half_crossing(field: &FieldState, core: &CoreFix, u_inf: f64, level: f64, from: usize, sign: f64) -> Option<f64> {
    let target = 0.5 * level;
    let n = field.samples.len();
    let value = |j: usize| (field.samples[j].norm() - u_inf - target) * level.signum();
    let mut j = from;
    loop {
        let next = if sign > 0.0 {
            if j + 1 >= n {
                return None;
            }
            j + 1
        } else {
            j.checked_sub(1)?
        };
        let (a, b) = (value(j), value(next));
        if a > 0.0 && b <= 0.0 {
            let w = a / (a - b);
            let t = field.grid.t(j) + w * (field.grid.t(next) - field.grid.t(j));
            return Some(t - core.position);
        }
        j = next;
    }
}

/// Plateau heights, phase slopes and edges on both sides of the core.
/// `predicted_edges` are the comoving edge positions `(S_L, S_R)` that
/// bound the plateau windows, and `b` is the core's inverse width.
pub fn measure_shelf(snapshot: &FieldState, predicted_edges: (f64, f64), epsilon: f64, u_inf: f64, b: f64) -> Result<ShelfMeasurement> {
    require_finite("epsilon", epsilon)?;
    if epsilon == 0.0 {
        return Err(Error::InvalidParameter { name: "epsilon", reason: "plateau amplitudes are normalised by epsilon, which is zero".into() });
    }
    require_positive("u_inf", u_inf)?;
    require_positive("b", b)?;
    let (s_l, s_r) = predicted_edges;
    if !(s_l < 0.0 && s_r > 0.0) {
        return Err(Error::InvalidParameter { name: "predicted_edges", reason: format!("need S_L < 0 < S_R, got ({s_l}, {s_r})") });
    }
    let core = locate_core(snapshot)?;
    let right = plateau(snapshot, &core, u_inf, epsilon, b, s_r, "right")?;
    let left = plateau(snapshot, &core, u_inf, epsilon, b, s_l, "left")?;
    Ok(ShelfMeasurement { z: snapshot.z, core, right, left })
}

/// Four-point Lagrange interpolation of the complex field at lab position `t`.
pub fn interpolate(field: &FieldState, t: f64) -> Result<Complex64> {
    let h = field.grid.spacing();
    let pos = (t + field.grid.half_width) / h;
    let n = field.samples.len();
    if !(pos >= 1.0 && pos <= (n - 3) as f64) {
        return Err(Error::InvalidParameter { name: "t", reason: format!("{t} is not inside the grid interior") });
    }
    let j = pos.floor() as usize;
    let s = pos - j as f64;
    let w = [-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0, -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0];
    Ok((0..4).map(|k| field.samples[j - 1 + k] * w[k]).sum())
}

/// Edge searches start this many core widths from the core.
pub const EDGE_SEARCH_WIDTHS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSample {
    pub z: f64,
    /// Edge positions in the frame moving with the predicted core displacement.
    pub left: f64,
    pub right: f64,
}

/// Tracks both shelf edges through a snapshot sequence. Each edge is the
/// outward crossing of half the fixed plateau excess `levels = (left, right)`
/// (values of `|u| − u∞`), found by walking out from the measured core.
/// `shifts[k]` is the predicted core displacement `∫A dz` at `snapshots[k]`.
pub fn track_edges(snapshots: &[FieldState], shifts: &[f64], levels: (f64, f64), u_inf: f64, b: f64) -> Result<Vec<EdgeSample>> {
    require_positive("u_inf", u_inf)?;
    require_positive("b", b)?;
    if shifts.len() != snapshots.len() {
        return Err(Error::InvalidParameter { name: "shifts", reason: "one shift per snapshot".into() });
    }
    if levels.0 == 0.0 || levels.1 == 0.0 {
        return Err(Error::InvalidParameter { name: "levels", reason: "plateau excess must be nonzero".into() });
    }
    snapshots
        .iter()
        .zip(shifts)
        .map(|(snap, &shift)| {
            let core = locate_core(snap)?;
            let h = snap.grid.spacing();
            let index = |t: f64| ((t + snap.grid.half_width) / h).round().clamp(0.0, (snap.samples.len() - 1) as f64) as usize;
            let reach = EDGE_SEARCH_WIDTHS / b;
            let right = half_crossing(snap, &core, u_inf, levels.1, index(core.position + reach), 1.0).ok_or(Error::EdgeNotFound("right"))?;
            let left = half_crossing(snap, &core, u_inf, levels.0, index(core.position - reach), -1.0).ok_or(Error::EdgeNotFound("left"))?;
            let offset = core.position - shift;
            Ok(EdgeSample { z: snap.z, left: left + offset, right: right + offset })
        })
        .collect()
}

/// Least-squares line `y = slope·x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::TooFew { what: "fit points", needed: 2, got: x.len().min(y.len()) });
    }
    let slope = least_squares_slope(x, y);
    let n = x.len() as f64;
    let intercept = (y.iter().sum::<f64>() - slope * x.iter().sum::<f64>()) / n;
    Ok((slope, intercept))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigma0Rate {
    /// dσ₀/dz, the raw phase drift.
    pub per_z: f64,
    /// dσ₀/dZ = (dσ₀/dz)/ε; absent when ε = 0.
    pub per_slow_z: Option<f64>,
}

/// Drift of `arg u` at the comoving probe `T* = probe`, fitted by least
/// squares against z. `centres[k]` is the lab position of the core in
/// `snapshots[k]` and `edges[k]` its comoving shelf edges.
pub fn measure_sigma0_rate(snapshots: &[FieldState], centres: &[f64], edges: &[(f64, f64)], probe: f64, epsilon: f64) -> Result<Sigma0Rate> {
    require_finite("probe", probe)?;
    if probe == 0.0 {
        return Err(Error::InvalidParameter { name: "probe", reason: "must be off the core centre".into() });
    }
    if snapshots.len() < 2 {
        return Err(Error::TooFew { what: "snapshots", needed: 2, got: snapshots.len() });
    }
    if centres.len() != snapshots.len() || edges.len() != snapshots.len() {
        return Err(Error::InvalidParameter { name: "centres", reason: "one centre and edge pair per snapshot".into() });
    }
    let mut zs = Vec::with_capacity(snapshots.len());
    let mut angles = Vec::with_capacity(snapshots.len());
    for ((snap, &c), &(s_l, s_r)) in snapshots.iter().zip(centres).zip(edges) {
        if probe.abs() >= 0.5 * s_l.abs().min(s_r) {
            return Err(Error::ProbeOvertaken { probe, z: snap.z });
        }
        zs.push(snap.z);
        angles.push(interpolate(snap, c + probe)?.arg());
    }
    let phase = unwrap_angles(angles);
    let per_z = least_squares_slope(&zs, &phase);
    Ok(Sigma0Rate { per_z, per_slow_z: if epsilon != 0.0 { Some(per_z / epsilon) } else { None } })
}
