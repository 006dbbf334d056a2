//! Method-of-lines integration of
//!
//! ```text
//! i·u_z − ½u_tt + (|u|² − u∞²)·u = ε·F[u]
//! ```
//!
//! on a finite line with the two end values pinned to the evolving
//! background. The Laplacian is the fourth-order central stencil (one-sided
//! next to the ends) and z is advanced with classical RK4.

pub mod diagnostics;
pub mod measure;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundHistory;
use crate::error::{require_finite, require_positive, Error, Result};
use crate::field::{FieldState, Grid, Representation};
use crate::perturbation::{Kernel, Perturbation};
use crate::soliton::{grey_profile, CoreParams};
use crate::stencil::{d1_at, d2_at, d2_interior};

pub use diagnostics::{conservation_residuals, conserved_quantities, ConservationResiduals, LawResidual};
pub use measure::{fit_line, locate_core, measure_shelf, measure_sigma0_rate, track_edges, unwrap_phase, CoreFix, EdgeSample, ShelfMeasurement, Sigma0Rate};

pub const MIN_INTERVALS: usize = 256;
/// Explicit stability margin `dz ≤ STABILITY_FACTOR·dt²`.
pub const STABILITY_FACTOR: f64 = 0.2;
pub const MAX_GROWTH: f64 = 10.0;
const PIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    #[default]
    PinnedDirichlet,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub epsilon: f64,
    pub perturbation: Perturbation,
    pub dz: f64,
    /// Steps between stored snapshots.
    pub stride: usize,
    pub boundary: BoundaryMode,
    /// Lab position of the core at z = 0, used for the boundary-contamination check.
    pub core_origin: f64,
}

impl SimConfig {
    pub fn new(epsilon: f64, perturbation: Perturbation, dz: f64, stride: usize) -> Self {
        Self { epsilon, perturbation, dz, stride, boundary: BoundaryMode::PinnedDirichlet, core_origin: 0.0 }
    }

    /// Largest stable step for the grid.
    pub fn max_dz(grid: &Grid) -> f64 {
        STABILITY_FACTOR * grid.spacing() * grid.spacing()
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        require_finite("epsilon", self.epsilon)?;
        require_positive("dz", self.dz)?;
        require_finite("core_origin", self.core_origin)?;
        if grid.intervals < MIN_INTERVALS {
            return Err(Error::InvalidParameter { name: "intervals", reason: format!("need at least {MIN_INTERVALS}, got {}", grid.intervals) });
        }
        let limit = Self::max_dz(grid);
        if self.dz > limit * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter { name: "dz", reason: format!("{} exceeds the stability bound 0.2 dt^2 = {limit}", self.dz) });
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter { name: "stride", reason: "must be >= 1".into() });
        }
        Ok(())
    }
}

/// Samples an exact soliton whose core sits at lab position `t0`.
pub fn soliton_field(params: &CoreParams, grid: Grid) -> Result<FieldState> {
    let samples = grid.points().iter().map(|&t| grey_profile(params, t - params.t0)).collect::<Result<Vec<_>>>()?;
    FieldState::new(0.0, grid, samples)
}

/// Exact travelling soliton of the unperturbed equation at distance `z`.
pub fn exact_soliton(params: &CoreParams, grid: Grid, z: f64) -> Result<FieldState> {
    let samples = grid.points().iter().map(|&t| grey_profile(params, t - params.a * z - params.t0)).collect::<Result<Vec<_>>>()?;
    FieldState::new(z, grid, samples)
}

struct Workspace {
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
    forcing: Vec<Complex64>,
}

struct Stepper<'a> {
    epsilon: f64,
    perturbation: &'a Perturbation,
    history: &'a BackgroundHistory,
    phase_left: Complex64,
    phase_right: Complex64,
    inv_12h2: f64,
    h: f64,
}

impl Stepper<'_> {
    fn pin(&self, y: &mut [Complex64], z: f64) -> Result<()> {
        let u = self.history.u_inf_at(z)?;
        let n = y.len();
        y[0] = self.phase_left * u;
        y[n - 1] = self.phase_right * u;
        Ok(())
    }

    fn rhs(&self, z: f64, y: &[Complex64], out: &mut [Complex64], forcing: &mut Vec<Complex64>) -> Result<()> {
        let u_inf = self.history.u_inf_at(z)?;
        let u2 = u_inf * u_inf;
        let eps = self.epsilon;
        let active = eps != 0.0;
        match self.perturbation.kernel() {
            Kernel::DispersiveDamping { gamma } if active => {
                // ε·iγ·u_tt folds into the Laplacian coefficient.
                let c = Complex64::new(0.5, eps * gamma);
                self.sweep(y, out, u2, |_, _, lap| c * lap);
            }
            Kernel::LinearDamping { gamma } if active => {
                let c = Complex64::new(0.0, -eps * gamma);
                self.sweep(y, out, u2, |y, j, lap| 0.5 * lap + c * y[j]);
            }
            Kernel::TwoPhoton { gamma3 } if active => {
                let c = Complex64::new(0.0, -eps * gamma3);
                self.sweep(y, out, u2, |y, j, lap| 0.5 * lap + c * y[j].norm_sqr() * y[j]);
            }
            Kernel::Local(f) if active => {
                let h = self.h;
                self.sweep(y, out, u2, |y, j, lap| 0.5 * lap + eps * f(y[j], d1_at(y, j, h), lap));
            }
            Kernel::Grid(f) if active => {
                *forcing = f(y, self.h);
                let forcing = &*forcing;
                self.sweep(y, out, u2, |_, j, lap| 0.5 * lap + eps * forcing[j]);
            }
            _ => self.sweep(y, out, u2, |_, _, lap| 0.5 * lap),
        }
        Ok(())
    }

    /// `out_j = −i·(linear_j − (|u_j|² − u∞²)·u_j)` on interior nodes, where
    /// `linear_j` combines ½u_tt with the forcing.
    #[inline(always)]
    fn sweep<G>(&self, y: &[Complex64], out: &mut [Complex64], u2: f64, linear: G)
    where
        G: Fn(&[Complex64], usize, Complex64) -> Complex64,
    {
        let n = y.len();
        let mut point = |j: usize, lap: Complex64| {
            let u = y[j];
            let v = linear(y, j, lap) - (u.norm_sqr() - u2) * u;
            // −i·v
            out[j] = Complex64::new(v.im, -v.re);
        };
        point(1, d2_at(y, 1, self.h));
        for j in 2..n - 2 {
            point(j, d2_interior(y, j, self.inv_12h2));
        }
        point(n - 2, d2_at(y, n - 2, self.h));
        out[0] = Complex64::new(0.0, 0.0);
        out[n - 1] = Complex64::new(0.0, 0.0);
    }

    fn step(&self, z: f64, dz: f64, y: &mut [Complex64], ws: &mut Workspace) -> Result<()> {
        let n = y.len();
        let Workspace { k, stage, forcing } = ws;
        self.rhs(z, y, &mut k[0], forcing)?;
        for (s, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            for j in 0..n {
                stage[j] = y[j] + k[s - 1][j] * (c * dz);
            }
            self.pin(stage, z + c * dz)?;
            self.rhs(z + c * dz, stage, &mut k[s], forcing)?;
        }
        let w = dz / 6.0;
        for j in 0..n {
            y[j] += (k[0][j] + (k[1][j] + k[2][j]) * 2.0 + k[3][j]) * w;
        }
        self.pin(y, z + dz)
    }
}

/// Integrates from `initial.z` to `z_max`, returning the initial state and
/// every `stride`-th step, always including the final one.
pub fn run(config: &SimConfig, initial: &FieldState, history: &BackgroundHistory, z_max: f64) -> Result<Vec<FieldState>> {
    let grid = initial.grid;
    config.validate(&grid)?;
    require_finite("z_max", z_max)?;
    if initial.representation != Representation::PhaseRemoved {
        return Err(Error::Representation("the stepper integrates the phase-removed field u".into()));
    }
    let z_start = initial.z;
    if z_max < z_start {
        return Err(Error::InvalidParameter { name: "z_max", reason: format!("{z_max} precedes the initial z = {z_start}") });
    }
    let u_start = history.u_inf_at(z_start)?;
    history.u_inf_at(z_max)?;
    let n = grid.len();
    let (left, right) = (initial.samples[0], initial.samples[n - 1]);
    for (name, v) in [("left", left), ("right", right)] {
        if (v.norm() - u_start).abs() > PIN_TOL {
            return Err(Error::InvalidParameter { name: "initial", reason: format!("{name} boundary |u| = {} is not the background {u_start}", v.norm()) });
        }
    }
    // Layers travel at the local sound speed and must stay L/10 clear of the ends.
    let reach = history.travel(z_max)? - history.travel(z_start)?;
    let edge = config.core_origin.abs() + reach;
    let limit = 0.9 * grid.half_width;
    if edge > limit {
        return Err(Error::BoundaryContamination { edge, limit });
    }
    let stepper = Stepper {
        epsilon: config.epsilon,
        perturbation: &config.perturbation,
        history,
        phase_left: left / left.norm(),
        phase_right: right / right.norm(),
        inv_12h2: 1.0 / (12.0 * grid.spacing() * grid.spacing()),
        h: grid.spacing(),
    };
    let steps = ((z_max - z_start) / config.dz).ceil() as usize;
    let dz = if steps == 0 { 0.0 } else { (z_max - z_start) / steps as f64 };
    let mut y = initial.samples.clone();
    let peak0 = y.iter().map(|u| u.norm()).fold(0.0, f64::max).max(u_start);
    let mut ws = Workspace { k: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]), stage: vec![Complex64::new(0.0, 0.0); n], forcing: Vec::new() };
    let mut out = vec![FieldState { z: z_start, samples: y.clone(), ..initial.clone() }];
    for s in 1..=steps {
        let z = z_start + (s - 1) as f64 * dz;
        stepper.step(z, dz, &mut y, &mut ws)?;
        let z_new = if s == steps { z_max } else { z_start + s as f64 * dz };
        let store = s % config.stride == 0 || s == steps;
        if store || s % 256 == 0 {
            let peak = y.iter().map(|u| u.norm()).fold(0.0, f64::max);
            if !peak.is_finite() || peak > MAX_GROWTH * peak0 {
                return Err(Error::Unstable { peak, z: z_new });
            }
        }
        if store {
            out.push(FieldState { z: z_new, samples: y.clone(), ..initial.clone() });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_grid() -> Grid {
        Grid::new(40.0, 1024).unwrap()
    }

    #[test]
    fn config_validation() {
        let g = small_grid();
        let ok = SimConfig::new(0.0, Perturbation::none(), SimConfig::max_dz(&g), 10);
        assert!(ok.validate(&g).is_ok());
        let too_big = SimConfig { dz: 1.01 * SimConfig::max_dz(&g), ..ok.clone() };
        assert!(too_big.validate(&g).is_err());
        assert!(SimConfig { stride: 0, ..ok.clone() }.validate(&g).is_err());
        assert!(ok.validate(&Grid::new(40.0, 128).unwrap()).is_err());
    }

    #[test]
    fn constant_background_stays_put() {
        let g = Grid::new(20.0, 256).unwrap();
        let init = FieldState::from_fn(0.0, g, |_| Complex64::new(1.0, 0.0));
        let h = BackgroundHistory::constant(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(0.0, Perturbation::none(), SimConfig::max_dz(&g), 1000);
        let out = run(&cfg, &init, &h, 1.0).unwrap();
        assert!(out.last().unwrap().samples.iter().all(|u| (u - 1.0).norm() < 1e-14));
        assert_eq!(out.last().unwrap().z, 1.0);
    }

    #[test]
    fn short_black_run_matches_exact_solution() {
        let g = small_grid();
        let p = CoreParams::black(1.0).unwrap();
        let init = soliton_field(&p, g).unwrap();
        let h = BackgroundHistory::constant(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(0.0, Perturbation::none(), SimConfig::max_dz(&g), 50);
        let out = run(&cfg, &init, &h, 1.0).unwrap();
        let exact = exact_soliton(&p, g, 1.0).unwrap();
        let err = out.last().unwrap().samples.iter().zip(&exact.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn grey_soliton_translates() {
        let g = small_grid();
        let p = CoreParams::new(1.0, 4.0 * PI / 5.0, -2.0, 0.3).unwrap();
        let init = soliton_field(&p, g).unwrap();
        let h = BackgroundHistory::constant(1.0, 2.0).unwrap();
        let cfg = SimConfig::new(0.0, Perturbation::none(), SimConfig::max_dz(&g), 100);
        let out = run(&cfg, &init, &h, 2.0).unwrap();
        let exact = exact_soliton(&p, g, 2.0).unwrap();
        let err = out.last().unwrap().samples.iter().zip(&exact.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn deterministic() {
        let g = Grid::new(30.0, 512).unwrap();
        let p = CoreParams::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let init = soliton_field(&p, g).unwrap();
        let h = BackgroundHistory::constant(1.0, 0.5).unwrap();
        let cfg = SimConfig::new(0.05, Perturbation::dispersive_damping(1.0).unwrap(), SimConfig::max_dz(&g), 100);
        let a = run(&cfg, &init, &h, 0.5).unwrap();
        let b = run(&cfg, &init, &h, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forcing_paths_agree() {
        // The folded dispersive path and the generic local path integrate the same equation.
        let g = Grid::new(30.0, 512).unwrap();
        let p = CoreParams::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let init = soliton_field(&p, g).unwrap();
        let h = BackgroundHistory::constant(1.0, 0.3).unwrap();
        let fast = SimConfig::new(0.05, Perturbation::dispersive_damping(1.0).unwrap(), SimConfig::max_dz(&g), 1000);
        let generic = SimConfig { perturbation: Perturbation::local("idd", true, |_, _, utt: Complex64| Complex64::i() * utt), ..fast.clone() };
        let a = run(&fast, &init, &h, 0.3).unwrap();
        let b = run(&generic, &init, &h, 0.3).unwrap();
        let d = a.last().unwrap().samples.iter().zip(&b.last().unwrap().samples).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn contamination_and_pinning_errors() {
        let g = Grid::new(20.0, 256).unwrap();
        let p = CoreParams::black(1.0).unwrap();
        let init = soliton_field(&p, g).unwrap();
        let h = BackgroundHistory::constant(1.0, 30.0).unwrap();
        let cfg = SimConfig::new(0.0, Perturbation::none(), SimConfig::max_dz(&g), 10);
        assert!(matches!(run(&cfg, &init, &h, 19.0), Err(Error::BoundaryContamination { .. })));
        let mut bad = init.clone();
        bad.samples[0] *= 1.1;
        assert!(run(&cfg, &bad, &h, 1.0).is_err());
    }

    #[test]
    fn unstable_step_reported() {
        // A perturbation that amplifies exponentially trips the growth guard.
        let g = Grid::new(20.0, 256).unwrap();
        let init = FieldState::from_fn(0.0, g, |t| Complex64::new(1.0 + 0.1 * (-t * t).exp(), 0.0));
        let h = BackgroundHistory::constant(1.0, 15.0).unwrap();
        let grow = Perturbation::local("gain", false, |u: Complex64, _, _| Complex64::i() * 40.0 * u);
        let cfg = SimConfig::new(1.0, grow, SimConfig::max_dz(&g), 5);
        assert!(matches!(run(&cfg, &init, &h, 12.0), Err(Error::Unstable { .. })));
    }
}
