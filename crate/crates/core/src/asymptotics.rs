//! First-order multiple-scales theory for a dark soliton under a small
//! forcing: background evolution, the cascade of core-parameter and shelf
//! rates, the explicit black-soliton correction, and the linearised
//! operator about the soliton with its homogeneous solutions.
//!
//! Shelf amplitudes use the positive-magnitude convention: `q₁±` is the
//! first-order change of `|u|` on the plateau to the right (+) or left (−)
//! of the core. The signed black forms flip sign on the left, see
//! [`signed_from_positive_left`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::field::Grid;
use crate::ode::rk4_step;
use crate::perturbation::{Kernel, Perturbation};
use crate::quadrature::{integrate_core_window, trapezoid};
use crate::soliton::{profile_jet, CoreParams};
use crate::stencil::{d1_at, d2_at};

/// Smallest `u∞ − A` for which the shelf amplitudes are evaluated.
pub const SHALLOW_LIMIT: f64 = 1e-9;
/// RK4 steps per unit of the slow variable Z = εz.
pub const STEPS_PER_SLOW_UNIT: f64 = 2000.0;

/// Background samples on the slow variable Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSamples {
    pub slow_z: Vec<f64>,
    pub u_inf: Vec<f64>,
    /// Total phase change across the line; a phase-symmetric forcing leaves it unchanged.
    pub delta_phi_inf: Vec<f64>,
}

/// Integrates `du∞/dZ = Im F[u∞]` over `[0, slow_span]` with fixed-step RK4.
pub fn evolve_background(f: &Perturbation, u_inf0: f64, delta_phi_inf: f64, slow_span: f64, steps: usize) -> Result<BackgroundSamples> {
    require_positive("u_inf0", u_inf0)?;
    require_finite("delta_phi_inf", delta_phi_inf)?;
    require_finite("slow_span", slow_span)?;
    if steps == 0 {
        return Err(Error::TooFew { what: "background steps", needed: 1, got: 0 });
    }
    let h = slow_span / steps as f64;
    let mut rate = |_: f64, y: &[f64; 1]| -> Result<[f64; 1]> { Ok([f.at_background(y[0])?.im]) };
    let mut slow_z = vec![0.0];
    let mut u_inf = vec![u_inf0];
    let mut y = [u_inf0];
    for k in 0..steps {
        y = rk4_step(&mut rate, k as f64 * h, &y, h)?;
        let z = (k + 1) as f64 * h;
        if !(y[0] > 0.0) {
            return Err(Error::BackgroundCollapse { value: y[0], slow_z: z });
        }
        slow_z.push(z);
        u_inf.push(y[0]);
    }
    let delta_phi_inf = vec![delta_phi_inf; slow_z.len()];
    Ok(BackgroundSamples { slow_z, u_inf, delta_phi_inf })
}

/// Z-derivatives of the core parameters together with the shelf they shed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShelfParams {
    pub q1_plus: f64,
    pub q1_minus: f64,
    pub phi1t_plus: f64,
    pub phi1t_minus: f64,
    /// Accumulated phase change across both shelves, already multiplied by ε.
    pub delta_phi1: f64,
    /// `d(ε·Δφ₁)/dZ`.
    pub delta_phi1_rate: f64,
    pub sigma0_rate: f64,
    /// `None` when first-order theory leaves the drift of the core undetermined.
    pub t0_rate: Option<f64>,
    pub a_rate: f64,
    pub b_rate: f64,
    pub u_inf_rate: f64,
    pub delta_phi0_rate: f64,
}

impl ShelfParams {
    /// `u∞·u∞_Z − (A·A_Z + B·B_Z)` for the given core.
    pub fn boxed_identity_residual(&self, params: &CoreParams) -> f64 {
        params.u_inf * self.u_inf_rate - (params.a * self.a_rate + params.b * self.b_rate)
    }
}

/// Converts a left-plateau amplitude from the positive-magnitude convention
/// to the signed black convention; the map is its own inverse.
pub fn signed_from_positive_left(q1_minus: f64) -> f64 {
    -q1_minus
}

struct CoreIntegrals {
    /// `Re ∫ F[u₀]·u₀_T* dT`
    momentum_source: f64,
    /// `Im ∫ (F[u∞]u∞ − F[u₀]u₀*) dT`
    energy_source: f64,
}

fn core_integrals(f: &Perturbation, params: &CoreParams, f_inf: Complex64) -> Result<CoreIntegrals> {
    let u_inf = params.u_inf;
    let background = (f_inf * u_inf).im;
    match f.kernel() {
        Kernel::None => Ok(CoreIntegrals { momentum_source: 0.0, energy_source: 0.0 }),
        Kernel::Grid(_) => sampled_core_integrals(f, params, background),
        _ => {
            let p = *params;
            let eval = |t: f64| -> (Complex64, [Complex64; 3]) {
                let jet = profile_jet(&p, t).expect("validated parameters");
                (f.point_eval(jet[0], jet[1], jet[2]).expect("local kernel"), jet)
            };
            let momentum_source = integrate_core_window(
                |t| {
                    let (fv, jet) = eval(t);
                    (fv * jet[1].conj()).re
                },
                p.b,
            )?;
            let energy_source = integrate_core_window(
                |t| {
                    let (fv, jet) = eval(t);
                    background - (fv * jet[0].conj()).im
                },
                p.b,
            )?;
            Ok(CoreIntegrals { momentum_source, energy_source })
        }
    }
}

/// Trapezoid sums over a fine sampling of the core window, for forcings
/// that only act on whole grids.
fn sampled_core_integrals(f: &Perturbation, params: &CoreParams, background: f64) -> Result<CoreIntegrals> {
    let grid = Grid::new(40.0 / params.b, 32_000)?;
    let jets: Vec<[Complex64; 3]> = grid.points().iter().map(|&t| profile_jet(params, t)).collect::<Result<_>>()?;
    let u: Vec<Complex64> = jets.iter().map(|j| j[0]).collect();
    let fv = f.grid_eval(&u, grid.spacing());
    let mom: Vec<f64> = fv.iter().zip(&jets).map(|(fj, j)| (fj * j[1].conj()).re).collect();
    let en: Vec<f64> = fv.iter().zip(&jets).map(|(fj, j)| background - (fj * j[0].conj()).im).collect();
    Ok(CoreIntegrals { momentum_source: trapezoid(&mom, grid.spacing()), energy_source: trapezoid(&en, grid.spacing()) })
}

/// Evaluates the rate cascade, top to bottom:
///
/// ```text
/// u∞_Z  = Im F[u∞]
/// A_Z   = Re∫F[u₀]u₀_T* dT / (2B)
/// B_Z   = (u∞·u∞_Z − A·A_Z) / B
/// Δφ₀_Z = 2(A·B_Z − B·A_Z) / u∞²
/// σ₀_Z  = (B_Z − Im∫(F[u∞]u∞ − F[u₀]u₀*)dT + Re F[u∞]) / u∞
/// q₁±   = (σ₀_Z ± ½Δφ₀_Z − Re F[u∞]/u∞) / (2(u∞ ∓ A))
/// φ₁t+  = −2q₁+,  φ₁t− = 2q₁−
/// ```
///
/// and `d(εΔφ₁)/dZ = (u∞ − A)φ₁t+ + (u∞ + A)φ₁t−`, which cancels `Δφ₀_Z`.
pub fn grey_parameter_rhs(f: &Perturbation, params: &CoreParams) -> Result<ShelfParams> {
    params.validate()?;
    let (u_inf, a, b) = (params.u_inf, params.a, params.b);
    if b <= 0.0 {
        return Err(Error::Degenerate(format!("B = {b} gives a constant wave")));
    }
    let gap = (u_inf - a).min(u_inf + a);
    if gap < SHALLOW_LIMIT {
        return Err(Error::ShallowSoliton { gap, limit: SHALLOW_LIMIT });
    }
    if f.is_zero() {
        let t0_rate = if params.is_black() { Some(0.0) } else { None };
        return Ok(ShelfParams { t0_rate, ..ShelfParams::default() });
    }
    let f_inf = f.at_background(u_inf)?;
    let integrals = core_integrals(f, params, f_inf)?;
    let u_inf_rate = f_inf.im;
    let a_rate = integrals.momentum_source / (2.0 * b);
    let b_rate = (u_inf * u_inf_rate - a * a_rate) / b;
    let delta_phi0_rate = 2.0 * (a * b_rate - b * a_rate) / (u_inf * u_inf);
    let sigma0_rate = (b_rate - integrals.energy_source + f_inf.re) / u_inf;
    let background_shift = f_inf.re / u_inf;
    let q1_plus = (sigma0_rate + 0.5 * delta_phi0_rate - background_shift) / (2.0 * (u_inf - a));
    let q1_minus = (sigma0_rate - 0.5 * delta_phi0_rate - background_shift) / (2.0 * (u_inf + a));
    let phi1t_plus = -2.0 * q1_plus;
    let phi1t_minus = 2.0 * q1_minus;
    let delta_phi1_rate = (u_inf - a) * phi1t_plus + (u_inf + a) * phi1t_minus;
    let t0_rate = match f.kernel() {
        Kernel::DispersiveDamping { .. } if params.is_black() => Some(0.0),
        _ => None,
    };
    Ok(ShelfParams {
        q1_plus,
        q1_minus,
        phi1t_plus,
        phi1t_minus,
        delta_phi1: 0.0,
        delta_phi1_rate,
        sigma0_rate,
        t0_rate,
        a_rate,
        b_rate,
        u_inf_rate,
        delta_phi0_rate,
    })
}

/// Core parameters and shelf rates sampled along the propagation distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterTrajectory {
    pub epsilon: f64,
    /// Lab propagation distance z.
    pub z: Vec<f64>,
    /// Slow variable Z = εz.
    pub slow_z: Vec<f64>,
    pub core: Vec<CoreParams>,
    pub shelf: Vec<ShelfParams>,
    /// `∫₀ᶻ A ds`, the core displacement in the lab frame.
    pub shift: Vec<f64>,
    /// Whether t₀ follows a determined rate; otherwise it is held at its initial value.
    pub t0_determined: bool,
}

impl ParameterTrajectory {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn last(&self) -> (&CoreParams, &ShelfParams) {
        (self.core.last().expect("non-empty"), self.shelf.last().expect("non-empty"))
    }

    /// Linear interpolation of the core parameters and displacement at `z`.
    pub fn at(&self, z: f64) -> Result<(CoreParams, f64)> {
        let z_max = *self.z.last().expect("non-empty");
        if !(0.0..=z_max * (1.0 + 1e-12)).contains(&z) {
            return Err(Error::CoverageGap { requested: z, available: z_max });
        }
        let k = self.z.partition_point(|&s| s <= z).saturating_sub(1).min(self.len().saturating_sub(2));
        if self.len() == 1 {
            return Ok((self.core[0], self.shift[0]));
        }
        let w = ((z - self.z[k]) / (self.z[k + 1] - self.z[k])).clamp(0.0, 1.0);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        let (c0, c1) = (&self.core[k], &self.core[k + 1]);
        let core = c0.with_background_and_velocity(lerp(c0.u_inf, c1.u_inf), lerp(c0.a, c1.a))?;
        let core = CoreParams { sigma0: lerp(c0.sigma0, c1.sigma0), t0: lerp(c0.t0, c1.t0), ..core };
        Ok((core, lerp(self.shift[k], self.shift[k + 1])))
    }
}

pub fn default_steps(epsilon: f64, z_max: f64) -> usize {
    ((STEPS_PER_SLOW_UNIT * epsilon.abs() * z_max).ceil() as usize).max(16)
}

/// RK4 in z of `d/dz = ε·(rates)` for `[u∞, A, σ₀, t₀, εΔφ₁]` with
/// `B = (u∞² − A²)^{1/2}`, plus the displacement `d/dz ∫A = A`.
pub fn evolve_core_parameters(f: &Perturbation, params0: &CoreParams, epsilon: f64, z_max: f64, steps: usize) -> Result<ParameterTrajectory> {
    params0.validate()?;
    require_finite("epsilon", epsilon)?;
    require_finite("z_max", z_max)?;
    if z_max < 0.0 {
        return Err(Error::InvalidParameter { name: "z_max", reason: format!("must be >= 0, got {z_max}") });
    }
    if steps == 0 {
        return Err(Error::TooFew { what: "trajectory steps", needed: 1, got: 0 });
    }
    let base = *params0;
    let first = grey_parameter_rhs(f, &base)?;
    let t0_determined = first.t0_rate.is_some();
    // Stages that leave (u∞, A, σ₀) unchanged reuse the previous cascade.
    let cache: Cell<Option<([u64; 3], ShelfParams)>> = Cell::new(None);
    let rates_at = |y: &[f64; 6]| -> Result<(CoreParams, ShelfParams)> {
        let core = base.with_background_and_velocity(y[0], y[1])?;
        let core = CoreParams { sigma0: y[2], t0: y[3], ..core };
        let key = [y[0].to_bits(), y[1].to_bits(), if f.phase_symmetric() { 0 } else { y[2].to_bits() }];
        if let Some((k, s)) = cache.get() {
            if k == key {
                return Ok((core, s));
            }
        }
        let s = grey_parameter_rhs(f, &core)?;
        cache.set(Some((key, s)));
        Ok((core, s))
    };
    let mut rhs = |_: f64, y: &[f64; 6]| -> Result<[f64; 6]> {
        let (core, s) = rates_at(y)?;
        Ok([
            epsilon * s.u_inf_rate,
            epsilon * s.a_rate,
            epsilon * s.sigma0_rate,
            epsilon * s.t0_rate.unwrap_or(0.0),
            epsilon * s.delta_phi1_rate,
            core.a,
        ])
    };
    let h = z_max / steps as f64;
    let mut y = [base.u_inf, base.a, base.sigma0, base.t0, 0.0, 0.0];
    let mut traj = ParameterTrajectory {
        epsilon,
        z: Vec::with_capacity(steps + 1),
        slow_z: Vec::with_capacity(steps + 1),
        core: Vec::with_capacity(steps + 1),
        shelf: Vec::with_capacity(steps + 1),
        shift: Vec::with_capacity(steps + 1),
        t0_determined,
    };
    let record = |traj: &mut ParameterTrajectory, z: f64, y: &[f64; 6]| -> Result<()> {
        let (core, s) = rates_at(y)?;
        traj.z.push(z);
        traj.slow_z.push(epsilon * z);
        traj.core.push(core);
        traj.shelf.push(ShelfParams { delta_phi1: y[4], ..s });
        traj.shift.push(y[5]);
        Ok(())
    };
    record(&mut traj, 0.0, &y)?;
    for k in 0..steps {
        let z = k as f64 * h;
        y = rk4_step(&mut rhs, z, &y, h)?;
        if !(y[0] > 0.0) {
            return Err(Error::BackgroundCollapse { value: y[0], slow_z: epsilon * (z + h) });
        }
        record(&mut traj, (k + 1) as f64 * h, &y)?;
    }
    Ok(traj)
}

/// Largest violation of `d/dZ(Δφ₀ + εΔφ₁) = 0`, taken over the rates stored
/// at each sample and over central differences of the integrated totals.
pub fn phase_conservation_check(traj: &ParameterTrajectory) -> Result<f64> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::TooFew { what: "trajectory samples", needed: 3, got: n });
    }
    let mut worst = traj.shelf.iter().map(|s| (s.delta_phi0_rate + s.delta_phi1_rate).abs()).fold(0.0, f64::max);
    let total: Vec<f64> = traj.core.iter().zip(&traj.shelf).map(|(c, s)| c.delta_phi0 + s.delta_phi1).collect();
    for k in 1..n - 1 {
        let dz = traj.slow_z[k + 1] - traj.slow_z[k - 1];
        if dz > 0.0 {
            worst = worst.max(((total[k + 1] - total[k - 1]) / dz).abs());
        }
    }
    Ok(worst)
}

/// Explicit first-order correction of a black soliton under `F = iγu_tt`,
/// in the signed convention:
///
/// ```text
/// q₁(t) = (σ₀_Z / 4u∞)·[sinh(2x) + 2x]·sech²(x),   x = u∞(t − t₀)
/// φ₁(t) = (4/3)γ·ln cosh(x)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackFirstOrder {
    pub gamma: f64,
    pub u_inf: f64,
    pub t0: f64,
    pub sigma0_rate: f64,
}

/// Limits of the black correction as `t → ±∞`, signed convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackAsymptotes {
    pub q1_plus: f64,
    pub q1_minus: f64,
    pub phi1t_plus: f64,
    pub phi1t_minus: f64,
}

pub fn black_first_order(gamma: f64, u_inf: f64, t0: f64) -> Result<BlackFirstOrder> {
    require_positive("gamma", gamma)?;
    require_positive("u_inf", u_inf)?;
    require_finite("t0", t0)?;
    Ok(BlackFirstOrder { gamma, u_inf, t0, sigma0_rate: -4.0 / 3.0 * gamma * u_inf * u_inf })
}

impl BlackFirstOrder {
    pub fn q1(&self, t: f64) -> f64 {
        let x = self.u_inf * (t - self.t0);
        let sech = 1.0 / x.cosh();
        if !sech.is_finite() || sech == 0.0 {
            return x.signum() * self.sigma0_rate / (2.0 * self.u_inf);
        }
        // sinh(2x)·sech²(x) = 2·tanh(x) keeps large |x| finite.
        self.sigma0_rate / (4.0 * self.u_inf) * (2.0 * x.tanh() + 2.0 * x * sech * sech)
    }

    pub fn phi1(&self, t: f64) -> f64 {
        let x = (self.u_inf * (t - self.t0)).abs();
        // ln cosh x = x + ln(1 + e^{−2x}) − ln 2
        4.0 / 3.0 * self.gamma * (x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2)
    }

    pub fn phi1_t(&self, t: f64) -> f64 {
        4.0 / 3.0 * self.gamma * self.u_inf * (self.u_inf * (t - self.t0)).tanh()
    }

    pub fn asymptotes(&self) -> BlackAsymptotes {
        let q = self.sigma0_rate / (2.0 * self.u_inf);
        let p = 4.0 / 3.0 * self.gamma * self.u_inf;
        BlackAsymptotes { q1_plus: q, q1_minus: -q, phi1t_plus: p, phi1t_minus: -p }
    }
}

/// Reading of the diagonal potentials of the linearised operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialVariant {
    /// `3A² + B²tanh(BT) − u∞²` and `A² + 3B²tanh(BT) − u∞²`.
    Linear,
    /// `3A² + B²tanh²(BT) − u∞²` and `A² + 3B²tanh²(BT) − u∞²`.
    Squared,
}

/// Applies
///
/// ```text
/// L = [ −½∂² + (3A² + B²τ − u∞²)     A∂ + 2ABτ                 ]
///     [ −A∂ + 2ABτ                    −½∂² + (A² + 3B²τ − u∞²)  ]
/// ```
///
/// to `(Re u₁, Im u₁)` sampled on `grid` in the comoving coordinate, with
/// `τ = tanh(BT)` or `tanh²(BT)` per `variant` in the diagonal.
pub fn linearized_apply(params: &CoreParams, u1: (&[f64], &[f64]), grid: &Grid, variant: PotentialVariant) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    let (re, im) = u1;
    if re.len() != grid.len() || im.len() != grid.len() {
        return Err(Error::InvalidParameter { name: "u1", reason: format!("expected {} samples per component", grid.len()) });
    }
    let (a, b, u2) = (params.a, params.b, params.u_inf * params.u_inf);
    let h = grid.spacing();
    let mut out_re = Vec::with_capacity(grid.len());
    let mut out_im = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let th = (b * grid.t(j)).tanh();
        let diag = match variant {
            PotentialVariant::Linear => th,
            PotentialVariant::Squared => th * th,
        };
        let off = 2.0 * a * b * th;
        let (v1, v2) = (re[j], im[j]);
        out_re.push(-0.5 * d2_at(re, j, h) + (3.0 * a * a + b * b * diag - u2) * v1 + a * d1_at(im, j, h) + off * v2);
        out_im.push(-a * d1_at(re, j, h) + off * v1 - 0.5 * d2_at(im, j, h) + (a * a + 3.0 * b * b * diag - u2) * v2);
    }
    Ok((out_re, out_im))
}

/// `U₁₁ … U₁₄` sampled on `grid`.
pub fn homogeneous_solutions(params: &CoreParams, grid: &Grid) -> Result<[(Vec<f64>, Vec<f64>); 4]> {
    params.validate()?;
    let (a, b) = (params.a, params.b);
    if b <= 0.0 {
        return Err(Error::Degenerate(format!("B = {b} gives a constant wave")));
    }
    let split = a * a - b * b;
    if split.abs() < 1e-9 {
        return Err(Error::Degenerate(format!("|A^2 - B^2| = {:e} makes U14 singular", split.abs())));
    }
    let t = grid.points();
    let each = |f: &dyn Fn(f64) -> (f64, f64)| -> (Vec<f64>, Vec<f64>) { t.iter().map(|&s| f(b * s)).unzip() };
    let u11 = each(&|x| (0.0, 1.0 / x.cosh().powi(2)));
    let u12 = each(&|x| (b * x.tanh(), -a));
    let u13 = each(&|x| {
        let sech2 = 1.0 / x.cosh().powi(2);
        (b * (x * x.tanh() - 1.0), a * (-x + 1.5 * x * sech2 + 1.5 * x.tanh()))
    });
    let u14 = each(&|x| {
        let sech2 = 1.0 / x.cosh().powi(2);
        (-4.0 * a * b / split * x.cosh().powi(2), 3.0 * x * sech2 + 4.0 * x.tanh() + x.tanh() * (2.0 * x).cosh())
    });
    Ok([u11, u12, u13, u14])
}

/// Residuals `max|L·U₁ᵢ| / max|U₁ᵢ|` over `|T| ≤ window`, with the operator
/// applied by finite differences of spacing `spacing`.
pub fn homogeneous_residuals(params: &CoreParams, variant: PotentialVariant, window: f64, spacing: f64) -> Result<[f64; 4]> {
    require_positive("window", window)?;
    require_positive("spacing", spacing)?;
    // Pad so the one-sided end stencils fall outside the window.
    let pad = 4.0 * spacing;
    let intervals = (2.0 * (window + pad) / spacing).round() as usize;
    let grid = Grid::new(window + pad, intervals)?;
    let sols = homogeneous_solutions(params, &grid)?;
    let inside: Vec<usize> = (0..grid.len()).filter(|&j| grid.t(j).abs() <= window).collect();
    let mut out = [0.0; 4];
    for (slot, (re, im)) in out.iter_mut().zip(sols.iter()) {
        let (lr, li) = linearized_apply(params, (re, im), &grid, variant)?;
        let scale = inside.iter().map(|&j| re[j].hypot(im[j])).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let worst = inside.iter().map(|&j| lr[j].hypot(li[j])).fold(0.0, f64::max);
        *slot = worst / scale;
    }
    Ok(out)
}
