//! Transition layers at the outer edges of the shelf. Each layer travels at
//! the long-wave speed `V = ±u∞` and, in the similarity variable
//! `ξ = a·x/ζ^{1/3}` with `a = −2·(V/3)^{1/3}`, is an Airy integral:
//!
//! ```text
//! w(ζ, x) = q₁·Ai1(ξ)           θ(ζ, x) = φ₁t·(ζ^{1/3}/a)·Ai2(ξ)
//! ```
//!
//! Here x is measured from the edge, so w reaches the plateau value on the
//! core side and decays, oscillating, on the outer side.

use serde::{Deserialize, Serialize};

use crate::airy::{airy_ai_double_integral, airy_ai_integral};
use crate::asymptotics::ParameterTrajectory;
use crate::error::{require_finite, require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub side: Side,
    pub v: f64,
    /// Plateau value carried into the layer (q₁ or φ₁t of that side).
    pub amplitude: f64,
    pub scale: f64,
}

impl LayerProfile {
    pub fn new(side: Side, u_inf: f64, amplitude: f64) -> Result<Self> {
        require_positive("u_inf", u_inf)?;
        require_finite("amplitude", amplitude)?;
        let v = match side {
            Side::Left => -u_inf,
            Side::Right => u_inf,
        };
        Ok(Self { side, v, amplitude, scale: -2.0 * (v / 3.0).cbrt() })
    }

    pub fn similarity(&self, zeta: f64, x: f64) -> Result<f64> {
        require_positive("zeta", zeta)?;
        require_finite("x", x)?;
        Ok(self.scale * x / zeta.cbrt())
    }

    /// Offset from the edge at which the similarity variable equals `xi`.
    pub fn offset_for(&self, zeta: f64, xi: f64) -> Result<f64> {
        require_positive("zeta", zeta)?;
        Ok(xi * zeta.cbrt() / self.scale)
    }
}

/// First-order magnitude correction `w` across the layer.
pub fn shelf_magnitude_profile(layer: &LayerProfile, zeta: f64, x: f64) -> Result<f64> {
    Ok(layer.amplitude * airy_ai_integral(layer.similarity(zeta, x)?))
}

/// First-order phase correction `θ` across the layer, zero on the outer side.
pub fn shelf_phase_profile(layer: &LayerProfile, zeta: f64, x: f64) -> Result<f64> {
    let xi = layer.similarity(zeta, x)?;
    Ok(layer.amplitude * zeta.cbrt() / layer.scale * airy_ai_double_integral(xi))
}

/// Similarity coordinate where `Ai1` first reaches `level ∈ (−0.2, 1)`
/// coming from the plateau, found by bisection on its monotone branch.
pub fn level_crossing(level: f64) -> Result<f64> {
    if !(level > -0.2 && level < 1.0) {
        return Err(Error::InvalidParameter { name: "level", reason: format!("must lie in (-0.2, 1), got {level}") });
    }
    // Ai1 increases monotonically right of the first zero of Ai.
    let (mut lo, mut hi) = (-2.338_107_410_459_767, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if airy_ai_integral(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Width in x over which `w/q₁` rises from `lo` to `hi`.
pub fn transition_width(layer: &LayerProfile, zeta: f64, lo: f64, hi: f64) -> Result<f64> {
    let span = level_crossing(hi)? - level_crossing(lo)?;
    Ok((span * zeta.cbrt() / layer.scale).abs())
}

/// Comoving shelf edges `S_L = −∫₀^ζ(u∞ + A)ds`, `S_R = ∫₀^ζ(u∞ − A)ds` by
/// the trapezoid rule on the trajectory samples.
pub fn shelf_edges(traj: &ParameterTrajectory, zeta: f64) -> Result<(f64, f64)> {
    require_finite("zeta", zeta)?;
    let z_max = traj.z.last().copied().unwrap_or(0.0);
    if zeta < 0.0 || zeta > z_max * (1.0 + 1e-12) {
        return Err(Error::CoverageGap { requested: zeta, available: z_max });
    }
    let (mut left, mut right) = (0.0, 0.0);
    for k in 0..traj.len().saturating_sub(1) {
        let (z0, z1) = (traj.z[k], traj.z[k + 1]);
        if z0 >= zeta {
            break;
        }
        let (c0, c1) = (&traj.core[k], &traj.core[k + 1]);
        let end = z1.min(zeta);
        let w = (end - z0) / (z1 - z0);
        let lerp = |x: f64, y: f64| x + w * (y - x);
        let (u_end, a_end) = (lerp(c0.u_inf, c1.u_inf), lerp(c0.a, c1.a));
        let dz = end - z0;
        left -= 0.5 * dz * ((c0.u_inf + c0.a) + (u_end + a_end));
        right += 0.5 * dz * ((c0.u_inf - c0.a) + (u_end - a_end));
    }
    Ok((left, right))
}

/// `ω = (u∞²k² + k⁴/4)^{1/2}` of small waves on the background.
pub fn dispersion_omega(k: f64, u_inf: f64) -> Result<f64> {
    require_positive("u_inf", u_inf)?;
    require_finite("k", k)?;
    Ok((u_inf * u_inf * k * k + 0.25 * k.powi(4)).sqrt())
}

/// `ω/k`, tending to u∞ for long waves.
pub fn phase_speed(k: f64, u_inf: f64) -> Result<f64> {
    require_positive("u_inf", u_inf)?;
    require_finite("k", k)?;
    Ok((u_inf * u_inf + 0.25 * k * k).sqrt())
}

/// `dω/dk`.
pub fn group_speed(k: f64, u_inf: f64) -> Result<f64> {
    let omega = dispersion_omega(k, u_inf)?;
    if omega == 0.0 {
        return Ok(u_inf);
    }
    Ok((u_inf * u_inf * k + 0.5 * k.powi(3)) / omega)
}
