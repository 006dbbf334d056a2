//! Exact dark and grey soliton profiles of the unperturbed equation in the
//! background-phase-removed frame, and their conserved integrals.
//!
//! Grey profiles (A ≠ 0) are written `(A + iB·tanh(BT))·e^{iσ₀}`, which is
//! `q₀·e^{iφ₀}` with `q₀ = (A² + B²tanh²(BT))^{1/2} > 0`. The black profile
//! (A = 0) uses the signed form `B·tanh(BT)·e^{iσ₀}`, whose magnitude
//! function changes sign through the core.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{require_finite, require_positive, Error, Result};
use crate::quadrature::integrate_core_window;

const INVARIANT_TOL: f64 = 1e-12;

/// Slowly varying parameters of a single dark soliton on its background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreParams {
    pub u_inf: f64,
    pub a: f64,
    pub b: f64,
    pub t0: f64,
    pub sigma0: f64,
    pub delta_phi0: f64,
    pub delta_phi_inf: f64,
}

/// `A = u∞ cos(Δφ₀/2)`, `B = u∞ sin(Δφ₀/2)`.
pub fn ab_from_background(u_inf: f64, delta_phi0: f64) -> Result<(f64, f64)> {
    require_positive("u_inf", u_inf)?;
    require_finite("delta_phi0", delta_phi0)?;
    if !(delta_phi0 > 0.0 && delta_phi0 <= PI) {
        return Err(Error::InvalidParameter {
            name: "delta_phi0",
            reason: format!("must lie in (0, pi], got {delta_phi0}"),
        });
    }
    if delta_phi0 == PI {
        return Ok((0.0, u_inf));
    }
    let half = 0.5 * delta_phi0;
    Ok((u_inf * half.cos(), u_inf * half.sin()))
}

/// Phase change across a core with the given A and B.
pub fn phase_jump(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        PI
    } else {
        2.0 * b.atan2(a)
    }
}

impl CoreParams {
    /// Soliton on a background of height `u_inf` with core phase jump
    /// `delta_phi0`. The total phase change across the line starts equal to
    /// the core jump.
    pub fn new(u_inf: f64, delta_phi0: f64, t0: f64, sigma0: f64) -> Result<Self> {
        let (a, b) = ab_from_background(u_inf, delta_phi0)?;
        require_finite("t0", t0)?;
        require_finite("sigma0", sigma0)?;
        Ok(Self { u_inf, a, b, t0, sigma0, delta_phi0, delta_phi_inf: delta_phi0 })
    }

    pub fn black(u_inf: f64) -> Result<Self> {
        Self::new(u_inf, PI, 0.0, 0.0)
    }

    /// Rebuilds the parameters from `(u∞, A)` with `B = (u∞² − A²)^{1/2}`,
    /// keeping the remaining fields.
    pub fn with_background_and_velocity(&self, u_inf: f64, a: f64) -> Result<Self> {
        require_positive("u_inf", u_inf)?;
        require_finite("A", a)?;
        if a.abs() > u_inf {
            return Err(Error::InvalidParameter { name: "A", reason: format!("|A| = {} exceeds u_inf = {u_inf}", a.abs()) });
        }
        let b = (u_inf * u_inf - a * a).max(0.0).sqrt();
        Ok(Self { u_inf, a, b, delta_phi0: phase_jump(a, b), ..*self })
    }

    pub fn is_black(&self) -> bool {
        self.a == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("u_inf", self.u_inf)?;
        for (name, v) in [("A", self.a), ("B", self.b), ("t0", self.t0), ("sigma0", self.sigma0), ("delta_phi0", self.delta_phi0), ("delta_phi_inf", self.delta_phi_inf)] {
            require_finite(name, v)?;
        }
        if self.b < 0.0 {
            return Err(Error::InvalidParameter { name: "B", reason: format!("must be >= 0, got {}", self.b) });
        }
        if self.a.abs() > self.u_inf * (1.0 + INVARIANT_TOL) {
            return Err(Error::InvalidParameter { name: "A", reason: format!("|A| = {} exceeds u_inf = {}", self.a.abs(), self.u_inf) });
        }
        let u2 = self.u_inf * self.u_inf;
        let mismatch = (self.a * self.a + self.b * self.b - u2).abs() / u2;
        if mismatch > INVARIANT_TOL {
            return Err(Error::InvalidParameter { name: "B", reason: format!("A^2 + B^2 differs from u_inf^2 by {mismatch:e} (relative)") });
        }
        let expected = phase_jump(self.a, self.b);
        if (expected - self.delta_phi0).abs() > 1e-10 {
            return Err(Error::InvalidParameter { name: "delta_phi0", reason: format!("{} is inconsistent with 2 atan2(B, A) = {expected}", self.delta_phi0) });
        }
        Ok(())
    }
}

fn require_width(params: &CoreParams) -> Result<()> {
    if params.b <= 0.0 {
        return Err(Error::Degenerate(format!("B = {} gives a constant wave", params.b)));
    }
    Ok(())
}

/// Soliton field at comoving coordinate `T`.
pub fn grey_profile(params: &CoreParams, t: f64) -> Result<Complex64> {
    Ok(profile_jet(params, t)?[0])
}

/// `[u₀, u₀_T, u₀_TT]` at comoving coordinate `T`.
pub fn profile_jet(params: &CoreParams, t: f64) -> Result<[Complex64; 3]> {
    require_finite("T", t)?;
    require_width(params)?;
    let b = params.b;
    let th = (b * t).tanh();
    let sech2 = 1.0 - th * th;
    let rot = Complex64::from_polar(1.0, params.sigma0);
    let jet = if params.is_black() {
        [Complex64::new(b * th, 0.0), Complex64::new(b * b * sech2, 0.0), Complex64::new(-2.0 * b * b * b * sech2 * th, 0.0)]
    } else {
        [Complex64::new(params.a, b * th), Complex64::new(0.0, b * b * sech2), Complex64::new(0.0, -2.0 * b * b * b * sech2 * th)]
    };
    Ok(jet.map(|v| v * rot))
}

/// Magnitude and phase functions `(q₀, φ₀)`. For the black soliton `q₀` is
/// signed and `φ₀ = σ₀`.
pub fn magnitude_phase(params: &CoreParams, t: f64) -> Result<(f64, f64)> {
    require_finite("T", t)?;
    require_width(params)?;
    let th = (params.b * t).tanh();
    if params.is_black() {
        Ok((params.b * th, params.sigma0))
    } else {
        let q0 = (params.a * params.a + params.b * params.b * th * th).sqrt();
        Ok((q0, (params.b * th / params.a).atan() + params.sigma0))
    }
}

/// Values of the four integrals
///
/// ```text
/// H = ∫ ½|u_t|² + ½(u∞² − |u|²)²    E = ∫ (u∞² − |u|²)
/// I = Im ∫ u·u_t*                   R = ∫ t·(u∞² − |u|²)
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub h: f64,
    pub e: f64,
    pub i: f64,
    pub r: f64,
}

/// Conserved integrals of the exact soliton, by quadrature over the core
/// window. The closed forms are `E₀ = 2B`, `I₀ = −2AB`, `R₀ = 2B·t₀` and
/// `H₀ = (4/3)B³`.
pub fn soliton_invariants(params: &CoreParams) -> Result<ConservedQuantities> {
    params.validate()?;
    require_width(params)?;
    let p = *params;
    let u2 = p.u_inf * p.u_inf;
    let jet = |t: f64| profile_jet(&p, t).expect("validated parameters");
    let deficit = |t: f64| u2 - jet(t)[0].norm_sqr();
    let h = integrate_core_window(
        |t| {
            let [_, ut, _] = jet(t);
            let d = deficit(t);
            0.5 * ut.norm_sqr() + 0.5 * d * d
        },
        p.b,
    )?;
    let e = integrate_core_window(deficit, p.b)?;
    let i = integrate_core_window(
        |t| {
            let [u, ut, _] = jet(t);
            (u * ut.conj()).im
        },
        p.b,
    )?;
    // The window is centred on the core, so integrate in T and restore t0.
    let first_moment = integrate_core_window(|t| t * deficit(t), p.b)?;
    Ok(ConservedQuantities { h, e, i, r: first_moment + p.t0 * e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grey(dphi: f64) -> CoreParams {
        CoreParams::new(1.0, dphi, 0.0, 0.0).unwrap()
    }

    #[test]
    fn ab_examples() {
        assert_eq!(ab_from_background(1.0, PI).unwrap(), (0.0, 1.0));
        let (a, b) = ab_from_background(1.0, 4.0 * PI / 5.0).unwrap();
        assert_relative_eq!(a, 0.309017, epsilon = 1e-6);
        assert_relative_eq!(b, 0.951057, epsilon = 1e-6);
        let (a, b) = ab_from_background(2.0, PI / 2.0).unwrap();
        assert_relative_eq!(a, 1.414214, epsilon = 1e-6);
        assert_relative_eq!(b, 1.414214, epsilon = 1e-6);
        assert_relative_eq!(a * a + b * b, 4.0, max_relative = 1e-14);
    }

    #[test]
    fn ab_rejects_out_of_range_jump() {
        for bad in [0.0, -0.1, PI + 1e-9, f64::NAN] {
            assert!(ab_from_background(1.0, bad).is_err());
        }
        assert!(ab_from_background(0.0, 1.0).is_err());
    }

    #[test]
    fn black_profile_values() {
        let p = CoreParams::black(1.0).unwrap();
        assert_eq!(grey_profile(&p, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        let far = grey_profile(&p, 40.0).unwrap();
        assert!((far.norm() - 1.0).abs() < 1e-15);
        assert!(far.arg().abs() < 1e-15);
        assert!((magnitude_phase(&p, 40.0).unwrap().0 - 1.0).abs() < 1e-15);
        assert!((magnitude_phase(&p, -40.0).unwrap().0 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn grey_profile_minimum() {
        let p = grey(4.0 * PI / 5.0);
        assert_relative_eq!(grey_profile(&p, 0.0).unwrap().norm(), 0.309017, epsilon = 1e-6);
        let (q0, phi0) = magnitude_phase(&p, 0.7).unwrap();
        let u = grey_profile(&p, 0.7).unwrap();
        assert_relative_eq!(u.norm(), q0, epsilon = 1e-15);
        assert_relative_eq!(u.arg(), phi0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_and_non_finite_rejected() {
        let mut p = CoreParams::black(1.0).unwrap();
        assert!(grey_profile(&p, f64::NAN).is_err());
        p.b = 0.0;
        p.a = 1.0;
        assert!(matches!(grey_profile(&p, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = CoreParams::new(1.3, 2.0, 0.0, 0.4).unwrap();
        let h = 1e-4;
        for t in [-2.0, -0.3, 0.0, 0.8, 3.0] {
            let f = |s: f64| grey_profile(&p, s).unwrap();
            let [_, ut, utt] = profile_jet(&p, t).unwrap();
            let d1 = (f(t + h) - f(t - h)) / (2.0 * h);
            let d2 = (f(t + h) - f(t) * 2.0 + f(t - h)) / (h * h);
            assert!((d1 - ut).norm() < 1e-7);
            assert!((d2 - utt).norm() < 1e-5);
        }
    }

    #[test]
    fn invariants_match_closed_forms() {
        let black = soliton_invariants(&CoreParams::black(1.0).unwrap()).unwrap();
        assert_relative_eq!(black.e, 2.0, max_relative = 1e-10);
        assert!(black.i.abs() < 1e-12);
        assert_relative_eq!(black.h, 4.0 / 3.0, max_relative = 1e-10);
        let p = grey(4.0 * PI / 5.0);
        let g = soliton_invariants(&p).unwrap();
        assert_relative_eq!(g.i, -0.587785, epsilon = 1e-6);
        assert_relative_eq!(g.i, -2.0 * p.a * p.b, max_relative = 1e-10);
        assert_relative_eq!(g.e, 2.0 * p.b, max_relative = 1e-10);
        let shifted = CoreParams { t0: 2.5, ..p };
        assert_relative_eq!(soliton_invariants(&shifted).unwrap().r, 5.0 * p.b, max_relative = 1e-10);
    }

    #[test]
    fn validate_detects_broken_invariant() {
        let mut p = grey(2.0);
        assert!(p.validate().is_ok());
        p.b *= 1.0 + 1e-9;
        assert!(p.validate().is_err());
    }
}
