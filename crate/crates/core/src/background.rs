//! Evolution of the continuous-wave background, `du∞/dz = ε·Im F[u∞]`, and
//! a dense record of it usable at arbitrary z.

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::ode::rk4_step;
use crate::perturbation::Perturbation;

/// Four-point Gauss–Legendre nodes and weights on [0, 1].
const GL4: [(f64, f64); 4] = [
    (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
    (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
    (0.669_990_521_792_428_13, 0.326_072_577_431_273_07),
    (0.930_568_155_797_026_29, 0.173_927_422_568_726_93),
];

/// Background height u∞ sampled on a uniform z grid with its z-derivative,
/// interpolated by cubic Hermite segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundHistory {
    dz: f64,
    u_inf: Vec<f64>,
    slope: Vec<f64>,
    /// ∫₀^{z_k} u∞² ds at each sample.
    phase: Vec<f64>,
}

impl BackgroundHistory {
    /// u∞ held constant on `[0, z_max]`.
    pub fn constant(u_inf: f64, z_max: f64) -> Result<Self> {
        require_positive("u_inf", u_inf)?;
        let z_max = require_finite("z_max", z_max)?.max(0.0);
        Self::from_samples(z_max.max(f64::MIN_POSITIVE), vec![u_inf; 2], vec![0.0; 2])
    }

    /// Builds the record from samples at `z_k = k·dz`.
    pub fn from_samples(dz: f64, u_inf: Vec<f64>, slope: Vec<f64>) -> Result<Self> {
        require_positive("dz", dz)?;
        if u_inf.len() < 2 || slope.len() != u_inf.len() {
            return Err(Error::TooFew { what: "background samples", needed: 2, got: u_inf.len().min(slope.len()) });
        }
        let mut history = Self { dz, u_inf, slope, phase: Vec::new() };
        let mut phase = Vec::with_capacity(history.u_inf.len());
        phase.push(0.0);
        for k in 0..history.u_inf.len() - 1 {
            let seg: f64 = GL4
                .iter()
                .map(|&(x, w)| {
                    let u = history.hermite(k, x);
                    w * u * u
                })
                .sum();
            phase.push(phase[k] + dz * seg);
        }
        history.phase = phase;
        Ok(history)
    }

    /// Integrates `du∞/dz = ε·Im F[u∞]` by RK4 over `[0, z_max]`.
    pub fn evolve(f: &Perturbation, u_inf0: f64, epsilon: f64, z_max: f64, steps: usize) -> Result<Self> {
        require_positive("u_inf0", u_inf0)?;
        require_finite("epsilon", epsilon)?;
        require_finite("z_max", z_max)?;
        if epsilon == 0.0 || f.is_zero() || z_max <= 0.0 {
            return Self::constant(u_inf0, z_max);
        }
        let steps = steps.max(1);
        let dz = z_max / steps as f64;
        let mut rate = |_: f64, y: &[f64; 1]| -> Result<[f64; 1]> {
            if !(y[0] > 0.0) {
                return Err(Error::BackgroundCollapse { value: y[0], slow_z: f64::NAN });
            }
            Ok([epsilon * f.at_background(y[0])?.im])
        };
        let mut u = vec![u_inf0];
        let mut slope = vec![rate(0.0, &[u_inf0])?[0]];
        let mut y = [u_inf0];
        for k in 0..steps {
            let z = k as f64 * dz;
            y = rk4_step(&mut rate, z, &y, dz).map_err(|e| with_slow_z(e, epsilon * z))?;
            if !(y[0] > 0.0) {
                return Err(Error::BackgroundCollapse { value: y[0], slow_z: epsilon * (z + dz) });
            }
            u.push(y[0]);
            slope.push(rate(z + dz, &y)?[0]);
        }
        Self::from_samples(dz, u, slope)
    }

    pub fn z_max(&self) -> f64 {
        self.dz * (self.u_inf.len() - 1) as f64
    }

    fn locate(&self, z: f64) -> Result<(usize, f64)> {
        require_finite("z", z)?;
        let available = self.z_max();
        if z < 0.0 || z > available * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::CoverageGap { requested: z, available });
        }
        let pos = (z / self.dz).max(0.0);
        let k = (pos.floor() as usize).min(self.u_inf.len() - 2);
        Ok((k, (pos - k as f64).clamp(0.0, 1.0)))
    }

    fn hermite(&self, k: usize, x: f64) -> f64 {
        let (y0, y1) = (self.u_inf[k], self.u_inf[k + 1]);
        let (m0, m1) = (self.slope[k] * self.dz, self.slope[k + 1] * self.dz);
        let x2 = x * x;
        let x3 = x2 * x;
        (2.0 * x3 - 3.0 * x2 + 1.0) * y0 + (x3 - 2.0 * x2 + x) * m0 + (-2.0 * x3 + 3.0 * x2) * y1 + (x3 - x2) * m1
    }

    pub fn u_inf_at(&self, z: f64) -> Result<f64> {
        let (k, x) = self.locate(z)?;
        Ok(self.hermite(k, x))
    }

    /// `∫₀^z u∞(s)² ds`.
    pub fn phase_integral(&self, z: f64) -> Result<f64> {
        let (k, x) = self.locate(z)?;
        if x == 0.0 {
            return Ok(self.phase[k]);
        }
        let partial: f64 = GL4
            .iter()
            .map(|&(node, w)| {
                let u = self.hermite(k, node * x);
                w * u * u
            })
            .sum();
        Ok(self.phase[k] + partial * x * self.dz)
    }

    /// `∫₀^z u∞(s) ds`, the distance a layer moving at the local sound speed covers.
    pub fn travel(&self, z: f64) -> Result<f64> {
        let (k, x) = self.locate(z)?;
        let segment = |k: usize, x: f64| -> f64 { GL4.iter().map(|&(node, w)| w * self.hermite(k, node * x)).sum::<f64>() * x * self.dz };
        Ok((0..k).map(|j| segment(j, 1.0)).sum::<f64>() + if x > 0.0 { segment(k, x) } else { 0.0 })
    }
}

fn with_slow_z(e: Error, slow_z: f64) -> Error {
    match e {
        Error::BackgroundCollapse { value, .. } => Error::BackgroundCollapse { value, slow_z },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_history() {
        let h = BackgroundHistory::constant(1.0, 10.0).unwrap();
        assert_eq!(h.u_inf_at(3.3).unwrap(), 1.0);
        assert!((h.phase_integral(std::f64::consts::PI).unwrap() - std::f64::consts::PI).abs() < 1e-14);
        assert!((h.travel(7.5).unwrap() - 7.5).abs() < 1e-13);
        assert!(matches!(h.u_inf_at(10.5), Err(Error::CoverageGap { .. })));
        assert!(h.u_inf_at(-1.0).is_err());
    }

    #[test]
    fn linear_damping_background() {
        let eps = 0.1;
        let g = 0.5;
        let f = Perturbation::linear_damping(g).unwrap();
        let h = BackgroundHistory::evolve(&f, 1.0, eps, 10.0, 400).unwrap();
        for z in [0.0, 1.37, 5.0, 9.99, 10.0] {
            assert!((h.u_inf_at(z).unwrap() - (-g * eps * z).exp()).abs() < 1e-10, "z = {z}");
        }
        // ∫ e^{-2Γεs} ds = (1 − e^{-2Γεz})/(2Γε)
        let z = 6.3;
        let exact = (1.0 - (-2.0 * g * eps * z).exp()) / (2.0 * g * eps);
        assert!((h.phase_integral(z).unwrap() - exact).abs() < 1e-9);
        let travel = (1.0 - (-g * eps * z).exp()) / (g * eps);
        assert!((h.travel(z).unwrap() - travel).abs() < 1e-9);
    }

    #[test]
    fn two_photon_background() {
        let f = Perturbation::two_photon(1.0).unwrap();
        let h = BackgroundHistory::evolve(&f, 1.0, 0.5, 2.0, 2000).unwrap();
        assert!((h.u_inf_at(2.0).unwrap() - 3f64.powf(-0.5)).abs() < 1e-10);
    }

    #[test]
    fn zero_forcing_is_constant() {
        let f = Perturbation::dispersive_damping(1.0).unwrap();
        let h = BackgroundHistory::evolve(&f, 1.3, 0.05, 30.0, 100).unwrap();
        assert_eq!(h.u_inf_at(17.0).unwrap(), 1.3);
    }

    #[test]
    fn collapse_reported() {
        // An outward-pointing forcing that drives u∞ through zero.
        let f = Perturbation::local("drain", true, |u: num_complex::Complex64, _, _| num_complex::Complex64::new(0.0, -1.0) * u / u.norm().max(1e-300));
        let err = BackgroundHistory::evolve(&f, 1.0, 1.0, 3.0, 300).unwrap_err();
        assert!(matches!(err, Error::BackgroundCollapse { .. }), "{err:?}");
    }
}
