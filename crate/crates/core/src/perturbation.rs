//! Forcing functionals `F[u]` for the perturbed equation.
//!
//! The small parameter ε is never stored here, so one perturbation serves
//! every ε.

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{require_positive, Error, Result};
use crate::stencil::{first_derivative, second_derivative};

pub type LocalFn = dyn Fn(Complex64, Complex64, Complex64) -> Complex64 + Send + Sync;
pub type GridFn = dyn Fn(&[Complex64], f64) -> Vec<Complex64> + Send + Sync;

#[derive(Clone)]
pub enum Kernel {
    None,
    /// `iγ·u_tt`
    DispersiveDamping { gamma: f64 },
    /// `−iΓ·u`
    LinearDamping { gamma: f64 },
    /// `−iγ₃·|u|²u`
    TwoPhoton { gamma3: f64 },
    /// Any map of `(u, u_t, u_tt)` at a point.
    Local(Arc<LocalFn>),
    /// A map of the whole sampled field; no pointwise form.
    Grid(Arc<GridFn>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::None => write!(f, "None"),
            Kernel::DispersiveDamping { gamma } => write!(f, "DispersiveDamping {{ gamma: {gamma} }}"),
            Kernel::LinearDamping { gamma } => write!(f, "LinearDamping {{ gamma: {gamma} }}"),
            Kernel::TwoPhoton { gamma3 } => write!(f, "TwoPhoton {{ gamma3: {gamma3} }}"),
            Kernel::Local(_) => write!(f, "Local(..)"),
            Kernel::Grid(_) => write!(f, "Grid(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    label: String,
    phase_symmetric: bool,
    kernel: Kernel,
}

impl Perturbation {
    pub fn none() -> Self {
        Self { label: "none".into(), phase_symmetric: true, kernel: Kernel::None }
    }

    pub fn dispersive_damping(gamma: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        Ok(Self { label: "dispersive_damping".into(), phase_symmetric: true, kernel: Kernel::DispersiveDamping { gamma } })
    }

    pub fn linear_damping(gamma: f64) -> Result<Self> {
        require_positive("gamma", gamma)?;
        Ok(Self { label: "linear_damping".into(), phase_symmetric: true, kernel: Kernel::LinearDamping { gamma } })
    }

    pub fn two_photon(gamma3: f64) -> Result<Self> {
        require_positive("gamma3", gamma3)?;
        Ok(Self { label: "two_photon".into(), phase_symmetric: true, kernel: Kernel::TwoPhoton { gamma3 } })
    }

    /// User-defined perturbation given pointwise in `(u, u_t, u_tt)`.
    pub fn local<F>(label: impl Into<String>, phase_symmetric: bool, f: F) -> Self
    where
        F: Fn(Complex64, Complex64, Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self { label: label.into(), phase_symmetric, kernel: Kernel::Local(Arc::new(f)) }
    }

    /// User-defined perturbation acting on a whole sampled field.
    pub fn on_grid<F>(label: impl Into<String>, phase_symmetric: bool, f: F) -> Self
    where
        F: Fn(&[Complex64], f64) -> Vec<Complex64> + Send + Sync + 'static,
    {
        Self { label: label.into(), phase_symmetric, kernel: Kernel::Grid(Arc::new(f)) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Claimed invariance `F[u·e^{iθ}] = F[u]·e^{iθ}`; see [`check_phase_symmetry`].
    pub fn phase_symmetric(&self) -> bool {
        self.phase_symmetric
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kernel, Kernel::None)
    }

    pub fn is_local(&self) -> bool {
        !matches!(self.kernel, Kernel::Grid(_))
    }

    pub fn uses_derivatives(&self) -> bool {
        matches!(self.kernel, Kernel::DispersiveDamping { .. } | Kernel::Local(_) | Kernel::Grid(_))
    }

    pub fn point_eval(&self, u: Complex64, u_t: Complex64, u_tt: Complex64) -> Result<Complex64> {
        Ok(match &self.kernel {
            Kernel::None => Complex64::new(0.0, 0.0),
            Kernel::DispersiveDamping { gamma } => Complex64::i() * *gamma * u_tt,
            Kernel::LinearDamping { gamma } => -Complex64::i() * *gamma * u,
            Kernel::TwoPhoton { gamma3 } => -Complex64::i() * *gamma3 * u.norm_sqr() * u,
            Kernel::Local(f) => f(u, u_t, u_tt),
            Kernel::Grid(_) => return Err(Error::NonLocal(self.label.clone())),
        })
    }

    /// `F` on a constant wave of height `u_inf`.
    pub fn at_background(&self, u_inf: f64) -> Result<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        match &self.kernel {
            Kernel::Grid(f) => {
                let samples = vec![Complex64::new(u_inf, 0.0); 16];
                Ok(f(&samples, 1.0)[8])
            }
            _ => self.point_eval(Complex64::new(u_inf, 0.0), zero, zero),
        }
    }

    /// `F` on uniformly spaced samples. Derivatives use fourth-order central
    /// differences, one-sided at the two ends of the line.
    pub fn grid_eval(&self, samples: &[Complex64], spacing: f64) -> Vec<Complex64> {
        match &self.kernel {
            Kernel::None => vec![Complex64::new(0.0, 0.0); samples.len()],
            Kernel::DispersiveDamping { gamma } => {
                second_derivative(samples, spacing).into_iter().map(|d| Complex64::i() * *gamma * d).collect()
            }
            Kernel::LinearDamping { gamma } => samples.iter().map(|&u| -Complex64::i() * *gamma * u).collect(),
            Kernel::TwoPhoton { gamma3 } => samples.iter().map(|&u| -Complex64::i() * *gamma3 * u.norm_sqr() * u).collect(),
            Kernel::Local(f) => {
                let d1 = first_derivative(samples, spacing);
                let d2 = second_derivative(samples, spacing);
                samples.iter().zip(d1).zip(d2).map(|((&u, ut), utt)| f(u, ut, utt)).collect()
            }
            Kernel::Grid(f) => f(samples, spacing),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    pub max_deviation: f64,
}

pub const SYMMETRY_PHASES: [f64; 3] = [0.3, 1.1, 2.7];
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Largest `|F[u·e^{iθ}] − F[u]·e^{iθ}|` over the fields and the sample
/// phases θ ∈ {0.3, 1.1, 2.7}, plus a π/2 rotation.
pub fn check_phase_symmetry(f: &Perturbation, fields: &[Vec<Complex64>], spacing: f64) -> Result<SymmetryCheck> {
    if fields.is_empty() {
        return Err(Error::TooFew { what: "test fields", needed: 1, got: 0 });
    }
    let mut worst: f64 = 0.0;
    for field in fields {
        let base = f.grid_eval(field, spacing);
        for theta in SYMMETRY_PHASES.iter().copied().chain([std::f64::consts::FRAC_PI_2]) {
            let rot = Complex64::from_polar(1.0, theta);
            let rotated: Vec<Complex64> = field.iter().map(|&u| u * rot).collect();
            let image = f.grid_eval(&rotated, spacing);
            for (a, b) in image.iter().zip(&base) {
                worst = worst.max((a - b * rot).norm());
            }
        }
    }
    Ok(SymmetryCheck { symmetric: worst < SYMMETRY_TOL, max_deviation: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::{profile_jet, CoreParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn linspace(n: usize, h: f64) -> Vec<f64> {
        (0..n).map(|j| -0.5 * (n - 1) as f64 * h + j as f64 * h).collect()
    }

    #[test]
    fn strengths_must_be_positive() {
        assert!(Perturbation::dispersive_damping(0.0).is_err());
        assert!(Perturbation::linear_damping(-1.0).is_err());
        assert!(Perturbation::two_photon(f64::NAN).is_err());
    }

    #[test]
    fn builtin_values() {
        let zero = c(0.0, 0.0);
        assert_eq!(Perturbation::linear_damping(1.0).unwrap().point_eval(c(1.0, 0.0), zero, zero).unwrap(), c(0.0, -1.0));
        assert_eq!(Perturbation::two_photon(1.0).unwrap().point_eval(c(2.0, 0.0), zero, zero).unwrap(), c(0.0, -8.0));
        let disp = Perturbation::dispersive_damping(1.0).unwrap();
        let flat = disp.grid_eval(&vec![c(1.0, 0.0); 64], 0.1);
        assert!(flat.iter().all(|v| v.norm() < 1e-12));
        assert_eq!(disp.at_background(1.0).unwrap(), zero);
    }

    #[test]
    fn dispersive_on_plane_wave() {
        let gamma = 0.7;
        let k = 1.5;
        let disp = Perturbation::dispersive_damping(gamma).unwrap();
        let h = 0.01;
        let t = linspace(801, h);
        let wave: Vec<Complex64> = t.iter().map(|&x| c(0.0, k * x).exp()).collect();
        let f = disp.grid_eval(&wave, h);
        for (j, (fj, wj)) in f.iter().zip(&wave).enumerate() {
            let expected = -Complex64::i() * gamma * k * k * wj;
            assert!((fj - expected).norm() < 1e-7, "j = {j}");
        }
    }

    #[test]
    fn dispersive_converges_at_fourth_order() {
        let disp = Perturbation::dispersive_damping(1.0).unwrap();
        let p = CoreParams::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let err = |n: usize| {
            let h = 20.0 / (n - 1) as f64;
            let t = linspace(n, h);
            let u: Vec<Complex64> = t.iter().map(|&x| profile_jet(&p, x).unwrap()[0]).collect();
            disp.grid_eval(&u, h)
                .iter()
                .zip(&t)
                .map(|(f, &x)| (f - Complex64::i() * profile_jet(&p, x).unwrap()[2]).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(401) / err(801);
        assert!(ratio > 13.0 && ratio < 19.0, "ratio {ratio}");
    }

    #[test]
    fn grid_and_point_agree_on_profiles() {
        let h = 2e-3;
        let t = linspace(6001, h);
        for params in [CoreParams::black(1.0).unwrap(), CoreParams::new(1.2, 1.7, 0.3, 0.5).unwrap()] {
            let jets: Vec<[Complex64; 3]> = t.iter().map(|&x| profile_jet(&params, x).unwrap()).collect();
            let u: Vec<Complex64> = jets.iter().map(|j| j[0]).collect();
            for f in [
                Perturbation::dispersive_damping(0.8).unwrap(),
                Perturbation::linear_damping(0.4).unwrap(),
                Perturbation::two_photon(1.5).unwrap(),
                Perturbation::local("mixed", false, |u: Complex64, ut: Complex64, utt: Complex64| u * ut + utt.conj()),
            ] {
                let g = f.grid_eval(&u, h);
                for (gj, jet) in g.iter().zip(&jets) {
                    let p = f.point_eval(jet[0], jet[1], jet[2]).unwrap();
                    assert!((gj - p).norm() < 1e-8, "{}: {gj} vs {p}", f.label());
                }
            }
        }
    }

    #[test]
    fn symmetry_checks() {
        let h = 0.05;
        let t = linspace(200, h);
        let fields = vec![
            t.iter().map(|&x| c(x.tanh(), 0.3 * (2.0 * x).sin())).collect::<Vec<_>>(),
            t.iter().map(|&x| c((0.4 * x).cos(), (-x * x / 10.0).exp())).collect(),
        ];
        for f in [Perturbation::dispersive_damping(1.0).unwrap(), Perturbation::two_photon(1.0).unwrap(), Perturbation::linear_damping(2.0).unwrap(), Perturbation::none()] {
            assert!(check_phase_symmetry(&f, &fields, h).unwrap().symmetric, "{}", f.label());
        }
        let asym = Perturbation::local("u_plus_conj", false, |u: Complex64, _, _| u + u.conj());
        let check = check_phase_symmetry(&asym, &fields, h).unwrap();
        assert!(!check.symmetric);
        assert!(check.max_deviation > 0.1);
        assert!(check_phase_symmetry(&asym, &[], h).is_err());
    }

    #[test]
    fn grid_only_perturbation_has_no_point_form() {
        let f = Perturbation::on_grid("shift", true, |u: &[Complex64], _| u.to_vec());
        assert!(matches!(f.point_eval(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)), Err(Error::NonLocal(_))));
        assert_eq!(f.at_background(2.0).unwrap(), c(2.0, 0.0));
    }
}
