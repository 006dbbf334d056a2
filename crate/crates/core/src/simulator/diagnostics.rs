//! The integrals H, E, I, R of a sampled field and the residuals of their
//! evolution laws under the forcing:
//!
//! ```text
//! dH/dz = E·d(u∞²)/dz + 2ε·Re∫F·u_z*
//! dE/dz = 2ε·Im∫(F[u∞]u∞ − F·u*)
//! dI/dz = −2ε·Re∫F·u_t*
//! dR/dz = −I + 2ε·Im∫t·(F[u∞]u∞ − F·u*)
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundHistory;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::quadrature::trapezoid;
use crate::soliton::ConservedQuantities;
use crate::stencil::{first_derivative, second_derivative};

use super::SimConfig;

/// Trapezoid-rule integrals over the lab coordinate; `u_t` by the
/// fourth-order stencil.
pub fn conserved_quantities(field: &FieldState, u_inf: f64) -> ConservedQuantities {
    let h = field.grid.spacing();
    let ut = first_derivative(&field.samples, h);
    let u2 = u_inf * u_inf;
    let n = field.samples.len();
    let (mut hd, mut ed, mut id, mut rd) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (j, (&u, &d)) in field.samples.iter().zip(&ut).enumerate() {
        let deficit = u2 - u.norm_sqr();
        hd.push(0.5 * d.norm_sqr() + 0.5 * deficit * deficit);
        ed.push(deficit);
        id.push((u * d.conj()).im);
        rd.push(field.grid.t(j) * deficit);
    }
    ConservedQuantities { h: trapezoid(&hd, h), e: trapezoid(&ed, h), i: trapezoid(&id, h), r: trapezoid(&rd, h) }
}

/// One evolution law checked along a snapshot series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawResidual {
    /// z of each interior snapshot where the check is made.
    pub z: Vec<f64>,
    /// Central-difference dQ/dz.
    pub measured_rate: Vec<f64>,
    /// Right-hand side of the law.
    pub predicted_rate: Vec<f64>,
    /// `max |measured − predicted|`.
    pub max_residual: f64,
    /// `max |predicted|`, the size of the rate being tested.
    pub rate_scale: f64,
    /// `max_z |Q(z) − Q(z₀)| / max(|Q(z₀)|, 1)`.
    pub relative_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationResiduals {
    pub quantities: Vec<ConservedQuantities>,
    pub h: LawResidual,
    pub e: LawResidual,
    pub i: LawResidual,
    pub r: LawResidual,
}

struct Rates {
    h: f64,
    e: f64,
    i: f64,
    r: f64,
}

fn law_rates(field: &FieldState, config: &SimConfig, history: &BackgroundHistory, q: &ConservedQuantities) -> Result<Rates> {
    let eps = config.epsilon;
    let u_inf = history.u_inf_at(field.z)?;
    // d(u∞²)/dz by a centred difference of the background record.
    let dz = 1e-4;
    let lo = (field.z - dz).max(0.0);
    let hi = (field.z + dz).min(history.z_max());
    let du2 = if hi > lo { (history.u_inf_at(hi)?.powi(2) - history.u_inf_at(lo)?.powi(2)) / (hi - lo) } else { 0.0 };
    if eps == 0.0 || config.perturbation.is_zero() {
        return Ok(Rates { h: q.e * du2, e: 0.0, i: 0.0, r: -q.i });
    }
    let h = field.grid.spacing();
    let u = &field.samples;
    let ut = first_derivative(u, h);
    let utt = second_derivative(u, h);
    let f = config.perturbation.grid_eval(u, h);
    let background = (config.perturbation.at_background(u_inf)? * u_inf).im;
    let u2 = u_inf * u_inf;
    let n = u.len();
    let (mut hd, mut ed, mut id, mut rd) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for j in 0..n {
        let uz = -Complex64::i() * (f[j] * eps + utt[j] * 0.5 - u[j] * (u[j].norm_sqr() - u2));
        let source = background - (f[j] * u[j].conj()).im;
        hd.push((f[j] * uz.conj()).re);
        ed.push(source);
        id.push((f[j] * ut[j].conj()).re);
        rd.push(field.grid.t(j) * source);
    }
    // The pinned end values do not follow the interior equation; drop them.
    let interior = |v: &[f64]| trapezoid(&v[1..n - 1], h);
    Ok(Rates {
        h: q.e * du2 + 2.0 * eps * interior(&hd),
        e: 2.0 * eps * interior(&ed),
        i: -2.0 * eps * interior(&id),
        r: -q.i + 2.0 * eps * interior(&rd),
    })
}

/// Compares centred differences of H, E, I, R between neighbouring
/// snapshots with the evolution laws evaluated at the middle snapshot.
pub fn conservation_residuals(snapshots: &[FieldState], config: &SimConfig, history: &BackgroundHistory) -> Result<ConservationResiduals> {
    if snapshots.len() < 3 {
        return Err(Error::TooFew { what: "snapshots", needed: 3, got: snapshots.len() });
    }
    let quantities: Vec<ConservedQuantities> = snapshots.iter().map(|s| Ok(conserved_quantities(s, history.u_inf_at(s.z)?))).collect::<Result<_>>()?;
    let mut laws: [LawResidual; 4] = std::array::from_fn(|_| LawResidual { z: vec![], measured_rate: vec![], predicted_rate: vec![], max_residual: 0.0, rate_scale: 0.0, relative_drift: 0.0 });
    let pick = |q: &ConservedQuantities, k: usize| [q.h, q.e, q.i, q.r][k];
    for k in 1..snapshots.len() - 1 {
        let (za, zb, zc) = (snapshots[k - 1].z, snapshots[k].z, snapshots[k + 1].z);
        let (ha, hb) = (zb - za, zc - zb);
        if ha <= 0.0 || hb <= 0.0 {
            continue;
        }
        let rates = law_rates(&snapshots[k], config, history, &quantities[k])?;
        let predicted = [rates.h, rates.e, rates.i, rates.r];
        for (law, (slot, p)) in laws.iter_mut().zip(predicted).enumerate() {
            let (qa, qb, qc) = (pick(&quantities[k - 1], law), pick(&quantities[k], law), pick(&quantities[k + 1], law));
            // Second-order derivative on a possibly uneven stencil.
            let measured = -hb / (ha * (ha + hb)) * qa + (hb - ha) / (ha * hb) * qb + ha / (hb * (ha + hb)) * qc;
            slot.z.push(zb);
            slot.measured_rate.push(measured);
            slot.predicted_rate.push(p);
            slot.max_residual = slot.max_residual.max((measured - p).abs());
            slot.rate_scale = slot.rate_scale.max(p.abs());
        }
    }
    for (law, slot) in laws.iter_mut().enumerate() {
        let q0 = pick(&quantities[0], law);
        slot.relative_drift = quantities.iter().map(|q| (pick(q, law) - q0).abs()).fold(0.0, f64::max) / q0.abs().max(1.0);
    }
    let [h, e, i, r] = laws;
    Ok(ConservationResiduals { quantities, h, e, i, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::perturbation::Perturbation;
    use crate::simulator::{run, soliton_field};
    use crate::soliton::CoreParams;
    use std::f64::consts::PI;

    #[test]
    fn soliton_values() {
        let g = Grid::new(60.0, 6000).unwrap();
        let black = conserved_quantities(&soliton_field(&CoreParams::black(1.0).unwrap(), g).unwrap(), 1.0);
        assert!((black.e - 2.0).abs() < 1e-8);
        assert!(black.i.abs() < 1e-8);
        // u_t carries the stencil error, O(dt⁴).
        assert!((black.h - 4.0 / 3.0).abs() < 1e-7, "{}", black.h - 4.0 / 3.0);
        let p = CoreParams::new(1.0, 4.0 * PI / 5.0, 1.5, 0.0).unwrap();
        let grey = conserved_quantities(&soliton_field(&p, g).unwrap(), 1.0);
        assert!((grey.i + 0.587785).abs() < 1e-6);
        assert!((grey.i + 2.0 * p.a * p.b).abs() < 1e-8);
        assert!((grey.r - 2.0 * p.b * 1.5).abs() < 1e-8);
        let flat = conserved_quantities(&FieldState::from_fn(0.0, g, |_| Complex64::new(0.0, 1.0)), 1.0);
        assert_eq!(flat, ConservedQuantities::default());
    }

    #[test]
    fn unperturbed_laws_hold() {
        let g = Grid::new(40.0, 1024).unwrap();
        let p = CoreParams::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let h = BackgroundHistory::constant(1.0, 1.0).unwrap();
        let cfg = SimConfig::new(0.0, Perturbation::none(), SimConfig::max_dz(&g), 40);
        let snaps = run(&cfg, &soliton_field(&p, g).unwrap(), &h, 1.0).unwrap();
        let res = conservation_residuals(&snaps, &cfg, &h).unwrap();
        for law in [&res.h, &res.e, &res.i, &res.r] {
            assert!(law.max_residual < 1e-6, "{law:?}");
        }
        assert!(res.e.relative_drift < 1e-8);
        assert!((res.r.measured_rate[0] + res.quantities[1].i).abs() < 1e-6);
        assert!(conservation_residuals(&snaps[..2], &cfg, &h).is_err());
    }

    #[test]
    fn damped_laws_hold() {
        let g = Grid::new(40.0, 1024).unwrap();
        let p = CoreParams::new(1.0, 2.0, 0.0, 0.0).unwrap();
        let eps = 0.05;
        for f in [Perturbation::dispersive_damping(1.0).unwrap(), Perturbation::linear_damping(1.0).unwrap()] {
            let h = BackgroundHistory::evolve(&f, 1.0, eps, 1.0, 200).unwrap();
            // Snapshots 0.024 apart keep the centred z-difference error small.
            let cfg = SimConfig::new(eps, f.clone(), SimConfig::max_dz(&g), 20);
            let snaps = run(&cfg, &soliton_field(&p, g).unwrap(), &h, 1.0).unwrap();
            let res = conservation_residuals(&snaps, &cfg, &h).unwrap();
            for law in [&res.h, &res.e, &res.i, &res.r] {
                assert!(law.max_residual < 5e-6, "{}: {law:?}", f.label());
            }
            assert!(res.e.rate_scale > 1e-3, "{}", f.label());
        }
    }
}
