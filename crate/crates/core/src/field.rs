//! Sampled fields on a uniform line, their coordinate frame, and the
//! transformation between the full field U and the field u with the
//! background phase removed, `U = u·exp(i∫₀ᶻ u∞² ds)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundHistory;
use crate::error::{require_positive, Error, Result};
use crate::stencil::MIN_POINTS;

/// Uniform grid on `[−L, L]` with `intervals` cells, so `intervals + 1`
/// nodes including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub intervals: usize,
}

impl Grid {
    pub fn new(half_width: f64, intervals: usize) -> Result<Self> {
        require_positive("half_width", half_width)?;
        if intervals + 1 < MIN_POINTS {
            return Err(Error::TooFew { what: "grid intervals", needed: MIN_POINTS - 1, got: intervals });
        }
        Ok(Self { half_width, intervals })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.t(j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    LabT,
    ComovingT,
}

/// Coordinate bookkeeping. In the comoving frame the coordinate of node j
/// is `t_j − accumulated_shift`, where the shift is `∫₀ᶻ A ds + t₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub kind: FrameKind,
    pub accumulated_shift: f64,
}

impl Frame {
    pub fn lab() -> Self {
        Self { kind: FrameKind::LabT, accumulated_shift: 0.0 }
    }

    pub fn comoving(shift: f64) -> Self {
        Self { kind: FrameKind::ComovingT, accumulated_shift: shift }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// The full field U.
    Full,
    /// u, with the background phase removed.
    PhaseRemoved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub z: f64,
    pub grid: Grid,
    pub samples: Vec<Complex64>,
    pub frame: Frame,
    pub representation: Representation,
}

impl FieldState {
    pub fn new(z: f64, grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidParameter { name: "samples", reason: format!("expected {} samples, got {}", grid.len(), samples.len()) });
        }
        Ok(Self { z, grid, samples, frame: Frame::lab(), representation: Representation::PhaseRemoved })
    }

    /// Samples a function of the lab coordinate.
    pub fn from_fn(z: f64, grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|j| f(grid.t(j))).collect();
        Self { z, grid, samples, frame: Frame::lab(), representation: Representation::PhaseRemoved }
    }

    /// Coordinate of node j in the current frame.
    pub fn coordinate(&self, j: usize) -> f64 {
        match self.frame.kind {
            FrameKind::LabT => self.grid.t(j),
            FrameKind::ComovingT => self.grid.t(j) - self.frame.accumulated_shift,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|j| self.coordinate(j)).collect()
    }

    /// The same samples relabelled in the comoving frame.
    pub fn comoving(&self, shift: f64) -> Self {
        Self { frame: Frame::comoving(shift), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    UToPhaseRemoved,
    PhaseRemovedToU,
}

/// Multiplies by `exp(∓i∫₀ᶻ u∞² ds)`.
pub fn frame_transform(field: &FieldState, history: &BackgroundHistory, direction: Direction) -> Result<FieldState> {
    let (from, to, sign) = match direction {
        Direction::UToPhaseRemoved => (Representation::Full, Representation::PhaseRemoved, -1.0),
        Direction::PhaseRemovedToU => (Representation::PhaseRemoved, Representation::Full, 1.0),
    };
    if field.representation != from {
        return Err(Error::Representation(format!("expected a {from:?} field, got {:?}", field.representation)));
    }
    let theta = if field.z == 0.0 { 0.0 } else { history.phase_integral(field.z)? };
    let rot = Complex64::from_polar(1.0, sign * theta);
    Ok(FieldState { samples: field.samples.iter().map(|&u| u * rot).collect(), representation: to, ..field.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(5.0, 100).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = grid();
        assert_eq!(g.len(), 101);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert_eq!(g.t(0), -5.0);
        assert!((g.t(100) - 5.0).abs() < 1e-12);
        assert!(Grid::new(1.0, 3).is_err());
        assert!(Grid::new(0.0, 300).is_err());
    }

    #[test]
    fn transform_at_origin_is_identity() {
        let f = FieldState::from_fn(0.0, grid(), |t| Complex64::new(t, 1.0));
        let h = BackgroundHistory::constant(1.0, 0.0).unwrap();
        let out = frame_transform(&f, &h, Direction::PhaseRemovedToU).unwrap();
        assert_eq!(out.samples, f.samples);
    }

    #[test]
    fn round_trip() {
        let h = BackgroundHistory::constant(1.0, 4.0).unwrap();
        let f = FieldState::from_fn(PI, grid(), |t| Complex64::new(t.tanh(), 0.2 * t));
        let up = frame_transform(&f, &h, Direction::PhaseRemovedToU).unwrap();
        let back = frame_transform(&up, &h, Direction::UToPhaseRemoved).unwrap();
        for (a, b) in back.samples.iter().zip(&f.samples) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_field_picks_up_background_phase() {
        let h = BackgroundHistory::constant(1.0, 2.0).unwrap();
        let f = FieldState::from_fn(PI / 2.0, grid(), |_| Complex64::new(1.0, 0.0));
        let up = frame_transform(&f, &h, Direction::PhaseRemovedToU).unwrap();
        for v in &up.samples {
            assert!((v - Complex64::i()).norm() < 1e-14);
        }
    }

    #[test]
    fn coverage_and_representation_errors() {
        let h = BackgroundHistory::constant(1.0, 1.0).unwrap();
        let f = FieldState::from_fn(2.0, grid(), |_| Complex64::new(1.0, 0.0));
        assert!(matches!(frame_transform(&f, &h, Direction::PhaseRemovedToU), Err(Error::CoverageGap { .. })));
        assert!(matches!(frame_transform(&f, &h, Direction::UToPhaseRemoved), Err(Error::Representation(_))));
    }

    #[test]
    fn comoving_coordinates() {
        let f = FieldState::from_fn(1.0, grid(), |_| Complex64::new(1.0, 0.0)).comoving(1.5);
        assert!((f.coordinate(50) + 1.5).abs() < 1e-12);
    }
}
