//! Fourth-order finite-difference stencils on a uniform grid. Interior
//! points use the centred five-point formulas; the two points nearest each
//! end use one-sided fourth-order formulas, so no periodicity is assumed.

use std::ops::{Add, Mul, Sub};

pub trait Sample: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Sample for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

/// Smallest grid the one-sided formulas can serve.
pub const MIN_POINTS: usize = 6;

const D2_EDGE: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_NEAR: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];
const D1_EDGE: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_NEAR: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];

fn dot<T: Sample>(coeffs: &[f64], values: impl Iterator<Item = T>) -> T {
    let mut it = coeffs.iter().zip(values);
    let (c0, v0) = it.next().expect("stencil has at least one tap");
    it.fold(v0 * *c0, |acc, (c, v)| acc + v * *c)
}

/// Centred second difference at interior index `j` (requires `2 <= j <= n-3`).
#[inline(always)]
pub fn d2_interior<T: Sample>(f: &[T], j: usize, inv_12h2: f64) -> T {
    ((f[j - 1] + f[j + 1]) * 16.0 - (f[j - 2] + f[j + 2]) - f[j] * 30.0) * inv_12h2
}

/// Second derivative at index `j`, one-sided near the ends.
pub fn d2_at<T: Sample>(f: &[T], j: usize, h: f64) -> T {
    let n = f.len();
    assert!(n >= MIN_POINTS, "stencil needs at least {MIN_POINTS} points");
    let s = 1.0 / (12.0 * h * h);
    match j {
        0 => dot(&D2_EDGE, f[..6].iter().copied()) * s,
        1 => dot(&D2_NEAR, f[..6].iter().copied()) * s,
        _ if j == n - 1 => dot(&D2_EDGE, f[n - 6..].iter().rev().copied()) * s,
        _ if j == n - 2 => dot(&D2_NEAR, f[n - 6..].iter().rev().copied()) * s,
        _ => d2_interior(f, j, s),
    }
}

/// First derivative at index `j`, one-sided near the ends.
pub fn d1_at<T: Sample>(f: &[T], j: usize, h: f64) -> T {
    let n = f.len();
    assert!(n >= MIN_POINTS, "stencil needs at least {MIN_POINTS} points");
    let s = 1.0 / (12.0 * h);
    match j {
        0 => dot(&D1_EDGE, f[..5].iter().copied()) * s,
        1 => dot(&D1_NEAR, f[..5].iter().copied()) * s,
        _ if j == n - 1 => dot(&D1_EDGE, f[n - 5..].iter().rev().copied()) * (-s),
        _ if j == n - 2 => dot(&D1_NEAR, f[n - 5..].iter().rev().copied()) * (-s),
        _ => ((f[j + 1] - f[j - 1]) * 8.0 - (f[j + 2] - f[j - 2])) * s,
    }
}

pub fn second_derivative<T: Sample>(f: &[T], h: f64) -> Vec<T> {
    (0..f.len()).map(|j| d2_at(f, j, h)).collect()
}

pub fn first_derivative<T: Sample>(f: &[T], h: f64) -> Vec<T> {
    (0..f.len()).map(|j| d1_at(f, j, h)).collect()
}
