//! Frozen regression inputs: five trigonometric displacement fields on T^2,
//! each scaled by an amplitude.

use std::f64::consts::PI;

use crate::diffeo::{make_diffeo, TorusDiffeo};
use crate::error::{Error, Result};
use crate::grid::{to_spectral, DisplacementField, GridSpec, SpectralField, Vec2};

pub const MEMBERS: usize = 5;
pub const AMPLITUDES: [f64; 3] = [2.5e-4, 5e-4, 1e-3];

/// Unit-amplitude profile of member `i` at `x`.
pub fn profile(i: usize, x: Vec2) -> Vec2 {
    let s = |a: f64, b: f64| (2.0 * PI * (a * x[0] + b * x[1])).sin();
    let c = |a: f64, b: f64| (2.0 * PI * (a * x[0] + b * x[1])).cos();
    match i {
        0 => [s(0.0, 1.0), c(1.0, 0.0)],
        1 => [c(1.0, 1.0), s(1.0, -1.0)],
        2 => [0.5 * s(2.0, 1.0), 0.5 * c(1.0, 2.0)],
        3 => [0.5 * (s(1.0, 0.0) + c(0.0, 1.0)), 0.5 * s(1.0, 1.0) - 0.25 * c(0.0, 2.0)],
        _ => [0.5 + 0.5 * c(0.0, 1.0), 0.3 + 0.5 * s(1.0, 0.0)],
    }
}

pub fn field(i: usize, amplitude: f64, grid: GridSpec) -> Result<DisplacementField> {
    if i >= MEMBERS {
        return Err(Error::Input(format!("suite has {MEMBERS} members, asked for {i}")));
    }
    Ok(DisplacementField::from_fn(grid, |x| {
        let p = profile(i, x);
        [amplitude * p[0], amplitude * p[1]]
    }))
}

pub fn diffeo(i: usize, amplitude: f64, grid: GridSpec) -> Result<TorusDiffeo> {
    make_diffeo(field(i, amplitude, grid)?)
}

/// Band-limited coefficients, identical on every grid with at least 8 points.
pub fn spectral(i: usize, amplitude: f64) -> Result<SpectralField> {
    Ok(to_spectral(&field(i, amplitude, GridSpec::new(2, 16)?)?))
}

/// Smooth direction used by the smoothness probe.
pub fn probe_direction(grid: GridSpec) -> DisplacementField {
    DisplacementField::from_fn(grid, |x| {
        [
            (2.0 * PI * (x[0] - x[1])).cos(),
            (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
        ]
    })
}
