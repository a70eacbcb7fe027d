//! Rotations of the circle written as a single commutator of Möbius maps.
//!
//! `A = diag(e^{s0/2}, e^{-s0/2})` and `B = K(beta) A K(beta)^T` with `K` the
//! rotation matrix satisfy `2 - tr[A, B] = 4 sinh^4(s0/2) sin^2(2 beta)`, so `beta`
//! is explicit in the target rotation. Both are then conjugated so that the
//! elliptic fixed point of `[A, B]` sits at `i`, where `[A, B]` acts on the
//! boundary circle as a rigid rotation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diffeo::TorusDiffeo;
use crate::error::{Error, Result};
use crate::grid::{lift, DisplacementField, GridSpec};

pub type Mat2 = Matrix2<f64>;

pub const DEFAULT_S0: f64 = 1.0;
pub const DEFAULT_THETA_MAX: f64 = 0.1;

pub fn hyperbolic(s: f64) -> Mat2 {
    Mat2::new((s / 2.0).exp(), 0.0, 0.0, (-s / 2.0).exp())
}

/// Acts on the boundary circle as rotation by `2 alpha`.
pub fn rotation_matrix(alpha: f64) -> Mat2 {
    let (s, c) = alpha.sin_cos();
    Mat2::new(c, s, -s, c)
}

/// Inverse of a determinant-one matrix.
pub fn sl2_inverse(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

/// `A B A^-1 B^-1`.
pub fn bracket(a: &Mat2, b: &Mat2) -> Mat2 {
    if a == b {
        return Mat2::identity();
    }
    a * b * sl2_inverse(a) * sl2_inverse(b)
}

/// Right-hand side of the Fricke identity for `tr[A, B]`.
pub fn fricke_trace(a: &Mat2, b: &Mat2) -> f64 {
    let (ta, tb, tab) = (a.trace(), b.trace(), (a * b).trace());
    ta * ta + tb * tb + tab * tab - ta * tb * tab - 2.0
}

/// Largest rotation (in turns) reachable as `[A, B]` with base length `s0`.
pub fn theta_max(s0: f64) -> f64 {
    let s = (s0 / 2.0).sinh().powi(2);
    if s >= 1.0 {
        1.0
    } else {
        2.0 / PI * s.asin()
    }
}

/// Smallest base length reaching `theta`.
pub fn s0_needed(theta: f64) -> f64 {
    2.0 * (PI * theta.abs() / 2.0).sin().sqrt().asinh()
}

/// Displacement (in turns) of the boundary action of `m` at angle `x` (in turns).
pub fn boundary_displacement(m: &Mat2, x: f64) -> f64 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let alpha = Complex64::new((a + d) / 2.0, (b - c) / 2.0);
    let beta = Complex64::new((a - d) / 2.0, -(b + c) / 2.0);
    let w = Complex64::from_polar(1.0, 2.0 * PI * x);
    let wp = (alpha * w + beta) / (beta.conj() * w + alpha.conj());
    (wp / w).arg() / (2.0 * PI)
}

/// Samples the boundary action of `m` as a circle diffeomorphism in the chart.
pub fn mobius_to_circle_diffeo(m: &Mat2, grid: GridSpec) -> Result<TorusDiffeo> {
    if grid.dim() != 1 {
        return Err(Error::GridMismatch("circle maps need a 1D grid".into()));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!("determinant {det} is not 1")));
    }
    if *m == Mat2::identity() {
        return Ok(TorusDiffeo::identity(grid));
    }
    let field = DisplacementField::from_fn(grid, |x| [lift(boundary_displacement(m, x[0])), 0.0]);
    crate::diffeo::make_diffeo(field)
}

mod mat_serde {
    use super::Mat2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat2, s: S) -> Result<S::Ok, S::Error> {
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat2, D::Error> {
        let r = <[[f64; 2]; 2]>::deserialize(d)?;
        Ok(Mat2::new(r[0][0], r[0][1], r[1][0], r[1][1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobiusPair {
    #[serde(with = "mat_serde")]
    pub a: Mat2,
    #[serde(with = "mat_serde")]
    pub b: Mat2,
    pub theta: f64,
}

impl MobiusPair {
    pub fn commutator(&self) -> Mat2 {
        bracket(&self.a, &self.b)
    }
}

fn raw_pair(theta: f64, s0: f64, sign: f64) -> (Mat2, Mat2) {
    let a = hyperbolic(s0);
    if theta == 0.0 {
        return (a, a);
    }
    let beta = 0.5 * (sign * (PI * theta / 2.0).sin() / (s0 / 2.0).sinh().powi(2)).asin();
    let k = rotation_matrix(beta);
    let b = k * a * k.transpose();
    // fixed point x + iy of [A, B] in closed form, regular as beta -> 0
    let e = s0.exp();
    let q = 1.0 + (e - 1.0) * beta.sin().powi(2);
    let s2 = (2.0 * beta).sin();
    let x = -(e * e - 1.0) * s2 / (4.0 * q);
    let y = e * (1.0 - (s0 / 2.0).sinh().powi(4) * s2 * s2).max(0.0).sqrt() / q;
    let sy = y.sqrt();
    let p = Mat2::new(sy, x / sy, 0.0, 1.0 / sy);
    let pi = sl2_inverse(&p);
    (pi * a * p, pi * b * p)
}

/// Orientation of `beta` that produces a positive rotation, fixed per base length.
fn orientation(s0: f64) -> f64 {
    static CACHE: OnceLock<std::sync::Mutex<Vec<(u64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = s0.to_bits();
    if let Some(&(_, s)) = cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
        return s;
    }
    let probe = 0.5 * theta_max(s0).min(0.1);
    let (a, b) = raw_pair(probe, s0, 1.0);
    let s = if boundary_displacement(&bracket(&a, &b), 0.0) > 0.0 {
        1.0
    } else {
        -1.0
    };
    cache.lock().unwrap().push((key, s));
    s
}

/// Möbius pair with `[A, B]` acting on the boundary as rotation by `theta` turns.
pub fn mobius_rotation_commutator(theta: f64) -> Result<MobiusPair> {
    mobius_pair(theta, DEFAULT_S0, DEFAULT_THETA_MAX)
}

pub fn mobius_pair(theta: f64, s0: f64, cap: f64) -> Result<MobiusPair> {
    if !theta.is_finite() || !(s0 > 0.0) {
        return Err(Error::Input(format!("theta = {theta}, s0 = {s0}")));
    }
    if theta.abs() > cap.min(theta_max(s0)) {
        return Err(Error::Unreachable {
            theta,
            s0,
            needed: s0_needed(theta),
        });
    }
    let (a, b) = raw_pair(theta, s0, orientation(s0));
    Ok(MobiusPair { a, b, theta })
}
