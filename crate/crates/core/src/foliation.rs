//! Three foliations of the annulus and the splitting of an annulus map into
//! three leaf-preserving factors.
//!
//! Foliation `i` has leaves `t -> (x + h_i(t), t)` with `h_1 = 0`,
//! `h_2 = c cos 2 pi t`, `h_3 = c sin 2 pi t`; `phi_i(x, t) = (x + h_i(t), t)`
//! straightens it. A tangent vector `(a, b)` at `(y, t)` is split as
//! `sum_i c_i (h_i'(t), 1)` and `alpha` walks along leaves 3, 2, 1 in turn.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffeo::{Support, TorusDiffeo};
use crate::error::{Error, Result};
use crate::grid::{lift, DisplacementField, GridSpec, Vec2};
use crate::interp::Interpolant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoliationSpec {
    pub i: usize,
    pub c: f64,
}

impl FoliationSpec {
    pub fn new(i: usize, c: f64) -> Result<Self> {
        if !(1..=3).contains(&i) || !(c > 0.0) {
            return Err(Error::Input(format!("foliation {i} with amplitude {c}")));
        }
        Ok(Self { i, c })
    }

    /// The three foliations with common amplitude `c`.
    pub fn triple(c: f64) -> Result<[Self; 3]> {
        Ok([Self::new(1, c)?, Self::new(2, c)?, Self::new(3, c)?])
    }

    pub fn h(&self, t: f64) -> f64 {
        match self.i {
            2 => self.c * (2.0 * PI * t).cos(),
            3 => self.c * (2.0 * PI * t).sin(),
            _ => 0.0,
        }
    }

    pub fn dh(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.c;
        match self.i {
            2 => -w * (2.0 * PI * t).sin(),
            3 => w * (2.0 * PI * t).cos(),
            _ => 0.0,
        }
    }

    /// `phi_i(x, t)`.
    pub fn straighten_inv(&self, p: Vec2) -> Vec2 {
        [p[0] + self.h(p[1]), p[1]]
    }

    /// `phi_i^{-1}(y, t)`.
    pub fn straighten(&self, p: Vec2) -> Vec2 {
        [p[0] - self.h(p[1]), p[1]]
    }

    /// Displacement in annulus coordinates of `phi_i o psi o phi_i^{-1}` at a point
    /// where the leafwise map `psi` moves `t` by `d`.
    pub fn conjugate_displacement(&self, t: f64, d: f64) -> Vec2 {
        [self.h(t + d) - self.h(t), d]
    }
}

/// Coefficients `(c_1, c_2, c_3)` with `sum_i c_i (h_i'(t), 1) = v`.
pub fn split(v: Vec2, t: f64, c: f64) -> [f64; 3] {
    let d2 = -2.0 * PI * c * (2.0 * PI * t).sin();
    let d3 = 2.0 * PI * c * (2.0 * PI * t).cos();
    let den = d2 * d2 + d3 * d3;
    let c2 = v[0] * d2 / den;
    let c3 = v[0] * d3 / den;
    [v[1] - c2 - c3, c2, c3]
}

/// Travel along the leaf of foliation `i` through `p` by `xi` in `t`.
pub fn leaf_step(spec: &FoliationSpec, p: Vec2, xi: f64) -> Vec2 {
    if xi == 0.0 {
        return p;
    }
    [p[0] + spec.h(p[1] + xi) - spec.h(p[1]), p[1] + xi]
}

/// Steps along foliations `3, 2, ..., from` with coefficients split at `x`.
pub fn alpha_partial(from: usize, x: Vec2, v: Vec2, c: f64) -> Vec2 {
    let cs = split(v, x[1], c);
    let mut p = x;
    for i in (from..=3).rev() {
        let spec = FoliationSpec { i, c };
        p = leaf_step(&spec, p, cs[i - 1]);
    }
    p
}

pub fn alpha(x: Vec2, v: Vec2, c: f64) -> Vec2 {
    alpha_partial(1, x, v, c)
}

const SCALAR_TOL: f64 = 1e-16;

/// Solves `alpha(x, v) = x + u` for `v`; the `t` part is exact, the `y` part is a scalar Newton.
pub fn alpha_inverse(x: Vec2, u: Vec2, c: f64) -> std::result::Result<Vec2, f64> {
    let b = u[1];
    let t = x[1];
    let mut a = u[0];
    let y_of = |a: f64| alpha(x, [a, b], c)[0] - x[0];
    let d2 = -2.0 * PI * c * (2.0 * PI * t).sin();
    let d3 = 2.0 * PI * c * (2.0 * PI * t).cos();
    let den = d2 * d2 + d3 * d3;
    let (p2, p3) = (d2 / den, d3 / den);
    let s2 = FoliationSpec { i: 2, c };
    let s3 = FoliationSpec { i: 3, c };
    let mut r = y_of(a) - u[0];
    for _ in 0..50 {
        if r.abs() <= SCALAR_TOL {
            break;
        }
        let t3 = t + a * p3;
        let t32 = t + a * (p3 + p2);
        let dy = p3 * s3.dh(t3) + (p3 + p2) * s2.dh(t32) - p3 * s2.dh(t3);
        let next = a - r / dy;
        let rn = y_of(next) - u[0];
        if rn.abs() >= r.abs() {
            break;
        }
        a = next;
        r = rn;
    }
    if r.abs() <= 1e-12 {
        Ok([a, b])
    } else {
        Err(r.abs())
    }
}

/// Vector field `X` with `alpha(x, X(x)) = f(x)` at every node.
pub fn recover_x(f: &TorusDiffeo, c: f64) -> Result<DisplacementField> {
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::GridMismatch("foliations live on the annulus".into()));
    }
    let vals: Vec<Result<Vec2>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let u = f.field().get(idx);
            if u == [0.0, 0.0] {
                return Ok(u);
            }
            alpha_inverse(grid.point(idx), u, c).map_err(|residual| Error::InversionFailed { node: idx, residual })
        })
        .collect();
    let mut x = DisplacementField::zeros(grid);
    for (idx, v) in vals.into_iter().enumerate() {
        x.set(idx, v?);
    }
    Ok(x)
}

/// `sigma(f) = (g_1, g_2, g_3)` together with what is needed to evaluate it off the grid.
#[derive(Debug, Clone)]
pub struct FoliationDecomposition {
    pub c: f64,
    pub x: DisplacementField,
    /// Declared support of `f` in the first coordinate; `X` vanishes outside it.
    pub support: Option<Support>,
    /// Step radius used to dilate the declared support.
    pub radius: f64,
    pub factors: [TorusDiffeo; 3],
    x_interp: Interpolant,
}

fn newton2(
    map: impl Fn(Vec2) -> Vec2,
    z: Vec2,
    mut x: Vec2,
) -> std::result::Result<Vec2, f64> {
    let resid = |x: Vec2| {
        let p = map(x);
        [lift(p[0] - z[0]), lift(p[1] - z[1])]
    };
    let norm = |r: Vec2| r[0].abs().max(r[1].abs());
    let mut r = resid(x);
    let h = 1e-7;
    for _ in 0..40 {
        if norm(r) <= 1e-15 {
            return Ok(x);
        }
        let mut jac = [[0.0; 2]; 2];
        for axis in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[axis] += h;
            xm[axis] -= h;
            let (pp, pm) = (map(xp), map(xm));
            for comp in 0..2 {
                jac[comp][axis] = lift(pp[comp] - pm[comp]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let step = [
            (jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            (jac[0][0] * r[1] - jac[1][0] * r[0]) / det,
        ];
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let xn = [x[0] - t * step[0], x[1] - t * step[1]];
            let rn = resid(xn);
            if norm(rn) < norm(r) {
                x = xn;
                r = rn;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if norm(r) <= 1e-12 {
        Ok(x)
    } else {
        Err(norm(r))
    }
}

impl FoliationDecomposition {
    /// Interpolated `X`, exactly zero outside the declared support.
    pub fn x_at(&self, p: Vec2) -> Vec2 {
        if let Some(s) = &self.support {
            if !s.contains(p[0]) {
                return [0.0, 0.0];
            }
        }
        self.x_interp.value(p)
    }

    /// `f_{X,j}(p) = alpha_j(p, X(p))`; `j = 4` is the identity.
    pub fn partial_map(&self, j: usize, p: Vec2) -> Vec2 {
        if j > 3 {
            return p;
        }
        alpha_partial(j, p, self.x_at(p), self.c)
    }

    /// Leaf increment `xi_i(z)` with `g_i(z) = leaf_step_i(z, xi_i(z))`.
    pub fn xi(&self, i: usize, z: Vec2) -> std::result::Result<f64, f64> {
        let x = if i == 3 {
            z
        } else {
            let guess = {
                let p = self.partial_map(i + 1, z);
                [z[0] - lift(p[0] - z[0]), z[1] - lift(p[1] - z[1])]
            };
            newton2(|p| self.partial_map(i + 1, p), z, guess)?
        };
        let v = self.x_at(x);
        if v == [0.0, 0.0] {
            return Ok(0.0);
        }
        Ok(split(v, x[1], self.c)[i - 1])
    }

    /// Support of each factor: the support of `f` dilated by the step radius.
    pub fn factor_support(&self) -> Option<Support> {
        self.support.and_then(|s| s.dilate(self.radius))
    }

    /// `psi_i = phi_i^{-1} o g_i o phi_i` on a grid whose first coordinate is the leaf label.
    pub fn leaf_map(&self, i: usize) -> Result<TorusDiffeo> {
        let spec = FoliationSpec { i, c: self.c };
        let grid = self.x.grid();
        let support = self.factor_support().and_then(|s| s.dilate(self.c));
        let vals = sample_xi(grid, support, |p| self.xi(i, spec.straighten_inv(p)));
        let field = DisplacementField::zeros(grid);
        let mut field = field;
        for (idx, v) in vals.into_iter().enumerate() {
            field.set(idx, [0.0, v?]);
        }
        let out = TorusDiffeo::structured(field, self.factors[0].interp())?;
        Ok(match support {
            Some(s) => out.masked(s),
            None => out,
        })
    }
}

fn sample_xi(
    grid: GridSpec,
    support: Option<Support>,
    xi: impl Fn(Vec2) -> std::result::Result<f64, f64> + Sync,
) -> Vec<Result<f64>> {
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let p = grid.point(idx);
            if let Some(s) = &support {
                if !s.contains(p[0]) {
                    return Ok(0.0);
                }
            }
            xi(p).map_err(|residual| Error::InversionFailed { node: idx, residual })
        })
        .collect()
}

/// Splits `f` into `g_1 o g_2 o g_3` with `g_i` preserving foliation `i`.
pub fn foliation_factors(f: &TorusDiffeo, c: f64, radius: f64) -> Result<FoliationDecomposition> {
    let grid = f.grid();
    let x = recover_x(f, c)?;
    let x_interp = Interpolant::new(&x, f.interp());
    let mut dec = FoliationDecomposition {
        c,
        x,
        support: f.support(),
        radius,
        factors: [
            TorusDiffeo::identity(grid),
            TorusDiffeo::identity(grid),
            TorusDiffeo::identity(grid),
        ],
        x_interp,
    };
    if f.is_identity() {
        let support = dec.factor_support();
        for g in dec.factors.iter_mut() {
            *g = TorusDiffeo::identity(grid).with_interp(f.interp());
            if let Some(s) = support {
                *g = g.clone().masked(s);
            }
        }
        return Ok(dec);
    }
    if dec.support.is_some() {
        let reach = (0..grid.len())
            .map(|idx| {
                let p = grid.point(idx);
                let q = dec.partial_map(2, p);
                lift(q[0] - p[0]).abs().max(f.field().get(idx)[0].abs())
            })
            .fold(0.0, f64::max);
        if reach > 0.5 * radius {
            return Err(Error::ChartViolation(format!(
                "leaf steps reach {reach:.3e}, beyond half the step radius {radius}"
            )));
        }
    }
    let support = dec.factor_support();
    let mut factors = Vec::with_capacity(3);
    for i in 1..=3 {
        let spec = FoliationSpec { i, c };
        let vals = sample_xi(grid, support, |z| dec.xi(i, z));
        let mut field = DisplacementField::zeros(grid);
        for (idx, v) in vals.into_iter().enumerate() {
            let xi = v?;
            field.set(idx, spec.conjugate_displacement(grid.point(idx)[1], xi));
        }
        let g = TorusDiffeo::with_class(field, f.interp(), f.class())?;
        factors.push(match support {
            Some(s) => g.masked(s),
            None => g,
        });
    }
    dec.factors = factors.try_into().expect("three factors");
    Ok(dec)
}

/// `sup |first coordinate of phi_i^{-1} o g o phi_i (x, t) - x|` over the nodes.
pub fn leaf_preservation_error(g: &TorusDiffeo, spec: &FoliationSpec) -> f64 {
    let grid = g.grid();
    if g.is_identity() {
        return 0.0;
    }
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.point(idx);
            let p = spec.straighten_inv(x);
            let q = g.apply(p);
            let back = spec.straighten(q);
            lift(back[0] - x[0]).abs()
        })
        .reduce(|| 0.0, f64::max)
}
