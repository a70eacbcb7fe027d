//! Herman's map `H(lambda, h) = R_lambda o [R_gamma, h]` and a Newton solver for
//! `H(lambda, h) = f` near the identity.
//!
//! Each step linearizes `R_{lambda+gamma} o h o R_{-gamma} = f o h` in the update
//! `h <- h o (id + W)`, multiplies the defect by `(I + Dh(x - gamma))^{-1}`, and
//! hands the result to the cohomological solver. Convergence is quadratic.

use serde::{Deserialize, Serialize};

use crate::cohomology::{solve_on_grid, DiophantineVector};
use crate::diffeo::{c0_distance, c1_norm, commutator, compose, make_diffeo, TorusDiffeo};
use crate::error::{Error, Result};
use crate::grid::{from_spectral, lift, to_spectral, DisplacementField, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermanConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible `c1_norm(f)`.
    pub trust_region: f64,
    /// A residual below this that stops halving is accepted as the discretization floor.
    pub stall_tol: f64,
}

impl Default for HermanConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 8,
            trust_region: 0.05,
            stall_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HermanSolution {
    pub lambda: Vec<f64>,
    pub h: TorusDiffeo,
    /// `c0_distance(herman_map(lambda, h), f)`, recomputed from scratch.
    pub residual: f64,
    pub iterations: usize,
    /// Residual after each step, starting with the residual of `(0, id)`.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermanReport {
    pub lambda: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

impl HermanSolution {
    pub fn report(&self) -> HermanReport {
        HermanReport {
            lambda: self.lambda.clone(),
            residual: self.residual,
            iterations: self.iterations,
            history: self.history.clone(),
        }
    }
}

fn as_vec2(v: &[f64]) -> Vec2 {
    [v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0)]
}

/// `R_lambda o [R_gamma, h]`.
pub fn herman_map(lambda: &[f64], h: &TorusDiffeo, gamma: &[f64]) -> Result<TorusDiffeo> {
    let grid = h.grid();
    let rot = TorusDiffeo::translation(grid, as_vec2(gamma)).with_interp(h.interp());
    let bracket = commutator(&rot, h)?;
    let shift = TorusDiffeo::translation(grid, as_vec2(lambda)).with_interp(h.interp());
    if lambda.iter().all(|&l| l == 0.0) {
        return Ok(bracket);
    }
    translate(&shift, &bracket)
}

/// `R_a o g`, added node-wise without interpolation.
fn translate(shift: &TorusDiffeo, g: &TorusDiffeo) -> Result<TorusDiffeo> {
    let a = shift.field().get(0);
    let field = g.field().map(|_, u| [lift(u[0] + a[0]), lift(u[1] + a[1])]);
    TorusDiffeo::structured(field, g.interp())
}

/// Solves `herman_map(lambda, h, gamma) = f`.
pub fn herman_solve(
    f: &TorusDiffeo,
    gamma: &DiophantineVector,
    cfg: &HermanConfig,
) -> Result<HermanSolution> {
    let grid = f.grid();
    let dim = grid.dim();
    if gamma.dim() != dim {
        return Err(Error::GridMismatch("rotation vector dimension".into()));
    }
    let c1 = c1_norm(f);
    if c1 > cfg.trust_region {
        return Err(Error::TrustRegion(format!(
            "c1_norm(f) = {c1:.4e} exceeds {:.4e}",
            cfg.trust_region
        )));
    }
    let interp = f.interp();
    let mut lambda = vec![0.0; dim];
    let mut h = TorusDiffeo::identity(grid).with_interp(interp);
    if f.is_identity() {
        return Ok(HermanSolution {
            lambda,
            h,
            residual: 0.0,
            iterations: 0,
            history: vec![0.0],
        });
    }
    let fail = |reason: String, history: &[f64]| Error::HermanFailed {
        reason,
        history: history.to_vec(),
    };
    let mut residual = c0_distance(f, &TorusDiffeo::identity(grid));
    let mut history = vec![residual];
    let mut increases = 0;
    let gv = as_vec2(&gamma.gamma);
    let fi = f.interpolant();
    let mut best = (lambda.clone(), h.clone(), residual, 0);
    for iter in 1..=cfg.max_iter {
        // defect E = f o h - R_{lambda + gamma} o h o R_{-gamma}, and A = (I + Dv(x - gamma))^-1
        let hi = h.interpolant();
        // the rigid shift is taken in Fourier space so it matches the solver's symbol
        let shifted = if h.is_identity() {
            None
        } else {
            Some(from_spectral(&to_spectral(h.field()).shifted(&gv[..dim]), grid)?)
        };
        let mut e = DisplacementField::zeros(grid);
        let mut amat = vec![[[0.0; 2]; 2]; grid.len()];
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            let v = h.field().get(idx);
            let uf = if h.is_identity() {
                f.field().get(idx)
            } else {
                fi.value([x[0] + v[0], x[1] + v[1]])
            };
            let (vs, dvs) = match &shifted {
                None => ([0.0; 2], [[0.0; 2]; 2]),
                Some(s) => (s.get(idx), hi.eval([x[0] - gv[0], x[1] - gv[1]]).1),
            };
            let mut ev = [0.0; 2];
            for c in 0..dim {
                ev[c] = lift(v[c] + uf[c] - lambda[c] - vs[c]);
            }
            e.set(idx, ev);
            amat[idx] = if dim == 1 {
                [[1.0 / (1.0 + dvs[0][0]), 0.0], [0.0, 0.0]]
            } else {
                let (a, b, c, d) = (1.0 + dvs[0][0], dvs[0][1], dvs[1][0], 1.0 + dvs[1][1]);
                let det = a * d - b * c;
                [[d / det, -b / det], [-c / det, a / det]]
            };
        }
        let apply = |m: &[[f64; 2]; 2], v: Vec2| -> Vec2 {
            [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
        };
        let len = grid.len() as f64;
        let mut mean_a = [[0.0; 2]; 2];
        let mut mean_ae = [0.0; 2];
        for (idx, m) in amat.iter().enumerate() {
            let ae = apply(m, e.get(idx));
            for r in 0..2 {
                mean_ae[r] += ae[r] / len;
                for c in 0..2 {
                    mean_a[r][c] += m[r][c] / len;
                }
            }
        }
        let dl = if dim == 1 {
            [mean_ae[0] / mean_a[0][0], 0.0]
        } else {
            let (a, b, c, d) = (mean_a[0][0], mean_a[0][1], mean_a[1][0], mean_a[1][1]);
            let det = a * d - b * c;
            [(d * mean_ae[0] - b * mean_ae[1]) / det, (a * mean_ae[1] - c * mean_ae[0]) / det]
        };
        let y = DisplacementField::zeros(grid).map(|idx, _| {
            let ev = e.get(idx);
            apply(&amat[idx], [ev[0] - dl[0], ev[1] - dl[1]])
        });
        let (_, w) = solve_on_grid(&y, gamma)?;
        for c in 0..dim {
            lambda[c] += dl[c];
        }
        let step = make_diffeo(w)
            .map_err(|err| fail(format!("update left the chart: {err}"), &history))?
            .with_interp(interp);
        h = compose(&h, &step).map_err(|err| fail(format!("h left the chart: {err}"), &history))?;
        if c1_norm(&h) >= 1.0 {
            return Err(fail("h left the chart".into(), &history));
        }
        let r = c0_distance(&herman_map(&lambda, &h, &gamma.gamma)?, f);
        history.push(r);
        if r <= cfg.tol {
            return Ok(HermanSolution {
                lambda,
                h,
                residual: r,
                iterations: iter,
                history,
            });
        }
        let previous = residual;
        if r < best.2 {
            best = (lambda.clone(), h.clone(), r, iter);
        }
        increases = if r > previous { increases + 1 } else { 0 };
        residual = r;
        // at the discretization floor: more steps only add interpolation noise
        if best.2 <= cfg.stall_tol && r > 0.5 * previous {
            let (lambda, h, residual, iterations) = best;
            return Ok(HermanSolution {
                lambda,
                h,
                residual,
                iterations,
                history,
            });
        }
        if increases >= 2 || !r.is_finite() {
            return Err(fail("residual increased twice in a row".into(), &history));
        }
    }
    Err(fail(
        format!("no convergence to {:.1e} in {} iterations", cfg.tol, cfg.max_iter),
        &history,
    ))
}
