//! Off-grid evaluation of periodic grid fields.
//!
//! The spline variants interpolate node values with periodic odd-degree
//! B-splines; coefficients come from dividing by the B-spline symbol in
//! Fourier space. Evaluation touches `(p + 1)^dim` coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{fft_forward, fft_inverse, is_nyquist, DisplacementField, GridSpec, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interp {
    /// Periodic cubic spline, fourth order.
    #[default]
    CubicSpline,
    /// Periodic quintic spline, sixth order.
    QuinticSpline,
    /// Trigonometric interpolation; exact for band-limited fields but O(N^dim) per point.
    Spectral,
}

impl Interp {
    fn degree(self) -> Option<usize> {
        match self {
            Interp::CubicSpline => Some(3),
            Interp::QuinticSpline => Some(5),
            Interp::Spectral => None,
        }
    }
}

/// Values `M_p(u + j)`, `j = 0..=p`, of the cardinal B-spline supported on `[0, p + 1]`.
fn bspline_weights(p: usize, u: f64, out: &mut [f64]) {
    out[0] = 1.0;
    for d in 1..=p {
        out[d] = 0.0;
        // descending j so out[j - 1] still holds the degree d - 1 value
        for j in (0..=d).rev() {
            let here = if j < d { out[j] } else { 0.0 };
            let lower = if j > 0 { out[j - 1] } else { 0.0 };
            let jf = j as f64;
            out[j] = ((u + jf) * here + (d as f64 + 1.0 - u - jf) * lower) / d as f64;
        }
    }
}

/// Weights and derivative weights for degree `p` at fractional offset `u`.
fn weights_with_derivative(p: usize, u: f64) -> ([f64; 8], [f64; 8]) {
    let mut w = [0.0; 8];
    let mut lower = [0.0; 8];
    bspline_weights(p - 1, u, &mut lower);
    bspline_weights(p, u, &mut w);
    let mut dw = [0.0; 8];
    for j in 0..=p {
        let a = if j < p { lower[j] } else { 0.0 };
        let b = if j > 0 { lower[j - 1] } else { 0.0 };
        dw[j] = a - b;
    }
    (w, dw)
}

fn symbol(p: usize, n: usize) -> Vec<f64> {
    let mut at_ints = [0.0; 8];
    bspline_weights(p, 0.0, &mut at_ints);
    let half = p.div_ceil(2);
    (0..n)
        .map(|j| {
            let mut s = at_ints[half];
            for m in 1..half {
                s += 2.0 * at_ints[half + m] * (2.0 * PI * (j * m) as f64 / n as f64).cos();
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Interpolant {
    grid: GridSpec,
    kind: Interp,
    /// B-spline coefficients (spline kinds) or Fourier coefficients (spectral).
    coeffs: Vec<Vec<f64>>,
    spectral: Vec<Vec<Complex64>>,
}

impl Interpolant {
    pub fn new(field: &DisplacementField, kind: Interp) -> Self {
        let grid = field.grid();
        let n = grid.n();
        match kind.degree() {
            Some(p) => {
                let sym = symbol(p, n);
                let coeffs = field
                    .components()
                    .iter()
                    .map(|comp| {
                        if comp.iter().all(|&v| v == 0.0) {
                            return vec![0.0; comp.len()];
                        }
                        let mut hat = fft_forward(grid, comp);
                        for (idx, z) in hat.iter_mut().enumerate() {
                            let [i0, i1] = grid.indices(idx);
                            let mut s = sym[i0];
                            if grid.dim() == 2 {
                                s *= sym[i1];
                            }
                            *z /= s;
                        }
                        fft_inverse(grid, &hat)
                    })
                    .collect();
                Self {
                    grid,
                    kind,
                    coeffs,
                    spectral: Vec::new(),
                }
            }
            None => {
                let spectral = field
                    .components()
                    .iter()
                    .map(|comp| fft_forward(grid, comp))
                    .collect();
                Self {
                    grid,
                    kind,
                    coeffs: Vec::new(),
                    spectral,
                }
            }
        }
    }

    pub fn kind(&self) -> Interp {
        self.kind
    }

    pub fn value(&self, x: Vec2) -> Vec2 {
        self.eval(x).0
    }

    /// Value and Jacobian (`jac[c][axis]`) at an arbitrary point.
    pub fn eval(&self, x: Vec2) -> (Vec2, [[f64; 2]; 2]) {
        match self.kind.degree() {
            Some(p) => self.eval_spline(p, x),
            None => self.eval_spectral(x),
        }
    }

    fn eval_spline(&self, p: usize, x: Vec2) -> (Vec2, [[f64; 2]; 2]) {
        let n = self.grid.n();
        let nf = n as f64;
        let dim = self.grid.dim();
        let half = p.div_ceil(2);
        let mut base = [0usize; 2];
        let mut w = [[0.0; 8]; 2];
        let mut dw = [[0.0; 8]; 2];
        for a in 0..dim {
            let t = (x[a] - x[a].floor()) * nf;
            let i = t.floor();
            let u = t - i;
            base[a] = i as usize + half + n;
            let (wa, dwa) = weights_with_derivative(p, u);
            w[a] = wa;
            dw[a] = dwa;
        }
        let mut val = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        if dim == 1 {
            for (c, coef) in self.coeffs.iter().enumerate() {
                let (mut v, mut d) = (0.0, 0.0);
                for j in 0..=p {
                    let cm = coef[(base[0] - j) % n];
                    v += w[0][j] * cm;
                    d += dw[0][j] * cm;
                }
                val[c] = v;
                jac[c][0] = d * nf;
            }
        } else {
            for (c, coef) in self.coeffs.iter().enumerate() {
                let (mut v, mut d0, mut d1) = (0.0, 0.0, 0.0);
                for j0 in 0..=p {
                    let row = ((base[0] - j0) % n) * n;
                    let (mut rv, mut rd) = (0.0, 0.0);
                    for j1 in 0..=p {
                        let cm = coef[row + (base[1] - j1) % n];
                        rv += w[1][j1] * cm;
                        rd += dw[1][j1] * cm;
                    }
                    v += w[0][j0] * rv;
                    d0 += dw[0][j0] * rv;
                    d1 += w[0][j0] * rd;
                }
                val[c] = v;
                jac[c][0] = d0 * nf;
                jac[c][1] = d1 * nf;
            }
        }
        (val, jac)
    }

    fn eval_spectral(&self, x: Vec2) -> (Vec2, [[f64; 2]; 2]) {
        let n = self.grid.n();
        let dim = self.grid.dim();
        let mut val = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        let phases: Vec<Vec<Complex64>> = (0..dim)
            .map(|a| {
                (0..n)
                    .map(|j| Complex64::from_polar(1.0, 2.0 * PI * crate::grid::freq(j, n) as f64 * x[a]))
                    .collect()
            })
            .collect();
        for (c, coef) in self.spectral.iter().enumerate() {
            let mut v = Complex64::new(0.0, 0.0);
            let mut d = [Complex64::new(0.0, 0.0); 2];
            for idx in 0..self.grid.len() {
                let [i0, i1] = self.grid.indices(idx);
                let e = if dim == 1 {
                    phases[0][i0]
                } else {
                    phases[0][i0] * phases[1][i1]
                };
                let term = coef[idx] * e;
                v += term;
                let ks = [i0, i1];
                for a in 0..dim {
                    if !is_nyquist(ks[a], n) {
                        let k = crate::grid::freq(ks[a], n) as f64;
                        d[a] += term * Complex64::new(0.0, 2.0 * PI * k);
                    }
                }
            }
            val[c] = v.re;
            for a in 0..dim {
                jac[c][a] = d[a].re;
            }
        }
        (val, jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_partition_of_unity() {
        for p in [3, 5] {
            for u in [0.0, 0.25, 0.5, 0.9] {
                let (w, dw) = weights_with_derivative(p, u);
                let s: f64 = w[..=p].iter().sum();
                let ds: f64 = dw[..=p].iter().sum();
                assert!((s - 1.0).abs() < 1e-14, "p={p} u={u} s={s}");
                assert!(ds.abs() < 1e-14);
            }
        }
        let (w, _) = weights_with_derivative(3, 0.0);
        assert!((w[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((w[2] - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn reproduces_node_values() {
        let grid = GridSpec::new(2, 32).unwrap();
        let f = DisplacementField::from_fn(grid, |x| {
            [(2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos(), x[1] * (1.0 - x[1])]
        });
        for kind in [Interp::CubicSpline, Interp::QuinticSpline, Interp::Spectral] {
            let it = Interpolant::new(&f, kind);
            for idx in (0..grid.len()).step_by(37) {
                let v = it.value(grid.point(idx));
                let want = f.get(idx);
                assert!((v[0] - want[0]).abs() < 1e-12 && (v[1] - want[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convergence_orders() {
        let exact = |x: f64| (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * x).cos();
        let err = |n: usize, kind: Interp| {
            let grid = GridSpec::new(1, n).unwrap();
            let f = DisplacementField::from_fn(grid, |x| [exact(x[0]), 0.0]);
            let it = Interpolant::new(&f, kind);
            (0..997)
                .map(|i| {
                    let x = (i as f64 + 0.37) / 997.0;
                    (it.value([x, 0.0])[0] - exact(x)).abs()
                })
                .fold(0.0, f64::max)
        };
        let r3 = err(32, Interp::CubicSpline) / err(64, Interp::CubicSpline);
        let r5 = err(32, Interp::QuinticSpline) / err(64, Interp::QuinticSpline);
        assert!(r3 > 14.0, "cubic ratio {r3}");
        assert!(r5 > 55.0, "quintic ratio {r5}");
        assert!(err(32, Interp::Spectral) < 1e-13);
    }

    #[test]
    fn gradient_matches_analytic() {
        let grid = GridSpec::new(2, 64).unwrap();
        let f = DisplacementField::from_fn(grid, |x| [(2.0 * PI * (x[0] - x[1])).sin(), 0.0]);
        let it = Interpolant::new(&f, Interp::QuinticSpline);
        let x = [0.313, 0.777];
        let (_, jac) = it.eval(x);
        let c = 2.0 * PI * (2.0 * PI * (x[0] - x[1])).cos();
        assert!((jac[0][0] - c).abs() < 1e-6);
        assert!((jac[0][1] + c).abs() < 1e-6);
    }
}
