//! Periodic grids on T^n (n = 1, 2), real displacement fields sampled on them,
//! and their Fourier-coefficient representation.
//!
//! Node `idx` of a 2D grid sits at `(i0 / N, i1 / N)` with `idx = i0 * N + i1`;
//! the first coordinate varies slowest. Fourier coefficients are normalized so
//! that a field equals `sum_k c_k exp(2 pi i k.x)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Points and vectors are always stored with two slots; only the first `dim` are used.
pub type Vec2 = [f64; 2];

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{n} points per axis; need a power of two >= {MIN_POINTS}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Multi-index of a node.
    pub fn indices(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn flat(&self, i0: usize, i1: usize) -> usize {
        if self.dim == 1 {
            i0
        } else {
            i0 * self.n + i1
        }
    }

    pub fn point(&self, idx: usize) -> Vec2 {
        let [i0, i1] = self.indices(idx);
        let h = self.spacing();
        [i0 as f64 * h, i1 as f64 * h]
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Representative of `v` modulo 1 in (-1/2, 1/2]. Values already in range are returned bitwise.
#[inline]
pub fn lift(v: f64) -> f64 {
    v - (v - 0.5).ceil()
}

/// Signed integer frequency of FFT bin `j`; the Nyquist bin maps to `+n/2`.
#[inline]
pub fn freq(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

#[inline]
pub fn is_nyquist(j: usize, n: usize) -> bool {
    j == n / 2
}

/// Periodic vector-valued grid function `u`; the map it stands for is `x -> x + u(x) mod 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl DisplacementField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim()],
        }
    }

    pub fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("component shape does not match grid".into()));
        }
        Ok(Self { grid, comps })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Vec2) -> Vec2) -> Self {
        let mut field = Self::zeros(grid);
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            field.set(idx, v);
        }
        field
    }

    /// Builds a field from per-node values, computed in parallel.
    pub fn from_par_fn(grid: GridSpec, f: impl Fn(usize) -> Vec2 + Sync + Send) -> Self {
        use rayon::prelude::*;
        let vals: Vec<Vec2> = (0..grid.len()).into_par_iter().map(f).collect();
        let mut field = Self::zeros(grid);
        for (idx, v) in vals.into_iter().enumerate() {
            field.set(idx, v);
        }
        field
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    #[inline]
    pub fn get(&self, idx: usize) -> Vec2 {
        if self.grid.dim() == 1 {
            [self.comps[0][idx], 0.0]
        } else {
            [self.comps[0][idx], self.comps[1][idx]]
        }
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: Vec2) {
        for c in 0..self.grid.dim() {
            self.comps[c][idx] = v[c];
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        for comp in &self.comps {
            if let Some(node) = comp.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { node });
            }
        }
        Ok(())
    }

    /// Sup norm over nodes and components.
    pub fn sup_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    pub fn map(&self, f: impl Fn(usize, Vec2) -> Vec2) -> Self {
        let mut out = Self::zeros(self.grid);
        for idx in 0..self.grid.len() {
            out.set(idx, f(idx, self.get(idx)));
        }
        out
    }

    /// Pointwise `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect())
            .collect();
        Ok(Self {
            grid: self.grid,
            comps,
        })
    }

    /// Spectral partial derivative of component `c` along `axis`.
    pub fn derivative(&self, c: usize, axis: usize) -> Vec<f64> {
        let mut coeffs = fft_forward(self.grid, &self.comps[c]);
        let n = self.grid.n();
        for (idx, z) in coeffs.iter_mut().enumerate() {
            let j = self.grid.indices(idx)[axis];
            if is_nyquist(j, n) {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, 2.0 * PI * freq(j, n) as f64);
            }
        }
        fft_inverse(self.grid, &coeffs)
    }

    /// Centered-difference Jacobian; local, so steep but smooth fields do not ring.
    pub fn jacobian_fd(&self) -> Vec<[[f64; 2]; 2]> {
        let d = self.grid.dim();
        let n = self.grid.n();
        let inv = 0.5 * n as f64;
        (0..self.grid.len())
            .map(|idx| {
                let ij = self.grid.indices(idx);
                let mut m = [[0.0; 2]; 2];
                for axis in 0..d {
                    let (mut up, mut down) = (ij, ij);
                    up[axis] = (ij[axis] + 1) % n;
                    down[axis] = (ij[axis] + n - 1) % n;
                    let (a, b) = (self.get(self.grid.flat(up[0], up[1])), self.get(self.grid.flat(down[0], down[1])));
                    for c in 0..d {
                        m[c][axis] = (a[c] - b[c]) * inv;
                    }
                }
                m
            })
            .collect()
    }

    /// Node-wise Jacobian `Du`, as `[[du0/dx0, du0/dx1], [du1/dx0, du1/dx1]]`.
    pub fn jacobian(&self) -> Vec<[[f64; 2]; 2]> {
        let d = self.grid.dim();
        let mut out = vec![[[0.0; 2]; 2]; self.grid.len()];
        for c in 0..d {
            for axis in 0..d {
                let der = self.derivative(c, axis);
                for (m, v) in out.iter_mut().zip(der) {
                    m[c][axis] = v;
                }
            }
        }
        out
    }
}

/// Fourier coefficients of a real periodic vector field, stored densely in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; grid.dim()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.coeffs[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.coeffs[c]
    }

    /// Integer frequency vector of storage slot `idx`.
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        let n = self.grid.n();
        let [i0, i1] = self.grid.indices(idx);
        if self.grid.dim() == 1 {
            [freq(i0, n), 0]
        } else {
            [freq(i0, n), freq(i1, n)]
        }
    }

    /// True if the slot touches the Nyquist frequency along some axis.
    pub fn touches_nyquist(&self, idx: usize) -> bool {
        let n = self.grid.n();
        let [i0, i1] = self.grid.indices(idx);
        is_nyquist(i0, n) || (self.grid.dim() == 2 && is_nyquist(i1, n))
    }

    /// Storage slot of frequency `k`, if representable on this grid.
    pub fn slot(&self, k: &[i64]) -> Option<usize> {
        let n = self.grid.n() as i64;
        if k.len() != self.grid.dim() {
            return None;
        }
        let mut ij = [0usize; 2];
        for (a, &kj) in k.iter().enumerate() {
            if kj > n / 2 || kj < -(n / 2) {
                return None;
            }
            ij[a] = kj.rem_euclid(n) as usize;
        }
        Some(self.grid.flat(ij[0], ij[1]))
    }

    pub(crate) fn conjugate_slot(&self, idx: usize) -> usize {
        let n = self.grid.n();
        let [i0, i1] = self.grid.indices(idx);
        let neg = |j: usize| (n - j) % n;
        self.grid.flat(neg(i0), if self.grid.dim() == 2 { neg(i1) } else { 0 })
    }

    pub fn get(&self, c: usize, k: &[i64]) -> Option<Complex64> {
        self.slot(k).map(|s| self.coeffs[c][s])
    }

    pub fn set(&mut self, c: usize, k: &[i64], value: Complex64) -> Result<()> {
        let s = self
            .slot(k)
            .ok_or_else(|| Error::GridMismatch(format!("frequency {k:?} beyond Nyquist")))?;
        self.coeffs[c][s] = value;
        Ok(())
    }

    /// Averages each coefficient with the conjugate of its mirror so the field is real.
    pub fn enforce_hermitian(&mut self) {
        for c in 0..self.coeffs.len() {
            let old = self.coeffs[c].clone();
            for idx in 0..old.len() {
                let m = self.conjugate_slot(idx);
                self.coeffs[c][idx] = 0.5 * (old[idx] + old[m].conj());
            }
        }
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for comp in &self.coeffs {
            for idx in 0..comp.len() {
                let m = self.conjugate_slot(idx);
                worst = worst.max((comp[idx] - comp[m].conj()).norm());
            }
        }
        worst
    }

    /// Drops every mode touching the Nyquist frequency.
    pub fn truncate_nyquist(&mut self) {
        for idx in 0..self.grid.len() {
            if self.touches_nyquist(idx) {
                for comp in &mut self.coeffs {
                    comp[idx] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Coefficients of `x -> X(x - delta)`.
    pub fn shifted(&self, delta: &[f64]) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.len() {
            let k = self.wavevector(idx);
            let phase: f64 = (0..self.grid.dim()).map(|a| k[a] as f64 * delta[a]).sum();
            let mult = Complex64::from_polar(1.0, -2.0 * PI * phase);
            for comp in &mut out.coeffs {
                comp[idx] *= if self.touches_nyquist(idx) {
                    Complex64::new(mult.re, 0.0)
                } else {
                    mult
                };
            }
        }
        out
    }

    /// Re-samples the coefficients onto another grid, dropping modes the target cannot hold.
    pub fn resampled(&self, target: GridSpec) -> Result<Self> {
        if target.dim() != self.grid.dim() {
            return Err(Error::GridMismatch("dimension differs".into()));
        }
        let mut out = Self::zeros(target);
        for idx in 0..self.grid.len() {
            let k = self.wavevector(idx);
            if let Some(s) = out.slot(&k[..self.grid.dim()]) {
                for c in 0..self.grid.dim() {
                    out.coeffs[c][s] += self.coeffs[c][idx];
                }
            }
        }
        out.enforce_hermitian();
        Ok(out)
    }
}

/// Forward FFT over all axes, normalized by `1 / N^dim`.
pub fn fft_forward(grid: GridSpec, data: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut buf, false);
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

/// Inverse of [`fft_forward`], returning the real part.
pub fn fft_inverse(grid: GridSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    transform(grid, &mut buf, true);
    buf.into_iter().map(|z| z.re).collect()
}

fn transform(grid: GridSpec, buf: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    if grid.dim() == 1 {
        fft.process(buf);
        return;
    }
    // rows (contiguous along axis 1)
    fft.process(buf);
    // columns
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i1 in 0..n {
        for i0 in 0..n {
            col[i0] = buf[i0 * n + i1];
        }
        fft.process(&mut col);
        for i0 in 0..n {
            buf[i0 * n + i1] = col[i0];
        }
    }
}

pub fn to_spectral(field: &DisplacementField) -> SpectralField {
    let grid = field.grid();
    let coeffs = field
        .components()
        .iter()
        .map(|c| fft_forward(grid, c))
        .collect();
    let mut s = SpectralField { grid, coeffs };
    s.enforce_hermitian();
    s
}

pub fn from_spectral(spec: &SpectralField, grid: GridSpec) -> Result<DisplacementField> {
    let spec = if spec.grid() == grid {
        std::borrow::Cow::Borrowed(spec)
    } else {
        std::borrow::Cow::Owned(spec.resampled(grid)?)
    };
    let comps = spec.coeffs.iter().map(|c| fft_inverse(grid, c)).collect();
    DisplacementField::from_components(grid, comps)
}
