//! Diophantine rotation vectors and the twisted-difference equation
//! `Y = lambda + X o R_{-gamma} - X`, solved mode by mode in Fourier space.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{from_spectral, DisplacementField, SpectralField};

pub const DEFAULT_FLOOR: f64 = 1e-6;
pub const MIN_SCAN: u64 = 1000;

/// Fractional part of the golden mean.
pub const GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Fractional part of the silver mean.
pub const SILVER: f64 = 0.414_213_562_373_095_1;

/// Classical constant-type rotation vector of the given dimension.
pub fn golden(dim: usize) -> Vec<f64> {
    [GOLDEN, SILVER][..dim].to_vec()
}

/// A rotation vector together with an empirically certified small-divisor bound
/// `|1 - exp(2 pi i k.gamma)| >= c_emp / |k|^tau` for `1 <= |k|_inf <= k_scan`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineVector {
    pub gamma: Vec<f64>,
    pub tau: f64,
    #[serde(rename = "C_emp")]
    pub c_emp: f64,
    #[serde(rename = "K_scan")]
    pub k_scan: u64,
    pub worst_k: Vec<i64>,
}

impl DiophantineVector {
    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    /// Lower bound certified at frequency `k`.
    pub fn bound(&self, k: &[i64]) -> f64 {
        let kinf = k.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
        self.c_emp / kinf.powf(self.tau)
    }
}

/// `|1 - exp(2 pi i s)|` computed from the distance of `s` to the nearest integer.
#[inline]
fn divisor_modulus(s: f64) -> f64 {
    let r = s - s.round();
    2.0 * (PI * r).sin().abs()
}

pub fn certify_diophantine(gamma: &[f64], tau: f64, k_scan: u64) -> Result<DiophantineVector> {
    certify_with_floor(gamma, tau, k_scan, DEFAULT_FLOOR)
}

/// Brute-force scan over a half-space of frequencies (`k` and `-k` share a divisor).
pub fn certify_with_floor(
    gamma: &[f64],
    tau: f64,
    k_scan: u64,
    floor: f64,
) -> Result<DiophantineVector> {
    if gamma.is_empty() || gamma.len() > 2 {
        return Err(Error::Input(format!("rotation vector of length {}", gamma.len())));
    }
    if gamma.iter().any(|g| !g.is_finite()) || !tau.is_finite() || tau < 0.0 {
        return Err(Error::Input("non-finite rotation vector or exponent".into()));
    }
    if k_scan < MIN_SCAN {
        return Err(Error::Input(format!("scan radius {k_scan} below {MIN_SCAN}")));
    }
    let kmax = k_scan as i64;
    let score = |k: [i64; 2]| -> f64 {
        let s = k[0] as f64 * gamma[0] + if gamma.len() == 2 { k[1] as f64 * gamma[1] } else { 0.0 };
        let kinf = k[0].unsigned_abs().max(k[1].unsigned_abs()) as f64;
        divisor_modulus(s) * kinf.powf(tau)
    };
    let better = |a: (f64, [i64; 2]), b: (f64, [i64; 2])| {
        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let start = (f64::INFINITY, [0, 0]);
    let (c_emp, worst) = if gamma.len() == 1 {
        (1..=kmax)
            .into_par_iter()
            .map(|k| (score([k, 0]), [k, 0]))
            .reduce(|| start, better)
    } else {
        let first = (1..=kmax)
            .into_par_iter()
            .map(|k1| (score([0, k1]), [0, k1]))
            .reduce(|| start, better);
        let rest = (1..=kmax)
            .into_par_iter()
            .map(|k0| {
                (-kmax..=kmax)
                    .map(|k1| (score([k0, k1]), [k0, k1]))
                    .fold(start, better)
            })
            .reduce(|| start, better);
        better(first, rest)
    };
    let worst_k = worst[..gamma.len()].to_vec();
    if !(c_emp >= floor) {
        return Err(Error::PoorRotation {
            c_emp,
            floor,
            worst_k,
        });
    }
    Ok(DiophantineVector {
        gamma: gamma.to_vec(),
        tau,
        c_emp,
        k_scan,
        worst_k,
    })
}

#[derive(Debug, Clone)]
pub struct CohomologySolution {
    pub lambda: Vec<f64>,
    /// Zero-mean solution.
    pub x: SpectralField,
    /// Grid sup-norm of `Y - (lambda + X o R_{-gamma} - X)`.
    pub residual: f64,
}

fn phase(k: [i64; 2], gamma: &[f64]) -> f64 {
    gamma.iter().enumerate().map(|(a, g)| k[a] as f64 * g).sum()
}

/// Solves `Y = lambda + X o R_{-gamma} - X`; Nyquist modes of `X` are set to zero.
pub fn solve_cohomological(y: &SpectralField, gamma: &DiophantineVector) -> Result<CohomologySolution> {
    let grid = y.grid();
    if gamma.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "rotation vector of length {} on a {}-dimensional grid",
            gamma.dim(),
            grid.dim()
        )));
    }
    let dim = grid.dim();
    let mut x = SpectralField::zeros(grid);
    let mut lambda = vec![0.0; dim];
    for idx in 0..grid.len() {
        let k = y.wavevector(idx);
        if k == [0, 0] {
            for (c, l) in lambda.iter_mut().enumerate() {
                *l = y.component(c)[idx].re;
            }
            continue;
        }
        if y.touches_nyquist(idx) {
            continue;
        }
        let d = Complex64::from_polar(1.0, -2.0 * PI * phase(k, &gamma.gamma)) - 1.0;
        let modulus = divisor_modulus(phase(k, &gamma.gamma));
        let bound = gamma.bound(&k[..dim]) / 2.0;
        if modulus < bound {
            return Err(Error::CertificationBreach {
                k: k[..dim].to_vec(),
                modulus,
                bound,
            });
        }
        for c in 0..dim {
            x.component_mut(c)[idx] = y.component(c)[idx] / d;
        }
    }
    let back = twisted_difference(&x, &lambda, &gamma.gamma);
    let mut diff = y.clone();
    for c in 0..dim {
        for (z, b) in diff.component_mut(c).iter_mut().zip(back.component(c)) {
            *z -= b;
        }
    }
    let residual = from_spectral(&diff, grid)?.sup_norm();
    Ok(CohomologySolution {
        lambda,
        x,
        residual,
    })
}

/// `lambda + X o R_{-gamma} - X` by phase multiplication.
pub fn twisted_difference(x: &SpectralField, lambda: &[f64], gamma: &[f64]) -> SpectralField {
    let mut out = x.shifted(gamma);
    for c in 0..x.grid().dim() {
        for (o, v) in out.component_mut(c).iter_mut().zip(x.component(c)) {
            *o -= v;
        }
        out.component_mut(c)[0] += Complex64::new(lambda.get(c).copied().unwrap_or(0.0), 0.0);
    }
    out
}

/// Grid-space convenience wrapper around [`solve_cohomological`].
pub fn solve_on_grid(
    y: &DisplacementField,
    gamma: &DiophantineVector,
) -> Result<(Vec<f64>, DisplacementField)> {
    let sol = solve_cohomological(&crate::grid::to_spectral(y), gamma)?;
    let x = from_spectral(&sol.x, y.grid())?;
    Ok((sol.lambda, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{to_spectral, GridSpec};

    fn golden1() -> DiophantineVector {
        certify_diophantine(&[GOLDEN], 2.0, 1000).unwrap()
    }

    #[test]
    fn half_is_rejected_at_two() {
        match certify_diophantine(&[0.5], 2.0, 1000) {
            Err(Error::PoorRotation { c_emp, worst_k, .. }) => {
                assert_eq!(c_emp, 0.0);
                assert_eq!(worst_k, vec![2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scan_radius_enforced() {
        assert!(certify_diophantine(&[GOLDEN], 2.0, 10).is_err());
    }

    #[test]
    fn golden_constant_matches_scan() {
        let d = golden1();
        // independent oracle: complex exponentials
        let oracle = (1..=1000i64)
            .map(|k| {
                let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * GOLDEN);
                (Complex64::new(1.0, 0.0) - z).norm() * (k as f64).powi(2)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((d.c_emp - oracle).abs() < 1e-9 * oracle);
    }

    #[test]
    fn zero_input() {
        let grid = GridSpec::new(1, 32).unwrap();
        let sol = solve_cohomological(&SpectralField::zeros(grid), &golden1()).unwrap();
        assert_eq!(sol.lambda, vec![0.0]);
        assert!(sol.x.component(0).iter().all(|z| z.norm() == 0.0));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn single_mode_formula() {
        let grid = GridSpec::new(1, 64).unwrap();
        let y = to_spectral(&DisplacementField::from_fn(grid, |x| [(2.0 * PI * x[0]).sin(), 0.0]));
        let sol = solve_cohomological(&y, &golden1()).unwrap();
        let d = Complex64::from_polar(1.0, -2.0 * PI * GOLDEN) - 1.0;
        let want = Complex64::new(0.0, -0.5) / d;
        assert!((sol.x.get(0, &[1]).unwrap() - want).norm() < 1e-14);
        assert!((sol.x.get(0, &[-1]).unwrap() - want.conj()).norm() < 1e-14);
        assert!(sol.lambda[0].abs() < 1e-16);
    }

    #[test]
    fn manufactured_round_trip() {
        let grid = GridSpec::new(1, 256).unwrap();
        let g = golden1();
        let xs = to_spectral(&DisplacementField::from_fn(grid, |x| [(2.0 * PI * x[0]).sin(), 0.0]));
        let y = twisted_difference(&xs, &[0.003], &g.gamma);
        let sol = solve_cohomological(&y, &g).unwrap();
        assert!((sol.lambda[0] - 0.003).abs() < 1e-15);
        assert!(sol.residual < 1e-11);
        let a = from_spectral(&sol.x, grid).unwrap();
        let b = from_spectral(&xs, grid).unwrap();
        assert!(crate::diffeo::field_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn twisted_single_mode() {
        let grid = GridSpec::new(1, 32).unwrap();
        let mut x = SpectralField::zeros(grid);
        x.set(0, &[1], Complex64::new(0.25, 0.5)).unwrap();
        let out = twisted_difference(&x, &[0.0], &[GOLDEN]);
        let want = Complex64::new(0.25, 0.5) * (Complex64::from_polar(1.0, -2.0 * PI * GOLDEN) - 1.0);
        assert!((out.get(0, &[1]).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn two_dimensional_certificate() {
        let d = certify_diophantine(&golden(2), 3.0, 1000).unwrap();
        assert!(d.c_emp > 0.0);
        assert_eq!(d.worst_k.len(), 2);
    }

    #[test]
    fn certificate_json_keys() {
        let v = serde_json::to_value(golden1()).unwrap();
        for key in ["gamma", "tau", "C_emp", "K_scan", "worst_k"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
