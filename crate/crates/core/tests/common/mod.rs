#![allow(dead_code)]

use std::f64::consts::PI;

use diffeo_commutators::bump::TaperProfile;
use diffeo_commutators::cohomology::golden;
use diffeo_commutators::{c1_norm, certify_diophantine, make_diffeo, DiophantineVector, DisplacementField, GridSpec, TorusDiffeo};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Six random Fourier modes with `|k|_inf <= 3`, unit scale.
pub fn random_modes(seed: u64) -> Vec<([f64; 2], f64, f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..6)
        .map(|_| {
            let k = [rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64];
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0..2))
        })
        .collect()
}

pub fn trig_field(grid: GridSpec, seed: u64) -> DisplacementField {
    let modes = random_modes(seed);
    DisplacementField::from_fn(grid, |x| {
        let mut v = [0.0; 2];
        for &(k, a, phase, comp) in &modes {
            v[comp] += a * (2.0 * PI * (k[0] * x[0] + k[1] * x[1] + phase)).sin();
        }
        v
    })
}

/// Rescales `field` so the resulting map has the requested `c1_norm`.
pub fn with_c1(field: &DisplacementField, c1: f64) -> TorusDiffeo {
    let probe = 1e-6;
    let unit = c1_norm(&make_diffeo(field.map(|_, v| [probe * v[0], probe * v[1]])).unwrap()) / probe;
    let s = c1 / unit;
    make_diffeo(field.map(|_, v| [s * v[0], s * v[1]])).unwrap()
}

/// Random trust-region map of T^2.
pub fn torus_input(grid: GridSpec, seed: u64, c1: f64) -> TorusDiffeo {
    with_c1(&trig_field(grid, seed), c1)
}

/// Taper used for annulus inputs: plateau `[0.45, 0.55]`, support `[0.25, 0.75]`.
pub fn annulus_taper() -> TaperProfile {
    TaperProfile::new(0.45, 0.55, 0.2).unwrap()
}

/// Random compactly supported map of the annulus.
pub fn annulus_input(grid: GridSpec, seed: u64, c1: f64) -> TorusDiffeo {
    let taper = annulus_taper();
    let raw = trig_field(grid, seed);
    let field = raw.map(|idx, v| {
        let b = taper.chi(grid.point(idx)[0]);
        [b * v[0], b * v[1]]
    });
    with_c1(&field, c1).masked(taper.support())
}

pub fn gamma(dim: usize) -> DiophantineVector {
    certify_diophantine(&golden(dim), 2.0, 10_000).unwrap()
}
