//! A leaf-preserving map of the annulus written as two commutators: a family of
//! Möbius rotation brackets and a family of Herman brackets.

use std::f64::consts::PI;

use diffeo_commutators::bump::TaperProfile;
use diffeo_commutators::cohomology::GOLDEN;
use diffeo_commutators::interp::Interp;
use diffeo_commutators::leafwise::{decompose_leafwise, LeafwiseConfig};
use diffeo_commutators::{c0_distance, certify_diophantine, commutator, compose, DisplacementField, GridSpec, TorusDiffeo};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::new(2, 256)?;
    let bump = TaperProfile::new(0.4, 0.6, 0.1)?;
    // leaf at height b: rotation by 1e-3 chi(b) plus a small wobble
    let f = TorusDiffeo::structured(
        DisplacementField::from_fn(grid, |p| {
            let chi = bump.chi(p[0]);
            [0.0, chi * (1e-3 + 2e-3 * (2.0 * PI * p[1]).sin())]
        }),
        Interp::default(),
    )?
    .masked(bump.support());

    let gamma = certify_diophantine(&[GOLDEN], 2.0, 10_000)?;
    let cfg = LeafwiseConfig::default();
    let dec = decompose_leafwise(&f, &gamma, &cfg)?;
    println!(
        "leaf rotations in [{:.3e}, {:.3e}], worst Herman residual {:.3e}",
        dec.herman.lambda.iter().copied().fold(f64::INFINITY, f64::min),
        dec.herman.lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        dec.herman.worst_residual()
    );
    let [(ga, ha), (gb, hb)] = dec.pairs(None)?;
    let product = compose(&commutator(&ga, &ha)?, &commutator(&gb, &hb)?)?;
    println!("c0([g1, h1] o [g2, h2], f) = {:.3e}", c0_distance(&product, &f));
    Ok(())
}
