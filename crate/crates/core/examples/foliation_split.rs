//! Splits a compactly supported map of the annulus `[0, 1] x T^1` into three
//! factors, factor `i` preserving the leaves of foliation `i`.

use std::f64::consts::PI;

use diffeo_commutators::bump::TaperProfile;
use diffeo_commutators::foliation::{foliation_factors, leaf_preservation_error, FoliationSpec};
use diffeo_commutators::{c0_distance, compose, make_diffeo, DisplacementField, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::new(2, 256)?;
    let bump = TaperProfile::new(0.45, 0.55, 0.2)?;
    let f = make_diffeo(DisplacementField::from_fn(grid, |p| {
        let b = bump.chi(p[0]);
        [
            1e-3 * b * (2.0 * PI * p[1]).sin(),
            1e-3 * b * (2.0 * PI * (p[0] + p[1])).cos(),
        ]
    }))?
    .masked(bump.support());

    let c = 0.04;
    let dec = foliation_factors(&f, c, 0.02)?;
    let [g1, g2, g3] = &dec.factors;
    let rebuilt = compose(g1, &compose(g2, g3)?)?;
    println!("c0(g1 o g2 o g3, f) = {:.3e}", c0_distance(&rebuilt, &f));
    for (i, g) in dec.factors.iter().enumerate() {
        let spec = FoliationSpec::new(i + 1, c)?;
        println!(
            "{}: leaf preservation error {:.3e}, support {:?}",
            serde_json::to_string(&spec)?,
            leaf_preservation_error(g, &spec),
            g.support()
        );
    }
    Ok(())
}
