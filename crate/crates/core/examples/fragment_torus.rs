//! Splits a map of T^2 into two factors, each supported in one annulus chart.

use std::f64::consts::PI;

use diffeo_commutators::fragmentation::{fragment, AnnulusCover, PartitionOfUnity};
use diffeo_commutators::{c0_distance, c1_norm, compose, make_diffeo, DisplacementField, GridSpec, TorusDiffeo};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::new(2, 256)?;
    let f = make_diffeo(DisplacementField::from_fn(grid, |x| {
        [
            2e-3 * (2.0 * PI * (x[0] + x[1])).sin(),
            1e-3 * (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).sin(),
        ]
    }))?;
    let (cover, pou) = (AnnulusCover::default(), PartitionOfUnity::default());
    let (f1, f2) = fragment(&f, &cover, &pou)?;

    println!("c1_norm(f) = {:.3e}", c1_norm(&f));
    println!("reconstruction c0(f1 o f2, f) = {:.3e}", c0_distance(&compose(&f1, &f2)?, &f));
    for (c, part) in [&f1, &f2].into_iter().enumerate() {
        let inside = part.first_node_outside(&pou.support(c)).is_none();
        println!("factor {}: support {:?}, inside chart: {inside}", c + 1, part.support());
    }
    let (a, b) = fragment(&TorusDiffeo::identity(grid), &cover, &pou)?;
    println!("identity fragments to identities: {}", a.is_identity() && b.is_identity());
    Ok(())
}
