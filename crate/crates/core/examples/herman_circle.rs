//! Writes `f = id + eps sin(2 pi x)` as `R_lambda o [R_gamma, h]` on the circle.

use std::f64::consts::PI;

use diffeo_commutators::cohomology::GOLDEN;
use diffeo_commutators::{
    c0_distance, certify_diophantine, herman_map, herman_solve, make_diffeo, DisplacementField, GridSpec,
    HermanConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1e-3);
    let grid = GridSpec::new(1, 256)?;
    let f = make_diffeo(DisplacementField::from_fn(grid, |x| [eps * (2.0 * PI * x[0]).sin(), 0.0]))?;
    let gamma = certify_diophantine(&[GOLDEN], 2.0, 10_000)?;

    let sol = herman_solve(&f, &gamma, &HermanConfig { tol: 1e-12, ..HermanConfig::default() })?;
    for (m, r) in sol.history.iter().enumerate() {
        println!("iteration {m}: residual {r:.3e}");
    }
    let rebuilt = herman_map(&sol.lambda, &sol.h, &gamma.gamma)?;
    println!("lambda = {:.6e}", sol.lambda[0]);
    println!("c0(H(lambda, h), f) = {:.3e}", c0_distance(&rebuilt, &f));
    println!("{}", serde_json::to_string(&sol.report())?);
    Ok(())
}
