//! A rigid rotation of the circle as the commutator of two Möbius maps.

use diffeo_commutators::grid::lift;
use diffeo_commutators::mobius::{boundary_displacement, fricke_trace, mobius_rotation_commutator, theta_max, DEFAULT_S0};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("largest reachable rotation with s0 = {DEFAULT_S0}: {:.4} turns", theta_max(DEFAULT_S0));
    for theta in [-0.05, -0.01, 1e-4, 0.03, 0.05] {
        let pair = mobius_rotation_commutator(theta)?;
        let c = pair.commutator();
        let err = (0..1000)
            .map(|i| lift(boundary_displacement(&c, i as f64 / 1000.0) - theta).abs())
            .fold(0.0, f64::max);
        let fricke = (c.trace() - fricke_trace(&pair.a, &pair.b)).abs();
        println!("theta = {theta:+.4}: boundary error {err:.2e}, Fricke defect {fricke:.2e}");
    }
    println!("{}", serde_json::to_string_pretty(&mobius_rotation_commutator(0.02)?)?);
    Ok(())
}
