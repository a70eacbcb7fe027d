//! Finite-difference stability of every factor as the input moves along a fixed
//! direction, at the identity and at a suite member.

use diffeo_commutators::pipeline::{smoothness_probe, PipelineConfig, PROBE_DELTAS, PROBE_GRID};
use diffeo_commutators::{suite, GridSpec, TorusDiffeo};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::new(2, PROBE_GRID)?;
    let cfg = PipelineConfig { grid: PROBE_GRID, ..PipelineConfig::default() };
    let w = suite::probe_direction(grid);
    for (name, f) in [("identity", TorusDiffeo::identity(grid)), ("member 1", suite::diffeo(1, 5e-4, grid)?)] {
        let table = smoothness_probe(&f, &w, &PROBE_DELTAS, &cfg)?;
        println!("{name}:");
        for (d, row) in table.deltas.iter().zip(&table.ratios) {
            let (lo, hi) = row.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
            println!("  delta {d:.2e}: ratios in [{lo:.4e}, {hi:.4e}]");
        }
        println!("  drift {:?}, stable: {}", table.drift, table.stable);
    }
    Ok(())
}
