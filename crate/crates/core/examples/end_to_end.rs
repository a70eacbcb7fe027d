//! Factors a regression-suite map into twelve commutator pairs and verifies the
//! product.
//!
//! cargo run --release --example end_to_end -- <member> <amplitude> <grid>

use std::time::Instant;

use diffeo_commutators::pipeline::{decompose, verify, PipelineConfig};
use diffeo_commutators::{suite, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let member: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let amplitude: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e-3);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(256);

    let grid = GridSpec::new(2, n)?;
    let f = suite::diffeo(member, amplitude, grid)?;
    let cfg = PipelineConfig { grid: n, ..PipelineConfig::default() };
    let start = Instant::now();
    let (list, report) = decompose(&f, &cfg)?;
    println!("decomposed in {:?}", start.elapsed());
    for s in &report.stages {
        println!("  {:<18} chart {:?} foliation {:?}: {:.3e}", s.stage, s.chart, s.foliation, s.residual);
    }
    for p in &list.pairs {
        println!("  pair {:?}, trivial: {}", p.provenance, p.is_trivial());
    }
    println!(
        "m = {} (bounds: {} for dimension 2, {} from the cover, {} per chart)",
        report.m, report.bounds.dimension_bound, report.bounds.cover_bound, report.bounds.per_chart
    );
    println!("residual c0 = {:.3e}, c1 = {:.3e}", report.verification.residual_c0, report.verification.residual_c1);
    let swapped = verify(&f, &list.swapped(0, 1))?;
    println!("with the first two pairs swapped: c0 = {:.3e}", swapped.residual_c0);
    Ok(())
}
