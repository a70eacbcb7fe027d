//! Writes a member of the regression suite as a spectral field file for the CLI.
//!
//! cargo run --release --example suite_input -- 2 1e-3 f.json

use diffeo_commutators::io::{write_json_pretty, FieldJson};
use diffeo_commutators::{suite, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let member: usize = args.next().as_deref().unwrap_or("0").parse()?;
    let amplitude: f64 = args.next().as_deref().unwrap_or("1e-3").parse()?;
    let path = args.next().unwrap_or_else(|| "f.json".into());
    // every member is band-limited, so a small grid stores it exactly
    let field = suite::field(member, amplitude, GridSpec::new(2, 16)?)?;
    let mut json = FieldJson::from_field(&field);
    json.grid = 256;
    write_json_pretty(path.as_ref(), &json)?;
    println!("member {member}, amplitude {amplitude:e}: {} modes -> {path}", json.modes.len());
    Ok(())
}
