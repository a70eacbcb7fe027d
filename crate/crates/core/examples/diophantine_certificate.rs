//! Empirical small-divisor certificate for a rotation number.
//!
//! cargo run --release --example diophantine_certificate -- 0.6180339887498949 2 10000

use diffeo_commutators::cohomology::GOLDEN;
use diffeo_commutators::certify_diophantine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let gamma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(GOLDEN);
    let tau: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2.0);
    let k_scan: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10_000);

    match certify_diophantine(&[gamma], tau, k_scan) {
        Ok(cert) => println!("{}", serde_json::to_string_pretty(&cert)?),
        Err(e) => println!("rejected: {e}"),
    }
    // rationals fail at their denominator
    if let Err(e) = certify_diophantine(&[0.375], tau, k_scan) {
        println!("0.375 rejected: {e}");
    }
    Ok(())
}
