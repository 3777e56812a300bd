//! Compares dot tiles the way the `match` subcommand does.
//!
//!     cargo run --example match_reports

use specscan::document::BitMatrix;
use specscan::forensics::match_patterns;

fn main() -> specscan::Result<()> {
    let printed = BitMatrix::parse("110,011")?;
    let cases = [
        ("same tile", printed.clone()),
        ("cyclic shift", printed.shifted(1, 2)),
        ("complement", printed.complement()),
        ("one dot missing", BitMatrix::parse("110,010")?),
        ("finer grid", BitMatrix::parse("111100,001111")?),
        ("other printer", BitMatrix::parse("100,001")?),
    ];
    for (label, other) in cases {
        println!(
            "{label:<16} {other:<14} {:.3}",
            match_patterns(&printed, &other)
        );
    }
    Ok(())
}
