//! Finds the tracking-dot lattice in the Royal Blue band and recovers its
//! tile.
//!
//!     cargo run --example yellow_dots

use specscan::document::{build_test_document, BitMatrix};
use specscan::forensics::{
    detect_dots, estimate_separation, extract_tile, DetectParams, SeparationParams,
};
use specscan::light::{DriverVariant, LightSource};
use specscan::scanner::{scan_band, ScanConfig};
use specscan::spectral::{flat_sensor, led_table};

fn main() -> specscan::Result<()> {
    let tile = BitMatrix::parse("1001,0110,1000")?;
    let doc = build_test_document(600, 800, 96, 72, &tile)?;
    let sensor = flat_sensor(doc.grid());
    let source = LightSource::new(DriverVariant::HighVoltage, led_table())?;
    let config = ScanConfig {
        noise_sigma: 0.01,
        rng_seed: 11,
        ..ScanConfig::default()
    };

    for position in [1u8, 6] {
        let [_, lit] = source.rotate_to(position)?;
        let illum = lit.active_illumination(doc.grid()).expect("LED fitted");
        let band = scan_band(&doc, &illum, &sensor, &config, 0)?;
        let dots = detect_dots(&band.image, &band.band_name, &DetectParams::default())?;
        println!(
            "{:<10} {} of {} stamped dots detected",
            illum.led.name,
            dots.len(),
            doc.dots().len()
        );
        if dots.len() < 8 {
            continue;
        }
        let sep = estimate_separation(&dots, &SeparationParams::default())?;
        let pattern = extract_tile(&dots, sep.hps_px, sep.vps_px, (tile.rows(), tile.cols()))?;
        println!(
            "  HPS {:.2} px, VPS {:.2} px, anchor ({:.2}, {:.2})",
            sep.hps_px, sep.vps_px, pattern.anchor.0, pattern.anchor.1
        );
        for row in pattern.tile.to_rows() {
            println!(
                "  {}",
                row.iter()
                    .map(|b| if *b == 1 { 'o' } else { '.' })
                    .collect::<String>()
            );
        }
        println!("  matches printed tile: {}", pattern.tile == tile);
    }
    Ok(())
}
