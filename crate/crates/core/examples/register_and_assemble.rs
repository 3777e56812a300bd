//! Scans with feed jitter, registers the bands against Green and writes the
//! cube plus a false-color composite.
//!
//!     cargo run --example register_and_assemble -- [out_dir]

use specscan::cube::{
    assemble_cube, default_reference_index, register_bands, write_composite_rgb, write_cube,
};
use specscan::document::{build_test_document, BitMatrix};
use specscan::light::{DriverVariant, LightSource};
use specscan::scanner::{scan_sequence, ScanConfig};
use specscan::spectral::{flat_sensor, led_table};

fn main() -> specscan::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("specscan-cube"), Into::into);
    std::fs::create_dir_all(&out)?;

    let doc = build_test_document(600, 800, 64, 48, &BitMatrix::parse("110,011")?)?;
    let source = LightSource::new(DriverVariant::HighVoltage, led_table())?;
    let config = ScanConfig {
        noise_sigma: 0.01,
        max_feed_offset_px: 5,
        rng_seed: 7,
        ..ScanConfig::default()
    };
    let bands = scan_sequence(&doc, &source, &flat_sensor(doc.grid()), &config)?;
    let reference = default_reference_index(&bands);
    let offsets = register_bands(&bands, reference, 2 * config.max_feed_offset_px)?;
    for (band, found) in bands.iter().zip(&offsets) {
        println!(
            "{:<11} injected {:?} recovered {:?}",
            band.band_name, band.true_offset_px, found
        );
    }

    let assembled = assemble_cube(&bands, &offsets)?;
    let cube = &assembled.cube;
    println!(
        "cube {}x{}x{} cropped at {:?}",
        cube.width(),
        cube.height(),
        cube.band_count(),
        assembled.crop_origin
    );
    write_cube(cube, out.join("page.msqb"))?;
    write_composite_rgb(cube, 0, 3, 5, out.join("composite.ppm"))?;
    println!("wrote {}", out.display());
    Ok(())
}
