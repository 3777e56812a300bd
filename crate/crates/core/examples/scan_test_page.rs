//! Scans the synthetic test page under all six LEDs and writes one PGM per
//! band.
//!
//!     cargo run --example scan_test_page -- [out_dir]

use specscan::document::{build_test_document, logo_regions, BitMatrix};
use specscan::light::{DriverVariant, LightSource};
use specscan::scanner::{scan_sequence, ScanConfig};
use specscan::spectral::{flat_sensor, led_table};

fn main() -> specscan::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("specscan-bands"), Into::into);
    std::fs::create_dir_all(&out)?;

    let doc = build_test_document(600, 800, 64, 48, &BitMatrix::parse("110,011")?)?;
    let source = LightSource::new(DriverVariant::HighVoltage, led_table())?;
    let config = ScanConfig {
        noise_sigma: 0.005,
        rng_seed: 1,
        ..ScanConfig::default()
    };
    let bands = scan_sequence(&doc, &source, &flat_sensor(doc.grid()), &config)?;

    let names = ["red", "orange", "green", "blue"];
    let regions = logo_regions(doc.width(), doc.height());
    for band in &bands {
        let means: Vec<String> = regions[..4]
            .iter()
            .zip(names)
            .map(|(&(x0, y0, x1, y1, _), name)| {
                let n = ((x1 - x0) * (y1 - y0)) as f64;
                let sum: f64 = (y0..y1)
                    .flat_map(|y| (x0..x1).map(move |x| (x, y)))
                    .map(|(x, y)| f64::from(band.image.get(x, y)))
                    .sum();
                format!("{name} {:>5.1}", sum / n)
            })
            .collect();
        println!("{:<11} {}", band.band_name, means.join("  "));
        band.write(out.join(format!(
            "{}.pgm",
            band.band_name.to_lowercase().replace(' ', "-")
        )))?;
    }
    println!("wrote {} bands to {}", bands.len(), out.display());
    Ok(())
}
