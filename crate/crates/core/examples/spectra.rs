//! Prints the LED catalogue and how each palette ink responds under every
//! LED.
//!
//!     cargo run --example spectra

use specscan::document::default_palette;
use specscan::spectral::{band_response, flat_sensor, gaussian_spd, led_table, WavelengthGrid};

fn main() -> specscan::Result<()> {
    let grid = WavelengthGrid::visible();
    let sensor = flat_sensor(&grid);
    let leds = led_table();

    println!(
        "{:<12} {:>8} {:>6} {:>6}  part",
        "LED", "center", "fwhm", "flux"
    );
    for led in &leds {
        println!(
            "{:<12} {:>8.1} {:>6.1} {:>6.0}  {}",
            led.name, led.center_nm, led.fwhm_nm, led.flux, led.part_number
        );
    }

    println!("\nband response (flux-normalized reflectance seen by each band)");
    print!("{:<8}", "ink");
    for led in &leds {
        print!(" {:>11}", led.slug());
    }
    println!();
    for ink in default_palette(&grid) {
        print!("{:<8}", ink.name);
        for led in &leds {
            let r = band_response(&ink.reflectance, &gaussian_spd(led, &grid), &sensor)?;
            print!(" {r:>11.3}");
        }
        println!();
    }
    Ok(())
}
