//! Turns the rotary switch through all twelve positions and shows the
//! break-before-make state between each step.
//!
//!     cargo run --example light_source

use specscan::light::{DriverVariant, LightSource, SWITCH_POSITIONS};
use specscan::spectral::{led_table, WavelengthGrid};

fn main() -> specscan::Result<()> {
    let grid = WavelengthGrid::visible();
    let mut source = LightSource::new(DriverVariant::HighVoltage, led_table())?;
    for position in 1..=SWITCH_POSITIONS {
        let [open, settled] = source.rotate_to(position)?;
        assert_eq!(open.energized_count(), 0);
        match settled.active_illumination(&grid) {
            Some(illum) => println!(
                "position {position:>2}: {:<11} {:>4.0} mA, peak {:.4}",
                illum.led.name,
                settled.drive_current_ma(),
                illum.amplitude()
            ),
            None => println!("position {position:>2}: open"),
        }
        source = settled;
    }

    let [_, blue] = source.rotate_to(6)?;
    for level in [1.0, 0.5, 0.1] {
        let dimmed = blue.set_dimming(level)?;
        println!(
            "royal blue dimmed to {level}: peak {:.4}",
            dimmed.active_illumination(&grid).unwrap().amplitude()
        );
    }
    let battery = LightSource::new(DriverVariant::LowVoltage, led_table())?;
    println!(
        "low-voltage driver dimming: {}",
        battery.set_dimming(0.5).unwrap_err()
    );
    Ok(())
}
