//! State machine of the switched multi-LED light source.
//!
//! A constant-current driver feeds up to seven LEDs through a 12-way
//! single-pole rotary switch. Terminals 1..=7 connect the LEDs, 8..=12 are
//! open. Contacts break before they make, so every rotation passes through a
//! state where nothing is lit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{flux_reference, gaussian_spd, LedSpec, Spectrum, WavelengthGrid};

pub const SWITCH_POSITIONS: u8 = 12;
pub const MAX_LEDS: usize = 7;
/// Output current of both driver modules.
pub const DRIVE_CURRENT_MA: f64 = 350.0;
/// Contact rating of the rotary switch.
pub const SWITCH_RATING_MA: f64 = 500.0;
/// Fraction of LED output delivered into the light guide.
pub const DEFAULT_COLLECTION_EFFICIENCY: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverVariant {
    /// Battery-powered driver, fixed output.
    LowVoltage,
    /// Mains-range driver with potentiometer dimming.
    HighVoltage,
}

impl DriverVariant {
    pub fn supports_dimming(self) -> bool {
        matches!(self, DriverVariant::HighVoltage)
    }
}

impl std::str::FromStr for DriverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" | "low-voltage" | "lowvoltage" => Ok(DriverVariant::LowVoltage),
            "high" | "high-voltage" | "highvoltage" => Ok(DriverVariant::HighVoltage),
            other => Err(Error::Config(format!("unknown driver variant {other:?}"))),
        }
    }
}

/// Illumination delivered by the energized LED.
#[derive(Debug, Clone, PartialEq)]
pub struct Illumination {
    pub led: LedSpec,
    pub spectrum: Spectrum,
}

impl Illumination {
    /// Peak relative power of the delivered spectrum.
    pub fn amplitude(&self) -> f64 {
        self.spectrum.max_value()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightSource {
    variant: DriverVariant,
    leds: Vec<LedSpec>,
    position: u8,
    dimming: f64,
    transitioning: bool,
    efficiency: f64,
}

impl LightSource {
    pub fn new(variant: DriverVariant, leds: Vec<LedSpec>) -> Result<Self> {
        if leds.is_empty() || leds.len() > MAX_LEDS {
            return Err(Error::invalid(format!(
                "light source takes 1..={MAX_LEDS} LEDs, got {}",
                leds.len()
            )));
        }
        Ok(Self {
            variant,
            leds,
            position: 1,
            dimming: 1.0,
            transitioning: false,
            efficiency: DEFAULT_COLLECTION_EFFICIENCY,
        })
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::invalid(format!(
                "collection efficiency {efficiency} outside (0, 1]"
            )));
        }
        self.efficiency = efficiency;
        Ok(self)
    }

    pub fn variant(&self) -> DriverVariant {
        self.variant
    }

    pub fn leds(&self) -> &[LedSpec] {
        &self.leds
    }

    pub fn position(&self) -> u8 {
        self.position
    }

    pub fn dimming(&self) -> f64 {
        self.dimming
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn is_transitioning(&self) -> bool {
        self.transitioning
    }

    /// The lit LED, if any.
    pub fn energized_led(&self) -> Option<&LedSpec> {
        if self.transitioning {
            return None;
        }
        self.leds.get(usize::from(self.position) - 1)
    }

    pub fn energized_count(&self) -> usize {
        usize::from(self.energized_led().is_some())
    }

    /// Turns the knob to `position`, returning the open-contact intermediate
    /// state followed by the settled state.
    pub fn rotate_to(&self, position: u8) -> Result<[LightSource; 2]> {
        if !(1..=SWITCH_POSITIONS).contains(&position) {
            return Err(Error::invalid(format!(
                "switch position {position} outside 1..={SWITCH_POSITIONS}"
            )));
        }
        let mut open = self.clone();
        open.transitioning = true;
        let mut settled = self.clone();
        settled.position = position;
        settled.transitioning = false;
        Ok([open, settled])
    }

    pub fn drive_current_ma(&self) -> f64 {
        if self.energized_led().is_some() {
            DRIVE_CURRENT_MA
        } else {
            0.0
        }
    }

    pub fn set_dimming(&self, level: f64) -> Result<LightSource> {
        if !self.variant.supports_dimming() {
            return Err(Error::UnsupportedCapability(
                "low-voltage driver has no dimming control".into(),
            ));
        }
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::invalid(format!(
                "dimming level {level} outside [0, 1]"
            )));
        }
        let mut next = self.clone();
        next.dimming = level;
        Ok(next)
    }

    /// Spectrum delivered into the light guide, or `None` when dark.
    pub fn active_emission(&self, grid: &WavelengthGrid) -> Option<Spectrum> {
        self.active_illumination(grid).map(|i| i.spectrum)
    }

    pub fn active_illumination(&self, grid: &WavelengthGrid) -> Option<Illumination> {
        let led = self.energized_led()?;
        let factor = led.flux / flux_reference(&self.leds) * self.dimming * self.efficiency;
        let spectrum = gaussian_spd(led, grid)
            .scaled(factor)
            .expect("flux ratio, dimming and efficiency are non-negative");
        Some(Illumination {
            led: led.clone(),
            spectrum,
        })
    }
}
