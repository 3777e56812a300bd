//! Wavelength grids, sampled spectra, LED emission models and radiometric
//! band-response integration.
//!
//! Every spectrum lives on a [`WavelengthGrid`]; operations that combine
//! spectra require the grids to match exactly. Integrals use the trapezoid
//! rule over the grid samples, so the sampled curve is the ground truth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest wavelength a grid may cover, in nm.
pub const GRID_MIN_NM: f64 = 300.0;
/// Highest wavelength a grid may cover, in nm.
pub const GRID_MAX_NM: f64 = 900.0;

/// FWHM = 2·sqrt(2·ln 2)·σ.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Uniformly spaced wavelength samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    start_nm: f64,
    step_nm: f64,
    count: usize,
}

impl WavelengthGrid {
    pub fn new(start_nm: f64, step_nm: f64, count: usize) -> Result<Self> {
        if !(step_nm.is_finite() && step_nm > 0.0) {
            return Err(Error::invalid(format!(
                "grid step must be > 0, got {step_nm}"
            )));
        }
        if count < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 samples, got {count}"
            )));
        }
        let end = start_nm + (count - 1) as f64 * step_nm;
        if !start_nm.is_finite() || start_nm < GRID_MIN_NM - 1e-9 || end > GRID_MAX_NM + 1e-9 {
            return Err(Error::invalid(format!(
                "grid range [{start_nm}, {end}] nm outside [{GRID_MIN_NM}, {GRID_MAX_NM}]"
            )));
        }
        Ok(Self {
            start_nm,
            step_nm,
            count,
        })
    }

    /// 380–780 nm at 1 nm.
    pub fn visible() -> Self {
        Self {
            start_nm: 380.0,
            step_nm: 1.0,
            count: 401,
        }
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn end_nm(&self) -> f64 {
        self.wavelength(self.count - 1)
    }

    pub fn wavelength(&self, index: usize) -> f64 {
        self.start_nm + index as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.wavelength(i))
    }

    /// Index of the sample closest to `nm`, clamped to the grid.
    pub fn nearest_index(&self, nm: f64) -> usize {
        let pos = ((nm - self.start_nm) / self.step_nm).round();
        pos.clamp(0.0, (self.count - 1) as f64) as usize
    }
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self::visible()
    }
}

/// Non-negative function of wavelength sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    grid: WavelengthGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::invalid(format!(
                "spectrum has {} values for a {}-sample grid",
                values.len(),
                grid.count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!(
                "spectrum value {v} is not a finite non-negative number"
            )));
        }
        Ok(Self { grid, values })
    }

    /// A spectrum that must additionally stay within [0, 1].
    pub fn reflectance(grid: WavelengthGrid, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v > 1.0) {
            return Err(Error::invalid(format!("reflectance value {v} exceeds 1")));
        }
        Self::new(grid, values)
    }

    pub fn constant(grid: WavelengthGrid, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.count()])
    }

    /// Evaluates `f` at every grid wavelength.
    pub fn from_fn(grid: WavelengthGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.wavelengths().map(f).collect())
    }

    /// Resamples scattered `(wavelength, value)` pairs onto `grid` by linear
    /// interpolation. Wavelengths outside the samples take the edge value.
    pub fn from_samples(grid: WavelengthGrid, samples: &[(f64, f64)]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("no spectral samples"));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid(
                "sample wavelengths must be strictly increasing",
            ));
        }
        Self::from_fn(grid, |nm| interpolate(samples, nm))
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the largest sample (first one on ties).
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Linear interpolation between grid samples; clamps outside the grid.
    pub fn value_at(&self, nm: f64) -> f64 {
        let pos = (nm - self.grid.start_nm) / self.grid.step_nm;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Multiplies every sample by `factor` (must be ≥ 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::invalid(format!(
                "scale factor {factor} must be finite and >= 0"
            )));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        })
    }

    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(self.grid.step_nm, &self.values)
    }

    /// Parses two-column `wavelength value` text; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Vec<(f64, f64)>> {
        let mut samples = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty());
            let parse = |f: Option<&str>| -> Result<f64> {
                f.and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| {
                    Error::Config(format!(
                        "line {}: expected 'wavelength_nm value', got {raw:?}",
                        lineno + 1
                    ))
                })
            };
            let nm = parse(fields.next())?;
            let value = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Config(format!(
                    "line {}: more than two columns",
                    lineno + 1
                )));
            }
            samples.push((nm, value));
        }
        Ok(samples)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# wavelength_nm value\n");
        for (nm, v) in self.grid.wavelengths().zip(&self.values) {
            out.push_str(&format!("{nm} {v}\n"));
        }
        out
    }
}

fn interpolate(samples: &[(f64, f64)], nm: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if nm <= first.0 {
        return first.1;
    }
    if nm >= last.0 {
        return last.1;
    }
    let hi = samples.partition_point(|s| s.0 < nm);
    let (x0, y0) = samples[hi - 1];
    let (x1, y1) = samples[hi];
    y0 + (y1 - y0) * (nm - x0) / (x1 - x0)
}

pub(crate) fn trapezoid(step: f64, values: &[f64]) -> f64 {
    values.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() * step
}

/// One row of the LED catalogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedSpec {
    pub name: String,
    pub center_nm: f64,
    pub fwhm_nm: f64,
    /// Relative brightness on the catalogue's mixed lm/mW scale.
    pub flux: f64,
    pub part_number: String,
}

impl LedSpec {
    pub fn new(
        name: &str,
        center_nm: f64,
        fwhm_nm: f64,
        flux: f64,
        part_number: &str,
    ) -> Result<Self> {
        if !(400.0..=700.0).contains(&center_nm) {
            return Err(Error::invalid(format!(
                "LED center {center_nm} nm outside [400, 700]"
            )));
        }
        if !(fwhm_nm.is_finite() && fwhm_nm > 0.0) {
            return Err(Error::invalid(format!(
                "LED FWHM must be > 0, got {fwhm_nm}"
            )));
        }
        if !(flux.is_finite() && flux > 0.0) {
            return Err(Error::invalid(format!("LED flux must be > 0, got {flux}")));
        }
        Ok(Self {
            name: name.to_string(),
            center_nm,
            fwhm_nm,
            flux,
            part_number: part_number.to_string(),
        })
    }

    /// Lowercase hyphenated name, e.g. `royal-blue`.
    pub fn slug(&self) -> String {
        slugify(&self.name)
    }

    pub fn sigma_nm(&self) -> f64 {
        self.fwhm_nm / FWHM_PER_SIGMA
    }
}

pub(crate) fn slugify(name: &str) -> String {
    name.trim()
        .to_ascii_lowercase()
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("-")
}

/// Luxeon Rebel LEDs fitted to the light source, in descending wavelength.
pub fn led_table() -> Vec<LedSpec> {
    const ROWS: [(&str, f64, f64, f64, &str); 6] = [
        ("Deep Red", 655.0, 20.0, 640.0, "LXM3-PD01"),
        ("Red-Orange", 617.0, 20.0, 90.0, "LXML-PH01-0050"),
        ("Amber", 590.0, 20.0, 77.0, "LXML-PL01-0040"),
        ("Green", 530.0, 30.0, 150.0, "LXML-PM01-0090"),
        ("Cyan", 505.0, 30.0, 122.0, "LXML-PE01-0070"),
        ("Royal Blue", 447.5, 20.0, 1030.0, "LXML-PR02-A900"),
    ];
    ROWS.iter()
        .map(|&(name, center, fwhm, flux, part)| LedSpec {
            name: name.to_string(),
            center_nm: center,
            fwhm_nm: fwhm,
            flux,
            part_number: part.to_string(),
        })
        .collect()
}

/// Finds a catalogue LED by name, ignoring case, spaces and hyphens.
pub fn find_led<'a>(leds: &'a [LedSpec], name: &str) -> Option<&'a LedSpec> {
    let wanted = slugify(name);
    leds.iter().find(|l| l.slug() == wanted)
}

/// Largest flux in `leds`; the reference that maps to relative amplitude 1.
pub fn flux_reference(leds: &[LedSpec]) -> f64 {
    leds.iter().map(|l| l.flux).fold(0.0, f64::max)
}

/// Gaussian emission profile with the catalogue bandwidth read as FWHM.
///
/// The sampled curve is rescaled so the largest grid sample is exactly 1.0;
/// that sample is the one nearest `center_nm`.
pub fn gaussian_spd(led: &LedSpec, grid: &WavelengthGrid) -> Spectrum {
    let sigma = led.sigma_nm();
    let raw: Vec<f64> = grid
        .wavelengths()
        .map(|nm| {
            let z = (nm - led.center_nm) / sigma;
            (-0.5 * z * z).exp()
        })
        .collect();
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let values = if peak > 0.0 {
        raw.into_iter().map(|v| v / peak).collect()
    } else {
        raw
    };
    Spectrum {
        grid: *grid,
        values,
    }
}

/// Scales an SPD by `flux / flux_reference`.
pub fn scale_to_flux(spd: &Spectrum, flux: f64, flux_reference: f64) -> Result<Spectrum> {
    if !(flux.is_finite() && flux >= 0.0) {
        return Err(Error::invalid(format!("flux must be >= 0, got {flux}")));
    }
    if !(flux_reference.is_finite() && flux_reference > 0.0) {
        return Err(Error::invalid(format!(
            "flux reference must be > 0, got {flux_reference}"
        )));
    }
    spd.scaled(flux / flux_reference)
}

fn check_same_grid(spectra: &[&Spectrum]) -> Result<()> {
    let grid = spectra[0].grid;
    if spectra.iter().any(|s| s.grid != grid) {
        return Err(Error::invalid("spectra are sampled on different grids"));
    }
    Ok(())
}

/// ∫ reflectance·illumination·sensor dλ without normalization.
pub fn band_response_unnormalized(
    reflectance: &Spectrum,
    illumination: &Spectrum,
    sensor: &Spectrum,
) -> Result<f64> {
    check_same_grid(&[reflectance, illumination, sensor])?;
    let product: Vec<f64> = reflectance
        .values
        .iter()
        .zip(&illumination.values)
        .zip(&sensor.values)
        .map(|((r, i), s)| r * i * s)
        .collect();
    Ok(trapezoid(reflectance.grid.step_nm, &product))
}

/// Exposure-compensated response of a surface to one illumination band:
/// ∫ r·I·s / ∫ I·s. Lies in [0, 1] for reflectances bounded by 1.
pub fn band_response(
    reflectance: &Spectrum,
    illumination: &Spectrum,
    sensor: &Spectrum,
) -> Result<f64> {
    check_same_grid(&[reflectance, illumination, sensor])?;
    let weights: Vec<f64> = illumination
        .values
        .iter()
        .zip(&sensor.values)
        .map(|(i, s)| i * s)
        .collect();
    let norm = trapezoid(illumination.grid.step_nm, &weights);
    if norm <= 0.0 {
        return Err(Error::DegenerateIllumination);
    }
    Ok(band_response_unnormalized(reflectance, illumination, sensor)? / norm)
}

/// Sensor that responds equally at every wavelength.
pub fn flat_sensor(grid: &WavelengthGrid) -> Spectrum {
    Spectrum {
        grid: *grid,
        values: vec![1.0; grid.count()],
    }
}
