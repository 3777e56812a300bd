//! Sheet-feed scanning of a [`DocumentModel`] under one LED band at a time.
//!
//! Each pass renders every line of the page through the radiometric model,
//! translates the whole pass by a random misfeed offset, adds Gaussian read
//! noise and quantizes. All randomness of pass `k` comes from a generator
//! seeded with `rng_seed ^ k`, so passes are reproducible independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::document::DocumentModel;
use crate::error::{Error, FormatError, Result};
use crate::light::{Illumination, LightSource};
use crate::raster::{self, check_bit_depth, GrayImage};
use crate::spectral::{band_response, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub dpi: u32,
    /// Standard deviation of additive read noise, as a fraction of full scale.
    pub noise_sigma: f64,
    pub max_feed_offset_px: u32,
    pub bit_depth: u8,
    pub rng_seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            dpi: 100,
            noise_sigma: 0.0,
            max_feed_offset_px: 0,
            bit_depth: 8,
            rng_seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        check_bit_depth(self.bit_depth)?;
        if self.dpi == 0 {
            return Err(Error::invalid("scan dpi must be positive"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma < 0.5) {
            return Err(Error::invalid(format!(
                "noise sigma {} outside [0, 0.5)",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Seed of the generator driving pass `pass_index`.
    pub fn pass_seed(&self, pass_index: u64) -> u64 {
        self.rng_seed ^ pass_index
    }
}

/// One grayscale image of the page under a single LED.
#[derive(Debug, Clone, PartialEq)]
pub struct BandScan {
    pub band_name: String,
    pub center_nm: f64,
    pub image: GrayImage,
    /// Misfeed translation injected into this pass; content appears shifted
    /// by `(dx, dy)` in the image.
    pub true_offset_px: (i32, i32),
}

impl BandScan {
    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    fn metadata(&self) -> Vec<String> {
        vec![
            format!("band: {}", self.band_name),
            format!("center_nm: {}", self.center_nm),
            format!(
                "true_offset_px: {} {}",
                self.true_offset_px.0, self.true_offset_px.1
            ),
        ]
    }

    /// Binary PGM with the band metadata in header comments.
    pub fn to_pgm(&self) -> Vec<u8> {
        raster::encode_pgm(&self.image, &self.metadata())
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let (image, comments) = raster::decode_pgm(bytes)?;
        let field = |key: &str| -> Result<String> {
            comments
                .iter()
                .find_map(|c| {
                    c.strip_prefix(key)
                        .and_then(|r| r.strip_prefix(':'))
                        .map(|v| v.trim().to_string())
                })
                .ok_or_else(|| {
                    FormatError::Malformed(format!("band scan missing '{key}' comment")).into()
                })
        };
        let malformed =
            |what: &str| Error::from(FormatError::Malformed(format!("bad {what} comment")));
        let band_name = field("band")?;
        let center_nm = field("center_nm")?
            .parse()
            .map_err(|_| malformed("center_nm"))?;
        let offsets: Vec<i32> = field("true_offset_px")?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| malformed("true_offset_px")))
            .collect::<Result<_>>()?;
        let [dx, dy] = offsets[..] else {
            return Err(malformed("true_offset_px"));
        };
        Ok(Self {
            band_name,
            center_nm,
            image,
            true_offset_px: (dx, dy),
        })
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_pgm(&std::fs::read(path)?)
    }
}

/// Maps [0, 1] to an integer code with round-half-up, saturating at bounds.
pub fn quantize(value: f64, bit_depth: u8) -> u16 {
    let max = f64::from(raster::max_value(bit_depth));
    let v = if value.is_nan() {
        0.0
    } else {
        value.clamp(0.0, 1.0)
    };
    (v * max + 0.5).floor().min(max) as u16
}

/// Intensity of each palette entry under `illumination`, before noise:
/// normalized band response times the emission peak.
pub fn palette_intensities(
    doc: &DocumentModel,
    illumination: &Spectrum,
    sensor: &Spectrum,
) -> Result<Vec<f64>> {
    let amplitude = illumination.max_value();
    doc.palette()
        .iter()
        .map(|p| band_response(&p.reflectance, illumination, sensor).map(|r| r * amplitude))
        .collect()
}

/// Output raster size of a document scanned at `dpi`.
pub fn scan_dimensions(doc: &DocumentModel, dpi: u32) -> (usize, usize) {
    let scale =
        |n: usize| ((n as f64 * f64::from(dpi) / f64::from(doc.dpi())).round() as usize).max(1);
    (scale(doc.width()), scale(doc.height()))
}

fn draw_offset(rng: &mut ChaCha8Rng, max: u32) -> (i32, i32) {
    let m = max as i32;
    let dx = rng.random_range(-m..=m);
    let dy = rng.random_range(-m..=m);
    (dx, dy)
}

/// Misfeed offset that pass `pass_index` will receive.
pub fn pass_offset(config: &ScanConfig, pass_index: u64) -> (i32, i32) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.pass_seed(pass_index));
    draw_offset(&mut rng, config.max_feed_offset_px)
}

/// Scans the page once under `illumination`.
pub fn scan_band(
    doc: &DocumentModel,
    illumination: &Illumination,
    sensor: &Spectrum,
    config: &ScanConfig,
    pass_index: u64,
) -> Result<BandScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.pass_seed(pass_index));
    let offset = draw_offset(&mut rng, config.max_feed_offset_px);
    render(doc, illumination, sensor, config, offset, &mut rng)
}

/// Like [`scan_band`] but with a caller-chosen misfeed offset. Noise is
/// still drawn from the pass generator.
pub fn scan_band_with_offset(
    doc: &DocumentModel,
    illumination: &Illumination,
    sensor: &Spectrum,
    config: &ScanConfig,
    pass_index: u64,
    offset: (i32, i32),
) -> Result<BandScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.pass_seed(pass_index));
    draw_offset(&mut rng, config.max_feed_offset_px);
    render(doc, illumination, sensor, config, offset, &mut rng)
}

fn render(
    doc: &DocumentModel,
    illumination: &Illumination,
    sensor: &Spectrum,
    config: &ScanConfig,
    offset: (i32, i32),
    rng: &mut ChaCha8Rng,
) -> Result<BandScan> {
    config.validate()?;
    if illumination.amplitude() <= 0.0 {
        return Err(Error::NoIllumination);
    }
    let levels = palette_intensities(doc, &illumination.spectrum, sensor)?;
    let indices = doc.composited();
    let (width, height) = scan_dimensions(doc, config.dpi);
    let ratio = f64::from(doc.dpi()) / f64::from(config.dpi);
    // Scan column -> document column (None when the page is not under it).
    let map_axis = |n: usize, shift: i32, doc_n: usize| -> Vec<Option<usize>> {
        (0..n)
            .map(|i| {
                let pos = i as i64 - i64::from(shift);
                if pos < 0 {
                    return None;
                }
                let d = ((pos as f64 + 0.5) * ratio).floor() as usize;
                (d < doc_n).then_some(d)
            })
            .collect()
    };
    let cols = map_axis(width, offset.0, doc.width());
    let rows = map_axis(height, offset.1, doc.height());
    let noise = if config.noise_sigma > 0.0 {
        Some(Normal::new(0.0, config.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let mut data = Vec::with_capacity(width * height);
    for row in &rows {
        for col in &cols {
            // Off-page area reads as paper.
            let idx = match (row, col) {
                (Some(y), Some(x)) => indices[y * doc.width() + x],
                _ => 0,
            };
            let mut v = levels[usize::from(idx)];
            if let Some(n) = &noise {
                v += n.sample(rng);
            }
            data.push(quantize(v, config.bit_depth));
        }
    }
    Ok(BandScan {
        band_name: illumination.led.name.clone(),
        center_nm: illumination.led.center_nm,
        image: GrayImage::new(width, height, config.bit_depth, data)?,
        true_offset_px: offset,
    })
}

/// Steps the rotary switch through every fitted LED and scans once per
/// settled position. Pass `k` (0-based) uses switch position `k + 1`.
pub fn scan_sequence(
    doc: &DocumentModel,
    source: &LightSource,
    sensor: &Spectrum,
    config: &ScanConfig,
) -> Result<Vec<BandScan>> {
    config.validate()?;
    let grid = doc.grid();
    let mut passes = Vec::with_capacity(source.leds().len());
    let mut state = source.clone();
    for position in 1..=source.leds().len() as u8 {
        let [open, settled] = state.rotate_to(position)?;
        debug_assert!(open.energized_led().is_none());
        let illumination = settled
            .active_illumination(grid)
            .ok_or(Error::NoIllumination)?;
        passes.push(illumination);
        state = settled;
    }
    passes
        .par_iter()
        .enumerate()
        .map(|(k, illum)| scan_band(doc, illum, sensor, config, k as u64))
        .collect()
}
