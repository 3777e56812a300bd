//! Plain-text `key = value` pipeline configuration and run manifests.
//!
//! ```text
//! # demo page
//! width = 600
//! height = 800
//! hps = 64
//! vps = 48
//! tile = 101,010
//! source.variant = high
//! source.leds = table1
//! scan.seed = 42
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::document::{
    build_test_document_with, BitMatrix, DocumentModel, DotLattice, DEFAULT_DOT_RADIUS,
};
use crate::error::{Error, Result};
use crate::light::{DriverVariant, LightSource, DEFAULT_COLLECTION_EFFICIENCY, MAX_LEDS};
use crate::scanner::ScanConfig;
use crate::spectral::{find_led, flat_sensor, led_table, LedSpec, Spectrum, WavelengthGrid};

/// Ordered key/value pairs from a config file; later keys win.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected 'key = value', got {raw:?}",
                lineno + 1
            ))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        out.push((key.to_ascii_lowercase(), value.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub variant: DriverVariant,
    pub leds: Vec<LedSpec>,
    pub efficiency: f64,
    pub dimming: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            variant: DriverVariant::HighVoltage,
            leds: led_table(),
            efficiency: DEFAULT_COLLECTION_EFFICIENCY,
            dimming: 1.0,
        }
    }
}

impl SourceConfig {
    pub fn build(&self) -> Result<LightSource> {
        let source =
            LightSource::new(self.variant, self.leds.clone())?.with_efficiency(self.efficiency)?;
        if self.dimming == 1.0 {
            Ok(source)
        } else {
            source.set_dimming(self.dimming)
        }
    }
}

/// Fully resolved settings for synth, scan and extract.
///
/// Custom spectra are stored as samples rather than paths so a manifest
/// alone reproduces a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub width: usize,
    pub height: usize,
    pub hps_px: u32,
    pub vps_px: u32,
    pub tile: String,
    pub dot_radius: u32,
    pub palette: BTreeMap<String, Vec<(f64, f64)>>,
    pub sensor: Option<Vec<(f64, f64)>>,
    pub source: SourceConfig,
    pub scan: ScanConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            width: 600,
            height: 800,
            hps_px: 64,
            vps_px: 48,
            tile: "101,010".into(),
            dot_radius: DEFAULT_DOT_RADIUS,
            palette: BTreeMap::new(),
            sensor: None,
            source: SourceConfig::default(),
            scan: ScanConfig::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn read_spectrum_file(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read spectrum {}: {e}", path.display())))?;
    Spectrum::parse_text(&text)
}

fn parse_led(key: &str, value: &str) -> Result<LedSpec> {
    let fields: Vec<&str> = value.split(',').map(str::trim).collect();
    if let [name] = fields[..] {
        return find_led(&led_table(), name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("{key}: unknown LED {name:?}")));
    }
    if !(4..=5).contains(&fields.len()) {
        return Err(Error::Config(format!(
            "{key}: expected 'name, center_nm, fwhm_nm, flux[, part]' or a catalogue name"
        )));
    }
    LedSpec::new(
        fields[0],
        parse_num(key, fields[1])?,
        parse_num(key, fields[2])?,
        parse_num(key, fields[3])?,
        fields.get(4).copied().unwrap_or(""),
    )
}

impl PipelineConfig {
    /// Applies one key. Relative spectrum paths resolve against `base_dir`.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        match key.as_str() {
            "width" => self.width = parse_num(&key, value)?,
            "height" => self.height = parse_num(&key, value)?,
            "hps" => self.hps_px = parse_num(&key, value)?,
            "vps" => self.vps_px = parse_num(&key, value)?,
            "tile" => {
                BitMatrix::parse(value).map_err(|e| Error::Config(format!("tile: {e}")))?;
                self.tile = value.to_string();
            }
            "dot_radius" => self.dot_radius = parse_num(&key, value)?,
            "sensor" => {
                self.sensor = if value.eq_ignore_ascii_case("flat") {
                    None
                } else {
                    Some(read_spectrum_file(&base_dir.join(value))?)
                }
            }
            "source.variant" => self.source.variant = value.parse()?,
            "source.leds" => {
                self.source.leds = if value.eq_ignore_ascii_case("table1") {
                    led_table()
                } else {
                    value
                        .split(',')
                        .map(|name| parse_led(&key, name))
                        .collect::<Result<_>>()?
                }
            }
            "source.efficiency" => self.source.efficiency = parse_num(&key, value)?,
            "source.dimming" => self.source.dimming = parse_num(&key, value)?,
            "scan.dpi" => self.scan.dpi = parse_num(&key, value)?,
            "scan.noise_sigma" => self.scan.noise_sigma = parse_num(&key, value)?,
            "scan.max_feed_offset" => self.scan.max_feed_offset_px = parse_num(&key, value)?,
            "scan.bit_depth" => self.scan.bit_depth = parse_num(&key, value)?,
            "scan.seed" => self.scan.rng_seed = parse_num(&key, value)?,
            _ => {
                if let Some(name) = key.strip_prefix("palette.") {
                    let samples = read_spectrum_file(&base_dir.join(value))?;
                    self.palette.insert(name.to_string(), samples);
                } else if let Some(pos) = key.strip_prefix("led.") {
                    let pos: usize = parse_num(&key, pos)?;
                    if !(1..=MAX_LEDS).contains(&pos) || pos > self.source.leds.len() + 1 {
                        return Err(Error::Config(format!(
                            "{key}: LED positions run 1..={} without gaps",
                            (self.source.leds.len() + 1).min(MAX_LEDS)
                        )));
                    }
                    let led = parse_led(&key, value)?;
                    if pos > self.source.leds.len() {
                        self.source.leds.push(led);
                    } else {
                        self.source.leds[pos - 1] = led;
                    }
                } else {
                    return Err(Error::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str, base_dir: &Path) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v, base_dir)?;
        }
        Ok(())
    }

    /// Loads a key-value file, or the configuration embedded in a JSON run
    /// manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let manifest: RunManifest = serde_json::from_str(&text)?;
            return Ok(manifest.config);
        }
        let mut cfg = Self::default();
        cfg.apply_text(&text, path.parent().unwrap_or(Path::new(".")))?;
        Ok(cfg)
    }

    pub fn tile_matrix(&self) -> Result<BitMatrix> {
        BitMatrix::parse(&self.tile)
    }

    pub fn grid(&self) -> WavelengthGrid {
        WavelengthGrid::visible()
    }

    pub fn sensor(&self) -> Result<Spectrum> {
        match &self.sensor {
            None => Ok(flat_sensor(&self.grid())),
            Some(samples) => Spectrum::from_samples(self.grid(), samples),
        }
    }

    pub fn lattice(&self) -> Result<DotLattice> {
        let mut lattice = DotLattice::new(self.hps_px, self.vps_px, self.tile_matrix()?);
        lattice.radius = self.dot_radius;
        Ok(lattice)
    }

    pub fn document(&self) -> Result<DocumentModel> {
        let grid = self.grid();
        let mut doc = build_test_document_with(self.width, self.height, &self.lattice()?, &grid)?;
        for (name, samples) in &self.palette {
            doc.set_reflectance(name, Spectrum::from_samples(grid, samples)?)?;
        }
        Ok(doc)
    }

    pub fn light_source(&self) -> Result<LightSource> {
        self.source.build()
    }

    pub fn validate(&self) -> Result<()> {
        self.scan.validate()?;
        self.light_source()?;
        self.tile_matrix()?;
        Ok(())
    }
}

/// Record written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub rng_seed: u64,
    pub timings_ms: BTreeMap<String, f64>,
    pub outputs: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<BandRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    pub name: String,
    pub center_nm: f64,
    pub file: PathBuf,
    pub offset_px: (i32, i32),
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            rng_seed: config.scan.rng_seed,
            timings_ms: BTreeMap::new(),
            outputs: Vec::new(),
            bands: Vec::new(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let kv = parse_key_values("# c\n width = 10 \n\nTile=1,0 # trailing\n").unwrap();
        assert_eq!(
            kv,
            vec![("width".into(), "10".into()), ("tile".into(), "1,0".into())]
        );
        assert!(matches!(parse_key_values("novalue"), Err(Error::Config(_))));
    }

    #[test]
    fn layering_last_writer_wins() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(
            "hps = 32\nhps = 96\nscan.seed = 7\nsource.variant = low",
            Path::new("."),
        )
        .unwrap();
        assert_eq!(cfg.hps_px, 96);
        assert_eq!(cfg.scan.rng_seed, 7);
        assert_eq!(cfg.source.variant, DriverVariant::LowVoltage);
        cfg.set("hps", "64", Path::new(".")).unwrap();
        assert_eq!(cfg.hps_px, 64);
    }

    #[test]
    fn led_keys() {
        let mut cfg = PipelineConfig::default();
        cfg.set("source.leds", "royal blue, deep-red", Path::new("."))
            .unwrap();
        assert_eq!(cfg.source.leds.len(), 2);
        assert_eq!(cfg.source.leds[0].center_nm, 447.5);
        cfg.set("led.3", "Violet, 470, 25, 300, X-1", Path::new("."))
            .unwrap();
        assert_eq!(cfg.source.leds[2].name, "Violet");
        assert!(cfg.set("led.5", "amber", Path::new(".")).is_err());
        assert!(cfg.set("led.1", "ultraviolet", Path::new(".")).is_err());
        assert!(cfg.set("bogus", "1", Path::new(".")).is_err());
    }

    #[test]
    fn palette_file_and_manifest_reload() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("red.txt"), "# nm r\n380 0.1\n780 0.2\n").unwrap();
        std::fs::write(
            dir.path().join("demo.cfg"),
            "width = 200\nheight = 150\npalette.red = red.txt\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&dir.path().join("demo.cfg")).unwrap();
        assert_eq!(cfg.palette["red"], vec![(380.0, 0.1), (780.0, 0.2)]);
        let doc = cfg.document().unwrap();
        let red = &doc.palette()[usize::from(doc.palette_index("red").unwrap())];
        assert!((red.reflectance.value_at(580.0) - 0.15).abs() < 1e-12);

        let manifest = RunManifest::new("synth", &cfg);
        let path = dir.path().join("manifest.json");
        manifest.write(&path).unwrap();
        assert_eq!(PipelineConfig::load(&path).unwrap(), cfg);
    }

    #[test]
    fn dimming_requires_high_voltage() {
        let mut cfg = PipelineConfig::default();
        cfg.source.dimming = 0.5;
        assert!(cfg.light_source().is_ok());
        cfg.source.variant = DriverVariant::LowVoltage;
        assert!(matches!(
            cfg.light_source(),
            Err(Error::UnsupportedCapability(_))
        ));
    }
}
