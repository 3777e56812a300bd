//! `specscan` command-line frontend.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{BandRecord, PipelineConfig, RunManifest};
use crate::cube::{
    assemble_cube, default_reference_index, read_cube, register_bands, write_composite_rgb,
    write_cube, Cube, DEFAULT_SEARCH_WINDOW,
};
use crate::document::{BitMatrix, DocumentModel};
use crate::error::{Error, Result};
use crate::forensics::{analyze_band, DetectParams, DotReport, Polarity, SeparationParams};
use crate::raster::{read_pgm, write_pgm, GrayImage};
use crate::scanner::{scan_sequence, BandScan};
use crate::spectral::{led_table, slugify};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "specscan",
    version,
    about = "Multispectral document scanner simulator and tracking-dot extractor"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the synthetic test page and write its palette index map as PGM.
    Synth(SynthArgs),
    /// Scan every band of the test page into PGM files plus a manifest.
    Scan(ScanArgs),
    /// Register band scans and write an MSQB cube.
    Assemble(AssembleArgs),
    /// Export one cube band as PGM or three bands as an RGB PPM.
    Export(ExportArgs),
    /// Extract the tracking-dot pattern from a band into a JSON report.
    Extract(ExtractArgs),
    /// Print the similarity between the tiles of two dot reports.
    Match(MatchArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Key-value config file or a run manifest.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. `--set scan.noise_sigma=0.01`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
            cfg.set(k, v, Path::new("."))?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output index-map PGM.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// RNG seed; overrides `scan.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Index-map PGM from `synth` to scan instead of rebuilding the page.
    #[arg(long)]
    document: Option<PathBuf>,
    /// Directory receiving band PGMs and the manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct AssembleArgs {
    /// Directory written by `scan`.
    #[arg(long)]
    scans: PathBuf,
    /// Output MSQB cube.
    #[arg(long)]
    out: PathBuf,
    /// Reference band name or index [default: green, else the middle band].
    #[arg(long)]
    reference: Option<String>,
    /// Registration search half-width in pixels [default: twice the
    /// manifest's maximum feed offset].
    #[arg(long)]
    window: Option<u32>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    cube: PathBuf,
    /// Band name (e.g. `royal-blue`) or index, for a PGM.
    #[arg(long, conflicts_with = "rgb", required_unless_present = "rgb")]
    band: Option<String>,
    /// Three bands `R,G,B` for a stretched PPM composite.
    #[arg(long)]
    rgb: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Cube to read the band from.
    #[arg(long, conflicts_with = "scan", required_unless_present = "scan")]
    cube: Option<PathBuf>,
    /// Single band PGM written by `scan`.
    #[arg(long)]
    scan: Option<PathBuf>,
    /// Band name or index within the cube.
    #[arg(long, default_value = "royal-blue")]
    band: String,
    /// Sub-cell grid `ROWSxCOLS` [default: dimensions of the configured tile].
    #[arg(long)]
    grid: Option<String>,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_parser = parse_polarity, default_value = "dark")]
    polarity: Polarity,
    #[arg(long, default_value_t = DetectParams::default().min_area_px)]
    min_area: usize,
    #[arg(long, default_value_t = DetectParams::default().max_area_px)]
    max_area: usize,
    /// Background percentile of the band histogram.
    #[arg(long, default_value_t = DetectParams::default().background_percentile)]
    percentile: f64,
    /// Relative threshold margin below (dark) or above (bright) the background.
    #[arg(long, default_value_t = DetectParams::default().relative_margin)]
    margin: f64,
    /// Output report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MatchArgs {
    a: PathBuf,
    b: PathBuf,
}

fn parse_polarity(s: &str) -> std::result::Result<Polarity, String> {
    match s.to_ascii_lowercase().as_str() {
        "dark" => Ok(Polarity::Dark),
        "bright" => Ok(Polarity::Bright),
        _ => Err(format!("expected dark or bright, got {s:?}")),
    }
}

/// Parses `2x3` (or `2,3`) into `(rows, cols)`.
pub fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(['x', 'X', ','])
        .ok_or_else(|| Error::invalid(format!("grid {s:?} is not ROWSxCOLS")))?;
    let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|n| *n > 0);
    match (parse(r), parse(c)) {
        (Some(r), Some(c)) => Ok((r, c)),
        _ => Err(Error::invalid(format!("grid {s:?} is not ROWSxCOLS"))),
    }
}

/// Resolves a band by index or by catalogue name against cube wavelengths.
pub fn resolve_band(cube: &Cube, spec: &str) -> Result<usize> {
    if let Ok(i) = spec.trim().parse::<usize>() {
        return if i < cube.band_count() {
            Ok(i)
        } else {
            Err(Error::invalid(format!(
                "band index {i} out of range (cube has {})",
                cube.band_count()
            )))
        };
    }
    let slug = slugify(spec);
    let led = led_table()
        .into_iter()
        .find(|l| l.slug() == slug)
        .ok_or_else(|| Error::invalid(format!("unknown band {spec:?}")))?;
    cube.band_near(led.center_nm, 0.5)
        .ok_or_else(|| Error::invalid(format!("cube has no band at {} nm", led.center_nm)))
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn band_file_name(index: usize, band: &BandScan) -> String {
    format!("band_{:02}_{}.pgm", index + 1, slugify(&band.band_name))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    cfg.validate()?;
    let start = Instant::now();
    let doc = cfg.document()?;
    let map: Vec<u16> = doc.composited().into_iter().map(u16::from).collect();
    let img = GrayImage::new(doc.width(), doc.height(), 8, map)?;
    let comments: Vec<String> = doc
        .palette()
        .iter()
        .enumerate()
        .map(|(i, p)| format!("palette: {i} {}", p.name))
        .collect();
    write_pgm(&img, &args.out, &comments)?;
    let mut manifest = RunManifest::new("synth", &cfg);
    manifest
        .timings_ms
        .insert("synth".into(), elapsed_ms(start));
    manifest.outputs.push(args.out.clone());
    manifest.write(sibling_manifest(&args.out))?;
    Ok(())
}

fn sibling_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn load_document(cfg: &PipelineConfig, path: &Path) -> Result<DocumentModel> {
    let (img, _) = read_pgm(path)?;
    let template = cfg.document()?;
    let map = img
        .data()
        .iter()
        .map(|&v| {
            u8::try_from(v).map_err(|_| Error::invalid(format!("palette index {v} out of range")))
        })
        .collect::<Result<Vec<u8>>>()?;
    DocumentModel::new(img.width(), img.height(), template.palette().to_vec(), map)
}

fn scan(args: &ScanArgs) -> Result<()> {
    let mut cfg = args.config.resolve()?;
    if let Some(seed) = args.seed {
        cfg.scan.rng_seed = seed;
    }
    cfg.validate()?;
    let mut manifest = RunManifest::new("scan", &cfg);
    let start = Instant::now();
    let doc = match &args.document {
        Some(path) => load_document(&cfg, path)?,
        None => cfg.document()?,
    };
    manifest
        .timings_ms
        .insert("synth".into(), elapsed_ms(start));
    let start = Instant::now();
    let bands = scan_sequence(&doc, &cfg.light_source()?, &cfg.sensor()?, &cfg.scan)?;
    manifest.timings_ms.insert("scan".into(), elapsed_ms(start));
    std::fs::create_dir_all(&args.out_dir)?;
    for (i, band) in bands.iter().enumerate() {
        let name = band_file_name(i, band);
        band.write(args.out_dir.join(&name))?;
        manifest.outputs.push(args.out_dir.join(&name));
        manifest.bands.push(BandRecord {
            name: band.band_name.clone(),
            center_nm: band.center_nm,
            file: PathBuf::from(name),
            offset_px: band.true_offset_px,
        });
    }
    manifest.write(args.out_dir.join(MANIFEST_NAME))?;
    Ok(())
}

fn load_scans(dir: &Path) -> Result<(Vec<BandScan>, Option<RunManifest>)> {
    let manifest_path = dir.join(MANIFEST_NAME);
    if manifest_path.exists() {
        let manifest = RunManifest::read(&manifest_path)?;
        let bands = manifest
            .bands
            .iter()
            .map(|b| BandScan::read(dir.join(&b.file)))
            .collect::<Result<Vec<_>>>()?;
        return Ok((bands, Some(manifest)));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    files.sort();
    let mut bands = files
        .iter()
        .map(BandScan::read)
        .collect::<Result<Vec<_>>>()?;
    bands.sort_by(|a, b| b.center_nm.total_cmp(&a.center_nm));
    Ok((bands, None))
}

fn assemble(args: &AssembleArgs) -> Result<()> {
    let (bands, scan_manifest) = load_scans(&args.scans)?;
    if bands.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no band scans in {}",
            args.scans.display()
        )));
    }
    let reference = match &args.reference {
        None => default_reference_index(&bands),
        Some(spec) => match spec.parse::<usize>() {
            Ok(i) if i < bands.len() => i,
            Ok(i) => return Err(Error::invalid(format!("reference index {i} out of range"))),
            Err(_) => bands
                .iter()
                .position(|b| slugify(&b.band_name) == slugify(spec))
                .ok_or_else(|| Error::invalid(format!("no band named {spec:?}")))?,
        },
    };
    let window = args.window.unwrap_or_else(|| {
        scan_manifest.as_ref().map_or(DEFAULT_SEARCH_WINDOW, |m| {
            2 * m.config.scan.max_feed_offset_px
        })
    });
    let cfg = scan_manifest
        .as_ref()
        .map_or_else(PipelineConfig::default, |m| m.config.clone());
    let mut manifest = RunManifest::new("assemble", &cfg);
    let start = Instant::now();
    let offsets = register_bands(&bands, reference, window)?;
    manifest
        .timings_ms
        .insert("register".into(), elapsed_ms(start));
    let start = Instant::now();
    let assembled = assemble_cube(&bands, &offsets)?;
    write_cube(&assembled.cube, &args.out)?;
    manifest
        .timings_ms
        .insert("assemble".into(), elapsed_ms(start));
    manifest.outputs.push(args.out.clone());
    for (band, offset) in bands.iter().zip(&assembled.offsets_applied) {
        manifest.bands.push(BandRecord {
            name: band.band_name.clone(),
            center_nm: band.center_nm,
            file: args.out.clone(),
            offset_px: *offset,
        });
    }
    manifest.write(sibling_manifest(&args.out))?;
    Ok(())
}

fn export(args: &ExportArgs) -> Result<()> {
    let cube = read_cube(&args.cube)?;
    if let Some(rgb) = &args.rgb {
        let parts: Vec<&str> = rgb.split(',').collect();
        let [r, g, b] = parts[..] else {
            return Err(Error::invalid(format!(
                "--rgb expects three bands, got {rgb:?}"
            )));
        };
        return write_composite_rgb(
            &cube,
            resolve_band(&cube, r)?,
            resolve_band(&cube, g)?,
            resolve_band(&cube, b)?,
            &args.out,
        );
    }
    let spec = args.band.as_deref().unwrap_or_default();
    let i = resolve_band(&cube, spec)?;
    write_pgm(
        &cube.band(i)?,
        &args.out,
        &[format!("center_nm: {}", cube.wavelengths_nm()[i])],
    )
}

fn extract(args: &ExtractArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => {
            let tile: BitMatrix = cfg.tile_matrix()?;
            (tile.rows(), tile.cols())
        }
    };
    let (image, band) = match (&args.cube, &args.scan) {
        (Some(path), _) => {
            let cube = read_cube(path)?;
            let i = resolve_band(&cube, &args.band)?;
            let name = led_table()
                .into_iter()
                .find(|l| (l.center_nm - cube.wavelengths_nm()[i]).abs() <= 0.5)
                .map_or_else(|| format!("{} nm", cube.wavelengths_nm()[i]), |l| l.slug());
            (cube.band(i)?, name)
        }
        (None, Some(path)) => {
            let scan = BandScan::read(path)?;
            (scan.image, slugify(&scan.band_name))
        }
        (None, None) => return Err(Error::invalid("need --cube or --scan")),
    };
    let detect = DetectParams {
        polarity: args.polarity,
        min_area_px: args.min_area,
        max_area_px: args.max_area,
        background_percentile: args.percentile,
        relative_margin: args.margin,
    };
    let report = analyze_band(&image, &band, &detect, &SeparationParams::default(), grid)?;
    let json = report.to_json()? + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn match_reports(args: &MatchArgs) -> Result<()> {
    let a = DotReport::from_json(&std::fs::read_to_string(&args.a)?)?;
    let b = DotReport::from_json(&std::fs::read_to_string(&args.b)?)?;
    println!(
        "{:.3}",
        crate::forensics::match_patterns(&a.tile_matrix()?, &b.tile_matrix()?)
    );
    Ok(())
}

/// Runs the CLI on `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Scan(a) => scan(a),
        Command::Assemble(a) => assemble(a),
        Command::Export(a) => export(a),
        Command::Extract(a) => extract(a),
        Command::Match(a) => match_reports(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("2x3").unwrap(), (2, 3));
        assert_eq!(parse_grid("4,1").unwrap(), (4, 1));
        assert!(parse_grid("0x3").is_err());
        assert!(parse_grid("23").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["specscan", "frobnicate"]), 1);
        assert_eq!(run(["specscan", "match"]), 1);
        assert_eq!(run(["specscan", "--help"]), 0);
        assert_eq!(run(["specscan", "extract", "--help"]), 0);
    }
}
