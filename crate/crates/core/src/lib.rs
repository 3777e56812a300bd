//! Multispectral sheet-feed document scanner simulator.
//!
//! A switched narrow-band LED source illuminates a synthetic document one
//! band at a time; each pass is scanned with feed jitter and sensor noise,
//! the bands are registered into a cube, and the blue band is searched for
//! printer tracking dots.

pub mod cli;
pub mod config;
pub mod cube;
pub mod document;
pub mod error;
pub mod forensics;
pub mod light;
pub mod raster;
pub mod scanner;
pub mod spectral;

pub use cube::{assemble_cube, read_cube, register_bands, write_cube, AssembledCube, Cube};
pub use document::{build_test_document, BitMatrix, DocumentModel, DotLattice};
pub use error::{Error, FormatError, Result};
pub use forensics::{
    detect_dots, estimate_separation, extract_tile, match_patterns, DotReport, DotSet,
};
pub use light::{DriverVariant, LightSource};
pub use raster::GrayImage;
pub use scanner::{scan_band, scan_sequence, BandScan, ScanConfig};
pub use spectral::{band_response, gaussian_spd, led_table, LedSpec, Spectrum, WavelengthGrid};
