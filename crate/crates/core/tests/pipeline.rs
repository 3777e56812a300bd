use proptest::prelude::*;

use specscan::cube::{assemble_cube, default_reference_index, register_bands};
use specscan::document::{build_test_document, BitMatrix, DocumentModel, PAPER};
use specscan::forensics::{analyze_band, detect_dots, DetectParams, SeparationParams};
use specscan::light::{DriverVariant, LightSource};
use specscan::scanner::{scan_band, scan_sequence, ScanConfig};
use specscan::spectral::{flat_sensor, led_table};

fn source() -> LightSource {
    LightSource::new(DriverVariant::HighVoltage, led_table()).unwrap()
}

fn scan_position(doc: &DocumentModel, position: u8, config: &ScanConfig) -> specscan::BandScan {
    let [_, s] = source().rotate_to(position).unwrap();
    let illum = s.active_illumination(doc.grid()).unwrap();
    scan_band(
        doc,
        &illum,
        &flat_sensor(doc.grid()),
        config,
        u64::from(position) - 1,
    )
    .unwrap()
}

/// Dots whose 5x5 neighbourhood is plain paper, i.e. visible under any band
/// where yellow differs from paper.
fn paper_dots(doc: &DocumentModel) -> Vec<(f64, f64)> {
    let w = doc.width() as i64;
    let map = doc.index_map();
    doc.dots()
        .iter()
        .filter(|d| {
            (d.y - 2..=d.y + 2)
                .all(|y| (d.x - 2..=d.x + 2).all(|x| map[(y * w + x) as usize] == PAPER))
        })
        .map(|d| (d.x as f64, d.y as f64))
        .collect()
}

#[test]
fn centroids_within_half_pixel() {
    let doc = build_test_document(400, 300, 64, 48, &BitMatrix::parse("110,011").unwrap()).unwrap();
    let blue = scan_position(&doc, 6, &ScanConfig::default());
    let found = detect_dots(&blue.image, "royal-blue", &DetectParams::default()).unwrap();
    let truth = paper_dots(&doc);
    assert!(!truth.is_empty());
    for (x, y) in &truth {
        let nearest = found
            .centers
            .iter()
            .map(|c| ((c.0 - x).powi(2) + (c.1 - y).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest <= 0.5, "dot at ({x}, {y}) off by {nearest}");
    }
}

#[test]
fn dots_only_visible_in_blue() {
    let doc = build_test_document(600, 800, 64, 48, &BitMatrix::parse("110,011").unwrap()).unwrap();
    let stamped = doc.dots().len();
    let params = DetectParams::default();
    let blue = detect_dots(
        &scan_position(&doc, 6, &ScanConfig::default()).image,
        "royal-blue",
        &params,
    )
    .unwrap();
    assert!(blue.len() >= paper_dots(&doc).len());
    for position in 1..=3 {
        let band = scan_position(&doc, position, &ScanConfig::default());
        let found = detect_dots(&band.image, &band.band_name, &params).unwrap();
        assert!(
            (found.len() as f64) < 0.05 * stamped as f64,
            "{}: {} of {stamped}",
            band.band_name,
            found.len()
        );
    }
}

#[test]
fn noisy_jittered_sequence_end_to_end() {
    let tile = BitMatrix::parse("1001,0110,1000").unwrap();
    let doc = build_test_document(600, 800, 96, 72, &tile).unwrap();
    let config = ScanConfig {
        noise_sigma: 0.01,
        max_feed_offset_px: 4,
        rng_seed: 9,
        ..ScanConfig::default()
    };
    let bands = scan_sequence(&doc, &source(), &flat_sensor(doc.grid()), &config).unwrap();
    let reference = default_reference_index(&bands);
    let offsets = register_bands(&bands, reference, 8).unwrap();
    let r = bands[reference].true_offset_px;
    for (band, found) in bands.iter().zip(&offsets) {
        assert_eq!(
            *found,
            (band.true_offset_px.0 - r.0, band.true_offset_px.1 - r.1),
            "{}",
            band.band_name
        );
    }
    let cube = assemble_cube(&bands, &offsets).unwrap().cube;
    let blue = cube.band(cube.band_near(447.5, 0.5).unwrap()).unwrap();
    let report = analyze_band(
        &blue,
        "royal-blue",
        &DetectParams::default(),
        &SeparationParams::default(),
        (3, 4),
    )
    .unwrap();
    assert!(
        (report.hps_px - 96.0).abs() <= 0.5 && (report.vps_px - 72.0).abs() <= 0.5,
        "{report:?}"
    );
    assert_eq!(report.tile_matrix().unwrap(), tile);
}

#[test]
fn sixteen_bit_scan_recovers_tile() {
    let tile = BitMatrix::parse("101,010").unwrap();
    let doc = build_test_document(600, 800, 64, 48, &tile).unwrap();
    let config = ScanConfig {
        bit_depth: 16,
        noise_sigma: 0.02,
        rng_seed: 3,
        ..ScanConfig::default()
    };
    let blue = scan_position(&doc, 6, &config);
    assert_eq!(blue.image.max_value(), 65535);
    let report = analyze_band(
        &blue.image,
        "royal-blue",
        &DetectParams::default(),
        &SeparationParams::default(),
        (2, 3),
    )
    .unwrap();
    assert_eq!(report.tile_matrix().unwrap(), tile);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_tiles_round_trip(
        cells in prop::collection::vec(any::<bool>(), 6),
        hps in prop::sample::select(vec![48u32, 64, 80]),
        vps in prop::sample::select(vec![36u32, 48, 60]),
    ) {
        let tile = BitMatrix::new(2, 3, cells).unwrap();
        // Tiles periodic at sub-cell scale describe a finer lattice; skip them
        // along with near-empty tiles that give too few dots per row.
        let periodic_row = (0..2).any(|r| (0..3).all(|c| tile.get(r, c)));
        let periodic_col = (0..3).any(|c| tile.get(0, c) && tile.get(1, c));
        prop_assume!(tile.count_ones() >= 2 && !periodic_row && !periodic_col);
        let doc = build_test_document(600, 800, hps, vps, &tile).unwrap();
        let blue = scan_position(&doc, 6, &ScanConfig::default());
        let report = analyze_band(&blue.image, "royal-blue", &DetectParams::default(), &SeparationParams::default(), (2, 3)).unwrap();
        prop_assert!((report.hps_px - f64::from(hps)).abs() <= 0.5);
        prop_assert!((report.vps_px - f64::from(vps)).abs() <= 0.5);
        prop_assert_eq!(report.tile_matrix().unwrap(), tile);
    }
}
