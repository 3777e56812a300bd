//! Yellow tracking-dot extraction from the blue band.
//!
//! Yellow toner absorbs blue light, so under the Royal Blue LED the dots
//! show up as small dark specks on bright paper while staying invisible in
//! the longer-wavelength bands. The pipeline is:
//!
//! 1. [`detect_dots`]: global percentile threshold, 8-connected components,
//!    area filter, centroids.
//! 2. [`estimate_separation`]: lattice periods (HPS along x, VPS along y)
//!    from the autocorrelation of dot coordinates within rows/columns,
//!    refined by averaging neighbour distances.
//! 3. [`extract_tile`]: folds every dot into one lattice cell and votes on
//!    which sub-cells hold a dot.
//! 4. [`match_patterns`]: best agreement between two tiles over cyclic shifts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::document::BitMatrix;
use crate::error::{Error, Result};
use crate::raster::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Dots are darker than the background.
    Dark,
    Bright,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub polarity: Polarity,
    pub min_area_px: usize,
    /// Components larger than this are ink, not dots.
    pub max_area_px: usize,
    /// Percentile of the histogram taken as the background level.
    pub background_percentile: f64,
    /// A pixel belongs to a dot when it differs from the background by more
    /// than this fraction of the background level (dark) or of the headroom
    /// above it (bright).
    pub relative_margin: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            polarity: Polarity::Dark,
            min_area_px: 3,
            max_area_px: 30,
            background_percentile: 50.0,
            relative_margin: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotSet {
    pub centers: Vec<(f64, f64)>,
    pub width: usize,
    pub height: usize,
    pub source_band: String,
}

impl DotSet {
    pub fn new(
        centers: Vec<(f64, f64)>,
        width: usize,
        height: usize,
        source_band: &str,
    ) -> Result<Self> {
        let inside =
            |&(x, y): &(f64, f64)| x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64;
        if !centers.iter().all(inside) {
            return Err(Error::invalid("dot center outside image bounds"));
        }
        Ok(Self {
            centers,
            width,
            height,
            source_band: source_band.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Nearest-rank percentile of the samples.
pub fn percentile(values: &[u16], pct: f64) -> u16 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = ((pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank]
}

/// Classification threshold and predicate implied by `params` on `image`.
pub fn dot_threshold(image: &GrayImage, params: &DetectParams) -> f64 {
    let bg = f64::from(percentile(image.data(), params.background_percentile));
    match params.polarity {
        Polarity::Dark => bg * (1.0 - params.relative_margin),
        Polarity::Bright => bg + (f64::from(image.max_value()) - bg) * params.relative_margin,
    }
}

/// Finds dot-sized connected components and returns their centroids.
pub fn detect_dots(image: &GrayImage, band: &str, params: &DetectParams) -> Result<DotSet> {
    if image.data().is_empty() {
        return Err(Error::invalid("empty image"));
    }
    if params.min_area_px > params.max_area_px {
        return Err(Error::invalid("min_area_px exceeds max_area_px"));
    }
    let threshold = dot_threshold(image, params);
    let (w, h) = (image.width(), image.height());
    let mask: Vec<bool> = image
        .data()
        .iter()
        .map(|v| match params.polarity {
            Polarity::Dark => f64::from(*v) < threshold,
            Polarity::Bright => f64::from(*v) > threshold,
        })
        .collect();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut centers = Vec::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let (mut area, mut sx, mut sy) = (0usize, 0.0f64, 0.0f64);
        while let Some(p) = stack.pop() {
            let (x, y) = (p % w, p / w);
            area += 1;
            sx += x as f64;
            sy += y as f64;
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let q = ny * w + nx;
                    if mask[q] && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
        }
        if (params.min_area_px..=params.max_area_px).contains(&area) {
            centers.push((sx / area as f64, sy / area as f64));
        }
    }
    DotSet::new(centers, w, h, band)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationParams {
    /// Dots whose cross-axis coordinates differ by at most this much are
    /// treated as lying on the same lattice row/column.
    pub row_tolerance_px: f64,
    pub min_lag_px: usize,
    /// Minimum peak pair count as a fraction of the dot count.
    pub significance: f64,
    /// Absolute floor on the peak pair count.
    pub min_pairs: usize,
}

impl Default for SeparationParams {
    fn default() -> Self {
        Self {
            row_tolerance_px: 1.5,
            min_lag_px: 3,
            significance: 0.25,
            min_pairs: 4,
        }
    }
}

pub const MIN_DOTS_FOR_SEPARATION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub hps_px: f64,
    pub vps_px: f64,
}

/// Pair counts per integer lag along one axis, restricted to pairs on the
/// same row (cross-axis distance within tolerance).
///
/// This is the autocorrelation of the per-row coordinate histograms with
/// 1 px bins, summed over rows.
pub fn lag_histogram(points: &[(f64, f64)], max_lag: usize, row_tolerance: f64) -> Vec<usize> {
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut counts = vec![0usize; max_lag + 2];
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if b.1 - a.1 > row_tolerance {
                break;
            }
            let lag = (b.0 - a.0).abs().round() as usize;
            if lag > 0 && lag < counts.len() {
                counts[lag] += 1;
            }
        }
    }
    counts
}

fn axis_period(
    points: &[(f64, f64)],
    extent: usize,
    axis: char,
    params: &SeparationParams,
) -> Result<f64> {
    let max_lag = extent / 2;
    if max_lag <= params.min_lag_px {
        return Err(Error::InsufficientData(format!(
            "image extent {extent} px too small"
        )));
    }
    let counts = lag_histogram(points, max_lag, params.row_tolerance_px);
    let score = |lag: usize| counts[lag - 1] + counts[lag] + counts[lag + 1];
    let first = params.min_lag_px.max(1);
    let best = (first..=max_lag).fold(
        first,
        |best, lag| if score(lag) > score(best) { lag } else { best },
    );
    let peak = score(best) as f64;
    let threshold = (params.significance * points.len() as f64).max(params.min_pairs as f64);
    if peak < threshold {
        return Err(Error::NoLatticeFound {
            axis,
            score: peak / points.len() as f64,
            threshold: threshold / points.len() as f64,
        });
    }
    // Refine: average the exact distance to each dot's neighbour near the peak lag.
    let target = best as f64;
    let mut sum = 0.0;
    let mut n = 0usize;
    for a in points {
        let nearest = points
            .iter()
            .filter(|b| (b.1 - a.1).abs() <= params.row_tolerance_px)
            .map(|b| b.0 - a.0)
            .filter(|d| (d - target).abs() <= 1.5)
            .min_by(|p, q| (p - target).abs().total_cmp(&(q - target).abs()));
        if let Some(d) = nearest {
            sum += d;
            n += 1;
        }
    }
    let period = if n > 0 { sum / n as f64 } else { target };
    if !(period > 0.0 && period < extent as f64) {
        return Err(Error::NoLatticeFound {
            axis,
            score: 0.0,
            threshold: params.significance,
        });
    }
    Ok(period)
}

/// Horizontal and vertical pattern separation of the dot lattice.
pub fn estimate_separation(dots: &DotSet, params: &SeparationParams) -> Result<Separation> {
    if dots.len() < MIN_DOTS_FOR_SEPARATION {
        return Err(Error::InsufficientData(format!(
            "{} dots, need at least {MIN_DOTS_FOR_SEPARATION}",
            dots.len()
        )));
    }
    let transposed: Vec<(f64, f64)> = dots.centers.iter().map(|&(x, y)| (y, x)).collect();
    Ok(Separation {
        hps_px: axis_period(&dots.centers, dots.width, 'x', params)?,
        vps_px: axis_period(&transposed, dots.height, 'y', params)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternMatrix {
    pub hps_px: f64,
    pub vps_px: f64,
    pub tile: BitMatrix,
    /// Lattice origin in image coordinates.
    pub anchor: (f64, f64),
}

/// Lattice phase minimizing the circular spread of `coords` modulo `pitch`,
/// expressed as a sub-cell origin in `[-pitch/2, pitch/2)`.
fn fold_anchor(coords: impl Iterator<Item = f64>, pitch: f64) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for v in coords {
        let theta = std::f64::consts::TAU * v / pitch;
        s += theta.sin();
        c += theta.cos();
    }
    let phase = s.atan2(c).rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * pitch;
    let anchor = phase - pitch / 2.0;
    (anchor + pitch / 2.0).rem_euclid(pitch) - pitch / 2.0
}

/// Recovers the dot tile by folding all dots into one `hps`×`vps` cell split
/// into `cell_grid = (rows, cols)` sub-cells.
///
/// A sub-cell is set when at least half of the lattice cells hold a dot in
/// it. Only cells lying fully inside the image and containing at least one
/// dot take part in the vote.
pub fn extract_tile(
    dots: &DotSet,
    hps_px: f64,
    vps_px: f64,
    cell_grid: (usize, usize),
) -> Result<PatternMatrix> {
    let (rows, cols) = cell_grid;
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("cell grid must be at least 1x1"));
    }
    if !(hps_px > 0.0 && vps_px > 0.0) {
        return Err(Error::invalid("periods must be positive"));
    }
    if dots.is_empty() {
        return Err(Error::InsufficientData("no dots to fold".into()));
    }
    let (sx, sy) = (hps_px / cols as f64, vps_px / rows as f64);
    let ax = fold_anchor(dots.centers.iter().map(|c| c.0), sx);
    let ay = fold_anchor(dots.centers.iter().map(|c| c.1), sy);

    let mut occupied: BTreeMap<(i64, i64), BTreeSet<(usize, usize)>> = BTreeMap::new();
    for &(x, y) in &dots.centers {
        let (fx, fy) = ((x - ax) / hps_px, (y - ay) / vps_px);
        let cell = (fx.floor() as i64, fy.floor() as i64);
        let col = (((fx - fx.floor()) * cols as f64).floor() as usize).min(cols - 1);
        let row = (((fy - fy.floor()) * rows as f64).floor() as usize).min(rows - 1);
        occupied.entry(cell).or_default().insert((row, col));
    }
    let inside = |cell: &(i64, i64)| {
        let x0 = ax + cell.0 as f64 * hps_px;
        let y0 = ay + cell.1 as f64 * vps_px;
        x0 + 0.5 * sx >= 0.0
            && x0 + (cols as f64 - 0.5) * sx <= (dots.width - 1) as f64
            && y0 + 0.5 * sy >= 0.0
            && y0 + (rows as f64 - 0.5) * sy <= (dots.height - 1) as f64
    };
    let full: Vec<&BTreeSet<(usize, usize)>> = occupied
        .iter()
        .filter(|(cell, _)| inside(cell))
        .map(|(_, s)| s)
        .collect();
    let voters: Vec<&BTreeSet<(usize, usize)>> = if full.is_empty() {
        occupied.values().collect()
    } else {
        full
    };

    let mut tile = BitMatrix::new(rows, cols, vec![false; rows * cols])?;
    for r in 0..rows {
        for c in 0..cols {
            let votes = voters.iter().filter(|s| s.contains(&(r, c))).count();
            tile.set(r, c, 2 * votes >= voters.len());
        }
    }
    if tile.is_empty() {
        return Err(Error::InsufficientData(
            "no sub-cell reached a majority".into(),
        ));
    }
    Ok(PatternMatrix {
        hps_px,
        vps_px,
        tile,
        anchor: (ax, ay),
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Nearest-neighbour upsampling of `tile` onto a `rows`×`cols` grid.
pub fn resample(tile: &BitMatrix, rows: usize, cols: usize) -> BitMatrix {
    let mut out = BitMatrix::new(rows, cols, vec![false; rows * cols]).expect("sized");
    for r in 0..rows {
        for c in 0..cols {
            out.set(
                r,
                c,
                tile.get(r * tile.rows() / rows, c * tile.cols() / cols),
            );
        }
    }
    out
}

/// Fraction of agreeing cells, maximized over cyclic shifts of `b`, after
/// both tiles are resampled to a common grid. Symmetric and in [0, 1].
pub fn match_patterns(a: &BitMatrix, b: &BitMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 || b.rows() == 0 || b.cols() == 0 {
        return 0.0;
    }
    let rows = lcm(a.rows(), b.rows());
    let cols = lcm(a.cols(), b.cols());
    let a = resample(a, rows, cols);
    let b = resample(b, rows, cols);
    let mut best = 0usize;
    for dr in 0..rows {
        for dc in 0..cols {
            let mut agree = 0;
            for r in 0..rows {
                for c in 0..cols {
                    if a.get(r, c) == b.get((r + dr) % rows, (c + dc) % cols) {
                        agree += 1;
                    }
                }
            }
            best = best.max(agree);
        }
    }
    best as f64 / (rows * cols) as f64
}

/// Settings recorded with a dot report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub detect: DetectParams,
    pub separation: SeparationParams,
    pub cell_rows: usize,
    pub cell_cols: usize,
}

/// JSON dot report produced by `extract` and consumed by `match`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DotReport {
    pub band: String,
    pub dot_count: usize,
    pub hps_px: f64,
    pub vps_px: f64,
    pub anchor: [f64; 2],
    pub tile: Vec<Vec<u8>>,
    pub parameters: ReportParameters,
}

impl DotReport {
    pub fn tile_matrix(&self) -> Result<BitMatrix> {
        BitMatrix::from_rows(&self.tile)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Full extraction on one band image: detect, estimate periods, fold.
pub fn analyze_band(
    image: &GrayImage,
    band: &str,
    detect: &DetectParams,
    separation: &SeparationParams,
    cell_grid: (usize, usize),
) -> Result<DotReport> {
    let dots = detect_dots(image, band, detect)?;
    let sep = estimate_separation(&dots, separation)?;
    let pattern = extract_tile(&dots, sep.hps_px, sep.vps_px, cell_grid)?;
    Ok(DotReport {
        band: band.to_string(),
        dot_count: dots.len(),
        hps_px: sep.hps_px,
        vps_px: sep.vps_px,
        anchor: [pattern.anchor.0, pattern.anchor.1],
        tile: pattern.tile.to_rows(),
        parameters: ReportParameters {
            detect: *detect,
            separation: *separation,
            cell_rows: cell_grid.0,
            cell_cols: cell_grid.1,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::{BitMatrix, DotLattice};
    use proptest::prelude::*;

    fn tile_2x3() -> BitMatrix {
        BitMatrix::parse("101,010").unwrap()
    }

    fn lattice_dots(w: usize, h: usize, hps: u32, vps: u32, tile: &BitMatrix) -> DotSet {
        let dots = DotLattice::new(hps, vps, tile.clone()).dots(w, h);
        DotSet::new(
            dots.iter().map(|d| (d.x as f64, d.y as f64)).collect(),
            w,
            h,
            "royal-blue",
        )
        .unwrap()
    }

    fn paint(w: usize, h: usize, spots: &[(usize, usize)], bg: u16, ink: u16) -> GrayImage {
        let mut data = vec![bg; w * h];
        for &(x, y) in spots {
            for (dx, dy) in [(0i64, 0i64), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                data[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize] = ink;
            }
        }
        GrayImage::new(w, h, 8, data).unwrap()
    }

    #[test]
    fn detects_plus_shaped_dots() {
        let spots = [(5, 5), (20, 7), (11, 30)];
        let img = paint(40, 40, &spots, 200, 30);
        let set = detect_dots(&img, "b", &DetectParams::default()).unwrap();
        assert_eq!(set.len(), 3);
        for (x, y) in spots {
            assert!(set
                .centers
                .iter()
                .any(|c| (c.0 - x as f64).abs() < 1e-9 && (c.1 - y as f64).abs() < 1e-9));
        }
        let bright = paint(40, 40, &spots, 30, 200);
        let params = DetectParams {
            polarity: Polarity::Bright,
            ..Default::default()
        };
        assert_eq!(detect_dots(&bright, "b", &params).unwrap().len(), 3);
    }

    #[test]
    fn blank_page_has_no_dots() {
        let img = GrayImage::filled(30, 20, 8, 190).unwrap();
        assert!(detect_dots(&img, "b", &DetectParams::default())
            .unwrap()
            .is_empty());
        let black = GrayImage::filled(30, 20, 8, 0).unwrap();
        assert!(detect_dots(&black, "b", &DetectParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn large_components_are_rejected() {
        let mut data = vec![200u16; 40 * 40];
        for y in 5..15 {
            for x in 5..15 {
                data[y * 40 + x] = 10;
            }
        }
        let img = GrayImage::new(40, 40, 8, data).unwrap();
        assert!(detect_dots(&img, "b", &DetectParams::default())
            .unwrap()
            .is_empty());
    }

    // Brute-force autocorrelation of per-row coordinate histograms.
    fn brute_lag_counts(points: &[(f64, f64)], max_lag: usize, tol: f64) -> Vec<usize> {
        let mut counts = vec![0; max_lag + 2];
        for i in 0..points.len() {
            for j in 0..points.len() {
                if i < j && (points[i].1 - points[j].1).abs() <= tol {
                    let lag = (points[i].0 - points[j].0).abs().round() as usize;
                    if lag > 0 && lag <= max_lag + 1 {
                        counts[lag] += 1;
                    }
                }
            }
        }
        counts
    }

    #[test]
    fn lag_histogram_matches_brute_force() {
        let dots = lattice_dots(300, 200, 64, 48, &tile_2x3());
        assert_eq!(
            lag_histogram(&dots.centers, 150, 1.5),
            brute_lag_counts(&dots.centers, 150, 1.5)
        );
    }

    #[test]
    fn separation_of_clean_lattice() {
        let dots = lattice_dots(600, 800, 64, 48, &tile_2x3());
        let sep = estimate_separation(&dots, &SeparationParams::default()).unwrap();
        assert!((sep.hps_px - 64.0).abs() <= 0.5, "{sep:?}");
        assert!((sep.vps_px - 48.0).abs() <= 0.5, "{sep:?}");
    }

    #[test]
    fn separation_errors() {
        let few = DotSet::new(vec![(1.0, 1.0); 5], 10, 10, "b").unwrap();
        assert!(matches!(
            estimate_separation(&few, &SeparationParams::default()),
            Err(Error::InsufficientData(_))
        ));
        let scattered: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                (
                    (i * 37 % 599) as f64,
                    (i * 113 % 797) as f64 + 0.3 * i as f64,
                )
            })
            .collect();
        let set = DotSet::new(scattered, 600, 800, "b").unwrap();
        assert!(matches!(
            estimate_separation(&set, &SeparationParams::default()),
            Err(Error::NoLatticeFound { .. })
        ));
    }

    #[test]
    fn tile_recovery() {
        let dots = lattice_dots(600, 800, 64, 48, &tile_2x3());
        let p = extract_tile(&dots, 64.0, 48.0, (2, 3)).unwrap();
        assert_eq!(p.tile, tile_2x3());
        let ones = BitMatrix::ones(2, 3);
        let dots = lattice_dots(600, 800, 64, 48, &ones);
        assert_eq!(extract_tile(&dots, 64.0, 48.0, (2, 3)).unwrap().tile, ones);
        let empty = DotSet::new(vec![], 10, 10, "b").unwrap();
        assert!(matches!(
            extract_tile(&empty, 64.0, 48.0, (2, 3)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn tile_recovery_under_translation() {
        let base = lattice_dots(600, 800, 64, 48, &tile_2x3());
        for (tx, ty) in [(64.0, 48.0), (128.0, -96.0), (3.0, -4.0), (-7.5, 2.25)] {
            let moved: Vec<_> = base
                .centers
                .iter()
                .map(|&(x, y)| (x + tx, y + ty))
                .filter(|&(x, y)| x >= 0.0 && y >= 0.0 && x < 600.0 && y < 800.0)
                .collect();
            let set = DotSet::new(moved, 600, 800, "b").unwrap();
            let p = extract_tile(&set, 64.0, 48.0, (2, 3)).unwrap();
            assert_eq!(p.tile, tile_2x3(), "translation ({tx}, {ty})");
        }
        // Arbitrary translations may relabel the cell origin; the recovered
        // tile is then a cyclic shift and still matches perfectly.
        let moved: Vec<_> = base
            .centers
            .iter()
            .map(|&(x, y)| (x + 30.0, y + 17.0))
            .filter(|&(x, y)| x < 600.0 && y < 800.0)
            .collect();
        let p = extract_tile(
            &DotSet::new(moved, 600, 800, "b").unwrap(),
            64.0,
            48.0,
            (2, 3),
        )
        .unwrap();
        assert_eq!(match_patterns(&p.tile, &tile_2x3()), 1.0);
    }

    // Exhaustive agreement over every cyclic shift, written out directly.
    fn shift_oracle(a: &BitMatrix, b: &BitMatrix) -> f64 {
        let mut best = 0.0f64;
        for dr in 0..a.rows() {
            for dc in 0..a.cols() {
                let s = b.shifted(dr, dc);
                let same = a
                    .cells()
                    .iter()
                    .zip(s.cells())
                    .filter(|(x, y)| x == y)
                    .count();
                best = best.max(same as f64 / a.cells().len() as f64);
            }
        }
        best
    }

    #[test]
    fn matching_examples() {
        let a = tile_2x3();
        assert_eq!(match_patterns(&a, &a), 1.0);
        assert_eq!(match_patterns(&a, &a.shifted(1, 2)), 1.0);
        let comp = a.complement();
        assert_eq!(match_patterns(&a, &comp), shift_oracle(&a, &comp));
        let other = BitMatrix::parse("100,000").unwrap();
        assert_eq!(match_patterns(&a, &other), shift_oracle(&a, &other));
        assert!((match_patterns(&a, &other) - 4.0 / 6.0).abs() < 1e-12);
        // Different grids are compared after resampling.
        let coarse = BitMatrix::parse("1,0").unwrap();
        let fine = BitMatrix::parse("11,11,00,00").unwrap();
        assert_eq!(match_patterns(&coarse, &fine), 1.0);
    }

    #[test]
    fn report_json_round_trip() {
        let dots = lattice_dots(300, 300, 64, 48, &tile_2x3());
        let img = paint(
            300,
            300,
            &dots
                .centers
                .iter()
                .map(|c| (c.0 as usize, c.1 as usize))
                .collect::<Vec<_>>(),
            200,
            20,
        );
        let report = analyze_band(
            &img,
            "royal-blue",
            &DetectParams::default(),
            &SeparationParams::default(),
            (2, 3),
        )
        .unwrap();
        assert_eq!(report.tile_matrix().unwrap(), tile_2x3());
        assert_eq!(
            DotReport::from_json(&report.to_json().unwrap()).unwrap(),
            report
        );
    }

    fn tile_strategy() -> impl Strategy<Value = BitMatrix> {
        (1usize..4, 1usize..4)
            .prop_flat_map(|(r, c)| {
                (
                    Just(r),
                    Just(c),
                    prop::collection::vec(any::<bool>(), r * c),
                )
            })
            .prop_map(|(r, c, cells)| BitMatrix::new(r, c, cells).unwrap())
    }

    proptest! {
        #[test]
        fn matching_is_symmetric_and_bounded(a in tile_strategy(), b in tile_strategy()) {
            let ab = match_patterns(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab, match_patterns(&b, &a));
            prop_assert_eq!(match_patterns(&a, &a), 1.0);
        }

        #[test]
        fn separation_is_translation_invariant(tx in -40.0f64..40.0, ty in -40.0f64..40.0) {
            let base = lattice_dots(600, 800, 64, 48, &tile_2x3());
            let moved = DotSet::new(
                base.centers.iter().map(|&(x, y)| (x + 50.0 + tx, y + 50.0 + ty)).collect(),
                800, 1000, "b",
            ).unwrap();
            let shifted_ref = DotSet::new(
                base.centers.iter().map(|&(x, y)| (x + 50.0, y + 50.0)).collect(),
                800, 1000, "b",
            ).unwrap();
            let p = SeparationParams::default();
            let a = estimate_separation(&shifted_ref, &p).unwrap();
            let b = estimate_separation(&moved, &p).unwrap();
            prop_assert!((a.hps_px - b.hps_px).abs() < 1e-9);
            prop_assert!((a.vps_px - b.vps_px).abs() < 1e-9);
        }
    }
}
