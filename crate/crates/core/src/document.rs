//! Synthetic documents: a palette of ink reflectances, a per-pixel palette
//! index map, and an optional lattice of yellow tracking dots stamped on top.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Spectrum, WavelengthGrid};

pub const PAPER: u8 = 0;
pub const BLACK: u8 = 1;
pub const RED: u8 = 2;
pub const ORANGE: u8 = 3;
pub const GREEN: u8 = 4;
pub const BLUE: u8 = 5;
pub const YELLOW: u8 = 6;

/// Reflectance of the paper stock.
pub const PAPER_WHITE: f64 = 0.9;
pub const DEFAULT_DPI: u32 = 100;
pub const DEFAULT_DOT_RADIUS: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct PaletteEntry {
    pub name: String,
    pub reflectance: Spectrum,
}

fn logistic(nm: f64, edge: f64, width: f64) -> f64 {
    1.0 / (1.0 + (-(nm - edge) / width).exp())
}

/// Paper, black toner and the five process/spot inks used by the test page.
pub fn default_palette(grid: &WavelengthGrid) -> Vec<PaletteEntry> {
    type Curve = Box<dyn Fn(f64) -> f64>;
    let curves: [(&str, Curve); 7] = [
        ("paper", Box::new(|_| PAPER_WHITE)),
        ("black", Box::new(|_| 0.05)),
        ("red", Box::new(|nm| 0.05 + 0.80 * logistic(nm, 600.0, 8.0))),
        (
            "orange",
            Box::new(|nm| 0.05 + 0.80 * logistic(nm, 565.0, 8.0)),
        ),
        (
            "green",
            Box::new(|nm| {
                0.05 + 0.65 * logistic(nm, 485.0, 8.0) * (1.0 - logistic(nm, 575.0, 8.0))
            }),
        ),
        (
            "blue",
            Box::new(|nm| 0.05 + 0.75 * (1.0 - logistic(nm, 500.0, 10.0))),
        ),
        (
            "yellow",
            Box::new(|nm| 0.12 + 0.78 * logistic(nm, 505.0, 10.0)),
        ),
    ];
    curves
        .into_iter()
        .map(|(name, f)| PaletteEntry {
            name: name.to_string(),
            reflectance: Spectrum::reflectance(*grid, grid.wavelengths().map(f).collect())
                .expect("default inks stay within [0, 1]"),
        })
        .collect()
}

/// Row-major boolean matrix used for dot tiles.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} cells for a {rows}x{cols} matrix",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("tile rows have unequal lengths"));
        }
        if rows.iter().flatten().any(|v| *v > 1) {
            return Err(Error::invalid("tile cells must be 0 or 1"));
        }
        Self::new(
            rows.len(),
            cols,
            rows.iter().flatten().map(|v| *v == 1).collect(),
        )
    }

    /// Parses rows of `0`/`1` characters separated by `,`, `/` or whitespace,
    /// e.g. `"101,010"`.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .split(|c: char| c == ',' || c == '/' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|row| {
                row.chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(Error::Config(format!(
                            "tile character {other:?} is not 0 or 1"
                        ))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![true; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.cells[row * self.cols + col] = value;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count_ones() == 0
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.cells
            .chunks(self.cols.max(1))
            .map(|r| r.iter().map(|c| u8::from(*c)).collect())
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|c| !c).collect(),
        }
    }

    /// Cyclic shift: result[r][c] = self[(r + dr) % rows][(c + dc) % cols].
    pub fn shifted(&self, dr: usize, dc: usize) -> Self {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get((r + dr) % self.rows, (c + dc) % self.cols));
            }
        }
        out
    }
}

impl std::fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<String> = self
            .to_rows()
            .iter()
            .map(|r| r.iter().map(|v| char::from(b'0' + v)).collect())
            .collect();
        f.write_str(&rows.join(","))
    }
}

/// A printed dot: integer center and disk radius in document pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dot {
    pub x: i64,
    pub y: i64,
    pub radius: u32,
}

impl Dot {
    /// Pixels covered by the disk, `dx² + dy² ≤ r²`.
    pub fn pixels(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let r = i64::from(self.radius);
        (-r..=r).flat_map(move |dy| {
            (-r..=r)
                .filter(move |dx| dx * dx + dy * dy <= r * r)
                .map(move |dx| (self.x + dx, self.y + dy))
        })
    }
}

/// Placement of a dot tile on a rectangular lattice.
///
/// Each `hps`×`vps` lattice cell is split into `tile.rows()`×`tile.cols()`
/// sub-cells and a dot is centered in every sub-cell whose tile bit is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DotLattice {
    pub hps_px: u32,
    pub vps_px: u32,
    pub tile: BitMatrix,
    pub origin: (i64, i64),
    pub radius: u32,
}

impl DotLattice {
    pub fn new(hps_px: u32, vps_px: u32, tile: BitMatrix) -> Self {
        Self {
            hps_px,
            vps_px,
            tile,
            origin: (0, 0),
            radius: DEFAULT_DOT_RADIUS,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hps_px == 0 || self.vps_px == 0 {
            return Err(Error::invalid("lattice periods must be positive"));
        }
        let min_pitch = 2 * self.radius as usize + 2;
        if self.tile.cols() * min_pitch > self.hps_px as usize
            || self.tile.rows() * min_pitch > self.vps_px as usize
        {
            return Err(Error::invalid(format!(
                "{}x{} tile with radius-{} dots does not fit a {}x{} cell",
                self.tile.rows(),
                self.tile.cols(),
                self.radius,
                self.hps_px,
                self.vps_px
            )));
        }
        Ok(())
    }

    fn sub_offset(period: u32, parts: usize, index: usize) -> i64 {
        ((index as f64 + 0.5) * f64::from(period) / parts as f64).round() as i64
    }

    /// Dot centers whose disks fit inside a `width`×`height` page.
    pub fn dots(&self, width: usize, height: usize) -> Vec<Dot> {
        let (hps, vps) = (i64::from(self.hps_px), i64::from(self.vps_px));
        let r = i64::from(self.radius);
        let (w, h) = (width as i64, height as i64);
        let first_i = (-self.origin.0).div_euclid(hps) - 1;
        let last_i = (w - self.origin.0).div_euclid(hps) + 1;
        let first_j = (-self.origin.1).div_euclid(vps) - 1;
        let last_j = (h - self.origin.1).div_euclid(vps) + 1;
        let mut out = Vec::new();
        for j in first_j..=last_j {
            for row in 0..self.tile.rows() {
                let y =
                    self.origin.1 + j * vps + Self::sub_offset(self.vps_px, self.tile.rows(), row);
                if y - r < 0 || y + r >= h {
                    continue;
                }
                for i in first_i..=last_i {
                    for col in 0..self.tile.cols() {
                        if !self.tile.get(row, col) {
                            continue;
                        }
                        let x = self.origin.0
                            + i * hps
                            + Self::sub_offset(self.hps_px, self.tile.cols(), col);
                        if x - r >= 0 && x + r < w {
                            out.push(Dot {
                                x,
                                y,
                                radius: self.radius,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentModel {
    width: usize,
    height: usize,
    dpi: u32,
    palette: Vec<PaletteEntry>,
    index_map: Vec<u8>,
    dots: Vec<Dot>,
    dot_ink: u8,
}

impl DocumentModel {
    pub fn new(
        width: usize,
        height: usize,
        palette: Vec<PaletteEntry>,
        index_map: Vec<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("document dimensions must be positive"));
        }
        if palette.is_empty() || palette.len() > 256 {
            return Err(Error::invalid("palette must hold 1..=256 entries"));
        }
        if palette[0]
            .reflectance
            .values()
            .iter()
            .any(|v| (v - PAPER_WHITE).abs() > 1e-12)
        {
            return Err(Error::invalid("palette entry 0 must be paper white"));
        }
        let grid = *palette[0].reflectance.grid();
        if palette.iter().any(|p| *p.reflectance.grid() != grid) {
            return Err(Error::invalid("palette spectra are on different grids"));
        }
        if palette
            .iter()
            .any(|p| p.reflectance.values().iter().any(|v| *v > 1.0))
        {
            return Err(Error::invalid("palette reflectance exceeds 1"));
        }
        if index_map.len() != width * height {
            return Err(Error::invalid("index map size does not match dimensions"));
        }
        if index_map.iter().any(|i| usize::from(*i) >= palette.len()) {
            return Err(Error::invalid(
                "index map references a missing palette entry",
            ));
        }
        Ok(Self {
            width,
            height,
            dpi: DEFAULT_DPI,
            palette,
            index_map,
            dots: Vec::new(),
            dot_ink: 0,
        })
    }

    pub fn with_dpi(mut self, dpi: u32) -> Result<Self> {
        if dpi == 0 {
            return Err(Error::invalid("dpi must be positive"));
        }
        self.dpi = dpi;
        Ok(self)
    }

    /// Adds dots of palette entry `ink`; they occlude whatever lies beneath.
    pub fn with_dots(mut self, dots: Vec<Dot>, ink: u8) -> Result<Self> {
        if usize::from(ink) >= self.palette.len() {
            return Err(Error::invalid("dot ink is not in the palette"));
        }
        let r_ok = |d: &Dot| {
            let r = i64::from(d.radius);
            d.x - r >= 0
                && d.y - r >= 0
                && d.x + r < self.width as i64
                && d.y + r < self.height as i64
        };
        if !dots.iter().all(r_ok) {
            return Err(Error::invalid("dot disk extends beyond the document"));
        }
        self.dots = dots;
        self.dot_ink = ink;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dpi(&self) -> u32 {
        self.dpi
    }

    pub fn palette(&self) -> &[PaletteEntry] {
        &self.palette
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.palette[0].reflectance.grid()
    }

    /// Ink layout before dots are stamped.
    pub fn index_map(&self) -> &[u8] {
        &self.index_map
    }

    pub fn dots(&self) -> &[Dot] {
        &self.dots
    }

    pub fn dot_ink(&self) -> u8 {
        self.dot_ink
    }

    /// Final palette index of every pixel with dots stamped on top.
    pub fn composited(&self) -> Vec<u8> {
        let mut map = self.index_map.clone();
        for dot in &self.dots {
            for (x, y) in dot.pixels() {
                map[y as usize * self.width + x as usize] = self.dot_ink;
            }
        }
        map
    }

    pub fn palette_index(&self, name: &str) -> Option<u8> {
        self.palette
            .iter()
            .position(|p| p.name == name)
            .map(|i| i as u8)
    }

    /// Replaces the reflectance of palette entry `name` (resampled to the
    /// document grid by the caller).
    pub fn set_reflectance(&mut self, name: &str, reflectance: Spectrum) -> Result<()> {
        let idx = self
            .palette_index(name)
            .ok_or_else(|| Error::invalid(format!("no palette entry named {name:?}")))?;
        if reflectance.grid() != self.grid() {
            return Err(Error::invalid(
                "replacement reflectance is on a different grid",
            ));
        }
        if reflectance.values().iter().any(|v| *v > 1.0) {
            return Err(Error::invalid("reflectance exceeds 1"));
        }
        if idx == 0
            && reflectance
                .values()
                .iter()
                .any(|v| (v - PAPER_WHITE).abs() > 1e-12)
        {
            return Err(Error::invalid("palette entry 0 must stay paper white"));
        }
        self.palette[usize::from(idx)].reflectance = reflectance;
        Ok(())
    }
}

/// Pixel rectangles of the test-page logo, as `(x0, y0, x1, y1, ink)`.
pub fn logo_regions(width: usize, height: usize) -> Vec<(usize, usize, usize, usize, u8)> {
    let fx = |f: f64| ((f * width as f64).round() as usize).min(width);
    let fy = |f: f64| ((f * height as f64).round() as usize).min(height);
    let mut regions = Vec::new();
    let (left, right) = (0.08, 0.92);
    let gap = 0.02;
    let block = (right - left - 3.0 * gap) / 4.0;
    for (k, ink) in [RED, ORANGE, GREEN, BLUE].into_iter().enumerate() {
        let x0 = left + k as f64 * (block + gap);
        regions.push((fx(x0), fy(0.08), fx(x0 + block), fy(0.28), ink));
    }
    // Text line below the logo: a run of glyph-sized black blocks.
    let glyph = 0.03;
    let spacing = 0.015;
    let mut x = left;
    while x + glyph <= right + 1e-9 {
        regions.push((fx(x), fy(0.33), fx(x + glyph), fy(0.39), BLACK));
        x += glyph + spacing;
    }
    regions
}

/// Builds the test page: red, orange, green and blue logo blocks, a black
/// text line, and `tile` repeated every `hps`×`vps` pixels in yellow.
///
/// An empty tile (no set bits) yields a page without dots.
pub fn build_test_document(
    width: usize,
    height: usize,
    hps_px: u32,
    vps_px: u32,
    tile: &BitMatrix,
) -> Result<DocumentModel> {
    build_test_document_with(
        width,
        height,
        &DotLattice::new(hps_px, vps_px, tile.clone()),
        &WavelengthGrid::visible(),
    )
}

pub fn build_test_document_with(
    width: usize,
    height: usize,
    lattice: &DotLattice,
    grid: &WavelengthGrid,
) -> Result<DocumentModel> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("document dimensions must be positive"));
    }
    let mut map = vec![PAPER; width * height];
    for (x0, y0, x1, y1, ink) in logo_regions(width, height) {
        for y in y0..y1 {
            map[y * width + x0..y * width + x1].fill(ink);
        }
    }
    let doc = DocumentModel::new(width, height, default_palette(grid), map)?;
    if lattice.tile.is_empty() {
        return Ok(doc);
    }
    lattice.validate()?;
    doc.with_dots(lattice.dots(width, height), YELLOW)
}
