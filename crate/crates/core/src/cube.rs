//! Band registration, cube assembly and the MSQB cube file format.
//!
//! MSQB layout, all integers little-endian:
//!
//! ```text
//! "MSQB"            4 bytes magic
//! version     u16   = 1
//! bit_depth   u16   8 or 16
//! width       u32
//! height      u32
//! band_count  u32
//! wavelengths f64 × band_count
//! samples     band-sequential, row-major within a band; u8 or u16
//! ```

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, FormatError, Result};
use crate::raster::{check_bit_depth, max_value, GrayImage, RgbImage};
use crate::scanner::BandScan;
use crate::spectral::slugify;

pub const MSQB_MAGIC: &[u8; 4] = b"MSQB";
pub const MSQB_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 2 + 4 + 4 + 4;

/// Default half-width of the registration search window, in pixels.
pub const DEFAULT_SEARCH_WINDOW: u32 = 8;

/// Value a flat band takes in a min-max stretched composite.
pub const FLAT_STRETCH_VALUE: u8 = 128;

/// Registered stack of band images with per-band center wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    width: usize,
    height: usize,
    bit_depth: u8,
    wavelengths_nm: Vec<f64>,
    data: Vec<u16>,
}

impl Cube {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        wavelengths_nm: Vec<f64>,
        data: Vec<u16>,
    ) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if width == 0 || height == 0 || wavelengths_nm.is_empty() {
            return Err(Error::invalid("cube dimensions must be positive"));
        }
        let increasing = wavelengths_nm.windows(2).all(|w| w[1] > w[0]);
        let decreasing = wavelengths_nm.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::invalid("band wavelengths must be strictly monotone"));
        }
        if data.len() != width * height * wavelengths_nm.len() {
            return Err(Error::invalid("cube payload does not match dimensions"));
        }
        let max = max_value(bit_depth);
        if data.iter().any(|v| *v > max) {
            return Err(Error::invalid(format!(
                "sample exceeds {bit_depth}-bit range"
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            wavelengths_nm,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_count(&self) -> usize {
        self.wavelengths_nm.len()
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn wavelengths_nm(&self) -> &[f64] {
        &self.wavelengths_nm
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn band_slice(&self, band: usize) -> &[u16] {
        let n = self.width * self.height;
        &self.data[band * n..(band + 1) * n]
    }

    pub fn band(&self, band: usize) -> Result<GrayImage> {
        if band >= self.band_count() {
            return Err(Error::invalid(format!(
                "band {band} out of range (cube has {})",
                self.band_count()
            )));
        }
        GrayImage::new(
            self.width,
            self.height,
            self.bit_depth,
            self.band_slice(band).to_vec(),
        )
    }

    /// Band whose center lies within `tolerance_nm` of `nm`.
    pub fn band_near(&self, nm: f64, tolerance_nm: f64) -> Option<usize> {
        self.wavelengths_nm
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - nm).abs()))
            .filter(|(_, d)| *d <= tolerance_nm)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

/// A cube plus the per-band translations used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledCube {
    pub cube: Cube,
    pub offsets_applied: Vec<(i32, i32)>,
    /// Top-left of the cube in the reference band's pixel frame.
    pub crop_origin: (usize, usize),
}

/// Index of the Green band when present, else the middle band.
pub fn default_reference_index(bands: &[BandScan]) -> usize {
    bands
        .iter()
        .position(|b| slugify(&b.band_name) == "green")
        .unwrap_or(bands.len() / 2)
}

fn check_same_dims(bands: &[BandScan]) -> Result<(usize, usize)> {
    let first = bands.first().ok_or_else(|| Error::invalid("no bands"))?;
    let dims = (first.width(), first.height());
    if bands.iter().any(|b| (b.width(), b.height()) != dims) {
        return Err(Error::invalid("bands have different dimensions"));
    }
    if bands
        .iter()
        .any(|b| b.image.bit_depth() != first.image.bit_depth())
    {
        return Err(Error::invalid("bands have different bit depths"));
    }
    Ok(dims)
}

struct Reference {
    width: usize,
    margin: usize,
    inner_w: usize,
    inner_h: usize,
    centered: Vec<f64>,
    norm: f64,
}

impl Reference {
    fn new(image: &GrayImage, margin: usize) -> Self {
        let values: Vec<f64> = image.data().iter().map(|v| f64::from(*v)).collect();
        let width = image.width();
        let inner_w = width - 2 * margin;
        let inner_h = image.height() - 2 * margin;
        let mut window = Vec::with_capacity(inner_w * inner_h);
        for y in margin..margin + inner_h {
            window.extend_from_slice(&values[y * width + margin..y * width + margin + inner_w]);
        }
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        let centered: Vec<f64> = window.iter().map(|v| v - mean).collect();
        let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            width,
            margin,
            inner_w,
            inner_h,
            centered,
            norm,
        }
    }

    /// Normalized cross-correlation of the reference window with `moving`
    /// displaced by `(u, v)`.
    fn ncc(&self, moving: &[f64], u: i32, v: i32) -> f64 {
        let n = (self.inner_w * self.inner_h) as f64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut cross = 0.0;
        for row in 0..self.inner_h {
            let y = (self.margin + row) as i64 + i64::from(v);
            let x0 = (self.margin as i64 + i64::from(u)) as usize;
            let start = y as usize * self.width + x0;
            let m = &moving[start..start + self.inner_w];
            let r = &self.centered[row * self.inner_w..(row + 1) * self.inner_w];
            for (a, b) in r.iter().zip(m) {
                sum += b;
                sum_sq += b * b;
                cross += a * b;
            }
        }
        // Σ r'·(b - mean_b) = Σ r'·b because Σ r' = 0.
        let var_b = sum_sq - sum * sum / n;
        if self.norm <= 0.0 || var_b <= 1e-12 {
            return 0.0;
        }
        cross / (self.norm * var_b.sqrt())
    }
}

/// Integer translation of every band relative to `reference_index`,
/// found by exhaustive normalized cross-correlation over `[-window, window]²`.
///
/// The returned offset `(dx, dy)` means band content appears displaced by
/// `(dx, dy)` relative to the reference; the reference maps to `(0, 0)`.
pub fn register_bands(
    bands: &[BandScan],
    reference_index: usize,
    window: u32,
) -> Result<Vec<(i32, i32)>> {
    if bands.len() < 2 {
        return Err(Error::invalid("registration needs at least 2 bands"));
    }
    let (width, height) = check_same_dims(bands)?;
    if reference_index >= bands.len() {
        return Err(Error::invalid(format!(
            "reference band {reference_index} out of range"
        )));
    }
    let margin = window as usize;
    if width <= 2 * margin + 1 || height <= 2 * margin + 1 {
        return Err(Error::invalid(format!(
            "{width}x{height} bands are too small for a ±{window} px search window"
        )));
    }
    let reference = Reference::new(&bands[reference_index].image, margin);
    let w = window as i32;
    let candidates: Vec<(i32, i32)> = (-w..=w)
        .flat_map(|v| (-w..=w).map(move |u| (u, v)))
        .collect();
    Ok(bands
        .par_iter()
        .enumerate()
        .map(|(i, band)| {
            if i == reference_index {
                return (0, 0);
            }
            let moving: Vec<f64> = band.image.data().iter().map(|v| f64::from(*v)).collect();
            let scored: Vec<((i32, i32), f64)> = candidates
                .iter()
                .map(|&(u, v)| ((u, v), reference.ncc(&moving, u, v)))
                .collect();
            best_candidate(&scored)
        })
        .collect())
}

/// Highest score wins; ties go to the smaller displacement, then to the
/// earlier candidate.
fn best_candidate(scored: &[((i32, i32), f64)]) -> (i32, i32) {
    let mut best = scored[0];
    for &cand in &scored[1..] {
        let better = cand.1 > best.1
            || (cand.1 == best.1
                && cand.0 .0.abs() + cand.0 .1.abs() < best.0 .0.abs() + best.0 .1.abs());
        if better {
            best = cand;
        }
    }
    best.0
}

/// Undoes each band's offset and crops to the region every band observes.
pub fn assemble_cube(bands: &[BandScan], offsets: &[(i32, i32)]) -> Result<AssembledCube> {
    if bands.is_empty() {
        return Err(Error::invalid("cannot assemble a cube from zero bands"));
    }
    if offsets.len() != bands.len() {
        return Err(Error::invalid("need exactly one offset per band"));
    }
    let (width, height) = check_same_dims(bands)?;
    let lo = |axis: fn(&(i32, i32)) -> i32| {
        offsets.iter().map(|o| (-axis(o)).max(0)).max().unwrap_or(0) as usize
    };
    let hi = |axis: fn(&(i32, i32)) -> i32| {
        offsets.iter().map(|o| axis(o).max(0)).max().unwrap_or(0) as usize
    };
    let (x0, y0) = (lo(|o| o.0), lo(|o| o.1));
    let (x_trim, y_trim) = (hi(|o| o.0), hi(|o| o.1));
    if x0 + x_trim >= width || y0 + y_trim >= height {
        return Err(Error::invalid("offsets leave no common region"));
    }
    let cw = width - x0 - x_trim;
    let ch = height - y0 - y_trim;
    let mut data = Vec::with_capacity(cw * ch * bands.len());
    for (band, &(dx, dy)) in bands.iter().zip(offsets) {
        let sx = (x0 as i64 + i64::from(dx)) as usize;
        let sy = (y0 as i64 + i64::from(dy)) as usize;
        for y in 0..ch {
            data.extend_from_slice(&band.image.row(sy + y)[sx..sx + cw]);
        }
    }
    let cube = Cube::new(
        cw,
        ch,
        bands[0].image.bit_depth(),
        bands.iter().map(|b| b.center_nm).collect(),
        data,
    )?;
    Ok(AssembledCube {
        cube,
        offsets_applied: offsets.to_vec(),
        crop_origin: (x0, y0),
    })
}

pub fn encode_cube(cube: &Cube) -> Vec<u8> {
    let bytes_per = if cube.bit_depth == 8 { 1 } else { 2 };
    let mut out =
        Vec::with_capacity(HEADER_LEN + 8 * cube.band_count() + cube.data.len() * bytes_per);
    out.extend_from_slice(MSQB_MAGIC);
    out.extend_from_slice(&MSQB_VERSION.to_le_bytes());
    out.extend_from_slice(&u16::from(cube.bit_depth).to_le_bytes());
    out.extend_from_slice(&(cube.width as u32).to_le_bytes());
    out.extend_from_slice(&(cube.height as u32).to_le_bytes());
    out.extend_from_slice(&(cube.band_count() as u32).to_le_bytes());
    for w in &cube.wavelengths_nm {
        out.extend_from_slice(&w.to_le_bytes());
    }
    if cube.bit_depth == 8 {
        out.extend(cube.data.iter().map(|v| *v as u8));
    } else {
        for v in &cube.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_cube(bytes: &[u8]) -> Result<Cube> {
    if bytes.len() < 4 || &bytes[..4] != MSQB_MAGIC {
        return Err(FormatError::BadMagic {
            expected: "MSQB".into(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned(),
        }
        .into());
    }
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        }
        .into());
    }
    let u16_at = |p: usize| u16::from_le_bytes([bytes[p], bytes[p + 1]]);
    let u32_at = |p: usize| u32::from_le_bytes(bytes[p..p + 4].try_into().expect("4 bytes"));
    let version = u16_at(4);
    if version != MSQB_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let bit_depth = u16_at(6);
    if bit_depth != 8 && bit_depth != 16 {
        return Err(FormatError::Malformed(format!("bit depth {bit_depth}")).into());
    }
    let width = u32_at(8) as usize;
    let height = u32_at(12) as usize;
    let bands = u32_at(16) as usize;
    if width == 0 || height == 0 || bands == 0 {
        return Err(FormatError::Malformed(format!("dimensions {width}x{height}x{bands}")).into());
    }
    let bytes_per = usize::from(bit_depth / 8);
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bands))
        .and_then(|n| n.checked_mul(bytes_per))
        .and_then(|n| n.checked_add(HEADER_LEN + 8 * bands))
        .ok_or_else(|| FormatError::Malformed("dimensions overflow".into()))?;
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => {
            return Err(FormatError::Truncated {
                expected,
                actual: bytes.len(),
            }
            .into())
        }
        std::cmp::Ordering::Greater => {
            return Err(FormatError::SizeMismatch {
                expected,
                actual: bytes.len(),
            }
            .into())
        }
        std::cmp::Ordering::Equal => {}
    }
    let wavelengths: Vec<f64> = bytes[HEADER_LEN..HEADER_LEN + 8 * bands]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let payload = &bytes[HEADER_LEN + 8 * bands..];
    let data: Vec<u16> = if bit_depth == 8 {
        payload.iter().map(|b| u16::from(*b)).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };
    Cube::new(width, height, bit_depth as u8, wavelengths, data)
        .map_err(|e| FormatError::Malformed(e.to_string()).into())
}

pub fn write_cube(cube: &Cube, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_cube(cube))?;
    Ok(())
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<Cube> {
    decode_cube(&std::fs::read(path)?)
}

fn stretch(band: &[u16]) -> Vec<u8> {
    let min = band.iter().copied().min().unwrap_or(0);
    let max = band.iter().copied().max().unwrap_or(0);
    if min == max {
        return vec![FLAT_STRETCH_VALUE; band.len()];
    }
    let span = f64::from(max - min);
    band.iter()
        .map(|v| (f64::from(v - min) * 255.0 / span).round() as u8)
        .collect()
}

/// Maps three bands to R, G and B, each min-max stretched to 0..=255.
pub fn composite_rgb(cube: &Cube, r_band: usize, g_band: usize, b_band: usize) -> Result<RgbImage> {
    for b in [r_band, g_band, b_band] {
        if b >= cube.band_count() {
            return Err(Error::invalid(format!(
                "band {b} out of range (cube has {})",
                cube.band_count()
            )));
        }
    }
    let r = stretch(cube.band_slice(r_band));
    let g = stretch(cube.band_slice(g_band));
    let b = stretch(cube.band_slice(b_band));
    Ok(RgbImage {
        width: cube.width,
        height: cube.height,
        data: r
            .iter()
            .zip(&g)
            .zip(&b)
            .map(|((r, g), b)| [*r, *g, *b])
            .collect(),
    })
}

/// Writes [`composite_rgb`] as a binary PPM.
pub fn write_composite_rgb(
    cube: &Cube,
    r_band: usize,
    g_band: usize,
    b_band: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    crate::raster::write_ppm(&composite_rgb(cube, r_band, g_band, b_band)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn band(name: &str, nm: f64, w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> BandScan {
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        BandScan {
            band_name: name.into(),
            center_nm: nm,
            image: GrayImage::new(w, h, 8, data).unwrap(),
            true_offset_px: (0, 0),
        }
    }

    // Deterministic texture with a unique correlation peak.
    fn texture(x: i64, y: i64) -> u16 {
        let h = (x.wrapping_mul(73_856_093) ^ y.wrapping_mul(19_349_663)).rem_euclid(1 << 20);
        (h % 200) as u16 + 20
    }

    #[test]
    fn duplicated_band_registers_to_zero() {
        let a = band("a", 500.0, 40, 30, |x, y| texture(x as i64, y as i64));
        let b = BandScan {
            band_name: "b".into(),
            center_nm: 600.0,
            ..a.clone()
        };
        assert_eq!(register_bands(&[a, b], 0, 4).unwrap(), vec![(0, 0), (0, 0)]);
    }

    #[test]
    fn recovers_known_shift() {
        let a = band("a", 500.0, 48, 40, |x, y| texture(x as i64, y as i64));
        let b = band("b", 600.0, 48, 40, |x, y| {
            255 - texture(x as i64 - 3, y as i64 + 2)
        });
        // Inverted contrast: NCC is negative, so pick a positively related band.
        let c = band("c", 650.0, 48, 40, |x, y| {
            texture(x as i64 - 3, y as i64 + 2) / 2 + 10
        });
        let offsets = register_bands(&[a, b, c], 0, 5).unwrap();
        assert_eq!(offsets[0], (0, 0));
        assert_eq!(offsets[2], (3, -2));
    }

    #[test]
    fn registration_errors() {
        let a = band("a", 500.0, 40, 30, |_, _| 0);
        let b = band("b", 600.0, 41, 30, |_, _| 0);
        assert!(matches!(
            register_bands(&[a.clone(), b], 0, 4),
            Err(Error::InvalidArgument(_))
        ));
        assert!(register_bands(std::slice::from_ref(&a), 0, 4).is_err());
        assert!(register_bands(&[a.clone(), a.clone()], 2, 4).is_err());
        assert!(register_bands(&[a.clone(), a], 0, 20).is_err());
    }

    #[test]
    fn assembly_crops_to_overlap() {
        let bands: Vec<_> = (0..3)
            .map(|k| band("x", 400.0 + 100.0 * k as f64, 20, 10, |x, y| (x + y) as u16))
            .collect();
        let zero = assemble_cube(&bands, &[(0, 0); 3]).unwrap();
        assert_eq!((zero.cube.width(), zero.cube.height()), (20, 10));

        let offs = [(0, 0), (3, -2), (-3, 1)];
        let a = assemble_cube(&bands, &offs).unwrap();
        assert_eq!((a.cube.width(), a.cube.height()), (14, 7));
        assert_eq!(a.crop_origin, (3, 2));
        // Cube pixel (0,0) of band 1 comes from source (3+3, 2-2).
        assert_eq!(a.cube.band_slice(1)[0], 6);
        assert!(assemble_cube(&[], &[]).is_err());
    }

    #[test]
    fn magic_and_truncation_errors() {
        let cube = Cube::new(
            2,
            2,
            16,
            vec![450.0, 650.0],
            (0..8).map(|v| v * 1000).collect(),
        )
        .unwrap();
        let mut bytes = encode_cube(&cube);
        assert_eq!(decode_cube(&bytes).unwrap(), cube);
        let short = &bytes[..bytes.len() - 3];
        let e = decode_cube(short).unwrap_err();
        assert!(matches!(e, Error::Format(FormatError::Truncated { .. })));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_cube(&long),
            Err(Error::Format(FormatError::SizeMismatch { .. }))
        ));
        bytes[0] = b'X';
        let e2 = decode_cube(&bytes).unwrap_err();
        assert!(matches!(e2, Error::Format(FormatError::BadMagic { .. })));
        let (Error::Format(a), Error::Format(b)) = (e, e2) else {
            unreachable!()
        };
        assert_ne!(a.code(), b.code());
    }

    #[test]
    fn header_is_bit_exact() {
        let cube = Cube::new(3, 1, 8, vec![655.0], vec![1, 2, 3]).unwrap();
        let bytes = encode_cube(&cube);
        let mut expected = b"MSQB".to_vec();
        expected.extend_from_slice(&[1, 0, 8, 0, 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend_from_slice(&655.0f64.to_le_bytes());
        expected.extend_from_slice(&[1, 2, 3]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn cube_invariants() {
        assert!(Cube::new(1, 1, 8, vec![500.0, 600.0, 550.0], vec![0; 3]).is_err());
        assert!(Cube::new(1, 1, 8, vec![500.0], vec![0; 2]).is_err());
        assert!(Cube::new(1, 1, 8, vec![500.0], vec![300]).is_err());
    }

    #[test]
    fn composite_channels() {
        let cube = Cube::new(
            2,
            1,
            8,
            vec![655.0, 530.0, 447.5],
            vec![10, 20, 5, 5, 0, 100],
        )
        .unwrap();
        let rgb = composite_rgb(&cube, 0, 1, 2).unwrap();
        assert_eq!(rgb.data, vec![[0, 128, 0], [255, 128, 255]]);
        let gray = composite_rgb(&cube, 2, 2, 2).unwrap();
        assert!(gray.data.iter().all(|p| p[0] == p[1] && p[1] == p[2]));
        let swapped = composite_rgb(&cube, 2, 1, 0).unwrap();
        for (a, b) in rgb.data.iter().zip(&swapped.data) {
            assert_eq!([a[2], a[1], a[0]], *b);
        }
        assert!(composite_rgb(&cube, 0, 1, 3).is_err());
    }

    #[test]
    fn band_lookup() {
        let cube = Cube::new(1, 1, 8, vec![655.0, 530.0, 447.5], vec![0; 3]).unwrap();
        assert_eq!(cube.band_near(447.0, 1.0), Some(2));
        assert_eq!(cube.band_near(600.0, 1.0), None);
        assert!(cube.band(3).is_err());
    }

    proptest! {
        #[test]
        fn msqb_round_trips(w in 1usize..6, h in 1usize..6, bands in 1usize..4, deep in any::<bool>(), seed in any::<u32>()) {
            let bit_depth = if deep { 16 } else { 8 };
            let max = u32::from(max_value(bit_depth));
            let data = (0..w * h * bands)
                .map(|i| (seed.wrapping_mul(2_654_435_761).wrapping_add(i as u32 * 40_503) % (max + 1)) as u16)
                .collect();
            let wavelengths = (0..bands).map(|b| 700.0 - 41.25 * b as f64).collect();
            let cube = Cube::new(w, h, bit_depth, wavelengths, data).unwrap();
            prop_assert_eq!(decode_cube(&encode_cube(&cube)).unwrap(), cube);
        }
    }
}
