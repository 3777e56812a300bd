//! Grayscale/RGB rasters and binary netpbm (P5/P6) encoding.
//!
//! PGM files may carry `# key: value` comment lines in the header; they are
//! preserved on read so band metadata can travel with the pixels.

use std::path::Path;

use crate::error::{Error, FormatError, Result};

/// Single-channel image with 8- or 16-bit samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    data: Vec<u16>,
}

pub(crate) fn check_bit_depth(bit_depth: u8) -> Result<()> {
    if bit_depth == 8 || bit_depth == 16 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "bit depth must be 8 or 16, got {bit_depth}"
        )))
    }
}

pub(crate) fn max_value(bit_depth: u8) -> u16 {
    if bit_depth == 8 {
        u8::MAX as u16
    } else {
        u16::MAX
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, bit_depth: u8, data: Vec<u16>) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
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
            data,
        })
    }

    pub fn filled(width: usize, height: usize, bit_depth: u8, value: u16) -> Result<Self> {
        Self::new(width, height, bit_depth, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn max_value(&self) -> u16 {
        max_value(self.bit_depth)
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u16] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Copies the `width`x`height` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<GrayImage> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::invalid("crop window exceeds image"));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            data.extend_from_slice(&self.row(y)[x0..x0 + width]);
        }
        GrayImage::new(width, height, self.bit_depth, data)
    }
}

/// Interleaved 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }
}

/// Encodes a binary PGM. 16-bit samples are big-endian.
pub fn encode_pgm(image: &GrayImage, comments: &[String]) -> Vec<u8> {
    let mut out = b"P5\n".to_vec();
    for c in comments {
        for line in c.lines() {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
    }
    out.extend_from_slice(
        format!("{} {}\n{}\n", image.width, image.height, image.max_value()).as_bytes(),
    );
    if image.bit_depth == 8 {
        out.extend(image.data.iter().map(|v| *v as u8));
    } else {
        for v in &image.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
    std::fs::write(path, encode_pgm(image, comments))?;
    Ok(())
}

pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    for px in &image.data {
        out.extend_from_slice(px);
    }
    out
}

pub fn write_ppm(image: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_ppm(image))?;
    Ok(())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    comments: Vec<String>,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                let end = self.bytes[self.pos..]
                    .iter()
                    .position(|c| *c == b'\n')
                    .map_or(self.bytes.len(), |p| self.pos + p);
                let text = String::from_utf8_lossy(&self.bytes[self.pos + 1..end]);
                self.comments.push(text.trim().to_string());
                self.pos = end;
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::Malformed(format!("missing or invalid {what}")).into())
    }
}

struct NetpbmHeader {
    width: usize,
    height: usize,
    maxval: usize,
    data_start: usize,
    comments: Vec<String>,
}

fn parse_header(bytes: &[u8], magic: &[u8; 2]) -> Result<NetpbmHeader> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        }
        .into());
    }
    let mut cur = HeaderCursor {
        bytes,
        pos: 2,
        comments: Vec::new(),
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(
            FormatError::Malformed("header must end with one whitespace byte".into()).into(),
        );
    }
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(FormatError::Malformed(format!(
            "bad dimensions or maxval {width}x{height}/{maxval}"
        ))
        .into());
    }
    Ok(NetpbmHeader {
        width,
        height,
        maxval,
        data_start: cur.pos + 1,
        comments: cur.comments,
    })
}

fn check_payload(expected: usize, actual: usize) -> Result<()> {
    match actual.cmp(&expected) {
        std::cmp::Ordering::Less => Err(FormatError::Truncated { expected, actual }.into()),
        std::cmp::Ordering::Greater => Err(FormatError::SizeMismatch { expected, actual }.into()),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

/// Decodes a binary PGM, returning the image and its header comments.
///
/// Only maxval 255 and 65535 are accepted, matching the two bit depths the
/// pipeline produces.
pub fn decode_pgm(bytes: &[u8]) -> Result<(GrayImage, Vec<String>)> {
    let h = parse_header(bytes, b"P5")?;
    let bit_depth = match h.maxval {
        255 => 8,
        65535 => 16,
        other => return Err(FormatError::Malformed(format!("unsupported maxval {other}")).into()),
    };
    let bytes_per = if bit_depth == 8 { 1 } else { 2 };
    let payload = &bytes[h.data_start..];
    check_payload(h.width * h.height * bytes_per, payload.len())?;
    let data = if bit_depth == 8 {
        payload.iter().map(|b| u16::from(*b)).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok((
        GrayImage::new(h.width, h.height, bit_depth, data)?,
        h.comments,
    ))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(GrayImage, Vec<String>)> {
    decode_pgm(&std::fs::read(path)?)
}

pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage> {
    let h = parse_header(bytes, b"P6")?;
    if h.maxval != 255 {
        return Err(FormatError::Malformed(format!("unsupported PPM maxval {}", h.maxval)).into());
    }
    let payload = &bytes[h.data_start..];
    check_payload(h.width * h.height * 3, payload.len())?;
    Ok(RgbImage {
        width: h.width,
        height: h.height,
        data: payload
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect(),
    })
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<RgbImage> {
    decode_ppm(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_header_layout() {
        let img = GrayImage::new(2, 1, 16, vec![0x0102, 0xfffe]).unwrap();
        let bytes = encode_pgm(&img, &["band: green".into()]);
        assert_eq!(
            &bytes[..],
            b"P5\n# band: green\n2 1\n65535\n\x01\x02\xff\xfe"
        );
        let (back, comments) = decode_pgm(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(comments, vec!["band: green".to_string()]);
    }

    #[test]
    fn pgm_errors() {
        let img = GrayImage::new(3, 2, 8, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let bytes = encode_pgm(&img, &[]);
        assert!(matches!(
            decode_pgm(&bytes[..bytes.len() - 1]),
            Err(Error::Format(FormatError::Truncated { .. }))
        ));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            decode_pgm(&long),
            Err(Error::Format(FormatError::SizeMismatch { .. }))
        ));
        assert!(matches!(
            decode_pgm(b"P6\n1 1\n255\n\0\0\0"),
            Err(Error::Format(FormatError::BadMagic { .. }))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n100\n\0"),
            Err(Error::Format(FormatError::Malformed(_)))
        ));
    }

    #[test]
    fn sample_range_checked() {
        assert!(GrayImage::new(1, 1, 8, vec![256]).is_err());
        assert!(GrayImage::new(1, 1, 12, vec![0]).is_err());
        assert!(GrayImage::new(2, 2, 8, vec![0; 3]).is_err());
    }

    #[test]
    fn ppm_round_trip() {
        let img = RgbImage {
            width: 2,
            height: 1,
            data: vec![[1, 2, 3], [250, 251, 252]],
        };
        assert_eq!(decode_ppm(&encode_ppm(&img)).unwrap(), img);
    }

    #[test]
    fn crop_window() {
        let img = GrayImage::new(3, 3, 8, (0..9).collect()).unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.data(), &[4, 5, 7, 8]);
        assert!(img.crop(2, 2, 2, 2).is_err());
    }

    proptest! {
        #[test]
        fn pgm_round_trips(w in 1usize..12, h in 1usize..12, deep in any::<bool>(), seed in any::<u64>()) {
            let bit_depth = if deep { 16 } else { 8 };
            let max = u64::from(max_value(bit_depth));
            let data = (0..w * h)
                .map(|i| ((seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64).wrapping_mul(1442695040888963407) >> 17) % (max + 1)) as u16)
                .collect();
            let img = GrayImage::new(w, h, bit_depth, data).unwrap();
            let (back, _) = decode_pgm(&encode_pgm(&img, &["x: 1".into()])).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}
