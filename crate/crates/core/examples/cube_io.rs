//! Writes and reads an MSQB cube and shows how damaged files are reported.
//!
//!     cargo run --example cube_io

use specscan::cube::{decode_cube, encode_cube, Cube};

fn main() -> specscan::Result<()> {
    let (w, h) = (8, 4);
    let wavelengths = vec![447.5, 530.0, 655.0];
    let data = (0..w * h * wavelengths.len())
        .map(|i| (i * 977 % 65536) as u16)
        .collect();
    let cube = Cube::new(w, h, 16, wavelengths, data)?;

    let bytes = encode_cube(&cube);
    println!("{} bytes, header {:02x?}", bytes.len(), &bytes[..20]);
    assert_eq!(decode_cube(&bytes)?, cube);

    let mut bad_magic = bytes.clone();
    bad_magic[..4].copy_from_slice(b"TIFF");
    for (label, damaged) in [
        ("bad magic", &bad_magic[..]),
        ("truncated", &bytes[..bytes.len() - 10]),
    ] {
        match decode_cube(damaged) {
            Err(specscan::Error::Format(e)) => println!("{label}: code {} ({e})", e.code()),
            other => println!("{label}: unexpected {other:?}"),
        }
    }
    Ok(())
}
