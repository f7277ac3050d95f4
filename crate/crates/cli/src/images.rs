//! Image files: 16-bit binary PGM for display, raw little-endian `f32`
//! intensities for analysis. Both are written in depth rows, shallowest first.

use std::io::Write;
use std::path::Path;

use kkbeam_core::metrics::gamma_match;
use kkbeam_core::IntensityImage;

use crate::error::{CliError, Result};

/// 16-bit PGM bytes for a display image with values in `[0, 1]`.
pub fn pgm_bytes(display: &IntensityImage) -> Vec<u8> {
    let g = display.grid();
    let mut out = format!("P5\n{} {}\n65535\n", g.nx(), g.nz()).into_bytes();
    out.reserve(display.pixels().len() * 2);
    for &v in display.pixels() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

/// Little-endian `f32` dump of the intensity pixels.
pub fn raw_bytes(image: &IntensityImage) -> Vec<u8> {
    image
        .pixels()
        .iter()
        .flat_map(|&v| (v as f32).to_le_bytes())
        .collect()
}

/// Display image gamma-matched to `reference`; all-zero images stay black.
pub fn display_image(
    image: &IntensityImage,
    reference: &IntensityImage,
) -> Result<(f64, IntensityImage)> {
    if image.max() == 0.0 {
        return Ok((1.0, image.clone()));
    }
    let reference = if reference.max() > 0.0 {
        reference
    } else {
        image
    };
    Ok(gamma_match(image, reference)?)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use kkbeam_core::ImageGrid;

    #[test]
    fn pgm_layout() {
        let grid = ImageGrid::new(0.0, 1e-3, 1e-4, 1e-4, 3, 2).unwrap();
        let img = IntensityImage::new(grid, vec![0.0, 0.5, 1.0, 0.25, 0.75, 1.0]).unwrap();
        let bytes = pgm_bytes(&img);
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let body = &bytes[header.len()..];
        assert_eq!(body.len(), 12);
        assert_eq!(&body[2..4], &32768u16.to_be_bytes());
        assert_eq!(&body[4..6], &[0xff, 0xff]);
        assert_eq!(raw_bytes(&img).len(), 24);
    }

    #[test]
    fn black_stays_black() {
        let grid = ImageGrid::new(0.0, 1e-3, 1e-4, 1e-4, 2, 2).unwrap();
        let img = IntensityImage::new(grid, vec![0.0; 4]).unwrap();
        let (_, d) = display_image(&img, &img).unwrap();
        assert!(pgm_bytes(&d)[14..].iter().all(|&b| b == 0));
    }
}
