//! Raster file formats: binary PGM (P5), the little-endian float grid
//! format SGRD, and binary PPM (P6) for colored label overlays.
//!
//! SGRD layout: ASCII magic `SGRD`, `u32` width, `u32` height (both
//! little-endian), then `width * height` little-endian `f32` values in
//! row-major order with no padding.

use std::fs;
use std::path::Path;

use crate::error::{Result, TexlabError};
use crate::imagecore::Raster;

pub const SGRD_MAGIC: &[u8; 4] = b"SGRD";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterFormat {
    /// Binary greymap, maxval 255. Values map to `[0, 1]` by `/255`.
    Pgm,
    /// Float32 grid, stored verbatim.
    Sgrd,
}

impl RasterFormat {
    /// Picks the format from a file extension (`.pgm` or `.sgrd`).
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("pgm") => Ok(RasterFormat::Pgm),
            Some("sgrd") => Ok(RasterFormat::Sgrd),
            _ => Err(TexlabError::format(format!(
                "cannot infer raster format of {}",
                path.display()
            ))),
        }
    }
}

pub fn read_raster(path: impl AsRef<Path>, format: RasterFormat) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| TexlabError::io(path, e))?;
    decode_raster(&bytes, format)
        .map_err(|e| TexlabError::format(format!("{}: {}", path.display(), strip_kind(e))))
}

/// Reads a raster choosing the format from the extension.
pub fn read_raster_auto(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    read_raster(path, RasterFormat::from_path(path)?)
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>, format: RasterFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_raster(raster, format)?;
    fs::write(path, bytes).map_err(|e| TexlabError::io(path, e))
}

pub fn decode_raster(bytes: &[u8], format: RasterFormat) -> Result<Raster> {
    match format {
        RasterFormat::Pgm => decode_pgm(bytes),
        RasterFormat::Sgrd => decode_sgrd(bytes),
    }
}

pub fn encode_raster(raster: &Raster, format: RasterFormat) -> Result<Vec<u8>> {
    match format {
        RasterFormat::Pgm => Ok(encode_pgm(raster)),
        RasterFormat::Sgrd => encode_sgrd(raster),
    }
}

fn strip_kind(e: TexlabError) -> String {
    match e {
        TexlabError::Format(m) | TexlabError::Argument(m) => m,
        other => other.to_string(),
    }
}

fn decode_sgrd(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 12 {
        return Err(TexlabError::format("SGRD header truncated"));
    }
    if &bytes[..4] != SGRD_MAGIC {
        return Err(TexlabError::format("bad SGRD magic"));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(TexlabError::format(format!(
            "SGRD has zero dimension {width}x{height}"
        )));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| TexlabError::format("SGRD dimensions overflow"))?;
    let payload = &bytes[12..];
    if payload.len() != expected {
        return Err(TexlabError::format(format!(
            "SGRD payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Raster::new(width, height, data).map_err(|e| TexlabError::format(strip_kind(e)))
}

fn encode_sgrd(raster: &Raster) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + 4 * raster.data().len());
    out.extend_from_slice(SGRD_MAGIC);
    out.extend_from_slice(&(raster.width() as u32).to_le_bytes());
    out.extend_from_slice(&(raster.height() as u32).to_le_bytes());
    for &v in raster.data() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(TexlabError::arg(format!("value {v} does not fit in f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

/// Splits the whitespace-separated PNM header tokens, honouring `#`
/// comments. Returns the tokens and the offset just past the single
/// whitespace byte that terminates the last token.
fn pnm_header(bytes: &[u8], count: usize) -> Result<(Vec<String>, usize)> {
    let mut tokens = Vec::with_capacity(count);
    let mut i = 0;
    while tokens.len() < count {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(TexlabError::format("PNM header truncated"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(TexlabError::format("PNM header not terminated"));
    }
    Ok((tokens, i + 1))
}

fn parse_dim(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| TexlabError::format(format!("bad PGM {what} {tok:?}")))
}

fn decode_pgm(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(TexlabError::format("bad PGM magic (expected P5)"));
    }
    let (tokens, offset) = pnm_header(bytes, 4)?;
    let width = parse_dim(&tokens[1], "width")?;
    let height = parse_dim(&tokens[2], "height")?;
    let maxval = parse_dim(&tokens[3], "maxval")?;
    if width == 0 || height == 0 {
        return Err(TexlabError::format(format!(
            "PGM has zero dimension {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(TexlabError::format(format!(
            "unsupported PGM maxval {maxval}, only 255 is accepted"
        )));
    }
    let payload = &bytes[offset..];
    if payload.len() < width * height {
        return Err(TexlabError::format(format!(
            "PGM payload truncated: {} of {} bytes",
            payload.len(),
            width * height
        )));
    }
    let data = payload[..width * height]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Raster::new(width, height, data)
}

/// Clamp to `[0, 1]`, scale by 255 and round half up.
#[inline]
pub fn quantize_unit(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn encode_pgm(raster: &Raster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", raster.width(), raster.height()).into_bytes();
    out.extend(raster.data().iter().map(|&v| quantize_unit(v)));
    out
}

/// Binary PPM from packed RGB triples.
pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<Vec<u8>> {
    if rgb.len() != width * height {
        return Err(TexlabError::arg("PPM pixel count does not match dimensions"));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    Ok(out)
}

pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ppm(width, height, rgb)?;
    fs::write(path, bytes).map_err(|e| TexlabError::io(path, e))
}

/// Maps each class id to its palette color. Ids without a palette entry
/// are drawn black.
pub fn label_overlay(labels: &[usize], palette: &[[u8; 3]]) -> Vec<[u8; 3]> {
    labels
        .iter()
        .map(|&l| palette.get(l).copied().unwrap_or([0, 0, 0]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sgrd_bytes(w: u32, h: u32, vals: &[f32]) -> Vec<u8> {
        let mut b = b"SGRD".to_vec();
        b.extend_from_slice(&w.to_le_bytes());
        b.extend_from_slice(&h.to_le_bytes());
        for v in vals {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn pgm_bytes_map_to_unit_interval() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 0, 255]);
        let r = decode_raster(&bytes, RasterFormat::Pgm).unwrap();
        assert_eq!(r.data(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let mut bytes = b"P5 # made by hand\n1 # w\n 1\n255\n".to_vec();
        bytes.push(51);
        let r = decode_raster(&bytes, RasterFormat::Pgm).unwrap();
        assert_eq!(r.data(), &[0.2]);
    }

    #[test]
    fn sgrd_payload_is_verbatim() {
        let bytes = sgrd_bytes(3, 1, &[1.5, -2.0, 0.0]);
        let r = decode_raster(&bytes, RasterFormat::Sgrd).unwrap();
        assert_eq!(r.shape(), (1, 3));
        assert_eq!(r.data(), &[1.5, -2.0, 0.0]);
    }

    #[test]
    fn malformed_inputs_are_format_errors() {
        let bad_magic = b"XXXX\x01\0\0\0\x01\0\0\0\0\0\0\0".to_vec();
        for (bytes, fmt) in [
            (bad_magic.clone(), RasterFormat::Sgrd),
            (bad_magic, RasterFormat::Pgm),
            (sgrd_bytes(2, 2, &[1.0, 2.0, 3.0]), RasterFormat::Sgrd),
            (sgrd_bytes(0, 2, &[]), RasterFormat::Sgrd),
            (b"P5\n2 2\n255\n\0\0\0".to_vec(), RasterFormat::Pgm),
            (b"P5\n0 2\n255\n".to_vec(), RasterFormat::Pgm),
            (b"P5\n2".to_vec(), RasterFormat::Pgm),
        ] {
            let err = decode_raster(&bytes, fmt).unwrap_err();
            assert!(matches!(err, TexlabError::Format(_)), "{err:?}");
        }
    }

    #[test]
    fn pgm_write_rounds_half_up() {
        let r = Raster::filled(3, 2, 0.5);
        let bytes = encode_raster(&r, RasterFormat::Pgm).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&b| b == 128));
        assert_eq!(quantize_unit(-3.0), 0);
        assert_eq!(quantize_unit(7.0), 255);
    }

    #[test]
    fn ppm_overlay_uses_palette() {
        let palette = [[0, 0, 255], [0, 255, 0], [255, 0, 0], [128, 128, 128]];
        let rgb = label_overlay(&[0, 1, 2, 3], &palette);
        let bytes = encode_ppm(2, 2, &rgb).unwrap();
        let header = b"P6\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(
            &bytes[header.len()..],
            &[0, 0, 255, 0, 255, 0, 255, 0, 0, 128, 128, 128]
        );
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let r = Raster::zeros(2, 2);
        let err = write_raster(&r, "/nonexistent-dir/x.sgrd", RasterFormat::Sgrd).unwrap_err();
        assert!(matches!(err, TexlabError::Io { .. }));
    }

    proptest! {
        #[test]
        fn sgrd_roundtrip_is_bit_exact(
            (w, h, vals) in (1usize..8, 1usize..8).prop_flat_map(|(w, h)| {
                (Just(w), Just(h), proptest::collection::vec(-1e6f32..1e6f32, w * h))
            })
        ) {
            let r = Raster::new(w, h, vals.iter().map(|&v| v as f64).collect()).unwrap();
            let bytes = encode_raster(&r, RasterFormat::Sgrd).unwrap();
            let back = decode_raster(&bytes, RasterFormat::Sgrd).unwrap();
            let a: Vec<u64> = r.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(encode_raster(&back, RasterFormat::Sgrd).unwrap(), bytes);
        }
    }
}
