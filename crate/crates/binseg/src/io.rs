//! File formats: binary PGM (P5), 8-bit PNG input, and a plain-text field
//! format for real-valued grids.
//!
//! - Images load from 8-bit grayscale PGM or from 8-bit grayscale/RGB PNG;
//!   RGB collapses to `(R+G+B)/3`. Raw byte values are scaled to `[0, 1]`
//!   by division by 255.
//! - Masks are PGM files holding only 0 (outside, -1) and 255 (inside, +1).
//! - The field format is line-oriented text: a `width height` header line,
//!   then one line per row of space-separated decimal values. Values are
//!   written in shortest round-trip form, so nothing is lost to formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, LevelSetField};
use crate::scalar::{cast, Scalar};

const PNG_MAGIC: &[u8] = &[0x89, b'P', b'N', b'G'];

fn unreadable(path: &Path, reason: impl Into<String>) -> Error {
    Error::UnreadableFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn unwritable(path: &Path, err: std::io::Error) -> Error {
    Error::UnwritablePath {
        path: path.to_path_buf(),
        reason: err.to_string(),
    }
}

/// Parsed P5 header plus the offset where pixel data starts.
struct PgmHeader {
    width: usize,
    height: usize,
    data_offset: usize,
}

/// Reads the next whitespace-delimited token, skipping `#` comments.
fn next_token(bytes: &[u8], mut pos: usize) -> Option<(&[u8], usize)> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    if pos >= bytes.len() {
        return None;
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    Some((&bytes[start..pos], pos))
}

fn parse_pgm_header(bytes: &[u8], path: &Path) -> Result<PgmHeader> {
    let (magic, mut pos) =
        next_token(bytes, 0).ok_or_else(|| unreadable(path, "empty file"))?;
    if magic != b"P5" {
        return Err(unreadable(path, "not a P5 PGM file"));
    }
    let mut fields = [0u32; 3];
    for field in &mut fields {
        let (tok, next) = next_token(bytes, pos)
            .ok_or_else(|| unreadable(path, "truncated PGM header"))?;
        let text = std::str::from_utf8(tok)
            .map_err(|_| unreadable(path, "malformed PGM header"))?;
        *field = text
            .parse()
            .map_err(|_| unreadable(path, format!("malformed PGM header token '{text}'")))?;
        pos = next;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(unreadable(path, "truncated PGM header"));
    }
    pos += 1;
    let (width, height, maxval) = (fields[0] as usize, fields[1] as usize, fields[2]);
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimensions {
            path: path.to_path_buf(),
        });
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            detail: format!("PGM maxval {maxval}, expected 1..=255"),
        });
    }
    Ok(PgmHeader {
        width,
        height,
        data_offset: pos,
    })
}

fn read_pgm_bytes(path: &Path) -> Result<(PgmHeader, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| unreadable(path, e.to_string()))?;
    let header = parse_pgm_header(&bytes, path)?;
    let n = header.width * header.height;
    let data = bytes
        .get(header.data_offset..header.data_offset + n)
        .ok_or_else(|| unreadable(path, "truncated pixel data"))?;
    Ok((header, data.to_vec()))
}

fn load_png<T: Scalar>(bytes: &[u8], path: &Path) -> Result<ImageGrid<T>> {
    let decoded = image::load_from_memory(bytes)
        .map_err(|e| unreadable(path, format!("PNG decode failed: {e}")))?;
    let unsupported = |detail: &str| Error::UnsupportedBitDepth {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    let (width, height, values) = match decoded {
        image::DynamicImage::ImageLuma8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let values = img
                .into_raw()
                .into_iter()
                .map(|v| cast::<T>(f64::from(v) / 255.0))
                .collect::<Vec<_>>();
            (w, h, values)
        }
        image::DynamicImage::ImageRgb8(img) => {
            let (w, h) = (img.width() as usize, img.height() as usize);
            let raw = img.into_raw();
            let values = raw
                .chunks_exact(3)
                .map(|px| {
                    let sum = f64::from(px[0]) + f64::from(px[1]) + f64::from(px[2]);
                    cast::<T>(sum / 3.0 / 255.0)
                })
                .collect::<Vec<_>>();
            (w, h, values)
        }
        image::DynamicImage::ImageLuma16(_)
        | image::DynamicImage::ImageRgb16(_)
        | image::DynamicImage::ImageLumaA16(_)
        | image::DynamicImage::ImageRgba16(_) => {
            return Err(unsupported("16-bit PNG, expected 8-bit"))
        }
        other => {
            return Err(unsupported(&format!(
                "pixel format {other:?} not supported, expected 8-bit grayscale or RGB",
            )))
        }
    };
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimensions {
            path: path.to_path_buf(),
        });
    }
    ImageGrid::from_values(width, height, values)
}

/// Loads an 8-bit grayscale image and scales it to `[0, 1]`.
///
/// PGM (P5) and PNG are recognized by their magic bytes; RGB PNG collapses
/// to the channel mean before scaling.
pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<ImageGrid<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| unreadable(path, e.to_string()))?;
    if bytes.starts_with(PNG_MAGIC) {
        return load_png(&bytes, path);
    }
    let header = parse_pgm_header(&bytes, path)?;
    let n = header.width * header.height;
    let data = bytes
        .get(header.data_offset..header.data_offset + n)
        .ok_or_else(|| unreadable(path, "truncated pixel data"))?;
    let values = data
        .iter()
        .map(|&v| cast::<T>(f64::from(v) / 255.0))
        .collect();
    ImageGrid::from_values(header.width, header.height, values)
}

/// Quantizes a `[0, 1]` grid to 8 bits and writes it as binary PGM.
pub fn save_image<T: Scalar>(grid: &ImageGrid<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = grid
        .values()
        .iter()
        .map(|v| {
            let scaled = (v.to_f64().unwrap() * 255.0).round();
            scaled.clamp(0.0, 255.0) as u8
        })
        .collect();
    write_pgm(path, grid.width(), grid.height(), &bytes)
}

/// Writes a binary mask as PGM: +1 maps to 255, -1 to 0.
///
/// Fails with [`Error::NonBinaryMask`] when any value differs from -1/+1,
/// which signals that the projection step was skipped.
pub fn save_mask<T: Scalar>(mask: &LevelSetField<T>, path: impl AsRef<Path>) -> Result<()> {
    if let Some(value) = mask.first_non_binary() {
        return Err(Error::NonBinaryMask {
            value: value.to_f64().unwrap_or(f64::NAN),
        });
    }
    let bytes: Vec<u8> = mask
        .values()
        .iter()
        .map(|&v| if v == T::one() { 255 } else { 0 })
        .collect();
    write_pgm(path.as_ref(), mask.width(), mask.height(), &bytes)
}

/// Loads a PGM mask written by [`save_mask`]: 0 maps to -1, 255 to +1.
pub fn load_mask<T: Scalar>(path: impl AsRef<Path>) -> Result<LevelSetField<T>> {
    let path = path.as_ref();
    let (header, data) = read_pgm_bytes(path)?;
    let mut values = Vec::with_capacity(data.len());
    for byte in data {
        match byte {
            0 => values.push(-T::one()),
            255 => values.push(T::one()),
            other => {
                return Err(Error::NonBinaryMask {
                    value: f64::from(other),
                })
            }
        }
    }
    LevelSetField::from_values(header.width, header.height, values)
}

/// Writes a real-valued grid in the plain-text field format.
///
/// First line is `width height`; each following line holds one row of
/// space-separated values in shortest round-trip decimal form. Grid
/// constructors already reject non-finite values, so the file never
/// contains NaN or infinities.
pub fn save_field<T: Scalar>(field: &ImageGrid<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", field.width(), field.height()));
    for y in 0..field.height() {
        for x in 0..field.width() {
            if x > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{}", field.get(x, y)));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| unwritable(path, e))
}

/// Reads a grid written by [`save_field`].
pub fn load_field<T: Scalar>(path: impl AsRef<Path>) -> Result<ImageGrid<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| unreadable(path, e.to_string()))?;
    let mut tokens = text.split_ascii_whitespace();
    let mut dim = |name| {
        tokens
            .next()
            .and_then(|t| t.parse::<usize>().ok())
            .ok_or_else(|| unreadable(path, format!("missing {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let mut values = Vec::with_capacity(width * height);
    for tok in tokens {
        let v: f64 = tok
            .parse()
            .map_err(|_| unreadable(path, format!("malformed value '{tok}'")))?;
        values.push(cast::<T>(v));
    }
    ImageGrid::from_values(width, height, values)
}

fn write_pgm(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| unwritable(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    writer
        .write_all(format!("P5\n{width} {height}\n255\n").as_bytes())
        .and_then(|_| writer.write_all(bytes))
        .and_then(|_| writer.flush())
        .map_err(|e| unwritable(path, e))
}
