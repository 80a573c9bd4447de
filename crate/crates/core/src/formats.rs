//! Binary portable graymap (PGM, `P5`) and portable floatmap (PFM, `Pf`) I/O.
//!
//! The float format is canonical: 32-bit little-endian samples, byte-exact
//! across a save/load round trip. The 8-bit graymap is for visualization and
//! quantizes with round-to-nearest (255 maps to intensity 1.0).

use crate::image::{Image, ImageError};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    /// 8-bit binary graymap, magic `P5`, maxval 255.
    Pgm8,
    /// 32-bit float grayscale portable floatmap, magic `Pf`.
    PfmF32,
}

impl ImageFormat {
    /// Picks a format from a file extension (`.pgm` / `.pfm`).
    pub fn from_path(path: &Path) -> Result<Self, FormatError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Ok(Self::Pgm8),
            Some("pfm") => Ok(Self::PfmF32),
            other => Err(FormatError::UnsupportedFormat(format!(
                "unrecognized image extension {:?} (expected .pgm or .pfm)",
                other.unwrap_or("")
            ))),
        }
    }
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension mismatch: header says {rows}x{cols}, which is not a valid image")]
    BadDimensions { rows: usize, cols: usize },
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decodes a PGM or PFM byte buffer, dispatching on the magic number.
pub fn decode_image(bytes: &[u8]) -> Result<Image, FormatError> {
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(bytes),
        Some(b"Pf") => decode_pfm(bytes),
        _ => Err(FormatError::UnsupportedFormat(
            "unknown magic number (expected P5 or Pf)".into(),
        )),
    }
}

pub fn encode_image(img: &Image, format: ImageFormat) -> Vec<u8> {
    match format {
        ImageFormat::Pgm8 => encode_pgm(img),
        ImageFormat::PfmF32 => encode_pfm(img),
    }
}

pub fn load_image(path: &Path) -> Result<Image, FormatError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_image(&bytes)
}

pub fn save_image(img: &Image, path: &Path, format: ImageFormat) -> Result<(), FormatError> {
    let bytes = encode_image(img, format);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads ASCII header tokens, skipping whitespace and `#` comments.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8], FormatError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(FormatError::MalformedHeader(
            "unexpected end of header".into(),
        ));
    }
    Ok(&bytes[start..*pos])
}

fn parse_usize(tok: &[u8], what: &str) -> Result<usize, FormatError> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FormatError::MalformedHeader(format!("invalid {what}")))
}

fn decode_pgm(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut pos = 2usize;
    let cols = parse_usize(next_token(bytes, &mut pos)?, "width")?;
    let rows = parse_usize(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_usize(next_token(bytes, &mut pos)?, "maxval")?;
    if maxval != 255 {
        return Err(FormatError::MalformedHeader(format!(
            "maxval {maxval} unsupported (expected 255)"
        )));
    }
    if rows < 2 || cols < 2 {
        return Err(FormatError::BadDimensions { rows, cols });
    }
    // Single whitespace byte separates the header from the payload.
    pos += 1;
    let expected = rows * cols;
    let payload = bytes
        .get(pos..pos + expected)
        .ok_or(FormatError::TruncatedPayload {
            expected,
            got: bytes.len().saturating_sub(pos),
        })?;
    let data = payload.iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Image::new(rows, cols, data)?)
}

fn encode_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(
        img.data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

fn decode_pfm(bytes: &[u8]) -> Result<Image, FormatError> {
    let mut pos = 2usize;
    let cols = parse_usize(next_token(bytes, &mut pos)?, "width")?;
    let rows = parse_usize(next_token(bytes, &mut pos)?, "height")?;
    let scale: f64 = std::str::from_utf8(next_token(bytes, &mut pos)?)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FormatError::MalformedHeader("invalid scale".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(FormatError::MalformedHeader(format!(
            "invalid scale {scale}"
        )));
    }
    if rows < 2 || cols < 2 {
        return Err(FormatError::BadDimensions { rows, cols });
    }
    pos += 1;
    let expected = rows * cols * 4;
    let payload = bytes
        .get(pos..pos + expected)
        .ok_or(FormatError::TruncatedPayload {
            expected,
            got: bytes.len().saturating_sub(pos),
        })?;
    let little_endian = scale < 0.0;
    let mut data = vec![0.0f64; rows * cols];
    // PFM stores rows bottom-to-top.
    for x in 0..rows {
        let src_row = rows - 1 - x;
        for y in 0..cols {
            let off = (src_row * cols + y) * 4;
            let raw: [u8; 4] = payload[off..off + 4].try_into().unwrap();
            let v = if little_endian {
                f32::from_le_bytes(raw)
            } else {
                f32::from_be_bytes(raw)
            };
            data[x * cols + y] = v as f64;
        }
    }
    Ok(Image::new(rows, cols, data)?)
}

fn encode_pfm(img: &Image) -> Vec<u8> {
    let mut out = format!("Pf\n{} {}\n-1.0\n", img.cols(), img.rows()).into_bytes();
    for x in (0..img.rows()).rev() {
        for y in 0..img.cols() {
            out.extend((img.at(x, y) as f32).to_le_bytes());
        }
    }
    out
}
