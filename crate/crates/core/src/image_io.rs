//! Portable float map (PFM) reading and writing, 8-bit PPM writing.
//!
//! PFM layout: ASCII header `PF` (3 channels) or `Pf` (1 channel), then
//! `width height`, then a scale whose sign gives the byte order (negative
//! means little-endian), each followed by a single whitespace byte; then
//! 32-bit floats with scanlines stored bottom to top. In memory every image
//! here is row-major top to bottom.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    /// 1 or 3.
    pub channels: usize,
    /// Row-major, top row first, channels interleaved.
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<PfmImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes, path)
}

pub fn parse_pfm(bytes: &[u8], path: &Path) -> Result<PfmImage> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= bytes.len() {
            return Err(Error::format(path, format!("truncated PFM header: missing {what}")));
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        // Exactly one whitespace byte terminates each header field.
        pos += 1;
        Ok(tok)
    };

    let magic = token("magic")?;
    let channels = match magic.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => {
            return Err(Error::format(
                path,
                format!("bad PFM header magic {other:?} (expected \"PF\" or \"Pf\")"),
            ))
        }
    };
    let width: usize = token("width")?
        .parse()
        .map_err(|_| Error::format(path, "malformed PFM width"))?;
    let height: usize = token("height")?
        .parse()
        .map_err(|_| Error::format(path, "malformed PFM height"))?;
    let scale: f32 = token("scale")?
        .parse()
        .map_err(|_| Error::format(path, "malformed PFM scale"))?;
    if width == 0 || height == 0 {
        return Err(Error::format(path, format!("empty PFM image {width}x{height}")));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(path, format!("invalid PFM scale {scale}")));
    }
    let little_endian = scale < 0.0;

    let count = width * height * channels;
    let body = &bytes[pos.min(bytes.len())..];
    if body.len() < count * 4 {
        return Err(Error::format(
            path,
            format!("PFM body holds {} bytes, expected {}", body.len(), count * 4),
        ));
    }
    let mut data = vec![0f32; count];
    let row_len = width * channels;
    for (file_row, chunk) in body[..count * 4].chunks_exact(row_len * 4).enumerate() {
        let y = height - 1 - file_row;
        for (i, b) in chunk.chunks_exact(4).enumerate() {
            let b = [b[0], b[1], b[2], b[3]];
            data[y * row_len + i] = if little_endian {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            };
        }
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        data,
    })
}

/// Encodes a PFM, little-endian, rows written bottom to top.
pub fn encode_pfm(width: usize, height: usize, channels: usize, data: &[f32]) -> Vec<u8> {
    assert!(channels == 1 || channels == 3);
    assert_eq!(data.len(), width * height * channels);
    let magic = if channels == 3 { "PF" } else { "Pf" };
    let mut out = format!("{magic}\n{width} {height}\n-1.0\n").into_bytes();
    out.reserve(data.len() * 4);
    let row_len = width * channels;
    for y in (0..height).rev() {
        for v in &data[y * row_len..(y + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_pfm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    channels: usize,
    data: &[f32],
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(width, height, channels, data)).map_err(|e| Error::io(path, e))
}

/// Binary 8-bit RGB PPM (`P6`), rows top to bottom.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    assert_eq!(rgb.len(), width * height * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(width, height, rgb)).map_err(|e| Error::io(path, e))
}
