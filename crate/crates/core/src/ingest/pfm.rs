//! Grayscale PFM (`Pf`) depth maps.
//!
//! Layout: `Pf\n<width> <height>\n<scale>\n` followed by `width * height`
//! 32-bit floats, rows stored bottom-to-top. Only little-endian payloads
//! (negative scale) are accepted.

use super::header::HeaderReader;
use super::IngestError;
use crate::model::{DepthMap, DepthUnit};

pub fn parse_pfm(bytes: &[u8]) -> Result<DepthMap, IngestError> {
    let mut hdr = HeaderReader::new(bytes);
    let magic = hdr.token()?;
    match magic {
        b"Pf" => {}
        b"PF" => {
            return Err(IngestError::MalformedHeader(
                "colour PFM (PF) is not supported, expected grayscale Pf".into(),
            ))
        }
        other => {
            return Err(IngestError::MalformedHeader(format!(
                "bad PFM magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    }
    let width = hdr.usize_token("width")?;
    let height = hdr.usize_token("height")?;
    let scale_tok = hdr.token()?;
    let scale: f64 = std::str::from_utf8(scale_tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| {
            IngestError::MalformedHeader(format!(
                "bad scale {:?}",
                String::from_utf8_lossy(scale_tok)
            ))
        })?;
    if scale > 0.0 {
        return Err(IngestError::UnsupportedEndianness);
    }
    if width == 0 || height == 0 {
        return Err(IngestError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    let payload = hdr.payload()?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| IngestError::MalformedHeader("dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(IngestError::DimensionMismatch {
            expected,
            got: payload.len(),
        });
    }

    let mut values = vec![0f32; width * height];
    for (file_row, chunk) in payload.chunks_exact(width * 4).enumerate() {
        let row = height - 1 - file_row;
        for (col, px) in chunk.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes([px[0], px[1], px[2], px[3]]);
            let index = row * width + col;
            if !v.is_finite() {
                return Err(IngestError::NonFinitePixel { index });
            }
            values[index] = v;
        }
    }
    Ok(DepthMap::new(width, height, values, DepthUnit::Raw)?)
}

pub fn write_pfm(map: &DepthMap) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for row in map.values().chunks_exact(w).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
