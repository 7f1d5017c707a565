//! PGM instance masks (`P5` binary or `P2` ASCII, maxval <= 255).
//! Any pixel above zero is a member.

use super::header::HeaderReader;
use super::IngestError;
use crate::model::InstanceMask;

pub fn parse_pgm_mask(bytes: &[u8]) -> Result<InstanceMask, IngestError> {
    let mut hdr = HeaderReader::new(bytes);
    let binary = match hdr.token()? {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(IngestError::MalformedHeader(format!(
                "bad PGM magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = hdr.usize_token("width")?;
    let height = hdr.usize_token("height")?;
    let maxval = hdr.usize_token("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(IngestError::MalformedHeader(format!(
            "maxval {maxval} outside 1..=255"
        )));
    }
    if width == 0 || height == 0 {
        return Err(IngestError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    let n = width * height;

    let bits: Vec<bool> = if binary {
        let payload = hdr.payload()?;
        if payload.len() != n {
            return Err(IngestError::DimensionMismatch {
                expected: n,
                got: payload.len(),
            });
        }
        payload.iter().map(|&b| b > 0).collect()
    } else {
        let body = std::str::from_utf8(hdr.rest())
            .map_err(|_| IngestError::MalformedHeader("non-ASCII P2 body".into()))?;
        let mut bits = Vec::with_capacity(n);
        for tok in body.split_ascii_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| IngestError::MalformedHeader(format!("bad P2 sample {tok:?}")))?;
            if v > maxval {
                return Err(IngestError::MalformedHeader(format!(
                    "sample {v} exceeds maxval {maxval}"
                )));
            }
            bits.push(v > 0);
        }
        if bits.len() != n {
            return Err(IngestError::DimensionMismatch {
                expected: n,
                got: bits.len(),
            });
        }
        bits
    };
    Ok(InstanceMask::new(width, height, bits)?)
}

/// Writes a binary `P5` mask: members 255, background 0.
pub fn write_pgm_mask(mask: &InstanceMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}
