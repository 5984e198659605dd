//! Binary `.smap` score-map files.
//!
//! Layout (little-endian):
//!
//! | offset | size | field                    |
//! |--------|------|--------------------------|
//! | 0      | 4    | magic `SMAP`             |
//! | 4      | 1    | version `0x01`           |
//! | 5      | 4    | width (u32)              |
//! | 9      | 4    | height (u32)             |
//! | 13     | 4·n  | row-major `f32` values   |

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::ScoreMap;

pub const SMAP_MAGIC: &[u8; 4] = b"SMAP";
pub const SMAP_VERSION: u8 = 0x01;
pub const SMAP_HEADER_LEN: usize = 13;

pub fn encode_scoremap(m: &ScoreMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(SMAP_HEADER_LEN + 4 * m.data().len());
    out.extend_from_slice(SMAP_MAGIC);
    out.push(SMAP_VERSION);
    out.extend_from_slice(&(m.width() as u32).to_le_bytes());
    out.extend_from_slice(&(m.height() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

/// Decodes `.smap` bytes. Values outside `[0, 1]` are data errors.
pub fn decode_scoremap(bytes: &[u8]) -> Result<ScoreMap> {
    let raw = decode_scoremap_raw(bytes)?;
    ScoreMap::new(raw.0, raw.1, raw.2)
}

/// Decodes width, height and values, checking only the header, the length
/// and that every value is finite.
pub fn decode_scoremap_raw(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    if bytes.len() < SMAP_HEADER_LEN {
        return Err(Error::Format(format!(
            "score map truncated: {} bytes, header needs {SMAP_HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != SMAP_MAGIC {
        return Err(Error::Format(format!(
            "bad score map magic {:?}",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    if bytes[4] != SMAP_VERSION {
        return Err(Error::Format(format!(
            "unsupported score map version {}",
            bytes[4]
        )));
    }
    let w = read_u32(bytes, 5) as usize;
    let h = read_u32(bytes, 9) as usize;
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("score map dimensions overflow".into()))?;
    let payload = &bytes[SMAP_HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "score map {w}x{h} needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite score at index {i}")));
    }
    Ok((w, h, data))
}

pub fn save_scoremap(m: &ScoreMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_scoremap(m)).map_err(|e| Error::io(path, e))
}

pub fn load_scoremap(path: impl AsRef<Path>) -> Result<ScoreMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_scoremap(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_layout() {
        let m = ScoreMap::new(2, 2, vec![0.0, 0.5, 0.25, 1.0]).unwrap();
        let bytes = encode_scoremap(&m);
        assert_eq!(bytes.len(), SMAP_HEADER_LEN + 16);
        assert_eq!(SMAP_HEADER_LEN, 13);
        assert_eq!(&bytes[..5], b"SMAP\x01");
        assert_eq!(&bytes[5..13], &[2, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&bytes[17..21], &0.5f32.to_le_bytes());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_scoremap(&ScoreMap::filled(1, 1, 0.0).unwrap());
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_scoremap(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn bad_version_and_truncation() {
        let good = encode_scoremap(&ScoreMap::filled(3, 2, 0.2).unwrap());
        let mut v2 = good.clone();
        v2[4] = 2;
        assert!(matches!(decode_scoremap(&v2), Err(Error::Format(_))));
        assert!(matches!(
            decode_scoremap(&good[..good.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_scoremap(&good[..7]), Err(Error::Format(_))));
    }

    #[test]
    fn nan_is_a_data_error() {
        let mut bytes = encode_scoremap(&ScoreMap::filled(1, 1, 0.0).unwrap());
        bytes[13..17].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_scoremap(&bytes), Err(Error::Data(_))));
    }
}
