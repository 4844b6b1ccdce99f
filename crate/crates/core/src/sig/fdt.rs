//! Flattened Device Tree blob header (40 bytes, all fields big-endian).

use serde_json::json;

use super::{group_thousands, read_be32, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MIN_HEADER_LEN: usize = 40;

const MAGIC: u32 = 0xD00D_FEED;

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::Fdt;
    if offset + MIN_HEADER_LEN > payload.len() {
        return Err(Error::TruncatedHeader {
            format,
            offset: offset as u64,
        });
    }
    let malformed = |reason: &str| Error::MalformedHeader {
        format,
        offset: offset as u64,
        reason: reason.to_string(),
    };

    if read_be32(payload, offset) != Some(MAGIC) {
        return Err(malformed("bad magic"));
    }
    let total_size = read_be32(payload, offset + 4).unwrap();
    let version = read_be32(payload, offset + 20).unwrap();
    let last_comp = read_be32(payload, offset + 24).unwrap();

    if (total_size as usize) < MIN_HEADER_LEN {
        return Err(malformed("totalsize smaller than header"));
    }
    if offset + total_size as usize > payload.len() {
        return Err(Error::TruncatedHeader {
            format,
            offset: offset as u64,
        });
    }
    if !(1..=32).contains(&version) {
        return Err(malformed("implausible version"));
    }
    if last_comp > version {
        return Err(malformed("last compatible version exceeds version"));
    }

    let mut fields = super::FieldMap::new();
    fields.insert("total_size".into(), json!(total_size));
    fields.insert("version".into(), json!(version));
    let description = format!(
        "Flattened Device Tree ({} bytes, v{})",
        group_thousands(total_size as u64),
        version
    );
    Ok(ParsedHeader {
        fields,
        description,
    })
}

/// Emit a valid header over `buf` (used by the fixture generator).
pub(crate) fn write_header(buf: &mut [u8], total_size: u32, version: u32) {
    buf[0..4].copy_from_slice(&MAGIC.to_be_bytes());
    buf[4..8].copy_from_slice(&total_size.to_be_bytes());
    // struct block right after the memory-reservation block
    buf[8..12].copy_from_slice(&56u32.to_be_bytes());
    buf[12..16].copy_from_slice(&(total_size.saturating_sub(64)).to_be_bytes());
    buf[16..20].copy_from_slice(&40u32.to_be_bytes());
    buf[20..24].copy_from_slice(&version.to_be_bytes());
    buf[24..28].copy_from_slice(&version.saturating_sub(1).to_be_bytes());
    buf[28..32].copy_from_slice(&0u32.to_be_bytes());
    buf[32..36].copy_from_slice(&64u32.to_be_bytes());
    buf[36..40].copy_from_slice(&(total_size.saturating_sub(96)).to_be_bytes());
}
