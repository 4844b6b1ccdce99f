//! ARM zImage kernel: magic word 0x016F2818 at structure offset 0x24,
//! followed by the image start/end words. Hits are reported at the
//! structure start.

use serde_json::json;

use super::{read_le32, ParsedHeader};
use crate::error::{Error, Result};
use crate::sig::SignatureFormat;

pub(crate) const MAGIC_OFFSET: usize = 0x24;
pub(crate) const MIN_HEADER_LEN: usize = 0x30;

const MAGIC: u32 = 0x016F_2818;

pub(crate) fn parse(payload: &[u8], offset: usize) -> Result<ParsedHeader> {
    let format = SignatureFormat::ArmZimage;
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

    if read_le32(payload, offset + MAGIC_OFFSET) != Some(MAGIC) {
        return Err(malformed("bad magic"));
    }
    let start = read_le32(payload, offset + 0x28).unwrap();
    let end = read_le32(payload, offset + 0x2C).unwrap();
    if end <= start {
        return Err(malformed("image end does not follow image start"));
    }

    let mut fields = super::FieldMap::new();
    fields.insert("endianness".into(), json!("little"));
    Ok(ParsedHeader {
        fields,
        description: "ARM zImage (little-endian)".to_string(),
    })
}

pub(crate) fn write_header(buf: &mut [u8], start: u32, end: u32) {
    buf[MAGIC_OFFSET..MAGIC_OFFSET + 4].copy_from_slice(&MAGIC.to_le_bytes());
    buf[0x28..0x2C].copy_from_slice(&start.to_le_bytes());
    buf[0x2C..0x30].copy_from_slice(&end.to_le_bytes());
}
